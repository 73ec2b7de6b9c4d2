//! Sample-average estimate of the ergodic rate.

use std::io::Write;

use rayon::prelude::*;

use crate::channel::{effective_channel, trial_rng, ChannelSampler, CorrelationProfile, PhaseConfig};
use crate::covariance::TransmitCovariance;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// `log det(I_N + H Q Hᴴ / σ²)` in nats.
pub fn instantaneous_rate(h: &CMatrix, q: &CMatrix, noise: f64) -> Result<f64> {
    let n = h.nrows();
    let gram = h * q * h.adjoint();
    let m = linalg::identity(n) + linalg::hermitian_part(&gram).scale(1.0 / noise);
    linalg::log_det_hpd(&m, "I + HQHᴴ/σ²")
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    /// Sample mean in nats.
    pub mean: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
    /// Per-trial rates, in trial order.
    pub samples: Vec<f64>,
}

impl McEstimate {
    fn from_samples(samples: Vec<f64>, seed: u64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n).sqrt(),
            trials: samples.len(),
            seed,
            samples,
        }
    }

    /// `trial,rate_nats` rows.
    pub fn write_samples<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "trial,rate_nats")?;
        for (i, r) in self.samples.iter().enumerate() {
            writeln!(out, "{i},{r:.17e}")?;
        }
        Ok(())
    }
}

/// Averages the instantaneous rate over `trials` independent channel draws.
/// Trial `t` always uses stream `t` of `seed`, and the sum is taken in trial
/// order, so the result does not depend on the rayon thread count.
pub fn ergodic_rate_mc(
    profile: &CorrelationProfile,
    q: &TransmitCovariance,
    phases: &PhaseConfig,
    noise: f64,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::Config("Monte-Carlo needs at least one trial".into()));
    }
    if !(noise > 0.0) || !noise.is_finite() {
        return Err(Error::Config("noise power must be positive and finite".into()));
    }
    let dims = profile.dims();
    phases.check_dims(dims.ris1_elements, dims.ris2_elements)?;
    if q.dim() != dims.bs_antennas {
        return Err(Error::Dimension {
            name: "Q".into(),
            expected: (dims.bs_antennas, dims.bs_antennas),
            found: (q.dim(), q.dim()),
        });
    }
    let sampler = ChannelSampler::new(profile)?;
    let samples = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let draw = sampler.draw(&mut trial_rng(seed, t));
            let h = effective_channel(&draw, phases);
            instantaneous_rate(&h, q.matrix(), noise)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(McEstimate::from_samples(samples, seed))
}
