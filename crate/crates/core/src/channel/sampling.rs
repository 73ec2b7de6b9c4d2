use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{CorrelationProfile, Link, PhaseConfig, SystemDims};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Generator for trial `trial` of a seeded experiment. Each trial gets its own
/// ChaCha stream, so results do not depend on how trials are scheduled.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One realization of the five channel matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    links: [CMatrix; 5],
}

impl ChannelDraw {
    pub fn new(dims: &SystemDims, links: [CMatrix; 5]) -> Result<Self> {
        for link in Link::ALL {
            let expected = link.shape(dims);
            let found = links[link.index()].shape();
            if expected != found {
                return Err(Error::Dimension {
                    name: link.name().into(),
                    expected,
                    found,
                });
            }
        }
        Ok(Self { links })
    }

    pub fn get(&self, link: Link) -> &CMatrix {
        &self.links[link.index()]
    }
}

/// Pre-computed correlation square roots for repeated sampling.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    dims: SystemDims,
    factors: Vec<(CMatrix, CMatrix, f64)>,
}

impl ChannelSampler {
    pub fn new(profile: &CorrelationProfile) -> Result<Self> {
        let dims = *profile.dims();
        let factors = Link::ALL
            .iter()
            .map(|&link| {
                let stats = profile.link(link);
                let r = linalg::psd_sqrt(&stats.receive, &format!("{link}.receive"))?;
                let t = linalg::psd_sqrt(&stats.transmit, &format!("{link}.transmit"))?;
                let std = (0.5 / link.variance_dimension(&dims) as f64).sqrt();
                Ok((r, t, std))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dims, factors })
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    /// Draws `H_j = R_j^{1/2} W_j T_j^{1/2}` with `W_j` i.i.d. `CN(0, 1/D_j)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelDraw {
        let links = Link::ALL.map(|link| {
            let (r, t, std) = &self.factors[link.index()];
            let (rows, cols) = link.shape(&self.dims);
            let w = CMatrix::from_fn(rows, cols, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * std, im * std)
            });
            r * w * t
        });
        ChannelDraw { links }
    }
}

/// Single seeded channel realization.
pub fn sample_channel(profile: &CorrelationProfile, seed: u64) -> Result<ChannelDraw> {
    let sampler = ChannelSampler::new(profile)?;
    Ok(sampler.draw(&mut trial_rng(seed, 0)))
}

fn scale_columns(m: &CMatrix, coefficients: &[Complex64]) -> CMatrix {
    let mut out = m.clone();
    for (j, &c) in coefficients.iter().enumerate() {
        out.column_mut(j).iter_mut().for_each(|z| *z *= c);
    }
    out
}

/// `H1 Θ1 H3 + H2 Θ2 H4 + H1 Θ1 Hs Θ2 H4`.
pub fn effective_channel(draw: &ChannelDraw, phases: &PhaseConfig) -> CMatrix {
    let h1_theta = scale_columns(draw.get(Link::Ris1User), &phases.ris1_coefficients());
    let theta2 = phases.ris2_coefficients();
    let h2_theta = scale_columns(draw.get(Link::Ris2User), &theta2);
    let hs_theta = scale_columns(draw.get(Link::InterRis), &theta2);
    let h4 = draw.get(Link::BsRis2);
    let into_ris1 = draw.get(Link::BsRis1) + hs_theta * h4;
    h1_theta * into_ris1 + h2_theta * h4
}
