//! Large-scale gains and spatial correlation matrices.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use super::geometry::{NodeGeometry, Point};
use super::{Link, SystemDims};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Path loss in dB at distance `distance` (meters) with antenna gains in dBi.
pub fn path_loss_db(distance: f64, tx_gain_dbi: f64, rx_gain_dbi: f64) -> Result<f64> {
    if !(distance >= 1.0) {
        return Err(Error::Domain { distance });
    }
    Ok(tx_gain_dbi + rx_gain_dbi - 35.1 - 36.7 * distance.log10())
}

/// Linear power gain of [`path_loss_db`].
pub fn path_loss_linear(distance: f64, tx_gain_dbi: f64, rx_gain_dbi: f64) -> Result<f64> {
    Ok(10f64.powf(path_loss_db(distance, tx_gain_dbi, rx_gain_dbi)? / 10.0))
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Mean angle and angular spread of a scattering cluster, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularProfile {
    pub mean_deg: f64,
    pub spread_deg: f64,
}

impl Default for AngularProfile {
    fn default() -> Self {
        Self {
            mean_deg: 0.0,
            spread_deg: 5.0,
        }
    }
}

const QUADRATURE_DEGREE: usize = 24;
const QUADRATURE_TOLERANCE: f64 = 1e-8;
const MAX_PANELS: usize = 1 << 14;

fn gaussian_lags(
    rule: &GaussLegendre,
    panels: usize,
    lags: usize,
    spacing: f64,
    angle: AngularProfile,
) -> Vec<Complex64> {
    let AngularProfile {
        mean_deg: mean,
        spread_deg: spread,
    } = angle;
    let norm = 1.0 / (2.0 * PI * spread * spread).sqrt();
    let width = 360.0 / panels as f64;
    let mut acc = vec![Complex64::new(0.0, 0.0); lags];
    for p in 0..panels {
        let a = -180.0 + p as f64 * width;
        let half = width / 2.0;
        for &(x, w) in rule.as_node_weight_pairs() {
            let phi = a + half * (x + 1.0);
            let density = norm * (-(phi - mean).powi(2) / (2.0 * spread * spread)).exp();
            if density == 0.0 {
                continue;
            }
            let step = 2.0 * PI * spacing * (PI * phi / 180.0).sin();
            let weight = w * half * density;
            for (k, slot) in acc.iter_mut().enumerate() {
                *slot += Complex64::from_polar(weight, step * k as f64);
            }
        }
    }
    acc
}

/// Correlation of an `n`-element uniform linear array with spacing
/// `spacing` (wavelengths) under a Gaussian angular cluster:
///
/// `[C]_{m,n} = ∫_{-180}^{180} exp(2πj·d·(m−n)·sin(πφ/180)) · N(φ; η, δ²) dφ`.
///
/// The integral is evaluated with composite Gauss-Legendre quadrature, doubling
/// the panel count until successive estimates agree to 1e-8 on every lag.
pub fn integral_correlation(n: usize, spacing: f64, angle: AngularProfile) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::Config("array size must be at least 1".into()));
    }
    if !(angle.spread_deg > 0.0) {
        return Err(Error::Config("angular spread must be positive".into()));
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(QUADRATURE_DEGREE).unwrap());
    let mut panels = 8;
    let mut previous = gaussian_lags(&rule, panels, n, spacing, angle);
    let lags = loop {
        panels *= 2;
        let next = gaussian_lags(&rule, panels, n, spacing, angle);
        let (worst_lag, change) = previous
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).norm())
            .enumerate()
            .fold((0, 0.0f64), |acc, (k, d)| if d > acc.1 { (k, d) } else { acc });
        if change < QUADRATURE_TOLERANCE {
            break next;
        }
        if panels >= MAX_PANELS {
            return Err(Error::Quadrature {
                lag: worst_lag,
                change,
            });
        }
        previous = next;
    };
    Ok(CMatrix::from_fn(n, n, |r, c| {
        if r >= c {
            lags[r - c]
        } else {
            lags[c - r].conj()
        }
    }))
}

/// RIS element correlation `sinc(2‖u_m − u_n‖/λ)`.
pub fn sinc_correlation(positions: &[Point], wavelength: f64) -> Result<CMatrix> {
    if !(wavelength > 0.0) {
        return Err(Error::Config("wavelength must be positive".into()));
    }
    let n = positions.len();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = (positions[i] - positions[j]).norm();
            if i != j && d == 0.0 {
                return Err(Error::Config(format!("RIS elements {i} and {j} coincide")));
            }
            out[(i, j)] = Complex64::new(sinc(2.0 * d / wavelength), 0.0);
        }
    }
    Ok(out)
}

/// Second-order statistics of one link: `H = R^{1/2} W T^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStats {
    pub receive: CMatrix,
    pub transmit: CMatrix,
    /// Linear large-scale gain.
    pub gain: f64,
}

impl LinkStats {
    pub fn is_active(&self) -> bool {
        self.transmit.iter().any(|z| z.norm() > 0.0) && self.receive.iter().any(|z| z.norm() > 0.0)
    }
}

/// Parameters of the correlation models used by [`build_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorrelationParams {
    pub bs: AngularProfile,
    pub user: AngularProfile,
    /// Replace every raw correlation matrix by the identity.
    pub identity: bool,
}

/// Correlation matrices and large-scale gains of all five links.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    dims: SystemDims,
    links: [LinkStats; 5],
}

impl CorrelationProfile {
    /// Checks shapes, Hermitian symmetry and positive semi-definiteness.
    pub fn new(dims: SystemDims, links: [LinkStats; 5]) -> Result<Self> {
        for link in Link::ALL {
            let stats = &links[link.index()];
            let r = link.receive_dim(&dims);
            let t = link.transmit_dim(&dims);
            for (name, m, n) in [("receive", &stats.receive, r), ("transmit", &stats.transmit, t)] {
                let label = format!("{link}.{name}");
                if m.shape() != (n, n) {
                    return Err(Error::Dimension {
                        name: label,
                        expected: (n, n),
                        found: m.shape(),
                    });
                }
                let scale = m.iter().fold(1.0f64, |a, z| a.max(z.norm()));
                if linalg::hermitian_defect(m) > 1e-12 * scale {
                    return Err(Error::Numerical(format!("`{label}` is not Hermitian")));
                }
                linalg::check_psd(m, &label)?;
            }
            if !(stats.gain >= 0.0) || !stats.gain.is_finite() {
                return Err(Error::Config(format!("{link} gain must be finite and non-negative")));
            }
        }
        Ok(Self { dims, links })
    }

    /// Uncorrelated profile: every matrix a scaled identity meeting the trace targets.
    pub fn uncorrelated(dims: SystemDims, gains: [f64; 5]) -> Result<Self> {
        let links = Link::ALL.map(|link| {
            let r = link.receive_dim(&dims);
            let t = link.transmit_dim(&dims);
            let gain = gains[link.index()];
            LinkStats {
                receive: linalg::identity(r).scale(link.receive_trace(&dims) / r as f64),
                transmit: linalg::identity(t).scale(link.transmit_trace(&dims, gain) / t as f64),
                gain,
            }
        });
        Self::new(dims, links)
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    pub fn link(&self, link: Link) -> &LinkStats {
        &self.links[link.index()]
    }

    pub fn links(&self) -> &[LinkStats; 5] {
        &self.links
    }

    /// Same profile with `link` switched off (both correlation matrices and the gain zeroed).
    pub fn with_link_removed(&self, link: Link) -> Self {
        let mut out = self.clone();
        let stats = &mut out.links[link.index()];
        stats.receive.fill(Complex64::new(0.0, 0.0));
        stats.transmit.fill(Complex64::new(0.0, 0.0));
        stats.gain = 0.0;
        out
    }

    pub fn with_links_removed(&self, links: &[Link]) -> Self {
        links.iter().fold(self.clone(), |p, &l| p.with_link_removed(l))
    }

    /// Same profile with the large-scale gain of `link` replaced; the transmit
    /// correlation is rescaled so the trace target still holds.
    pub fn with_gain(&self, link: Link, gain: f64) -> Self {
        let mut out = self.clone();
        let dims = self.dims;
        let stats = &mut out.links[link.index()];
        let target = link.transmit_trace(&dims, gain);
        if stats.gain > 0.0 {
            stats.transmit = linalg::with_trace(&stats.transmit, target);
        } else {
            let t = link.transmit_dim(&dims);
            stats.transmit = linalg::identity(t).scale(target / t as f64);
        }
        stats.gain = gain;
        out
    }

    /// Largest relative deviation from the trace normalization over all active links.
    pub fn trace_normalization_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for link in Link::ALL {
            let stats = self.link(link);
            if !stats.is_active() {
                continue;
            }
            let checks = [
                (linalg::trace(&stats.receive).re, link.receive_trace(&self.dims)),
                (
                    linalg::trace(&stats.transmit).re,
                    link.transmit_trace(&self.dims, stats.gain),
                ),
            ];
            for (got, want) in checks {
                worst = worst.max((got - want).abs() / want.abs().max(f64::MIN_POSITIVE));
            }
        }
        worst
    }
}

/// Builds the correlation profile of a deployment: integral model at the BS and
/// user arrays, sinc model at the RISs, path-loss gains folded into the transmit
/// correlation traces.
pub fn build_profile(
    geometry: &NodeGeometry,
    dims: &SystemDims,
    params: &CorrelationParams,
) -> Result<CorrelationProfile> {
    geometry.validate(dims)?;
    let (bs, user, ris1, ris2) = if params.identity {
        (
            linalg::identity(dims.bs_antennas),
            linalg::identity(dims.user_antennas),
            linalg::identity(dims.ris1_elements),
            linalg::identity(dims.ris2_elements),
        )
    } else {
        (
            integral_correlation(dims.bs_antennas, geometry.antenna_spacing, params.bs)?,
            integral_correlation(dims.user_antennas, geometry.antenna_spacing, params.user)?,
            sinc_correlation(&geometry.ris1.element_positions(), geometry.wavelength)?,
            sinc_correlation(&geometry.ris2.element_positions(), geometry.wavelength)?,
        )
    };
    let g = geometry.antenna_gain_dbi;
    let mut links = Vec::with_capacity(5);
    for link in Link::ALL {
        let gain = path_loss_linear(geometry.link_distance(link), g, g)?;
        let (receive, transmit) = match link {
            Link::Ris1User => (&user, &ris1),
            Link::Ris2User => (&user, &ris2),
            Link::InterRis => (&ris1, &ris2),
            Link::BsRis1 => (&ris1, &bs),
            Link::BsRis2 => (&ris2, &bs),
        };
        links.push(LinkStats {
            receive: linalg::hermitian_part(&linalg::with_trace(receive, link.receive_trace(dims))),
            transmit: linalg::hermitian_part(&linalg::with_trace(
                transmit,
                link.transmit_trace(dims, gain),
            )),
            gain,
        });
    }
    let links: [LinkStats; 5] = links.try_into().expect("five links");
    CorrelationProfile::new(*dims, links)
}
