//! Deterministic equivalent of the ergodic rate.
//!
//! The asymptotic rate is a function of ten scalars `e_j, ẽ_j`, one pair per
//! link `j ∈ {1, 2, s, 3, 4}`:
//!
//! ```text
//! R̄ = log det(I + (e1 R1 + e2 R2)/σ²)                  user
//!   + log det(I + ẽ1 T1 (es Rs + e3 R3))               RIS 1
//!   + log det(I + (ẽs Ts + ẽ2 T2) e4 R4)               RIS 2
//!   + log det(I + ẽ3 T3 + ẽ4 T4)                        BS
//!   − L1 e1 ẽ1 − L2 e2 ẽ2 − L2 es ẽs − M e3 ẽ3 − M e4 ẽ4
//! ```
//!
//! with `T1, T2, Ts` conjugated by the phase matrices and `T3, T4` by `Q^{1/2}`.
//! The auxiliary variables are the stationary point of this expression; each
//! update equation below is `∂R̄/∂x = 0` solved for the partner variable of `x`.

use std::io::Write;

use crate::channel::{CorrelationProfile, Link, PhaseConfig, SystemDims};
use crate::covariance::TransmitCovariance;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Index of a link in the `[1, 2, s, 3, 4]` ordering.
const U1: usize = 0;
const U2: usize = 1;
const US: usize = 2;
const U3: usize = 3;
const U4: usize = 4;

/// Correlation matrices with `Q` and the phase shifts absorbed.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedProfile {
    dims: SystemDims,
    receive: [CMatrix; 5],
    transmit: [CMatrix; 5],
}

impl TransformedProfile {
    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    pub fn receive(&self, link: Link) -> &CMatrix {
        &self.receive[link.index()]
    }

    pub fn transmit(&self, link: Link) -> &CMatrix {
        &self.transmit[link.index()]
    }
}

/// `T1 → Θ1ᴴT1Θ1`, `T2 → Θ2ᴴT2Θ2`, `Ts → Θ2ᴴTsΘ2`, `T3 → Q^{1/2}T3Q^{1/2}`,
/// `T4 → Q^{1/2}T4Q^{1/2}`; receive correlations are untouched.
pub fn apply_transforms(
    profile: &CorrelationProfile,
    q: &TransmitCovariance,
    phases: &PhaseConfig,
) -> Result<TransformedProfile> {
    let dims = *profile.dims();
    phases.check_dims(dims.ris1_elements, dims.ris2_elements)?;
    if q.dim() != dims.bs_antennas {
        return Err(Error::Dimension {
            name: "Q".into(),
            expected: (dims.bs_antennas, dims.bs_antennas),
            found: (q.dim(), q.dim()),
        });
    }
    let q_sqrt = linalg::psd_sqrt(q.matrix(), "Q")?;
    let theta1 = phases.ris1_coefficients();
    let theta2 = phases.ris2_coefficients();
    let transmit = Link::ALL.map(|link| {
        let t = &profile.link(link).transmit;
        let out = match link {
            Link::Ris1User => linalg::conjugate_by_diagonal(t, &theta1),
            Link::Ris2User | Link::InterRis => linalg::conjugate_by_diagonal(t, &theta2),
            Link::BsRis1 | Link::BsRis2 => &q_sqrt * t * &q_sqrt,
        };
        linalg::hermitian_part(&out)
    });
    let receive = Link::ALL.map(|link| profile.link(link).receive.clone());
    Ok(TransformedProfile {
        dims,
        receive,
        transmit,
    })
}

/// The ten auxiliary variables, each array in `[1, 2, s, 3, 4]` link order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxiliaryState {
    pub e: [f64; 5],
    pub e_tilde: [f64; 5],
}

impl AuxiliaryState {
    pub fn uniform(value: f64) -> Self {
        Self {
            e: [value; 5],
            e_tilde: [value; 5],
        }
    }

    /// `(e1, e2, es, e3, e4, ẽ1, ẽ2, ẽs, ẽ3, ẽ4)`.
    pub fn to_array(&self) -> [f64; 10] {
        let mut out = [0.0; 10];
        out[..5].copy_from_slice(&self.e);
        out[5..].copy_from_slice(&self.e_tilde);
        out
    }

    pub fn from_array(v: [f64; 10]) -> Self {
        let mut s = Self::uniform(0.0);
        s.e.copy_from_slice(&v[..5]);
        s.e_tilde.copy_from_slice(&v[5..]);
        s
    }

    pub fn e(&self, link: Link) -> f64 {
        self.e[link.index()]
    }

    pub fn e_tilde(&self, link: Link) -> f64 {
        self.e_tilde[link.index()]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Which algebraic form of the RIS-1 update equations to iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EquationForm {
    /// `e1` and `ẽs` written directly as traces against `(I + ẽ1 T1 (es Rs + e3 R3))⁻¹`.
    #[default]
    Stationary,
    /// `e1` and `ẽs` expanded through `Ψ = I + ẽ1 T1 es Rs` and
    /// `Ξ = −ẽ1 T1 Rs Ψ⁻¹ ẽ1 T1 e3 R3`, term by term.
    Expanded,
}

/// Factor multiplying `R4` inside the `ẽ4` update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rs2Factor {
    /// `ẽs Ts + ẽ2 T2`: every path leaving RIS 2.
    #[default]
    AllOutgoing,
    /// `ẽ2 T2` only. Drops the inter-RIS branch; kept as a sensitivity probe
    /// for validation runs.
    DirectOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Stop when every relative residual is below this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// `x ← (1 − γ) x + γ f(x)`.
    pub damping: f64,
    /// Starting value of all ten variables.
    pub initial: f64,
    pub form: EquationForm,
    pub ris2_factor: Rs2Factor,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            max_iterations: 2000,
            damping: 0.5,
            initial: 1.0,
            form: EquationForm::Stationary,
            ris2_factor: Rs2Factor::AllOutgoing,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("solver tolerance must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config("damping must lie in (0, 1]".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if !self.initial.is_finite() {
            return Err(Error::Config("initial value must be finite".into()));
        }
        Ok(())
    }
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub state: AuxiliaryState,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub state: AuxiliaryState,
    pub iterations: usize,
    pub max_residual: f64,
}

/// Writes an iteration trace as CSV: `iteration,e1,...,et4,max_residual`.
pub fn write_iteration_trace<W: Write>(mut out: W, trace: &[IterationRecord]) -> std::io::Result<()> {
    writeln!(out, "iteration,e1,e2,es,e3,e4,et1,et2,ets,et3,et4,max_residual")?;
    for rec in trace {
        write!(out, "{}", rec.iteration)?;
        for v in rec.state.to_array() {
            write!(out, ",{v:e}")?;
        }
        writeln!(out, ",{:e}", rec.max_residual)?;
    }
    Ok(())
}

/// Per-node log-det terms and the coupling correction of the asymptotic rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTerms {
    pub user: f64,
    pub ris1: f64,
    pub ris2: f64,
    pub bs: f64,
    pub correction: f64,
}

impl RateTerms {
    pub fn total(&self) -> f64 {
        self.user + self.ris1 + self.ris2 + self.bs - self.correction
    }
}

/// The fixed-point map for one transformed profile and noise power, with the
/// loop-invariant matrix products precomputed.
pub struct FixedPointSystem<'a> {
    tp: &'a TransformedProfile,
    noise: f64,
    form: EquationForm,
    ris2_factor: Rs2Factor,
    /// `T1 Rs`, `T1 R3`, `Ts R4`, `T2 R4`.
    t1_rs: CMatrix,
    t1_r3: CMatrix,
    ts_r4: CMatrix,
    t2_r4: CMatrix,
}

impl<'a> FixedPointSystem<'a> {
    pub fn new(tp: &'a TransformedProfile, noise: f64, settings: &SolverSettings) -> Result<Self> {
        if !(noise > 0.0) || !noise.is_finite() {
            return Err(Error::Config("noise power must be positive and finite".into()));
        }
        let t1 = &tp.transmit[U1];
        let r4 = &tp.receive[U4];
        Ok(Self {
            tp,
            noise,
            form: settings.form,
            ris2_factor: settings.ris2_factor,
            t1_rs: t1 * &tp.receive[US],
            t1_r3: t1 * &tp.receive[U3],
            ts_r4: &tp.transmit[US] * r4,
            t2_r4: &tp.transmit[U2] * r4,
        })
    }

    fn sizes(&self) -> (f64, f64, f64) {
        let d = &self.tp.dims;
        (
            d.ris1_elements as f64,
            d.ris2_elements as f64,
            d.bs_antennas as f64,
        )
    }

    /// `ẽ1 T1 (es Rs + e3 R3)` and `(ẽs Ts + ẽ2 T2) e4 R4`.
    fn node_products(&self, x: &AuxiliaryState) -> (CMatrix, CMatrix) {
        let ris1 = (&self.t1_rs * linalg::c(x.e[US]) + &self.t1_r3 * linalg::c(x.e[U3]))
            * linalg::c(x.e_tilde[U1]);
        let ris2 = (&self.ts_r4 * linalg::c(x.e_tilde[US]) + &self.t2_r4 * linalg::c(x.e_tilde[U2]))
            * linalg::c(x.e[U4]);
        (ris1, ris2)
    }

    fn user_matrix(&self, x: &AuxiliaryState) -> CMatrix {
        let n = self.tp.dims.user_antennas;
        linalg::identity(n).scale(self.noise)
            + self.tp.receive[U1].scale(x.e[U1])
            + self.tp.receive[U2].scale(x.e[U2])
    }

    fn bs_matrix(&self, x: &AuxiliaryState) -> CMatrix {
        let m = self.tp.dims.bs_antennas;
        linalg::identity(m)
            + self.tp.transmit[U3].scale(x.e_tilde[U3])
            + self.tp.transmit[U4].scale(x.e_tilde[U4])
    }

    /// Evaluates the right-hand sides of all ten equations at `x`.
    pub fn map(&self, x: &AuxiliaryState) -> Result<AuxiliaryState> {
        let (l1, l2, m) = self.sizes();
        let tp = self.tp;
        let tr = |a: &CMatrix, b: &CMatrix| linalg::trace_of_product(a, b).re;
        let mut out = AuxiliaryState::uniform(0.0);

        // user node
        let user_inv = linalg::inverse(&self.user_matrix(x), "σ²I + e1R1 + e2R2")?;
        out.e_tilde[U1] = tr(&user_inv, &tp.receive[U1]) / l1;
        out.e_tilde[U2] = tr(&user_inv, &tp.receive[U2]) / l2;

        // RIS 1
        let (ris1, ris2) = self.node_products(x);
        match self.form {
            EquationForm::Stationary => {
                let k1 = linalg::inverse(&(linalg::identity(ris1.nrows()) + &ris1), "RIS 1 node")?;
                let et1 = x.e_tilde[U1];
                out.e[U1] = if et1 != 0.0 {
                    tr(&k1, &ris1) / (et1 * l1)
                } else {
                    let t1_in = &self.t1_rs * linalg::c(x.e[US]) + &self.t1_r3 * linalg::c(x.e[U3]);
                    tr(&k1, &t1_in) / l1
                };
                out.e_tilde[US] = et1 * tr(&k1, &self.t1_rs) / l2;
                out.e_tilde[U3] = et1 * tr(&k1, &self.t1_r3) / m;
            }
            EquationForm::Expanded => {
                let (e1, ets, et3) = self.expanded_ris1(x)?;
                out.e[U1] = e1 / l1;
                out.e_tilde[US] = ets / l2;
                out.e_tilde[U3] = et3 / m;
            }
        }

        // RIS 2
        let k2 = linalg::inverse(&(linalg::identity(ris2.nrows()) + &ris2), "RIS 2 node")?;
        let e4 = x.e[U4];
        out.e[U2] = e4 * tr(&k2, &self.t2_r4) / l2;
        out.e[US] = e4 * tr(&k2, &self.ts_r4) / l2;
        out.e_tilde[U4] = match self.ris2_factor {
            Rs2Factor::AllOutgoing => {
                x.e_tilde[US] * tr(&k2, &self.ts_r4) + x.e_tilde[U2] * tr(&k2, &self.t2_r4)
            }
            Rs2Factor::DirectOnly => x.e_tilde[U2] * tr(&k2, &self.t2_r4),
        } / m;

        // BS
        let bs_inv = linalg::inverse(&self.bs_matrix(x), "BS node")?;
        out.e[U3] = tr(&bs_inv, &tp.transmit[U3]) / m;
        out.e[U4] = tr(&bs_inv, &tp.transmit[U4]) / m;
        Ok(out)
    }

    /// Unnormalized `(L1 e1, L2 ẽs, M ẽ3)` in the expanded form.
    fn expanded_ris1(&self, x: &AuxiliaryState) -> Result<(f64, f64, f64)> {
        let tp = self.tp;
        let n = self.t1_rs.nrows();
        let id = linalg::identity(n);
        let et1 = linalg::c(x.e_tilde[U1]);
        let es = linalg::c(x.e[US]);
        let e3 = linalg::c(x.e[U3]);
        let t1 = &tp.transmit[U1];
        let rs = &tp.receive[US];
        // B = ẽ1 T1 es Rs, C = ẽ1 T1 e3 R3
        let b = &self.t1_rs * (et1 * es);
        let c = &self.t1_r3 * (et1 * e3);
        let psi_inv = linalg::inverse(&(&id + &b), "Ψ")?;
        let g = &id - &b * &psi_inv;
        let k = linalg::inverse(&(&id + &g * &c), "RIS 1 expanded node")?;
        let tr = |a: &CMatrix, b: &CMatrix| linalg::trace_of_product(a, b).re;

        let first = tr(&psi_inv, &(&self.t1_rs * es));
        let inner = &g * &self.t1_r3 * e3 - &self.t1_rs * es * &psi_inv * &c;
        let e1 = first + tr(&k, &inner);

        let xi = -(t1 * et1) * rs * &psi_inv * &c;
        let ets = tr(&psi_inv, &(&self.t1_rs * et1)) + tr(&k, &xi);

        let et3 = tr(&k, &(&g * &self.t1_r3 * et1));
        Ok((e1, ets, et3))
    }

    /// `x − f(x)`.
    pub fn residuals(&self, x: &AuxiliaryState) -> Result<[f64; 10]> {
        let fx = self.map(x)?.to_array();
        let xs = x.to_array();
        Ok(std::array::from_fn(|i| xs[i] - fx[i]))
    }

    /// `(x − f(x)) / max(|x|, |f(x)|)` componentwise; zero where both vanish.
    pub fn relative_residuals(&self, x: &AuxiliaryState) -> Result<[f64; 10]> {
        let fx = self.map(x)?.to_array();
        Ok(relative_difference(&x.to_array(), &fx))
    }

    /// Evaluates the rate expression at an arbitrary state.
    pub fn rate_terms(&self, x: &AuxiliaryState) -> Result<RateTerms> {
        let (l1, l2, m) = self.sizes();
        let (ris1, ris2) = self.node_products(x);
        let user = linalg::log_det_hpd(&self.user_matrix(x).scale(1.0 / self.noise), "user node")?;
        let ris1_term = linalg::log_det(&(linalg::identity(ris1.nrows()) + ris1), "RIS 1 node")?;
        let ris2_term = linalg::log_det(&(linalg::identity(ris2.nrows()) + ris2), "RIS 2 node")?;
        let bs = linalg::log_det(&self.bs_matrix(x), "BS node")?;
        let correction = l1 * x.e[U1] * x.e_tilde[U1]
            + l2 * x.e[U2] * x.e_tilde[U2]
            + l2 * x.e[US] * x.e_tilde[US]
            + m * x.e[U3] * x.e_tilde[U3]
            + m * x.e[U4] * x.e_tilde[U4];
        Ok(RateTerms {
            user,
            ris1: ris1_term,
            ris2: ris2_term,
            bs,
            correction,
        })
    }
}

fn relative_difference(x: &[f64; 10], fx: &[f64; 10]) -> [f64; 10] {
    std::array::from_fn(|i| {
        let scale = x[i].abs().max(fx[i].abs());
        if scale == 0.0 {
            0.0
        } else {
            (x[i] - fx[i]) / scale
        }
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Damped synchronous fixed-point iteration. Convergence is declared when every
/// relative residual `|x − f(x)| / max(|x|, |f(x)|)` is below the tolerance;
/// the returned state is the one at which that residual was measured.
pub fn solve_auxiliary(
    tp: &TransformedProfile,
    noise: f64,
    settings: &SolverSettings,
) -> Result<Solution> {
    solve_with_trace(tp, noise, settings, None)
}

/// Like [`solve_auxiliary`], recording every iteration into `trace`.
pub fn solve_with_trace(
    tp: &TransformedProfile,
    noise: f64,
    settings: &SolverSettings,
    trace: Option<&mut Vec<IterationRecord>>,
) -> Result<Solution> {
    solve_from(tp, noise, settings, AuxiliaryState::uniform(settings.initial), trace)
}

/// Like [`solve_with_trace`], starting from `start` instead of the uniform
/// initial value. A nearby converged state typically saves most iterations.
pub fn solve_from(
    tp: &TransformedProfile,
    noise: f64,
    settings: &SolverSettings,
    start: AuxiliaryState,
    mut trace: Option<&mut Vec<IterationRecord>>,
) -> Result<Solution> {
    settings.validate()?;
    if !start.is_finite() {
        return Err(Error::Config("starting state must be finite".into()));
    }
    let system = FixedPointSystem::new(tp, noise, settings)?;
    let gamma = settings.damping;
    let mut x = start;
    let mut last = [f64::INFINITY; 10];
    for iteration in 0..settings.max_iterations {
        let fx = system.map(&x)?;
        if !fx.is_finite() {
            return Err(Error::Divergence { iteration });
        }
        let xs = x.to_array();
        let fs = fx.to_array();
        last = relative_difference(&xs, &fs);
        let worst = max_abs(&last);
        if let Some(t) = trace.as_deref_mut() {
            t.push(IterationRecord {
                iteration,
                state: x,
                max_residual: worst,
            });
        }
        if worst < settings.tolerance {
            return Ok(Solution {
                state: x,
                iterations: iteration,
                max_residual: worst,
            });
        }
        // Structural zeros (traces against zero matrices) are reached exactly.
        let next: [f64; 10] = std::array::from_fn(|i| {
            if fs[i] == 0.0 {
                0.0
            } else {
                (1.0 - gamma) * xs[i] + gamma * fs[i]
            }
        });
        x = AuxiliaryState::from_array(next);
    }
    Err(Error::NoConvergence {
        iterations: settings.max_iterations,
        max_residual: max_abs(&last),
        residuals: last,
    })
}

/// Solved auxiliary variables together with the rate decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticRate {
    pub solution: Solution,
    pub terms: RateTerms,
}

impl AsymptoticRate {
    /// Rate in nats per channel use.
    pub fn nats(&self) -> f64 {
        self.terms.total()
    }

    pub fn bits(&self) -> f64 {
        crate::nats_to_bits(self.nats())
    }

    pub fn state(&self) -> &AuxiliaryState {
        &self.solution.state
    }
}

/// Asymptotic ergodic rate (nats) for transmit covariance `q` and phases `phases`.
pub fn asymptotic_rate(
    profile: &CorrelationProfile,
    q: &TransmitCovariance,
    phases: &PhaseConfig,
    noise: f64,
    settings: &SolverSettings,
) -> Result<AsymptoticRate> {
    let tp = apply_transforms(profile, q, phases)?;
    rate_of_transformed(&tp, noise, settings)
}

pub fn rate_of_transformed(
    tp: &TransformedProfile,
    noise: f64,
    settings: &SolverSettings,
) -> Result<AsymptoticRate> {
    rate_of_transformed_from(tp, noise, settings, AuxiliaryState::uniform(settings.initial))
}

pub fn rate_of_transformed_from(
    tp: &TransformedProfile,
    noise: f64,
    settings: &SolverSettings,
    start: AuxiliaryState,
) -> Result<AsymptoticRate> {
    let solution = solve_from(tp, noise, settings, start, None)?;
    let system = FixedPointSystem::new(tp, noise, settings)?;
    let terms = system.rate_terms(&solution.state)?;
    Ok(AsymptoticRate { solution, terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::CorrelationProfile;

    fn unit_profile(m: usize, n: usize, l: usize) -> CorrelationProfile {
        let dims = SystemDims::new(m, n, l, l).unwrap();
        CorrelationProfile::uncorrelated(dims, [1.0 / l as f64; 5]).unwrap()
    }

    fn transformed(p: &CorrelationProfile) -> TransformedProfile {
        let d = p.dims();
        let q = TransmitCovariance::isotropic(d.bs_antennas, d.bs_antennas as f64).unwrap();
        apply_transforms(p, &q, &PhaseConfig::zeros(d.ris1_elements, d.ris2_elements)).unwrap()
    }

    #[test]
    fn identity_transforms_are_identities() {
        let p = unit_profile(3, 2, 4);
        let tp = transformed(&p);
        for link in Link::ALL {
            assert!((tp.transmit(link) - &p.link(link).transmit).norm() < 1e-14);
            assert_eq!(tp.receive(link), &p.link(link).receive);
        }
    }

    #[test]
    fn converged_state_has_small_residuals() {
        let p = unit_profile(4, 2, 4);
        let tp = transformed(&p);
        let s = SolverSettings::default();
        let sol = solve_auxiliary(&tp, 1.0, &s).unwrap();
        let sys = FixedPointSystem::new(&tp, 1.0, &s).unwrap();
        let r = sys.relative_residuals(&sol.state).unwrap();
        assert!(max_abs(&r) < s.tolerance);
    }

    #[test]
    fn dead_profile_has_zero_fixed_point() {
        let p = unit_profile(4, 2, 4).with_links_removed(&Link::ALL);
        let tp = transformed(&p);
        let s = SolverSettings::default();
        let sol = solve_auxiliary(&tp, 1.0, &s).unwrap();
        assert_eq!(sol.state, AuxiliaryState::uniform(0.0));
        let sys = FixedPointSystem::new(&tp, 1.0, &s).unwrap();
        assert_eq!(sys.residuals(&AuxiliaryState::uniform(0.0)).unwrap(), [0.0; 10]);
        let rate = rate_of_transformed(&tp, 1.0, &s).unwrap();
        assert_eq!(rate.nats(), 0.0);
    }

    #[test]
    fn non_convergence_reports_residuals() {
        let p = unit_profile(4, 2, 4);
        let tp = transformed(&p);
        let s = SolverSettings {
            max_iterations: 2,
            ..Default::default()
        };
        match solve_auxiliary(&tp, 1.0, &s) {
            Err(Error::NoConvergence { residuals, .. }) => assert!(max_abs(&residuals) > 0.0),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_settings() {
        let p = unit_profile(2, 2, 2);
        let tp = transformed(&p);
        let s = SolverSettings {
            damping: 0.0,
            ..Default::default()
        };
        assert!(solve_auxiliary(&tp, 1.0, &s).is_err());
        assert!(solve_auxiliary(&tp, 0.0, &SolverSettings::default()).is_err());
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let p = unit_profile(2, 2, 2);
        let tp = transformed(&p);
        let mut trace = Vec::new();
        let sol = solve_with_trace(&tp, 1.0, &SolverSettings::default(), Some(&mut trace)).unwrap();
        assert_eq!(trace.len(), sol.iterations + 1);
        let mut buf = Vec::new();
        write_iteration_trace(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), trace.len() + 1);
        assert!(text.starts_with("iteration,e1"));
    }
}
