//! Statistical-CSI design: water-filling for the transmit covariance, particle
//! swarm search for the RIS phases, and the alternating loop over both.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::channel::{trial_rng, CorrelationProfile, Link, PhaseConfig};
use crate::covariance::TransmitCovariance;
use crate::error::{Error, Result};
use crate::fixed_point::{
    apply_transforms, rate_of_transformed_from, AsymptoticRate, AuxiliaryState, SolverSettings,
};
use crate::linalg::{self, CMatrix};

/// Eigenvalues at or below this receive no power.
pub const MODE_THRESHOLD: f64 = 1e-14;

/// A rate-maximization instance: channel statistics, noise power and power budget.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub profile: &'a CorrelationProfile,
    pub noise: f64,
    pub power: f64,
    pub solver: SolverSettings,
}

impl<'a> Problem<'a> {
    pub fn new(profile: &'a CorrelationProfile, noise: f64, power: f64, solver: SolverSettings) -> Result<Self> {
        if !(noise > 0.0) || !noise.is_finite() {
            return Err(Error::Config("noise power must be positive and finite".into()));
        }
        if !(power >= 0.0) || !power.is_finite() {
            return Err(Error::Config("power budget must be finite and non-negative".into()));
        }
        solver.validate()?;
        Ok(Self {
            profile,
            noise,
            power,
            solver,
        })
    }

    pub fn bs_antennas(&self) -> usize {
        self.profile.dims().bs_antennas
    }

    /// `(P/M)·I`.
    pub fn isotropic(&self) -> TransmitCovariance {
        TransmitCovariance::isotropic(self.bs_antennas(), self.power).expect("validated budget")
    }

    pub fn evaluate(&self, q: &TransmitCovariance, phases: &PhaseConfig) -> Result<AsymptoticRate> {
        self.evaluate_from(q, phases, AuxiliaryState::uniform(self.solver.initial))
    }

    /// Evaluates with a warm start, falling back to the cold start if the warm
    /// start fails.
    pub fn evaluate_from(
        &self,
        q: &TransmitCovariance,
        phases: &PhaseConfig,
        start: AuxiliaryState,
    ) -> Result<AsymptoticRate> {
        let tp = apply_transforms(self.profile, q, phases)?;
        rate_of_transformed_from(&tp, self.noise, &self.solver, start).or_else(|_| {
            rate_of_transformed_from(
                &tp,
                self.noise,
                &self.solver,
                AuxiliaryState::uniform(self.solver.initial),
            )
        })
    }

    /// `F = ẽ3 T3 + ẽ4 T4`, the matrix whose water-filling maximizes the BS term.
    pub fn covariance_gradient(&self, state: &AuxiliaryState) -> CMatrix {
        let t3 = &self.profile.link(Link::BsRis1).transmit;
        let t4 = &self.profile.link(Link::BsRis2).transmit;
        linalg::hermitian_part(
            &(t3.scale(state.e_tilde(Link::BsRis1)) + t4.scale(state.e_tilde(Link::BsRis2))),
        )
    }
}

/// Water-filling solution over the eigenmodes of `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFilling {
    pub covariance: TransmitCovariance,
    /// Eigenvalues of `F`, ascending.
    pub gains: Vec<f64>,
    /// Power on each eigenmode, same order as `gains`.
    pub powers: Vec<f64>,
    /// Water level `μ`: every active mode has `p_k = μ − 1/λ_k`.
    pub level: f64,
}

/// Maximizes `log det(I + F Q)` subject to `Tr(Q) ≤ power`, `Q ⪰ 0`.
pub fn water_filling(f: &CMatrix, power: f64) -> Result<TransmitCovariance> {
    Ok(water_filling_detailed(f, power)?.covariance)
}

pub fn water_filling_detailed(f: &CMatrix, power: f64) -> Result<WaterFilling> {
    if !f.is_square() {
        return Err(Error::Config("water-filling needs a square matrix".into()));
    }
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::Config("water-filling needs a positive finite power".into()));
    }
    linalg::check_psd(f, "F")?;
    let (gains, vectors) = linalg::eigh(f);
    let (powers, level) = allocate_power(&gains, power)?;
    let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        powers.len(),
        powers.iter().map(|&p| linalg::c(p)),
    ));
    let mut q = linalg::hermitian_part(&(&vectors * diag * vectors.adjoint()));
    // Eigenvectors are orthonormal only to round-off; pin the trace to the budget.
    let trace = linalg::trace(&q).re;
    if trace > 0.0 {
        q = q.scale(powers.iter().sum::<f64>().min(power) / trace);
    }
    Ok(WaterFilling {
        covariance: TransmitCovariance::new(q, power)?,
        gains,
        powers,
        level,
    })
}

/// Exact water level for the mode gains `gains`: the largest active set `k`
/// whose level `μ = (P + Σ 1/λ_i)/k` sits above `1/λ_k` of its weakest mode.
pub fn allocate_power(gains: &[f64], power: f64) -> Result<(Vec<f64>, f64)> {
    let largest = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut usable: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > MODE_THRESHOLD).collect();
    if usable.is_empty() {
        return Err(Error::DegenerateWaterFilling { largest });
    }
    usable.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let mut inverse_sum: f64 = usable.iter().map(|&i| 1.0 / gains[i]).sum();
    let mut active = usable.len();
    let mut level = (power + inverse_sum) / active as f64;
    while active > 1 && level <= 1.0 / gains[usable[active - 1]] {
        inverse_sum -= 1.0 / gains[usable[active - 1]];
        active -= 1;
        level = (power + inverse_sum) / active as f64;
    }
    let mut powers = vec![0.0; gains.len()];
    for &i in &usable[..active] {
        powers[i] = (level - 1.0 / gains[i]).max(0.0);
    }
    Ok((powers, level))
}

/// One outer iteration of Q refinement or of the alternating loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub rate_nats: f64,
    pub q_hash: String,
    pub phase_hash: String,
    pub wall_ms: f64,
}

/// Rate history of an optimization run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AoTrace {
    pub records: Vec<TraceRecord>,
}

impl AoTrace {
    fn push(&mut self, iteration: usize, rate_nats: f64, q: &TransmitCovariance, phases: &PhaseConfig, start: Instant) {
        self.records.push(TraceRecord {
            iteration,
            rate_nats,
            q_hash: matrix_hash(q.matrix()),
            phase_hash: phase_hash(phases),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }

    pub fn rates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rate_nats).collect()
    }

    pub fn final_rate(&self) -> Option<f64> {
        self.records.last().map(|r| r.rate_nats)
    }

    /// True when no record drops below its predecessor by more than `epsilon`.
    pub fn is_nondecreasing(&self, epsilon: f64) -> bool {
        self.records.windows(2).all(|w| w[1].rate_nats >= w[0].rate_nats - epsilon)
    }

    /// CSV with header `iteration,rate_nats,rate_bits,q_hash,phase_hash[,wall_ms]`.
    /// Timing is opt-in so that repeated runs produce identical bytes.
    pub fn write_csv<W: Write>(&self, mut out: W, with_timing: bool) -> std::io::Result<()> {
        write!(out, "iteration,rate_nats,rate_bits,q_hash,phase_hash")?;
        writeln!(out, "{}", if with_timing { ",wall_ms" } else { "" })?;
        for r in &self.records {
            write!(
                out,
                "{},{:.12e},{:.12e},{},{}",
                r.iteration,
                r.rate_nats,
                crate::nats_to_bits(r.rate_nats),
                r.q_hash,
                r.phase_hash
            )?;
            if with_timing {
                write!(out, ",{:.3}", r.wall_ms)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn hex_prefix(digest: &[u8]) -> String {
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Short SHA-256 fingerprint of a complex matrix (shape and entry bits).
pub fn matrix_hash(m: &CMatrix) -> String {
    let mut h = Sha256::new();
    h.update((m.nrows() as u64).to_le_bytes());
    h.update((m.ncols() as u64).to_le_bytes());
    for z in m.iter() {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    hex_prefix(&h.finalize())
}

pub fn phase_hash(p: &PhaseConfig) -> String {
    let mut h = Sha256::new();
    h.update([p.is_common() as u8]);
    for side in [p.ris1(), p.ris2()] {
        h.update((side.len() as u64).to_le_bytes());
        for t in side {
            h.update(t.to_le_bytes());
        }
    }
    hex_prefix(&h.finalize())
}

/// Stopping rule shared by the covariance and alternating loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSettings {
    /// Stop once the rate changes by less than this (nats).
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for LoopSettings {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_iterations: 100,
        }
    }
}

/// Result of [`refine_q`].
#[derive(Debug, Clone)]
pub struct CovarianceOutcome {
    pub covariance: TransmitCovariance,
    pub rate: AsymptoticRate,
    pub trace: AoTrace,
    pub converged: bool,
}

/// Water-filling iteration on `F = ẽ3 T3 + ẽ4 T4` starting from `start`.
/// An update that lowers the rate is discarded and ends the loop, so the
/// returned rate is never below the starting one.
pub fn refine_q(
    problem: &Problem,
    phases: &PhaseConfig,
    start: &TransmitCovariance,
    settings: &LoopSettings,
) -> Result<CovarianceOutcome> {
    let clock = Instant::now();
    let mut trace = AoTrace::default();
    let mut q = start.clone();
    let mut current = problem.evaluate(&q, phases)?;
    trace.push(0, current.nats(), &q, phases, clock);
    if problem.power == 0.0 {
        return Ok(CovarianceOutcome {
            covariance: q,
            rate: current,
            trace,
            converged: true,
        });
    }
    for iteration in 1..=settings.max_iterations {
        let f = problem.covariance_gradient(current.state());
        let candidate = match water_filling(&f, problem.power) {
            Ok(c) => c,
            // The rate does not depend on Q at all.
            Err(Error::DegenerateWaterFilling { .. }) => break,
            Err(e) => return Err(e),
        };
        let next = problem.evaluate_from(&candidate, phases, *current.state())?;
        let change = next.nats() - current.nats();
        if change < 0.0 {
            break;
        }
        q = candidate;
        current = next;
        trace.push(iteration, current.nats(), &q, phases, clock);
        if change < settings.epsilon {
            break;
        }
        if iteration == settings.max_iterations {
            return Ok(CovarianceOutcome {
                covariance: q,
                rate: current,
                trace,
                converged: false,
            });
        }
    }
    Ok(CovarianceOutcome {
        covariance: q,
        rate: current,
        trace,
        converged: true,
    })
}

/// Covariance optimization at fixed phases, starting from `(P/M)·I`.
pub fn optimize_q(
    problem: &Problem,
    phases: &PhaseConfig,
    settings: &LoopSettings,
) -> Result<(TransmitCovariance, AoTrace)> {
    let out = refine_q(problem, phases, &problem.isotropic(), settings)?;
    if !out.converged {
        let rates = out.trace.rates();
        let last_change = match rates.as_slice() {
            [.., a, b] => b - a,
            _ => f64::NAN,
        };
        return Err(Error::Optimizer {
            trace: out.trace,
            source: Box::new(Error::OuterLoop {
                what: "covariance optimization",
                iterations: settings.max_iterations,
                last_change,
            }),
        });
    }
    Ok((out.covariance, out.trace))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsoSettings {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Per-dimension velocity bound (radians).
    pub velocity_clamp: f64,
    pub seed: u64,
    /// Independent swarms; the best result over all of them is returned.
    pub restarts: usize,
}

impl Default for PsoSettings {
    fn default() -> Self {
        Self {
            swarm_size: 40,
            iterations: 100,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            velocity_clamp: PI,
            seed: 0,
            restarts: 1,
        }
    }
}

impl PsoSettings {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::Config("PSO swarm needs at least 2 particles".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("PSO needs at least one restart".into()));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
            ("velocity_clamp", self.velocity_clamp),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("PSO {name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PsoOutcome {
    pub phases: PhaseConfig,
    pub fitness: f64,
    /// Fitness at each particle's final position (last restart).
    pub final_fitness: Vec<f64>,
    pub evaluations: usize,
}

/// Shortest signed angular distance from `from` to `to`, in `[−π, π)`.
fn angular_difference(to: f64, from: f64) -> f64 {
    (to - from + PI).rem_euclid(TAU) - PI
}

fn decode(x: &[f64], l1: usize, common: bool) -> PhaseConfig {
    if common {
        PhaseConfig::common(x.to_vec())
    } else {
        PhaseConfig::independent(x[..l1].to_vec(), x[l1..].to_vec())
    }
}

fn encode(p: &PhaseConfig, common: bool) -> Vec<f64> {
    if common {
        p.ris1().to_vec()
    } else {
        p.ris1().iter().chain(p.ris2()).copied().collect()
    }
}

/// Particle swarm search over the RIS phases at fixed `q`, maximizing the
/// asymptotic rate. With `incumbent`, every swarm contains that configuration,
/// so the result is never worse than it.
pub fn pso_phases(
    problem: &Problem,
    q: &TransmitCovariance,
    settings: &PsoSettings,
    common: bool,
    incumbent: Option<&PhaseConfig>,
) -> Result<PsoOutcome> {
    settings.validate()?;
    let dims = problem.profile.dims();
    let (l1, l2) = (dims.ris1_elements, dims.ris2_elements);
    if common && l1 != l2 {
        return Err(Error::Config("common-phase configuration needs equal RIS sizes".into()));
    }
    let dim = if common { l1 } else { l1 + l2 };
    let seed_position = incumbent.map(|p| {
        let p = if common && !p.is_common() {
            PhaseConfig::common(p.ris1().to_vec())
        } else {
            p.clone()
        };
        encode(&p, common)
    });
    let warm = incumbent
        .and_then(|p| problem.evaluate(q, p).ok())
        .map(|r| *r.state())
        .unwrap_or_else(|| AuxiliaryState::uniform(problem.solver.initial));
    let fitness = |x: &Vec<f64>| -> f64 {
        problem
            .evaluate_from(q, &decode(x, l1, common), warm)
            .map(|r| r.nats())
            .ok()
            .filter(|v| v.is_finite())
            .unwrap_or(f64::NEG_INFINITY)
    };

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut final_fitness = Vec::new();
    let mut evaluations = 0;
    for restart in 0..settings.restarts {
        let mut rng = trial_rng(settings.seed, restart as u64);
        let clamp = settings.velocity_clamp;
        let mut x: Vec<Vec<f64>> = (0..settings.swarm_size)
            .map(|_| (0..dim).map(|_| rng.random_range(0.0..TAU)).collect())
            .collect();
        if let Some(s) = &seed_position {
            x[0] = s.clone();
        }
        let mut v: Vec<Vec<f64>> = (0..settings.swarm_size)
            .map(|_| (0..dim).map(|_| rng.random_range(-clamp..clamp) * 0.5).collect())
            .collect();
        let mut fx: Vec<f64> = x.par_iter().map(&fitness).collect();
        evaluations += fx.len();
        let mut pbest = x.clone();
        let mut pbest_f = fx.clone();
        let mut g = argmax(&pbest_f);
        for _ in 0..settings.iterations {
            let gbest = pbest[g].clone();
            for i in 0..settings.swarm_size {
                for d in 0..dim {
                    let r1: f64 = rng.random();
                    let r2: f64 = rng.random();
                    let vel = settings.inertia * v[i][d]
                        + settings.cognitive * r1 * angular_difference(pbest[i][d], x[i][d])
                        + settings.social * r2 * angular_difference(gbest[d], x[i][d]);
                    v[i][d] = vel.clamp(-clamp, clamp);
                    x[i][d] = (x[i][d] + v[i][d]).rem_euclid(TAU);
                }
            }
            fx = x.par_iter().map(&fitness).collect();
            evaluations += fx.len();
            for i in 0..settings.swarm_size {
                if fx[i] > pbest_f[i] {
                    pbest_f[i] = fx[i];
                    pbest[i] = x[i].clone();
                }
            }
            g = argmax(&pbest_f);
        }
        if best.as_ref().is_none_or(|(_, f)| pbest_f[g] > *f) {
            best = Some((pbest[g].clone(), pbest_f[g]));
        }
        final_fitness = fx;
    }
    let (position, value) = best.expect("at least one restart");
    if value == f64::NEG_INFINITY {
        return Err(Error::Numerical("every PSO particle was infeasible".into()));
    }
    Ok(PsoOutcome {
        phases: decode(&position, l1, common),
        fitness: value,
        final_fitness,
        evaluations,
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoSettings {
    pub outer: LoopSettings,
    pub covariance_loop: LoopSettings,
    pub common_phase: bool,
    pub optimize_covariance: bool,
    pub optimize_phases: bool,
    /// Seed of the random initial phases.
    pub seed: u64,
}

impl Default for AoSettings {
    fn default() -> Self {
        Self {
            outer: LoopSettings {
                epsilon: 1e-5,
                max_iterations: 30,
            },
            covariance_loop: LoopSettings::default(),
            common_phase: false,
            optimize_covariance: true,
            optimize_phases: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AoOutcome {
    pub covariance: TransmitCovariance,
    pub phases: PhaseConfig,
    /// Final rate in nats.
    pub rate: f64,
    pub trace: AoTrace,
}

/// Random initial phases used by [`alternating_optimize`] for `seed`.
pub fn initial_phases(problem: &Problem, common: bool, seed: u64) -> Result<PhaseConfig> {
    let dims = problem.profile.dims();
    PhaseConfig::random(dims.ris1_elements, dims.ris2_elements, common, &mut trial_rng(seed, 0))
}

/// Alternates covariance refinement and phase search from `((P/M)·I, random
/// phases)` until the rate changes by less than the outer epsilon. Either step
/// is kept only if it does not lower the rate. Record 0 of the trace is the
/// starting point.
pub fn alternating_optimize(problem: &Problem, pso: &PsoSettings, settings: &AoSettings) -> Result<AoOutcome> {
    let clock = Instant::now();
    let mut trace = AoTrace::default();
    let fail = |trace: &AoTrace, e: Error| Error::Optimizer {
        trace: trace.clone(),
        source: Box::new(e),
    };
    let mut phases = initial_phases(problem, settings.common_phase, settings.seed)?;
    let mut q = problem.isotropic();
    let mut rate = problem.evaluate(&q, &phases).map_err(|e| fail(&trace, e))?.nats();
    trace.push(0, rate, &q, &phases, clock);
    if problem.power == 0.0 {
        return Ok(AoOutcome {
            covariance: q,
            phases,
            rate,
            trace,
        });
    }
    let mut last_change = f64::NAN;
    for iteration in 1..=settings.outer.max_iterations {
        let previous = rate;
        if settings.optimize_covariance {
            let out = refine_q(problem, &phases, &q, &settings.covariance_loop).map_err(|e| fail(&trace, e))?;
            if out.rate.nats() >= rate {
                q = out.covariance;
                rate = out.rate.nats();
            }
        }
        if settings.optimize_phases {
            let step = PsoSettings {
                seed: pso.seed.wrapping_add(iteration as u64),
                ..*pso
            };
            let out = pso_phases(problem, &q, &step, settings.common_phase, Some(&phases))
                .map_err(|e| fail(&trace, e))?;
            if out.fitness >= rate {
                phases = out.phases;
                rate = out.fitness;
            }
        }
        trace.push(iteration, rate, &q, &phases, clock);
        last_change = rate - previous;
        if last_change.abs() < settings.outer.epsilon {
            return Ok(AoOutcome {
                covariance: q,
                phases,
                rate,
                trace,
            });
        }
    }
    Err(fail(
        &trace,
        Error::OuterLoop {
            what: "alternating optimization",
            iterations: settings.outer.max_iterations,
            last_change,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SystemDims;

    fn real_diag(v: &[f64]) -> CMatrix {
        CMatrix::from_fn(v.len(), v.len(), |r, c| if r == c { linalg::c(v[r]) } else { linalg::c(0.0) })
    }

    #[test]
    fn identity_gain_gives_uniform_allocation() {
        let q = water_filling(&linalg::identity(4), 2.0).unwrap();
        assert!((q.matrix() - linalg::identity(4).scale(0.5)).norm() < 1e-12);
    }

    #[test]
    fn two_mode_closed_form() {
        let w = water_filling_detailed(&real_diag(&[1.0, 0.5]), 3.0).unwrap();
        // ascending gains: 0.5, 1.0
        assert!((w.powers[0] - 1.0).abs() < 1e-12);
        assert!((w.powers[1] - 2.0).abs() < 1e-12);
        assert!((w.level - 3.0).abs() < 1e-12);
    }

    #[test]
    fn weak_mode_is_switched_off() {
        let w = water_filling_detailed(&real_diag(&[10.0, 0.01]), 1.0).unwrap();
        assert_eq!(w.powers[0], 0.0);
        assert!((w.powers[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_gain_rejected() {
        assert!(matches!(
            water_filling(&linalg::zeros(3, 3), 1.0),
            Err(Error::DegenerateWaterFilling { .. })
        ));
    }

    #[test]
    fn angular_difference_is_shortest() {
        assert!((angular_difference(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((angular_difference(TAU - 0.1, 0.1) + 0.2).abs() < 1e-12);
    }

    #[test]
    fn trace_csv_is_reproducible_without_timing() {
        let dims = SystemDims::new(2, 2, 2, 2).unwrap();
        let p = CorrelationProfile::uncorrelated(dims, [0.5; 5]).unwrap();
        let problem = Problem::new(&p, 1.0, 2.0, SolverSettings::default()).unwrap();
        let csv = || {
            let (_, t) = optimize_q(&problem, &PhaseConfig::zeros(2, 2), &LoopSettings::default()).unwrap();
            let mut buf = Vec::new();
            t.write_csv(&mut buf, false).unwrap();
            buf
        };
        assert_eq!(csv(), csv());
    }

    #[test]
    fn pso_rejects_bad_settings() {
        let s = PsoSettings {
            swarm_size: 1,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }
}
