mod common;

use std::f64::consts::TAU;

use common::wf_oracle::{objective, projected_gradient_max};
use common::{normalized_correlated, normalized_with_spacing, phase_invariant};
use dris_core::channel::{CorrelationProfile, PhaseConfig, SystemDims};
use dris_core::covariance::TransmitCovariance;
use dris_core::fixed_point::{apply_transforms, FixedPointSystem, SolverSettings};
use dris_core::linalg::{self, CMatrix};
use dris_core::optimizer::{
    alternating_optimize, optimize_q, pso_phases, water_filling, water_filling_detailed, AoSettings, LoopSettings,
    Problem, PsoSettings,
};
use dris_core::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Random PSD matrix of the given rank.
fn random_psd(rng: &mut impl Rng, n: usize, rank: usize) -> CMatrix {
    let a = random_matrix(rng, n, rank);
    linalg::hermitian_part(&(&a * a.adjoint()))
}

#[test]
fn water_filling_matches_projected_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..6 {
        let rank = [5, 5, 3, 2, 5, 1][case];
        let f = random_psd(&mut rng, 5, rank);
        let q = water_filling(&f, 1.0).unwrap();
        let ours = objective(&linalg::psd_sqrt(&f, "F").unwrap(), q.matrix());
        let oracle = projected_gradient_max(&f, 1.0, 1e-9);
        assert!((ours - oracle).abs() < 1e-6, "case {case}: {ours} vs {oracle}");
    }
}

#[test]
fn water_filling_satisfies_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10 {
        let f = random_psd(&mut rng, 5, 5);
        let power = rng.random_range(0.1..10.0);
        let w = water_filling_detailed(&f, power).unwrap();
        let (_, vectors) = linalg::eigh(&f);
        let n = f.nrows();
        let inner = linalg::inverse(&(linalg::identity(n) + &f * w.covariance.matrix()), "I + FQ").unwrap();
        let g = &f * inner;
        let dual = 1.0 / w.level;
        for (k, &p) in w.powers.iter().enumerate() {
            let u = vectors.column(k);
            let marginal = (u.adjoint() * &g * u)[(0, 0)].re;
            if p > 0.0 {
                assert!((marginal - dual).abs() < 1e-8, "active mode {k}: {marginal} vs {dual}");
            } else {
                assert!(marginal <= dual + 1e-8, "inactive mode {k}: {marginal} vs {dual}");
            }
        }
        assert!((w.covariance.trace() - power).abs() < 1e-9 * power);
    }
}

#[test]
fn trace_preserving_perturbations_do_not_improve() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..4 {
        let f = random_psd(&mut rng, 5, 4);
        let f_half = linalg::psd_sqrt(&f, "F").unwrap();
        let q = water_filling(&f, 2.0).unwrap();
        let best = objective(&f_half, q.matrix());
        for _ in 0..20 {
            let mut delta = linalg::hermitian_part(&random_matrix(&mut rng, 5, 5));
            let shift = linalg::trace(&delta).re / 5.0;
            delta -= linalg::identity(5).scale(shift);
            let moved = q.matrix() + delta.scale(1e-4);
            let (values, vectors) = linalg::eigh(&moved);
            let clipped = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                5,
                values.iter().map(|&v| linalg::c(v.max(0.0))),
            ));
            let mut candidate = &vectors * clipped * vectors.adjoint();
            candidate = candidate.scale(2.0 / linalg::trace(&candidate).re);
            assert!(objective(&f_half, &candidate) <= best + 1e-8);
        }
    }
}

fn problem(profile: &CorrelationProfile, power: f64) -> Problem<'_> {
    Problem::new(profile, 1.0, power, SolverSettings::default()).unwrap()
}

#[test]
fn scaled_identity_transmit_correlation_keeps_isotropic_covariance() {
    let p = CorrelationProfile::uncorrelated(SystemDims::new(4, 2, 4, 4).unwrap(), [0.5; 5]).unwrap();
    let pr = problem(&p, 4.0);
    let (q, _) = optimize_q(&pr, &PhaseConfig::zeros(4, 4), &LoopSettings::default()).unwrap();
    assert!((q.matrix() - linalg::identity(4)).norm() < 1e-9);
}

#[test]
fn negligible_power_gives_negligible_rate() {
    let p = normalized_correlated(4, 2, 4);
    let pr = problem(&p, 1e-9);
    let phases = PhaseConfig::zeros(4, 4);
    let (q, trace) = optimize_q(&pr, &phases, &LoopSettings::default()).unwrap();
    assert!(q.trace() <= 1e-9 * (1.0 + 1e-12));
    assert!(trace.final_rate().unwrap() < 1e-6);
}

#[test]
fn covariance_loop_improves_correlated_instance_monotonically() {
    let p = normalized_correlated(8, 4, 16);
    let pr = problem(&p, 8.0);
    let phases = PhaseConfig::zeros(16, 16);
    let (_, trace) = optimize_q(&pr, &phases, &LoopSettings::default()).unwrap();
    let rates = trace.rates();
    assert!(trace.is_nondecreasing(0.0), "{rates:?}");
    assert!(rates.last().unwrap() > &(rates[0] + 0.05), "{rates:?}");
}

#[test]
fn fixed_state_covariance_only_moves_the_bs_term() {
    let p = normalized_correlated(4, 2, 4);
    let phases = PhaseConfig::zeros(4, 4);
    let s = SolverSettings::default();
    let iso = TransmitCovariance::isotropic(4, 4.0).unwrap();
    let tp = apply_transforms(&p, &iso, &phases).unwrap();
    let state = dris_core::fixed_point::solve_auxiliary(&tp, 1.0, &s).unwrap().state;
    let base = FixedPointSystem::new(&tp, 1.0, &s).unwrap().rate_terms(&state).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = random_psd(&mut rng, 4, 4);
    let other = TransmitCovariance::new(m.scale(4.0 / linalg::trace(&m).re), 4.0 * (1.0 + 1e-12)).unwrap();
    let tp2 = apply_transforms(&p, &other, &phases).unwrap();
    let moved = FixedPointSystem::new(&tp2, 1.0, &s).unwrap().rate_terms(&state).unwrap();
    assert_eq!(base.user, moved.user);
    assert_eq!(base.ris1, moved.ris1);
    assert_eq!(base.ris2, moved.ris2);
    assert_eq!(base.correction, moved.correction);
    assert!((base.bs - moved.bs).abs() > 1e-6);
}

fn small_pso(seed: u64) -> PsoSettings {
    PsoSettings {
        swarm_size: 10,
        iterations: 20,
        seed,
        ..Default::default()
    }
}

#[test]
fn single_element_surfaces_are_phase_invariant() {
    let p = normalized_correlated(4, 2, 1);
    let pr = problem(&p, 4.0);
    let q = pr.isotropic();
    let rates: Vec<f64> = (0..36)
        .map(|k| pr.evaluate(&q, &PhaseConfig::common(vec![k as f64 * TAU / 36.0])).unwrap().nats())
        .collect();
    let spread = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - rates.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1e-8, "{spread}");
    let out = pso_phases(&pr, &q, &small_pso(1), true, None).unwrap();
    assert!((out.fitness - rates[0]).abs() < 1e-8);
}

#[test]
fn pso_finds_best_relative_phase_of_two_elements() {
    let p = normalized_with_spacing(4, 2, 2, 0.1);
    let pr = problem(&p, 4.0);
    let q = pr.isotropic();
    let grid: Vec<f64> = (0..3600)
        .map(|k| {
            let phases = PhaseConfig::common(vec![0.0, k as f64 * TAU / 3600.0]);
            pr.evaluate(&q, &phases).unwrap().nats()
        })
        .collect();
    let best = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let worst = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(best - worst > 1e-3, "phases should matter here: {best} vs {worst}");
    let out = pso_phases(&pr, &q, &small_pso(2), true, None).unwrap();
    assert!((out.fitness - best).abs() < 1e-3, "{} vs {best}", out.fitness);
}

#[test]
fn swarm_is_flat_when_phases_do_not_matter() {
    let p = phase_invariant(4, 2, 4);
    let pr = problem(&p, 4.0);
    let out = pso_phases(&pr, &pr.isotropic(), &small_pso(3), false, None).unwrap();
    let hi = out.final_fitness.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = out.final_fitness.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi - lo < 1e-8, "{hi} vs {lo}");
}

#[test]
fn pso_output_is_wrapped_deterministic_and_beats_incumbent() {
    let p = normalized_correlated(4, 2, 4);
    let pr = problem(&p, 4.0);
    let q = pr.isotropic();
    let incumbent = PhaseConfig::zeros(4, 4);
    let start = pr.evaluate(&q, &incumbent).unwrap().nats();
    let a = pso_phases(&pr, &q, &small_pso(4), false, Some(&incumbent)).unwrap();
    let b = pso_phases(&pr, &q, &small_pso(4), false, Some(&incumbent)).unwrap();
    assert_eq!(a.phases, b.phases);
    assert_eq!(a.fitness, b.fitness);
    assert!(a.fitness >= start);
    assert!(a.phases.ris1().iter().chain(a.phases.ris2()).all(|&t| (0.0..TAU).contains(&t)));
}

fn quick_ao(seed: u64, common: bool) -> AoSettings {
    AoSettings {
        common_phase: common,
        seed,
        ..Default::default()
    }
}

#[test]
fn phase_invariant_instance_converges_in_two_steps() {
    let p = phase_invariant(4, 2, 4);
    let pr = problem(&p, 4.0);
    let out = alternating_optimize(&pr, &small_pso(5), &quick_ao(1, false)).unwrap();
    assert_eq!(out.trace.records.len(), 3, "{:?}", out.trace.rates());
}

#[test]
fn zero_power_returns_immediately() {
    let p = normalized_correlated(4, 2, 4);
    let pr = problem(&p, 0.0);
    let out = alternating_optimize(&pr, &small_pso(5), &quick_ao(1, false)).unwrap();
    assert_eq!(out.trace.records.len(), 1);
    assert_eq!(out.rate, 0.0);
}

#[test]
fn joint_design_dominates_single_block_designs() {
    let p = normalized_correlated(4, 2, 4);
    let pr = problem(&p, 4.0);
    let pso = small_pso(6);
    let run = |cov: bool, ph: bool| {
        alternating_optimize(
            &pr,
            &pso,
            &AoSettings {
                optimize_covariance: cov,
                optimize_phases: ph,
                ..quick_ao(2, false)
            },
        )
        .unwrap()
    };
    let joint = run(true, true);
    let q_only = run(true, false);
    let p_only = run(false, true);
    let baseline = joint.trace.rates()[0];
    assert!(joint.trace.is_nondecreasing(0.0));
    assert!(q_only.rate >= baseline && p_only.rate >= baseline);
    assert!(joint.rate >= q_only.rate.max(p_only.rate) - 1e-6, "{} {} {}", joint.rate, q_only.rate, p_only.rate);
}

#[test]
fn independent_phases_not_worse_than_common_phases() {
    let p = normalized_correlated(4, 2, 4);
    let pr = problem(&p, 4.0);
    let (mut common, mut independent) = (Vec::new(), Vec::new());
    for seed in 0..5 {
        common.push(alternating_optimize(&pr, &small_pso(seed), &quick_ao(seed, true)).unwrap().rate);
        independent.push(alternating_optimize(&pr, &small_pso(seed), &quick_ao(seed, false)).unwrap().rate);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sd = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    assert!(
        mean(&independent) >= mean(&common) - 2.0 * sd(&common).max(sd(&independent)),
        "{independent:?} vs {common:?}"
    );
}

#[test]
fn exhausted_outer_loop_reports_its_trace() {
    let p = normalized_correlated(4, 2, 4);
    let pr = problem(&p, 4.0);
    let settings = AoSettings {
        outer: LoopSettings {
            epsilon: 0.0,
            max_iterations: 2,
        },
        ..quick_ao(3, false)
    };
    match alternating_optimize(&pr, &small_pso(7), &settings) {
        Err(Error::Optimizer { trace, .. }) => assert_eq!(trace.records.len(), 3),
        other => panic!("expected an optimizer error, got {other:?}"),
    }
}
