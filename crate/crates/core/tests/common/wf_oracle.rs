//! Independent water-filling oracle: projected gradient ascent on the
//! trace-constrained PSD cone. Shared with the acceptance suite.

use dris_core::linalg::{self, CMatrix};

pub fn objective(f_half: &CMatrix, q: &CMatrix) -> f64 {
    let n = q.nrows();
    linalg::log_det_hpd(&(linalg::identity(n) + f_half * q * f_half), "I + FQ").unwrap()
}

/// Euclidean projection of `v` onto `{x ≥ 0, Σx = total}`.
fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cumulative += x;
        let t = (cumulative - total) / (j + 1) as f64;
        if x - t > 0.0 {
            shift = t;
        }
    }
    v.iter().map(|x| (x - shift).max(0.0)).collect()
}

/// Projection onto `{Q ⪰ 0, Tr Q = total}`.
fn project_spectraplex(y: &CMatrix, total: f64) -> CMatrix {
    let (values, vectors) = linalg::eigh(&linalg::hermitian_part(y));
    let p = project_simplex(&values, total);
    let d = CMatrix::from_fn(p.len(), p.len(), |r, c| linalg::c(if r == c { p[r] } else { 0.0 }));
    linalg::hermitian_part(&(&vectors * d * vectors.adjoint()))
}

/// Projected gradient ascent on `log det(I + F Q)` over the trace-`power`
/// spectraplex, stopped on a Frank-Wolfe duality gap below `gap`.
pub fn projected_gradient_max(f: &CMatrix, power: f64, gap: f64) -> f64 {
    let n = f.nrows();
    let f_half = linalg::psd_sqrt(f, "F").unwrap();
    let (eigs, _) = linalg::eigh(f);
    let step = 1.0 / eigs.last().unwrap().powi(2);
    let mut q = linalg::identity(n).scale(power / n as f64);
    for _ in 0..500_000 {
        let inner = linalg::inverse(&(linalg::identity(n) + &f_half * &q * &f_half), "inner").unwrap();
        let grad = linalg::hermitian_part(&(&f_half * inner * &f_half));
        let (g, _) = linalg::eigh(&grad);
        let fw_gap = power * g.last().unwrap() - linalg::trace_of_product(&grad, &q).re;
        if fw_gap < gap {
            break;
        }
        q = project_spectraplex(&(&q + grad.scale(step)), power);
    }
    objective(&f_half, &q)
}
