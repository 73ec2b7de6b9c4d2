//! Small dense complex linear-algebra helpers on top of `nalgebra`.
//!
//! Everything in the crate works with `DMatrix<Complex64>`; the matrices are
//! at most a few hundred rows, so plain dense routines are adequate.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Eigenvalues below `-PSD_TOLERANCE * max(1, spectral radius)` are treated as
/// genuinely negative; anything above is round-off and clipped to zero.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Real scalar as a complex number.
#[inline]
pub fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// `(A + Aᴴ) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Largest elementwise deviation `max |A − Aᴴ|`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in ascending order.
pub fn eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    eigh(a).0[0]
}

fn psd_threshold(values: &[f64]) -> f64 {
    let radius = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    -PSD_TOLERANCE * radius.max(1.0)
}

/// Checks that a Hermitian matrix is PSD up to round-off.
pub fn check_psd(a: &CMatrix, name: &str) -> Result<()> {
    let (values, _) = eigh(a);
    match values.first() {
        Some(&min) if min < psd_threshold(&values) => Err(Error::NotPsd {
            name: name.to_string(),
            min_eigenvalue: min,
        }),
        _ => Ok(()),
    }
}

/// Principal square root of a Hermitian PSD matrix. Slightly negative
/// eigenvalues from round-off are clipped to zero.
pub fn psd_sqrt(a: &CMatrix, name: &str) -> Result<CMatrix> {
    let (values, vectors) = eigh(a);
    if let Some(&min) = values.first() {
        if min < psd_threshold(&values) {
            return Err(Error::NotPsd {
                name: name.to_string(),
                min_eigenvalue: min,
            });
        }
    }
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        scaled.column_mut(k).scale_mut(s);
    }
    Ok(hermitian_part(&(scaled * vectors.adjoint())))
}

pub fn inverse(a: &CMatrix, name: &str) -> Result<CMatrix> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical(format!("`{name}` is singular")))
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `log det A` for a matrix whose determinant is real and positive, such as
/// `I + X Y` with `X, Y` PSD. Fails if the determinant is not positive.
pub fn log_det(a: &CMatrix, name: &str) -> Result<f64> {
    let n = a.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let mut log_abs = 0.0;
    let mut phase = 0.0;
    for i in 0..n {
        let d = u[(i, i)];
        if d.norm() == 0.0 {
            return Err(Error::Numerical(format!("log-det of singular `{name}`")));
        }
        log_abs += d.norm().ln();
        phase += d.arg();
    }
    let sign = lu.p().determinant::<f64>();
    let det_direction = Complex64::from_polar(sign, phase);
    // A positive determinant points along +1; allow a little round-off.
    if det_direction.re <= 0.0 || det_direction.im.abs() > 1e-6 {
        return Err(Error::Numerical(format!(
            "log-det argument of `{name}` is not positive (phase {:.3e})",
            det_direction.arg()
        )));
    }
    Ok(log_abs)
}

/// `log det A` of a Hermitian positive-definite matrix via Cholesky.
pub fn log_det_hpd(a: &CMatrix, name: &str) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let chol = hermitian_part(a)
        .cholesky()
        .ok_or_else(|| Error::Numerical(format!("`{name}` is not positive definite")))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.re.ln()).sum::<f64>())
}

/// `diag(c)ᴴ A diag(c)` for a vector of unit-modulus coefficients `c`.
pub fn conjugate_by_diagonal(a: &CMatrix, coefficients: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        coefficients[i].conj() * a[(i, j)] * coefficients[j]
    })
}

/// Rescales `a` so that its trace equals `target`. A zero matrix stays zero.
pub fn with_trace(a: &CMatrix, target: f64) -> CMatrix {
    let tr = trace(a).re;
    if tr == 0.0 {
        return a.clone();
    }
    a.scale(target / tr)
}

pub fn from_real(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_psd() -> CMatrix {
        let b = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.2),
                c(0.3, -0.1),
                c(0.0, 0.5),
                c(-0.4, 0.0),
                c(0.9, 0.3),
                c(0.2, 0.2),
                c(0.1, -0.7),
                c(0.0, 0.0),
                c(0.6, 0.1),
            ],
        );
        &b * b.adjoint()
    }

    #[test]
    fn sqrt_squares_back() {
        let a = sample_psd();
        let s = psd_sqrt(&a, "a").unwrap();
        assert!((&s * &s - &a).norm() < 1e-12);
        assert!(hermitian_defect(&s) < 1e-14);
    }

    #[test]
    fn sqrt_rejects_negative_definite() {
        let a = identity(2).scale(-1.0);
        assert!(matches!(psd_sqrt(&a, "neg"), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn sqrt_clips_roundoff() {
        let mut a = identity(2);
        a[(1, 1)] = c(-1e-13, 0.0);
        let s = psd_sqrt(&a, "a").unwrap();
        assert_eq!(s[(1, 1)].re, 0.0);
    }

    #[test]
    fn log_det_matches_eigen_sum() {
        let a = sample_psd() + identity(3);
        let (vals, _) = eigh(&a);
        let expect: f64 = vals.iter().map(|v| v.ln()).sum();
        assert!((log_det(&a, "a").unwrap() - expect).abs() < 1e-12);
        assert!((log_det_hpd(&a, "a").unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn log_det_rejects_negative_determinant() {
        let mut a = identity(2);
        a[(0, 0)] = c(-2.0, 0.0);
        assert!(log_det(&a, "a").is_err());
    }

    #[test]
    fn trace_of_product_matches_product() {
        let a = sample_psd();
        let b = sample_psd().map(|z| z * c(0.3, 1.0));
        let direct = trace(&(&a * &b));
        assert!((trace_of_product(&a, &b) - direct).norm() < 1e-12);
    }
}
