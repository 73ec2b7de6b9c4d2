use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Phase shifts of both surfaces. Phases are stored wrapped into `[0, 2π)`,
/// so every reflection coefficient `exp(jθ)` has unit modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    ris1: Vec<f64>,
    ris2: Vec<f64>,
    common: bool,
}

/// Wraps an angle into `[0, 2π)`.
pub(crate) fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl PhaseConfig {
    /// All-zero phases (`Θ1 = I`, `Θ2 = I`).
    pub fn zeros(ris1: usize, ris2: usize) -> Self {
        Self {
            ris1: vec![0.0; ris1],
            ris2: vec![0.0; ris2],
            common: false,
        }
    }

    /// Separate phase vectors for the two surfaces.
    pub fn independent(ris1: Vec<f64>, ris2: Vec<f64>) -> Self {
        Self {
            ris1: ris1.into_iter().map(wrap_phase).collect(),
            ris2: ris2.into_iter().map(wrap_phase).collect(),
            common: false,
        }
    }

    /// Common-phase configuration: both surfaces use the same vector.
    pub fn common(theta: Vec<f64>) -> Self {
        let theta: Vec<f64> = theta.into_iter().map(wrap_phase).collect();
        Self {
            ris1: theta.clone(),
            ris2: theta,
            common: true,
        }
    }

    /// Phases drawn i.i.d. uniform on `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(ris1: usize, ris2: usize, common: bool, rng: &mut R) -> Result<Self> {
        if common {
            if ris1 != ris2 {
                return Err(Error::Config(
                    "common-phase configuration needs equal RIS sizes".into(),
                ));
            }
            let theta = (0..ris1).map(|_| rng.random_range(0.0..TAU)).collect();
            Ok(Self::common(theta))
        } else {
            let a = (0..ris1).map(|_| rng.random_range(0.0..TAU)).collect();
            let b = (0..ris2).map(|_| rng.random_range(0.0..TAU)).collect();
            Ok(Self::independent(a, b))
        }
    }

    pub fn ris1(&self) -> &[f64] {
        &self.ris1
    }

    pub fn ris2(&self) -> &[f64] {
        &self.ris2
    }

    pub fn is_common(&self) -> bool {
        self.common
    }

    /// Diagonal of `Θ1`.
    pub fn ris1_coefficients(&self) -> Vec<Complex64> {
        self.ris1.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
    }

    /// Diagonal of `Θ2`.
    pub fn ris2_coefficients(&self) -> Vec<Complex64> {
        self.ris2.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
    }

    pub fn check_dims(&self, ris1: usize, ris2: usize) -> Result<()> {
        if self.ris1.len() != ris1 || self.ris2.len() != ris2 {
            return Err(Error::Dimension {
                name: "phases".into(),
                expected: (ris1, ris2),
                found: (self.ris1.len(), self.ris2.len()),
            });
        }
        Ok(())
    }
}
