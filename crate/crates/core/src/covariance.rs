use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Transmit covariance `Q` together with its power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitCovariance {
    matrix: CMatrix,
    budget: f64,
}

impl TransmitCovariance {
    /// Validates that `matrix` is Hermitian PSD and `Tr(Q) ≤ budget`.
    pub fn new(matrix: CMatrix, budget: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Config("transmit covariance must be square".into()));
        }
        if !(budget >= 0.0) || !budget.is_finite() {
            return Err(Error::Config("power budget must be finite and non-negative".into()));
        }
        let scale = matrix.iter().fold(1.0f64, |a, z| a.max(z.norm()));
        if linalg::hermitian_defect(&matrix) > 1e-12 * scale {
            return Err(Error::Numerical("transmit covariance is not Hermitian".into()));
        }
        linalg::check_psd(&matrix, "Q")?;
        let tr = linalg::trace(&matrix).re;
        if tr > budget * (1.0 + 1e-10) + 1e-8 {
            return Err(Error::Config(format!(
                "Tr(Q) = {tr} exceeds the power budget {budget}"
            )));
        }
        Ok(Self {
            matrix: linalg::hermitian_part(&matrix),
            budget,
        })
    }

    /// `(P/M)·I`: the whole budget spread evenly over `antennas` antennas.
    pub fn isotropic(antennas: usize, budget: f64) -> Result<Self> {
        Self::new(
            linalg::identity(antennas).scale(budget / antennas as f64),
            budget,
        )
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }
}
