//! Double-RIS channel model.
//!
//! The BS reaches the user through RIS 1 (near the user) and RIS 2 (near the
//! BS). Five Kronecker-correlated Rayleigh links are involved:
//!
//! | link        | matrix | shape    |
//! |-------------|--------|----------|
//! | RIS1 → user | `H1`   | N × L1   |
//! | RIS2 → user | `H2`   | N × L2   |
//! | RIS2 → RIS1 | `Hs`   | L1 × L2  |
//! | BS → RIS1   | `H3`   | L1 × M   |
//! | BS → RIS2   | `H4`   | L2 × M   |
//!
//! and the effective channel is `H1 Θ1 H3 + H2 Θ2 H4 + H1 Θ1 Hs Θ2 H4`.

mod correlation;
mod geometry;
mod phases;
mod sampling;

pub use correlation::{
    build_profile, integral_correlation, path_loss_db, path_loss_linear, sinc, sinc_correlation,
    AngularProfile, CorrelationParams, CorrelationProfile, LinkStats,
};
pub use geometry::{NodeGeometry, Point, RisPanel};
pub use phases::PhaseConfig;
pub use sampling::{effective_channel, sample_channel, trial_rng, ChannelDraw, ChannelSampler};

use crate::error::{Error, Result};

/// Antenna and element counts of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemDims {
    /// BS antennas (M).
    pub bs_antennas: usize,
    /// User antennas (N).
    pub user_antennas: usize,
    /// Reflecting elements of RIS 1 (L1).
    pub ris1_elements: usize,
    /// Reflecting elements of RIS 2 (L2).
    pub ris2_elements: usize,
}

impl SystemDims {
    pub fn new(bs: usize, user: usize, ris1: usize, ris2: usize) -> Result<Self> {
        for (name, v) in [
            ("bs_antennas", bs),
            ("user_antennas", user),
            ("ris1_elements", ris1),
            ("ris2_elements", ris2),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(Self {
            bs_antennas: bs,
            user_antennas: user,
            ris1_elements: ris1,
            ris2_elements: ris2,
        })
    }

    /// Large-system ratios `(L1/M, L2/M, N/L1, N/L2)`.
    pub fn ratios(&self) -> [f64; 4] {
        let m = self.bs_antennas as f64;
        let n = self.user_antennas as f64;
        let l1 = self.ris1_elements as f64;
        let l2 = self.ris2_elements as f64;
        [l1 / m, l2 / m, n / l1, n / l2]
    }
}

/// The five random links, in the order used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Link {
    Ris1User,
    Ris2User,
    InterRis,
    BsRis1,
    BsRis2,
}

impl Link {
    pub const ALL: [Link; 5] = [
        Link::Ris1User,
        Link::Ris2User,
        Link::InterRis,
        Link::BsRis1,
        Link::BsRis2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::Ris1User => "ris1_user",
            Link::Ris2User => "ris2_user",
            Link::InterRis => "inter_ris",
            Link::BsRis1 => "bs_ris1",
            Link::BsRis2 => "bs_ris2",
        }
    }

    /// `(rows, cols)` of the channel matrix.
    pub fn shape(self, dims: &SystemDims) -> (usize, usize) {
        (self.receive_dim(dims), self.transmit_dim(dims))
    }

    pub fn receive_dim(self, dims: &SystemDims) -> usize {
        match self {
            Link::Ris1User | Link::Ris2User => dims.user_antennas,
            Link::InterRis | Link::BsRis1 => dims.ris1_elements,
            Link::BsRis2 => dims.ris2_elements,
        }
    }

    pub fn transmit_dim(self, dims: &SystemDims) -> usize {
        match self {
            Link::Ris1User => dims.ris1_elements,
            Link::Ris2User | Link::InterRis => dims.ris2_elements,
            Link::BsRis1 | Link::BsRis2 => dims.bs_antennas,
        }
    }

    /// Dimension `D` such that the i.i.d. entries of `W` have variance `1/D`.
    pub fn variance_dimension(self, dims: &SystemDims) -> usize {
        match self {
            Link::Ris1User => dims.ris1_elements,
            Link::Ris2User | Link::InterRis => dims.ris2_elements,
            Link::BsRis1 | Link::BsRis2 => dims.bs_antennas,
        }
    }

    /// Required trace of the receive correlation matrix.
    pub fn receive_trace(self, dims: &SystemDims) -> f64 {
        self.receive_dim(dims) as f64
    }

    /// Required trace of the transmit correlation matrix for large-scale gain `gain`.
    pub fn transmit_trace(self, dims: &SystemDims, gain: f64) -> f64 {
        let l1 = dims.ris1_elements as f64;
        let l2 = dims.ris2_elements as f64;
        let m = dims.bs_antennas as f64;
        match self {
            Link::Ris1User => l1 * l1 * gain,
            Link::Ris2User | Link::InterRis => l2 * l2 * gain,
            Link::BsRis1 | Link::BsRis2 => m * gain,
        }
    }
}

impl std::fmt::Display for Link {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
