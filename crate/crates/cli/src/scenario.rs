//! Scenario files.
//!
//! A scenario is a TOML document with the sections below; every key is
//! optional and unknown keys are rejected. An empty file is the reference
//! deployment: M = 8, N = 4, L1 = L2 = 100, noise −94 dBm.
//!
//! ```toml
//! [system]
//! bs_antennas = 8
//! user_antennas = 4
//! ris1_elements = 100
//! ris2_elements = 100
//!
//! [geometry]                # positions in meters
//! bs = [1.0, 0.0, 5.0]
//! user = [1.0, 50.0, 1.5]
//! ris1 = [0.0, 50.0, 3.0]
//! ris2 = [0.0, 0.0, 3.0]
//! wavelength_m = 0.1
//! antenna_spacing = 0.5     # wavelengths
//! ris_spacing = 0.5         # wavelengths
//! antenna_gain_dbi = 5.0
//!
//! [correlation]
//! identity = false
//! bs_mean_deg = 0.0
//! bs_spread_deg = 5.0
//! user_mean_deg = 0.0
//! user_spread_deg = 5.0
//!
//! [link]
//! noise_dbm = -94.0
//! snr_db = 10.0             # or power_dbm, not both
//! snr_reference = "path"    # "path" or "transmit"
//! common_phase = true
//!
//! [seeds]
//! channel = 1
//! phases = 7
//! pso = 11
//!
//! [monte_carlo]
//! trials = 1000
//!
//! [solver]
//! tolerance = 1e-5
//! max_iterations = 2000
//! damping = 0.5
//! initial = 1.0
//!
//! [pso]
//! swarm_size = 40
//! iterations = 100
//! inertia = 0.729
//! cognitive = 1.49445
//! social = 1.49445
//! velocity_clamp = 3.141592653589793
//! restarts = 1
//!
//! [ao]
//! epsilon = 1e-5
//! max_iterations = 30
//! covariance_max_iterations = 100
//! ```
//!
//! SNR is `P · G / σ²`. With `snr_reference = "path"`, `G` is the larger of the
//! two single-reflection cascade gains `Γ(RIS1→user)·Γ(BS→RIS1)` and
//! `Γ(RIS2→user)·Γ(BS→RIS2)` computed from the geometry; with `"transmit"`,
//! `G = 1`.

use std::path::Path;

use dris_core::channel::{
    build_profile, path_loss_linear, AngularProfile, CorrelationParams, CorrelationProfile, Link,
    NodeGeometry, Point, RisPanel, SystemDims,
};
use dris_core::fixed_point::SolverSettings;
use dris_core::optimizer::{AoSettings, LoopSettings, PsoSettings};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::units::{db_to_linear, dbm_to_watts};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Model(#[from] dris_core::Error),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub bs_antennas: usize,
    pub user_antennas: usize,
    pub ris1_elements: usize,
    pub ris2_elements: usize,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            bs_antennas: 8,
            user_antennas: 4,
            ris1_elements: 100,
            ris2_elements: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub bs: [f64; 3],
    pub user: [f64; 3],
    pub ris1: [f64; 3],
    pub ris2: [f64; 3],
    pub wavelength_m: f64,
    pub antenna_spacing: f64,
    pub ris_spacing: f64,
    pub antenna_gain_dbi: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            bs: [1.0, 0.0, 5.0],
            user: [1.0, 50.0, 1.5],
            ris1: [0.0, 50.0, 3.0],
            ris2: [0.0, 0.0, 3.0],
            wavelength_m: NodeGeometry::DEFAULT_WAVELENGTH,
            antenna_spacing: 0.5,
            ris_spacing: 0.5,
            antenna_gain_dbi: NodeGeometry::DEFAULT_GAIN_DBI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationSection {
    pub identity: bool,
    pub bs_mean_deg: f64,
    pub bs_spread_deg: f64,
    pub user_mean_deg: f64,
    pub user_spread_deg: f64,
}

impl Default for CorrelationSection {
    fn default() -> Self {
        let a = AngularProfile::default();
        Self {
            identity: false,
            bs_mean_deg: a.mean_deg,
            bs_spread_deg: a.spread_deg,
            user_mean_deg: a.mean_deg,
            user_spread_deg: a.spread_deg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SnrReference {
    #[default]
    Path,
    Transmit,
}

pub const DEFAULT_SNR_DB: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub noise_dbm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<f64>,
    pub snr_reference: SnrReference,
    pub common_phase: bool,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            noise_dbm: -94.0,
            snr_db: None,
            power_dbm: None,
            snr_reference: SnrReference::Path,
            common_phase: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    pub channel: u64,
    pub phases: u64,
    pub pso: u64,
}

impl Default for SeedSection {
    fn default() -> Self {
        Self {
            channel: 1,
            phases: 7,
            pso: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub trials: usize,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self { trials: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub damping: f64,
    pub initial: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            damping: s.damping,
            initial: s.initial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoSection {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub velocity_clamp: f64,
    pub restarts: usize,
}

impl Default for PsoSection {
    fn default() -> Self {
        let p = PsoSettings::default();
        Self {
            swarm_size: p.swarm_size,
            iterations: p.iterations,
            inertia: p.inertia,
            cognitive: p.cognitive,
            social: p.social,
            velocity_clamp: p.velocity_clamp,
            restarts: p.restarts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoSection {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub covariance_max_iterations: usize,
}

impl Default for AoSection {
    fn default() -> Self {
        let a = AoSettings::default();
        Self {
            epsilon: a.outer.epsilon,
            max_iterations: a.outer.max_iterations,
            covariance_max_iterations: a.covariance_loop.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub system: SystemSection,
    pub geometry: GeometrySection,
    pub correlation: CorrelationSection,
    pub link: LinkSection,
    pub seeds: SeedSection,
    pub monte_carlo: MonteCarloSection,
    pub solver: SolverSection,
    pub pso: PsoSection,
    pub ao: AoSection,
}

fn point(p: [f64; 3]) -> Point {
    Point::new(p[0], p[1], p[2])
}

impl Scenario {
    /// Parses and validates. Syntax errors carry the line and column.
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Self = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ScenarioError::Parse(msg) => ScenarioError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Normalized document with every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Scenario::to_toml`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let sys = &self.system;
        for (field, v) in [
            ("system.bs_antennas", sys.bs_antennas),
            ("system.user_antennas", sys.user_antennas),
            ("system.ris1_elements", sys.ris1_elements),
            ("system.ris2_elements", sys.ris2_elements),
        ] {
            if v == 0 {
                return Err(invalid(field, "must be at least 1"));
            }
        }
        let g = &self.geometry;
        for (field, v) in [
            ("geometry.wavelength_m", g.wavelength_m),
            ("geometry.antenna_spacing", g.antenna_spacing),
            ("geometry.ris_spacing", g.ris_spacing),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(field, "must be positive"));
            }
        }
        if !g.antenna_gain_dbi.is_finite() {
            return Err(invalid("geometry.antenna_gain_dbi", "must be finite"));
        }
        let c = &self.correlation;
        for (field, v) in [("correlation.bs_spread_deg", c.bs_spread_deg), ("correlation.user_spread_deg", c.user_spread_deg)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(field, "must be positive"));
            }
        }
        let l = &self.link;
        if !l.noise_dbm.is_finite() {
            return Err(invalid("link.noise_dbm", "must be finite"));
        }
        if l.snr_db.is_some() && l.power_dbm.is_some() {
            return Err(invalid("link.power_dbm", "give either link.snr_db or link.power_dbm, not both"));
        }
        if l.snr_db.is_some_and(|v| !v.is_finite()) {
            return Err(invalid("link.snr_db", "must be finite"));
        }
        if l.power_dbm.is_some_and(|v| !v.is_finite()) {
            return Err(invalid("link.power_dbm", "must be finite"));
        }
        if l.common_phase && sys.ris1_elements != sys.ris2_elements {
            return Err(invalid("link.common_phase", "needs ris1_elements == ris2_elements"));
        }
        if self.monte_carlo.trials == 0 {
            return Err(invalid("monte_carlo.trials", "must be at least 1"));
        }
        self.solver_settings()
            .validate()
            .map_err(|e| invalid("solver", e.to_string()))?;
        self.pso_settings()
            .validate()
            .map_err(|e| invalid("pso", e.to_string()))?;
        if !(self.ao.epsilon > 0.0) {
            return Err(invalid("ao.epsilon", "must be positive"));
        }
        if self.ao.max_iterations == 0 {
            return Err(invalid("ao.max_iterations", "must be at least 1"));
        }
        if self.ao.covariance_max_iterations == 0 {
            return Err(invalid("ao.covariance_max_iterations", "must be at least 1"));
        }
        self.geometry().validate(&self.dims())?;
        Ok(())
    }

    pub fn dims(&self) -> SystemDims {
        let s = &self.system;
        SystemDims {
            bs_antennas: s.bs_antennas,
            user_antennas: s.user_antennas,
            ris1_elements: s.ris1_elements,
            ris2_elements: s.ris2_elements,
        }
    }

    pub fn geometry(&self) -> NodeGeometry {
        let g = &self.geometry;
        let spacing = g.ris_spacing * g.wavelength_m;
        NodeGeometry {
            bs: point(g.bs),
            user: point(g.user),
            ris1: RisPanel::square(point(g.ris1), self.system.ris1_elements, spacing),
            ris2: RisPanel::square(point(g.ris2), self.system.ris2_elements, spacing),
            wavelength: g.wavelength_m,
            antenna_spacing: g.antenna_spacing,
            antenna_gain_dbi: g.antenna_gain_dbi,
        }
    }

    pub fn correlation_params(&self) -> CorrelationParams {
        let c = &self.correlation;
        CorrelationParams {
            bs: AngularProfile {
                mean_deg: c.bs_mean_deg,
                spread_deg: c.bs_spread_deg,
            },
            user: AngularProfile {
                mean_deg: c.user_mean_deg,
                spread_deg: c.user_spread_deg,
            },
            identity: c.identity,
        }
    }

    pub fn profile(&self) -> Result<CorrelationProfile, ScenarioError> {
        Ok(build_profile(&self.geometry(), &self.dims(), &self.correlation_params())?)
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.link.noise_dbm)
    }

    /// Gain `G` in `SNR = P·G/σ²`.
    pub fn reference_gain(&self) -> Result<f64, ScenarioError> {
        match self.link.snr_reference {
            SnrReference::Transmit => Ok(1.0),
            SnrReference::Path => {
                let geo = self.geometry();
                let g = geo.antenna_gain_dbi;
                let gain = |l| path_loss_linear(geo.link_distance(l), g, g);
                let via1 = gain(Link::Ris1User)? * gain(Link::BsRis1)?;
                let via2 = gain(Link::Ris2User)? * gain(Link::BsRis2)?;
                Ok(via1.max(via2))
            }
        }
    }

    /// Transmit power (W) that yields `snr_db`.
    pub fn power_for_snr(&self, snr_db: f64) -> Result<f64, ScenarioError> {
        Ok(db_to_linear(snr_db) * self.noise_watts() / self.reference_gain()?)
    }

    pub fn snr_db(&self) -> Result<f64, ScenarioError> {
        match (self.link.snr_db, self.link.power_dbm) {
            (Some(s), _) => Ok(s),
            (None, Some(p)) => Ok(crate::units::linear_to_db(
                dbm_to_watts(p) * self.reference_gain()? / self.noise_watts(),
            )),
            (None, None) => Ok(DEFAULT_SNR_DB),
        }
    }

    /// Transmit power budget in watts.
    pub fn power_watts(&self) -> Result<f64, ScenarioError> {
        match self.link.power_dbm {
            Some(p) => Ok(dbm_to_watts(p)),
            None => self.power_for_snr(self.snr_db()?),
        }
    }

    pub fn solver_settings(&self) -> SolverSettings {
        let s = &self.solver;
        SolverSettings {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            damping: s.damping,
            initial: s.initial,
            ..Default::default()
        }
    }

    pub fn pso_settings(&self) -> PsoSettings {
        let p = &self.pso;
        PsoSettings {
            swarm_size: p.swarm_size,
            iterations: p.iterations,
            inertia: p.inertia,
            cognitive: p.cognitive,
            social: p.social,
            velocity_clamp: p.velocity_clamp,
            seed: self.seeds.pso,
            restarts: p.restarts,
        }
    }

    pub fn ao_settings(&self) -> AoSettings {
        AoSettings {
            outer: LoopSettings {
                epsilon: self.ao.epsilon,
                max_iterations: self.ao.max_iterations,
            },
            covariance_loop: LoopSettings {
                epsilon: self.ao.epsilon,
                max_iterations: self.ao.covariance_max_iterations,
            },
            common_phase: self.link.common_phase,
            optimize_covariance: true,
            optimize_phases: true,
            seed: self.seeds.phases,
        }
    }

    /// Copy with both surfaces resized to `elements`.
    pub fn with_elements(&self, elements: usize) -> Self {
        let mut s = self.clone();
        s.system.ris1_elements = elements;
        s.system.ris2_elements = elements;
        s
    }

    /// Copy with every seed set to `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.seeds = SeedSection {
            channel: seed,
            phases: seed,
            pso: seed,
        };
        s
    }
}
