//! Validation runs, parameter sweeps and deployment benchmarks.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use dris_core::channel::{CorrelationProfile, Link, PhaseConfig};
use dris_core::covariance::TransmitCovariance;
use dris_core::fixed_point::{asymptotic_rate, Rs2Factor};
use dris_core::monte_carlo::{ergodic_rate_mc, McEstimate};
use dris_core::nats_to_bits;
use dris_core::optimizer::{alternating_optimize, AoOutcome, AoSettings, Problem};
use rayon::prelude::*;

use crate::scenario::{Scenario, ScenarioError};

/// SNR grid (dB) of the validation run.
pub const DEFAULT_SNR_GRID: [f64; 7] = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
/// Largest accepted `|asymptotic − mc| / mc`.
pub const DEFAULT_THRESHOLD: f64 = 0.03;
/// RIS size used by the heavy commands unless the full-scale flag is given.
pub const DESK_ELEMENTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Asymptotic,
    MonteCarlo,
    Optimized,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Asymptotic => "asymptotic",
            Method::MonteCarlo => "monte_carlo",
            Method::Optimized => "optimized",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "asymptotic" => Ok(Method::Asymptotic),
            "monte_carlo" | "monte-carlo" | "mc" => Ok(Method::MonteCarlo),
            "optimized" => Ok(Method::Optimized),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// One evaluated point. `rate_nats` is NaN when `status` is not `ok`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub scenario_hash: String,
    pub axis: String,
    pub axis_value: f64,
    pub label: String,
    pub method: Method,
    pub rate_nats: f64,
    pub rate_bits: f64,
    pub std_error: Option<f64>,
    pub status: String,
    pub wall_ms: f64,
}

impl ResultRecord {
    fn new(scenario_hash: &str, axis: &str, axis_value: f64, label: &str, method: Method) -> Self {
        Self {
            scenario_hash: scenario_hash.to_string(),
            axis: axis.to_string(),
            axis_value,
            label: label.to_string(),
            method,
            rate_nats: f64::NAN,
            rate_bits: f64::NAN,
            std_error: None,
            status: "ok".into(),
            wall_ms: 0.0,
        }
    }

    fn set_rate(&mut self, nats: f64) {
        self.rate_nats = nats;
        self.rate_bits = nats_to_bits(nats);
    }

    fn fail(&mut self, err: impl fmt::Display) {
        self.status = format!("error: {err}").replace([',', '\n', '\r'], ";");
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub const CSV_HEADER: &str = "scenario_hash,axis,axis_value,label,method,rate_nats,rate_bits,std_error,status";

/// Writes records under [`CSV_HEADER`], plus a trailing `wall_ms` column when
/// `with_timing` is set. Without timing the output is a pure function of the
/// inputs and seeds.
pub fn write_records<W: Write>(mut out: W, records: &[ResultRecord], with_timing: bool) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}{}", if with_timing { ",wall_ms" } else { "" })?;
    for r in records {
        let se = r.std_error.map(|v| format!("{v:.12e}")).unwrap_or_default();
        write!(
            out,
            "{},{},{},{},{},{:.12e},{:.12e},{},{}",
            r.scenario_hash, r.axis, r.axis_value, r.label, r.method, r.rate_nats, r.rate_bits, se, r.status
        )?;
        if with_timing {
            write!(out, ",{:.3}", r.wall_ms)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Parses a file written by [`write_records`].
pub fn read_records<R: BufRead>(input: R) -> Result<Vec<ResultRecord>, String> {
    let mut lines = input.lines();
    let header = lines.next().ok_or("empty file")?.map_err(|e| e.to_string())?;
    let with_timing = match header.as_str() {
        h if h == CSV_HEADER => false,
        h if h.strip_suffix(",wall_ms") == Some(CSV_HEADER) => true,
        other => return Err(format!("unexpected header `{other}`")),
    };
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let f: Vec<&str> = line.split(',').collect();
        let expected = if with_timing { 10 } else { 9 };
        if f.len() != expected {
            return Err(format!("row {}: expected {expected} fields, found {}", i + 1, f.len()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1));
        out.push(ResultRecord {
            scenario_hash: f[0].into(),
            axis: f[1].into(),
            axis_value: num(f[2])?,
            label: f[3].into(),
            method: f[4].parse()?,
            rate_nats: num(f[5])?,
            rate_bits: num(f[6])?,
            std_error: if f[7].is_empty() { None } else { Some(num(f[7])?) },
            status: f[8].into(),
            wall_ms: if with_timing { num(f[9])? } else { 0.0 },
        });
    }
    Ok(out)
}

fn identity_phases(scenario: &Scenario) -> PhaseConfig {
    let d = scenario.dims();
    PhaseConfig::zeros(d.ris1_elements, d.ris2_elements)
}

/// Asymptotic rate (nats) at `(P/M)·I` and zero phases.
pub fn baseline_rate(scenario: &Scenario, profile: &CorrelationProfile, power: f64) -> Result<f64, ScenarioError> {
    let q = TransmitCovariance::isotropic(scenario.system.bs_antennas, power)?;
    let phases = identity_phases(scenario);
    Ok(asymptotic_rate(profile, &q, &phases, scenario.noise_watts(), &scenario.solver_settings())?.nats())
}

/// Monte-Carlo rate at `(P/M)·I` and zero phases, seeded by `seeds.channel`.
pub fn baseline_mc(
    scenario: &Scenario,
    profile: &CorrelationProfile,
    power: f64,
    trials: usize,
) -> Result<McEstimate, ScenarioError> {
    let q = TransmitCovariance::isotropic(scenario.system.bs_antennas, power)?;
    Ok(ergodic_rate_mc(
        profile,
        &q,
        &identity_phases(scenario),
        scenario.noise_watts(),
        trials,
        scenario.seeds.channel,
    )?)
}

pub fn optimize(scenario: &Scenario, profile: &CorrelationProfile, power: f64, ao: &AoSettings) -> Result<AoOutcome, ScenarioError> {
    let problem = Problem::new(profile, scenario.noise_watts(), power, scenario.solver_settings())?;
    Ok(alternating_optimize(&problem, &scenario.pso_settings(), ao)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationPoint {
    pub snr_db: f64,
    pub asymptotic: f64,
    pub mc_mean: f64,
    pub mc_std_error: f64,
    pub relative_error: f64,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub scenario_hash: String,
    pub threshold: f64,
    pub trials: usize,
    pub points: Vec<ValidationPoint>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.points.iter().all(|p| p.passed)
    }

    pub fn worst_error(&self) -> f64 {
        self.points.iter().map(|p| p.relative_error).fold(0.0, f64::max)
    }

    pub fn to_records(&self) -> Vec<ResultRecord> {
        let mut out = Vec::new();
        for p in &self.points {
            let mut a = ResultRecord::new(&self.scenario_hash, "snr_db", p.snr_db, "", Method::Asymptotic);
            let mut m = ResultRecord::new(&self.scenario_hash, "snr_db", p.snr_db, "", Method::MonteCarlo);
            match &p.error {
                Some(e) => {
                    a.fail(e);
                    m.fail(e);
                }
                None => {
                    a.set_rate(p.asymptotic);
                    m.set_rate(p.mc_mean);
                    m.std_error = Some(p.mc_std_error);
                }
            }
            out.push(a);
            out.push(m);
        }
        out
    }

    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "scenario {}  trials {}  threshold {:.1}%", self.scenario_hash, self.trials, self.threshold * 100.0)?;
        writeln!(out, "{:>8} {:>12} {:>12} {:>10} {:>9}  result", "snr_db", "asym_bits", "mc_bits", "mc_se", "rel_err")?;
        for p in &self.points {
            match &p.error {
                Some(e) => writeln!(out, "{:>8.1}  FAIL ({e})", p.snr_db)?,
                None => writeln!(
                    out,
                    "{:>8.1} {:>12.5} {:>12.5} {:>10.5} {:>8.3}%  {}",
                    p.snr_db,
                    nats_to_bits(p.asymptotic),
                    nats_to_bits(p.mc_mean),
                    nats_to_bits(p.mc_std_error),
                    p.relative_error * 100.0,
                    if p.passed { "PASS" } else { "FAIL" }
                )?,
            }
        }
        Ok(())
    }
}

/// `|a − m| / m`, with `0/0 = 0`.
pub fn relative_error(asymptotic: f64, mc: f64) -> f64 {
    let diff = (asymptotic - mc).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / mc.abs()
    }
}

/// Compares the asymptotic and Monte-Carlo rates at `(P/M)·I`, zero phases,
/// over `snr_grid`. Every point reuses `seeds.channel`, so the Monte-Carlo
/// curve is drawn with common random numbers.
pub fn run_validate(
    scenario: &Scenario,
    snr_grid: &[f64],
    threshold: f64,
    ris2_factor: Rs2Factor,
) -> Result<ValidationReport, ScenarioError> {
    let profile = scenario.profile()?;
    let trials = scenario.monte_carlo.trials;
    let solver = dris_core::fixed_point::SolverSettings {
        ris2_factor,
        ..scenario.solver_settings()
    };
    let points = snr_grid
        .par_iter()
        .map(|&snr_db| {
            let eval = || -> Result<(f64, McEstimate), ScenarioError> {
                let power = scenario.power_for_snr(snr_db)?;
                let q = TransmitCovariance::isotropic(scenario.system.bs_antennas, power)?;
                let phases = identity_phases(scenario);
                let asym = asymptotic_rate(&profile, &q, &phases, scenario.noise_watts(), &solver)?.nats();
                let mc = baseline_mc(scenario, &profile, power, trials)?;
                Ok((asym, mc))
            };
            match eval() {
                Ok((asym, mc)) => {
                    let rel = relative_error(asym, mc.mean);
                    ValidationPoint {
                        snr_db,
                        asymptotic: asym,
                        mc_mean: mc.mean,
                        mc_std_error: mc.std_error,
                        relative_error: rel,
                        passed: rel <= threshold,
                        error: None,
                    }
                }
                Err(e) => ValidationPoint {
                    snr_db,
                    asymptotic: f64::NAN,
                    mc_mean: f64::NAN,
                    mc_std_error: f64::NAN,
                    relative_error: f64::INFINITY,
                    passed: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(ValidationReport {
        scenario_hash: scenario.hash(),
        threshold,
        trials,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// SNR in dB.
    Snr,
    /// Elements per surface (both surfaces).
    ElementCount,
    /// RIS element spacing in wavelengths.
    ElementSpacing,
    /// BS antennas `M`; the user gets `max(1, M/2)` antennas.
    AntennaCount,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr_db",
            SweepAxis::ElementCount => "element_count",
            SweepAxis::ElementSpacing => "element_spacing",
            SweepAxis::AntennaCount => "antenna_count",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "snr" | "snr_db" => Ok(SweepAxis::Snr),
            "element_count" => Ok(SweepAxis::ElementCount),
            "element_spacing" => Ok(SweepAxis::ElementSpacing),
            "antenna_count" => Ok(SweepAxis::AntennaCount),
            other => Err(format!("unknown sweep axis `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.values.is_empty() {
            return Err("sweep grid is empty".into());
        }
        if self.methods.is_empty() {
            return Err("no methods requested".into());
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err("sweep grid must be strictly monotone".into());
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err("sweep grid values must be finite".into());
        }
        if matches!(self.axis, SweepAxis::ElementCount | SweepAxis::AntennaCount)
            && self.values.iter().any(|&v| v < 1.0 || v.fract() != 0.0)
        {
            return Err(format!("{} values must be positive integers", self.axis.name()));
        }
        if self.axis == SweepAxis::ElementSpacing && self.values.iter().any(|&v| v <= 0.0) {
            return Err("element spacing must be positive".into());
        }
        Ok(())
    }
}

/// Scenario and SNR for one grid point.
pub fn sweep_point(scenario: &Scenario, axis: SweepAxis, value: f64) -> Result<(Scenario, f64), ScenarioError> {
    let mut s = scenario.clone();
    let mut snr = scenario.snr_db()?;
    match axis {
        SweepAxis::Snr => {
            snr = value;
            s.link.snr_db = Some(value);
            s.link.power_dbm = None;
        }
        SweepAxis::ElementCount => s = s.with_elements(value as usize),
        SweepAxis::ElementSpacing => s.geometry.ris_spacing = value,
        SweepAxis::AntennaCount => {
            s.system.bs_antennas = value as usize;
            s.system.user_antennas = (value as usize / 2).max(1);
        }
    }
    s.validate()?;
    Ok((s, snr))
}

/// Evaluates every method at every grid point. Points run in parallel but the
/// output keeps grid order; failures are recorded in the `status` column.
pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec) -> Result<Vec<ResultRecord>, String> {
    spec.validate()?;
    let hash = scenario.hash();
    let rows: Vec<Vec<ResultRecord>> = spec
        .values
        .par_iter()
        .map(|&value| {
            let point = sweep_point(scenario, spec.axis, value).and_then(|(s, snr)| {
                let profile = s.profile()?;
                let power = s.power_for_snr(snr)?;
                Ok((s, profile, power))
            });
            spec.methods
                .iter()
                .map(|&method| {
                    let mut rec = ResultRecord::new(&hash, spec.axis.name(), value, "", method);
                    let clock = Instant::now();
                    let result = point.as_ref().map_err(|e| e.to_string()).and_then(|(s, profile, power)| {
                        match method {
                            Method::Asymptotic => baseline_rate(s, profile, *power).map(|r| (r, None)),
                            Method::MonteCarlo => baseline_mc(s, profile, *power, s.monte_carlo.trials)
                                .map(|m| (m.mean, Some(m.std_error))),
                            Method::Optimized => optimize(s, profile, *power, &s.ao_settings()).map(|o| (o.rate, None)),
                        }
                        .map_err(|e| e.to_string())
                    });
                    match result {
                        Ok((rate, se)) => {
                            rec.set_rate(rate);
                            rec.std_error = se;
                        }
                        Err(e) => rec.fail(e),
                    }
                    rec.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
                    rec
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deployment {
    /// Both surfaces, single and double reflection.
    Full,
    /// Both surfaces, no inter-surface link.
    SingleReflection,
    Ris1Only,
    Ris2Only,
    /// Only the BS → RIS2 → RIS1 → user path.
    DoubleReflectionOnly,
}

impl Deployment {
    pub const ALL: [Deployment; 5] = [
        Deployment::Full,
        Deployment::SingleReflection,
        Deployment::Ris1Only,
        Deployment::Ris2Only,
        Deployment::DoubleReflectionOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Deployment::Full => "full_double_ris",
            Deployment::SingleReflection => "single_reflection_only",
            Deployment::Ris1Only => "ris1_only",
            Deployment::Ris2Only => "ris2_only",
            Deployment::DoubleReflectionOnly => "double_reflection_only",
        }
    }

    /// Links whose statistics are zeroed.
    pub fn removed_links(self) -> &'static [Link] {
        match self {
            Deployment::Full => &[],
            Deployment::SingleReflection => &[Link::InterRis],
            Deployment::Ris1Only => &[Link::Ris2User, Link::InterRis, Link::BsRis2],
            Deployment::Ris2Only => &[Link::Ris1User, Link::InterRis, Link::BsRis1],
            Deployment::DoubleReflectionOnly => &[Link::Ris2User, Link::BsRis1],
        }
    }

    pub fn apply(self, profile: &CorrelationProfile) -> CorrelationProfile {
        profile.with_links_removed(self.removed_links())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentResult {
    pub deployment: Deployment,
    pub baseline_nats: f64,
    pub optimized_nats: Option<f64>,
}

/// Evaluates the five deployments at the scenario's power, each at
/// `(P/M)·I` with zero phases and, with `optimize_each`, after alternating
/// optimization.
pub fn run_benchmarks(scenario: &Scenario, optimize_each: bool) -> Result<Vec<DeploymentResult>, ScenarioError> {
    let profile = scenario.profile()?;
    let power = scenario.power_watts()?;
    Deployment::ALL
        .par_iter()
        .map(|&d| {
            let p = d.apply(&profile);
            let baseline_nats = baseline_rate(scenario, &p, power)?;
            let optimized_nats = if optimize_each {
                Some(optimize(scenario, &p, power, &scenario.ao_settings())?.rate)
            } else {
                None
            };
            Ok(DeploymentResult {
                deployment: d,
                baseline_nats,
                optimized_nats,
            })
        })
        .collect()
}

pub fn benchmark_records(scenario: &Scenario, results: &[DeploymentResult]) -> Vec<ResultRecord> {
    let hash = scenario.hash();
    let mut out = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let mut a = ResultRecord::new(&hash, "deployment", i as f64, r.deployment.name(), Method::Asymptotic);
        a.set_rate(r.baseline_nats);
        out.push(a);
        if let Some(o) = r.optimized_nats {
            let mut b = ResultRecord::new(&hash, "deployment", i as f64, r.deployment.name(), Method::Optimized);
            b.set_rate(o);
            out.push(b);
        }
    }
    out
}

/// Rates of the four design variants on one scenario, all from the same
/// random initial phases.
#[derive(Debug, Clone)]
pub struct OptimizationComparison {
    /// `(P/M)·I` with the random initial phases.
    pub baseline: f64,
    pub covariance_only: AoOutcome,
    pub phases_only: AoOutcome,
    pub joint: AoOutcome,
}

pub fn run_optimization_variants(scenario: &Scenario) -> Result<OptimizationComparison, ScenarioError> {
    let profile = scenario.profile()?;
    let power = scenario.power_watts()?;
    let base = scenario.ao_settings();
    let variant = |q: bool, p: bool| AoSettings {
        optimize_covariance: q,
        optimize_phases: p,
        ..base
    };
    let joint = optimize(scenario, &profile, power, &variant(true, true))?;
    let covariance_only = optimize(scenario, &profile, power, &variant(true, false))?;
    let phases_only = optimize(scenario, &profile, power, &variant(false, true))?;
    Ok(OptimizationComparison {
        baseline: joint.trace.records[0].rate_nats,
        covariance_only,
        phases_only,
        joint,
    })
}
