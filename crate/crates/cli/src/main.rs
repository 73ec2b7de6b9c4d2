use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dris::experiments::{
    benchmark_records, run_benchmarks, run_optimization_variants, run_sweep, run_validate, write_records,
    Method, SweepAxis, SweepSpec, DEFAULT_SNR_GRID, DEFAULT_THRESHOLD, DESK_ELEMENTS,
};
use dris::Scenario;
use dris_core::fixed_point::Rs2Factor;
use dris_core::nats_to_bits;
use dris_core::optimizer::AoOutcome;

#[derive(Parser)]
#[command(name = "dris", version, about = "Asymptotic rate analysis and design for double-RIS MIMO links")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML). Omit for the reference deployment.
    scenario: Option<PathBuf>,

    /// Overrides every seed in the scenario.
    #[arg(long)]
    seed: Option<u64>,

    /// Monte-Carlo trials (overrides the scenario).
    #[arg(long)]
    trials: Option<usize>,

    /// Elements per surface. Defaults to 16 unless --full-scale is given.
    #[arg(long, conflicts_with = "full_scale")]
    elements: Option<usize>,

    /// Keep the scenario's surface sizes.
    #[arg(long)]
    full_scale: bool,

    /// Output path for CSV results.
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Append a wall_ms column to CSV output.
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the normalized scenario with all defaults filled in.
    EchoConfig {
        scenario: Option<PathBuf>,
    },
    /// Compare the asymptotic rate with Monte-Carlo over an SNR grid.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated SNR grid in dB.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        snr: Option<Vec<f64>>,
        /// Largest accepted relative error.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Drop the inter-surface term from the RIS-2 equation (sensitivity probe).
        #[arg(long)]
        ris2_direct_only: bool,
    },
    /// Evaluate methods along one parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// snr, element-count, element-spacing or antenna-count.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
        /// Comma-separated subset of asymptotic, monte_carlo, optimized.
        #[arg(long, value_delimiter = ',', default_value = "asymptotic")]
        methods: Vec<Method>,
    },
    /// Jointly optimize the transmit covariance and the phases.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Also run covariance-only and phases-only optimization.
        #[arg(long)]
        variants: bool,
        /// Directory for the trace CSV and the Q / phase dumps.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Compare the five deployments.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Optimize each deployment as well.
        #[arg(long)]
        optimize: bool,
    },
}

fn load(common: &Common) -> Result<Scenario> {
    let mut s = match &common.scenario {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    if let Some(seed) = common.seed {
        s = s.with_seed(seed);
    }
    if let Some(t) = common.trials {
        s.monte_carlo.trials = t;
    }
    if !common.full_scale {
        s = s.with_elements(common.elements.unwrap_or(DESK_ELEMENTS));
    }
    s.validate()?;
    Ok(s)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn describe(s: &Scenario) -> Result<String> {
    Ok(format!(
        "M={} N={} L1={} L2={} snr={:.1} dB noise={} dBm scenario={}",
        s.system.bs_antennas,
        s.system.user_antennas,
        s.system.ris1_elements,
        s.system.ris2_elements,
        s.snr_db()?,
        s.link.noise_dbm,
        s.hash()
    ))
}

fn print_outcome(label: &str, o: &AoOutcome) {
    eprintln!(
        "{label:<16} {:>10.4} bits  ({} outer iterations)",
        nats_to_bits(o.rate),
        o.trace.records.len() - 1
    );
}

fn dump(dir: &Path, o: &AoOutcome, timing: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    o.trace.write_csv(BufWriter::new(File::create(dir.join("trace.csv"))?), timing)?;
    dris_core::io::write_matrix(BufWriter::new(File::create(dir.join("q.csv"))?), o.covariance.matrix())?;
    dris_core::io::write_phases(BufWriter::new(File::create(dir.join("phases.csv"))?), &o.phases)?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::EchoConfig { scenario } => {
            let s = match scenario {
                Some(p) => Scenario::load(&p)?,
                None => Scenario::default(),
            };
            print!("# scenario {}\n{}", s.hash(), s.to_toml());
            Ok(true)
        }
        Command::Validate {
            common,
            snr,
            threshold,
            ris2_direct_only,
        } => {
            let s = load(&common)?;
            eprintln!("{}", describe(&s)?);
            let grid = snr.unwrap_or_else(|| DEFAULT_SNR_GRID.to_vec());
            let factor = if ris2_direct_only {
                Rs2Factor::DirectOnly
            } else {
                Rs2Factor::AllOutgoing
            };
            let report = run_validate(&s, &grid, threshold, factor)?;
            report.write_table(io::stderr().lock())?;
            if common.output.is_some() {
                write_records(output(&common.output)?, &report.to_records(), common.timing)?;
            }
            Ok(report.all_passed())
        }
        Command::Sweep {
            common,
            axis,
            values,
            methods,
        } => {
            let s = load(&common)?;
            eprintln!("{}", describe(&s)?);
            let spec = SweepSpec { axis, values, methods };
            let records = run_sweep(&s, &spec).map_err(anyhow::Error::msg)?;
            write_records(output(&common.output)?, &records, common.timing)?;
            let failed = records.iter().filter(|r| !r.is_ok()).count();
            if failed > 0 {
                eprintln!("{failed} of {} points failed", records.len());
            }
            Ok(failed == 0)
        }
        Command::Optimize {
            common,
            variants,
            dump_dir,
        } => {
            let s = load(&common)?;
            eprintln!("{}", describe(&s)?);
            let joint = if variants {
                let c = run_optimization_variants(&s)?;
                eprintln!("{:<16} {:>10.4} bits", "baseline", nats_to_bits(c.baseline));
                print_outcome("covariance only", &c.covariance_only);
                print_outcome("phases only", &c.phases_only);
                c.joint
            } else {
                let profile = s.profile()?;
                dris::experiments::optimize(&s, &profile, s.power_watts()?, &s.ao_settings())?
            };
            print_outcome("joint", &joint);
            joint.trace.write_csv(output(&common.output)?, common.timing)?;
            if let Some(dir) = dump_dir {
                dump(&dir, &joint, common.timing)?;
            }
            Ok(true)
        }
        Command::Benchmark { common, optimize } => {
            let s = load(&common)?;
            eprintln!("{}", describe(&s)?);
            let results = run_benchmarks(&s, optimize)?;
            for r in &results {
                match r.optimized_nats {
                    Some(o) => eprintln!(
                        "{:<24} {:>10.4} bits  optimized {:>10.4} bits",
                        r.deployment.name(),
                        nats_to_bits(r.baseline_nats),
                        nats_to_bits(o)
                    ),
                    None => eprintln!("{:<24} {:>10.4} bits", r.deployment.name(), nats_to_bits(r.baseline_nats)),
                }
            }
            write_records(output(&common.output)?, &benchmark_records(&s, &results), common.timing)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
