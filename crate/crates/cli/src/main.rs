use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mie_core::runner::{self, CompareOptions, ExperimentConfig, Mode, Units};
use mie_core::MieError;

/// Measurement-induced entanglement: theory curves, XX/XXZ simulations and
/// comparisons.
#[derive(Parser)]
#[command(name = "mie", version, about)]
struct Cli {
    /// Print a commented configuration template and exit.
    #[arg(long)]
    emit_default_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Compact-boson MIE curves on the configured zeta grid.
    Theory(RunArgs),
    /// Monte Carlo (xx_mc) or exact (ed) simulation over a layout sweep.
    Simulate(RunArgs),
    /// Neel post-selection paired with Born and forced theory rows.
    Forced(RunArgs),
    /// Compare a numeric dataset against a theory dataset.
    Compare(CompareArgs),
    /// List the antipodal layouts of a sweep with their cross-ratios.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    units: Option<UnitArg>,
}

#[derive(Args)]
struct CompareArgs {
    theory: PathBuf,
    numeric: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra absolute tolerance in |diff| <= 2 stderr + allowance.
    #[arg(long, default_value_t = 0.0)]
    allowance: f64,
    /// Cross-ratios up to this value form the tail used for slope fits.
    #[arg(long, default_value_t = 1e-3)]
    tail_zeta_max: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long = "L")]
    sites: usize,
    #[arg(long)]
    min_measured: usize,
    #[arg(long)]
    max_measured: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Nats,
    Bits,
}

enum Failure {
    Usage(String),
    Runtime(MieError),
}

impl From<MieError> for Failure {
    fn from(e: MieError) -> Self {
        match e {
            MieError::Config(_) | MieError::Toml(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other),
        }
    }
}

fn load_config(args: &RunArgs, expected: &[Mode]) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(&args.config).map_err(|e| match e {
        MieError::Io(io) => Failure::Usage(format!("cannot read {}: {io}", args.config.display())),
        other => other.into(),
    })?;
    if !expected.contains(&cfg.mode) {
        return Err(Failure::Usage(format!(
            "config mode {:?} does not fit this subcommand (expected one of {expected:?})",
            cfg.mode
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_path = out.clone();
    }
    if let Some(u) = args.units {
        cfg.units = match u {
            UnitArg::Nats => Units::Nats,
            UnitArg::Bits => Units::Bits,
        };
    }
    if let Some(t) = args.threads {
        runner::init_threads(t)?;
    }
    Ok(cfg)
}

fn run_experiment(args: &RunArgs, expected: &[Mode]) -> Result<(), Failure> {
    let cfg = load_config(args, expected)?;
    let out = runner::run(&cfg)?;
    eprintln!(
        "wrote {} rows to {} (manifest {})",
        out.rows,
        out.dataset.display(),
        out.manifest.display()
    );
    Ok(())
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Theory(a) => run_experiment(&a, &[Mode::Theory]),
        Command::Simulate(a) => run_experiment(&a, &[Mode::XxMc, Mode::Ed]),
        Command::Forced(a) => run_experiment(&a, &[Mode::Forced]),
        Command::Compare(a) => {
            let options = CompareOptions {
                allowance: a.allowance,
                tail_zeta_max: a.tail_zeta_max,
            };
            let report = runner::compare(&a.theory, &a.numeric, options)?;
            let json = report.to_json()?;
            match a.out {
                Some(p) => std::fs::write(p, json + "\n").map_err(|e| Failure::Runtime(e.into()))?,
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Sweep(a) => {
            let pts = runner::generate_layout_sweep(a.sites, a.min_measured, a.max_measured, a.step)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            match a.out {
                Some(p) => {
                    let f = std::fs::File::create(p).map_err(|e| Failure::Runtime(e.into()))?;
                    runner::write_sweep(f, &pts)?;
                }
                None => runner::write_sweep(std::io::stdout().lock(), &pts)?,
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.emit_default_config {
        print!("{}", runner::DEFAULT_CONFIG_TEMPLATE);
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(1);
    };
    match execute(cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
