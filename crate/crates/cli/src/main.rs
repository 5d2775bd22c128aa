use std::path::PathBuf;
use std::process::ExitCode;

use arrayloc::model::validate_scenario;
use arrayloc_cli::config::{load_scenario, Experiment, ExperimentConfig};
use arrayloc_cli::experiments::{self, Variant};
use arrayloc_cli::table::{emit_csv, Cell, ResultTable};
use arrayloc_cli::{suite, CliError};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "arrayloc",
    version,
    about = "Array localization accuracy limits and geometry studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Closed form used for the position EFIM.
    #[arg(long, global = true, value_enum, default_value_t = Variant::Auto)]
    mode: Variant,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Position EFIM and SPEB of one scenario.
    Point,
    /// Root SPEB over a grid of agent positions.
    Grid,
    /// Root SPEB against array orientation, known and unknown.
    SweepOrientation,
    /// Monte Carlo over random anchor directions.
    GeometryMc,
    /// ULA against UCA over orientation.
    CompareArrays,
    /// Anchor bearings minimizing the SPEB.
    OptimizeAnchors,
    /// Rank requirements on anchors and antennas.
    RankTable,
    /// Closed forms against the numerical waveform oracle.
    OracleCheck,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Point => Experiment::Point,
            Command::Grid => Experiment::Grid,
            Command::SweepOrientation => Experiment::OrientationSweep,
            Command::GeometryMc => Experiment::GeometryMc,
            Command::CompareArrays => Experiment::ArrayCompare,
            Command::OptimizeAnchors => Experiment::OptimizeAnchors,
            Command::RankTable => Experiment::RankTable,
            Command::OracleCheck => Experiment::OracleCheck,
        }
    }
}

enum Failure {
    Cli(CliError),
    Checks(usize),
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure::Cli(e)
    }
}

fn failed_checks(t: &ResultTable) -> usize {
    let Some(i) = t.column("pass") else { return 0 };
    t.rows
        .iter()
        .filter(|r| r[i] == Cell::Text("false".into()))
        .count()
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let wanted = cli.command.experiment();
    let cfg = match &cli.config {
        Some(p) => load_scenario(p)?,
        None if matches!(wanted, Experiment::OracleCheck | Experiment::RankTable) => {
            ExperimentConfig::default()
        }
        None => return Err(CliError::Config(format!("{} needs --config", wanted.name())).into()),
    };
    if let Some(e) = cfg.experiment {
        if e != wanted {
            return Err(CliError::Config(format!(
                "config is for `{}`, not `{}`",
                e.name(),
                wanted.name()
            ))
            .into());
        }
    }
    if let Some(s) = &cfg.scenario {
        if !s.anchors.is_empty() {
            for d in validate_scenario(s).map_err(CliError::from)? {
                if !d.ok {
                    eprintln!("warning: {} = {:.6e} {}", d.check, d.value, d.note);
                }
            }
        }
    }
    let table = match cli.command {
        Command::Point => experiments::point(&cfg, cli.mode)?,
        Command::Grid => experiments::run_grid(&cfg, cli.mode)?,
        Command::SweepOrientation => experiments::sweep_orientation(&cfg, cli.mode)?,
        Command::GeometryMc => experiments::monte_carlo_geometry(&cfg, cli.seed)?,
        Command::CompareArrays => experiments::compare_arrays(&cfg, cli.mode)?,
        Command::OptimizeAnchors => experiments::optimize_anchors(&cfg, cli.seed)?,
        Command::RankTable => experiments::rank_table(&cfg, cli.seed)?,
        Command::OracleCheck => suite::to_table(&suite::run(cfg.oracle_scenarios.as_deref())?),
    };
    emit_csv(&table, cli.out.as_deref()).map_err(CliError::from)?;
    match failed_checks(&table) {
        0 => Ok(()),
        n => Err(Failure::Checks(n)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Cli(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Checks(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(2)
        }
    }
}
