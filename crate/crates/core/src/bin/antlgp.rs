use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use antlgp::colony::{self, ColonyConfig};
use antlgp::config::RunConfig;
use antlgp::lgp::{evolve, Program};
use antlgp::mining::{self, Granularity, Schema, INPUT_NAMES};
use antlgp::pipeline::{self, validation_split};
use antlgp::{Error, Result};

/// Ant-colony clustering and linear genetic programming for traffic
/// forecasting.
#[derive(Parser, Debug)]
#[command(name = "antlgp", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Configuration override, e.g. `--set colony.t_max=1000`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write synthetic fixtures.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Cluster an item file with the ant colony.
    Cluster(ClusterArgs),
    /// Evolve a forecaster on a cases file.
    Evolve(EvolveArgs),
    /// Run the full pipeline on a traffic file.
    Pipeline(PipelineArgs),
    /// Score a saved program on train and test cases.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum SynthKind {
    /// Labelled Gaussian blobs.
    Items {
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 200)]
        per_class: usize,
        #[arg(long, default_value_t = 0.05)]
        spread: f64,
        #[arg(long, default_value = "items.csv")]
        output: String,
    },
    /// Weekly-periodic web traffic.
    Traffic {
        #[arg(long, default_value_t = 5)]
        weeks: usize,
        #[arg(long, value_enum, default_value_t = GranularityArg::Hourly)]
        granularity: GranularityArg,
        /// Noise standard deviation relative to the base request level.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value = "traffic.csv")]
        output: String,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GranularityArg {
    Hourly,
    Daily,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    /// Item CSV (`item_id,label,f0,...`).
    items: PathBuf,
    #[arg(long)]
    t_max: Option<u64>,
    #[arg(long)]
    snapshot_every: Option<u64>,
    /// Independent runs with seeds `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 1)]
    replicates: u64,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    /// Cases CSV (input columns, then `target`).
    cases: PathBuf,
    /// Validation cases; defaults to the tail of the training cases.
    #[arg(long)]
    validation: Option<PathBuf>,
    #[arg(long)]
    max_tournaments: Option<u64>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Traffic CSV (`index,requests,bytes[,label]`).
    traffic: PathBuf,
    /// Ablation: skip clustering and feed a constant cluster input.
    #[arg(long)]
    no_cluster: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    program: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Input column used as the persistence forecast.
    #[arg(long, default_value = "requests")]
    persistence_column: String,
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{o}` is not KEY=VALUE")))?;
        config.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn cmd_synth(cli: &Cli, config: &RunConfig, kind: &SynthKind) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.synth_seed());
    match kind {
        SynthKind::Items {
            classes,
            per_class,
            spread,
            output,
        } => {
            let items = mining::synth_gaussian_classes(*classes, *per_class, *spread, &mut rng)?;
            write_file(&cli.out.join(output), mining::items_to_csv(&items))
        }
        SynthKind::Traffic {
            weeks,
            granularity,
            noise,
            output,
        } => {
            let g = match granularity {
                GranularityArg::Hourly => Granularity::Hourly,
                GranularityArg::Daily => Granularity::Daily,
            };
            let data = mining::synth_traffic(*weeks, g, *noise, &mut rng)?;
            write_file(&cli.out.join(output), data.to_csv())
        }
    }
}

fn write_simulation(dir: &Path, sim: &colony::SimulationResult, link_radius: usize) -> Result<()> {
    let assignment = colony::extract_clusters(&sim.habitat, link_radius)?;
    write_file(&dir.join("assignment.csv"), assignment.to_csv())?;
    write_file(&dir.join("entropy.csv"), sim.entropy_csv())?;
    for snap in &sim.snapshots {
        let stem = dir.join("snapshots").join(format!("step_{:010}", snap.step));
        write_file(&stem.with_extension("csv"), &snap.csv)?;
        write_file(&stem.with_extension("pgm"), &snap.pheromone_pgm)?;
    }
    Ok(())
}

fn cmd_cluster(cli: &Cli, config: &mut RunConfig, args: &ClusterArgs) -> Result<()> {
    let items = mining::load_items_csv(&args.items)?;
    if items.is_empty() {
        return Err(Error::Config(format!("{}: no items to cluster", args.items.display())));
    }
    if let Some(t) = args.t_max {
        config.colony.t_max = t;
    }
    if let Some(s) = args.snapshot_every {
        config.colony.snapshot_every = Some(s);
    }
    if args.replicates == 0 {
        return Err(Error::Config("replicates must be positive".into()));
    }
    let runs: Vec<(PathBuf, ColonyConfig)> = (0..args.replicates)
        .map(|k| {
            let mut c = config.clone();
            c.seed = config.seed.wrapping_add(k);
            let dir = if args.replicates == 1 {
                cli.out.clone()
            } else {
                cli.out.join(format!("replicate_{k}"))
            };
            (dir, c.colony_config(items.len()))
        })
        .collect();
    runs.par_iter().try_for_each(|(dir, cc)| {
        let sim = colony::run(cc, &items)?;
        write_simulation(dir, &sim, config.colony.link_radius)
    })
}

fn cmd_evolve(cli: &Cli, config: &mut RunConfig, args: &EvolveArgs) -> Result<()> {
    if let Some(t) = args.max_tournaments {
        config.evolution.max_tournaments = t;
    }
    let (_, cases) = mining::load_cases_csv(&args.cases)?;
    let (fit, validation) = match &args.validation {
        Some(path) => (cases, mining::load_cases_csv(path)?.1),
        None => validation_split(&cases, config.mining.validation_fraction)?,
    };
    let outcome = evolve(&config.evolution_config(), &fit, &validation)?;
    write_file(&cli.out.join("history.csv"), outcome.history.to_csv())?;
    write_file(&cli.out.join("best_program.txt"), outcome.best.to_text())
}

fn cmd_pipeline(cli: &Cli, config: &mut RunConfig, args: &PipelineArgs) -> Result<()> {
    if args.no_cluster {
        config.mining.use_clusters = false;
    }
    let raw = mining::load_csv(&args.traffic, Schema::Any)?;
    let out = pipeline::run(config, &raw)?;
    if let Some(sim) = &out.simulation {
        write_simulation(&cli.out, sim, config.colony.link_radius)?;
    }
    write_file(&cli.out.join("cases.csv"), mining::cases_to_csv(&out.cases.cases, &INPUT_NAMES))?;
    write_file(&cli.out.join("history.csv"), out.evolution.history.to_csv())?;
    write_file(&cli.out.join("best_program.txt"), out.evolution.best.to_text())?;
    let json = out.report.to_json();
    write_file(&cli.out.join("report.json"), &json)?;
    print!("{json}");
    Ok(())
}

fn cmd_report(cli: &Cli, config: &RunConfig, args: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.program).map_err(|e| io_error(&args.program, e))?;
    let program = Program::parse(&text)?;
    let (names, train) = mining::load_cases_csv(&args.train)?;
    let (_, test) = mining::load_cases_csv(&args.test)?;
    let column = names
        .iter()
        .position(|n| *n == args.persistence_column)
        .ok_or_else(|| Error::Config(format!("no input column `{}`", args.persistence_column)))?;
    let mut report = mining::report(&program, &train, &test, column)?;
    report.seed = config.seed;
    report.config_digest = config.digest();
    let json = report.to_json();
    write_file(&cli.out.join("report.json"), &json)?;
    print!("{json}");
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let mut config = load_config(cli)?;
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("--jobs: {e}")))?;
    }
    match &cli.command {
        Command::Synth { kind } => cmd_synth(cli, &config, kind),
        Command::Cluster(args) => cmd_cluster(cli, &mut config, args),
        Command::Evolve(args) => cmd_evolve(cli, &mut config, args),
        Command::Pipeline(args) => cmd_pipeline(cli, &mut config, args),
        Command::Report(args) => cmd_report(cli, &config, args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("antlgp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
