//! Subcommands and their exit codes.

use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};

use bramble::mission::{Mission, MissionError, RunOutcome, Summary};
use bramble::world::World;

use crate::output::{self, FLOWERS_FILE, MAP_FILE, METRICS_FILE, TRAJECTORY_FILE};
use crate::scenario::ScenarioFile;
use crate::{svg, vision_eval, CliError};

#[derive(Debug, Parser)]
#[command(name = "bramble", version, about = "Greenhouse pollination robot simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario to completion and write the session artifacts.
    Run(RunArgs),
    /// Train the flower detector on a labeled image set and report confusion counts.
    EvalVision(EvalVisionArgs),
    /// Generate a synthetic labeled image set.
    GenCorpus(GenCorpusArgs),
    /// Compute precision and recall from a file of confusion counts.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Overrides the seed in the scenario file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides mission.max_time, seconds of simulated time.
    #[arg(long)]
    pub max_time: Option<f64>,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub svg: bool,
    #[arg(long)]
    pub quiet: bool,
    /// Run this many consecutive seeds in parallel, each into `seed-<n>/`.
    #[arg(long, default_value_t = 1)]
    pub parallel_seeds: u64,
}

#[derive(Debug, Clone, Args)]
pub struct EvalVisionArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenCorpusArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub images: usize,
    /// How many of the images form the test split.
    #[arg(long, default_value_t = 10)]
    pub test: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// CSV file with a `tp,fp,tn,fn` header and one row of counts.
    #[arg(long)]
    pub confusion: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a command, printing diagnostics to standard error, and returns the
/// process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::EvalVision(args) => eval_vision(args),
        Command::GenCorpus(args) => gen_corpus(args),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bramble: {e}");
            e.exit_code()
        }
    }
}

fn mission_error(e: MissionError) -> CliError {
    match e {
        MissionError::InvalidConfig(_) => CliError::Validation(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

/// Builds and runs one session and writes its artifacts into `out_dir`.
/// Artifacts are written even when the session times out.
pub fn run_scenario(scenario: &ScenarioFile, out_dir: &Path, svg: bool) -> Result<(RunOutcome, Summary), CliError> {
    let mut world = World::build(scenario.world_config()).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut mission = Mission::new(&world, scenario.mission_config(), scenario.seed).map_err(mission_error)?;
    let outcome = mission.run(&mut world).map_err(mission_error)?;
    let summary = mission.summary(&world);
    output::write(out_dir, METRICS_FILE, &output::metrics_csv(&summary))?;
    output::write(out_dir, FLOWERS_FILE, &output::flowers_json(&mission, &world))?;
    output::write(out_dir, TRAJECTORY_FILE, &output::trajectory_csv(&mission))?;
    if svg {
        output::write(out_dir, MAP_FILE, &svg::render(&world, &mission))?;
    }
    Ok((outcome, summary))
}

fn run_one(scenario: &ScenarioFile, out_dir: &Path, args: &RunArgs) -> Result<(), CliError> {
    let (outcome, s) = run_scenario(scenario, out_dir, args.svg)?;
    if !args.quiet {
        println!(
            "seed {}: {:?} after {:.1} s, pollinated {}/{} ready, {:.2} m driven, {} collisions",
            scenario.seed, outcome, s.sim_time_s, s.pollinated, s.ready_total, s.distance_m, s.collisions
        );
    }
    match outcome {
        RunOutcome::Done => Ok(()),
        RunOutcome::TimedOut => Err(CliError::Runtime(format!(
            "seed {}: mission did not finish within {} s",
            scenario.seed, scenario.mission.max_time
        ))),
    }
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let mut scenario = ScenarioFile::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(t) = args.max_time {
        scenario.mission.max_time = t;
    }
    if args.parallel_seeds == 0 {
        return Err(CliError::Validation("--parallel-seeds must be at least 1".into()));
    }
    if args.parallel_seeds == 1 {
        return run_one(&scenario, &args.out_dir, args);
    }

    let results: Vec<Result<(), CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..args.parallel_seeds)
            .map(|k| {
                let mut sc = scenario.clone();
                sc.seed = scenario.seed + k;
                let dir = args.out_dir.join(format!("seed-{}", sc.seed));
                s.spawn(move || run_one(&sc, &dir, args))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(CliError::Runtime("worker panicked".into())))
            })
            .collect()
    });
    // Report every failure; the exit code is that of the worst one.
    let mut worst = None;
    for e in results.into_iter().filter_map(Result::err) {
        eprintln!("bramble: {e}");
        if worst.as_ref().is_none_or(|w: &CliError| e.exit_code() > w.exit_code()) {
            worst = Some(e);
        }
    }
    worst.map_or(Ok(()), Err)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn eval_vision(args: &EvalVisionArgs) -> Result<(), CliError> {
    let labels = vision_eval::read_labels(&args.labels)?;
    let counts = vision_eval::evaluate(&args.images, &labels)?;
    emit(&vision_eval::report_csv(&counts), args.out.as_deref())
}

pub fn gen_corpus(args: &GenCorpusArgs) -> Result<(), CliError> {
    let rows = vision_eval::generate_corpus(&args.out_dir, args.images, args.test, args.seed)?;
    eprintln!(
        "wrote {} images with {} labeled regions to {}",
        args.images,
        rows.len(),
        args.out_dir.display()
    );
    Ok(())
}

pub fn report(args: &ReportArgs) -> Result<(), CliError> {
    let counts = vision_eval::read_confusion(&args.confusion)?;
    emit(&vision_eval::report_csv(&counts), args.out.as_deref())
}
