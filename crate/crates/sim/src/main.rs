use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;

use adaptutor_core::fixtures;
use adaptutor_core::{CoursePack, Instrument, LearningStyle, Rulebook};
use adaptutor_sim::{Course, ExperimentConfig, Policy, run_experiment};

#[derive(Debug, Parser)]
#[command(name = "adaptutor-sim", version, about = "Compare variant policies on simulated learners")]
struct Args {
    #[arg(long)]
    pack: PathBuf,
    #[arg(long)]
    rules: PathBuf,
    #[arg(long, default_value_t = 200)]
    population: usize,
    /// Correctness boost from studying the learner's own style.
    #[arg(long, default_value_t = 0.3)]
    sensitivity: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Where the JSON report goes.
    #[arg(long)]
    out: PathBuf,
    /// Half-width of the uniform noise added to each answer probability.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Style shown by the fixed policy.
    #[arg(long, default_value = "SS")]
    fixed_style: LearningStyle,
    /// Questionnaire; the bundled demo instrument when absent.
    #[arg(long)]
    instrument: Option<PathBuf>,
}

fn load<T, E: std::fmt::Display>(path: &Path, parse: impl Fn(&str) -> Result<T, E>) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(args: Args) -> Result<(), String> {
    if !(0.0..=1.0).contains(&args.sensitivity) {
        return Err(format!("--sensitivity must lie in [0, 1], got {}", args.sensitivity));
    }
    if args.noise < 0.0 {
        return Err(format!("--noise must not be negative, got {}", args.noise));
    }
    let instrument = match &args.instrument {
        Some(path) => load(path, Instrument::from_json)?,
        None => fixtures::demo_instrument().expect("bundled instrument is valid"),
    };
    let course = Course {
        pack: Arc::new(load(&args.pack, CoursePack::from_json)?),
        rules: Arc::new(load(&args.rules, Rulebook::from_json)?),
        instrument: Arc::new(instrument),
    };
    let mut config = ExperimentConfig::new(args.population, args.sensitivity, args.seed);
    config.population.noise = args.noise;
    for policy in &mut config.policies {
        if let Policy::Fixed(style) = policy {
            *style = args.fixed_style;
        }
    }
    let report = run_experiment(&course, &config).map_err(|e| e.to_string())?;
    std::fs::write(&args.out, report.to_json() + "\n")
        .map_err(|e| format!("{}: {e}", args.out.display()))?;
    print!("{}", report.summary());
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("adaptutor-sim: {e}");
            ExitCode::FAILURE
        }
    }
}
