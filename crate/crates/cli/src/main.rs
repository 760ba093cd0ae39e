//! `cbdt`: train, benchmark and explain causal boosted decision trees.
//!
//! Exit codes: 0 success, 2 invalid input (usage, configuration, data
//! layout), 3 runtime failure (I/O), 4 numerical failure (divergence,
//! undefined metric).

mod commands;
mod config;
mod output;
mod plots;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use cbdt::experiment::{AblationConfig, BenchmarkConfig, DataSource, SensitivityConfig};
use cbdt::dataset::SyntheticSpec;
use cbdt::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use toml::Value;

use crate::commands::{GenerateConfig, Learner, RulesConfig, TrainConfig};
use crate::config::Sources;

/// Invalid command line or configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "cbdt", version, about = "Causal boosted decision trees for treatment effect estimation")]
#[command(after_help = "Configuration precedence (later wins): built-in defaults, the command's table in \
--config, --set assignments in order, dedicated flags.\n\nOutputs go to --output, else the command's \
output_dir, else $CBDT_OUTPUT_ROOT/<command>, else ./cbdt-output/<command>.\n\nExit codes: 0 success, \
2 invalid input, 3 runtime failure, 4 numerical failure.")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file with one table per command.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Override a field of the command's table, e.g. `booster.num_rounds=50`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    assignments: Vec<String>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Smooth heterogeneous effect (the generator's defaults).
    Smooth,
    /// Effect 0 below x1 = 0.5 and 2 above, low noise.
    Step,
    /// Effect 2 everywhere.
    Constant,
    /// IHDP replicates: files from $IHDP_DIR when set, simulated otherwise.
    Ihdp,
}

impl Preset {
    fn source(self) -> DataSource {
        match self {
            Preset::Smooth => DataSource::Synthetic(SyntheticSpec::default()),
            Preset::Step => DataSource::Synthetic(SyntheticSpec::step_preset()),
            Preset::Constant => DataSource::Synthetic(SyntheticSpec::constant_preset()),
            Preset::Ihdp => DataSource::ihdp_from_env(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and save it with its training trace.
    Train {
        /// Training data in the canonical CSV layout.
        #[arg(long, value_name = "CSV", conflicts_with = "preset")]
        data: Option<PathBuf>,
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long, value_enum)]
        learner: Option<LearnerArg>,
        /// Boosting rounds.
        #[arg(long)]
        rounds: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare CBDT with meta-learners over several seeded runs.
    Benchmark {
        /// Comma-separated run seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Comma-separated methods: cbdt, cbdt_oracle, s, t, x, dr.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
    },
    /// Full model against variants without the variance term, the ATE term
    /// and the dynamic schedule.
    Ablate {
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Grid over lambda, alpha and eta.
    Sensitivity {
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Extract IF-THEN effect rules from a saved or freshly trained model.
    Rules {
        /// Saved model; a CBDT model is trained on the data when omitted.
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        #[arg(long, value_name = "CSV", conflicts_with = "preset")]
        data: Option<PathBuf>,
        #[arg(long)]
        preset: Option<Preset>,
        /// Depth of the surrogate tree.
        #[arg(long)]
        depth: Option<u64>,
    },
    /// Write a dataset in the canonical CSV layout.
    GenerateData {
        #[arg(long)]
        preset: Option<Preset>,
        /// Rows (synthetic sources only).
        #[arg(long)]
        n: Option<u64>,
        /// Seed (synthetic sources only).
        #[arg(long)]
        seed: Option<u64>,
        /// IHDP replicate number.
        #[arg(long)]
        replicate: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnerArg {
    Cbdt,
    S,
    T,
    X,
    Dr,
}

impl From<LearnerArg> for Learner {
    fn from(l: LearnerArg) -> Self {
        match l {
            LearnerArg::Cbdt => Learner::Cbdt,
            LearnerArg::S => Learner::S,
            LearnerArg::T => Learner::T,
            LearnerArg::X => Learner::X,
            LearnerArg::Dr => Learner::Dr,
        }
    }
}

fn int(v: u64) -> Result<Value> {
    Ok(Value::Integer(i64::try_from(v).map_err(|_| UsageError(format!("{v} is too large")))?))
}

fn ints(v: &[u64]) -> Result<Value> {
    Ok(Value::Array(v.iter().map(|x| int(*x)).collect::<Result<_>>()?))
}

fn value_of<T: serde::Serialize>(v: &T) -> Result<Value> {
    Ok(Value::try_from(v)?)
}

fn csv_source(path: PathBuf) -> Result<Value> {
    value_of(&DataSource::Csv { path })
}

fn run(cli: Cli) -> Result<PathBuf> {
    let file = cli.common.config.as_deref().map(config::read_file).transpose()?;
    let assignments = cli
        .common
        .assignments
        .iter()
        .map(|a| config::parse_assignment(a))
        .collect::<Result<Vec<_>, _>>()?;
    let mut flags: Vec<(String, Value)> = Vec::new();
    let mut flag = |k: &str, v: Value| flags.push((k.to_string(), v));
    let section = match &cli.command {
        Command::Train {
            data,
            preset,
            learner,
            rounds,
            seed,
        } => {
            if let Some(p) = preset {
                flag("data", value_of(&p.source())?);
            }
            if let Some(d) = data {
                flag("data", csv_source(d.clone())?);
            }
            if let Some(l) = learner {
                flag("learner", value_of(&Learner::from(*l))?);
            }
            if let Some(r) = rounds {
                flag("booster.num_rounds", int(*r)?);
            }
            if let Some(s) = seed {
                flag("booster.seed", int(*s)?);
            }
            "train"
        }
        Command::Benchmark { seeds, methods } => {
            if let Some(s) = seeds {
                flag("protocol.seeds", ints(s)?);
            }
            if let Some(m) = methods {
                flag("methods", Value::Array(m.iter().map(|s| Value::String(s.trim().to_string())).collect()));
            }
            "benchmark"
        }
        Command::Ablate { seeds } | Command::Sensitivity { seeds } => {
            if let Some(s) = seeds {
                flag("protocol.seeds", ints(s)?);
            }
            if matches!(cli.command, Command::Ablate { .. }) {
                "ablate"
            } else {
                "sensitivity"
            }
        }
        Command::Rules {
            model,
            data,
            preset,
            depth,
        } => {
            if let Some(m) = model {
                flag("model", Value::String(m.display().to_string()));
            }
            if let Some(p) = preset {
                flag("data", value_of(&p.source())?);
            }
            if let Some(d) = data {
                flag("data", csv_source(d.clone())?);
            }
            if let Some(d) = depth {
                flag("extraction.surrogate_depth", int(*d)?);
            }
            "rules"
        }
        Command::GenerateData {
            preset,
            n,
            seed,
            replicate,
        } => {
            if let Some(p) = preset {
                flag("data", value_of(&p.source())?);
            }
            if let Some(n) = n {
                flag("data.n", int(*n)?);
            }
            if let Some(s) = seed {
                flag("data.seed", int(*s)?);
            }
            if let Some(r) = replicate {
                flag("replicate", int(*r)?);
            }
            "generate-data"
        }
    };
    let sources = Sources {
        file: file.as_ref(),
        assignments: &assignments,
        flags,
        output: cli.common.output.clone(),
    };
    macro_rules! dispatch {
        ($ty:ty, $run:path) => {{
            let resolved = config::resolve::<$ty>(section, &<$ty>::default(), sources)?;
            if cli.common.print_config {
                let dir = output::output_dir(resolved.output_dir.clone(), section);
                print!("{}", config::render(section, &resolved.config, &dir)?);
                return Ok(dir);
            }
            $run(resolved)
        }};
    }
    match section {
        "train" => dispatch!(TrainConfig, commands::train),
        "benchmark" => dispatch!(BenchmarkConfig, commands::benchmark),
        "ablate" => dispatch!(AblationConfig, commands::ablate),
        "sensitivity" => dispatch!(SensitivityConfig, commands::sensitivity),
        "rules" => dispatch!(RulesConfig, commands::rules),
        _ => dispatch!(GenerateConfig, commands::generate),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<cbdt::CbdtError>() {
            return match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Runtime => 3,
                ErrorKind::Numerical => 4,
            };
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet_print = cli.common.print_config;
    match run(cli) {
        Ok(dir) => {
            if !quiet_print {
                eprintln!("outputs in {}", dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
