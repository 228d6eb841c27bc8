use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qgdm::denoise::Variant;
use qgdm::experiment::{
    cmd_export_bloch, cmd_failure_study, cmd_summarize, cmd_sweep_ntau, cmd_train, ConfigOverrides,
    ExperimentConfig, TargetKind,
};

#[derive(Parser)]
#[command(name = "qgdm", version, about = "Density-matrix diffusion model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate one configuration over its seeds.
    Train(RunArgs),
    /// Train QGDM for several embedding register sizes.
    SweepNtau {
        #[command(flatten)]
        run: RunArgs,
        /// Embedding sizes, e.g. `1,2,3`. Defaults to the config's list.
        #[arg(long, value_delimiter = ',')]
        ntau_values: Option<Vec<usize>>,
    },
    /// Train the naive variant and record its circuit input/output distance.
    FailureStudy(RunArgs),
    /// Write the embedding trajectory of a single-qubit embedding as CSV.
    ExportBloch {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "bloch.csv")]
        out: PathBuf,
    },
    /// Summarise final fidelities from run directories or value files.
    Summarize {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Baseline group for the relative change of means.
        #[arg(long, num_args = 1..)]
        relative_to: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    ntau: Option<usize>,
    #[arg(long)]
    target: Option<TargetKind>,
}

impl RunArgs {
    fn load(&self) -> qgdm::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        ConfigOverrides {
            seeds: self.seed.map(|s| vec![s]).or_else(|| self.seeds.clone()),
            out_dir: self.out.clone(),
            variant: self.variant,
            n: self.n,
            n_tau: self.ntau,
            target: self.target,
        }
        .apply(&mut cfg);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> qgdm::Result<()> {
    match cli.command {
        Command::Train(args) => {
            let report = cmd_train(&args.load()?)?;
            println!("{}", serde_json::to_string_pretty(&report.summary).expect("summary serialises"));
        }
        Command::SweepNtau { run, ntau_values } => {
            let cfg = run.load()?;
            let values = ntau_values.unwrap_or_else(|| cfg.ntau_values.clone());
            for (k, s) in cmd_sweep_ntau(&cfg, &values)? {
                println!("n_tau={k} median={:.6} mean={:.6} std={:.2e}", s.median, s.mean, s.std);
            }
        }
        Command::FailureStudy(args) => {
            let reports = cmd_failure_study(&args.load()?)?;
            println!("{}", serde_json::to_string_pretty(&reports).expect("report serialises"));
        }
        Command::ExportBloch { checkpoint, out } => {
            let points = cmd_export_bloch(&checkpoint, &out)?;
            println!("wrote {} rows to {}", points.len(), out.display());
        }
        Command::Summarize { inputs, relative_to, out } => {
            let report = cmd_summarize(&inputs, &relative_to)?;
            let text = serde_json::to_string_pretty(&report).expect("report serialises");
            match out {
                Some(path) => std::fs::write(&path, text + "\n").map_err(|e| qgdm::Error::Io { path, source: e })?,
                None => println!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
