use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kernreg::experiments::{run, write_outputs, Command, ExperimentConfig};
use kernreg::Result;

#[derive(Parser)]
#[command(name = "kernreg", version, about = "Regularized kernel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Effective rank and minimal training errors per gamma
    Table1(Shared),
    /// Gram matrix eigenvalues per gamma
    Spectra(Shared),
    /// Leading eigenvectors and features of a 1-D sample
    Eigpanel(Shared),
    /// Training and test error along the lambda grid
    Errcurves(Shared),
    /// Hinge loss against the binomial deviance
    Losscmp(Shared),
    /// A single fit, written as model JSON
    Fit(Shared),
    /// Write the training and test sets
    GenData(Shared),
}

#[derive(Args)]
struct Shared {
    /// key=value config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Single gamma (same as --gammas with one value)
    #[arg(long, conflicts_with = "gammas")]
    gamma: Option<String>,
    /// Comma-separated gamma list
    #[arg(long)]
    gammas: Option<String>,
    /// MIN:MAX:COUNT, log-spaced
    #[arg(long)]
    lambda_grid: Option<String>,
    /// Penalty weight for `fit`
    #[arg(long)]
    lambda: Option<String>,
    /// hinge | deviance | exponential | squared
    #[arg(long)]
    loss: Option<String>,
    /// PATH, gen:N (N per class) or normal1d:N
    #[arg(long)]
    train: Option<String>,
    #[arg(long)]
    test: Option<String>,
    #[arg(long)]
    rank_threshold: Option<String>,
    #[arg(long)]
    deviance_scale: Option<String>,
    #[arg(long)]
    tolerance: Option<String>,
    /// Iteration cap per fit
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    bayes_draws: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated subset of csv,json,svg
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

impl Shared {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let seed = self.seed.map(|s| s.to_string());
        let overrides = [
            ("seed", &seed),
            ("gammas", &self.gamma),
            ("gammas", &self.gammas),
            ("lambda_grid", &self.lambda_grid),
            ("lambda", &self.lambda),
            ("loss", &self.loss),
            ("train", &self.train),
            ("test", &self.test),
            ("rank_threshold", &self.rank_threshold),
            ("deviance_scale", &self.deviance_scale),
            ("tolerance", &self.tolerance),
            ("max_iter", &self.max_iter),
            ("bayes_draws", &self.bayes_draws),
            ("out", &self.out),
            ("format", &self.format),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn execute(command: Command, shared: &Shared) -> Result<()> {
    let config = shared.config()?;
    let files = match shared.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| kernreg::Error::Input(e.to_string()))?
            .install(|| run(command, &config))?,
        None => run(command, &config)?,
    };
    for path in write_outputs(&config.output_dir, &files)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, shared) = match &cli.command {
        Sub::Table1(s) => (Command::Table1, s),
        Sub::Spectra(s) => (Command::Spectra, s),
        Sub::Eigpanel(s) => (Command::Eigpanel, s),
        Sub::Errcurves(s) => (Command::Errcurves, s),
        Sub::Losscmp(s) => (Command::Losscmp, s),
        Sub::Fit(s) => (Command::Fit, s),
        Sub::GenData(s) => (Command::GenData, s),
    };
    match execute(command, shared) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
