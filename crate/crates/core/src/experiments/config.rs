//! Experiment configuration: a flat set of `key=value` settings.
//!
//! The same keys are accepted from a config file, from command-line flags
//! and in the metadata block of every output file, so any output can be
//! regenerated from its own header.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::{parse_dataset, Dataset, DatasetFormat, Provenance};
use crate::error::{Error, Result};
use crate::estimator::log_grid;
use crate::kernel::DEFAULT_RANK_THRESHOLD;
use crate::loss::Loss;
use crate::mixture::{
    derive_seed, sample_dataset, sample_mixture_model, sample_standard_normal_1d, MixtureModel,
};

/// Where a training or test set comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// `gen:N`: `N` points per class from the seeded mixture.
    Generate { n_per_class: usize },
    /// `normal1d:N`: `N` standard normal draws in one dimension.
    Normal1d { n: usize },
    /// Any other value: a dataset file, CSV when its first data line is a
    /// `x1,...` header and the ESL layout otherwise.
    File(PathBuf),
}

impl DataSource {
    pub fn is_generated(&self) -> bool {
        matches!(self, DataSource::Generate { .. })
    }
}

fn parse_count(s: &str, what: &str) -> Result<usize> {
    match s.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(Error::input(format!("{what} must be a positive integer, got `{s}`"))),
    }
}

impl FromStr for DataSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(n) = s.strip_prefix("gen:") {
            Ok(DataSource::Generate {
                n_per_class: parse_count(n, "gen:N")?,
            })
        } else if let Some(n) = s.strip_prefix("normal1d:") {
            Ok(DataSource::Normal1d {
                n: parse_count(n, "normal1d:N")?,
            })
        } else if s.is_empty() {
            Err(Error::input("empty data source"))
        } else {
            Ok(DataSource::File(PathBuf::from(s)))
        }
    }
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::Generate { n_per_class } => write!(f, "gen:{n_per_class}"),
            DataSource::Normal1d { n } => write!(f, "normal1d:{n}"),
            DataSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// Log-spaced penalty grid, written `MIN:MAX:COUNT`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl LambdaGrid {
    /// Descending values from `max` to `min`.
    pub fn values(&self) -> Result<Vec<f64>> {
        log_grid(self.max, self.min, self.count)
    }
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid {
            min: 1e-4,
            max: 1e2,
            count: 50,
        }
    }
}

impl FromStr for LambdaGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::input(format!("lambda grid must be MIN:MAX:COUNT, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let grid = LambdaGrid {
            min: parts[0].trim().parse().map_err(|_| bad())?,
            max: parts[1].trim().parse().map_err(|_| bad())?,
            count: parts[2].trim().parse().map_err(|_| bad())?,
        };
        grid.values()?;
        Ok(grid)
    }
}

impl fmt::Display for LambdaGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Svg => "svg",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            other => Err(Error::input(format!("unknown output format `{other}`"))),
        }
    }
}

fn parse_list<T: FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.parse())
        .collect()
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::input(format!("`{key}` expects a number, got `{value}`")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub gammas: Vec<f64>,
    pub lambda_grid: LambdaGrid,
    /// Single penalty weight used by `fit`.
    pub lambda: f64,
    pub loss: Loss,
    pub train: DataSource,
    pub test: DataSource,
    pub output_dir: PathBuf,
    pub formats: Vec<OutputFormat>,
    pub rank_threshold: f64,
    pub deviance_scale: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Monte Carlo draws for the Bayes error reference.
    pub bayes_draws: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            gammas: vec![0.1, 0.5, 1.0, 5.0],
            lambda_grid: LambdaGrid::default(),
            lambda: 1.0,
            loss: Loss::Hinge,
            train: DataSource::Generate { n_per_class: 100 },
            test: DataSource::Generate { n_per_class: 1000 },
            output_dir: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv],
            rank_threshold: DEFAULT_RANK_THRESHOLD,
            deviance_scale: 1.0,
            tolerance: 1e-6,
            max_iterations: 10_000_000,
            bayes_draws: 200_000,
        }
    }
}

/// Keys in the order they are echoed.
pub const KEYS: [&str; 14] = [
    "seed",
    "gammas",
    "lambda_grid",
    "lambda",
    "loss",
    "train",
    "test",
    "out",
    "format",
    "rank_threshold",
    "deviance_scale",
    "tolerance",
    "max_iter",
    "bayes_draws",
];

impl ExperimentConfig {
    /// Sets one key. Unknown keys and malformed values are input errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::input(format!("`seed` expects an integer, got `{value}`")))?
            }
            "gamma" | "gammas" => self.gammas = parse_list::<F64>(value)?.into_iter().map(|v| v.0).collect(),
            "lambda_grid" | "lambda-grid" => self.lambda_grid = value.parse()?,
            "lambda" => self.lambda = parse_f64(key, value)?,
            "loss" => self.loss = value.parse()?,
            "train" => self.train = value.parse()?,
            "test" => self.test = value.parse()?,
            "out" | "output_dir" => self.output_dir = PathBuf::from(value),
            "format" | "formats" => self.formats = parse_list(value)?,
            "rank_threshold" | "rank-threshold" => self.rank_threshold = parse_f64(key, value)?,
            "deviance_scale" | "deviance-scale" => self.deviance_scale = parse_f64(key, value)?,
            "tolerance" => self.tolerance = parse_f64(key, value)?,
            "max_iter" | "max-iter" => self.max_iterations = parse_count(value, "max_iter")?,
            "bayes_draws" | "bayes-draws" => self.bayes_draws = parse_count(value, "bayes_draws")?,
            other => return Err(Error::input(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key=value, got `{line}`"),
            })?;
            self.set(key, value).map_err(|e| match e {
                Error::Input(message) => Error::Parse {
                    line: i + 1,
                    message,
                },
                e => e,
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        config.apply_text(&fs::read_to_string(path)?)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            return Err(Error::input("gamma list is empty"));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::input(format!("gamma must be positive and finite, got {g}")));
        }
        self.lambda_grid.values()?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::input(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.rank_threshold >= 0.0 && self.rank_threshold.is_finite()) {
            return Err(Error::input("rank threshold must be a non-negative number"));
        }
        if !(self.deviance_scale > 0.0 && self.deviance_scale.is_finite()) {
            return Err(Error::input("deviance scale must be positive"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::input("tolerance must be positive"));
        }
        if self.bayes_draws < 1000 {
            return Err(Error::input("bayes_draws must be at least 1000"));
        }
        Ok(())
    }

    /// Every setting as `(key, value)` in [`KEYS`] order; feeding the pairs
    /// back through [`ExperimentConfig::set`] reproduces the config.
    pub fn echo(&self) -> Vec<(String, String)> {
        let join = |v: Vec<String>| v.join(",");
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "seed" => self.seed.to_string(),
                    "gammas" => join(self.gammas.iter().map(|g| g.to_string()).collect()),
                    "lambda_grid" => self.lambda_grid.to_string(),
                    "lambda" => self.lambda.to_string(),
                    "loss" => self.loss.name().to_string(),
                    "train" => self.train.to_string(),
                    "test" => self.test.to_string(),
                    "out" => self.output_dir.display().to_string(),
                    "format" => join(self.formats.iter().map(|f| f.extension().to_string()).collect()),
                    "rank_threshold" => self.rank_threshold.to_string(),
                    "deviance_scale" => self.deviance_scale.to_string(),
                    "tolerance" => self.tolerance.to_string(),
                    "max_iter" => self.max_iterations.to_string(),
                    "bayes_draws" => self.bayes_draws.to_string(),
                    _ => unreachable!(),
                };
                (k.to_string(), v)
            })
            .collect()
    }

    /// The mixture behind generated data sets.
    pub fn mixture_model(&self) -> MixtureModel {
        sample_mixture_model(derive_seed(self.seed, 0))
    }

    pub fn training_set(&self) -> Result<Dataset> {
        self.load_source(&self.train, 1)
    }

    pub fn test_set(&self) -> Result<Dataset> {
        self.load_source(&self.test, 2)
    }

    fn load_source(&self, source: &DataSource, tag: u64) -> Result<Dataset> {
        let seed = derive_seed(self.seed, tag);
        match source {
            DataSource::Generate { n_per_class } => {
                sample_dataset(&self.mixture_model(), *n_per_class, seed)
            }
            DataSource::Normal1d { n } => sample_standard_normal_1d(*n, seed),
            DataSource::File(path) => {
                let text = fs::read_to_string(path)?;
                let mut ds = parse_dataset(&text, sniff_format(&text))?;
                ds.provenance = Provenance::LoadedFile(path.clone());
                Ok(ds)
            }
        }
    }
}

/// CSV when the first non-comment line starts with an `x1` header.
fn sniff_format(text: &str) -> DatasetFormat {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'));
    match first {
        Some(l) if l.starts_with("x1") => DatasetFormat::Csv,
        _ => DatasetFormat::Esl { dim: None },
    }
}

/// `f64` that parses with an input error.
struct F64(f64);

impl FromStr for F64 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_f64("gammas", s).map(F64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut c = ExperimentConfig::default();
        c.set("gammas", "5,1,0.5,0.1").unwrap();
        c.set("lambda-grid", "0.001:10:7").unwrap();
        c.set("train", "data/mix.txt").unwrap();
        c.set("format", "csv,svg").unwrap();
        c.set("loss", "deviance").unwrap();
        let mut back = ExperimentConfig::default();
        for (k, v) in c.echo() {
            back.set(&k, &v).unwrap();
        }
        assert_eq!(back, c);
    }

    #[test]
    fn config_text_with_comments() {
        let mut c = ExperimentConfig::default();
        c.apply_text("# run\nseed = 42\n\ngamma=1\n").unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.gammas, vec![1.0]);
        let err = c.apply_text("seed=1\nnonsense\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = c.apply_text("colour=red\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn sources_parse() {
        assert_eq!(
            "gen:100".parse::<DataSource>().unwrap(),
            DataSource::Generate { n_per_class: 100 }
        );
        assert!("gen:0".parse::<DataSource>().is_err());
        assert!("gen:x".parse::<DataSource>().is_err());
        assert_eq!(
            "normal1d:50".parse::<DataSource>().unwrap(),
            DataSource::Normal1d { n: 50 }
        );
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::default();
        assert!(c.set("gammas", "1,-2").is_ok());
        assert!(c.validate().is_err());
        assert!(c.set("lambda_grid", "1:0.1:5").is_err());
        assert!(c.set("lambda_grid", "0.1:1:0").is_err());
        assert!(c.set("format", "png").is_err());
    }
}
