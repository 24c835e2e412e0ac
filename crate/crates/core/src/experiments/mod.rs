//! Experiment drivers behind the `kernreg` subcommands.
//!
//! Each driver computes everything in memory and returns the files it
//! would write; [`write_outputs`] then writes them in order. Work across
//! `gamma` values runs in parallel, but every number is computed the same
//! way whatever the thread count, so outputs are byte-identical.

pub mod config;
pub mod series;
pub mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::dataset::{format_csv, Dataset};
use crate::error::{Error, Result};
use crate::estimator::path::lambda_path_on_gram;
use crate::estimator::{classify, error_rate, fit, FitSpec, PathMode, PathResult, PathSpec};
use crate::kernel::{
    cross_gram, effective_rank, eigendecompose, feature_matrix, gram_matrix, EigenDecomposition,
    KernelMatrix, KernelSpec,
};
use crate::loss::Loss;
use crate::mixture::{bayes_error, derive_seed, ErrorEstimate};

pub use config::{DataSource, ExperimentConfig, LambdaGrid, OutputFormat, KEYS};
pub use series::{SeriesFile, ARTIFACT_VERSION};
pub use svg::{render_svg, Curve, PlotSpec, SvgDocument};

/// Eigenvectors shown by [`eigpanel`].
pub const EIGPANEL_COLUMNS: usize = 16;
/// Threshold used for the "large eigenvalue" counts reported by [`spectra`].
pub const LARGE_EIGENVALUE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Table1,
    Spectra,
    Eigpanel,
    Errcurves,
    Losscmp,
    Fit,
    GenData,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Table1 => "table1",
            Command::Spectra => "spectra",
            Command::Eigpanel => "eigpanel",
            Command::Errcurves => "errcurves",
            Command::Losscmp => "losscmp",
            Command::Fit => "fit",
            Command::GenData => "gen-data",
        }
    }
}

/// A file to be written under the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// A result table with an optional plot of it.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub series: SeriesFile,
    pub plot: Option<(Vec<Curve>, PlotSpec)>,
}

fn gamma_label(g: f64) -> String {
    format!("gamma_{g}")
}

fn at_gamma(gamma: f64) -> impl Fn(Error) -> Error {
    move |e| Error::AtGamma {
        gamma,
        source: Box::new(e),
    }
}

fn header(command: Command, config: &ExperimentConfig) -> Vec<(String, String)> {
    let mut meta = vec![
        ("command".to_string(), command.name().to_string()),
        ("version".to_string(), ARTIFACT_VERSION.to_string()),
    ];
    // The output directory does not affect contents; leaving it out keeps
    // runs into different directories byte-identical.
    meta.extend(config.echo().into_iter().filter(|(k, _)| k != "out"));
    meta
}

fn new_series(name: &str, command: Command, config: &ExperimentConfig) -> SeriesFile {
    let mut s = SeriesFile::new(name);
    s.metadata = header(command, config);
    s
}

fn path_spec(config: &ExperimentConfig, kernel: KernelSpec) -> PathSpec {
    PathSpec {
        loss: config.loss,
        kernel,
        tolerance: config.tolerance,
        max_iterations: config.max_iterations,
    }
}

fn spectrum(data: &Dataset, gamma: f64) -> Result<(KernelMatrix, EigenDecomposition)> {
    let kernel = KernelSpec::radial(gamma)?;
    let k = gram_matrix(&kernel, &data.x)?;
    let eig = eigendecompose(&k)?;
    Ok((k, eig))
}

/// Per `gamma`: effective rank of the training Gram matrix and the fewest
/// training errors over the penalty grid.
pub fn table1(config: &ExperimentConfig) -> Result<SeriesFile> {
    config.validate()?;
    let data = config.training_set()?;
    let grid = config.lambda_grid.values()?;
    let rows: Vec<(usize, usize, f64, usize)> = config
        .gammas
        .par_iter()
        .map(|&gamma| {
            let (k, eig) = spectrum(&data, gamma)?;
            let rank = effective_rank(&eig, config.rank_threshold);
            let spec = path_spec(config, KernelSpec::radial(gamma)?);
            let path = lambda_path_on_gram(&spec, &k, &data.y, &grid, None, PathMode::Warm)?;
            let best = path.min_training_errors().expect("grid is non-empty");
            let last = path.records.last().expect("grid is non-empty");
            Ok((rank, best.training_errors, best.lambda, last.training_errors))
        })
        .enumerate()
        .map(|(i, r): (usize, Result<_>)| r.map_err(at_gamma(config.gammas[i])))
        .collect::<Result<_>>()?;

    let mut s = new_series("table1", Command::Table1, config);
    s.push_meta("n_train", data.len());
    s.push_column("gamma", config.gammas.clone())?;
    s.push_column("effective_rank", rows.iter().map(|r| r.0 as f64).collect())?;
    s.push_column("min_training_errors", rows.iter().map(|r| r.1 as f64).collect())?;
    s.push_column("lambda_at_min", rows.iter().map(|r| r.2).collect())?;
    s.push_column(
        "training_errors_at_smallest_lambda",
        rows.iter().map(|r| r.3 as f64).collect(),
    )?;
    Ok(s)
}

/// Sorted Gram eigenvalues for every `gamma`, with a log-scale plot.
pub fn spectra(config: &ExperimentConfig) -> Result<Artifact> {
    config.validate()?;
    let data = config.training_set()?;
    let spectra: Vec<Vec<f64>> = config
        .gammas
        .par_iter()
        .map(|&g| {
            spectrum(&data, g)
                .map(|(_, eig)| eig.eigenvalues().to_vec())
                .map_err(at_gamma(g))
        })
        .collect::<Result<_>>()?;

    let n = data.len();
    let index: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let mut s = new_series("spectra", Command::Spectra, config);
    s.push_meta("n_train", n);
    s.push_column("index", index.clone())?;
    let mut curves = Vec::new();
    for (&g, values) in config.gammas.iter().zip(&spectra) {
        let rank = values.iter().filter(|&&v| v > config.rank_threshold).count();
        let large = values.iter().filter(|&&v| v > LARGE_EIGENVALUE).count();
        s.push_meta(format!("effective_rank_{}", gamma_label(g)), rank);
        s.push_meta(format!("count_above_1e-6_{}", gamma_label(g)), large);
        s.push_column(format!("eigenvalue_{}", gamma_label(g)), values.clone())?;
        curves.push(Curve::new(format!("gamma = {g}"), index.clone(), values.clone()));
    }
    let plot = PlotSpec {
        title: "Gram matrix eigenvalues".into(),
        x_label: "index".into(),
        y_label: "eigenvalue".into(),
        log_y: true,
        ..Default::default()
    };
    Ok(Artifact {
        series: s,
        plot: Some((curves, plot)),
    })
}

/// Leading eigenvectors `u_j` and features `sqrt(d_j) u_j` of a 1-D
/// sample, rows ordered by `x`. Two artifacts per `gamma`.
pub fn eigpanel(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    config.validate()?;
    let data = config.training_set()?;
    if data.dim() != 1 {
        return Err(Error::input(format!(
            "eigpanel needs one-dimensional inputs, got dimension {}",
            data.dim()
        )));
    }
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let xs = data.x.column(0);
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
    let x_sorted: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    let m = EIGPANEL_COLUMNS.min(n);

    let panels: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)> = config
        .gammas
        .par_iter()
        .map(|&g| {
            let (_, eig) = spectrum(&data, g)?;
            let h = feature_matrix(&eig)?;
            let permute = |col: Vec<f64>| order.iter().map(|&i| col[i]).collect::<Vec<f64>>();
            let vectors = (0..m).map(|j| permute(eig.eigenvector(j))).collect();
            let features = (0..m).map(|j| permute(h.column(j))).collect();
            Ok((vectors, features, eig.eigenvalues()[..m].to_vec()))
        })
        .enumerate()
        .map(|(i, r): (usize, Result<_>)| r.map_err(at_gamma(config.gammas[i])))
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for (&g, (vectors, features, values)) in config.gammas.iter().zip(panels) {
        for (kind, prefix, cols) in [("vectors", "u", vectors), ("features", "h", features)] {
            let name = format!("eigpanel_{kind}_{}", gamma_label(g));
            let mut s = new_series(&name, Command::Eigpanel, config);
            s.push_meta("gamma", g);
            s.push_meta("n_train", n);
            let joined: Vec<String> = values.iter().map(|v| series::format_number(*v)).collect();
            s.push_meta("eigenvalues", joined.join(","));
            s.push_column("x", x_sorted.clone())?;
            let mut curves = Vec::new();
            for (j, col) in cols.into_iter().enumerate() {
                curves.push(Curve::new(format!("{prefix}{}", j + 1), x_sorted.clone(), col.clone()));
                s.push_column(format!("{prefix}{}", j + 1), col)?;
            }
            let plot = PlotSpec {
                title: format!("Eigen{kind}, gamma = {g}"),
                x_label: "x".into(),
                y_label: prefix.into(),
                ..Default::default()
            };
            out.push(Artifact {
                series: s,
                plot: Some((curves, plot)),
            });
        }
    }
    Ok(out)
}

/// Result of [`errcurves`] before it is turned into a table.
#[derive(Debug, Clone)]
pub struct ErrorCurves {
    pub lambda_grid: Vec<f64>,
    pub paths: Vec<PathResult>,
    pub bayes: Option<ErrorEstimate>,
    pub n_test: usize,
}

/// Training and test error over the penalty grid for every `gamma`.
pub fn error_curves(config: &ExperimentConfig) -> Result<ErrorCurves> {
    config.validate()?;
    let train = config.training_set()?;
    let test = config.test_set()?;
    if test.dim() != train.dim() {
        return Err(Error::input(format!(
            "training inputs have dimension {} but test inputs {}",
            train.dim(),
            test.dim()
        )));
    }
    let grid = config.lambda_grid.values()?;
    let paths: Vec<PathResult> = config
        .gammas
        .par_iter()
        .map(|&g| {
            let kernel = KernelSpec::radial(g)?;
            let k = gram_matrix(&kernel, &train.x)?;
            let cross = cross_gram(&kernel, &test.x, &train.x)?;
            lambda_path_on_gram(
                &path_spec(config, kernel),
                &k,
                &train.y,
                &grid,
                Some((&cross, &test.y)),
                PathMode::Warm,
            )
            .map_err(at_gamma(g))
        })
        .collect::<Result<_>>()?;
    let bayes = if config.train.is_generated() && config.test.is_generated() {
        Some(bayes_error(
            &config.mixture_model(),
            config.bayes_draws,
            derive_seed(config.seed, 3),
        )?)
    } else {
        None
    };
    Ok(ErrorCurves {
        lambda_grid: grid,
        paths,
        bayes,
        n_test: test.len(),
    })
}

pub fn errcurves(config: &ExperimentConfig) -> Result<Artifact> {
    let curves = error_curves(config)?;
    let grid = &curves.lambda_grid;
    let log_lambda: Vec<f64> = grid.iter().map(|l| l.log10()).collect();
    let mut s = new_series("errcurves", Command::Errcurves, config);
    s.push_meta("n_test", curves.n_test);
    if let Some(b) = curves.bayes {
        s.push_meta("bayes_error", b.estimate);
        s.push_meta("bayes_std_error", b.std_error);
    }
    s.push_column("lambda", grid.clone())?;
    s.push_column("log10_lambda", log_lambda.clone())?;
    let mut plot_curves = Vec::new();
    for (&g, path) in config.gammas.iter().zip(&curves.paths) {
        if let Some(i) = path.argmin_test_error() {
            s.push_meta(format!("argmin_test_error_index_{}", gamma_label(g)), i);
        }
        let train: Vec<f64> = path.records.iter().map(|r| r.training_error).collect();
        let test: Vec<f64> = path
            .records
            .iter()
            .map(|r| r.test_error.unwrap_or(f64::NAN))
            .collect();
        s.push_column(format!("train_error_{}", gamma_label(g)), train)?;
        s.push_column(format!("test_error_{}", gamma_label(g)), test.clone())?;
        plot_curves.push(Curve::new(format!("gamma = {g}"), log_lambda.clone(), test));
    }
    let plot = PlotSpec {
        title: "Test error along the penalty grid".into(),
        x_label: "log10(lambda)".into(),
        y_label: "test error".into(),
        reverse_x: true,
        reference: curves.bayes.map(|b| ("Bayes error".to_string(), b.estimate)),
        ..Default::default()
    };
    Ok(Artifact {
        series: s,
        plot: Some((plot_curves, plot)),
    })
}

/// Hinge loss and scaled binomial deviance on `yf` in `[-3, 3]`.
pub fn losscmp(config: &ExperimentConfig) -> Result<Artifact> {
    config.validate()?;
    let yf: Vec<f64> = (0..=600).map(|i| (i as f64 - 300.0) / 100.0).collect();
    let hinge: Vec<f64> = yf.iter().map(|&m| Loss::Hinge.of_margin(m)).collect();
    let deviance: Vec<f64> = yf
        .iter()
        .map(|&m| config.deviance_scale * Loss::BinomialDeviance.of_margin(m))
        .collect();
    let mut s = new_series("losscmp", Command::Losscmp, config);
    s.push_column("yf", yf.clone())?;
    s.push_column("hinge", hinge.clone())?;
    s.push_column("deviance", deviance.clone())?;
    let curves = vec![
        Curve::new("hinge", yf.clone(), hinge),
        Curve::new(format!("deviance x {}", config.deviance_scale), yf, deviance),
    ];
    let plot = PlotSpec {
        title: "Hinge loss and binomial deviance".into(),
        x_label: "yf".into(),
        y_label: "loss".into(),
        ..Default::default()
    };
    Ok(Artifact {
        series: s,
        plot: Some((curves, plot)),
    })
}

/// One fit at the first `gamma` and `lambda`: the model JSON plus a
/// one-row summary.
pub fn fit_command(config: &ExperimentConfig) -> Result<(String, SeriesFile)> {
    config.validate()?;
    let train = config.training_set()?;
    let test = config.test_set()?;
    let gamma = config.gammas[0];
    let spec = FitSpec {
        loss: config.loss,
        kernel: KernelSpec::radial(gamma)?,
        lambda: config.lambda,
        tolerance: config.tolerance,
        max_iterations: config.max_iterations,
    };
    let model = fit(&spec, &train.x, &train.y).map_err(at_gamma(gamma))?;
    let train_error = error_rate(&classify(&model, &train.x)?, &train.y)?;
    let test_error = error_rate(&classify(&model, &test.x)?, &test.y)?;
    let mut s = new_series("fit", Command::Fit, config);
    s.push_meta("converged", model.solver_report.converged);
    for (name, v) in [
        ("gamma", gamma),
        ("lambda", config.lambda),
        ("objective", model.objective_value),
        ("intercept", model.intercept),
        ("training_error", train_error),
        ("test_error", test_error),
        ("iterations", model.solver_report.iterations as f64),
    ] {
        s.push_column(name, vec![v])?;
    }
    Ok((model.to_json()?, s))
}

fn dataset_file(name: &str, data: &Dataset, meta: &[(String, String)]) -> OutputFile {
    let mut contents = String::new();
    for (k, v) in meta {
        writeln!(contents, "# {k}={v}").unwrap();
    }
    contents.push_str(&format_csv(data));
    OutputFile {
        name: name.into(),
        contents,
    }
}

/// Training and test sets as native CSV, plus the mixture means when data
/// are generated.
pub fn gen_data(config: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    config.validate()?;
    let meta = header(Command::GenData, config);
    let mut files = vec![
        dataset_file("train.csv", &config.training_set()?, &meta),
        dataset_file("test.csv", &config.test_set()?, &meta),
    ];
    if config.train.is_generated() || config.test.is_generated() {
        let model = config.mixture_model();
        let metadata: serde_json::Map<String, serde_json::Value> = meta
            .iter()
            .map(|(k, v)| (k.clone(), json!(v)))
            .collect();
        let doc = json!({
            "metadata": metadata,
            "means_pos": model.means_pos,
            "means_neg": model.means_neg,
            "component_sd": model.component_sd,
        });
        let mut contents = serde_json::to_string_pretty(&doc)?;
        contents.push('\n');
        files.push(OutputFile {
            name: "mixture_model.json".into(),
            contents,
        });
    }
    Ok(files)
}

/// Encodes an artifact in every configured format.
pub fn encode(artifact: &Artifact, formats: &[OutputFormat]) -> Result<Vec<OutputFile>> {
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    let mut files = Vec::new();
    let name = &artifact.series.name;
    for format in formats {
        let contents = match format {
            OutputFormat::Csv => artifact.series.to_csv(),
            OutputFormat::Json => artifact.series.to_json()?,
            OutputFormat::Svg => match &artifact.plot {
                Some((curves, spec)) => {
                    let doc = render_svg(curves, spec)?;
                    let mut comment = String::new();
                    for (k, v) in &artifact.series.metadata {
                        writeln!(comment, "<!-- {k}={} -->", v.replace("--", "- -")).unwrap();
                    }
                    // After the opening tag.
                    let at = doc.text.find('\n').map_or(doc.text.len(), |i| i + 1);
                    let mut text = doc.text;
                    text.insert_str(at, &comment);
                    text
                }
                None => continue,
            },
        };
        files.push(OutputFile {
            name: format!("{name}.{}", format.extension()),
            contents,
        });
    }
    Ok(files)
}

/// Runs one subcommand and returns its files in write order.
pub fn run(command: Command, config: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let artifacts = match command {
        Command::Table1 => vec![Artifact {
            series: table1(config)?,
            plot: None,
        }],
        Command::Spectra => vec![spectra(config)?],
        Command::Eigpanel => eigpanel(config)?,
        Command::Errcurves => vec![errcurves(config)?],
        Command::Losscmp => vec![losscmp(config)?],
        Command::Fit => {
            let (model, summary) = fit_command(config)?;
            let mut files = vec![OutputFile {
                name: "model.json".into(),
                contents: model,
            }];
            files.extend(encode(
                &Artifact {
                    series: summary,
                    plot: None,
                },
                &config.formats,
            )?);
            return Ok(files);
        }
        Command::GenData => return gen_data(config),
    };
    let mut files = Vec::new();
    for a in &artifacts {
        files.extend(encode(a, &config.formats)?);
    }
    Ok(files)
}

/// Writes `files` under `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, files: &[OutputFile]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|f| {
            let path = dir.join(&f.name);
            fs::write(&path, &f.contents)?;
            Ok(path)
        })
        .collect()
}
