use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use groupsparse::data::{self, normalize_minmax, split, Dataset, SplitSpec};
use groupsparse::experiment::{
    self, lambda_sweep, read_model, render_report, run_single, serialize_model, write_feature_map, ExperimentConfig,
    ModelMetadata, Preset, ReportColumn,
};
use groupsparse::pruning::{compact, prune_report, threshold_weights};
use groupsparse::{BiasMode, Error, PenaltyKind, Result};

#[derive(Parser)]
#[command(name = "groupsparse", version, about = "Train group-sparse feed-forward classifiers, prune them, and report")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one network and save it.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Penalty: l2, l1, gl or sgl.
        #[arg(long)]
        penalty: Option<PenaltyKind>,
        /// Model file to write (thresholded weights).
        #[arg(long)]
        out: PathBuf,
    },
    /// Classification accuracy of a saved model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Evaluate only on the test side of the split with this fraction and --seed.
        #[arg(long)]
        test_frac: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Threshold a saved model, print its sparsity report and write the compacted network.
    Prune {
        #[arg(long)]
        model: PathBuf,
        /// Defaults to the threshold recorded in the model file.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// λ × penalty × repeat sweep; writes sweep.csv and a summary report.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated penalties.
        #[arg(long, value_delimiter = ',', default_value = "l2,l1,gl,sgl")]
        penalties: Vec<PenaltyKind>,
        /// Comma-separated λ values (default 1e-1 … 1e-5).
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
        #[arg(long)]
        repeats: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the input-feature strength map of a saved model as PGM + CSV.
    Featmap {
        #[arg(long)]
        model: PathBuf,
        /// Image shape ROWSxCOLS; square inputs are inferred.
        #[arg(long)]
        shape: Option<String>,
        /// Output stem; `.pgm` and `.csv` are appended.
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated runs per penalty, summarized side by side (JSON + text table).
    Report {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', default_value = "l2,l1,sgl")]
        penalty: Vec<PenaltyKind>,
        #[arg(long)]
        repeats: Option<usize>,
        /// Output stem; `.json` and `.txt` are appended.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Idx,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file (CSV, or IDX images). Defaults to the bundled 8×8 digits.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// IDX label file; inferred from the image file name when omitted.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Keep only the first N samples.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct ModelArgs {
    /// Starting configuration: digits, ssd, mnist or cover.
    #[arg(long)]
    preset: Option<Preset>,
    /// JSON experiment configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hidden layer widths, e.g. "40,20".
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_frac: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    bias_groups: Option<BiasMode>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let ds = match (&self.data, self.format) {
            (None, _) => data::bundled_digits(),
            (Some(path), Format::Csv) => data::load_csv(path)?,
            (Some(path), Format::Idx) => {
                let labels = match &self.labels {
                    Some(l) => l.clone(),
                    None => infer_label_path(path)?,
                };
                data::load_idx(path, labels)?
            }
        };
        Ok(match self.limit {
            Some(n) => ds.head(n),
            None => ds,
        })
    }
}

fn infer_label_path(images: &Path) -> Result<PathBuf> {
    let name = images.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    if !name.contains("images-idx3") {
        return Err(Error::InvalidConfig(format!(
            "cannot infer label file for {}; pass --labels",
            images.display()
        )));
    }
    Ok(images.with_file_name(name.replace("images-idx3", "labels-idx1")))
}

impl ModelArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, self.preset) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?
            }
            (None, Some(preset)) => preset.config(),
            (None, None) => Preset::Digits.config(),
        };
        if let Some(arch) = &self.arch {
            cfg.hidden = parse_list(arch)?;
        }
        let t = &mut cfg.train;
        t.lambda = self.lambda.unwrap_or(t.lambda);
        t.epochs = self.epochs.unwrap_or(t.epochs);
        t.batch_size = self.batch.unwrap_or(t.batch_size);
        t.seed = self.seed.unwrap_or(t.seed);
        t.threshold = self.threshold.unwrap_or(t.threshold);
        t.bias_mode = self.bias_groups.unwrap_or(t.bias_mode);
        cfg.test_fraction = self.test_frac.unwrap_or(cfg.test_fraction);
        Ok(cfg)
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| Error::InvalidConfig(format!("cannot parse {p:?} in {s:?}"))))
        .collect()
}

fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::InvalidConfig(format!("shape {s:?} is not ROWSxCOLS")))?;
    let parse = |v: &str| v.trim().parse().map_err(|_| Error::InvalidConfig(format!("bad shape {s:?}")));
    Ok((parse(r)?, parse(c)?))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            data,
            model,
            penalty,
            out,
        } => {
            let ds = normalize_minmax(&data.load()?);
            let mut cfg = model.config()?;
            if let Some(p) = penalty {
                cfg.train.penalty = p;
            }
            cfg.validate()?;
            let output = run_single(&ds, &cfg.hidden, &cfg.train, cfg.test_fraction)?;
            let meta = ModelMetadata {
                penalty: cfg.train.penalty,
                lambda: cfg.train.lambda,
                seed: cfg.train.seed,
                threshold: cfg.train.threshold,
            };
            serialize_model(&output.network, &meta, &out)?;
            println!("{}", json(&output.result));
            if let Some(last) = output.history.epochs.last() {
                eprintln!(
                    "final epoch: objective {:.6}, data loss {:.6}, train accuracy {:.4}",
                    last.objective, last.data_loss, last.train_accuracy
                );
            }
            eprintln!("model written to {}", out.display());
        }
        Command::Eval {
            model,
            data,
            test_frac,
            seed,
        } => {
            let (net, _) = read_model(&model)?;
            let ds = normalize_minmax(&data.load()?);
            let ds = match test_frac {
                Some(f) => split(&ds, SplitSpec { test_fraction: f, seed })?.1,
                None => ds,
            };
            let acc = net.accuracy(ds.features.view(), &ds.labels)?;
            println!("{}", serde_json::json!({ "samples": ds.len(), "accuracy": acc }));
        }
        Command::Prune { model, threshold, out } => {
            let (net, meta) = read_model(&model)?;
            let tau = threshold.unwrap_or(meta.threshold);
            let pruned = threshold_weights(&net, tau);
            let report = prune_report(&net, &pruned, tau)?;
            println!("{}", json(&report));
            if let Some(out) = out {
                let (small, _) = compact(&pruned)?;
                serialize_model(&small, &ModelMetadata { threshold: tau, ..meta }, &out)?;
                eprintln!("compacted {:?} -> {:?}, written to {}", net.dims(), small.dims(), out.display());
            }
        }
        Command::Sweep {
            data,
            model,
            penalties,
            lambdas,
            repeats,
            out,
        } => {
            let ds = data.load()?;
            let mut cfg = model.config()?;
            if let Some(r) = repeats {
                cfg.repeats = r;
            }
            if !lambdas.is_empty() {
                cfg.lambdas = lambdas;
            }
            let sweep = lambda_sweep(&ds, &cfg, &cfg.lambdas, &penalties)?;
            ensure_dir(&out)?;
            write(&out.join("sweep.csv"), &sweep.to_csv())?;
            write(&out.join("sweep_report.json"), &sweep.summary_json())?;
            write(&out.join("sweep_report.txt"), &sweep.summary_table())?;
            print!("{}", sweep.summary_table());
        }
        Command::Featmap { model, shape, out } => {
            let (net, _) = read_model(&model)?;
            let shape = match shape {
                Some(s) => parse_shape(&s)?,
                None => {
                    let side = (net.input_dim() as f64).sqrt().round() as usize;
                    if side * side != net.input_dim() {
                        return Err(Error::InvalidConfig(format!(
                            "{} inputs are not a square image; pass --shape",
                            net.input_dim()
                        )));
                    }
                    (side, side)
                }
            };
            let (pgm, csv) = write_feature_map(&net, shape, &out)?;
            eprintln!("wrote {} and {}", pgm.display(), csv.display());
        }
        Command::Report {
            data,
            model,
            penalty,
            repeats,
            out,
        } => {
            let ds = data.load()?;
            let mut cfg = model.config()?;
            if let Some(r) = repeats {
                cfg.repeats = r;
            }
            let mut columns = Vec::new();
            for p in penalty {
                let mut c = cfg.clone();
                c.train.penalty = p;
                let result = experiment::run_experiment(&ds, &c)?;
                columns.push(ReportColumn::from_result(p.name().to_uppercase(), &result));
            }
            let (json_path, txt_path) = render_report(&columns, &out)?;
            print!("{}", experiment::report::report_table(&columns));
            eprintln!("wrote {} and {}", json_path.display(), txt_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
