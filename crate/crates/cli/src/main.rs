use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use shortcut_lab::datagen::{self, DatasetSpec};
use shortcut_lab::harness::{self, RunConfig, RunRecord, SweepSpec, DEFAULT_SIGNMAP_MU2};
use shortcut_lab::mlp::MlpModel;
use shortcut_lab::ntk::{self, KernelDataModel, MAX_ORDER};

#[derive(Parser)]
#[command(name = "shortcut-lab", version, about = "Synthetic shortcut-bias experiments and kernel theory checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset directory from a dataset spec.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a network on a generated dataset and write a run record.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "model-config")]
        model_config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure the shortcut bias of a trained model; prints JSON.
    Bias {
        #[arg(long)]
        data: PathBuf,
        /// A run record written by `train`, or a bare model file.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = shortcut_lab::classifiers::DEFAULT_RIDGE)]
        ridge: f64,
    },
    /// Run every cell of a sweep and write the summary CSV.
    Sweep {
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-run details as JSON.
        #[arg(long)]
        details: Option<PathBuf>,
    },
    /// Kernel theory for a two-feature kernel data model.
    Theory {
        #[arg(value_enum)]
        what: Theory,
        #[arg(long)]
        model: PathBuf,
        /// Directory for `spectrum.json` / `sensitivity.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Test direction(s) for `gamma`, as `b1,b2`.
        #[arg(long = "b", value_parser = parse_pair, default_value = "1,1")]
        b: Vec<[f64; 2]>,
        /// Highest derivative order for `sensitivity`.
        #[arg(long, default_value_t = MAX_ORDER)]
        max_order: usize,
    },
    /// Write availability sign maps, one CSV per `mu2`.
    Signmap {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIGNMAP_MU2.to_vec())]
        mu2: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        mu1: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Theory {
    Spectrum,
    Gamma,
    Sensitivity,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `b1,b2`, got `{s}`"));
    }
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok([p(parts[0])?, p(parts[1])?])
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_model(path: &Path) -> Result<MlpModel> {
    match RunRecord::load(path) {
        Ok(r) => Ok(r.model()?),
        Err(_) => MlpModel::load(path).with_context(|| format!("{} is neither a run record nor a model file", path.display())),
    }
}

#[derive(Serialize)]
struct GammaRow {
    b: [f64; 2],
    gamma: f64,
    gamma_closed_form: f64,
}

fn theory(what: Theory, model: &KernelDataModel, out: Option<&Path>, bs: &[[f64; 2]], max_order: usize) -> Result<()> {
    match what {
        Theory::Spectrum => {
            let path = out.unwrap_or(Path::new(".")).join("spectrum.json");
            if let Some(dir) = out {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let file = ntk::write_spectrum_json(model, &path)?;
            print_json(&file)?;
            eprintln!("wrote {}", path.display());
        }
        Theory::Gamma => {
            let rows = bs
                .iter()
                .map(|&b| {
                    Ok(GammaRow {
                        b,
                        gamma: ntk::gamma(model, b)?,
                        gamma_closed_form: ntk::gamma_closed_form(model, b)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            print_json(&rows)?;
        }
        Theory::Sensitivity => {
            if max_order == 0 || max_order > MAX_ORDER {
                bail!("--max-order must be in 1..={MAX_ORDER}");
            }
            let path = out.unwrap_or(Path::new(".")).join("sensitivity.csv");
            if let Some(dir) = out {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let orders: Vec<usize> = (1..=max_order).collect();
            ntk::write_sensitivity_csv(model, &orders, &path)?;
            print!("{}", std::fs::read_to_string(&path)?);
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { spec, out } => {
            let spec: DatasetSpec = read_json(&spec)?;
            let ds = datagen::generate_dataset(&spec)?;
            datagen::export(&ds, &out)?;
            eprintln!(
                "wrote {} train / {} val samples and {} probes to {}",
                ds.train.len(),
                ds.val.len(),
                ds.probes.len(),
                out.display()
            );
        }
        Command::Train { data, model_config, out } => {
            let ds = datagen::load(&data)?;
            let config = RunConfig::load(&model_config)?;
            let record = harness::train_run(&ds, &config)?;
            record.save(&out)?;
            eprintln!(
                "train acc {:.4}, val acc {:.4}, bias {:.4}; wrote {}",
                record.history.final_train_acc().unwrap_or(f64::NAN),
                record.history.final_val_acc().unwrap_or(f64::NAN),
                record.report.bias,
                out.display()
            );
        }
        Command::Bias { data, model, ridge } => {
            let ds = datagen::load(&data)?;
            let model = load_model(&model)?;
            print_json(&harness::measure_bias(&ds, &model, ridge)?)?;
        }
        Command::Sweep { sweep, out, details } => {
            let spec = SweepSpec::load(&sweep)?;
            let results = harness::sweep(&spec)?;
            harness::write_csv(&results, &out)?;
            let excluded: usize = results.iter().map(|r| r.n_excluded).sum();
            if excluded > 0 {
                eprintln!("warning: {excluded} diverged run(s) excluded");
            }
            if let Some(path) = details {
                std::fs::write(&path, serde_json::to_string_pretty(&results)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            eprintln!("wrote {} cells to {}", results.len(), out.display());
        }
        Command::Theory {
            what,
            model,
            out,
            b,
            max_order,
        } => {
            let model: KernelDataModel = read_json(&model)?;
            model.validate()?;
            theory(what, &model, out.as_deref(), &b, max_order)?;
        }
        Command::Signmap { mu2, mu1, out } => {
            for p in harness::emit_signmap(mu1, &mu2, None, &out)? {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}
