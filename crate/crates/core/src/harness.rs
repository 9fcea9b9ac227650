//! Seeded multi-run experiment cells, parameter sweeps and their CSV output.
//!
//! A cell is one fully specified (dataset recipe, architecture, training)
//! configuration. Its identity is a canonical string of every parameter, so the
//! same configuration reached from different sweeps gets the same seeds.
//!
//! Per-run seeds are the first eight bytes (little endian) of
//! `SHA-256("{base_seed}|{canonical}|{run}|{purpose}")` with purpose one of
//! `data`, `init`, `shuffle`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::biasmetric::{shortcut_bias, BiasReport};
use crate::classifiers::{fit_lda, LinearClassifier, DEFAULT_RIDGE};
use crate::datagen::{generate_dataset, DatasetSpec, EmbeddedDataset};
use crate::error::{Error, Result};
use crate::mlp::{self, Activation, Labeled, MlpConfig, MlpModel, ModelFile, TrainConfig, TrainHistory};
use crate::ntk::{default_a_grid, sign_map, write_signmap_csv};
use crate::util::{create_dir, read_json, write_json};

pub const CSV_HEADER: [&str; 18] = [
    "cell_id",
    "rho_s",
    "rho_c",
    "sigma_sc",
    "alpha_ratio",
    "eta_s",
    "eta_c",
    "depth",
    "width",
    "activation",
    "n_runs",
    "n_excluded",
    "mean_bias",
    "std_bias",
    "mean_reliance_model",
    "mean_reliance_optimal",
    "mean_train_acc",
    "mean_val_acc",
];

/// Architecture without the input dimension, which comes from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub depth: usize,
    pub width: usize,
    pub activation: Activation,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            depth: 8,
            width: 128,
            activation: Activation::Relu,
        }
    }
}

impl ModelSpec {
    pub fn config(&self, in_dim: usize) -> MlpConfig {
        MlpConfig {
            depth: self.depth,
            width: self.width,
            activation: self.activation,
            in_dim,
            out_dim: 1,
        }
    }
}

/// Everything that defines a cell. `dataset.seed` is ignored; runs derive
/// their own seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
}

fn default_ridge() -> f64 {
    DEFAULT_RIDGE
}

impl CellParams {
    pub fn new(dataset: DatasetSpec, model: ModelSpec) -> Self {
        CellParams {
            dataset,
            model,
            train: TrainConfig::default(),
            ridge: DEFAULT_RIDGE,
        }
    }

    pub fn alpha_ratio(&self) -> f64 {
        self.dataset.alpha_s / self.dataset.alpha_c
    }

    /// Sets `alpha_s / alpha_c = ratio` keeping `sqrt(alpha_s * alpha_c)` fixed.
    pub fn set_alpha_ratio(&mut self, ratio: f64) -> Result<()> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::config(format!("alpha_ratio = {ratio} must be positive")));
        }
        let g = (self.dataset.alpha_s * self.dataset.alpha_c).sqrt();
        let r = ratio.sqrt();
        self.dataset.alpha_s = g * r;
        self.dataset.alpha_c = g / r;
        Ok(())
    }

    /// Canonical `key=value` description of every parameter that affects a run.
    pub fn canonical(&self) -> String {
        let d = &self.dataset;
        let t = &self.train;
        format!(
            "rho_s={};rho_c={};sigma_sc={};alpha_s={};alpha_c={};eta_s={};eta_c={};dim={};\
             n_train={};n_val={};grid_res={};lambda={};depth={};width={};activation={};\
             epochs={};batch_size={};learning_rate={};shuffle_seed={};ridge={}",
            d.rho_s,
            d.rho_c,
            d.sigma_sc,
            d.alpha_s,
            d.alpha_c,
            d.eta_s,
            d.eta_c,
            d.dim,
            d.n_train,
            d.n_val,
            d.grid_res,
            d.lambda,
            self.model.depth,
            self.model.width,
            self.model.activation,
            t.epochs,
            t.batch_size,
            t.learning_rate,
            t.shuffle_seed,
            self.ridge,
        )
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn cell_id(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.model.config(self.dataset.dim).validate()?;
        self.train.validate()?;
        if !(self.ridge >= 0.0) {
            return Err(Error::config("ridge must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub data: u64,
    pub init: u64,
    pub shuffle: u64,
}

pub fn derive_seed(base_seed: u64, canonical: &str, run: usize, purpose: &str) -> u64 {
    let digest = Sha256::digest(format!("{base_seed}|{canonical}|{run}|{purpose}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}

pub fn run_seeds(base_seed: u64, params: &CellParams, run: usize) -> RunSeeds {
    let canonical = params.canonical();
    RunSeeds {
        data: derive_seed(base_seed, &canonical, run, "data"),
        init: derive_seed(base_seed, &canonical, run, "init"),
        shuffle: derive_seed(base_seed, &canonical, run, "shuffle"),
    }
}

/// Reference classifier and its probe predictions. Nested datasets are
/// referenced in latent space, everything else on the embedded inputs.
pub fn reference_predictions(ds: &EmbeddedDataset, ridge: f64) -> Result<(LinearClassifier, Vec<i8>)> {
    let labels = ds.train.labels();
    if ds.spec.is_nested() {
        let clf = fit_lda(&ds.train.latent_matrix(), &labels, ridge)?;
        let pred = clf.predict_batch(&ds.probe_latent_matrix())?;
        Ok((clf, pred))
    } else {
        let clf = fit_lda(&ds.train.inputs, &labels, ridge)?;
        let pred = clf.predict_batch(&ds.probe_inputs)?;
        Ok((clf, pred))
    }
}

/// A trained model together with its reference classifier.
#[derive(Debug, Clone)]
pub struct TrainedRun {
    pub model: MlpModel,
    pub history: TrainHistory,
    pub reference: LinearClassifier,
    pub report: BiasReport,
}

/// Trains one model on `ds` and measures its shortcut bias.
pub fn train_and_measure(
    ds: &EmbeddedDataset,
    model: ModelSpec,
    train: &TrainConfig,
    init_seed: u64,
    ridge: f64,
) -> Result<TrainedRun> {
    let config = model.config(ds.spec.dim);
    let (reference, optimal) = reference_predictions(ds, ridge)?;
    let y_train = ds.train.labels();
    let y_val = ds.val.labels();
    let val = (!ds.val.is_empty())
        .then(|| Labeled::new(&ds.val.inputs, &y_val))
        .transpose()?;
    let (trained, history) = mlp::train(
        mlp::init(config, init_seed)?,
        Labeled::new(&ds.train.inputs, &y_train)?,
        val,
        train,
    )?;
    let predicted = trained.predict_batch(&ds.probe_inputs)?;
    let report = shortcut_bias(&predicted, &optimal, &ds.probes)?.with_config(ds.spec.clone(), config);
    Ok(TrainedRun {
        model: trained,
        history,
        reference,
        report,
    })
}

/// Model configuration file for a single training run. `in_dim` defaults to
/// the dataset dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub depth: usize,
    pub width: usize,
    pub activation: Activation,
    #[serde(default)]
    pub in_dim: Option<usize>,
    #[serde(default)]
    pub init_seed: u64,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            depth: self.depth,
            width: self.width,
            activation: self.activation,
        }
    }
}

/// Everything a single run produces: the trained network, its history, the
/// reference classifier and the bias measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub model: ModelFile,
    pub history: TrainHistory,
    pub reference: LinearClassifier,
    pub report: BiasReport,
}

impl RunRecord {
    pub fn model(&self) -> Result<MlpModel> {
        MlpModel::try_from(self.model.clone())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Trains per `config` on a loaded dataset.
pub fn train_run(ds: &EmbeddedDataset, config: &RunConfig) -> Result<RunRecord> {
    if let Some(d) = config.in_dim {
        if d != ds.spec.dim {
            return Err(Error::DimensionMismatch {
                expected: ds.spec.dim,
                got: d,
            });
        }
    }
    let t = train_and_measure(ds, config.model_spec(), &config.train, config.init_seed, config.ridge)?;
    Ok(RunRecord {
        config: config.clone(),
        model: ModelFile::from(&t.model),
        history: t.history,
        reference: t.reference,
        report: t.report,
    })
}

/// Re-measures the bias of a stored model on `ds` with a freshly fit reference.
pub fn measure_bias(ds: &EmbeddedDataset, model: &MlpModel, ridge: f64) -> Result<BiasReport> {
    let (_, optimal) = reference_predictions(ds, ridge)?;
    let predicted = model.predict_batch(&ds.probe_inputs)?;
    Ok(shortcut_bias(&predicted, &optimal, &ds.probes)?.with_config(ds.spec.clone(), *model.config()))
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub run: usize,
    pub seeds: RunSeeds,
    /// `None` when training diverged.
    pub report: Option<BiasReport>,
    pub final_train_acc: Option<f64>,
    pub final_val_acc: Option<f64>,
    pub diverged_at_epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell_id: String,
    pub params: CellParams,
    pub runs: Vec<RunOutcome>,
    pub n_excluded: usize,
    pub mean_bias: f64,
    /// Sample standard deviation (`n − 1`); zero for a single run.
    pub std_bias: f64,
    pub mean_reliance_model: f64,
    pub mean_reliance_optimal: f64,
    pub mean_train_acc: f64,
    pub mean_val_acc: f64,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    match v.len() {
        0 => f64::NAN,
        1 => 0.0,
        n => {
            let m = mean(v);
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    }
}

fn execute_run(params: &CellParams, base_seed: u64, run: usize) -> Result<RunOutcome> {
    let seeds = run_seeds(base_seed, params, run);
    let spec = DatasetSpec {
        seed: seeds.data,
        ..params.dataset.clone()
    };
    let ds = generate_dataset(&spec)?;
    let train = TrainConfig {
        shuffle_seed: seeds.shuffle,
        ..params.train
    };
    match train_and_measure(&ds, params.model, &train, seeds.init, params.ridge) {
        Ok(t) => Ok(RunOutcome {
            run,
            seeds,
            final_train_acc: t.history.final_train_acc(),
            final_val_acc: t.history.final_val_acc(),
            report: Some(t.report),
            diverged_at_epoch: None,
        }),
        Err(Error::Diverged { epoch, .. }) => Ok(RunOutcome {
            run,
            seeds,
            report: None,
            final_train_acc: None,
            final_val_acc: None,
            diverged_at_epoch: Some(epoch),
        }),
        Err(e) => Err(e),
    }
}

/// Runs `n_runs` seeded repetitions of one cell. Diverged runs are counted in
/// `n_excluded` and left out of every mean.
pub fn run_cell(params: &CellParams, n_runs: usize, base_seed: u64) -> Result<CellResult> {
    params.validate()?;
    if n_runs == 0 {
        return Err(Error::config("n_runs must be at least 1"));
    }
    let runs = (0..n_runs)
        .into_par_iter()
        .map(|r| execute_run(params, base_seed, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(params.clone(), runs))
}

fn aggregate(params: CellParams, runs: Vec<RunOutcome>) -> CellResult {
    let ok: Vec<&BiasReport> = runs.iter().filter_map(|r| r.report.as_ref()).collect();
    let biases: Vec<f64> = ok.iter().map(|r| r.bias).collect();
    let pick = |f: fn(&RunOutcome) -> Option<f64>| -> Vec<f64> { runs.iter().filter_map(f).collect() };
    CellResult {
        cell_id: params.cell_id(),
        n_excluded: runs.len() - ok.len(),
        mean_bias: mean(&biases),
        std_bias: sample_std(&biases),
        mean_reliance_model: mean(&ok.iter().map(|r| r.reliance_model).collect::<Vec<_>>()),
        mean_reliance_optimal: mean(&ok.iter().map(|r| r.reliance_optimal).collect::<Vec<_>>()),
        mean_train_acc: mean(&pick(|r| r.final_train_acc)),
        mean_val_acc: mean(&pick(|r| r.final_val_acc)),
        params,
        runs,
    }
}

impl CellResult {
    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn summary(&self) -> CellSummary {
        let d = &self.params.dataset;
        CellSummary {
            cell_id: self.cell_id.clone(),
            rho_s: d.rho_s,
            rho_c: d.rho_c,
            sigma_sc: d.sigma_sc,
            alpha_ratio: self.params.alpha_ratio(),
            eta_s: d.eta_s,
            eta_c: d.eta_c,
            depth: self.params.model.depth,
            width: self.params.model.width,
            activation: self.params.model.activation,
            n_runs: self.n_runs(),
            n_excluded: self.n_excluded,
            mean_bias: self.mean_bias,
            std_bias: self.std_bias,
            mean_reliance_model: self.mean_reliance_model,
            mean_reliance_optimal: self.mean_reliance_optimal,
            mean_train_acc: self.mean_train_acc,
            mean_val_acc: self.mean_val_acc,
        }
    }
}

/// One sweep CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell_id: String,
    pub rho_s: f64,
    pub rho_c: f64,
    pub sigma_sc: f64,
    pub alpha_ratio: f64,
    pub eta_s: usize,
    pub eta_c: usize,
    pub depth: usize,
    pub width: usize,
    pub activation: Activation,
    pub n_runs: usize,
    pub n_excluded: usize,
    pub mean_bias: f64,
    pub std_bias: f64,
    pub mean_reliance_model: f64,
    pub mean_reliance_optimal: f64,
    pub mean_train_acc: f64,
    pub mean_val_acc: f64,
}

/// A swept parameter and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<serde_json::Value>,
}

pub const AXIS_NAMES: [&str; 9] = [
    "rho_s",
    "rho_c",
    "sigma_sc",
    "alpha_ratio",
    "eta_s",
    "eta_c",
    "depth",
    "width",
    "activation",
];

fn default_n_runs() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub base: CellParams,
    #[serde(default = "default_n_runs")]
    pub n_runs: usize,
    #[serde(default)]
    pub base_seed: u64,
}

fn as_f64(axis: &str, v: &serde_json::Value) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::config(format!("axis `{axis}` expects numbers, got {v}")))
}

fn as_usize(axis: &str, v: &serde_json::Value) -> Result<usize> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| Error::config(format!("axis `{axis}` expects non-negative integers, got {v}")))
}

/// Applies one axis value to a cell.
pub fn apply_axis(params: &mut CellParams, name: &str, value: &serde_json::Value) -> Result<()> {
    match name {
        "rho_s" => params.dataset.rho_s = as_f64(name, value)?,
        "rho_c" => params.dataset.rho_c = as_f64(name, value)?,
        "sigma_sc" => params.dataset.sigma_sc = as_f64(name, value)?,
        "alpha_ratio" => params.set_alpha_ratio(as_f64(name, value)?)?,
        "eta_s" => params.dataset.eta_s = as_usize(name, value)?,
        "eta_c" => params.dataset.eta_c = as_usize(name, value)?,
        "depth" => params.model.depth = as_usize(name, value)?,
        "width" => params.model.width = as_usize(name, value)?,
        "activation" => {
            params.model.activation = value
                .as_str()
                .ok_or_else(|| Error::config(format!("axis `activation` expects names, got {value}")))?
                .parse()?
        }
        other => return Err(Error::config(format!("unknown axis `{other}`"))),
    }
    Ok(())
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::config("n_runs must be at least 1"));
        }
        if self.axes.is_empty() {
            return Err(Error::config("a sweep needs at least one axis"));
        }
        for a in &self.axes {
            if !AXIS_NAMES.contains(&a.name.as_str()) {
                return Err(Error::config(format!(
                    "unknown axis `{}`; expected one of {AXIS_NAMES:?}",
                    a.name
                )));
            }
            if a.values.is_empty() {
                return Err(Error::config(format!("axis `{}` has no values", a.name)));
            }
        }
        Ok(())
    }

    /// Cartesian product of the axes, first axis varying slowest.
    pub fn cells(&self) -> Result<Vec<CellParams>> {
        self.validate()?;
        let mut cells = vec![self.base.clone()];
        for axis in &self.axes {
            let mut next = Vec::with_capacity(cells.len() * axis.values.len());
            for cell in &cells {
                for v in &axis.values {
                    let mut c = cell.clone();
                    apply_axis(&mut c, &axis.name, v)?;
                    next.push(c);
                }
            }
            cells = next;
        }
        for c in &cells {
            c.validate()?;
        }
        Ok(cells)
    }

    /// Availability-by-predictivity grid on the default architecture.
    pub fn availability_grid() -> Self {
        SweepSpec {
            axes: vec![
                Axis {
                    name: "rho_s".into(),
                    values: [0.6, 0.7, 0.8, 0.85, 0.9].iter().map(|v| (*v).into()).collect(),
                },
                Axis {
                    name: "alpha_ratio".into(),
                    values: [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
                        .iter()
                        .map(|v| (*v).into())
                        .collect(),
                },
            ],
            base: CellParams::new(DatasetSpec::default(), ModelSpec::default()),
            n_runs: 10,
            base_seed: 0,
        }
    }
}

/// Runs every cell of the sweep; cells are independent and run in parallel.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<CellResult>> {
    let cells = spec.cells()?;
    cells
        .par_iter()
        .map(|c| run_cell(c, spec.n_runs, spec.base_seed))
        .collect()
}

pub fn write_csv(results: &[CellResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for r in results {
        w.serialize(r.summary()).map_err(|e| Error::csv(path, e))?;
    }
    if results.is_empty() {
        w.write_record(CSV_HEADER).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<CellSummary>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::config(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::csv(path, e)))
        .collect()
}

pub const DEFAULT_SIGNMAP_MU2: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 10.0];

/// Writes `signmap_mu2_<mu2>.csv` for each `mu2` with `mu1` fixed, using the
/// same availability grid on both axes.
pub fn emit_signmap(mu1: f64, mu2s: &[f64], a_grid: Option<&[f64]>, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let default = default_a_grid();
    let grid = a_grid.unwrap_or(&default);
    mu2s.iter()
        .map(|&mu2| {
            let map = sign_map(mu1, mu2, grid, grid)?;
            let path = dir.join(format!("signmap_mu2_{mu2}.csv"));
            write_signmap_csv(&map, &path)?;
            Ok(path)
        })
        .collect()
}
