//! Synthetic two-feature datasets.
//!
//! A label `y ∈ {−1, +1}` conditions a correlated Gaussian latent pair
//! `(z_s, z_c)`. Each latent is written along its own unit direction with an
//! amplification gain, and the two embeddings are summed. When either feature
//! is nested, both embeddings go through a steep `tanh`, and a nested feature
//! then passes through a cascade of random rotations, each followed by the
//! same `tanh`.
//!
//! Random streams: the apparatus, the train split and the validation split each
//! draw from their own ChaCha8 stream keyed by the dataset seed. Normal deviates
//! come from `rand_distr::StandardNormal` (ziggurat).

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf_inv;

use crate::error::{Error, Result};
use crate::util::{create_dir, read_json, seeded_rng, write_json};

const STREAM_APPARATUS: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_VAL: u64 = 2;

fn default_dim() -> usize {
    100
}
fn default_grid_res() -> usize {
    30
}
fn default_lambda() -> f64 {
    100.0
}

/// Full recipe for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub rho_s: f64,
    pub rho_c: f64,
    pub sigma_sc: f64,
    pub alpha_s: f64,
    pub alpha_c: f64,
    #[serde(default)]
    pub eta_s: usize,
    #[serde(default)]
    pub eta_c: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub n_train: usize,
    pub n_val: usize,
    #[serde(default = "default_grid_res")]
    pub grid_res: usize,
    pub seed: u64,
    /// Gain inside the nesting `tanh`.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

impl Default for DatasetSpec {
    /// The availability-versus-predictivity reference cell: shortcut amplified
    /// 64 times relative to the core feature.
    fn default() -> Self {
        DatasetSpec {
            rho_s: 0.85,
            rho_c: 0.9,
            sigma_sc: 0.6,
            alpha_s: 8.0,
            alpha_c: 0.125,
            eta_s: 0,
            eta_c: 0,
            dim: 100,
            n_train: 3200,
            n_val: 1000,
            grid_res: 30,
            seed: 0,
            lambda: 100.0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, rho) in [("rho_s", self.rho_s), ("rho_c", self.rho_c)] {
            if !(rho > 0.5 && rho < 1.0) {
                return Err(Error::config(format!("{name} = {rho} must lie in (0.5, 1)")));
            }
        }
        if !(self.sigma_sc.abs() < 1.0) {
            return Err(Error::config(format!(
                "sigma_sc = {} must satisfy |sigma_sc| < 1",
                self.sigma_sc
            )));
        }
        for (name, alpha) in [("alpha_s", self.alpha_s), ("alpha_c", self.alpha_c)] {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::config(format!("{name} = {alpha} must be positive")));
            }
        }
        if self.dim < 2 {
            return Err(Error::config("dim must be at least 2"));
        }
        if self.grid_res < 2 || self.grid_res % 2 != 0 {
            return Err(Error::config(format!(
                "grid_res = {} must be even and at least 2",
                self.grid_res
            )));
        }
        if self.n_train % 2 != 0 || self.n_val % 2 != 0 {
            return Err(Error::config("n_train and n_val must be even"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda must be positive"));
        }
        Ok(())
    }

    pub fn mu_s(&self) -> Result<f64> {
        predictivity_to_mean(self.rho_s)
    }

    pub fn mu_c(&self) -> Result<f64> {
        predictivity_to_mean(self.rho_c)
    }

    pub fn is_nested(&self) -> bool {
        self.eta_s > 0 || self.eta_c > 0
    }
}

/// Class mean giving `Pr(y = sign z) = rho` for a unit-variance latent.
pub fn predictivity_to_mean(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain(format!("predictivity {rho} outside (0, 1)")));
    }
    Ok(std::f64::consts::SQRT_2 * erf_inv(2.0 * rho - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentSample {
    pub z_s: f64,
    pub z_c: f64,
    pub y: i8,
}

/// Class-balanced latent samples with alternating labels `+1, −1, +1, …`.
pub fn sample_latents(spec: &DatasetSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<LatentSample>> {
    if n % 2 != 0 {
        return Err(Error::config(format!("sample count {n} must be even")));
    }
    let sigma = spec.sigma_sc;
    if !(sigma.abs() < 1.0) {
        return Err(Error::domain(format!(
            "covariance with sigma_sc = {sigma} is not positive definite"
        )));
    }
    let mu_s = spec.mu_s()?;
    let mu_c = spec.mu_c()?;
    // Cholesky factor of [[1, σ], [σ, 1]].
    let l22 = (1.0 - sigma * sigma).sqrt();
    Ok((0..n)
        .map(|i| {
            let y: i8 = if i % 2 == 0 { 1 } else { -1 };
            let yf = f64::from(y);
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            LatentSample {
                z_s: yf * mu_s + g1,
                z_c: yf * mu_c + sigma * g1 + l22 * g2,
                y,
            }
        })
        .collect())
}

/// Cartesian probe grid, `z_s` varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeGrid {
    pub axis_s: Vec<f64>,
    pub axis_c: Vec<f64>,
    pub points: Vec<(f64, f64)>,
}

impl ProbeGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n` (even) points evenly spanning `[−half, half]`, built so that the axis
/// is exactly closed under negation.
fn symmetric_axis(half: f64, n: usize) -> Vec<f64> {
    let denom = (n - 1) as f64;
    (0..n)
        .map(|k| half * (2.0 * k as f64 - denom) / denom)
        .collect()
}

pub fn make_probe_grid(spec: &DatasetSpec) -> Result<ProbeGrid> {
    let n = spec.grid_res;
    if n < 2 || n % 2 != 0 {
        return Err(Error::config(format!("grid_res = {n} must be even and at least 2")));
    }
    let axis_s = symmetric_axis(3.0 * spec.mu_s()?, n);
    let axis_c = symmetric_axis(3.0 * spec.mu_c()?, n);
    let points = axis_s
        .iter()
        .flat_map(|&s| axis_c.iter().map(move |&c| (s, c)))
        .collect();
    Ok(ProbeGrid {
        axis_s,
        axis_c,
        points,
    })
}

/// A cascade `e ↦ tanh(λ Q_k ⋯ tanh(λ Q_1 e))` of special-orthogonal layers.
#[derive(Debug, Clone, PartialEq)]
pub struct NestingNet {
    pub layers: Vec<DMatrix<f64>>,
    pub lambda: f64,
}

impl NestingNet {
    /// Applies the cascade to every column of `e` in place.
    pub fn apply(&self, e: &mut DMatrix<f64>) {
        for q in &self.layers {
            let mut next = q * &*e;
            next.apply(|v| *v = (self.lambda * *v).tanh());
            *e = next;
        }
    }

    /// Inverse cascade; entries must lie strictly inside `(−1, 1)`.
    pub fn invert(&self, out: &DVector<f64>) -> Result<DVector<f64>> {
        let mut v = out.clone();
        for q in self.layers.iter().rev() {
            if v.iter().any(|x| x.abs() >= 1.0) {
                return Err(Error::domain("tanh output saturated; cascade is not invertible numerically"));
            }
            v.apply(|x| *x = x.atanh() / self.lambda);
            v = q.tr_mul(&v);
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingApparatus {
    pub w_s: DVector<f64>,
    pub w_c: DVector<f64>,
    pub nest_s: Option<NestingNet>,
    pub nest_c: Option<NestingNet>,
}

fn gaussian_vector(dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Removes the components along `basis` twice (classical Gram–Schmidt with
/// re-orthogonalization) and normalizes. `None` on numerical collapse.
fn orthonormalize(mut v: DVector<f64>, basis: &[&DVector<f64>]) -> Option<DVector<f64>> {
    for _ in 0..2 {
        for b in basis {
            let p = b.dot(&v);
            v.axpy(-p, b, 1.0);
        }
    }
    let n = v.norm();
    (n > 1e-8).then(|| v / n)
}

/// Haar-distributed rotation: QR of a Gaussian matrix with the column signs
/// fixed by `diag(R)`, then the first column flipped if needed for `det = +1`.
pub fn random_rotation(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

pub fn build_apparatus(spec: &DatasetSpec, rng: &mut ChaCha8Rng) -> Result<EmbeddingApparatus> {
    if spec.dim < 2 {
        return Err(Error::config("dim must be at least 2"));
    }
    let w_s = loop {
        if let Some(v) = orthonormalize(gaussian_vector(spec.dim, rng), &[]) {
            break v;
        }
    };
    let w_c = loop {
        if let Some(v) = orthonormalize(gaussian_vector(spec.dim, rng), &[&w_s]) {
            break v;
        }
    };
    let mut nest = |eta: usize| {
        (eta > 0).then(|| NestingNet {
            layers: (0..eta).map(|_| random_rotation(spec.dim, rng)).collect(),
            lambda: spec.lambda,
        })
    };
    let nest_s = nest(spec.eta_s);
    let nest_c = nest(spec.eta_c);
    Ok(EmbeddingApparatus {
        w_s,
        w_c,
        nest_s,
        nest_c,
    })
}

impl EmbeddingApparatus {
    pub fn dim(&self) -> usize {
        self.w_s.len()
    }

    /// Embeds latent pairs as the columns of a `dim × n` matrix.
    pub fn embed_many(&self, spec: &DatasetSpec, latents: impl ExactSizeIterator<Item = (f64, f64)>) -> DMatrix<f64> {
        let n = latents.len();
        let dim = self.dim();
        let mut e_s = DMatrix::zeros(dim, n);
        let mut e_c = DMatrix::zeros(dim, n);
        for (j, (z_s, z_c)) in latents.enumerate() {
            e_s.column_mut(j).axpy(spec.alpha_s * z_s, &self.w_s, 0.0);
            e_c.column_mut(j).axpy(spec.alpha_c * z_c, &self.w_c, 0.0);
        }
        // In nested datasets every feature is nonlinear: each embedding first
        // passes through the steep tanh, then through its own cascade.
        if spec.is_nested() {
            for e in [&mut e_s, &mut e_c] {
                e.apply(|v| *v = (spec.lambda * *v).tanh());
            }
        }
        if let Some(net) = &self.nest_s {
            net.apply(&mut e_s);
        }
        if let Some(net) = &self.nest_c {
            net.apply(&mut e_c);
        }
        e_s + e_c
    }
}

/// Input vector for one latent pair.
pub fn embed(z: (f64, f64), apparatus: &EmbeddingApparatus, spec: &DatasetSpec) -> DVector<f64> {
    apparatus
        .embed_many(spec, std::iter::once(z))
        .column(0)
        .into_owned()
}

/// Latents plus their embedded inputs, one sample per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub latents: Vec<LatentSample>,
    pub inputs: DMatrix<f64>,
}

impl Split {
    fn embed(latents: Vec<LatentSample>, apparatus: &EmbeddingApparatus, spec: &DatasetSpec) -> Self {
        let inputs = apparatus.embed_many(spec, latents.iter().map(|l| (l.z_s, l.z_c)));
        Split { latents, inputs }
    }

    pub fn len(&self) -> usize {
        self.latents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latents.is_empty()
    }

    pub fn labels(&self) -> Vec<i8> {
        self.latents.iter().map(|l| l.y).collect()
    }

    /// Raw latents as a `2 × n` matrix.
    pub fn latent_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(2, self.len(), |i, j| {
            let l = &self.latents[j];
            if i == 0 {
                l.z_s
            } else {
                l.z_c
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDataset {
    pub spec: DatasetSpec,
    pub apparatus: EmbeddingApparatus,
    pub train: Split,
    pub val: Split,
    pub probes: ProbeGrid,
    /// Probe points pushed through the same apparatus as the training data.
    pub probe_inputs: DMatrix<f64>,
}

impl EmbeddedDataset {
    /// Probe points as a `2 × grid_res²` matrix.
    pub fn probe_latent_matrix(&self) -> DMatrix<f64> {
        let pts = &self.probes.points;
        DMatrix::from_fn(2, pts.len(), |i, j| if i == 0 { pts[j].0 } else { pts[j].1 })
    }
}

pub fn generate_dataset(spec: &DatasetSpec) -> Result<EmbeddedDataset> {
    spec.validate()?;
    let apparatus = build_apparatus(spec, &mut seeded_rng(spec.seed, STREAM_APPARATUS))?;
    let train = sample_latents(spec, spec.n_train, &mut seeded_rng(spec.seed, STREAM_TRAIN))?;
    let val = sample_latents(spec, spec.n_val, &mut seeded_rng(spec.seed, STREAM_VAL))?;
    assemble(spec.clone(), apparatus, train, val)
}

fn assemble(
    spec: DatasetSpec,
    apparatus: EmbeddingApparatus,
    train: Vec<LatentSample>,
    val: Vec<LatentSample>,
) -> Result<EmbeddedDataset> {
    let probes = make_probe_grid(&spec)?;
    let probe_inputs = apparatus.embed_many(&spec, probes.points.iter().copied());
    let train = Split::embed(train, &apparatus, &spec);
    let val = Split::embed(val, &apparatus, &spec);
    Ok(EmbeddedDataset {
        spec,
        apparatus,
        train,
        val,
        probes,
        probe_inputs,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct ApparatusFile {
    dim: usize,
    w_s: Vec<f64>,
    w_c: Vec<f64>,
    lambda: f64,
    /// Each layer is a row-major `dim × dim` array.
    nest_s: Vec<Vec<f64>>,
    nest_c: Vec<Vec<f64>>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl ApparatusFile {
    fn new(a: &EmbeddingApparatus, lambda: f64) -> Self {
        let layers = |n: &Option<NestingNet>| {
            n.as_ref()
                .map(|n| n.layers.iter().map(row_major).collect())
                .unwrap_or_default()
        };
        ApparatusFile {
            dim: a.dim(),
            w_s: a.w_s.as_slice().to_vec(),
            w_c: a.w_c.as_slice().to_vec(),
            lambda,
            nest_s: layers(&a.nest_s),
            nest_c: layers(&a.nest_c),
        }
    }

    fn into_apparatus(self) -> Result<EmbeddingApparatus> {
        let dim = self.dim;
        if self.w_s.len() != dim || self.w_c.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.w_s.len().min(self.w_c.len()),
            });
        }
        let lambda = self.lambda;
        let net = |layers: Vec<Vec<f64>>| -> Result<Option<NestingNet>> {
            if layers.is_empty() {
                return Ok(None);
            }
            let layers = layers
                .into_iter()
                .map(|l| {
                    if l.len() != dim * dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim * dim,
                            got: l.len(),
                        });
                    }
                    Ok(DMatrix::from_row_slice(dim, dim, &l))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Some(NestingNet { layers, lambda }))
        };
        Ok(EmbeddingApparatus {
            w_s: DVector::from_vec(self.w_s),
            w_c: DVector::from_vec(self.w_c),
            nest_s: net(self.nest_s)?,
            nest_c: net(self.nest_c)?,
        })
    }
}

fn write_split(path: &Path, split: &Split) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let dim = split.inputs.nrows();
    let mut header = vec!["z_s".to_string(), "z_c".to_string(), "y".to_string()];
    header.extend((0..dim).map(|i| format!("x_{i}")));
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (j, l) in split.latents.iter().enumerate() {
        let mut rec = vec![l.z_s.to_string(), l.z_c.to_string(), l.y.to_string()];
        rec.extend(split.inputs.column(j).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_split(path: &Path, dim: usize) -> Result<Split> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let width = r.headers().map_err(|e| Error::csv(path, e))?.len();
    if width != dim + 3 {
        return Err(Error::DimensionMismatch {
            expected: dim + 3,
            got: width.saturating_sub(3),
        });
    }
    let mut latents = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::config(format!("{}: bad number `{}`", path.display(), &rec[i])))
        };
        let y: i8 = rec[2]
            .parse()
            .map_err(|_| Error::config(format!("{}: bad label `{}`", path.display(), &rec[2])))?;
        if y != 1 && y != -1 {
            return Err(Error::config(format!("{}: label {y} not in {{-1, 1}}", path.display())));
        }
        latents.push(LatentSample {
            z_s: num(0)?,
            z_c: num(1)?,
            y,
        });
        for i in 3..width {
            values.push(num(i)?);
        }
    }
    let inputs = DMatrix::from_vec(dim, latents.len(), values);
    Ok(Split { latents, inputs })
}

fn write_probes(path: &Path, grid: &ProbeGrid) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["z_s", "z_c"]).map_err(|e| Error::csv(path, e))?;
    for (s, c) in &grid.points {
        w.write_record([s.to_string(), c.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `spec.json`, `train.csv`, `val.csv`, `probes.csv` and `apparatus.json` into `dir`.
pub fn export(dataset: &EmbeddedDataset, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    write_json(&dir.join("spec.json"), &dataset.spec)?;
    write_split(&dir.join("train.csv"), &dataset.train)?;
    write_split(&dir.join("val.csv"), &dataset.val)?;
    write_probes(&dir.join("probes.csv"), &dataset.probes)?;
    write_json(
        &dir.join("apparatus.json"),
        &ApparatusFile::new(&dataset.apparatus, dataset.spec.lambda),
    )
}

/// Reads a directory written by [`export`]. Probe inputs are re-embedded
/// through the stored apparatus.
pub fn load(dir: &Path) -> Result<EmbeddedDataset> {
    let spec: DatasetSpec = read_json(&dir.join("spec.json"))?;
    spec.validate()?;
    let apparatus = read_json::<ApparatusFile>(&dir.join("apparatus.json"))?.into_apparatus()?;
    if apparatus.dim() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            got: apparatus.dim(),
        });
    }
    let train = read_split(&dir.join("train.csv"), spec.dim)?;
    let val = read_split(&dir.join("val.csv"), spec.dim)?;
    let probes = make_probe_grid(&spec)?;
    let probe_inputs = apparatus.embed_many(&spec, probes.points.iter().copied());
    Ok(EmbeddedDataset {
        spec,
        apparatus,
        train,
        val,
        probes,
        probe_inputs,
    })
}
