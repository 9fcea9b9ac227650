//! Shortcut reliance over a probe grid and the resulting shortcut bias.
//!
//! Reliance is the grid average of `ŷ(z) (sign z_s − sign z_c)`: `+1` for a
//! classifier reading only `z_s`, `−1` for one reading only `z_c`.

use serde::{Deserialize, Serialize};

use crate::datagen::{DatasetSpec, ProbeGrid};
use crate::error::{Error, Result};
use crate::mlp::MlpConfig;
use crate::util::sign;

pub fn reliance(predictions: &[i8], grid: &ProbeGrid) -> Result<f64> {
    if predictions.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: predictions.len(),
        });
    }
    if grid.is_empty() {
        return Err(Error::config("probe grid is empty"));
    }
    let total: i64 = predictions
        .iter()
        .zip(&grid.points)
        .map(|(&y, &(s, c))| i64::from(y) * i64::from(sign(s) - sign(c)))
        .sum();
    Ok(total as f64 / grid.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub reliance_model: f64,
    pub reliance_optimal: f64,
    /// `reliance_model − reliance_optimal`.
    pub bias: f64,
    pub probe_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<MlpConfig>,
}

impl BiasReport {
    pub fn with_config(mut self, dataset: DatasetSpec, model: MlpConfig) -> Self {
        self.dataset = Some(dataset);
        self.model = Some(model);
        self
    }
}

pub fn shortcut_bias(model: &[i8], optimal: &[i8], grid: &ProbeGrid) -> Result<BiasReport> {
    let reliance_model = reliance(model, grid)?;
    let reliance_optimal = reliance(optimal, grid)?;
    Ok(BiasReport {
        reliance_model,
        reliance_optimal,
        bias: reliance_model - reliance_optimal,
        probe_count: grid.len(),
        dataset: None,
        model: None,
    })
}
