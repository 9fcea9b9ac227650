//! Theory artifacts: `spectrum.json`, `signmap.csv`, `sensitivity.csv`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::alignment::{gap_closed_form, sensitivity, SignMap};
use super::spectrum::spectrum;
use super::{KernelDataModel, KernelKind};
use crate::error::{Error, Result};
use crate::util::write_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub kind: KernelKind,
    pub eigenvalues: Vec<f64>,
    pub normalization_constants: Vec<f64>,
}

pub fn write_spectrum_json(model: &KernelDataModel, path: &Path) -> Result<SpectrumFile> {
    let s = spectrum(model)?;
    let file = SpectrumFile {
        kind: s.kind,
        eigenvalues: s.eigenvalues,
        normalization_constants: s.normalization,
    };
    write_json(path, &file)?;
    Ok(file)
}

/// One row per cell: `a1,a2,sign`.
pub fn write_signmap_csv(map: &SignMap, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["a1", "a2", "sign"])
        .map_err(|e| Error::csv(path, e))?;
    for (i, a1) in map.a1.iter().enumerate() {
        for (j, a2) in map.a2.iter().enumerate() {
            w.write_record([a1.to_string(), a2.to_string(), map.signs[i][j].to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Columns `m,zeta1,zeta2,gap,closed_form_gap`. The closed-form gap is zero
/// below order 9 and is left empty above it.
pub fn write_sensitivity_csv(model: &KernelDataModel, orders: &[usize], path: &Path) -> Result<()> {
    let closed = gap_closed_form(model)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["m", "zeta1", "zeta2", "gap", "closed_form_gap"])
        .map_err(|e| Error::csv(path, e))?;
    for &m in orders {
        let s = sensitivity(model, m)?;
        let cf = match m {
            0..=8 => "0".to_string(),
            9 => closed.to_string(),
            _ if model.kind == KernelKind::Linear => "0".to_string(),
            _ => String::new(),
        };
        w.write_record([
            m.to_string(),
            s.zeta1.to_string(),
            s.zeta2.to_string(),
            s.gap.to_string(),
            cf,
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// 100 evenly spaced availabilities in `[0.05, 5]`.
pub fn default_a_grid() -> Vec<f64> {
    let n = 100;
    (0..n)
        .map(|i| 0.05 + (5.0 - 0.05) * i as f64 / (n - 1) as f64)
        .collect()
}
