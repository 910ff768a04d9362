use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_version, format_error, read_json, write_json, FORMAT_VERSION};
use crate::error::Result;
use crate::model::Point3;
use crate::simulate::{GroundTruth, ScenarioConfig};

pub const TRUTH_FILE: &str = "truth.json";

/// JSON form of a [`GroundTruth`]; matrices are stored as rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub format_version: u32,
    pub scenario: ScenarioConfig,
    /// Fingerprint of the dataset generated alongside this truth.
    pub dataset_fingerprint: Option<String>,
    pub eta_star: Vec<bool>,
    pub xi_star: Vec<Vec<f64>>,
    pub l_star: Vec<Vec<f64>>,
    pub beta_star: Vec<Vec<f64>>,
    pub coords: Vec<Point3>,
    pub spatial_effects: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(path: &Path, what: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(format_error(path, format!("{what} is not square")));
    }
    Ok(DMatrix::from_fn(d, d, |a, b| rows[a][b]))
}

pub fn write_truth(path: &Path, truth: &GroundTruth, dataset_fingerprint: Option<String>) -> Result<()> {
    write_json(
        path,
        &TruthFile {
            format_version: FORMAT_VERSION,
            scenario: truth.config.clone(),
            dataset_fingerprint,
            eta_star: truth.eta_star.clone(),
            xi_star: truth.xi_star.iter().map(|x| x.iter().copied().collect()).collect(),
            l_star: rows(&truth.l_star),
            beta_star: rows(&truth.beta_star),
            coords: truth.coords.clone(),
            spatial_effects: truth.spatial_effects.iter().map(|d| d.iter().copied().collect()).collect(),
        },
    )
}

/// Reads a truth file and returns it with the recorded dataset fingerprint.
pub fn read_truth(path: &Path) -> Result<(GroundTruth, Option<String>)> {
    let f: TruthFile = read_json(path)?;
    check_version(path, f.format_version)?;
    f.scenario.validate().map_err(|e| format_error(path, e.to_string()))?;
    let v = f.scenario.nodes;
    let d = f.scenario.rank_star + 1;
    if f.eta_star.len() != v || f.xi_star.len() != v || f.coords.len() != v {
        return Err(format_error(path, format!("node-level arrays do not all have {v} entries")));
    }
    if f.xi_star.iter().any(|x| x.len() != d) {
        return Err(format_error(path, format!("every xi_star row needs {d} entries")));
    }
    if f.eta_star.iter().zip(&f.xi_star).any(|(&e, x)| !e && x.iter().any(|&c| c != 0.0)) {
        return Err(format_error(path, "an inactive node has a nonzero xi_star"));
    }
    let l_star = matrix(path, "l_star", &f.l_star)?;
    let beta_star = matrix(path, "beta_star", &f.beta_star)?;
    if l_star.nrows() != d || beta_star.nrows() != v {
        return Err(format_error(path, "l_star or beta_star has the wrong size"));
    }
    Ok((
        GroundTruth {
            eta_star: f.eta_star,
            xi_star: f.xi_star.into_iter().map(DVector::from_vec).collect(),
            l_star,
            beta_star,
            coords: f.coords,
            spatial_effects: f.spatial_effects.into_iter().map(DVector::from_vec).collect(),
            config: f.scenario,
        },
        f.dataset_fingerprint,
    ))
}
