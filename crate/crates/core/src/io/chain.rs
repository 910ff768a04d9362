//! Chain directory: `draws.csv` holds one row per stored draw, `chain.toml`
//! holds the hyperparameters, configuration, seed, stream and fingerprints.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    check_version, expect_header, file_sha256, format_error, format_f64, parse_f64, read_csv, read_toml, write_csv,
    write_toml, HyperFile, FORMAT_VERSION,
};
use crate::error::Result;
use crate::model::{Chain, ModelState, SamplerConfig};

pub const DRAWS_FILE: &str = "draws.csv";
pub const CHAIN_META: &str = "chain.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainMeta {
    pub format_version: u32,
    pub draws: usize,
    pub nodes: usize,
    pub aux: usize,
    pub stream: u64,
    pub dataset_fingerprint: String,
    /// SHA-256 of `draws.csv`.
    pub draws_sha256: String,
    /// Dataset directory the chain was fitted to, as given at fit time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    pub config: SamplerConfig,
    pub hyper: HyperFile,
}

/// A chain read from disk with the dataset location recorded beside it.
#[derive(Debug, Clone)]
pub struct ChainFile {
    pub chain: Chain,
    pub dataset: Option<PathBuf>,
}

/// Column names of the draw file for `q` auxiliaries, `v` nodes and rank `r`.
pub fn chain_columns(q: usize, v: usize, r: usize) -> Vec<String> {
    let mut c: Vec<String> = ["mu_y", "mu_z"].map(String::from).to_vec();
    c.extend((1..=q).map(|k| format!("gamma_y[{k}]")));
    c.extend((1..=q).map(|k| format!("gamma_z[{k}]")));
    c.extend(["tau_y2", "tau_z2", "delta", "zeta_index", "zeta"].map(String::from));
    for a in 1..=r + 1 {
        c.extend((a..=r + 1).map(|b| format!("L[{a},{b}]")));
    }
    c.extend((1..=r).map(|k| format!("lambda[{k}]")));
    for k in 1..=r {
        c.extend((1..=3).map(|j| format!("pi[{k},{j}]")));
    }
    c.extend((1..=v).map(|u| format!("eta[{u}]")));
    for u in 1..=v {
        c.extend((1..=r + 1).map(|k| format!("xi[{u},{k}]")));
    }
    c
}

fn state_row(s: &ModelState) -> Vec<String> {
    let f = |x: f64| format_f64(x);
    let mut row = vec![f(s.mu_y), f(s.mu_z)];
    row.extend(s.gamma_y.iter().map(|&x| f(x)));
    row.extend(s.gamma_z.iter().map(|&x| f(x)));
    row.extend([f(s.tau_y2), f(s.tau_z2), f(s.delta), s.zeta_index.to_string(), f(s.zeta)]);
    let d = s.l.nrows();
    for a in 0..d {
        row.extend((a..d).map(|b| f(s.l[(a, b)])));
    }
    row.extend(s.lambda.iter().map(|l| l.to_string()));
    row.extend(s.pi.iter().flat_map(|p| p.iter().map(|&x| f(x))));
    row.extend(s.eta.iter().map(|&e| u8::from(e).to_string()));
    row.extend(s.xi.iter().flat_map(|x| x.iter().map(|&v| f(v))));
    row
}

/// Writes `chain` to `dir`, recording `dataset` as its data location.
pub fn write_chain(dir: &Path, chain: &Chain, dataset: Option<&Path>) -> Result<()> {
    let first = chain.states.first().ok_or_else(|| format_error(dir, "cannot write an empty chain"))?;
    let (q, v, r) = (first.gamma_y.len(), first.nodes(), chain.hyper.rank);
    let draws = dir.join(DRAWS_FILE);
    write_csv(&draws, Some(&chain_columns(q, v, r)), chain.states.iter().map(state_row))?;
    write_toml(
        &dir.join(CHAIN_META),
        &ChainMeta {
            format_version: FORMAT_VERSION,
            draws: chain.len(),
            nodes: v,
            aux: q,
            stream: chain.stream,
            dataset_fingerprint: chain.dataset_fingerprint.clone(),
            draws_sha256: file_sha256(&draws)?,
            dataset: dataset.map(|p| p.display().to_string()),
            config: chain.config,
            hyper: HyperFile::from(&chain.hyper),
        },
    )
}

struct Cursor<'a> {
    path: &'a Path,
    line: usize,
    cols: &'a [String],
    row: &'a [String],
    at: usize,
}

impl Cursor<'_> {
    fn float(&mut self) -> Result<f64> {
        let (line, col) = (self.line, &self.cols[self.at]);
        let x = parse_f64(self.path, || format!("draw {line}, column {col}"), &self.row[self.at])?;
        self.at += 1;
        Ok(x)
    }

    fn int<T: std::str::FromStr>(&mut self) -> Result<T> {
        let s = &self.row[self.at];
        let x = s.parse().map_err(|_| {
            format_error(
                self.path,
                format!("draw {}, column {}: '{s}' is not an integer", self.line, self.cols[self.at]),
            )
        })?;
        self.at += 1;
        Ok(x)
    }

    fn floats(&mut self, k: usize) -> Result<DVector<f64>> {
        let v = (0..k).map(|_| self.float()).collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(v))
    }
}

fn parse_state(c: &mut Cursor<'_>, q: usize, v: usize, r: usize) -> Result<ModelState> {
    let mu_y = c.float()?;
    let mu_z = c.float()?;
    let gamma_y = c.floats(q)?;
    let gamma_z = c.floats(q)?;
    let tau_y2 = c.float()?;
    let tau_z2 = c.float()?;
    let delta = c.float()?;
    let zeta_index = c.int()?;
    let zeta = c.float()?;
    let d = r + 1;
    let mut l = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            l[(a, b)] = c.float()?;
            l[(b, a)] = l[(a, b)];
        }
    }
    let lambda = (0..r).map(|_| c.int::<i8>()).collect::<Result<Vec<_>>>()?;
    let pi = (0..r).map(|_| Ok([c.float()?, c.float()?, c.float()?])).collect::<Result<Vec<_>>>()?;
    let eta = (0..v)
        .map(|_| match c.int::<u8>()? {
            0 => Ok(false),
            1 => Ok(true),
            x => Err(format_error(c.path, format!("draw {}: indicator {x} is not 0 or 1", c.line))),
        })
        .collect::<Result<Vec<_>>>()?;
    let xi = (0..v).map(|_| c.floats(d)).collect::<Result<Vec<_>>>()?;
    Ok(ModelState { mu_y, mu_z, gamma_y, gamma_z, tau_y2, tau_z2, delta, l, lambda, pi, eta, xi, zeta_index, zeta })
}

/// Reads a chain directory, checking the draw file against its recorded
/// hash and every draw against the model invariants.
pub fn read_chain(dir: &Path) -> Result<ChainFile> {
    let meta_path = dir.join(CHAIN_META);
    let meta: ChainMeta = read_toml(&meta_path)?;
    check_version(&meta_path, meta.format_version)?;
    let hyper = meta.hyper.to_hyper().map_err(|e| format_error(&meta_path, e.to_string()))?;
    let draws = dir.join(DRAWS_FILE);
    if file_sha256(&draws)? != meta.draws_sha256 {
        return Err(format_error(&draws, "contents do not match the hash recorded in chain.toml"));
    }
    let (q, v, r) = (meta.aux, meta.nodes, hyper.rank);
    let (head, rows) = read_csv(&draws, true)?;
    let cols = chain_columns(q, v, r);
    expect_header(&draws, &head, &cols)?;
    if rows.len() != meta.draws {
        return Err(format_error(&draws, format!("{} draws, chain.toml records {}", rows.len(), meta.draws)));
    }
    let mut states = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        if row.len() != cols.len() {
            return Err(format_error(
                &draws,
                format!("draw {} has {} fields, expected {}", k + 1, row.len(), cols.len()),
            ));
        }
        let mut c = Cursor { path: &draws, line: k + 1, cols: &cols, row, at: 0 };
        states.push(parse_state(&mut c, q, v, r)?);
    }
    let chain = Chain {
        states,
        hyper,
        config: meta.config,
        dataset_fingerprint: meta.dataset_fingerprint,
        stream: meta.stream,
        wall_clock: 0.0,
    };
    chain.validate(v, q).map_err(|e| format_error(&draws, e.to_string()))?;
    Ok(ChainFile { chain, dataset: meta.dataset.map(PathBuf::from) })
}
