//! Dataset directory layout.
//!
//! ```text
//! manifest.toml     format version, n, V, q, edge layout, fingerprint
//! coords.csv        id,x,y,z          (V rows, ids 1..V in order)
//! attributes.csv    z_1..z_V          (n rows)
//! predictor.csv     x                 (n rows)
//! auxiliaries.csv   w_1..w_q          (n rows; absent when q = 0)
//! edges.csv         subject,u,v,value (u < v, 1-based)   or
//! networks/         subject_00001.csv ... one V × V matrix per subject
//! ```

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    check_version, expect_header, format_error, format_f64, parse_f64, read_csv, read_toml, write_csv, write_toml,
    FORMAT_VERSION,
};
use crate::error::{Error, Result};
use crate::model::{pair_count, pair_index, pairs, Dataset, Point3};

pub const MANIFEST_FILE: &str = "manifest.toml";
const COORDS_FILE: &str = "coords.csv";
const ATTRIBUTES_FILE: &str = "attributes.csv";
const PREDICTOR_FILE: &str = "predictor.csv";
const AUXILIARIES_FILE: &str = "auxiliaries.csv";
const EDGES_FILE: &str = "edges.csv";
const NETWORKS_DIR: &str = "networks";

/// Storage layout of the networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeFormat {
    /// One long-format file of upper-triangle entries.
    #[default]
    Long,
    /// One full symmetric matrix per subject.
    Matrices,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub subjects: usize,
    pub nodes: usize,
    pub aux: usize,
    pub edge_format: EdgeFormat,
    /// Checked on read when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
}

fn node_header(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|k| format!("{prefix}_{k}")).collect()
}

fn subject_file(dir: &Path, i: usize) -> PathBuf {
    dir.join(NETWORKS_DIR).join(format!("subject_{:05}.csv", i + 1))
}

fn floats(row: &[f64]) -> Vec<String> {
    row.iter().map(|&x| format_f64(x)).collect()
}

pub fn write_dataset(dir: &Path, data: &Dataset, format: EdgeFormat) -> Result<()> {
    let (n, v_count, q) = (data.subjects(), data.nodes(), data.aux_count());
    write_toml(
        &dir.join(MANIFEST_FILE),
        &DatasetManifest {
            format_version: FORMAT_VERSION,
            subjects: n,
            nodes: v_count,
            aux: q,
            edge_format: format,
            fingerprint: Some(data.fingerprint()),
        },
    )?;
    let head = ["id", "x", "y", "z"].map(String::from);
    write_csv(
        &dir.join(COORDS_FILE),
        Some(&head),
        data.coords().iter().enumerate().map(|(k, c)| {
            let mut row = vec![(k + 1).to_string()];
            row.extend(floats(c));
            row
        }),
    )?;
    write_csv(
        &dir.join(ATTRIBUTES_FILE),
        Some(&node_header("z", v_count)),
        data.all_attributes().iter().map(|z| floats(z.as_slice())),
    )?;
    write_csv(
        &dir.join(PREDICTOR_FILE),
        Some(&["x".to_string()]),
        data.predictor().iter().map(|&x| vec![format_f64(x)]),
    )?;
    if q > 0 {
        let w = data.auxiliaries();
        write_csv(
            &dir.join(AUXILIARIES_FILE),
            Some(&node_header("w", q)),
            (0..n).map(|i| (0..q).map(|k| format_f64(w[(i, k)])).collect()),
        )?;
    }
    match format {
        EdgeFormat::Long => {
            let head = ["subject", "u", "v", "value"].map(String::from);
            write_csv(
                &dir.join(EDGES_FILE),
                Some(&head),
                (0..n).flat_map(|i| {
                    pairs(v_count).zip(data.edges(i).iter()).map(move |((u, v), &y)| {
                        vec![(i + 1).to_string(), (u + 1).to_string(), (v + 1).to_string(), format_f64(y)]
                    })
                }),
            )?;
        }
        EdgeFormat::Matrices => {
            for i in 0..n {
                let m = data.network_matrix(i);
                write_csv(
                    &subject_file(dir, i),
                    None,
                    (0..v_count).map(|u| (0..v_count).map(|v| format_f64(m[(u, v)])).collect()),
                )?;
            }
        }
    }
    Ok(())
}

fn numeric_rows(path: &Path, rows: &[Vec<String>], width: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    if rows.len() != count {
        return Err(format_error(path, format!("{} rows, expected {count}", rows.len())));
    }
    rows.iter()
        .enumerate()
        .map(|(r, row)| {
            if row.len() != width {
                return Err(format_error(path, format!("row {} has {} fields, expected {width}", r + 1, row.len())));
            }
            row.iter()
                .enumerate()
                .map(|(c, s)| parse_f64(path, || format!("row {}, column {}", r + 1, c + 1), s))
                .collect()
        })
        .collect()
}

fn parse_index(path: &Path, what: &str, line: usize, s: &str, max: usize) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(k) if (1..=max).contains(&k) => Ok(k - 1),
        _ => Err(format_error(path, format!("row {line}: {what} '{s}' is not in 1..={max}"))),
    }
}

fn read_long_edges(path: &Path, n: usize, v_count: usize) -> Result<Vec<DVector<f64>>> {
    let (head, rows) = read_csv(path, true)?;
    expect_header(path, &head, &["subject", "u", "v", "value"].map(String::from))?;
    let h = pair_count(v_count);
    let mut edges = vec![DVector::from_element(h, f64::NAN); n];
    let mut seen = vec![vec![false; h]; n];
    for (r, row) in rows.iter().enumerate() {
        let line = r + 1;
        if row.len() != 4 {
            return Err(format_error(path, format!("row {line} has {} fields, expected 4", row.len())));
        }
        let i = parse_index(path, "subject", line, &row[0], n)?;
        let u = parse_index(path, "u", line, &row[1], v_count)?;
        let v = parse_index(path, "v", line, &row[2], v_count)?;
        if u >= v {
            return Err(format_error(
                path,
                format!("row {line}: entries must have u < v, found ({}, {})", u + 1, v + 1),
            ));
        }
        let k = pair_index(v_count, u, v);
        if seen[i][k] {
            return Err(format_error(
                path,
                format!("row {line}: duplicate entry (subject {}, {}, {})", i + 1, u + 1, v + 1),
            ));
        }
        seen[i][k] = true;
        edges[i][k] = parse_f64(path, || format!("row {line}"), &row[3])?;
    }
    for (i, s) in seen.iter().enumerate() {
        if let Some((u, v)) = pairs(v_count).zip(s).find(|(_, &ok)| !ok).map(|(p, _)| p) {
            return Err(format_error(path, format!("missing entry (subject {}, {}, {})", i + 1, u + 1, v + 1)));
        }
    }
    Ok(edges)
}

fn read_matrices(dir: &Path, n: usize, v_count: usize) -> Result<Vec<DMatrix<f64>>> {
    (0..n)
        .map(|i| {
            let path = subject_file(dir, i);
            let (_, rows) = read_csv(&path, false)?;
            let vals = numeric_rows(&path, &rows, v_count, v_count)?;
            Ok(DMatrix::from_fn(v_count, v_count, |u, v| vals[u][v]))
        })
        .collect()
}

/// Reads and validates a dataset directory.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: DatasetManifest = read_toml(&manifest_path)?;
    check_version(&manifest_path, manifest.format_version)?;
    let DatasetManifest { subjects: n, nodes: v_count, aux: q, .. } = manifest;

    let path = dir.join(COORDS_FILE);
    let (head, rows) = read_csv(&path, true)?;
    expect_header(&path, &head, &["id", "x", "y", "z"].map(String::from))?;
    let vals = numeric_rows(&path, &rows, 4, v_count)?;
    let mut coords: Vec<Point3> = Vec::with_capacity(v_count);
    for (k, row) in vals.iter().enumerate() {
        if row[0] != (k + 1) as f64 {
            return Err(format_error(&path, format!("row {}: id {} out of order", k + 1, rows[k][0])));
        }
        coords.push([row[1], row[2], row[3]]);
    }

    let path = dir.join(ATTRIBUTES_FILE);
    let (head, rows) = read_csv(&path, true)?;
    expect_header(&path, &head, &node_header("z", v_count))?;
    let attributes = numeric_rows(&path, &rows, v_count, n)?.into_iter().map(DVector::from_vec).collect();

    let path = dir.join(PREDICTOR_FILE);
    let (head, rows) = read_csv(&path, true)?;
    expect_header(&path, &head, &["x".to_string()])?;
    let predictor = DVector::from_iterator(n, numeric_rows(&path, &rows, 1, n)?.into_iter().map(|r| r[0]));

    let auxiliaries = if q > 0 {
        let path = dir.join(AUXILIARIES_FILE);
        let (head, rows) = read_csv(&path, true)?;
        expect_header(&path, &head, &node_header("w", q))?;
        let vals = numeric_rows(&path, &rows, q, n)?;
        DMatrix::from_fn(n, q, |i, k| vals[i][k])
    } else {
        DMatrix::zeros(n, 0)
    };

    let data = match manifest.edge_format {
        EdgeFormat::Long => {
            let edges = read_long_edges(&dir.join(EDGES_FILE), n, v_count)?;
            Dataset::from_edges(v_count, edges, attributes, predictor, auxiliaries, coords)
        }
        EdgeFormat::Matrices => {
            let networks = read_matrices(dir, n, v_count)?;
            Dataset::from_matrices(&networks, attributes, predictor, auxiliaries, coords)
        }
    }
    .map_err(|e| match e {
        Error::InvalidInput(reason) => format_error(dir, reason),
        other => other,
    })?;
    if let Some(expected) = &manifest.fingerprint {
        if *expected != data.fingerprint() {
            return Err(format_error(
                &manifest_path,
                "dataset fingerprint does not match the files; they were modified after writing",
            ));
        }
    }
    Ok(data)
}
