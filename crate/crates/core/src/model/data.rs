use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};

/// Tolerance for accepting a network matrix as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// A point in 3-D Euclidean space.
pub type Point3 = [f64; 3];

/// Number of node pairs `u < v` for `v_count` nodes.
#[inline]
pub fn pair_count(v_count: usize) -> usize {
    v_count * v_count.saturating_sub(1) / 2
}

/// Position of the pair `(u, v)` (0-based, `u < v`) in the row-major
/// upper-triangular vectorization.
#[inline]
pub fn pair_index(v_count: usize, u: usize, v: usize) -> usize {
    debug_assert!(u < v && v < v_count);
    u * v_count - u * (u + 1) / 2 + (v - u - 1)
}

/// Index of the unordered pair `{a, b}` with `a != b`.
#[inline]
pub fn unordered_pair_index(v_count: usize, a: usize, b: usize) -> usize {
    if a < b {
        pair_index(v_count, a, b)
    } else {
        pair_index(v_count, b, a)
    }
}

/// Iterates `(u, v)` pairs with `u < v` in vectorization order.
pub fn pairs(v_count: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..v_count).flat_map(move |u| (u + 1..v_count).map(move |v| (u, v)))
}

/// Upper-triangular (row-major, `u < v`) vectorization of a square matrix.
pub fn vectorize_upper(m: &DMatrix<f64>) -> DVector<f64> {
    let v_count = m.nrows();
    DVector::from_iterator(pair_count(v_count), pairs(v_count).map(|(u, v)| m[(u, v)]))
}

/// Inverse of [`vectorize_upper`]: symmetric matrix with zero diagonal.
pub fn devectorize_upper(vec: &DVector<f64>, v_count: usize) -> Result<DMatrix<f64>> {
    if vec.len() != pair_count(v_count) {
        return Err(Error::invalid(format!(
            "edge vector has length {}, expected {} for {} nodes",
            vec.len(),
            pair_count(v_count),
            v_count
        )));
    }
    let mut m = DMatrix::zeros(v_count, v_count);
    for (k, (u, v)) in pairs(v_count).enumerate() {
        m[(u, v)] = vec[k];
        m[(v, u)] = vec[k];
    }
    Ok(m)
}

/// Multi-subject observations: networks, nodal attributes, the predictor of
/// interest, auxiliary predictors and node coordinates.
///
/// Networks are held in vectorized upper-triangular form, which is the only
/// layout the sampler uses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    nodes: usize,
    edges: Vec<DVector<f64>>,
    attributes: Vec<DVector<f64>>,
    predictor: DVector<f64>,
    auxiliaries: DMatrix<f64>,
    coords: Vec<Point3>,
}

impl Dataset {
    /// Builds a dataset from full `V × V` network matrices, validating
    /// symmetry and a zero diagonal.
    pub fn from_matrices(
        networks: &[DMatrix<f64>],
        attributes: Vec<DVector<f64>>,
        predictor: DVector<f64>,
        auxiliaries: DMatrix<f64>,
        coords: Vec<Point3>,
    ) -> Result<Self> {
        let v_count = coords.len();
        let mut edges = Vec::with_capacity(networks.len());
        for (i, m) in networks.iter().enumerate() {
            if m.nrows() != v_count || m.ncols() != v_count {
                return Err(Error::invalid(format!(
                    "network of subject {} is {}x{}, expected {}x{}",
                    i + 1,
                    m.nrows(),
                    m.ncols(),
                    v_count,
                    v_count
                )));
            }
            for u in 0..v_count {
                if m[(u, u)] != 0.0 {
                    return Err(Error::invalid(format!(
                        "network of subject {} has nonzero diagonal at node {}",
                        i + 1,
                        u + 1
                    )));
                }
                for v in u + 1..v_count {
                    let (a, b) = (m[(u, v)], m[(v, u)]);
                    if !a.is_finite() || !b.is_finite() {
                        return Err(Error::invalid(format!(
                            "network entry (subject {}, {}, {}) is not finite",
                            i + 1,
                            u + 1,
                            v + 1
                        )));
                    }
                    if (a - b).abs() > SYMMETRY_TOLERANCE {
                        return Err(Error::invalid(format!(
                            "network is not symmetric at (subject {}, {}, {}): {} vs {}",
                            i + 1,
                            u + 1,
                            v + 1,
                            a,
                            b
                        )));
                    }
                }
            }
            edges.push(vectorize_upper(m));
        }
        Self::from_edges(v_count, edges, attributes, predictor, auxiliaries, coords)
    }

    /// Builds a dataset from vectorized upper-triangular edge vectors.
    pub fn from_edges(
        nodes: usize,
        edges: Vec<DVector<f64>>,
        attributes: Vec<DVector<f64>>,
        predictor: DVector<f64>,
        auxiliaries: DMatrix<f64>,
        coords: Vec<Point3>,
    ) -> Result<Self> {
        let ds = Dataset { nodes, edges, attributes, predictor, auxiliaries, coords };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let n = self.predictor.len();
        let v_count = self.nodes;
        let h = pair_count(v_count);
        if n == 0 {
            return Err(Error::invalid("dataset has no subjects"));
        }
        if v_count < 2 {
            return Err(Error::invalid("dataset needs at least 2 nodes"));
        }
        if self.coords.len() != v_count {
            return Err(Error::invalid(format!("{} coordinates for {} nodes", self.coords.len(), v_count)));
        }
        if self.edges.len() != n || self.attributes.len() != n || self.auxiliaries.nrows() != n {
            return Err(Error::invalid(format!(
                "subject counts disagree: predictor {}, networks {}, attributes {}, auxiliaries {}",
                n,
                self.edges.len(),
                self.attributes.len(),
                self.auxiliaries.nrows()
            )));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.len() != h {
                return Err(Error::invalid(format!("subject {} has {} edges, expected {}", i + 1, e.len(), h)));
            }
            if let Some(k) = e.iter().position(|x| !x.is_finite()) {
                let (u, v) = pairs(v_count).nth(k).unwrap_or((0, 0));
                return Err(Error::invalid(format!(
                    "network entry (subject {}, {}, {}) is not finite",
                    i + 1,
                    u + 1,
                    v + 1
                )));
            }
        }
        for (i, z) in self.attributes.iter().enumerate() {
            if z.len() != v_count {
                return Err(Error::invalid(format!(
                    "subject {} has {} attributes, expected {}",
                    i + 1,
                    z.len(),
                    v_count
                )));
            }
            if z.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("attributes of subject {} contain non-finite values", i + 1)));
            }
        }
        if self.predictor.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("predictor contains non-finite values"));
        }
        if self.auxiliaries.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("auxiliary predictors contain non-finite values"));
        }
        for (k, c) in self.coords.iter().enumerate() {
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("coordinate of node {} is not finite", k + 1)));
            }
        }
        for u in 0..v_count {
            for v in u + 1..v_count {
                if distance(&self.coords[u], &self.coords[v]) <= 0.0 {
                    return Err(Error::invalid(format!("nodes {} and {} share the same coordinates", u + 1, v + 1)));
                }
            }
        }
        Ok(())
    }

    /// Number of subjects `n`.
    pub fn subjects(&self) -> usize {
        self.predictor.len()
    }

    /// Number of nodes `V`.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Number of auxiliary predictors `q`.
    pub fn aux_count(&self) -> usize {
        self.auxiliaries.ncols()
    }

    /// Number of edges per network, `h = V(V-1)/2`.
    pub fn edge_count(&self) -> usize {
        pair_count(self.nodes)
    }

    pub fn edges(&self, i: usize) -> &DVector<f64> {
        &self.edges[i]
    }

    pub fn all_edges(&self) -> &[DVector<f64>] {
        &self.edges
    }

    pub fn network_matrix(&self, i: usize) -> DMatrix<f64> {
        devectorize_upper(&self.edges[i], self.nodes).expect("edge vector length validated")
    }

    pub fn attributes(&self, i: usize) -> &DVector<f64> {
        &self.attributes[i]
    }

    pub fn all_attributes(&self) -> &[DVector<f64>] {
        &self.attributes
    }

    pub fn predictor(&self) -> &DVector<f64> {
        &self.predictor
    }

    pub fn auxiliaries(&self) -> &DMatrix<f64> {
        &self.auxiliaries
    }

    /// Auxiliary predictor row `w_i` as a column view.
    pub fn aux_row(&self, i: usize) -> DVector<f64> {
        self.auxiliaries.row(i).transpose()
    }

    pub fn coords(&self) -> &[Point3] {
        &self.coords
    }

    /// `Σ_i w_i w_iᵀ`.
    pub fn aux_gram(&self) -> DMatrix<f64> {
        self.auxiliaries.transpose() * &self.auxiliaries
    }

    /// `w_iᵀ γ` for every subject.
    pub fn aux_effects(&self, gamma: DVectorView<'_, f64>) -> DVector<f64> {
        if self.aux_count() == 0 {
            return DVector::zeros(self.subjects());
        }
        &self.auxiliaries * gamma
    }

    /// SHA-256 over the dimensions and the bit patterns of every value.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for dim in [self.subjects(), self.nodes, self.aux_count()] {
            hasher.update((dim as u64).to_le_bytes());
        }
        let mut feed = |x: f64| hasher.update(x.to_bits().to_le_bytes());
        self.edges.iter().flat_map(|e| e.iter()).for_each(|&x| feed(x));
        self.attributes.iter().flat_map(|z| z.iter()).for_each(|&x| feed(x));
        self.predictor.iter().for_each(|&x| feed(x));
        self.auxiliaries.iter().for_each(|&x| feed(x));
        self.coords.iter().flatten().for_each(|&x| feed(x));
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Replaces the responses, keeping predictors and coordinates.
    pub fn with_responses(&self, edges: Vec<DVector<f64>>, attributes: Vec<DVector<f64>>) -> Result<Self> {
        Self::from_edges(
            self.nodes,
            edges,
            attributes,
            self.predictor.clone(),
            self.auxiliaries.clone(),
            self.coords.clone(),
        )
    }
}

/// Euclidean distance between two points.
pub fn distance(a: &Point3, b: &Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}
