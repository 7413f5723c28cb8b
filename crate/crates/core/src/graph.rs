//! Formation graphs and the structural matrices derived from them.
//!
//! Edges are directed `(tail, head)` pairs. The public constructors take
//! 1-based vertex indices; everything is stored 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{FormationError, Result};
use crate::linalg::{Matrix, Vector};

/// Vertex count plus ordered, directed edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphSpec", into = "GraphSpec")]
pub struct FormationGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// 1-based external representation, `{"n": 4, "edges": [[1,2],...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphSpec> for FormationGraph {
    type Error = FormationError;

    fn try_from(spec: GraphSpec) -> Result<Self> {
        let edges: Vec<(usize, usize)> = spec.edges.iter().map(|e| (e[0], e[1])).collect();
        FormationGraph::from_one_based(spec.n, &edges)
    }
}

impl From<FormationGraph> for GraphSpec {
    fn from(g: FormationGraph) -> Self {
        GraphSpec {
            n: g.n,
            edges: g.edges.iter().map(|&(t, h)| [t + 1, h + 1]).collect(),
        }
    }
}

impl FormationGraph {
    /// Builds a graph from 1-based `(tail, head)` pairs.
    pub fn from_one_based(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut zero = Vec::with_capacity(edges.len());
        for &(t, h) in edges {
            for v in [t, h] {
                if v == 0 || v > n {
                    return Err(FormationError::IndexOutOfRange { index: v, max: n });
                }
            }
            zero.push((t - 1, h - 1));
        }
        Self::new(n, zero)
    }

    /// Builds a graph from 0-based `(tail, head)` pairs.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(FormationError::InvalidGraph(format!(
                "need at least 2 vertices, got {n}"
            )));
        }
        for (k, &(t, h)) in edges.iter().enumerate() {
            if t >= n || h >= n {
                return Err(FormationError::IndexOutOfRange {
                    index: t.max(h) + 1,
                    max: n,
                });
            }
            if t == h {
                return Err(FormationError::InvalidGraph(format!(
                    "edge {} is a self-loop on vertex {}",
                    k + 1,
                    t + 1
                )));
            }
            let dup = edges[..k]
                .iter()
                .any(|&(a, b)| (a, b) == (t, h) || (a, b) == (h, t));
            if dup {
                return Err(FormationError::InvalidGraph(format!(
                    "edge {} duplicates the pair ({}, {})",
                    k + 1,
                    t + 1,
                    h + 1
                )));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// 0-based `(tail, head)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> (usize, usize) {
        self.edges[k]
    }

    /// Undirected neighbours of vertex `i` (0-based).
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(t, h)| {
                if t == i {
                    Some(h)
                } else if h == i {
                    Some(t)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(t, h)| t == i || h == i).count()
    }

    /// Edges touching vertex `i` as `(edge index, is_tail)`.
    pub fn incident_edges(&self, i: usize) -> Vec<(usize, bool)> {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(k, &(t, h))| {
                if t == i {
                    Some((k, true))
                } else if h == i {
                    Some((k, false))
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn has_undirected_edge(&self, a: usize, b: usize) -> bool {
        self.edges
            .iter()
            .any(|&(t, h)| (t, h) == (a, b) || (t, h) == (b, a))
    }

    pub fn incidence_matrix(&self) -> Matrix {
        let mut b = Matrix::zeros(self.n, self.edges.len());
        for (k, &(t, h)) in self.edges.iter().enumerate() {
            b[(t, k)] = 1.0;
            b[(h, k)] = -1.0;
        }
        b
    }

    /// Positive part `S1` and the sign-flipped head part `S2 = S1 - B`.
    pub fn split_matrices(&self) -> (Matrix, Matrix) {
        let b = self.incidence_matrix();
        let s1 = b.map(|x| if x > 0.0 { 1.0 } else { 0.0 });
        let s2 = &s1 - &b;
        (s1, s2)
    }

    /// Incidence matrix with the row of `excluded` (1-based) zeroed.
    pub fn masked_incidence(&self, excluded: usize) -> Result<Matrix> {
        if excluded == 0 || excluded > self.n {
            return Err(FormationError::IndexOutOfRange {
                index: excluded,
                max: self.n,
            });
        }
        let mut b = self.incidence_matrix();
        b.row_mut(excluded - 1).fill(0.0);
        Ok(b)
    }

    /// Augmented incidence matrix for the alignment task on `oriented_edge`
    /// (1-based). By convention the oriented edge is edge 1 = (1, 2).
    pub fn augmented_incidence(&self, oriented_edge: usize) -> Result<Matrix> {
        if oriented_edge != 1 {
            return Err(FormationError::ConventionViolated(format!(
                "the orientation leader pair must be edge 1, got edge {oriented_edge}"
            )));
        }
        match self.edges.first() {
            Some(&(0, 1)) => {}
            other => {
                return Err(FormationError::ConventionViolated(format!(
                    "edge 1 must be (1, 2), found {:?}",
                    other.map(|&(t, h)| (t + 1, h + 1))
                )))
            }
        }
        let mut ba = Matrix::zeros(self.n, self.edges.len());
        ba[(0, 0)] = 1.0;
        ba[(1, 0)] = -1.0;
        Ok(ba)
    }

    /// Stacked relative positions `z = (B ⊗ I_m)^T p`.
    pub fn relative_positions(&self, p: &[f64], m: usize) -> Result<Vec<f64>> {
        check_dim(m)?;
        if p.len() != self.n * m {
            return Err(FormationError::DimensionMismatch {
                what: "stacked positions",
                expected: self.n * m,
                found: p.len(),
            });
        }
        let mut z = vec![0.0; self.edges.len() * m];
        for (k, &(t, h)) in self.edges.iter().enumerate() {
            for d in 0..m {
                z[k * m + d] = p[t * m + d] - p[h * m + d];
            }
        }
        Ok(z)
    }
}

pub(crate) fn check_dim(m: usize) -> Result<()> {
    if m == 2 || m == 3 {
        Ok(())
    } else {
        Err(FormationError::InvalidDimension(m))
    }
}

/// `M ⊗ I_m`.
pub fn kron_lift(mat: &Matrix, m: usize) -> Result<Matrix> {
    check_dim(m)?;
    Ok(kron_identity(mat, m))
}

pub(crate) fn kron_identity(mat: &Matrix, m: usize) -> Matrix {
    let (r, c) = mat.shape();
    let mut out = Matrix::zeros(r * m, c * m);
    for i in 0..r {
        for j in 0..c {
            let v = mat[(i, j)];
            if v != 0.0 {
                for d in 0..m {
                    out[(i * m + d, j * m + d)] = v;
                }
            }
        }
    }
    out
}

/// Block-diagonal `D_x` for a stacked vector of blocks of size `block`.
pub fn block_diag(x: &[f64], block: usize) -> Result<Matrix> {
    if block == 0 || !x.len().is_multiple_of(block) {
        return Err(FormationError::DimensionMismatch {
            what: "block-diagonal input",
            expected: block.max(1) * (x.len() / block.max(1) + 1),
            found: x.len(),
        });
    }
    let k = x.len() / block;
    let mut d = Matrix::zeros(x.len(), k);
    for i in 0..k {
        for j in 0..block {
            d[(i * block + j, i)] = x[i * block + j];
        }
    }
    Ok(d)
}

pub fn to_vector(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}
