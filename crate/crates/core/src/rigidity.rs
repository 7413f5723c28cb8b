//! Rigidity matrix and infinitesimal/minimal rigidity classification.

use serde::Serialize;

use crate::error::{FormationError, Result};
use crate::graph::{block_diag, check_dim, kron_identity, FormationGraph};
use crate::linalg::{numerical_rank, Matrix};

/// A graph together with an embedding of its vertices in R^m.
#[derive(Debug, Clone, PartialEq)]
pub struct Framework {
    pub graph: FormationGraph,
    pub positions: Vec<f64>,
    pub dim: usize,
}

impl Framework {
    pub fn new(graph: FormationGraph, positions: Vec<f64>, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if positions.len() != graph.vertex_count() * dim {
            return Err(FormationError::DimensionMismatch {
                what: "framework positions",
                expected: graph.vertex_count() * dim,
                found: positions.len(),
            });
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(FormationError::InconsistentShape(
                "non-finite position".into(),
            ));
        }
        Ok(Self {
            graph,
            positions,
            dim,
        })
    }

    pub fn relative_positions(&self) -> Vec<f64> {
        self.graph
            .relative_positions(&self.positions, self.dim)
            .expect("validated at construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RigidityReport {
    pub infinitesimally_rigid: bool,
    pub minimally_rigid: bool,
    pub rank: usize,
    /// `2n - 3` in the plane, `3n - 6` in space.
    pub required_rank: usize,
    pub edge_count: usize,
}

/// `R(z) = D_z^T (B ⊗ I_m)^T`, one row per edge.
pub fn rigidity_matrix(g: &FormationGraph, z: &[f64], m: usize) -> Result<Matrix> {
    check_dim(m)?;
    if z.len() != g.edge_count() * m {
        return Err(FormationError::DimensionMismatch {
            what: "stacked relative positions",
            expected: g.edge_count() * m,
            found: z.len(),
        });
    }
    let dz = block_diag(z, m)?;
    let bb = kron_identity(&g.incidence_matrix(), m);
    Ok(dz.transpose() * bb.transpose())
}

/// Number of independent edge constraints for an infinitesimally rigid
/// framework on `n` vertices in dimension `m`.
pub fn required_rank(n: usize, m: usize) -> usize {
    match m {
        2 => 2 * n - 3,
        _ => {
            if n >= 3 {
                3 * n - 6
            } else {
                1
            }
        }
    }
}

pub fn classify_rigidity(fw: &Framework) -> Result<RigidityReport> {
    let n = fw.graph.vertex_count();
    let min_n = if fw.dim == 2 { 2 } else { 3 };
    if n < min_n {
        return Err(FormationError::Degenerate(format!(
            "{n} vertices is too few for rigidity analysis in R^{}",
            fw.dim
        )));
    }
    let z = fw.relative_positions();
    let r = rigidity_matrix(&fw.graph, &z, fw.dim)?;
    let rank = numerical_rank(&r);
    let required = required_rank(n, fw.dim);
    let infinitesimally_rigid = rank == required;
    Ok(RigidityReport {
        infinitesimally_rigid,
        minimally_rigid: infinitesimally_rigid && fw.graph.edge_count() == required,
        rank,
        required_rank: required,
        edge_count: fw.graph.edge_count(),
    })
}
