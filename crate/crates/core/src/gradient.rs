//! Distance errors, potential gradients of order `l`, and the baseline
//! gradient flow.

use crate::error::{FormationError, Result};
use crate::graph::to_vector;
use crate::linalg::{norm, Matrix, Vector};
use crate::rigidity::rigidity_matrix;
use crate::shape::DesiredShape;

/// Below `SINGULAR_RATIO * d_k` an edge is treated as collapsed when `l = 1`.
pub const SINGULAR_RATIO: f64 = 1e-9;

/// Per-edge errors `e_k = |z_k|^l - d_k^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorVector {
    pub e: Vec<f64>,
    pub l: u32,
}

impl ErrorVector {
    pub fn norm(&self) -> f64 {
        norm(&self.e)
    }
}

fn check_z(z: &[f64], shape: &DesiredShape) -> Result<()> {
    let want = shape.graph().edge_count() * shape.dim();
    if z.len() != want {
        return Err(FormationError::DimensionMismatch {
            what: "stacked relative positions",
            expected: want,
            found: z.len(),
        });
    }
    Ok(())
}

fn tilde_weight(nz: f64, d: f64, l: u32, edge: usize) -> Result<f64> {
    match l {
        2 => Ok(1.0),
        1 => {
            if nz < SINGULAR_RATIO * d {
                Err(FormationError::Singularity { edge: edge + 1, norm: nz })
            } else {
                Ok(1.0 / nz)
            }
        }
        _ => Ok(nz.powi(l as i32 - 2)),
    }
}

/// `|z_k|^(l-2)` for every edge (all ones when `l = 2`).
pub fn tilde_z(z: &[f64], shape: &DesiredShape) -> Result<Vec<f64>> {
    check_z(z, shape)?;
    let l = shape.order();
    z.chunks(shape.dim())
        .zip(shape.distances())
        .enumerate()
        .map(|(k, (zk, &d))| tilde_weight(norm(zk), d, l, k))
        .collect()
}

pub fn distance_errors(z: &[f64], shape: &DesiredShape) -> Result<ErrorVector> {
    check_z(z, shape)?;
    let l = shape.order();
    let e = z
        .chunks(shape.dim())
        .zip(shape.distance_powers())
        .map(|(zk, dl)| norm(zk).powi(l as i32) - dl)
        .collect();
    Ok(ErrorVector { e, l })
}

/// `z_k |z_k|^(l-2) (|z_k|^l - d_k^l)`, the gradient of `V_k` along `z_k`.
pub fn edge_gradient(zk: &[f64], dk: f64, l: u32) -> Result<Vec<f64>> {
    if l == 0 {
        return Err(FormationError::Configuration("l must be positive".into()));
    }
    let nz = norm(zk);
    let w = tilde_weight(nz, dk, l, 0)?;
    let e = nz.powi(l as i32) - dk.powi(l as i32);
    Ok(zk.iter().map(|v| v * w * e).collect())
}

/// `V = sum_k (1/2l) (|z_k|^l - d_k^l)^2`.
pub fn potential(z: &[f64], shape: &DesiredShape) -> Result<f64> {
    let e = distance_errors(z, shape)?;
    let l = f64::from(e.l);
    Ok(e.e.iter().map(|v| v * v).sum::<f64>() / (2.0 * l))
}

/// `-R(z)^T D_z~ e`, assembled from the matrices.
pub fn gradient_flow_rhs(p: &[f64], shape: &DesiredShape) -> Result<Vec<f64>> {
    let g = shape.graph();
    let m = shape.dim();
    let z = g.relative_positions(p, m)?;
    let r = rigidity_matrix(g, &z, m)?;
    let w = tilde_z(&z, shape)?;
    let e = distance_errors(&z, shape)?;
    let we = Vector::from_iterator(w.len(), w.iter().zip(&e.e).map(|(a, b)| a * b));
    Ok((-(r.transpose() * we)).as_slice().to_vec())
}

/// Same flow, summed agent by agent from per-edge gradients.
pub fn gradient_flow_rhs_per_edge(p: &[f64], shape: &DesiredShape) -> Result<Vec<f64>> {
    let g = shape.graph();
    let m = shape.dim();
    let z = g.relative_positions(p, m)?;
    let mut out = vec![0.0; p.len()];
    for (k, &(t, h)) in g.edges().iter().enumerate() {
        let grad = edge_gradient(&z[k * m..(k + 1) * m], shape.distances()[k], shape.order())
            .map_err(|err| match err {
                FormationError::Singularity { norm, .. } => {
                    FormationError::Singularity { edge: k + 1, norm }
                }
                other => other,
            })?;
        for d in 0..m {
            out[t * m + d] -= grad[d];
            out[h * m + d] += grad[d];
        }
    }
    Ok(out)
}

/// `Q = D_z~ R R^T D_z~`.
pub fn q_matrix(z: &[f64], shape: &DesiredShape) -> Result<Matrix> {
    let r = rigidity_matrix(shape.graph(), z, shape.dim())?;
    let dw = Matrix::from_diagonal(&to_vector(&tilde_z(z, shape)?));
    Ok(&dw * &r * r.transpose() * &dw)
}

/// `de/dt = -l Q e` along the gradient flow.
pub fn error_dynamics_rhs(e: &ErrorVector, z: &[f64], shape: &DesiredShape) -> Result<Vec<f64>> {
    let q = q_matrix(z, shape)?;
    let out = q * to_vector(&e.e) * -f64::from(e.l);
    Ok(out.as_slice().to_vec())
}
