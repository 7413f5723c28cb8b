//! Per-agent local frames.

use rand::Rng;

use crate::error::{FormationError, Result};
use crate::linalg::Matrix;

/// Orientation and origin of an agent's frame, both in the global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFrame {
    rotation: Matrix,
    offset: Vec<f64>,
}

impl LocalFrame {
    pub fn new(rotation: Matrix, offset: Vec<f64>) -> Result<Self> {
        let m = rotation.nrows();
        if rotation.ncols() != m || offset.len() != m {
            return Err(FormationError::DimensionMismatch {
                what: "local frame",
                expected: m,
                found: offset.len(),
            });
        }
        let gram = rotation.transpose() * &rotation;
        if (gram - Matrix::identity(m, m)).amax() > 1e-9 || rotation.determinant() < 0.0 {
            return Err(FormationError::NonOrthogonalFrame);
        }
        Ok(Self { rotation, offset })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            rotation: Matrix::identity(m, m),
            offset: vec![0.0; m],
        }
    }

    pub fn planar(angle: f64, offset: [f64; 2]) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: Matrix::from_row_slice(2, 2, &[c, -s, s, c]),
            offset: offset.to_vec(),
        }
    }

    /// Uniformly random proper rotation and an offset in `[-spread, spread]^m`.
    pub fn random<R: Rng>(m: usize, spread: f64, rng: &mut R) -> Self {
        let offset = (0..m).map(|_| rng.gen_range(-spread..=spread)).collect();
        if m == 2 {
            let mut f = Self::planar(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI), [0.0, 0.0]);
            f.offset = offset;
            return f;
        }
        // Random unit quaternion.
        let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
        let tau = std::f64::consts::TAU;
        let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
        let (w, x, y, z) = (
            a * (tau * u2).sin(),
            a * (tau * u2).cos(),
            b * (tau * u3).sin(),
            b * (tau * u3).cos(),
        );
        let rotation = Matrix::from_row_slice(
            3,
            3,
            &[
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - z * w),
                2.0 * (x * z + y * w),
                2.0 * (x * y + z * w),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - x * w),
                2.0 * (x * z - y * w),
                2.0 * (y * z + x * w),
                1.0 - 2.0 * (x * x + y * y),
            ],
        );
        Self { rotation, offset }
    }

    pub fn rotation(&self) -> &Matrix {
        &self.rotation
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    /// Global vector (direction, velocity, relative position) into this frame.
    pub fn localize_vector(&self, v: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m)
            .map(|r| (0..m).map(|k| self.rotation[(k, r)] * v[k]).sum())
            .collect()
    }

    /// Local vector back into the global frame.
    pub fn globalize_vector(&self, v: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m)
            .map(|r| (0..m).map(|k| self.rotation[(r, k)] * v[k]).sum())
            .collect()
    }

    pub fn localize_point(&self, p: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = p.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        self.localize_vector(&d)
    }

    pub fn globalize_point(&self, p: &[f64]) -> Vec<f64> {
        self.globalize_vector(p)
            .into_iter()
            .zip(&self.offset)
            .map(|(a, b)| a + b)
            .collect()
    }
}
