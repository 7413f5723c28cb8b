//! Dense numerical helpers: rank, kernels, orthonormal bases and projections.
//!
//! Every threshold follows the usual numerical-rank convention
//! `tau = max(rows, cols) * eps * sigma_max`.

use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

fn threshold(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Singular values of `a`, in no particular order.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    a.clone().svd(false, false).singular_values.iter().copied().collect()
}

pub fn numerical_rank(a: &Matrix) -> usize {
    let sv = singular_values(a);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let tau = threshold(a.nrows(), a.ncols(), smax);
    sv.iter().filter(|&&s| s > tau).count()
}

/// Orthonormal basis (as columns) of the kernel of `a`.
pub fn null_space(a: &Matrix) -> Matrix {
    let (r, c) = a.shape();
    if c == 0 {
        return Matrix::zeros(0, 0);
    }
    if r == 0 {
        return Matrix::identity(c, c);
    }
    // Pad with zero rows so the SVD returns a full right basis.
    let mut padded = Matrix::zeros(r.max(c), c);
    padded.view_mut((0, 0), (r, c)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tau = if smax == 0.0 { 0.0 } else { threshold(r, c, smax) };
    let cols: Vec<Vector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tau)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    columns_to_matrix(c, &cols)
}

/// Orthonormal basis of the column space of `a`.
pub fn orthonormal_range(a: &Matrix) -> Matrix {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return Matrix::zeros(r, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Matrix::zeros(r, 0);
    }
    let tau = threshold(r, c, smax);
    let cols: Vec<Vector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tau)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    columns_to_matrix(r, &cols)
}

/// Orthogonal projector onto the span of the orthonormal columns of `basis`.
pub fn projector(basis: &Matrix) -> Matrix {
    basis * basis.transpose()
}

/// Orthonormal basis of the projection of span(`space`) by `proj`.
///
/// Relative threshold is taken from the input basis rather than the projected
/// image, so directions annihilated by the projection are dropped.
pub fn project_subspace(proj: &Matrix, space: &Matrix) -> Matrix {
    let n = proj.nrows();
    if space.ncols() == 0 {
        return Matrix::zeros(n, 0);
    }
    let image = proj * space;
    let svd = image.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    // The columns of `space` are orthonormal, so sigma_max(space) = 1.
    let tau = threshold(image.nrows(), image.ncols(), 1.0) * 64.0;
    let cols: Vec<Vector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tau)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    columns_to_matrix(n, &cols)
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &Matrix, b: &Vector) -> Vector {
    let (r, c) = a.shape();
    if c == 0 {
        return Vector::zeros(0);
    }
    if r == 0 {
        return Vector::zeros(c);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Vector::zeros(c);
    }
    let tau = threshold(r, c, smax);
    svd.solve(b, tau).expect("both factors computed")
}

/// Smallest principal angle (radians) between `v` and span of orthonormal `basis`.
pub fn angle_to_subspace(basis: &Matrix, v: &Vector) -> f64 {
    let nv = v.norm();
    if nv == 0.0 {
        return 0.0;
    }
    let proj = basis * (basis.transpose() * v);
    let cos = (proj.norm() / nv).clamp(0.0, 1.0);
    let residual = (v - &proj).norm() / nv;
    residual.atan2(cos)
}

pub fn columns_to_matrix(rows: usize, cols: &[Vector]) -> Matrix {
    let mut m = Matrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

pub fn max_abs_off_orthonormal(basis: &Matrix) -> f64 {
    let g = basis.transpose() * basis;
    let k = g.nrows();
    (g - Matrix::identity(k, k)).amax()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Proper rotation that best maps `from` onto `to` (Kabsch), both given as
/// lists of m-dimensional vectors.
pub fn best_rotation(from: &[Vec<f64>], to: &[Vec<f64>]) -> Matrix {
    let m = from.first().map_or(2, Vec::len);
    let mut h = Matrix::zeros(m, m);
    for (a, b) in from.iter().zip(to) {
        for r in 0..m {
            for c in 0..m {
                h[(r, c)] += b[r] * a[c];
            }
        }
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("u");
    let v_t = svd.v_t.expect("v_t");
    let mut d = Matrix::identity(m, m);
    if (&u * &v_t).determinant() < 0.0 {
        d[(m - 1, m - 1)] = -1.0;
    }
    u * d * v_t
}
