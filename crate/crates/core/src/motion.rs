//! Motion parameters: the `A(mu, mu~)` matrix, the T-matrix, the
//! translation/rotation parameter spaces and the design procedures.

use serde::{Deserialize, Serialize};

use crate::error::{FormationError, Result};
use crate::graph::{block_diag, kron_identity, to_vector, FormationGraph};
use crate::linalg::{
    angle_to_subspace, lstsq, norm, null_space, project_subspace, projector, Matrix, Vector,
};
use crate::rigidity::rigidity_matrix;
use crate::shape::DesiredShape;

/// Per-edge parameter pairs: `mu_k` acts at the tail, `mu~_k` at the head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionParams {
    pub mu: Vec<f64>,
    pub mu_tilde: Vec<f64>,
}

impl MotionParams {
    pub fn zeros(edges: usize) -> Self {
        Self {
            mu: vec![0.0; edges],
            mu_tilde: vec![0.0; edges],
        }
    }

    pub fn new(mu: Vec<f64>, mu_tilde: Vec<f64>) -> Result<Self> {
        if mu.len() != mu_tilde.len() {
            return Err(FormationError::DimensionMismatch {
                what: "mu_tilde",
                expected: mu.len(),
                found: mu_tilde.len(),
            });
        }
        if mu.iter().chain(&mu_tilde).any(|v| !v.is_finite()) {
            return Err(FormationError::Configuration("non-finite motion parameter".into()));
        }
        Ok(Self { mu, mu_tilde })
    }

    /// Splits a stacked `(mu; mu~)` vector.
    pub fn from_stacked(v: &[f64]) -> Self {
        let e = v.len() / 2;
        Self {
            mu: v[..e].to_vec(),
            mu_tilde: v[e..].to_vec(),
        }
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.mu.iter().chain(&self.mu_tilde).copied().collect()
    }

    pub fn edge_count(&self) -> usize {
        self.mu.len()
    }

    pub fn is_zero(&self) -> bool {
        self.mu.iter().chain(&self.mu_tilde).all(|&v| v == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            mu: self.mu.iter().map(|v| v * s).collect(),
            mu_tilde: self.mu_tilde.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mu: self.mu.iter().zip(&other.mu).map(|(a, b)| a + b).collect(),
            mu_tilde: self.mu_tilde.iter().zip(&other.mu_tilde).map(|(a, b)| a + b).collect(),
        }
    }

    /// Raw parameters rewritten for the normalized motion term, which uses
    /// `z_k / |z_k|`; at the desired shape both give the same velocities.
    pub fn to_normalized(&self, d: &[f64]) -> Self {
        Self {
            mu: self.mu.iter().zip(d).map(|(a, b)| a * b).collect(),
            mu_tilde: self.mu_tilde.iter().zip(d).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn from_normalized(&self, d: &[f64]) -> Self {
        Self {
            mu: self.mu.iter().zip(d).map(|(a, b)| a / b).collect(),
            mu_tilde: self.mu_tilde.iter().zip(d).map(|(a, b)| a / b).collect(),
        }
    }

    fn check_edges(&self, g: &FormationGraph) -> Result<()> {
        if self.mu.len() != g.edge_count() || self.mu_tilde.len() != g.edge_count() {
            return Err(FormationError::DimensionMismatch {
                what: "motion parameters",
                expected: g.edge_count(),
                found: self.mu.len().max(self.mu_tilde.len()),
            });
        }
        Ok(())
    }
}

/// How the motion term uses relative positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionTerm {
    /// `A z`.
    #[default]
    Raw,
    /// `A` applied to unit relative positions `z_k / |z_k|`.
    Normalized,
}

/// `a_ik = mu_k` if `i` is the tail of edge `k`, `mu~_k` if the head.
pub fn a_matrix(g: &FormationGraph, params: &MotionParams) -> Result<Matrix> {
    params.check_edges(g)?;
    let mut a = Matrix::zeros(g.vertex_count(), g.edge_count());
    for (k, &(t, h)) in g.edges().iter().enumerate() {
        a[(t, k)] = params.mu[k];
        a[(h, k)] = params.mu_tilde[k];
    }
    Ok(a)
}

/// Relative positions as used by the motion term.
fn motion_input(z: &[f64], m: usize, term: MotionTerm) -> Result<Vec<f64>> {
    match term {
        MotionTerm::Raw => Ok(z.to_vec()),
        MotionTerm::Normalized => {
            let mut out = Vec::with_capacity(z.len());
            for (k, zk) in z.chunks(m).enumerate() {
                let n = norm(zk);
                if n == 0.0 {
                    return Err(FormationError::Singularity { edge: k + 1, norm: 0.0 });
                }
                out.extend(zk.iter().map(|v| v / n));
            }
            Ok(out)
        }
    }
}

/// Motion term `(A ⊗ I_m) z` (or its normalized variant), via the matrix.
pub fn motion_velocity(
    g: &FormationGraph,
    params: &MotionParams,
    z: &[f64],
    m: usize,
    term: MotionTerm,
) -> Result<Vec<f64>> {
    let a = kron_identity(&a_matrix(g, params)?, m);
    if z.len() != a.ncols() {
        return Err(FormationError::DimensionMismatch {
            what: "stacked relative positions",
            expected: a.ncols(),
            found: z.len(),
        });
    }
    let input = motion_input(z, m, term)?;
    Ok((a * to_vector(&input)).as_slice().to_vec())
}

/// Predicted steady-state velocities `A z*`.
pub fn steady_state_velocity(
    g: &FormationGraph,
    params: &MotionParams,
    z_star: &[f64],
    m: usize,
    term: MotionTerm,
) -> Result<Vec<f64>> {
    motion_velocity(g, params, z_star, m, term)
}

/// `T = [S1 D_z* | S2 D_z*]` (both lifted), so that `T (mu; mu~) = A z*`.
pub fn t_matrix(g: &FormationGraph, z_star: &[f64], m: usize) -> Result<Matrix> {
    let (s1, s2) = g.split_matrices();
    let dz = block_diag(z_star, m)?;
    if dz.ncols() != g.edge_count() {
        return Err(FormationError::DimensionMismatch {
            what: "z_star",
            expected: g.edge_count() * m,
            found: z_star.len(),
        });
    }
    let left = kron_identity(&s1, m) * &dz;
    let right = kron_identity(&s2, m) * &dz;
    let e = g.edge_count();
    let mut t = Matrix::zeros(g.vertex_count() * m, 2 * e);
    t.columns_mut(0, e).copy_from(&left);
    t.columns_mut(e, e).copy_from(&right);
    Ok(t)
}

/// Orthonormal columns spanning a subspace of parameter space `R^(2|E|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    pub basis: Matrix,
    pub tolerance: f64,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.basis.column(j).iter().copied().collect()
    }

    /// Principal angle between `v` and the subspace.
    pub fn angle_to(&self, v: &[f64]) -> f64 {
        angle_to_subspace(&self.basis, &to_vector(v))
    }
}

fn constraint_tolerance(a: &Matrix) -> f64 {
    let smax = crate::linalg::singular_values(a).into_iter().fold(0.0, f64::max);
    a.nrows().max(a.ncols()) as f64 * f64::EPSILON * smax
}

fn complement_projector(basis: &Matrix) -> Matrix {
    let n = basis.nrows();
    Matrix::identity(n, n) - projector(basis)
}

/// `U = P_{Ker(T)^⊥}(Ker(B^T T))`: parameters producing a common translation.
pub fn translation_space(shape: &DesiredShape) -> Result<SubspaceBasis> {
    let g = shape.graph();
    let m = shape.dim();
    let t = t_matrix(g, shape.z_star(), m)?;
    let bt = kron_identity(&g.incidence_matrix(), m).transpose() * &t;
    let ker = null_space(&bt);
    let basis = project_subspace(&complement_projector(&null_space(&t)), &ker);
    Ok(SubspaceBasis {
        basis,
        tolerance: constraint_tolerance(&bt),
    })
}

/// Rows mapping stacked agent velocities to the centroid velocity.
fn centroid_rows(n: usize, m: usize) -> Matrix {
    let mut c = Matrix::zeros(m, n * m);
    for i in 0..n {
        for d in 0..m {
            c[(d, i * m + d)] = 1.0 / n as f64;
        }
    }
    c
}

/// `D_z*^T B^T T`: first-order change of the squared edge lengths.
pub fn distance_rate_matrix(shape: &DesiredShape) -> Result<Matrix> {
    let g = shape.graph();
    let m = shape.dim();
    let t = t_matrix(g, shape.z_star(), m)?;
    Ok(rigidity_matrix(g, shape.z_star(), m)? * t)
}

/// Rotation space `W`: parameters whose steady motion preserves every edge
/// length and keeps the centroid fixed, taken orthogonal to `Ker(T)`.
pub fn rotation_space(shape: &DesiredShape) -> Result<SubspaceBasis> {
    let g = shape.graph();
    let m = shape.dim();
    let n = g.vertex_count();
    let t = t_matrix(g, shape.z_star(), m)?;
    let dr = distance_rate_matrix(shape)?;
    let ct = centroid_rows(n, m) * &t;
    let mut stacked = Matrix::zeros(dr.nrows() + ct.nrows(), t.ncols());
    stacked.rows_mut(0, dr.nrows()).copy_from(&dr);
    stacked.rows_mut(dr.nrows(), ct.nrows()).copy_from(&ct);
    let ker = null_space(&stacked);
    let basis = project_subspace(&complement_projector(&null_space(&t)), &ker);
    Ok(SubspaceBasis {
        basis,
        tolerance: constraint_tolerance(&dr),
    })
}

/// `P_{U^⊥}(Ker(D_z*^T B^T T))`, the literal orthogonal-complement form.
pub fn orthogonal_rotation_space(shape: &DesiredShape) -> Result<SubspaceBasis> {
    let dr = distance_rate_matrix(shape)?;
    let u = translation_space(shape)?;
    let ker = null_space(&dr);
    let basis = project_subspace(&complement_projector(&u.basis), &ker);
    Ok(SubspaceBasis {
        basis,
        tolerance: constraint_tolerance(&dr),
    })
}

/// Rotation center for the designed steady motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotationCenter {
    #[default]
    Centroid,
    /// 1-based vertex index.
    Vertex(usize),
}

impl Serialize for RotationCenter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RotationCenter::Centroid => s.serialize_str("centroid"),
            RotationCenter::Vertex(v) => s.serialize_u64(*v as u64),
        }
    }
}

impl<'de> Deserialize<'de> for RotationCenter {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Index(usize),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "centroid" => Ok(RotationCenter::Centroid),
            Raw::Name(s) => Err(serde::de::Error::custom(format!(
                "rotation center must be \"centroid\" or a vertex index, got \"{s}\""
            ))),
            Raw::Index(0) => Err(serde::de::Error::custom("vertex indices are 1-based")),
            Raw::Index(i) => Ok(RotationCenter::Vertex(i)),
        }
    }
}

fn design_tolerance(target: &[f64]) -> f64 {
    1e-8 * norm(target).max(1.0)
}

fn check_residual(t: &Matrix, params: &[f64], target: &[f64]) -> Result<()> {
    let got = t * to_vector(params);
    let residual = (got - to_vector(target)).norm();
    let tolerance = design_tolerance(target);
    if residual > tolerance || !residual.is_finite() {
        return Err(FormationError::Infeasible { residual, tolerance });
    }
    Ok(())
}

/// Least-neighbor agent (0-based), lowest index on ties.
pub fn least_connected_agent(g: &FormationGraph) -> usize {
    (0..g.vertex_count())
        .min_by_key(|&i| (g.degree(i), i))
        .expect("graphs have at least two vertices")
}

/// Parameter slots touching agent `i`: `k` if tail of edge `k`, `|E| + k` if head.
fn agent_slots(g: &FormationGraph, i: usize) -> Vec<usize> {
    let e = g.edge_count();
    g.incident_edges(i)
        .into_iter()
        .map(|(k, tail)| if tail { k } else { e + k })
        .collect()
}

/// Parameters in `U` steering every agent with velocity `v_c` (body frame).
pub fn design_translation(shape: &DesiredShape, v_c: &[f64]) -> Result<MotionParams> {
    let g = shape.graph();
    let m = shape.dim();
    if v_c.len() != m {
        return Err(FormationError::DimensionMismatch {
            what: "translation velocity",
            expected: m,
            found: v_c.len(),
        });
    }
    if v_c.iter().any(|v| !v.is_finite()) {
        return Err(FormationError::Configuration("non-finite translation velocity".into()));
    }
    let t = t_matrix(g, shape.z_star(), m)?;
    let target: Vec<f64> = (0..g.vertex_count()).flat_map(|_| v_c.iter().copied()).collect();

    // Step 1-2: the least-connected agent's own parameters.
    let i = least_connected_agent(g);
    let slots = agent_slots(g, i);
    let mut local = Matrix::zeros(m, slots.len());
    for (j, &s) in slots.iter().enumerate() {
        local.column_mut(j).copy_from(&t.view((i * m, s), (m, 1)));
    }
    let x_i = lstsq(&local, &to_vector(v_c));

    // Step 3-4: coefficients in the basis of U matching those entries.
    let u = translation_space(shape)?;
    let mut rows = Matrix::zeros(slots.len(), u.dim());
    for (j, &s) in slots.iter().enumerate() {
        rows.row_mut(j).copy_from(&u.basis.row(s));
    }
    let coeff = lstsq(&rows, &x_i);
    let v: Vector = &u.basis * coeff;
    check_residual(&t, v.as_slice(), &target)?;
    Ok(MotionParams::from_stacked(v.as_slice()))
}

/// Rigid-rotation field `omega × (p*_i - p_r)` at the reference positions.
pub fn rotation_field(shape: &DesiredShape, omega: &[f64], center: RotationCenter) -> Result<Vec<f64>> {
    let m = shape.dim();
    let want = if m == 2 { 1 } else { 3 };
    if omega.len() != want {
        return Err(FormationError::DimensionMismatch {
            what: "angular velocity",
            expected: want,
            found: omega.len(),
        });
    }
    let pr = match center {
        RotationCenter::Centroid => shape.centroid(),
        RotationCenter::Vertex(v) => {
            let n = shape.graph().vertex_count();
            if v == 0 || v > n {
                return Err(FormationError::IndexOutOfRange { index: v, max: n });
            }
            shape.positions()[(v - 1) * m..v * m].to_vec()
        }
    };
    let mut out = Vec::with_capacity(shape.positions().len());
    for p in shape.positions().chunks(m) {
        let r: Vec<f64> = p.iter().zip(&pr).map(|(a, b)| a - b).collect();
        if m == 2 {
            out.extend([-omega[0] * r[1], omega[0] * r[0]]);
        } else {
            out.extend([
                omega[1] * r[2] - omega[2] * r[1],
                omega[2] * r[0] - omega[0] * r[2],
                omega[0] * r[1] - omega[1] * r[0],
            ]);
        }
    }
    Ok(out)
}

/// Parameters realizing a rigid rotation with angular velocity `omega`
/// (positive is counter-clockwise in the plane) about `center`.
///
/// About the centroid the solution lies in `W`. About a vertex the solution
/// is taken from the length-preserving parameters whose slots at that vertex
/// are zero, so the center's row of `A` vanishes.
pub fn design_rotation(
    shape: &DesiredShape,
    omega: &[f64],
    center: RotationCenter,
) -> Result<MotionParams> {
    if omega.iter().any(|v| !v.is_finite()) {
        return Err(FormationError::Configuration("non-finite angular velocity".into()));
    }
    let g = shape.graph();
    let m = shape.dim();
    let target = rotation_field(shape, omega, center)?;
    let t = t_matrix(g, shape.z_star(), m)?;
    let basis = match center {
        RotationCenter::Centroid => rotation_space(shape)?.basis,
        RotationCenter::Vertex(v) => {
            let dr = distance_rate_matrix(shape)?;
            let ker = null_space(&dr);
            let slots = agent_slots(g, v - 1);
            let mut sel = Matrix::zeros(slots.len(), ker.nrows());
            for (j, &s) in slots.iter().enumerate() {
                sel[(j, s)] = 1.0;
            }
            let inner = null_space(&(sel * &ker));
            let restricted = &ker * inner;
            project_subspace(&complement_projector(&null_space(&t)), &restricted)
        }
    };
    let coeff = lstsq(&(&t * &basis), &to_vector(&target));
    let mut v: Vector = &basis * coeff;
    if let RotationCenter::Vertex(c) = center {
        // Exactly zero rather than round-off, so the center's row of A vanishes.
        for s in agent_slots(g, c - 1) {
            v[s] = 0.0;
        }
    }
    check_residual(&t, v.as_slice(), &target)?;
    Ok(MotionParams::from_stacked(v.as_slice()))
}

/// Desired steady motion in the body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSpec {
    pub v_c: Vec<f64>,
    pub omega: Vec<f64>,
    pub center: RotationCenter,
}

pub fn design_motion(shape: &DesiredShape, spec: &MotionSpec) -> Result<MotionParams> {
    let tr = design_translation(shape, &spec.v_c)?;
    let rot = design_rotation(shape, &spec.omega, spec.center)?;
    Ok(tr.add(&rot))
}

/// `f(e) = R(z) (A ⊗ I) z`.
pub fn f_of_e(g: &FormationGraph, z: &[f64], m: usize, params: &MotionParams) -> Result<Vec<f64>> {
    let r = rigidity_matrix(g, z, m)?;
    let v = motion_velocity(g, params, z, m, MotionTerm::Raw)?;
    Ok((r * to_vector(&v)).as_slice().to_vec())
}

/// Closed-form `F(mu, mu~)` for the triangle `(1,2),(2,3),(3,1)`, with
/// `f(e) = F (e + d) / 2` at `l = 2`.
pub fn triangle_f(g: &FormationGraph, params: &MotionParams) -> Result<Matrix> {
    if g.vertex_count() != 3 || g.edges() != [(0, 1), (1, 2), (2, 0)] {
        return Err(FormationError::InvalidGraph(
            "triangle F-matrix needs edges (1,2),(2,3),(3,1)".into(),
        ));
    }
    params.check_edges(g)?;
    let (m1, m2, m3) = (params.mu[0], params.mu[1], params.mu[2]);
    let (t1, t2, t3) = (params.mu_tilde[0], params.mu_tilde[1], params.mu_tilde[2]);
    Ok(Matrix::from_row_slice(
        3,
        3,
        &[
            2.0 * (m1 - t1) + m2 - t3,
            m2 + t3,
            -m2 - t3,
            -m3 - t1,
            2.0 * (m2 - t2) + m3 - t1,
            m3 + t1,
            m1 + t2,
            -m1 - t2,
            2.0 * (m3 - t3) + m1 - t2,
        ],
    ))
}

/// Rotation direction `1_6 / sqrt(6)` for an equilateral triangle.
pub fn equilateral_rotation_direction() -> MotionParams {
    let s = 1.0 / 6f64.sqrt();
    MotionParams {
        mu: vec![s; 3],
        mu_tilde: vec![s; 3],
    }
}

/// Rotation direction for an isosceles triangle with `d1 = d2`.
pub fn isosceles_rotation_direction(d1: f64, d3: f64) -> MotionParams {
    let r = 3.0 * d3 * d3 / (2.0 * d1 * d1 + d3 * d3);
    MotionParams {
        mu: vec![r, 2.0 - r, 1.0],
        mu_tilde: vec![2.0 - r, r, 1.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::FormationGraph;
    use crate::linalg::max_abs_off_orthonormal;
    use crate::shape::{
        enclosing_quad, equilateral_triangle, isosceles_triangle, shape_library,
        square_with_diagonal, LIBRARY_NAMES,
    };
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triangle() -> FormationGraph {
        FormationGraph::from_one_based(3, &[(1, 2), (2, 3), (3, 1)]).unwrap()
    }

    /// Unit triangle with z*_1 = (-1, 0) and z*_3 = (0.5, √3/2).
    fn unit_triangle() -> DesiredShape {
        let h = 3f64.sqrt() / 2.0;
        DesiredShape::from_positions(triangle(), vec![0.0, 0.0, 1.0, 0.0, 0.5, h], 2, 2).unwrap()
    }

    #[test]
    fn a_matrix_example() {
        let p = MotionParams::new(vec![1., 2., 3.], vec![4., 5., 6.]).unwrap();
        let a = a_matrix(&triangle(), &p).unwrap();
        let want = Matrix::from_row_slice(3, 3, &[1., 0., 6., 4., 2., 0., 0., 5., 3.]);
        assert_eq!(a, want);
        let zero = a_matrix(&triangle(), &MotionParams::zeros(3)).unwrap();
        assert_eq!(zero.amax(), 0.0);
        assert!(a_matrix(&triangle(), &MotionParams::zeros(4)).is_err());
    }

    #[test]
    fn t_matrix_triangle_translation_example() {
        let s = unit_triangle();
        let t = t_matrix(s.graph(), s.z_star(), 2).unwrap();
        let v = t * to_vector(&[1.0, 0.0, -1.0, 1.0, -1.0, 0.0]);
        let z1 = &s.z_star()[..2];
        for agent in v.as_slice().chunks(2) {
            assert_abs_diff_eq!(agent[0], z1[0], epsilon = 1e-14);
            assert_abs_diff_eq!(agent[1], z1[1], epsilon = 1e-14);
        }
    }

    #[test]
    fn triangle_translation_design_matches_hand_solution() {
        let s = unit_triangle();
        let p = design_translation(&s, &[1.0, 0.0]).unwrap();
        let want = [-1.0, 0.0, 1.0, -1.0, 1.0, 0.0];
        for (a, b) in p.stacked().iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
        let zero = design_translation(&s, &[0.0, 0.0]).unwrap();
        assert!(norm(&zero.stacked()) < 1e-14);
    }

    #[test]
    fn translation_space_of_triangle_satisfies_relations() {
        let s = unit_triangle();
        let u = translation_space(&s).unwrap();
        assert_eq!(u.dim(), 2);
        assert!(max_abs_off_orthonormal(&u.basis) < 1e-10);
        for j in 0..u.dim() {
            let v = u.vector(j);
            let (m, t) = (&v[..3], &v[3..]);
            for r in [
                m[0] + m[1] + m[2],
                t[0] + t[1] + t[2],
                m[1] + t[2],
                m[2] + t[0],
                m[0] + t[1],
            ] {
                assert!(r.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn subspace_constraint_residuals_on_library() {
        for name in LIBRARY_NAMES {
            let s = shape_library(name, 2.0, None).unwrap();
            let g = s.graph();
            let m = s.dim();
            let t = t_matrix(g, s.z_star(), m).unwrap();
            let bt = kron_identity(&g.incidence_matrix(), m).transpose() * &t;
            let u = translation_space(&s).unwrap();
            let min_deg = (0..g.vertex_count()).map(|i| g.degree(i)).min().unwrap();
            assert!(u.dim() >= min_deg, "{name}");
            assert!((&bt * &u.basis).amax() < 1e-10);
            assert!((&t * &u.basis).column_iter().all(|c| c.norm() > 1e-6));
            let w = rotation_space(&s).unwrap();
            let dr = distance_rate_matrix(&s).unwrap();
            assert!((&dr * &w.basis).amax() < 1e-10);
            assert!(w.dim() + 1 >= u.dim(), "{name}");
            assert!(max_abs_off_orthonormal(&w.basis) < 1e-10);
        }
    }

    #[test]
    fn translation_params_move_every_agent_equally() {
        for name in LIBRARY_NAMES {
            let s = shape_library(name, 1.5, None).unwrap();
            let u = translation_space(&s).unwrap();
            for j in 0..u.dim() {
                let p = MotionParams::from_stacked(&u.vector(j));
                let v = steady_state_velocity(s.graph(), &p, s.z_star(), s.dim(), MotionTerm::Raw)
                    .unwrap();
                let first = &v[..s.dim()];
                for agent in v.chunks(s.dim()) {
                    for d in 0..s.dim() {
                        assert!((agent[d] - first[d]).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_rotation_vectors_lie_in_w() {
        let eq = equilateral_triangle(1.0).unwrap();
        let w = rotation_space(&eq).unwrap();
        assert!(w.angle_to(&equilateral_rotation_direction().stacked()) < 1e-8);
        // Equilateral: W is also orthogonal to U.
        let u = translation_space(&eq).unwrap();
        assert!((u.basis.transpose() * &w.basis).amax() < 1e-10);

        for (d1, d3) in [(1.0, 1.4), (2.0, 1.0), (1.0, 1.0)] {
            let s = isosceles_triangle(d1, d3).unwrap();
            let w = rotation_space(&s).unwrap();
            let dir = isosceles_rotation_direction(d1, d3).stacked();
            assert!(w.angle_to(&dir) < 1e-8);
            let dr = distance_rate_matrix(&s).unwrap();
            assert!((dr * to_vector(&dir)).amax() < 1e-10);
        }
        let same = isosceles_rotation_direction(1.0, 1.0).stacked();
        assert!(same.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn literal_orthogonal_rotation_space_misses_isosceles_direction() {
        let s = isosceles_triangle(1.0, 1.4).unwrap();
        let lit = orthogonal_rotation_space(&s).unwrap();
        let dir = isosceles_rotation_direction(1.0, 1.4).stacked();
        assert!(lit.angle_to(&dir) > 1e-3);
    }

    #[test]
    fn equilateral_rotation_speed() {
        let s = equilateral_triangle(1.0).unwrap();
        let w = 0.8;
        let p = equilateral_rotation_direction().scaled(w);
        let v = steady_state_velocity(s.graph(), &p, s.z_star(), 2, MotionTerm::Raw).unwrap();
        let c = s.centroid();
        let mut rates = Vec::new();
        for (vi, pi) in v.chunks(2).zip(s.positions().chunks(2)) {
            let r = [pi[0] - c[0], pi[1] - c[1]];
            let r2 = r[0] * r[0] + r[1] * r[1];
            rates.push((r[0] * vi[1] - r[1] * vi[0]) / r2);
        }
        for r in &rates {
            assert_abs_diff_eq!(r.abs(), w / 2f64.sqrt(), epsilon = 1e-12);
            assert_abs_diff_eq!(*r, rates[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_design_about_centroid_and_vertex() {
        for name in LIBRARY_NAMES {
            let s = shape_library(name, 1.0, None).unwrap();
            let omega = if s.dim() == 2 { vec![0.3] } else { vec![0.1, -0.2, 0.3] };
            for center in [RotationCenter::Centroid, RotationCenter::Vertex(1)] {
                let p = design_rotation(&s, &omega, center).unwrap();
                let v = steady_state_velocity(s.graph(), &p, s.z_star(), s.dim(), MotionTerm::Raw)
                    .unwrap();
                let field = rotation_field(&s, &omega, center).unwrap();
                for (a, b) in v.iter().zip(&field) {
                    assert!((a - b).abs() < 1e-8, "{name} {center:?}");
                }
                if let RotationCenter::Vertex(c) = center {
                    let a = a_matrix(s.graph(), &p).unwrap();
                    assert_eq!(a.row(c - 1).amax(), 0.0);
                }
            }
        }
    }

    #[test]
    fn enclosing_params_give_expected_velocities() {
        let a = 130.0;
        let gamma = 0.038;
        let ag = a * gamma;
        let r2 = 2f64.sqrt();
        let s = enclosing_quad(a).unwrap();
        let p = MotionParams::new(
            vec![0.0, 0.0, 0.0, -2.0 * ag * r2, 2.0 * ag],
            vec![0.0, ag, 0.0, -ag * r2, 0.0],
        )
        .unwrap();
        let v = steady_state_velocity(s.graph(), &p, s.z_star(), 2, MotionTerm::Normalized).unwrap();
        let want = [0.0, 0.0, -ag, ag, 0.0, ag, 0.0, 2.0 * ag];
        for (x, y) in v.iter().zip(want) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
        // Same field as a designed rotation about the target.
        let field = rotation_field(&s, &[gamma], RotationCenter::Vertex(1)).unwrap();
        for (x, y) in v.iter().zip(&field) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn centroid_is_fixed_under_rotation_params() {
        let s = isosceles_triangle(2.0, 1.5).unwrap();
        let p = MotionParams::from_stacked(&rotation_space(&s).unwrap().vector(0));
        let v = steady_state_velocity(s.graph(), &p, s.z_star(), 2, MotionTerm::Raw).unwrap();
        assert!((v[0] + v[2] + v[4]).abs() < 1e-12 && (v[1] + v[3] + v[5]).abs() < 1e-12);
    }

    #[test]
    fn normalized_conversion_matches_raw_at_shape() {
        let s = square_with_diagonal(225.0).unwrap();
        let raw = design_translation(&s, &[5.0, 0.0]).unwrap();
        let norm_params = raw.to_normalized(s.distances());
        let a = steady_state_velocity(s.graph(), &raw, s.z_star(), 2, MotionTerm::Raw).unwrap();
        let b = steady_state_velocity(s.graph(), &norm_params, s.z_star(), 2, MotionTerm::Normalized)
            .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
        }
        let back = norm_params.from_normalized(s.distances());
        for (x, y) in back.stacked().iter().zip(raw.stacked()) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn triangle_f_special_cases() {
        let g = triangle();
        let eq = equilateral_triangle(1.0).unwrap();
        let w = 0.7;
        let f = triangle_f(&g, &equilateral_rotation_direction().scaled(w)).unwrap();
        assert!((&f + f.transpose()).amax() < 1e-15);
        let k = 2.0 * w / 6f64.sqrt();
        let want = Matrix::from_row_slice(3, 3, &[0., 1., -1., -1., 0., 1., 1., -1., 0.]) * k;
        assert!((f - want).amax() < 1e-15);

        let tr = design_translation(&eq, &[0.4, -0.9]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let p: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let z = g.relative_positions(&p, 2).unwrap();
            assert!(norm(&f_of_e(&g, &z, 2, &tr).unwrap()) < 1e-12);
        }
        assert!(triangle_f(&square_with_diagonal(1.0).unwrap().graph().clone(), &MotionParams::zeros(5)).is_err());
    }

    proptest! {
        #[test]
        fn t_matrix_reproduces_motion_term(seed in 0u64..500, idx in 0usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = shape_library(LIBRARY_NAMES[idx], 1.0, None).unwrap();
            let e = s.graph().edge_count();
            let v: Vec<f64> = (0..2 * e).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let p = MotionParams::from_stacked(&v);
            let t = t_matrix(s.graph(), s.z_star(), s.dim()).unwrap();
            let via_t = t * to_vector(&v);
            let direct = motion_velocity(s.graph(), &p, s.z_star(), s.dim(), MotionTerm::Raw).unwrap();
            for (a, b) in via_t.iter().zip(&direct) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn triangle_f_matches_matrix_route(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = triangle();
            let v: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let params = MotionParams::from_stacked(&v);
            let p: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let z = g.relative_positions(&p, 2).unwrap();
            let sq: Vec<f64> = z.chunks(2).map(|zk| zk[0] * zk[0] + zk[1] * zk[1]).collect();
            let closed = triangle_f(&g, &params).unwrap() * to_vector(&sq) * 0.5;
            let f = f_of_e(&g, &z, 2, &params).unwrap();
            for (a, b) in closed.iter().zip(&f) {
                prop_assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn velocity_is_linear_in_params(seed in 0u64..500, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = square_with_diagonal(2.0).unwrap();
            let mut draw = || MotionParams::from_stacked(&(0..10).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
            let (p, q) = (draw(), draw());
            let combo = p.scaled(a).add(&q.scaled(b));
            let vel = |x: &MotionParams| steady_state_velocity(s.graph(), x, s.z_star(), 2, MotionTerm::Raw).unwrap();
            let (vp, vq, vc) = (vel(&p), vel(&q), vel(&combo));
            for i in 0..vc.len() {
                prop_assert!((vc[i] - a * vp[i] - b * vq[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn translation_design_scales_linearly(vx in -10.0f64..10.0, vy in -10.0f64..10.0) {
            let s = enclosing_quad(1.0).unwrap();
            let p1 = design_translation(&s, &[vx, vy]).unwrap();
            let p2 = design_translation(&s, &[2.0 * vx, 2.0 * vy]).unwrap();
            for (a, b) in p1.stacked().iter().zip(p2.stacked()) {
                prop_assert!((2.0 * a - b).abs() < 1e-9);
            }
            let v = steady_state_velocity(s.graph(), &p1, s.z_star(), 2, MotionTerm::Raw).unwrap();
            for agent in v.chunks(2) {
                prop_assert!((agent[0] - vx).abs() < 1e-9 && (agent[1] - vy).abs() < 1e-9);
            }
        }
    }
}
