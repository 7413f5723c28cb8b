//! Desired shapes and the built-in shape library.

use crate::error::{FormationError, Result};
use crate::graph::{check_dim, kron_identity, to_vector, FormationGraph};
use crate::linalg::{lstsq, norm, Matrix};
use crate::rigidity::{classify_rigidity, Framework};

/// Reference relative positions `z*` in the body frame, the cached edge
/// lengths `d_k = |z*_k|`, and the potential order `l`.
///
/// Construction guarantees the realizing framework is infinitesimally and
/// minimally rigid.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredShape {
    graph: FormationGraph,
    dim: usize,
    positions: Vec<f64>,
    z_star: Vec<f64>,
    d: Vec<f64>,
    order: u32,
}

impl DesiredShape {
    pub fn from_positions(
        graph: FormationGraph,
        positions: Vec<f64>,
        dim: usize,
        order: u32,
    ) -> Result<Self> {
        if order == 0 {
            return Err(FormationError::Configuration(
                "potential order l must be a positive integer".into(),
            ));
        }
        let fw = Framework::new(graph, positions, dim)?;
        let report = classify_rigidity(&fw)?;
        if !report.infinitesimally_rigid || !report.minimally_rigid {
            return Err(FormationError::Degenerate(format!(
                "desired shape must be infinitesimally and minimally rigid \
                 (rank {} of {}, {} edges)",
                report.rank, report.required_rank, report.edge_count
            )));
        }
        let z_star = fw.relative_positions();
        let d: Vec<f64> = z_star.chunks(dim).map(norm).collect();
        if d.iter().any(|&v| v <= 0.0) {
            return Err(FormationError::Degenerate("zero-length desired edge".into()));
        }
        Ok(Self {
            graph: fw.graph,
            dim,
            positions: fw.positions,
            z_star,
            d,
            order,
        })
    }

    /// Recovers reference positions (vertex 1 at the origin) from `z*` and
    /// checks that the relative positions close around every cycle.
    pub fn from_relative(
        graph: FormationGraph,
        z_star: Vec<f64>,
        dim: usize,
        order: u32,
    ) -> Result<Self> {
        let p = reconstruct_positions(&graph, &z_star, dim)?;
        Self::from_positions(graph, p, dim, order)
    }

    pub fn with_order(mut self, order: u32) -> Result<Self> {
        if order == 0 {
            return Err(FormationError::Configuration(
                "potential order l must be a positive integer".into(),
            ));
        }
        self.order = order;
        Ok(self)
    }

    pub fn graph(&self) -> &FormationGraph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn z_star(&self) -> &[f64] {
        &self.z_star
    }

    pub fn distances(&self) -> &[f64] {
        &self.d
    }

    /// `d_k^l` for every edge.
    pub fn distance_powers(&self) -> Vec<f64> {
        self.d.iter().map(|d| d.powi(self.order as i32)).collect()
    }

    pub fn centroid(&self) -> Vec<f64> {
        centroid(&self.positions, self.dim)
    }

    pub fn max_distance(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    /// Reference positions rotated by `rotation` (m×m) and shifted so the
    /// centroid lands on `center`.
    pub fn placed(&self, rotation: &Matrix, center: &[f64]) -> Vec<f64> {
        let c = self.centroid();
        let m = self.dim;
        let mut out = Vec::with_capacity(self.positions.len());
        for p in self.positions.chunks(m) {
            for r in 0..m {
                let mut v = center[r];
                for k in 0..m {
                    v += rotation[(r, k)] * (p[k] - c[k]);
                }
                out.push(v);
            }
        }
        out
    }
}

/// Positions (vertex 1 at the origin) whose relative positions are `z`,
/// or an error when `z` does not close around the graph's cycles.
pub fn reconstruct_positions(graph: &FormationGraph, z: &[f64], dim: usize) -> Result<Vec<f64>> {
    check_dim(dim)?;
    let n = graph.vertex_count();
    if z.len() != graph.edge_count() * dim {
        return Err(FormationError::DimensionMismatch {
            what: "z_star",
            expected: graph.edge_count() * dim,
            found: z.len(),
        });
    }
    // Drop vertex 1's columns: positions relative to vertex 1.
    let bbt = kron_identity(&graph.incidence_matrix(), dim).transpose();
    let reduced: Matrix = bbt.columns(dim, (n - 1) * dim).into_owned();
    let rest = lstsq(&reduced, &to_vector(z));
    let residual = (&reduced * &rest - to_vector(z)).norm();
    if residual > 1e-9 * norm(z).max(1.0) {
        return Err(FormationError::InconsistentShape(format!(
            "relative positions do not close around the graph's cycles (residual {residual:e})"
        )));
    }
    let mut p = vec![0.0; n * dim];
    p[dim..].copy_from_slice(rest.as_slice());
    Ok(p)
}

pub fn centroid(p: &[f64], m: usize) -> Vec<f64> {
    let n = p.len() / m;
    let mut c = vec![0.0; m];
    for v in p.chunks(m) {
        for d in 0..m {
            c[d] += v[d];
        }
    }
    c.iter_mut().for_each(|x| *x /= n as f64);
    c
}

fn check_scale(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(FormationError::InvalidScale(s))
    }
}

const TRIANGLE: [(usize, usize); 3] = [(1, 2), (2, 3), (3, 1)];

pub fn equilateral_triangle(side: f64) -> Result<DesiredShape> {
    check_scale(side)?;
    let g = FormationGraph::from_one_based(3, &TRIANGLE)?;
    let h = side * 3f64.sqrt() / 2.0;
    DesiredShape::from_positions(g, vec![0.0, 0.0, side, 0.0, side / 2.0, h], 2, 2)
}

/// Isosceles triangle with `d1 = d2 = legs` (apex at vertex 2) and `d3 = base`.
pub fn isosceles_triangle(legs: f64, base: f64) -> Result<DesiredShape> {
    check_scale(legs)?;
    check_scale(base)?;
    if base >= 2.0 * legs {
        return Err(FormationError::Degenerate(format!(
            "base {base} is too long for legs {legs}"
        )));
    }
    let g = FormationGraph::from_one_based(3, &TRIANGLE)?;
    let h = (legs * legs - base * base / 4.0).sqrt();
    DesiredShape::from_positions(g, vec![-base / 2.0, 0.0, 0.0, h, base / 2.0, 0.0], 2, 2)
}

/// Square with the 1-3 diagonal; edges (1,2),(2,3),(3,1),(1,4),(3,4).
///
/// Vertex 2 sits at the origin and `z*_1 = p_1 - p_2` points along +x.
pub fn square_with_diagonal(side: f64) -> Result<DesiredShape> {
    check_scale(side)?;
    let g = FormationGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 1), (1, 4), (3, 4)])?;
    let s = side;
    DesiredShape::from_positions(g, vec![s, 0.0, 0.0, 0.0, 0.0, s, s, s], 2, 2)
}

/// Target (vertex 1) plus three pursuers at (a,a), (a,0), (2a,0).
pub fn enclosing_quad(a: f64) -> Result<DesiredShape> {
    check_scale(a)?;
    let g = FormationGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 1), (4, 2), (4, 3)])?;
    DesiredShape::from_positions(g, vec![0.0, 0.0, a, a, a, 0.0, 2.0 * a, 0.0], 2, 2)
}

pub fn regular_tetrahedron(side: f64) -> Result<DesiredShape> {
    check_scale(side)?;
    let g = FormationGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 1), (1, 4), (2, 4), (3, 4)])?;
    let s = side;
    let p = vec![
        0.0,
        0.0,
        0.0,
        s,
        0.0,
        0.0,
        s / 2.0,
        s * 3f64.sqrt() / 2.0,
        0.0,
        s / 2.0,
        s * 3f64.sqrt() / 6.0,
        s * (2.0f64 / 3.0).sqrt(),
    ];
    DesiredShape::from_positions(g, p, 3, 2)
}

pub const LIBRARY_NAMES: [&str; 5] = [
    "equilateral_triangle",
    "isosceles_triangle",
    "square_with_diagonal",
    "enclosing_quad",
    "regular_tetrahedron",
];

/// Looks a shape up by name. `base` is only used by `isosceles_triangle`
/// (default `1.4 * scale` when absent).
pub fn shape_library(name: &str, scale: f64, base: Option<f64>) -> Result<DesiredShape> {
    match name {
        "equilateral_triangle" => equilateral_triangle(scale),
        "isosceles_triangle" => isosceles_triangle(scale, base.unwrap_or(1.4 * scale)),
        "square_with_diagonal" => square_with_diagonal(scale),
        "enclosing_quad" => enclosing_quad(scale),
        "regular_tetrahedron" => regular_tetrahedron(scale),
        other => Err(FormationError::UnknownShape(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enclosing_quad_distances() {
        let s = enclosing_quad(130.0).unwrap();
        let r2 = 2f64.sqrt() * 130.0;
        let want = [r2, 130.0, 130.0, r2, 130.0];
        for (a, b) in s.distances().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn square_with_diagonal_distances() {
        let s = square_with_diagonal(225.0).unwrap();
        let d = s.distances();
        for k in [0, 1, 3, 4] {
            assert!((d[k] - 225.0).abs() < 1e-12);
        }
        assert!((d[2] - 225.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(&s.z_star()[..2], &[225.0, 0.0]);
    }

    #[test]
    fn library_shapes_are_consistent_and_rigid() {
        for name in LIBRARY_NAMES {
            let s = shape_library(name, 2.0, None).unwrap();
            for (k, zk) in s.z_star().chunks(s.dim()).enumerate() {
                assert!((norm(zk) - s.distances()[k]).abs() < 1e-12);
            }
            let fw = Framework::new(s.graph().clone(), s.positions().to_vec(), s.dim()).unwrap();
            let rep = classify_rigidity(&fw).unwrap();
            assert!(rep.infinitesimally_rigid && rep.minimally_rigid, "{name}");
        }
    }

    #[test]
    fn library_errors() {
        assert!(matches!(
            shape_library("hexagon", 1.0, None),
            Err(FormationError::UnknownShape(_))
        ));
        assert!(matches!(
            shape_library("equilateral_triangle", 0.0, None),
            Err(FormationError::InvalidScale(_))
        ));
        assert!(shape_library("square_with_diagonal", -3.0, None).is_err());
        assert!(isosceles_triangle(1.0, 2.5).is_err());
    }

    #[test]
    fn from_relative_round_trips_and_rejects_open_cycles() {
        let s = enclosing_quad(3.0).unwrap();
        let back =
            DesiredShape::from_relative(s.graph().clone(), s.z_star().to_vec(), 2, 1).unwrap();
        for (a, b) in back.z_star().iter().zip(s.z_star()) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut broken = s.z_star().to_vec();
        broken[0] += 0.5;
        assert!(matches!(
            DesiredShape::from_relative(s.graph().clone(), broken, 2, 1),
            Err(FormationError::InconsistentShape(_))
        ));
    }

    #[test]
    fn collinear_shape_is_rejected() {
        let g = FormationGraph::from_one_based(3, &TRIANGLE).unwrap();
        assert!(DesiredShape::from_positions(g, vec![0., 0., 1., 0., 2., 0.], 2, 2).is_err());
    }
}
