//! Heading-controlled translation, target enclosing with velocity
//! estimators, and the per-agent control law used by the simulator.

use serde::Serialize;

use crate::error::{FormationError, Result};
use crate::gradient::{distance_errors, gradient_flow_rhs, tilde_z};
use crate::graph::FormationGraph;
use crate::linalg::{norm, numerical_rank, Matrix};
use crate::motion::{a_matrix, motion_velocity, MotionParams, MotionTerm};
use crate::shape::DesiredShape;

/// Desired value of `z_1` in the global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadingTarget {
    pub z1_star: Vec<f64>,
}

impl HeadingTarget {
    pub fn new(z1_star: Vec<f64>, shape: &DesiredShape) -> Result<Self> {
        check_leader_edge(shape.graph())?;
        if z1_star.len() != shape.dim() {
            return Err(FormationError::DimensionMismatch {
                what: "z1_star",
                expected: shape.dim(),
                found: z1_star.len(),
            });
        }
        let d1 = shape.distances()[0];
        if (norm(&z1_star) - d1).abs() > 1e-6 * d1 {
            return Err(FormationError::InconsistentShape(format!(
                "|z1_star| = {} but d_1 = {d1}",
                norm(&z1_star)
            )));
        }
        Ok(Self { z1_star })
    }
}

fn check_leader_edge(g: &FormationGraph) -> Result<()> {
    g.augmented_incidence(1).map(|_| ())
}

fn minus_gradient_times(c: f64, p: &[f64], shape: &DesiredShape) -> Result<Vec<f64>> {
    Ok(gradient_flow_rhs(p, shape)?.into_iter().map(|v| c * v).collect())
}

/// `u = c(-R^T D_z~ e - B_a e_o) + A z`.
pub fn heading_control_rhs(
    p: &[f64],
    shape: &DesiredShape,
    params: &MotionParams,
    term: MotionTerm,
    target: &HeadingTarget,
    c: f64,
) -> Result<Vec<f64>> {
    let g = shape.graph();
    let m = shape.dim();
    let ba = crate::graph::kron_lift(&g.augmented_incidence(1)?, m)?;
    let z = g.relative_positions(p, m)?;
    let mut eo = vec![0.0; z.len()];
    for d in 0..m {
        eo[d] = z[d] - target.z1_star[d];
    }
    let orient = ba * crate::graph::to_vector(&eo);
    let grad = minus_gradient_times(c, p, shape)?;
    let motion = motion_velocity(g, params, &z, m, term)?;
    Ok((0..p.len())
        .map(|i| grad[i] - c * orient[i] + motion[i])
        .collect())
}

/// Outcome of the sufficient condition on the orientation-leader subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AssumptionReport {
    /// Agents 1..=m+1 are pairwise adjacent.
    pub complete_subgraph: bool,
    /// Those agents are not collinear (coplanar in 3D) at `z*`.
    pub non_degenerate: bool,
    /// Their parameters only live on edges inside the subgraph.
    pub params_from_subgraph: bool,
    /// `B_a^T A z` vanishes, checked at `z*` and nearby configurations.
    pub orientation_decoupled: bool,
    pub satisfied: bool,
}

pub fn validate_assumption_t(shape: &DesiredShape, params: &MotionParams) -> Result<AssumptionReport> {
    let g = shape.graph();
    let m = shape.dim();
    let h = m + 1;
    if g.vertex_count() < h {
        return Ok(AssumptionReport {
            complete_subgraph: false,
            non_degenerate: false,
            params_from_subgraph: false,
            orientation_decoupled: false,
            satisfied: false,
        });
    }
    let complete_subgraph =
        (0..h).all(|a| (a + 1..h).all(|b| g.has_undirected_edge(a, b)));

    let p = shape.positions();
    let mut spread = Matrix::zeros(m, h - 1);
    for j in 1..h {
        for d in 0..m {
            spread[(d, j - 1)] = p[j * m + d] - p[d];
        }
    }
    let non_degenerate = numerical_rank(&spread) == m;

    let a = a_matrix(g, params)?;
    let mut params_from_subgraph = true;
    for (k, &(t, hd)) in g.edges().iter().enumerate() {
        let inside = t < h && hd < h;
        for v in [t, hd] {
            if v < h && !inside && a[(v, k)] != 0.0 {
                params_from_subgraph = false;
            }
        }
    }

    // Deterministic perturbations around z*.
    let mut orientation_decoupled = true;
    let scale = shape.max_distance();
    for trial in 0..4 {
        let q: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let phase = (i * 7 + trial * 3) as f64;
                v + if trial == 0 { 0.0 } else { 0.1 * scale * phase.sin() }
            })
            .collect();
        let z = g.relative_positions(&q, m)?;
        let vel = motion_velocity(g, params, &z, m, MotionTerm::Raw)?;
        let diff: Vec<f64> = (0..m).map(|d| vel[d] - vel[m + d]).collect();
        let mag = norm(&vel).max(1e-300);
        if norm(&diff) > 1e-9 * mag {
            orientation_decoupled = false;
        }
    }
    Ok(AssumptionReport {
        complete_subgraph,
        non_degenerate,
        params_from_subgraph,
        orientation_decoupled,
        satisfied: complete_subgraph && non_degenerate && params_from_subgraph && orientation_decoupled,
    })
}

/// Per-agent velocity estimates `v_hat` (stacked) and their gain.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub v_hat: Vec<f64>,
    pub kappa: f64,
}

impl EstimatorState {
    pub fn new(v_hat: Vec<f64>, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(FormationError::Configuration(format!(
                "estimator gain must be positive, got {kappa}"
            )));
        }
        Ok(Self { v_hat, kappa })
    }
}

/// Rejects parameters that would move the target (1-based `target`).
pub fn check_target_row(g: &FormationGraph, params: &MotionParams, target: usize) -> Result<()> {
    let a = a_matrix(g, params)?;
    if target == 0 || target > g.vertex_count() {
        return Err(FormationError::IndexOutOfRange {
            index: target,
            max: g.vertex_count(),
        });
    }
    if a.row(target - 1).iter().any(|&v| v != 0.0) {
        return Err(FormationError::Configuration(format!(
            "motion parameters must vanish on the target's row (agent {target})"
        )));
    }
    Ok(())
}

/// `B_d D_z D_z~ e`: the gradient with the target's row removed.
fn masked_gradient(p: &[f64], shape: &DesiredShape, target: usize) -> Result<Vec<f64>> {
    let g = shape.graph();
    let m = shape.dim();
    let bd = crate::graph::kron_lift(&g.masked_incidence(target)?, m)?;
    let z = g.relative_positions(p, m)?;
    let dz = crate::graph::block_diag(&z, m)?;
    let w = tilde_z(&z, shape)?;
    let e = distance_errors(&z, shape)?;
    let we: Vec<f64> = w.iter().zip(&e.e).map(|(a, b)| a * b).collect();
    Ok((bd * dz * crate::graph::to_vector(&we)).as_slice().to_vec())
}

/// Agent velocities under `u = -c B_d D_z D_z~ e + A z + v_hat`; the target
/// (1-based) moves with its own `v_hat` only.
pub fn enclosing_control_rhs(
    p: &[f64],
    shape: &DesiredShape,
    params: &MotionParams,
    term: MotionTerm,
    est: &EstimatorState,
    c: f64,
    target: usize,
) -> Result<Vec<f64>> {
    let g = shape.graph();
    let m = shape.dim();
    check_target_row(g, params, target)?;
    let grad = masked_gradient(p, shape, target)?;
    let z = g.relative_positions(p, m)?;
    let motion = motion_velocity(g, params, &z, m, term)?;
    Ok((0..p.len())
        .map(|i| -c * grad[i] + motion[i] + est.v_hat[i])
        .collect())
}

/// `d v_hat / dt = -kappa B_d D_z~ D_z e`; the target's slot stays zero.
pub fn estimator_rhs(
    p: &[f64],
    shape: &DesiredShape,
    est: &EstimatorState,
    target: usize,
) -> Result<Vec<f64>> {
    Ok(masked_gradient(p, shape, target)?
        .into_iter()
        .map(|v| -est.kappa * v)
        .collect())
}

/// Rate at which agent `i` (0-based) sees its neighbors' bearings turn:
/// mean over incident edges of `(z_k × z_k') / |z_k|^2`.
pub fn bearing_rate(g: &FormationGraph, i: usize, z: &[f64], zdot: &[f64], m: usize) -> f64 {
    let inc = g.incident_edges(i);
    if inc.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (k, _) in &inc {
        let a = &z[k * m..(k + 1) * m];
        let b = &zdot[k * m..(k + 1) * m];
        let n2 = a.iter().map(|v| v * v).sum::<f64>();
        if n2 == 0.0 {
            continue;
        }
        let cross = if m == 2 {
            a[0] * b[1] - a[1] * b[0]
        } else {
            norm(&[
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ])
        };
        total += cross / n2;
    }
    total / inc.len() as f64
}

/// Thresholds of the escape heuristic out of the common-translation motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EscapeSettings {
    pub enabled: bool,
    pub omega_threshold: f64,
    pub window: f64,
    pub error_ratio: f64,
}

impl Default for EscapeSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            omega_threshold: 1e-3,
            window: 5.0,
            error_ratio: 1e-2,
        }
    }
}

/// Watches pursuers for a sustained near-zero bearing rate while the shape
/// error is small, and asks for their estimators to be reset.
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeMonitor {
    pub settings: EscapeSettings,
    timers: Vec<f64>,
    target: usize,
}

impl EscapeMonitor {
    /// `target` is 0-based.
    pub fn new(settings: EscapeSettings, agents: usize, target: usize) -> Self {
        Self {
            settings,
            timers: vec![0.0; agents],
            target,
        }
    }

    /// Advances the timers by `dt`; returns the 0-based agents to reset.
    pub fn observe(&mut self, dt: f64, omegas: &[f64], e_norm: f64, d_norm: f64) -> Vec<usize> {
        let mut fire = Vec::new();
        if !self.settings.enabled {
            return fire;
        }
        let shape_ok = e_norm < self.settings.error_ratio * d_norm;
        for (i, &w) in omegas.iter().enumerate() {
            if i == self.target {
                continue;
            }
            if shape_ok && w.abs() < self.settings.omega_threshold {
                self.timers[i] += dt;
                if self.timers[i] >= self.settings.window - 1e-9 {
                    fire.push(i);
                    self.timers[i] = 0.0;
                }
            } else {
                self.timers[i] = 0.0;
            }
        }
        fire
    }
}

/// Which closed loop an agent runs.
#[derive(Debug, Clone, PartialEq)]
pub enum LawKind {
    /// Gradient plus motion term.
    Formation,
    /// Adds the orientation term on agents 1 and 2.
    Heading,
    /// Target (0-based) plus estimator-driven pursuers.
    Enclosing { target: usize, kappa: f64 },
}

/// Everything an agent needs besides its own measurements.
#[derive(Debug, Clone)]
pub struct ControlLaw {
    pub shape: DesiredShape,
    pub params: MotionParams,
    pub term: MotionTerm,
    pub gain: f64,
    pub kind: LawKind,
}

/// Measurements of one agent, expressed in that agent's own frame.
pub struct LocalView<'a> {
    /// Stacked relative positions; only edges incident to the agent are read.
    pub z: &'a [f64],
    /// `z1_star` in the agent's frame (heading law, agents 1 and 2).
    pub z1_star: Option<&'a [f64]>,
    /// The agent's own velocity estimate.
    pub v_hat: Option<&'a [f64]>,
}

impl ControlLaw {
    pub fn new(
        shape: DesiredShape,
        params: MotionParams,
        term: MotionTerm,
        gain: f64,
        kind: LawKind,
    ) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(FormationError::Configuration(format!(
                "gain c must be positive, got {gain}"
            )));
        }
        let g = shape.graph();
        a_matrix(g, &params)?;
        match &kind {
            LawKind::Heading => check_leader_edge(g)?,
            LawKind::Enclosing { target, kappa } => {
                check_target_row(g, &params, target + 1)?;
                EstimatorState::new(Vec::new(), *kappa)?;
            }
            LawKind::Formation => {}
        }
        Ok(Self {
            shape,
            params,
            term,
            gain,
            kind,
        })
    }

    fn edge_gradient_sum(&self, i: usize, z: &[f64]) -> Result<Vec<f64>> {
        let m = self.shape.dim();
        let l = self.shape.order();
        let mut out = vec![0.0; m];
        for (k, tail) in self.shape.graph().incident_edges(i) {
            let zk = &z[k * m..(k + 1) * m];
            let grad = crate::gradient::edge_gradient(zk, self.shape.distances()[k], l).map_err(
                |err| match err {
                    FormationError::Singularity { norm, .. } => {
                        FormationError::Singularity { edge: k + 1, norm }
                    }
                    other => other,
                },
            )?;
            let sign = if tail { 1.0 } else { -1.0 };
            for d in 0..m {
                out[d] += sign * grad[d];
            }
        }
        Ok(out)
    }

    fn motion_sum(&self, i: usize, z: &[f64]) -> Result<Vec<f64>> {
        let m = self.shape.dim();
        let mut out = vec![0.0; m];
        for (k, tail) in self.shape.graph().incident_edges(i) {
            let a = if tail { self.params.mu[k] } else { self.params.mu_tilde[k] };
            if a == 0.0 {
                continue;
            }
            let zk = &z[k * m..(k + 1) * m];
            let s = match self.term {
                MotionTerm::Raw => a,
                MotionTerm::Normalized => {
                    let n = norm(zk);
                    if n == 0.0 {
                        return Err(FormationError::Singularity { edge: k + 1, norm: 0.0 });
                    }
                    a / n
                }
            };
            for d in 0..m {
                out[d] += s * zk[d];
            }
        }
        Ok(out)
    }

    /// Commanded velocity of agent `i` (0-based) in its own frame.
    pub fn agent_velocity(&self, i: usize, view: &LocalView) -> Result<Vec<f64>> {
        let m = self.shape.dim();
        let c = self.gain;
        if let LawKind::Enclosing { target, .. } = self.kind {
            let v_hat = view.v_hat.ok_or_else(|| {
                FormationError::Configuration("enclosing law needs velocity estimates".into())
            })?;
            if i == target {
                return Ok(v_hat.to_vec());
            }
            let grad = self.edge_gradient_sum(i, view.z)?;
            let motion = self.motion_sum(i, view.z)?;
            return Ok((0..m).map(|d| -c * grad[d] + motion[d] + v_hat[d]).collect());
        }
        let grad = self.edge_gradient_sum(i, view.z)?;
        let motion = self.motion_sum(i, view.z)?;
        let mut u: Vec<f64> = (0..m).map(|d| -c * grad[d] + motion[d]).collect();
        if self.kind == LawKind::Heading && i < 2 {
            let z1s = view.z1_star.ok_or_else(|| {
                FormationError::Configuration("heading law needs z1_star".into())
            })?;
            let sign = if i == 0 { 1.0 } else { -1.0 };
            for d in 0..m {
                u[d] -= c * sign * (view.z[d] - z1s[d]);
            }
        }
        Ok(u)
    }

    /// Estimator derivative of agent `i` in its own frame (zero for the target).
    pub fn agent_estimator_rate(&self, i: usize, view: &LocalView) -> Result<Vec<f64>> {
        let m = self.shape.dim();
        match self.kind {
            LawKind::Enclosing { target, kappa } => {
                if i == target {
                    return Ok(vec![0.0; m]);
                }
                Ok(self
                    .edge_gradient_sum(i, view.z)?
                    .into_iter()
                    .map(|v| -kappa * v)
                    .collect())
            }
            _ => Ok(vec![0.0; m]),
        }
    }
}
