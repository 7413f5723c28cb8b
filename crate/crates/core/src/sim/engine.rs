//! Closed-loop integration: agent models, local frames, events and the
//! escape monitor.

use serde::{Deserialize, Serialize};

use super::frames::LocalFrame;
use super::integrator::rk4_step;
use super::log::{EventRecord, Sample, TrajectoryLog};
use super::unicycle::{
    feedback_linearize, pose_rate, reference_point, reference_velocity, wrap_angle, Saturation,
};
use crate::error::{FormationError, Result};
use crate::gradient::distance_errors;
use crate::linalg::norm;
use crate::maneuver::{bearing_rate, ControlLaw, EscapeMonitor, EscapeSettings, LawKind, LocalView};

/// Kinematics of every agent.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentModel {
    SingleIntegrator,
    /// Planar unicycles steered through a reference point `handle` ahead.
    Unicycle {
        handle: f64,
        saturation: Option<Saturation>,
        headings: Vec<f64>,
    },
}

/// `{"agent": 1, "ge": 1100}`: fires when the agent's x-coordinate crosses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XTrigger {
    pub agent: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub le: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadingEvent {
    pub when_x_of_agent: XTrigger,
    pub set_z1_star: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadingSetup {
    pub z1_star: Vec<f64>,
    pub events: Vec<HeadingEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnclosingSetup {
    /// True (constant) target velocity, global frame.
    pub target_velocity: Vec<f64>,
    /// Initial estimates of every agent, global frame; the target's slot is
    /// overwritten with `target_velocity`.
    pub v_hat0: Vec<f64>,
    pub escape: EscapeSettings,
}

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct SimSetup {
    pub law: ControlLaw,
    pub model: AgentModel,
    /// Initial agent positions (reference points for unicycles), global frame.
    pub initial_positions: Vec<f64>,
    pub frames: Vec<LocalFrame>,
    pub heading: Option<HeadingSetup>,
    pub enclosing: Option<EnclosingSetup>,
    pub dt: f64,
    pub duration: f64,
    pub sample_every: usize,
}

impl SimSetup {
    pub fn dim(&self) -> usize {
        self.law.shape.dim()
    }

    pub fn agents(&self) -> usize {
        self.law.shape.graph().vertex_count()
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        let n = self.agents();
        let m = self.dim();
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(FormationError::Configuration("dt and duration must be positive".into()));
        }
        if self.sample_every == 0 {
            return Err(FormationError::Configuration("sample_every must be at least 1".into()));
        }
        if self.initial_positions.len() != n * m {
            return Err(FormationError::DimensionMismatch {
                what: "initial positions",
                expected: n * m,
                found: self.initial_positions.len(),
            });
        }
        if self.frames.len() != n || self.frames.iter().any(|f| f.dim() != m) {
            return Err(FormationError::DimensionMismatch {
                what: "local frames",
                expected: n,
                found: self.frames.len(),
            });
        }
        if let AgentModel::Unicycle { handle, headings, .. } = &self.model {
            if m != 2 {
                return Err(FormationError::Configuration("unicycles are planar".into()));
            }
            if !(*handle > 0.0) {
                return Err(FormationError::Configuration("unicycle handle must be positive".into()));
            }
            if headings.len() != n {
                return Err(FormationError::DimensionMismatch {
                    what: "unicycle headings",
                    expected: n,
                    found: headings.len(),
                });
            }
        }
        match (&self.law.kind, &self.heading, &self.enclosing) {
            (LawKind::Heading, Some(h), None) => {
                if h.z1_star.len() != m || h.events.iter().any(|e| e.set_z1_star.len() != m) {
                    return Err(FormationError::Configuration("z1_star has wrong dimension".into()));
                }
            }
            (LawKind::Enclosing { .. }, None, Some(e)) => {
                if e.target_velocity.len() != m || e.v_hat0.len() != n * m {
                    return Err(FormationError::Configuration(
                        "enclosing velocities have wrong dimension".into(),
                    ));
                }
            }
            (LawKind::Formation, None, None) => {}
            _ => {
                return Err(FormationError::Configuration(
                    "control law does not match the heading/enclosing sections".into(),
                ))
            }
        }
        Ok(())
    }
}

/// Layout of the flat ODE state.
struct Layout {
    n: usize,
    m: usize,
    /// Per-agent width of the kinematic block (m, or 3 for unicycle poses).
    w: usize,
    estimator: bool,
}

impl Layout {
    fn len(&self) -> usize {
        self.n * self.w + if self.estimator { self.n * self.m } else { 0 }
    }

    fn v_hat<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        let base = self.n * self.w;
        &x[base + i * self.m..base + (i + 1) * self.m]
    }
}

struct Engine<'a> {
    setup: &'a SimSetup,
    layout: Layout,
    z1_star: Vec<f64>,
}

/// Derivative plus quantities of interest at one state.
struct Evaluation {
    rate: Vec<f64>,
    positions: Vec<f64>,
    velocities: Vec<f64>,
    /// Commanded velocities in the agents' own frames.
    local_commands: Vec<Vec<f64>>,
}

impl<'a> Engine<'a> {
    fn positions(&self, x: &[f64]) -> Vec<f64> {
        let Layout { n, m, w, .. } = self.layout;
        match &self.setup.model {
            AgentModel::SingleIntegrator => x[..n * m].to_vec(),
            AgentModel::Unicycle { handle, .. } => (0..n)
                .flat_map(|i| reference_point([x[i * w], x[i * w + 1], x[i * w + 2]], *handle))
                .collect(),
        }
    }

    fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        let Layout { n, m, w, estimator } = self.layout;
        let law = &self.setup.law;
        let g = law.shape.graph();
        let p = self.positions(x);
        let z = g.relative_positions(&p, m)?;
        let mut rate = vec![0.0; x.len()];
        let mut velocities = vec![0.0; n * m];
        let mut local_commands = Vec::with_capacity(n);
        let mut z_local = vec![0.0; z.len()];
        for i in 0..n {
            let frame = &self.setup.frames[i];
            // Only the agent's own edges are visible to it.
            z_local.iter_mut().for_each(|v| *v = 0.0);
            for (k, _) in g.incident_edges(i) {
                let zl = frame.localize_vector(&z[k * m..(k + 1) * m]);
                z_local[k * m..(k + 1) * m].copy_from_slice(&zl);
            }
            let z1_local = if i < 2 && law.kind == LawKind::Heading {
                Some(frame.localize_vector(&self.z1_star))
            } else {
                None
            };
            let view = LocalView {
                z: &z_local,
                z1_star: z1_local.as_deref(),
                v_hat: if estimator { Some(self.layout.v_hat(x, i)) } else { None },
            };
            let u_local = law.agent_velocity(i, &view)?;
            let u = frame.globalize_vector(&u_local);
            if estimator {
                let dv = law.agent_estimator_rate(i, &view)?;
                let base = n * w + i * m;
                rate[base..base + m].copy_from_slice(&dv);
            }
            match &self.setup.model {
                AgentModel::SingleIntegrator => {
                    rate[i * m..(i + 1) * m].copy_from_slice(&u);
                    velocities[i * m..(i + 1) * m].copy_from_slice(&u);
                }
                AgentModel::Unicycle { handle, saturation, .. } => {
                    let th = x[i * w + 2];
                    let (v, om) = feedback_linearize(th, [u[0], u[1]], *handle, *saturation)?;
                    rate[i * w..i * w + 3].copy_from_slice(&pose_rate(th, v, om));
                    let q = reference_velocity(th, v, om, *handle);
                    velocities[i * m..i * m + 2].copy_from_slice(&q);
                }
            }
            local_commands.push(u_local);
        }
        Ok(Evaluation {
            rate,
            positions: p,
            velocities,
            local_commands,
        })
    }

    fn global_v_hat(&self, x: &[f64]) -> Option<Vec<f64>> {
        if !self.layout.estimator {
            return None;
        }
        Some(
            (0..self.layout.n)
                .flat_map(|i| self.setup.frames[i].globalize_vector(self.layout.v_hat(x, i)))
                .collect(),
        )
    }

    fn sample(&self, t: f64, x: &[f64], ev: &Evaluation) -> Result<Sample> {
        let m = self.layout.m;
        let shape = &self.setup.law.shape;
        let z = shape.graph().relative_positions(&ev.positions, m)?;
        let errors = distance_errors(&z, shape)?.e;
        let eo_norm = if self.setup.law.kind == LawKind::Heading {
            norm(&z[..m].iter().zip(&self.z1_star).map(|(a, b)| a - b).collect::<Vec<_>>())
        } else {
            0.0
        };
        let v_hat = self.global_v_hat(x);
        let ev_norm = match (&v_hat, &self.setup.enclosing) {
            (Some(vh), Some(enc)) => norm(
                &vh.chunks(m)
                    .flat_map(|v| v.iter().zip(&enc.target_velocity).map(|(a, b)| a - b))
                    .collect::<Vec<_>>(),
            ),
            _ => 0.0,
        };
        let thetas = match &self.setup.model {
            AgentModel::Unicycle { .. } => Some(
                (0..self.layout.n).map(|i| x[i * self.layout.w + 2]).collect(),
            ),
            AgentModel::SingleIntegrator => None,
        };
        Ok(Sample {
            t,
            positions: ev.positions.clone(),
            velocities: ev.velocities.clone(),
            e_norm: norm(&errors),
            errors,
            eo_norm,
            ev_norm,
            v_hat,
            thetas,
        })
    }
}

fn abort(t: f64, err: FormationError, x: &[f64]) -> FormationError {
    match err {
        already @ FormationError::SimulationAborted { .. } => already,
        other => FormationError::SimulationAborted {
            t,
            reason: other.to_string(),
            state: x.to_vec(),
        },
    }
}

/// Integrates the closed loop with fixed-step RK4.
pub fn integrate(setup: &SimSetup) -> Result<TrajectoryLog> {
    setup.validate()?;
    let n = setup.agents();
    let m = setup.dim();
    let estimator = matches!(setup.law.kind, LawKind::Enclosing { .. });
    let w = match setup.model {
        AgentModel::SingleIntegrator => m,
        AgentModel::Unicycle { .. } => 3,
    };
    let layout = Layout { n, m, w, estimator };
    let mut x = vec![0.0; layout.len()];
    match &setup.model {
        AgentModel::SingleIntegrator => x[..n * m].copy_from_slice(&setup.initial_positions),
        AgentModel::Unicycle { handle, headings, .. } => {
            for i in 0..n {
                let th = wrap_angle(headings[i]);
                x[i * 3] = setup.initial_positions[i * 2] - handle * th.cos();
                x[i * 3 + 1] = setup.initial_positions[i * 2 + 1] - handle * th.sin();
                x[i * 3 + 2] = th;
            }
        }
    }
    let mut monitor = None;
    if let (Some(enc), LawKind::Enclosing { target, .. }) = (&setup.enclosing, &setup.law.kind) {
        for i in 0..n {
            let v = if i == *target {
                enc.target_velocity.clone()
            } else {
                enc.v_hat0[i * m..(i + 1) * m].to_vec()
            };
            let local = setup.frames[i].localize_vector(&v);
            let base = n * w + i * m;
            x[base..base + m].copy_from_slice(&local);
        }
        monitor = Some(EscapeMonitor::new(enc.escape, n, *target));
    }
    let mut engine = Engine {
        setup,
        layout,
        z1_star: setup.heading.as_ref().map(|h| h.z1_star.clone()).unwrap_or_default(),
    };
    let mut fired = vec![false; setup.heading.as_ref().map_or(0, |h| h.events.len())];
    let d_norm = norm(setup.law.shape.distances().iter().map(|d| d.powi(setup.law.shape.order() as i32)).collect::<Vec<_>>().as_slice());

    let mut log = TrajectoryLog::new(m, n);
    let steps = setup.steps();
    let dt = setup.dt;
    let mut ev = engine.evaluate(&x).map_err(|e| abort(0.0, e, &x))?;
    log.push(engine.sample(0.0, &x, &ev)?)?;
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * dt;
        let t = step as f64 * dt;
        let mut rhs = |_t: f64, s: &[f64]| engine.evaluate(s).map(|e| e.rate);
        x = rk4_step(&mut rhs, t0, &x, dt).map_err(|e| abort(t0, e, &x))?;
        if let AgentModel::Unicycle { .. } = setup.model {
            for i in 0..n {
                x[i * 3 + 2] = wrap_angle(x[i * 3 + 2]);
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FormationError::SimulationAborted {
                t,
                reason: "state became non-finite".into(),
                state: x,
            });
        }

        // Events at the step boundary.
        if let Some(h) = &setup.heading {
            let p = engine.positions(&x);
            for (j, event) in h.events.iter().enumerate() {
                if fired[j] {
                    continue;
                }
                let a = event.when_x_of_agent.agent;
                if a == 0 || a > n {
                    return Err(FormationError::IndexOutOfRange { index: a, max: n });
                }
                let xa = p[(a - 1) * m];
                let hit = event.when_x_of_agent.ge.is_some_and(|g| xa >= g)
                    || event.when_x_of_agent.le.is_some_and(|l| xa <= l);
                if hit {
                    fired[j] = true;
                    engine.z1_star = event.set_z1_star.clone();
                    log.events.push(EventRecord {
                        t,
                        description: format!(
                            "agent {a} reached x = {xa:.3}; z1_star set to {:?}",
                            event.set_z1_star
                        ),
                    });
                }
            }
        }

        let need_eval = monitor.is_some() || step % setup.sample_every == 0 || step == steps;
        if need_eval {
            ev = engine.evaluate(&x).map_err(|e| abort(t, e, &x))?;
        }
        if let Some(mon) = monitor.as_mut() {
            let z = setup.law.shape.graph().relative_positions(&ev.positions, m)?;
            let zdot = setup.law.shape.graph().relative_positions(&ev.velocities, m)?;
            let omegas: Vec<f64> =
                (0..n).map(|i| bearing_rate(setup.law.shape.graph(), i, &z, &zdot, m)).collect();
            let e_norm = distance_errors(&z, &setup.law.shape)?.norm();
            let resets = mon.observe(dt, &omegas, e_norm, d_norm);
            if !resets.is_empty() {
                for &i in &resets {
                    let base = n * w + i * m;
                    x[base..base + m].copy_from_slice(&ev.local_commands[i]);
                }
                log.events.push(EventRecord {
                    t,
                    description: format!(
                        "escape reset of estimators for agents {:?}",
                        resets.iter().map(|i| i + 1).collect::<Vec<_>>()
                    ),
                });
                ev = engine.evaluate(&x).map_err(|e| abort(t, e, &x))?;
            }
        }
        if step % setup.sample_every == 0 || step == steps {
            log.push(engine.sample(t, &x, &ev)?)?;
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{MotionParams, MotionTerm};
    use crate::shape::equilateral_triangle;

    fn setup(p0: Vec<f64>) -> SimSetup {
        let s = equilateral_triangle(1.0).unwrap();
        let law = ControlLaw::new(s, MotionParams::zeros(3), MotionTerm::Raw, 1.0, LawKind::Formation)
            .unwrap();
        SimSetup {
            law,
            model: AgentModel::SingleIntegrator,
            initial_positions: p0,
            frames: vec![LocalFrame::identity(2); 3],
            heading: None,
            enclosing: None,
            dt: 0.01,
            duration: 1.0,
            sample_every: 10,
        }
    }

    #[test]
    fn equilibrium_is_preserved_and_sampling_is_regular() {
        let s = equilateral_triangle(1.0).unwrap();
        let log = integrate(&setup(s.positions().to_vec())).unwrap();
        assert_eq!(log.samples.len(), 11);
        assert!(log.samples.iter().all(|x| x.e_norm < 1e-12));
    }

    #[test]
    fn collision_aborts_with_state_dump() {
        let mut st = setup(vec![0.0, 0.0, 0.0, 0.0, 0.5, 0.8]);
        st.law.shape = st.law.shape.clone().with_order(1).unwrap();
        match integrate(&st) {
            Err(FormationError::SimulationAborted { t, state, .. }) => {
                assert_eq!(t, 0.0);
                assert_eq!(state.len(), 6);
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_setup() {
        let mut st = setup(vec![0.0; 6]);
        st.dt = 0.0;
        assert!(integrate(&st).is_err());
        let mut st = setup(vec![0.0; 4]);
        st.dt = 0.01;
        assert!(integrate(&st).is_err());
    }
}
