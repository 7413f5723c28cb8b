//! Declarative scenario files and the built-in presets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FormationError, Result};
use crate::graph::{FormationGraph, GraphSpec};
use crate::linalg::Matrix;
use crate::maneuver::{check_target_row, ControlLaw, EscapeSettings, HeadingTarget, LawKind};
use crate::motion::{design_rotation, design_translation, MotionParams, MotionTerm, RotationCenter};
use crate::rigidity::Framework;
use crate::shape::{reconstruct_positions, shape_library, DesiredShape};
use crate::sim::engine::{AgentModel, EnclosingSetup, HeadingEvent, HeadingSetup, SimSetup};
use crate::sim::frames::LocalFrame;
use crate::sim::unicycle::Saturation;

/// Library shape (`library` + `scale`) or an explicit framework given by
/// `edges` plus either `z_star` or `positions`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub library: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Base `d3` of `isosceles_triangle`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_star: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Vec<f64>>>,
}

fn default_l() -> u32 {
    2
}

fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    #[serde(default = "default_l")]
    pub l: u32,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub motion_term: MotionTerm,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            l: default_l(),
            c: default_c(),
            motion_term: MotionTerm::Raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Omega {
    Planar(f64),
    Spatial(Vec<f64>),
}

impl Omega {
    pub fn as_vec(&self) -> Vec<f64> {
        match self {
            Omega::Planar(w) => vec![*w],
            Omega::Spatial(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationSection {
    pub omega: Omega,
    #[serde(default)]
    pub center: RotationCenter,
}

/// Designed (`translation` and/or `rotation`) or explicit (`mu`, `mu_tilde`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_tilde: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    #[default]
    SingleIntegrator,
    Unicycle,
}

/// `"identity"`, `{"random": seed}` or `{"angles": [...]}` (planar).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameSpec {
    #[default]
    Identity,
    Random(u64),
    Angles(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsSection {
    #[serde(default)]
    pub model: ModelName,
    /// Explicit initial positions; otherwise the shape is placed at `center`
    /// and perturbed uniformly within `radius` using `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    /// Planar rotation applied to the placed shape (radians).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement_angle: Option<f64>,
    /// Initial unicycle headings; seeded uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub headings: Option<Vec<f64>>,
    #[serde(default)]
    pub frames: FrameSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub handle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<Saturation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadingSection {
    pub z1_star: Vec<f64>,
    #[serde(default)]
    pub events: Vec<HeadingEvent>,
}

fn default_target() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnclosingSection {
    #[serde(default = "default_target")]
    pub target: usize,
    /// Constant target velocity.
    pub target_velocity: Vec<f64>,
    pub kappa: f64,
    /// Initial estimates, one per agent; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_hat0: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub escape: EscapeSettings,
}

fn default_dt() -> f64 {
    0.01
}

fn default_duration() -> f64 {
    100.0
}

fn default_sample_every() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            duration: default_duration(),
            sample_every: default_sample_every(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub shape: ShapeSection,
    /// Optional cross-check of the shape's graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motion: Option<MotionSection>,
    #[serde(default)]
    pub agents: AgentsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<HeadingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enclosing: Option<EnclosingSection>,
    #[serde(default)]
    pub sim: SimSection,
}

/// Shape, parameters and a ready-to-run simulation.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub shape: DesiredShape,
    pub params: MotionParams,
    pub setup: SimSetup,
}

fn schema(msg: impl Into<String>) -> FormationError {
    FormationError::Configuration(msg.into())
}

fn flatten(rows: &[Vec<f64>], m: usize, what: &str) -> Result<Vec<f64>> {
    if rows.iter().any(|r| r.len() != m) {
        return Err(schema(format!("every entry of {what} must have {m} components")));
    }
    let out: Vec<f64> = rows.iter().flatten().copied().collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(schema(format!("{what} contains non-finite values")));
    }
    Ok(out)
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(schema(format!("{what} must be positive, got {v}")))
    }
}

impl ScenarioConfig {
    /// Parses JSON, reporting line and column of schema errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            schema(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Overrides the seed used for random initial conditions.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.agents.seed = Some(seed);
        self
    }

    /// Graph plus reference positions, without requiring rigidity.
    pub fn framework(&self) -> Result<Framework> {
        let s = &self.shape;
        let explicit = s.edges.is_some() || s.z_star.is_some() || s.positions.is_some() || s.n.is_some();
        let fw = match (&s.library, explicit) {
            (Some(name), false) => {
                let shape = shape_library(name, s.scale.unwrap_or(1.0), s.base)?;
                Framework::new(shape.graph().clone(), shape.positions().to_vec(), shape.dim())?
            }
            (Some(_), true) => {
                return Err(schema(
                    "shape: give either a library name or an explicit framework, not both",
                ))
            }
            (None, _) => {
                let edges = s.edges.as_ref().ok_or_else(|| schema("shape: missing \"edges\""))?;
                let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
                let n = s
                    .n
                    .unwrap_or_else(|| edges.iter().flat_map(|e| [e[0], e[1]]).max().unwrap_or(0));
                let g = FormationGraph::from_one_based(n, &pairs)?;
                match (&s.z_star, &s.positions) {
                    (Some(z), None) => {
                        let m = z.first().map_or(0, Vec::len);
                        let zf = flatten(z, m, "z_star")?;
                        let p = reconstruct_positions(&g, &zf, m)?;
                        Framework::new(g, p, m)?
                    }
                    (None, Some(p)) => {
                        let m = p.first().map_or(0, Vec::len);
                        Framework::new(g, flatten(p, m, "positions")?, m)?
                    }
                    _ => {
                        return Err(schema(
                            "shape: explicit frameworks need exactly one of \"z_star\" or \"positions\"",
                        ))
                    }
                }
            }
        };
        if let Some(spec) = &self.graph {
            let g = FormationGraph::try_from(spec.clone())?;
            if g != fw.graph {
                return Err(schema("graph section does not match the shape's edges"));
            }
        }
        Ok(fw)
    }

    /// The desired shape (rigidity is enforced here).
    pub fn desired_shape(&self) -> Result<DesiredShape> {
        let fw = self.framework()?;
        DesiredShape::from_positions(fw.graph, fw.positions, fw.dim, self.control.l)
    }

    /// Cross-field checks that do not need any design computation.
    pub fn validate(&self) -> Result<()> {
        let fw = self.framework()?;
        let m = fw.dim;
        let n = fw.graph.vertex_count();
        let e = fw.graph.edge_count();
        if self.control.l == 0 {
            return Err(schema("control.l must be a positive integer"));
        }
        positive(self.control.c, "control.c")?;
        positive(self.sim.dt, "sim.dt")?;
        positive(self.sim.duration, "sim.duration")?;
        if self.sim.sample_every == 0 {
            return Err(schema("sim.sample_every must be at least 1"));
        }
        if let Some(mo) = &self.motion {
            let designed = mo.translation.is_some() || mo.rotation.is_some();
            let explicit = mo.mu.is_some() || mo.mu_tilde.is_some();
            if designed && explicit {
                return Err(schema("motion: use either translation/rotation or mu/mu_tilde"));
            }
            if explicit {
                let (mu, mt) = match (&mo.mu, &mo.mu_tilde) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(schema("motion: mu and mu_tilde must both be given")),
                };
                if mu.len() != e || mt.len() != e {
                    return Err(schema(format!("motion: mu and mu_tilde need {e} entries")));
                }
            }
            if let Some(v) = &mo.translation {
                if v.len() != m {
                    return Err(schema(format!("motion.translation needs {m} components")));
                }
            }
            if let Some(r) = &mo.rotation {
                let want = if m == 2 { 1 } else { 3 };
                if r.omega.as_vec().len() != want {
                    return Err(schema(format!("motion.rotation.omega needs {want} components")));
                }
                if let RotationCenter::Vertex(v) = r.center {
                    if v > n {
                        return Err(schema(format!("rotation center {v} is not a vertex")));
                    }
                }
            }
        }
        let a = &self.agents;
        if let Some(p) = &a.positions {
            if p.len() != n {
                return Err(schema(format!("agents.positions needs {n} entries")));
            }
            flatten(p, m, "agents.positions")?;
            if a.seed.is_some() || a.radius.is_some() || a.center.is_some() {
                return Err(schema("agents: explicit positions exclude seed/radius/center"));
            }
        }
        if let Some(r) = a.radius {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(schema("agents.radius must be non-negative"));
            }
        }
        if let Some(c) = &a.center {
            if c.len() != m {
                return Err(schema(format!("agents.center needs {m} components")));
            }
        }
        if a.placement_angle.is_some() && m != 2 {
            return Err(schema("agents.placement_angle is planar only"));
        }
        match a.model {
            ModelName::Unicycle => {
                if m != 2 {
                    return Err(schema("unicycle agents are planar only"));
                }
                if let Some(h) = a.handle {
                    positive(h, "agents.handle")?;
                }
                if let Some(h) = &a.headings {
                    if h.len() != n {
                        return Err(schema(format!("agents.headings needs {n} entries")));
                    }
                }
                if let Some(s) = a.saturation {
                    positive(s.v_max, "saturation.v_max")?;
                    positive(s.omega_max, "saturation.omega_max")?;
                }
            }
            ModelName::SingleIntegrator => {
                if a.handle.is_some() || a.headings.is_some() || a.saturation.is_some() {
                    return Err(schema("handle/headings/saturation only apply to unicycle agents"));
                }
            }
        }
        if let FrameSpec::Angles(v) = &a.frames {
            if m != 2 || v.len() != n {
                return Err(schema(format!("agents.frames.angles needs {n} planar angles")));
            }
        }
        if self.heading.is_some() && self.enclosing.is_some() {
            return Err(schema("heading and enclosing sections are mutually exclusive"));
        }
        if let Some(h) = &self.heading {
            fw.graph.augmented_incidence(1)?;
            if h.z1_star.len() != m {
                return Err(schema(format!("heading.z1_star needs {m} components")));
            }
            for ev in &h.events {
                if ev.set_z1_star.len() != m {
                    return Err(schema(format!("heading event z1_star needs {m} components")));
                }
                let t = &ev.when_x_of_agent;
                if t.agent == 0 || t.agent > n {
                    return Err(schema(format!("heading event agent {} is not a vertex", t.agent)));
                }
                if t.ge.is_none() && t.le.is_none() {
                    return Err(schema("heading event needs \"ge\" or \"le\""));
                }
            }
        }
        if let Some(enc) = &self.enclosing {
            if enc.target == 0 || enc.target > n {
                return Err(schema(format!("enclosing.target {} is not a vertex", enc.target)));
            }
            if enc.target_velocity.len() != m || enc.target_velocity.iter().any(|v| !v.is_finite()) {
                return Err(schema(format!(
                    "enclosing.target_velocity must be a constant vector with {m} components"
                )));
            }
            positive(enc.kappa, "enclosing.kappa")?;
            if let Some(v) = &enc.v_hat0 {
                if v.len() != n {
                    return Err(schema(format!("enclosing.v_hat0 needs {n} entries")));
                }
                flatten(v, m, "enclosing.v_hat0")?;
            }
            let es = enc.escape;
            if es.enabled {
                positive(es.omega_threshold, "escape.omega_threshold")?;
                positive(es.window, "escape.window")?;
                positive(es.error_ratio, "escape.error_ratio")?;
            }
        }
        Ok(())
    }

    /// Motion parameters in the configured motion-term convention.
    ///
    /// Designed parameters are computed for the raw term and converted when
    /// the scenario uses the normalized term.
    pub fn motion_params(&self, shape: &DesiredShape) -> Result<MotionParams> {
        let e = shape.graph().edge_count();
        let Some(mo) = &self.motion else {
            return Ok(MotionParams::zeros(e));
        };
        if let (Some(mu), Some(mt)) = (&mo.mu, &mo.mu_tilde) {
            return MotionParams::new(mu.clone(), mt.clone());
        }
        let mut p = MotionParams::zeros(e);
        if let Some(v) = &mo.translation {
            p = p.add(&design_translation(shape, v)?);
        }
        if let Some(r) = &mo.rotation {
            p = p.add(&design_rotation(shape, &r.omega.as_vec(), r.center)?);
        }
        Ok(match self.control.motion_term {
            MotionTerm::Raw => p,
            MotionTerm::Normalized => p.to_normalized(shape.distances()),
        })
    }

    pub fn resolve(&self) -> Result<ResolvedScenario> {
        self.validate()?;
        let shape = self.desired_shape()?;
        let params = self.motion_params(&shape)?;
        let m = shape.dim();
        let n = shape.graph().vertex_count();

        let kind = match (&self.heading, &self.enclosing) {
            (Some(_), _) => LawKind::Heading,
            (None, Some(enc)) => {
                check_target_row(shape.graph(), &params, enc.target)?;
                LawKind::Enclosing {
                    target: enc.target - 1,
                    kappa: enc.kappa,
                }
            }
            (None, None) => LawKind::Formation,
        };
        let law = ControlLaw::new(shape.clone(), params.clone(), self.control.motion_term, self.control.c, kind)?;

        let a = &self.agents;
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed.unwrap_or(0));
        let initial_positions = match &a.positions {
            Some(p) => flatten(p, m, "agents.positions")?,
            None => {
                let rot = match a.placement_angle {
                    Some(th) => {
                        let (s, c) = th.sin_cos();
                        Matrix::from_row_slice(2, 2, &[c, -s, s, c])
                    }
                    None => Matrix::identity(m, m),
                };
                let center = a.center.clone().unwrap_or_else(|| vec![0.0; m]);
                let mut p = shape.placed(&rot, &center);
                let r = a.radius.unwrap_or(0.0);
                if r > 0.0 {
                    for agent in p.chunks_mut(m) {
                        let offset = sample_ball(&mut rng, m, r);
                        agent.iter_mut().zip(offset).for_each(|(x, o)| *x += o);
                    }
                }
                p
            }
        };
        let scale = shape.max_distance();
        let model = match a.model {
            ModelName::SingleIntegrator => AgentModel::SingleIntegrator,
            ModelName::Unicycle => AgentModel::Unicycle {
                handle: a.handle.unwrap_or(0.05 * scale),
                saturation: a.saturation,
                headings: match &a.headings {
                    Some(h) => h.clone(),
                    None => (0..n)
                        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                        .collect(),
                },
            },
        };
        let frames = match &a.frames {
            FrameSpec::Identity => vec![LocalFrame::identity(m); n],
            FrameSpec::Random(seed) => {
                let mut fr = ChaCha8Rng::seed_from_u64(*seed);
                (0..n).map(|_| LocalFrame::random(m, scale, &mut fr)).collect()
            }
            FrameSpec::Angles(v) => v.iter().map(|&th| LocalFrame::planar(th, [0.0, 0.0])).collect(),
        };
        let heading = match &self.heading {
            Some(h) => {
                HeadingTarget::new(h.z1_star.clone(), &shape)?;
                for ev in &h.events {
                    HeadingTarget::new(ev.set_z1_star.clone(), &shape)?;
                }
                Some(HeadingSetup {
                    z1_star: h.z1_star.clone(),
                    events: h.events.clone(),
                })
            }
            None => None,
        };
        let enclosing = self.enclosing.as_ref().map(|enc| EnclosingSetup {
            target_velocity: enc.target_velocity.clone(),
            v_hat0: enc
                .v_hat0
                .as_ref()
                .map(|v| v.iter().flatten().copied().collect())
                .unwrap_or_else(|| vec![0.0; n * m]),
            escape: enc.escape,
        });
        Ok(ResolvedScenario {
            shape,
            params,
            setup: SimSetup {
                law,
                model,
                initial_positions,
                frames,
                heading,
                enclosing,
                dt: self.sim.dt,
                duration: self.sim.duration,
                sample_every: self.sim.sample_every,
            },
        })
    }
}

/// Uniform sample from the ball of radius `r` in `R^m`.
fn sample_ball<R: Rng>(rng: &mut R, m: usize, r: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 <= 1.0 {
            return v.into_iter().map(|x| x * r).collect();
        }
    }
}

pub const PRESET_NAMES: [&str; 4] = ["heading-square", "enclosing", "triangle-rotation", "triangle-translation"];

/// Side of the square in the heading experiment (pixels).
pub const HEADING_SIDE: f64 = 225.0;
/// Enclosing shape parameter `a` (pixels) and designed angular speed.
pub const ENCLOSING_A: f64 = 130.0;
pub const ENCLOSING_GAMMA: f64 = 0.038;

fn heading_square() -> ScenarioConfig {
    let s = HEADING_SIDE;
    ScenarioConfig {
        name: Some("heading-square".into()),
        shape: ShapeSection {
            library: Some("square_with_diagonal".into()),
            scale: Some(s),
            ..Default::default()
        },
        graph: Some(GraphSpec {
            n: 4,
            edges: vec![[1, 2], [2, 3], [3, 1], [1, 4], [3, 4]],
        }),
        control: ControlSection {
            l: 1,
            c: 0.035,
            motion_term: MotionTerm::Normalized,
        },
        motion: Some(MotionSection {
            mu: Some(vec![5.0, 0.0, 0.0, 0.0, -5.0]),
            mu_tilde: Some(vec![5.0, 0.0, 0.0, 0.0, -5.0]),
            ..Default::default()
        }),
        agents: AgentsSection {
            model: ModelName::Unicycle,
            seed: Some(1),
            radius: Some(20.0),
            center: Some(vec![0.0, 0.0]),
            handle: Some(0.05 * s),
            saturation: Some(Saturation {
                v_max: 64.0,
                omega_max: 4.8,
            }),
            ..Default::default()
        },
        heading: Some(HeadingSection {
            z1_star: vec![s, 0.0],
            events: vec![HeadingEvent {
                when_x_of_agent: crate::sim::engine::XTrigger {
                    agent: 1,
                    ge: Some(1100.0),
                    le: None,
                },
                set_z1_star: vec![-s, 0.0],
            }],
        }),
        enclosing: None,
        sim: SimSection {
            dt: 0.01,
            duration: 1200.0,
            sample_every: 100,
        },
    }
}

/// Enclosing parameters in the normalized convention.
pub fn enclosing_params(a: f64, gamma: f64) -> MotionParams {
    let ag = a * gamma;
    let r2 = 2f64.sqrt();
    MotionParams {
        mu: vec![0.0, 0.0, 0.0, -2.0 * ag * r2, 2.0 * ag],
        mu_tilde: vec![0.0, ag, 0.0, -ag * r2, 0.0],
    }
}

fn enclosing() -> ScenarioConfig {
    let a = ENCLOSING_A;
    let p = enclosing_params(a, ENCLOSING_GAMMA);
    ScenarioConfig {
        name: Some("enclosing".into()),
        shape: ShapeSection {
            library: Some("enclosing_quad".into()),
            scale: Some(a),
            ..Default::default()
        },
        graph: Some(GraphSpec {
            n: 4,
            edges: vec![[1, 2], [2, 3], [3, 1], [4, 2], [4, 3]],
        }),
        control: ControlSection {
            l: 1,
            c: 0.1,
            motion_term: MotionTerm::Normalized,
        },
        motion: Some(MotionSection {
            mu: Some(p.mu),
            mu_tilde: Some(p.mu_tilde),
            ..Default::default()
        }),
        agents: AgentsSection {
            model: ModelName::Unicycle,
            seed: Some(0),
            radius: Some(0.1 * a),
            center: Some(vec![800.0, 400.0]),
            handle: Some(0.05 * a),
            saturation: Some(Saturation {
                v_max: 64.0,
                omega_max: 4.8,
            }),
            ..Default::default()
        },
        heading: None,
        enclosing: Some(EnclosingSection {
            target: 1,
            target_velocity: vec![-3.0, 0.35],
            kappa: 0.01,
            v_hat0: None,
            escape: EscapeSettings::default(),
        }),
        sim: SimSection {
            dt: 0.01,
            duration: 1000.0,
            sample_every: 100,
        },
    }
}

fn triangle_rotation() -> ScenarioConfig {
    ScenarioConfig {
        name: Some("triangle-rotation".into()),
        shape: ShapeSection {
            library: Some("equilateral_triangle".into()),
            scale: Some(1.0),
            ..Default::default()
        },
        graph: None,
        control: ControlSection {
            l: 2,
            c: 1.0,
            motion_term: MotionTerm::Raw,
        },
        motion: Some(MotionSection {
            rotation: Some(RotationSection {
                omega: Omega::Planar(0.5),
                center: RotationCenter::Centroid,
            }),
            ..Default::default()
        }),
        agents: AgentsSection {
            seed: Some(0),
            radius: Some(0.05),
            ..Default::default()
        },
        heading: None,
        enclosing: None,
        sim: SimSection {
            dt: 0.01,
            duration: 50.0,
            sample_every: 10,
        },
    }
}

fn triangle_translation() -> ScenarioConfig {
    let mut cfg = triangle_rotation();
    cfg.name = Some("triangle-translation".into());
    cfg.motion = Some(MotionSection {
        translation: Some(vec![1.0, 0.0]),
        ..Default::default()
    });
    cfg
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "heading-square" => Ok(heading_square()),
        "enclosing" => Ok(enclosing()),
        "triangle-rotation" => Ok(triangle_rotation()),
        "triangle-translation" => Ok(triangle_translation()),
        other => Err(schema(format!(
            "unknown preset '{other}' (known: {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}
