//! Rigidity analysis and motion-design reports for a scenario.

use serde::Serialize;

use crate::error::Result;
use crate::graph::to_vector;
use crate::linalg::norm;
use crate::maneuver::{validate_assumption_t, AssumptionReport};
use crate::motion::{
    design_rotation, design_translation, distance_rate_matrix, rotation_field, rotation_space,
    steady_state_velocity, t_matrix, translation_space, MotionParams, MotionTerm,
};
use crate::rigidity::classify_rigidity;
use crate::scenario::ScenarioConfig;
use crate::shape::DesiredShape;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub name: Option<String>,
    pub vertices: usize,
    pub edges: usize,
    pub dim: usize,
    pub rank: usize,
    pub required_rank: usize,
    pub infinitesimally_rigid: bool,
    pub minimally_rigid: bool,
    pub verdict: String,
    pub min_degree: usize,
    /// `dim U` and `dim W`; absent when the framework cannot serve as a
    /// desired shape.
    pub translation_dim: Option<usize>,
    pub rotation_dim: Option<usize>,
    /// Orientation-control assumption for the scenario's parameters.
    pub assumption: Option<AssumptionReport>,
}

impl AnalysisReport {
    pub fn to_text(&self) -> String {
        let yn = |b: bool| if b { "yes" } else { "no" };
        let mut s = String::new();
        if let Some(n) = &self.name {
            s += &format!("scenario: {n}\n");
        }
        s += &format!(
            "framework: n = {}, edges = {}, dim = {}\n",
            self.vertices, self.edges, self.dim
        );
        s += &format!("rank R = {} (threshold {})\n", self.rank, self.required_rank);
        s += &format!("infinitesimally rigid: {}\n", yn(self.infinitesimally_rigid));
        s += &format!("minimally rigid: {}\n", yn(self.minimally_rigid));
        s += &format!("verdict: {}\n", self.verdict);
        s += &format!("min degree: {}\n", self.min_degree);
        match (self.translation_dim, self.rotation_dim) {
            (Some(u), Some(w)) => s += &format!("dim U = {u}, dim W = {w}\n"),
            _ => s += "dim U, dim W: n/a (not a valid desired shape)\n",
        }
        if let Some(a) = &self.assumption {
            s += &format!(
                "orientation assumption: {} (complete subgraph {}, non-degenerate {}, params from subgraph {}, decoupled {})\n",
                if a.satisfied { "satisfied" } else { "not satisfied" },
                yn(a.complete_subgraph),
                yn(a.non_degenerate),
                yn(a.params_from_subgraph),
                yn(a.orientation_decoupled),
            );
        }
        s
    }
}

pub fn analyze(cfg: &ScenarioConfig) -> Result<AnalysisReport> {
    let fw = cfg.framework()?;
    let rep = classify_rigidity(&fw)?;
    let g = &fw.graph;
    let verdict = if rep.infinitesimally_rigid && rep.minimally_rigid {
        "infinitesimally and minimally rigid"
    } else if rep.infinitesimally_rigid {
        "infinitesimally rigid with redundant edges"
    } else if rep.edge_count >= rep.required_rank {
        "edge count meets the rigidity threshold but the framework is not infinitesimally rigid"
    } else {
        "not rigid"
    };
    let min_degree = (0..g.vertex_count()).map(|i| g.degree(i)).min().unwrap_or(0);
    let (translation_dim, rotation_dim, assumption) = match cfg.desired_shape() {
        Ok(shape) => {
            let params = cfg.motion_params(&shape)?;
            let raw = raw_params(&shape, &params, cfg.control.motion_term);
            let assumption = if cfg.heading.is_some() || !params.is_zero() {
                Some(validate_assumption_t(&shape, &raw)?)
            } else {
                None
            };
            (
                Some(translation_space(&shape)?.dim()),
                Some(rotation_space(&shape)?.dim()),
                assumption,
            )
        }
        Err(_) => (None, None, None),
    };
    Ok(AnalysisReport {
        name: cfg.name.clone(),
        vertices: g.vertex_count(),
        edges: rep.edge_count,
        dim: fw.dim,
        rank: rep.rank,
        required_rank: rep.required_rank,
        infinitesimally_rigid: rep.infinitesimally_rigid,
        minimally_rigid: rep.minimally_rigid,
        verdict: verdict.into(),
        min_degree,
        translation_dim,
        rotation_dim,
        assumption,
    })
}

fn raw_params(shape: &DesiredShape, p: &MotionParams, term: MotionTerm) -> MotionParams {
    match term {
        MotionTerm::Raw => p.clone(),
        MotionTerm::Normalized => p.from_normalized(shape.distances()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub name: Option<String>,
    pub motion_term: MotionTerm,
    /// Parameters in the scenario's motion-term convention.
    pub params: MotionParams,
    /// `|T theta - 1 (x) v_c|` for the translation part.
    pub translation_residual: Option<f64>,
    /// `|T theta - omega x (p* - p_r)|` for the rotation part.
    pub rotation_residual: Option<f64>,
    /// Rate of change of the desired distances under the steady motion.
    pub distance_rate_residual: f64,
    /// Predicted steady-state velocity of each agent.
    pub steady_velocities: Vec<Vec<f64>>,
}

impl DesignReport {
    pub fn to_text(&self) -> String {
        let fmt = |v: &[f64]| {
            v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ")
        };
        let mut s = String::new();
        if let Some(n) = &self.name {
            s += &format!("scenario: {n}\n");
        }
        s += &format!("motion term: {:?}\n", self.motion_term);
        s += &format!("mu       = [{}]\n", fmt(&self.params.mu));
        s += &format!("mu_tilde = [{}]\n", fmt(&self.params.mu_tilde));
        if let Some(r) = self.translation_residual {
            s += &format!("translation residual: {r:.3e}\n");
        }
        if let Some(r) = self.rotation_residual {
            s += &format!("rotation residual: {r:.3e}\n");
        }
        s += &format!("distance-rate residual: {:.3e}\n", self.distance_rate_residual);
        for (i, v) in self.steady_velocities.iter().enumerate() {
            s += &format!("agent {}: steady velocity [{}]\n", i + 1, fmt(v));
        }
        s
    }
}

fn residual(t: &crate::linalg::Matrix, p: &MotionParams, target: &[f64]) -> f64 {
    let v = t * to_vector(&p.stacked());
    let d: Vec<f64> = v.iter().zip(target).map(|(a, b)| a - b).collect();
    norm(&d)
}

pub fn design(cfg: &ScenarioConfig) -> Result<DesignReport> {
    cfg.validate()?;
    let shape = cfg.desired_shape()?;
    let g = shape.graph();
    let m = shape.dim();
    let n = g.vertex_count();
    let t = t_matrix(g, shape.z_star(), m)?;
    let mut translation_residual = None;
    let mut rotation_residual = None;
    if let Some(mo) = &cfg.motion {
        if let Some(v) = &mo.translation {
            let p = design_translation(&shape, v)?;
            let target: Vec<f64> = (0..n).flat_map(|_| v.iter().copied()).collect();
            translation_residual = Some(residual(&t, &p, &target));
        }
        if let Some(r) = &mo.rotation {
            let w = r.omega.as_vec();
            let p = design_rotation(&shape, &w, r.center)?;
            rotation_residual = Some(residual(&t, &p, &rotation_field(&shape, &w, r.center)?));
        }
    }
    let params = cfg.motion_params(&shape)?;
    let raw = raw_params(&shape, &params, cfg.control.motion_term);
    let dr = distance_rate_matrix(&shape)? * to_vector(&raw.stacked());
    let vel = steady_state_velocity(g, &params, shape.z_star(), m, cfg.control.motion_term)?;
    Ok(DesignReport {
        name: cfg.name.clone(),
        motion_term: cfg.control.motion_term,
        params,
        translation_residual,
        rotation_residual,
        distance_rate_residual: dr.norm(),
        steady_velocities: vel.chunks(m).map(<[f64]>::to_vec).collect(),
    })
}
