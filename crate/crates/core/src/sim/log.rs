//! Sampled trajectories and their CSV form.

use std::io::Write;

use serde::Serialize;

use crate::error::{FormationError, Result};

/// One sampled instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// Stacked agent (reference-point) positions.
    pub positions: Vec<f64>,
    /// Stacked agent velocities.
    pub velocities: Vec<f64>,
    /// Per-edge distance errors.
    pub errors: Vec<f64>,
    pub e_norm: f64,
    pub eo_norm: f64,
    pub ev_norm: f64,
    /// Stacked velocity estimates in the global frame (enclosing runs).
    pub v_hat: Option<Vec<f64>>,
    /// Unicycle headings.
    pub thetas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub t: f64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub dim: usize,
    pub agents: usize,
    pub samples: Vec<Sample>,
    pub events: Vec<EventRecord>,
}

impl TrajectoryLog {
    pub fn new(dim: usize, agents: usize) -> Self {
        Self {
            dim,
            agents,
            samples: Vec::new(),
            events: Vec::new(),
        }
    }

    /// Appends a sample; times must strictly increase.
    pub fn push(&mut self, s: Sample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(s.t > last.t) {
                return Err(FormationError::Configuration(format!(
                    "log times must increase ({} after {})",
                    s.t, last.t
                )));
            }
        }
        self.samples.push(s);
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Position of agent `i` (0-based) in sample `s`.
    pub fn position(&self, s: usize, i: usize) -> &[f64] {
        &self.samples[s].positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, s: usize, i: usize) -> &[f64] {
        &self.samples[s].velocities[i * self.dim..(i + 1) * self.dim]
    }

    pub fn csv_header(&self) -> Vec<String> {
        let axes = ["x", "y", "z"];
        let mut h = vec!["t".to_string(), "agent".to_string()];
        h.extend(axes[..self.dim].iter().map(|a| a.to_string()));
        h.extend(axes[..self.dim].iter().map(|a| format!("v{a}")));
        h.extend(["e_norm", "eo_norm", "ev_norm"].map(String::from));
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| FormationError::Configuration(format!("csv: {e}"));
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.csv_header()).map_err(io)?;
        for (si, s) in self.samples.iter().enumerate() {
            for i in 0..self.agents {
                let mut row = vec![s.t.to_string(), (i + 1).to_string()];
                row.extend(self.position(si, i).iter().map(f64::to_string));
                row.extend(self.velocity(si, i).iter().map(f64::to_string));
                row.extend([s.e_norm, s.eo_norm, s.ev_norm].iter().map(f64::to_string));
                out.write_record(&row).map_err(io)?;
            }
        }
        out.flush()
            .map_err(|e| FormationError::Configuration(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Rebuilds positions, velocities and norms from CSV text. Per-edge
    /// errors, estimates and headings are not part of the CSV.
    pub fn from_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let bad = |msg: String| FormationError::Configuration(format!("trajectory csv: {msg}"));
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
        let dim = match header.len() {
            9 => 2,
            11 => 3,
            n => return Err(bad(format!("unexpected column count {n}"))),
        };
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            rows.push(vals.map_err(|e| bad(e.to_string()))?);
        }
        let agents = rows.iter().map(|r| r[1] as usize).max().unwrap_or(0);
        if agents == 0 {
            return Err(FormationError::TooFewSamples { needed: 1, have: 0 });
        }
        let mut log = TrajectoryLog::new(dim, agents);
        for chunk in rows.chunks(agents) {
            if chunk.len() != agents {
                return Err(bad("incomplete final sample".into()));
            }
            let mut s = Sample {
                t: chunk[0][0],
                positions: Vec::new(),
                velocities: Vec::new(),
                errors: Vec::new(),
                e_norm: chunk[0][2 + 2 * dim],
                eo_norm: chunk[0][3 + 2 * dim],
                ev_norm: chunk[0][4 + 2 * dim],
                v_hat: None,
                thetas: None,
            };
            for (i, r) in chunk.iter().enumerate() {
                if r[1] as usize != i + 1 {
                    return Err(bad(format!("agent rows out of order at t = {}", r[0])));
                }
                s.positions.extend(&r[2..2 + dim]);
                s.velocities.extend(&r[2 + dim..2 + 2 * dim]);
            }
            log.push(s)?;
        }
        Ok(log)
    }
}
