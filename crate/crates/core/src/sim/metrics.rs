//! Quantities extracted from a trajectory log.

use serde::Serialize;

use super::log::{EventRecord, TrajectoryLog};
use crate::error::{FormationError, Result};
use crate::linalg::norm;
use crate::shape::centroid;

/// Reference for angular-rate measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RateCenter {
    Centroid,
    /// 0-based agent index.
    Agent(usize),
}

fn need(log: &TrajectoryLog, k: usize) -> Result<()> {
    if log.samples.len() < k {
        return Err(FormationError::TooFewSamples {
            needed: k,
            have: log.samples.len(),
        });
    }
    Ok(())
}

fn mean_velocity(log: &TrajectoryLog, s: usize) -> Vec<f64> {
    let m = log.dim;
    let mut v = vec![0.0; m];
    for i in 0..log.agents {
        for (acc, vi) in v.iter_mut().zip(log.velocity(s, i)) {
            *acc += vi / log.agents as f64;
        }
    }
    v
}

/// Mean agent speed per sample.
pub fn speed(log: &TrajectoryLog) -> Vec<f64> {
    (0..log.samples.len())
        .map(|s| (0..log.agents).map(|i| norm(log.velocity(s, i))).sum::<f64>() / log.agents as f64)
        .collect()
}

/// Direction of the mean velocity, `atan2(vy, vx)`.
pub fn heading(log: &TrajectoryLog) -> Vec<f64> {
    (0..log.samples.len())
        .map(|s| {
            let v = mean_velocity(log, s);
            v[1].atan2(v[0])
        })
        .collect()
}

pub fn centroid_track(log: &TrajectoryLog) -> Vec<Vec<f64>> {
    log.samples.iter().map(|s| centroid(&s.positions, log.dim)).collect()
}

fn center_of(log: &TrajectoryLog, s: usize, c: RateCenter) -> (Vec<f64>, Vec<f64>) {
    match c {
        RateCenter::Centroid => (
            centroid(&log.samples[s].positions, log.dim),
            mean_velocity(log, s),
        ),
        RateCenter::Agent(a) => (log.position(s, a).to_vec(), log.velocity(s, a).to_vec()),
    }
}

/// Planar angular rate of agent `i` about `c` from logged velocities:
/// `(r × (v_i - v_c)) / |r|^2` with `r = p_i - p_c`.
pub fn angular_rate_cross(log: &TrajectoryLog, i: usize, c: RateCenter) -> Vec<f64> {
    (0..log.samples.len())
        .map(|s| {
            let (pc, vc) = center_of(log, s, c);
            let p = log.position(s, i);
            let v = log.velocity(s, i);
            let r = [p[0] - pc[0], p[1] - pc[1]];
            let dv = [v[0] - vc[0], v[1] - vc[1]];
            let r2 = r[0] * r[0] + r[1] * r[1];
            if r2 == 0.0 {
                0.0
            } else {
                (r[0] * dv[1] - r[1] * dv[0]) / r2
            }
        })
        .collect()
}

/// `|v_i - v_c| / |p_i - p_c|`, the speed-over-radius form.
pub fn compensated_speed_ratio(log: &TrajectoryLog, i: usize, c: RateCenter) -> Vec<f64> {
    (0..log.samples.len())
        .map(|s| {
            let (pc, vc) = center_of(log, s, c);
            let r: Vec<f64> = log.position(s, i).iter().zip(&pc).map(|(a, b)| a - b).collect();
            let dv: Vec<f64> = log.velocity(s, i).iter().zip(&vc).map(|(a, b)| a - b).collect();
            let nr = norm(&r);
            if nr == 0.0 {
                0.0
            } else {
                norm(&dv) / nr
            }
        })
        .collect()
}

/// Unwrapped polar angle of `p_i - p_c` per sample.
pub fn unwrapped_angle(log: &TrajectoryLog, i: usize, c: RateCenter) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let mut out: Vec<f64> = Vec::with_capacity(log.samples.len());
    let mut prev_raw = 0.0;
    for s in 0..log.samples.len() {
        let (pc, _) = center_of(log, s, c);
        let p = log.position(s, i);
        let raw = (p[1] - pc[1]).atan2(p[0] - pc[0]);
        match out.last() {
            None => out.push(raw),
            Some(&acc) => {
                let d = (raw - prev_raw + PI).rem_euclid(TAU) - PI;
                out.push(acc + d);
            }
        }
        prev_raw = raw;
    }
    out
}

/// Time derivative of the unwrapped angle by central differences
/// (one-sided at the ends).
pub fn angular_rate_atan2(log: &TrajectoryLog, i: usize, c: RateCenter) -> Result<Vec<f64>> {
    need(log, 2)?;
    let th = unwrapped_angle(log, i, c);
    let t = log.times();
    let k = t.len();
    Ok((0..k)
        .map(|j| {
            let (a, b) = if j == 0 {
                (0, 1)
            } else if j == k - 1 {
                (k - 2, k - 1)
            } else {
                (j - 1, j + 1)
            };
            (th[b] - th[a]) / (t[b] - t[a])
        })
        .collect())
}

/// Least-squares slope of `ln y` against `t` over samples with `t` in
/// `[t0, t1]` and `y > 0`.
pub fn exp_decay_slope(t: &[f64], y: &[f64], t0: f64, t1: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(ti, yi)| **ti >= t0 && **ti <= t1 && **yi > 0.0)
        .map(|(ti, yi)| (*ti, yi.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(FormationError::TooFewSamples {
            needed: 2,
            have: pts.len(),
        });
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub t: Vec<f64>,
    pub speed: Vec<f64>,
    pub heading: Vec<f64>,
    pub e_norm: Vec<f64>,
    pub eo_norm: Vec<f64>,
    pub ev_norm: Vec<f64>,
    pub centroid: Vec<Vec<f64>>,
    /// Per agent, derivative of the unwrapped bearing about the chosen
    /// center (planar runs only).
    pub angular_rate: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub duration: f64,
    pub final_speed: f64,
    pub final_heading: f64,
    pub final_e_norm: f64,
    pub final_eo_norm: f64,
    pub final_ev_norm: f64,
    pub centroid_drift: f64,
    pub rate_center: RateCenter,
    pub final_angular_rate: Vec<f64>,
    /// Slope of `ln |e|` over the second half of the run, if defined.
    pub exp_decay_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub summary: Summary,
    pub events: Vec<EventRecord>,
    pub series: Series,
}

pub fn metrics(log: &TrajectoryLog, center: RateCenter) -> Result<MetricsReport> {
    need(log, 2)?;
    let t = log.times();
    let e_norm: Vec<f64> = log.samples.iter().map(|s| s.e_norm).collect();
    let speed = speed(log);
    let heading = heading(log);
    let centroid = centroid_track(log);
    let angular_rate: Vec<Vec<f64>> = if log.dim == 2 {
        (0..log.agents)
            .map(|i| match center {
                RateCenter::Agent(a) if a == i => Ok(vec![0.0; t.len()]),
                _ => angular_rate_atan2(log, i, center),
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let last = log.samples.len() - 1;
    let t_end = t[last];
    let slope = exp_decay_slope(&t, &e_norm, t_end / 2.0, t_end).ok();
    let drift = norm(
        &centroid[last]
            .iter()
            .zip(&centroid[0])
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    let s = &log.samples[last];
    Ok(MetricsReport {
        summary: Summary {
            duration: t_end,
            final_speed: speed[last],
            final_heading: heading[last],
            final_e_norm: s.e_norm,
            final_eo_norm: s.eo_norm,
            final_ev_norm: s.ev_norm,
            centroid_drift: drift,
            rate_center: center,
            final_angular_rate: angular_rate.iter().map(|r| r[last]).collect(),
            exp_decay_slope: slope,
        },
        events: log.events.clone(),
        series: Series {
            t,
            speed,
            heading,
            e_norm,
            eo_norm: log.samples.iter().map(|s| s.eo_norm).collect(),
            ev_norm: log.samples.iter().map(|s| s.ev_norm).collect(),
            centroid,
            angular_rate,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::log::Sample;

    fn orbit_log(w: f64, drift: [f64; 2]) -> TrajectoryLog {
        let mut log = TrajectoryLog::new(2, 2);
        for k in 0..200 {
            let t = k as f64 * 0.1;
            let c = [drift[0] * t, drift[1] * t];
            let (s, co) = (w * t).sin_cos();
            log.push(Sample {
                t,
                positions: vec![c[0], c[1], c[0] + 2.0 * co, c[1] + 2.0 * s],
                velocities: vec![drift[0], drift[1], drift[0] - 2.0 * w * s, drift[1] + 2.0 * w * co],
                errors: vec![],
                e_norm: (-0.5 * t).exp(),
                eo_norm: 0.0,
                ev_norm: 0.0,
                v_hat: None,
                thetas: None,
            })
            .unwrap();
        }
        log
    }

    #[test]
    fn rates_about_moving_center_agree() {
        let log = orbit_log(0.7, [-3.0, 0.35]);
        let cross = angular_rate_cross(&log, 1, RateCenter::Agent(0));
        let fd = angular_rate_atan2(&log, 1, RateCenter::Agent(0)).unwrap();
        let ratio = compensated_speed_ratio(&log, 1, RateCenter::Agent(0));
        for j in 1..cross.len() - 1 {
            assert!((cross[j] - 0.7).abs() < 1e-12);
            assert!((fd[j] - 0.7).abs() < 2e-3);
            assert!((ratio[j] - 0.7).abs() < 1e-12);
        }
        let th = unwrapped_angle(&log, 1, RateCenter::Agent(0));
        assert!((th[199] - th[0] - 0.7 * 19.9).abs() < 1e-9);
    }

    #[test]
    fn static_log_has_zero_rates_and_slope_is_recovered() {
        let log = orbit_log(0.0, [0.0, 0.0]);
        let rep = metrics(&log, RateCenter::Agent(0)).unwrap();
        assert!(rep.summary.final_angular_rate.iter().all(|r| *r == 0.0));
        assert_eq!(rep.summary.final_speed, 0.0);
        assert!((rep.summary.exp_decay_slope.unwrap() + 0.5).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples() {
        let log = TrajectoryLog::new(2, 2);
        assert!(matches!(
            metrics(&log, RateCenter::Centroid),
            Err(FormationError::TooFewSamples { .. })
        ));
    }
}
