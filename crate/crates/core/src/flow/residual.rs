use nalgebra::Vector3;
use serde::Serialize;

use super::FlowState;
use crate::error::{Error, Result};

/// Denominator floor for relative residuals, below which both sides count as zero.
const RELATIVE_FLOOR: f64 = 1e-12;

/// Weights of the second-order three-point derivative at the middle of `t0 < t1 < t2`.
fn three_point(t0: f64, t1: f64, t2: f64) -> [f64; 3] {
    let (h1, h2) = (t1 - t0, t2 - t1);
    [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))]
}

fn check_len(states: &[FlowState]) -> Result<()> {
    if states.len() < 3 {
        return Err(Error::TrajectoryTooShort {
            got: states.len(),
            need: 3,
        });
    }
    Ok(())
}

/// `d𝔈/dt` against `−∫ (κ²+1)⁻² |∇𝔈|² dμ` at an interior sample.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DissipationResidual {
    pub t: f64,
    pub energy_rate: f64,
    pub dissipation: f64,
    pub absolute: f64,
    pub relative: f64,
}

pub fn dissipation_residual(states: &[FlowState]) -> Result<Vec<DissipationResidual>> {
    check_len(states)?;
    Ok(states
        .windows(3)
        .map(|w| {
            let c = three_point(w[0].t, w[1].t, w[2].t);
            let rate: f64 = (0..3).map(|k| c[k] * w[k].report.energy).sum();
            let d = w[1].report.dissipation;
            let absolute = (rate + d).abs();
            DissipationResidual {
                t: w[1].t,
                energy_rate: rate,
                dissipation: d,
                absolute,
                relative: absolute / d.abs().max(RELATIVE_FLOOR),
            }
        })
        .collect())
}

/// Node-wise residuals of the curvature and arclength-element evolution equations.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureResidual {
    pub t: f64,
    /// `∂_t κ + (w_ss + (κ²+1) w)` with `w = (κ²+1)⁻²(2κ_ss + κ³ + κ)`.
    pub curvature: Vec<f64>,
    /// `∂_t dμ − w κ dμ`, divided by `dμ`.
    pub arclength: Vec<f64>,
    pub curvature_max: f64,
    pub arclength_max: f64,
    /// `curvature_max / max(max |∂_t κ|, 1)`.
    pub curvature_relative: f64,
}

pub fn curvature_evolution_residual(states: &[FlowState]) -> Result<Vec<CurvatureResidual>> {
    check_len(states)?;
    let mut out = Vec::with_capacity(states.len() - 2);
    for (i, w) in states.windows(3).enumerate() {
        if w[0].stats.resample_events != w[2].stats.resample_events || w[0].curve.len() != w[2].curve.len() {
            return Err(Error::ResampledBetweenSamples {
                first: i,
                second: i + 2,
            });
        }
        let c = three_point(w[0].t, w[1].t, w[2].t);
        let g = &w[1].geometry;
        let n = g.len();
        let kss = g.curvature_derivative(2);
        let speed_w: Vec<f64> = (0..n)
            .map(|m| {
                let k = g.curvature[m];
                (2.0 * kss[m] + k * k * k + k) / (k * k + 1.0).powi(2)
            })
            .collect();
        let ws = g.arclength_derivative(&speed_w)?;
        let wss = g.arclength_derivative(&ws)?;
        let mut curvature = Vec::with_capacity(n);
        let mut arclength = Vec::with_capacity(n);
        let mut rate_max: f64 = 0.0;
        for m in 0..n {
            let kv: Vector3<f64> = (0..3).map(|k| w[k].geometry.curvature_vector[m] * c[k]).sum();
            let kt = kv.dot(&g.normal[m]);
            let k = g.curvature[m];
            let rhs = -(wss[m] + (k * k + 1.0) * speed_w[m]);
            rate_max = rate_max.max(kt.abs());
            curvature.push(kt - rhs);
            let mu_t: f64 = (0..3).map(|k| w[k].geometry.weight[m] * c[k]).sum();
            arclength.push((mu_t - speed_w[m] * k * g.weight[m]) / g.weight[m]);
        }
        let curvature_max = curvature.iter().fold(0.0, |a: f64, r| a.max(r.abs()));
        let arclength_max = arclength.iter().fold(0.0, |a: f64, r| a.max(r.abs()));
        out.push(CurvatureResidual {
            t: w[1].t,
            curvature,
            arclength,
            curvature_max,
            arclength_max,
            curvature_relative: curvature_max / rate_max.max(1.0),
        });
    }
    Ok(out)
}
