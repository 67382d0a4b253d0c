use std::f64::consts::TAU;

use nalgebra::Vector3;

use super::{differentiate, DiffScheme, DiscreteCurve, PeriodicIntegral, TrigInterpolant};
use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX: usize = 50;

/// Redistributes the nodes uniformly in arclength along the trigonometric
/// interpolant of the curve, keeping node 0 and the orientation.
pub fn resample_uniform_arclength(curve: &DiscreteCurve) -> Result<DiscreteCurve> {
    let nodes = curve.nodes();
    let n = nodes.len();
    let d1 = differentiate(nodes, 1, DiffScheme::Fourier)?;
    let speed: Vec<f64> = nodes.iter().zip(&d1).map(|(g, v)| (v - g * g.dot(v)).norm()).collect();
    let mean = speed.iter().sum::<f64>() / n as f64;
    if let Some(node) = speed.iter().position(|&s| !(s > 1e-10 * mean)) {
        return Err(Error::DegenerateCurve {
            node,
            reason: "speed underflow",
        });
    }
    let interp = TrigInterpolant::new(nodes);
    let arclength = PeriodicIntegral::new(&speed);
    let length = arclength.total();
    let speed_at = |x: f64| {
        let g = interp.eval(x, 0);
        let v = interp.eval(x, 1);
        let g = g / g.norm();
        (v - g * g.dot(&v)).norm()
    };

    let mut out = Vec::with_capacity(n);
    out.push(nodes[0]);
    let mut lo = 0.0;
    for j in 1..n {
        let target = length * j as f64 / n as f64;
        let mut hi = TAU;
        let mut x = lo + (target - arclength.eval(lo)) / speed_at(lo).max(1e-3 * mean);
        for _ in 0..NEWTON_MAX {
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            let r = arclength.eval(x) - target;
            if r.abs() < NEWTON_TOL * length {
                break;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            x -= r / speed_at(x);
        }
        lo = x;
        let p: Vector3<f64> = interp.eval(x, 0);
        out.push(p / p.norm());
    }
    DiscreteCurve::new(out, curve.orientation())
}
