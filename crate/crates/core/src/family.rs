//! Initial-curve families.

use std::f64::consts::TAU;
use std::path::PathBuf;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::{geometry, snapshot, DiffScheme, DiscreteCurve};
use crate::energy::{elastic_energy, ENERGY_THRESHOLD};
use crate::error::{Error, Result};
use crate::quat::Quaternion;

pub const MAX_PERTURBATION: f64 = 0.1;
pub const MAX_MODE: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CurveFamily {
    /// Circle at polar angle `theta`.
    Latitude {
        theta: f64,
    },
    /// `normalize(cos x, sin x, ε Σ_k (a_k cos kx + b_k sin kx))` with `(a_k, b_k)` drawn
    /// uniformly from the circle of radius `1/√(#modes)`.
    PerturbedGreatCircle {
        amplitude: f64,
        modes: Vec<usize>,
        seed: u64,
    },
    /// `normalize(0.6 sin(p x + phase), 0.3 sin(q x), 1)`; `(1, 2)` is a figure eight.
    Lissajous {
        p: usize,
        q: usize,
        phase: f64,
    },
    FromFile {
        path: PathBuf,
    },
}

impl CurveFamily {
    /// Mode-2 perturbation of the equator used by the convergence checks.
    pub fn mode_two(amplitude: f64, seed: u64) -> Self {
        CurveFamily::PerturbedGreatCircle {
            amplitude,
            modes: vec![2],
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            CurveFamily::Latitude { theta } if !(*theta > 0.0 && *theta < std::f64::consts::PI) => {
                Err(Error::config("theta", "must lie in (0, π)"))
            }
            CurveFamily::PerturbedGreatCircle { amplitude, modes, .. } => {
                if !(amplitude.abs() <= MAX_PERTURBATION) {
                    return Err(Error::config(
                        "amplitude",
                        format!("|ε| must not exceed {MAX_PERTURBATION}"),
                    ));
                }
                if modes.is_empty() || modes.iter().any(|&k| k == 0 || k > MAX_MODE) {
                    return Err(Error::config("modes", format!("modes must lie in 1..={MAX_MODE}")));
                }
                Ok(())
            }
            CurveFamily::Lissajous { p, q, .. } if *p == 0 || *q == 0 => {
                Err(Error::config("frequencies", "frequencies must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// Builds the curve; with `enforce_regime` the latitude and perturbed families
    /// must start below the energy threshold.
    pub fn build(&self, n: usize, enforce_regime: bool) -> Result<DiscreteCurve> {
        self.validate()?;
        let curve = match self {
            CurveFamily::Latitude { theta } => DiscreteCurve::latitude(n, *theta)?,
            CurveFamily::PerturbedGreatCircle { amplitude, modes, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let scale = amplitude / (modes.len() as f64).sqrt();
                let coeffs: Vec<(f64, f64, f64)> = modes
                    .iter()
                    .map(|&k| {
                        let a = rng.gen_range(0.0..TAU);
                        (k as f64, scale * a.cos(), scale * a.sin())
                    })
                    .collect();
                DiscreteCurve::from_fn(n, |x| {
                    let z = coeffs
                        .iter()
                        .map(|(k, a, b)| a * (k * x).cos() + b * (k * x).sin())
                        .sum();
                    Vector3::new(x.cos(), x.sin(), z)
                })?
            }
            CurveFamily::Lissajous { p, q, phase } => DiscreteCurve::from_fn(n, |x| {
                Vector3::new(0.6 * (*p as f64 * x + phase).sin(), 0.3 * (*q as f64 * x).sin(), 1.0)
            })?,
            CurveFamily::FromFile { path } => snapshot::read(path)?.0,
        };
        let regime = matches!(
            self,
            CurveFamily::Latitude { .. } | CurveFamily::PerturbedGreatCircle { .. }
        );
        if enforce_regime && regime {
            let energy = elastic_energy(&geometry(&curve, DiffScheme::Fourier)?);
            if energy >= ENERGY_THRESHOLD {
                return Err(Error::RegimeViolation { energy });
            }
        }
        Ok(curve)
    }
}

/// Smooth closed curve `θ(x) = 1 + Σ_{k=2..5} (a_k cos kx + b_k sin kx)` in polar angle,
/// with `|a_k|, |b_k| < amplitude`, then tilted by a random rotation.
pub fn random_smooth_curve(n: usize, seed: u64, amplitude: f64) -> Result<DiscreteCurve> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<(f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-amplitude..amplitude),
                rng.gen_range(-amplitude..amplitude),
            )
        })
        .collect();
    let tilt = Quaternion::new(1.0, 0.0, rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let curve = DiscreteCurve::from_fn(n, |x| {
        let theta = 1.0
            + a.iter()
                .enumerate()
                .map(|(k, (c, s))| c * ((k + 2) as f64 * x).cos() + s * ((k + 2) as f64 * x).sin())
                .sum::<f64>();
        Vector3::new(theta.sin() * x.cos(), theta.sin() * x.sin(), theta.cos())
    })?;
    Ok(curve.rotated(tilt.normalize()))
}
