//! Time integration of `∂_t γ = −(κ²+1)⁻² ∇𝔈(γ)`.

mod residual;
mod solver;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub use residual::{curvature_evolution_residual, dissipation_residual, CurvatureResidual, DissipationResidual};

use crate::curve::{geometry, resample_uniform_arclength, CurveGeometry, DiffScheme, DiscreteCurve, D4};
use crate::energy::{elastic_energy, gradient, EnergyReport, ENERGY_THRESHOLD};
use crate::error::{Error, Result};
use solver::CyclicBandCholesky;

/// Smallest node count accepted by the integrator.
pub const MIN_FLOW_NODES: usize = 64;
/// Stability radius of classical RK4 on the negative real axis.
const RK4_RADIUS: f64 = 2.785;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeScheme {
    /// Linearly implicit Euler with frozen leading coefficient, Richardson-extrapolated.
    #[default]
    Imex,
    /// Classical RK4, subcycled under the CFL bound.
    ExplicitRk4,
}

impl std::str::FromStr for TimeScheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "imex" => Ok(Self::Imex),
            "explicit-rk4" | "rk4" => Ok(Self::ExplicitRk4),
            other => Err(format!("unknown time scheme `{other}`")),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowConfig {
    pub scheme: TimeScheme,
    pub diff: DiffScheme,
    /// Initial (or fixed) time step.
    pub dt: f64,
    pub dt_max: f64,
    /// Error-controlled step size (IMEX only). When off, `dt` is kept fixed.
    pub adaptive: bool,
    /// Local error tolerance on node positions.
    pub error_tol: f64,
    /// Fraction of the RK4 stability limit used by the explicit scheme.
    pub cfl: f64,
    /// Accepted energy increase per step, relative to `max(𝔈, 1)`.
    pub energy_increase_tol: f64,
    pub max_halvings: u32,
    /// Uniform-arclength resampling every this many accepted steps; 0 disables it.
    pub resample_every: usize,
    pub max_steps: usize,
    pub t_end: Option<f64>,
    /// Sampling interval of the trajectory; `None` samples every accepted step.
    pub sample_interval: Option<f64>,
    pub kappa_tol: f64,
    /// Tolerance on `𝔈` minus the energy of the discrete great circle.
    pub energy_gap_tol: f64,
    pub gradient_tol: f64,
    pub kappa_ceiling: f64,
    pub dt_floor: f64,
    /// Refuse initial curves with `𝔈 ≥ 8`.
    pub expect_small_energy: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            scheme: TimeScheme::Imex,
            diff: DiffScheme::FiniteDifference,
            dt: 1e-4,
            dt_max: 0.05,
            adaptive: true,
            error_tol: 1e-6,
            cfl: 0.5,
            energy_increase_tol: 1e-12,
            max_halvings: 30,
            resample_every: 25,
            max_steps: 200_000,
            t_end: None,
            sample_interval: Some(0.05),
            kappa_tol: 1e-4,
            energy_gap_tol: 1e-6,
            gradient_tol: 1e-10,
            kappa_ceiling: 1e6,
            dt_floor: 1e-14,
            expect_small_energy: true,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("dt_max", self.dt_max),
            ("error_tol", self.error_tol),
            ("cfl", self.cfl),
            ("energy_increase_tol", self.energy_increase_tol),
            ("kappa_tol", self.kappa_tol),
            ("energy_gap_tol", self.energy_gap_tol),
            ("gradient_tol", self.gradient_tol),
            ("kappa_ceiling", self.kappa_ceiling),
            ("dt_floor", self.dt_floor),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if let Some(s) = self.sample_interval {
            if !(s > 0.0) {
                return Err(Error::config("sample_interval", "must be positive"));
            }
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0) {
                return Err(Error::config("t_end", "must be positive"));
            }
        }
        if self.cfl > 1.0 {
            return Err(Error::config("cfl", "must not exceed 1"));
        }
        Ok(())
    }

    /// Weight of the implicit stencil term. It must dominate the explicit fourth-order
    /// symbol mode by mode: `k⁴h⁴` reaches `π⁴ ≈ 3.65 × 26.67` at the Nyquist mode.
    fn implicit_weight(&self) -> f64 {
        match self.diff {
            DiffScheme::FiniteDifference => 1.0,
            DiffScheme::Fourier => 4.0,
        }
    }
}

/// Statistics carried by every state.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct StepStats {
    /// Step size of the last accepted step.
    pub dt: f64,
    /// Proposed size of the next step.
    pub dt_next: f64,
    pub velocity_sup: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub resample_events: usize,
    /// `max |1 − |γ_m||` before the last projection to S².
    pub constraint_error: f64,
    /// Error estimate of the last accepted step.
    pub error_estimate: f64,
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub curve: DiscreteCurve,
    pub geometry: CurveGeometry,
    pub report: EnergyReport,
    pub stats: StepStats,
}

impl FlowState {
    pub fn new(curve: DiscreteCurve, config: &FlowConfig) -> Result<Self> {
        let geom = geometry(&curve, config.diff)?;
        let report = EnergyReport::new(&geom);
        let velocity_sup = sup_norm(&velocity(&geom));
        Ok(Self {
            t: 0.0,
            curve,
            geometry: geom,
            report,
            stats: StepStats {
                dt_next: config.dt,
                velocity_sup,
                ..Default::default()
            },
        })
    }
}

/// `V = −(κ²+1)⁻² ∇𝔈`.
pub fn velocity(geom: &CurveGeometry) -> Vec<Vector3<f64>> {
    gradient(geom)
        .iter()
        .zip(&geom.curvature)
        .map(|(g, k)| -g / (k * k + 1.0).powi(2))
        .collect()
}

fn sup_norm(v: &[Vector3<f64>]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.norm()))
}

/// Energy of the discrete great circle with `n` nodes, the discrete minimum of `𝔈`.
pub fn great_circle_energy(n: usize, scheme: DiffScheme) -> Result<f64> {
    Ok(elastic_energy(&geometry(&DiscreteCurve::great_circle(n)?, scheme)?))
}

/// Working state of the integrator between samples.
#[derive(Clone)]
struct Core {
    curve: DiscreteCurve,
    geom: CurveGeometry,
    energy: f64,
    velocity: Vec<Vector3<f64>>,
}

impl Core {
    fn new(curve: DiscreteCurve, scheme: DiffScheme) -> Result<Self> {
        let geom = geometry(&curve, scheme)?;
        let energy = elastic_energy(&geom);
        let velocity = velocity(&geom);
        Ok(Self {
            curve,
            geom,
            energy,
            velocity,
        })
    }

    /// Projects raw node positions to S² and rebuilds the geometry.
    fn from_raw(raw: Vec<Vector3<f64>>, like: &DiscreteCurve, scheme: DiffScheme) -> Result<(Self, f64)> {
        let constraint = raw.iter().fold(0.0, |a: f64, p| a.max((1.0 - p.norm()).abs()));
        if raw.iter().any(|p| !p.iter().all(|c| c.is_finite()) || p.norm() == 0.0) {
            return Err(Error::DegenerateCurve {
                node: raw
                    .iter()
                    .position(|p| !p.iter().all(|c| c.is_finite()) || p.norm() == 0.0)
                    .unwrap_or(0),
                reason: "non-finite node",
            });
        }
        let nodes: Vec<Vector3<f64>> = raw.iter().map(|p| p.normalize()).collect();
        let curve = DiscreteCurve::from_trusted(nodes, like.orientation());
        if let Some(node) = curve.chords().position(|c| c <= 0.0) {
            return Err(Error::DegenerateCurve {
                node,
                reason: "repeated node",
            });
        }
        Ok((Self::new(curve, scheme)?, constraint))
    }

    fn into_state(self, t: f64, stats: StepStats) -> FlowState {
        let report = EnergyReport::new(&self.geom);
        FlowState {
            t,
            curve: self.curve,
            geometry: self.geom,
            report,
            stats: StepStats {
                velocity_sup: sup_norm(&self.velocity),
                ..stats
            },
        }
    }
}

/// One linearly implicit Euler step `γ + dt (I + dt σ C D4)⁻¹ V`, `C = 2(κ²+1)⁻²|γ'|⁻⁴`.
fn imex_substep(core: &Core, dt: f64, sigma: f64) -> Result<Vec<Vector3<f64>>> {
    let g = &core.geom;
    let n = g.len();
    let h4 = g.h.powi(4);
    let inv_c: Vec<f64> = (0..n)
        .map(|m| {
            let k = g.curvature[m];
            g.speed[m].powi(4) * (k * k + 1.0).powi(2) / 2.0
        })
        .collect();
    let mut band = [0.0; 4];
    for &(off, w) in D4.iter().filter(|(off, _)| *off >= 0) {
        band[off as usize] = dt * sigma * w / h4;
    }
    let chol = CyclicBandCholesky::new(&inv_c, band).ok_or_else(|| Error::StepFailure {
        t: f64::NAN,
        halvings: 0,
        reason: "implicit operator not positive definite".into(),
    })?;
    let mut out = core.curve.nodes().to_vec();
    for c in 0..3 {
        let mut rhs: Vec<f64> = (0..n).map(|m| inv_c[m] * core.velocity[m][c]).collect();
        chol.solve_in_place(&mut rhs);
        for (o, y) in out.iter_mut().zip(&rhs) {
            o[c] += dt * y;
        }
    }
    Ok(out)
}

/// Largest stable explicit step for the current geometry.
fn cfl_dt(core: &Core, config: &FlowConfig) -> f64 {
    let g = &core.geom;
    let symbol = match config.diff {
        DiffScheme::FiniteDifference => 160.0 / 6.0,
        DiffScheme::Fourier => std::f64::consts::PI.powi(4),
    };
    let stiff = (0..g.len())
        .map(|m| {
            let k = g.curvature[m];
            2.0 / ((k * k + 1.0).powi(2) * g.speed[m].powi(4))
        })
        .fold(0.0, f64::max)
        * symbol
        / g.h.powi(4);
    config.cfl * RK4_RADIUS / stiff
}

struct Trial {
    core: Core,
    constraint: f64,
    error: f64,
}

fn imex_step(core: &Core, dt: f64, config: &FlowConfig) -> Result<Trial> {
    let sigma = config.implicit_weight();
    let scheme = config.diff;
    let coarse = imex_substep(core, dt, sigma)?;
    let (mid, _) = Core::from_raw(imex_substep(core, 0.5 * dt, sigma)?, &core.curve, scheme)?;
    let (fine_core, _) = Core::from_raw(imex_substep(&mid, 0.5 * dt, sigma)?, &core.curve, scheme)?;
    let fine = fine_core.curve.nodes();
    let coarse_unit: Vec<Vector3<f64>> = coarse.iter().map(|p| p.normalize()).collect();
    let error = fine
        .iter()
        .zip(&coarse_unit)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let raw: Vec<Vector3<f64>> = fine.iter().zip(&coarse_unit).map(|(f, c)| f * 2.0 - c).collect();
    let (core, constraint) = Core::from_raw(raw, &core.curve, scheme)?;
    Ok(Trial {
        core,
        constraint,
        error,
    })
}

fn rk4_step(core: &Core, dt: f64, config: &FlowConfig) -> Result<Trial> {
    let scheme = config.diff;
    let mut cur = core.clone();
    let mut left = dt;
    let mut constraint: f64 = 0.0;
    while left > 0.0 {
        let h = cfl_dt(&cur, config).min(left);
        let y0 = cur.curve.nodes().to_vec();
        let stage = |a: f64, k: &[Vector3<f64>]| -> Result<Core> {
            let raw = y0.iter().zip(k).map(|(y, k)| y + k * a).collect();
            Ok(Core::from_raw(raw, &cur.curve, scheme)?.0)
        };
        let k1 = cur.velocity.clone();
        let k2 = stage(0.5 * h, &k1)?.velocity;
        let k3 = stage(0.5 * h, &k2)?.velocity;
        let k4 = stage(h, &k3)?.velocity;
        let raw = (0..y0.len())
            .map(|m| y0[m] + (k1[m] + k2[m] * 2.0 + k3[m] * 2.0 + k4[m]) * (h / 6.0))
            .collect();
        let (next, c) = Core::from_raw(raw, &cur.curve, scheme)?;
        constraint = constraint.max(c);
        cur = next;
        left -= h;
        if left < 1e-15 * dt {
            break;
        }
    }
    Ok(Trial {
        core: cur,
        constraint,
        error: 0.0,
    })
}

/// Outcome of one accepted step.
struct Accepted {
    core: Core,
    dt: f64,
    dt_next: f64,
    rejections: usize,
    constraint: f64,
    error: f64,
}

/// Tries `dt`, halving on rejection, until a step is accepted.
fn advance(core: &Core, t: f64, dt: f64, config: &FlowConfig) -> Result<Accepted> {
    let mut dt = dt;
    let mut rejections = 0;
    let mut last_reason = String::new();
    loop {
        if rejections as u32 > config.max_halvings {
            return Err(Error::StepFailure {
                t,
                halvings: rejections - 1,
                reason: last_reason,
            });
        }
        let trial = match config.scheme {
            TimeScheme::Imex => imex_step(core, dt, config),
            TimeScheme::ExplicitRk4 => rk4_step(core, dt, config),
        };
        let reason = match &trial {
            Err(e @ (Error::DegenerateCurve { .. } | Error::StepFailure { .. })) => Some(e.to_string()),
            Err(_) => return trial.map(|_| unreachable!()),
            Ok(tr) => {
                let allowed = config.energy_increase_tol * core.energy.abs().max(1.0);
                if !(tr.core.energy <= core.energy + allowed) {
                    Some(format!(
                        "energy increased from {:e} to {:e}",
                        core.energy, tr.core.energy
                    ))
                } else if config.adaptive && config.scheme == TimeScheme::Imex && tr.error > config.error_tol {
                    Some(format!("error estimate {:e} above tolerance", tr.error))
                } else {
                    None
                }
            }
        };
        match reason {
            Some(r) => {
                log::debug!("t = {t:e}: rejected dt = {dt:e}: {r}");
                last_reason = r;
                rejections += 1;
                dt *= 0.5;
            }
            None => {
                let tr = trial.expect("accepted trial");
                let dt_next = if config.adaptive && config.scheme == TimeScheme::Imex {
                    let factor = if tr.error > 0.0 {
                        (0.9 * (config.error_tol / tr.error).sqrt()).clamp(0.2, 2.0)
                    } else {
                        2.0
                    };
                    (dt * factor).min(config.dt_max)
                } else {
                    dt
                };
                return Ok(Accepted {
                    core: tr.core,
                    dt,
                    dt_next,
                    rejections,
                    constraint: tr.constraint,
                    error: tr.error,
                });
            }
        }
    }
}

/// Advances a state by one accepted step of size `state.stats.dt_next` or smaller.
pub fn step(state: &FlowState, config: &FlowConfig) -> Result<FlowState> {
    config.validate()?;
    let core = Core::new(state.curve.clone(), config.diff)?;
    let dt = if state.stats.dt_next > 0.0 {
        state.stats.dt_next
    } else {
        config.dt
    };
    let acc = advance(&core, state.t, dt, config)?;
    let mut stats = state.stats;
    stats.dt = acc.dt;
    stats.dt_next = acc.dt_next;
    stats.accepted_steps += 1;
    stats.rejected_steps += acc.rejections;
    stats.constraint_error = acc.constraint;
    stats.error_estimate = acc.error;
    let mut next = acc.core;
    if config.resample_every > 0 && stats.accepted_steps.is_multiple_of(config.resample_every) {
        next = Core::new(resample_uniform_arclength(&next.curve)?, config.diff)?;
        stats.resample_events += 1;
    }
    Ok(next.into_state(state.t + acc.dt, stats))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    /// `sup|κ|` and the energy gap both below tolerance.
    GreatCircle,
    /// `‖∇𝔈‖_{L²}` below tolerance.
    GradientVanished,
    EndTime,
    MaxSteps,
    SingularitySuspected {
        reason: String,
    },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<FlowState>,
    pub termination: Termination,
    pub initial_energy: f64,
    /// Energy of the discrete great circle at the same resolution.
    pub baseline_energy: f64,
}

impl Trajectory {
    pub fn last(&self) -> &FlowState {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.report.energy).collect()
    }
}

fn stop_reason(core: &Core, gap_base: f64, config: &FlowConfig) -> Option<Termination> {
    let g = &core.geom;
    let grad_l2 = g
        .integrate(|m| (core.velocity[m] * (g.curvature[m].powi(2) + 1.0).powi(2)).norm_squared())
        .sqrt();
    let sup_k = g.sup_curvature();
    if grad_l2 < config.gradient_tol {
        Some(Termination::GradientVanished)
    } else if sup_k < config.kappa_tol && (core.energy - gap_base).abs() < config.energy_gap_tol {
        Some(Termination::GreatCircle)
    } else if !(sup_k < config.kappa_ceiling) {
        Some(Termination::SingularitySuspected {
            reason: format!("sup|κ| = {sup_k:e} exceeds the ceiling"),
        })
    } else {
        None
    }
}

/// Integrates from `initial` until a stop criterion, the end time, or the step limit.
pub fn run(initial: &DiscreteCurve, config: &FlowConfig) -> Result<Trajectory> {
    run_observed(initial, config, |_, _| {})
}

/// [`run`], calling `observe(t, curve)` after every accepted step.
pub fn run_observed(
    initial: &DiscreteCurve,
    config: &FlowConfig,
    mut observe: impl FnMut(f64, &DiscreteCurve),
) -> Result<Trajectory> {
    config.validate()?;
    if initial.len() < MIN_FLOW_NODES {
        return Err(Error::TooCoarse {
            nodes: initial.len(),
            min: MIN_FLOW_NODES,
        });
    }
    let mut core = Core::new(initial.clone(), config.diff)?;
    let initial_energy = core.energy;
    if config.expect_small_energy && initial_energy >= ENERGY_THRESHOLD {
        return Err(Error::RegimeViolation { energy: initial_energy });
    }
    let baseline_energy = great_circle_energy(initial.len(), config.diff)?;
    let mut stats = StepStats {
        dt_next: config.dt,
        ..Default::default()
    };
    let mut t = 0.0;
    let mut states = vec![core.clone().into_state(t, stats)];
    let mut next_sample = config.sample_interval;
    let mut dt = config.dt;

    let termination = loop {
        if let Some(reason) = stop_reason(&core, baseline_energy, config) {
            break reason;
        }
        if let Some(end) = config.t_end {
            if t >= end * (1.0 - 1e-12) {
                break Termination::EndTime;
            }
        }
        if stats.accepted_steps >= config.max_steps {
            break Termination::MaxSteps;
        }
        let mut target = dt;
        let mut clipped = false;
        for limit in [next_sample, config.t_end].into_iter().flatten() {
            if t + target > limit - 1e-12 * limit.max(1.0) {
                target = (limit - t).max(f64::MIN_POSITIVE);
                clipped = true;
            }
        }
        let acc = match advance(&core, t, target, config) {
            Ok(acc) => acc,
            Err(Error::StepFailure { t, halvings, reason }) if core.geom.sup_curvature() > config.kappa_ceiling => {
                break Termination::SingularitySuspected {
                    reason: format!("step failure at t = {t:e} after {halvings} halvings: {reason}"),
                };
            }
            Err(e) => return Err(e),
        };
        t += acc.dt;
        stats.dt = acc.dt;
        stats.accepted_steps += 1;
        stats.rejected_steps += acc.rejections;
        stats.constraint_error = acc.constraint;
        stats.error_estimate = acc.error;
        if acc.dt < config.dt_floor {
            core = acc.core;
            states.push(core.clone().into_state(t, stats));
            break Termination::SingularitySuspected {
                reason: format!("accepted step {:e} below the floor", acc.dt),
            };
        }
        // A clipped step that went through keeps the previous proposal.
        dt = if clipped && acc.rejections == 0 {
            dt.max(acc.dt_next)
        } else {
            acc.dt_next
        };
        stats.dt_next = dt;
        core = acc.core;
        if config.resample_every > 0 && stats.accepted_steps.is_multiple_of(config.resample_every) {
            core = Core::new(resample_uniform_arclength(&core.curve)?, config.diff)?;
            stats.resample_events += 1;
        }
        observe(t, &core.curve);
        let sample_due = match next_sample {
            None => true,
            Some(ts) => t >= ts - 1e-12 * ts.max(1.0),
        };
        if sample_due {
            states.push(core.clone().into_state(t, stats));
            if let (Some(ts), Some(iv)) = (next_sample, config.sample_interval) {
                next_sample = Some(ts + iv);
            }
        }
    };
    if states.last().is_none_or(|s| s.t < t) {
        states.push(core.into_state(t, stats));
    }
    log::info!(
        "flow stopped at t = {t:e} after {} steps ({} rejected): {termination:?}",
        stats.accepted_steps,
        stats.rejected_steps
    );
    Ok(Trajectory {
        states,
        termination,
        initial_energy,
        baseline_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::Quaternion;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn latitude_theta(c: &DiscreteCurve) -> f64 {
        let z: f64 = c.nodes().iter().map(|p| p.z).sum::<f64>() / c.len() as f64;
        z.acos()
    }

    #[test]
    fn velocity_closed_forms() {
        let g = geometry(&DiscreteCurve::great_circle(256).unwrap(), DiffScheme::FiniteDifference).unwrap();
        assert!(sup_norm(&velocity(&g)) < 1e-10);
        let theta = FRAC_PI_3;
        let g = geometry(
            &DiscreteCurve::latitude(256, theta).unwrap(),
            DiffScheme::FiniteDifference,
        )
        .unwrap();
        let expected = 3f64.sqrt() / 4.0;
        let k = 1.0 / theta.tan();
        assert!(((k / theta.sin().powi(2)) / (k * k + 1.0).powi(2) - expected).abs() < 1e-15);
        for (v, p) in velocity(&g).iter().zip(&g.nodes) {
            assert!((v.norm() - expected).abs() < 1e-6);
            // Toward the equator: the polar component decreases.
            assert!(v.z < 0.0);
            assert!(v.dot(p).abs() < 1e-12);
        }
    }

    #[test]
    fn latitude_moves_toward_the_equator() {
        let config = FlowConfig {
            t_end: Some(0.2),
            sample_interval: Some(0.05),
            ..Default::default()
        };
        let traj = run(&DiscreteCurve::latitude(64, FRAC_PI_3).unwrap(), &config).unwrap();
        let thetas: Vec<f64> = traj.states.iter().map(|s| latitude_theta(&s.curve)).collect();
        assert!(thetas.windows(2).all(|w| w[1] > w[0]), "{thetas:?}");
        assert!(*thetas.last().unwrap() < FRAC_PI_2);
        assert_eq!(traj.termination, Termination::EndTime);
    }

    #[test]
    fn great_circle_is_fixed() {
        let c = DiscreteCurve::great_circle(64).unwrap();
        let config = FlowConfig::default();
        let s = FlowState::new(c.clone(), &config).unwrap();
        let next = step(&s, &config).unwrap();
        assert!(next.curve.hausdorff_nodes(&c) < 1e-10);
        let traj = run(&c, &config).unwrap();
        assert_eq!(traj.termination, Termination::GradientVanished);
        assert_eq!(traj.states.len(), 1);
    }

    #[test]
    fn explicit_step_decreases_energy() {
        let config = FlowConfig {
            scheme: TimeScheme::ExplicitRk4,
            dt: 1e-5,
            ..Default::default()
        };
        let s = FlowState::new(DiscreteCurve::latitude(256, FRAC_PI_3).unwrap(), &config).unwrap();
        let next = step(&s, &config).unwrap();
        assert!(next.report.energy < s.report.energy);
        assert!((next.t - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn large_step_is_rejected_and_halved() {
        let config = FlowConfig {
            dt: 1.0,
            dt_max: 1.0,
            ..Default::default()
        };
        let s = FlowState::new(DiscreteCurve::latitude(64, FRAC_PI_3).unwrap(), &config).unwrap();
        let next = step(&s, &config).unwrap();
        assert!(next.stats.rejected_steps > 0);
        assert!(next.stats.dt <= 0.5);
        assert!(next.report.energy < s.report.energy);
    }

    #[test]
    fn energy_increase_is_rejected() {
        // A fixed huge step overshoots far past the equator, where the energy is higher.
        let config = FlowConfig {
            adaptive: false,
            dt: 8.0,
            ..Default::default()
        };
        let s = FlowState::new(DiscreteCurve::latitude(64, FRAC_PI_3).unwrap(), &config).unwrap();
        let core = Core::new(s.curve.clone(), config.diff).unwrap();
        let trial = imex_step(&core, 8.0, &config).unwrap();
        assert!(trial.core.energy > core.energy);
        let next = step(&s, &config).unwrap();
        assert!(next.stats.rejected_steps > 0);
        assert!(next.stats.dt <= 4.0);
        assert!(next.report.energy < s.report.energy);
    }

    #[test]
    fn config_validation_names_the_key() {
        let config = FlowConfig {
            error_tol: -1.0,
            ..Default::default()
        };
        match config.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "error_tol"),
            other => panic!("{other:?}"),
        }
        let c = DiscreteCurve::great_circle(32).unwrap();
        assert!(matches!(run(&c, &FlowConfig::default()), Err(Error::TooCoarse { .. })));
    }

    #[test]
    fn regime_flag_refuses_high_energy() {
        let c = DiscreteCurve::latitude(64, std::f64::consts::FRAC_PI_4).unwrap();
        assert!(matches!(
            run(&c, &FlowConfig::default()),
            Err(Error::RegimeViolation { .. })
        ));
    }

    #[test]
    fn rotation_equivariance() {
        let c = DiscreteCurve::from_fn(64, |x| {
            let theta = 1.2 + 0.1 * (2.0 * x).cos();
            Vector3::new(theta.sin() * x.cos(), theta.sin() * x.sin(), theta.cos())
        })
        .unwrap();
        let r = Quaternion::new(0.8, 0.1, -0.3, 0.5).normalize();
        let config = FlowConfig {
            max_steps: 100,
            sample_interval: None,
            ..Default::default()
        };
        let a = run(&c, &config).unwrap();
        let b = run(&c.rotated(r), &config).unwrap();
        assert_eq!(a.states.len(), b.states.len());
        assert_eq!(a.last().stats.accepted_steps, 100);
        for (sa, sb) in a.states.iter().zip(&b.states) {
            let rotated = sa.curve.rotated(r);
            for (p, q) in rotated.nodes().iter().zip(sb.curve.nodes()) {
                assert!((p - q).norm() < 1e-8);
            }
        }
    }
}
