//! C ABI over `hopflow`.
//!
//! Objects are opaque handles released with their `*_free` function. Every fallible
//! call returns an [`HfStatus`]; the message of the last failure on the calling thread
//! is available from [`hf_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hopflow::commands::torus_report;
use hopflow::curve::{geometry, DiffScheme, DiscreteCurve, Orientation};
use hopflow::energy::EnergyReport;
use hopflow::flow::{run, FlowConfig, TimeScheme, Trajectory};
use hopflow::moduli::ModulusPoint;
use hopflow::Error;
use nalgebra::Vector3;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonUnitInput = 3,
    TooCoarse = 4,
    DegenerateCurve = 5,
    NotEmbedded = 6,
    RegimeViolation = 7,
    StepFailure = 8,
    DegenerateSurface = 9,
    Io = 10,
    Panic = 11,
    Internal = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfDiffScheme {
    FiniteDifference = 0,
    Fourier = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfTimeScheme {
    Imex = 0,
    ExplicitRk4 = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfTermination {
    GreatCircle = 0,
    GradientVanished = 1,
    EndTime = 2,
    MaxSteps = 3,
    SingularitySuspected = 4,
}

/// Flow parameters; start from [`hf_flow_params_default`]. A non-positive `t_end`
/// or `sample_interval` means none.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct HfFlowParams {
    pub scheme: HfTimeScheme,
    pub diff: HfDiffScheme,
    pub dt: f64,
    pub dt_max: f64,
    pub adaptive: bool,
    pub error_tol: f64,
    pub max_steps: usize,
    pub t_end: f64,
    pub sample_interval: f64,
    pub resample_every: usize,
    pub expect_small_energy: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct HfEnergy {
    pub energy: f64,
    pub length: f64,
    pub total_curvature: f64,
    pub area: f64,
    pub embedded: bool,
    pub sup_curvature: f64,
    pub gradient_l2: f64,
    pub dissipation: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct HfModulus {
    pub raw_re: f64,
    pub raw_im: f64,
    pub reduced_re: f64,
    pub reduced_im: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct HfTorus {
    pub holonomy: f64,
    pub half_area: f64,
    pub holonomy_error: f64,
    pub fiber_residual: f64,
    pub horizontality_residual: f64,
    pub willmore: f64,
    pub pi_energy: f64,
    /// Largest relative residual over the pointwise surface identities.
    pub max_pointwise: f64,
    pub gradient_correspondence: f64,
    pub velocity_correspondence: f64,
}

pub struct HfCurve(DiscreteCurve);

pub struct HfTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HfStatus {
    match e {
        Error::NonUnitInput { .. } | Error::NonTangentInput { .. } | Error::SeedOffFiber { .. } => {
            HfStatus::NonUnitInput
        }
        Error::TooCoarse { .. } | Error::TrajectoryTooShort { .. } => HfStatus::TooCoarse,
        Error::DegenerateCurve { .. } => HfStatus::DegenerateCurve,
        Error::NotEmbedded { .. } => HfStatus::NotEmbedded,
        Error::RegimeViolation { .. } => HfStatus::RegimeViolation,
        Error::StepFailure { .. } => HfStatus::StepFailure,
        Error::DegenerateMetric { .. } => HfStatus::DegenerateSurface,
        Error::Config { .. } | Error::UnsupportedOrder(_) | Error::Parse { .. } => HfStatus::InvalidArgument,
        Error::Io(_) => HfStatus::Io,
        _ => HfStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (HfStatus, String)>) -> HfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HfStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside hopflow".into());
            HfStatus::Panic
        }
    }
}

fn lib(e: Error) -> (HfStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (HfStatus, String) {
    (HfStatus::NullPointer, format!("`{name}` is null"))
}

fn diff(d: HfDiffScheme) -> DiffScheme {
    match d {
        HfDiffScheme::FiniteDifference => DiffScheme::FiniteDifference,
        HfDiffScheme::Fourier => DiffScheme::Fourier,
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (HfStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn hf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a curve from `n` unit vectors stored as `xyz[3*i..3*i+3]`.
///
/// # Safety
/// `xyz` must point to `3 * n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_curve_new(xyz: *const f64, n: usize, reverse: bool, out: *mut *mut HfCurve) -> HfStatus {
    guard(|| {
        if xyz.is_null() {
            return Err(null("xyz"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let raw = std::slice::from_raw_parts(xyz, 3 * n);
        let nodes = raw.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect();
        let orientation = if reverse {
            Orientation::Reverse
        } else {
            Orientation::Forward
        };
        let curve = DiscreteCurve::new(nodes, orientation).map_err(lib)?;
        *out = Box::into_raw(Box::new(HfCurve(curve)));
        Ok(())
    })
}

/// Circle at polar angle `theta` with `n` nodes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_curve_latitude(n: usize, theta: f64, out: *mut *mut HfCurve) -> HfStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let curve = DiscreteCurve::latitude(n, theta).map_err(lib)?;
        *out = Box::into_raw(Box::new(HfCurve(curve)));
        Ok(())
    })
}

/// # Safety
/// `curve` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hf_curve_free(curve: *mut HfCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Number of nodes, 0 for a null handle.
///
/// # Safety
/// `curve` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_curve_len(curve: *const HfCurve) -> usize {
    curve.as_ref().map_or(0, |c| c.0.len())
}

/// Copies the nodes into `xyz`, which holds `capacity` doubles.
///
/// # Safety
/// `curve` must be a live handle and `xyz` must point to `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn hf_curve_nodes(curve: *const HfCurve, xyz: *mut f64, capacity: usize) -> HfStatus {
    guard(|| {
        let curve = deref(curve, "curve")?;
        if xyz.is_null() {
            return Err(null("xyz"));
        }
        let need = 3 * curve.0.len();
        if capacity < need {
            return Err((
                HfStatus::InvalidArgument,
                format!("buffer holds {capacity} doubles, {need} required"),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(xyz, need);
        for (c, p) in dst.chunks_exact_mut(3).zip(curve.0.nodes()) {
            c.copy_from_slice(p.as_slice());
        }
        Ok(())
    })
}

/// # Safety
/// `curve` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_curve_energy(curve: *const HfCurve, scheme: HfDiffScheme, out: *mut HfEnergy) -> HfStatus {
    guard(|| {
        let curve = deref(curve, "curve")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = EnergyReport::new(&geometry(&curve.0, diff(scheme)).map_err(lib)?);
        *out = HfEnergy {
            energy: r.energy,
            length: r.length,
            total_curvature: r.total_curvature,
            area: r.area,
            embedded: r.embedded,
            sup_curvature: r.sup_curvature,
            gradient_l2: r.gradient_l2,
            dissipation: r.dissipation,
        };
        Ok(())
    })
}

/// Lattice modulus of the Hopf torus over an embedded curve.
///
/// # Safety
/// `curve` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_curve_modulus(curve: *const HfCurve, out: *mut HfModulus) -> HfStatus {
    guard(|| {
        let curve = deref(curve, "curve")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = EnergyReport::new(&geometry(&curve.0, DiffScheme::Fourier).map_err(lib)?);
        let m = hopflow::moduli::modulus(&r).map_err(lib)?;
        let ModulusPoint { raw, reduced, .. } = m;
        *out = HfModulus {
            raw_re: raw.re,
            raw_im: raw.im,
            reduced_re: reduced.re,
            reduced_im: reduced.im,
        };
        Ok(())
    })
}

/// Lifts an embedded curve to its Hopf torus with `fiber_res` fiber samples and
/// evaluates the surface identities.
///
/// # Safety
/// `curve` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_torus_check(curve: *const HfCurve, fiber_res: usize, out: *mut HfTorus) -> HfStatus {
    guard(|| {
        let curve = deref(curve, "curve")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = torus_report(&curve.0, fiber_res).map_err(lib)?;
        *out = HfTorus {
            holonomy: r.holonomy,
            half_area: r.half_area,
            holonomy_error: r.holonomy_error,
            fiber_residual: r.fiber_residual,
            horizontality_residual: r.horizontality_residual,
            willmore: r.identities.willmore,
            pi_energy: r.identities.pi_energy,
            max_pointwise: r.identities.max_pointwise(),
            gradient_correspondence: r.correspondence.gradient,
            velocity_correspondence: r.correspondence.velocity,
        };
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn hf_flow_params_default() -> HfFlowParams {
    let d = FlowConfig::default();
    HfFlowParams {
        scheme: HfTimeScheme::Imex,
        diff: HfDiffScheme::FiniteDifference,
        dt: d.dt,
        dt_max: d.dt_max,
        adaptive: d.adaptive,
        error_tol: d.error_tol,
        max_steps: d.max_steps,
        t_end: d.t_end.unwrap_or(0.0),
        sample_interval: d.sample_interval.unwrap_or(0.0),
        resample_every: d.resample_every,
        expect_small_energy: d.expect_small_energy,
    }
}

fn flow_config(p: &HfFlowParams) -> FlowConfig {
    let positive = |x: f64| (x > 0.0).then_some(x);
    FlowConfig {
        scheme: match p.scheme {
            HfTimeScheme::Imex => TimeScheme::Imex,
            HfTimeScheme::ExplicitRk4 => TimeScheme::ExplicitRk4,
        },
        diff: diff(p.diff),
        dt: p.dt,
        dt_max: p.dt_max,
        adaptive: p.adaptive,
        error_tol: p.error_tol,
        max_steps: p.max_steps,
        t_end: positive(p.t_end),
        sample_interval: positive(p.sample_interval),
        resample_every: p.resample_every,
        expect_small_energy: p.expect_small_energy,
        ..FlowConfig::default()
    }
}

/// Runs the flow from `curve`. `params` may be null for the defaults.
///
/// # Safety
/// `curve` must be a live handle, `params` null or valid, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_flow_run(
    curve: *const HfCurve,
    params: *const HfFlowParams,
    out: *mut *mut HfTrajectory,
) -> HfStatus {
    guard(|| {
        let curve = deref(curve, "curve")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let config = match params.as_ref() {
            Some(p) => flow_config(p),
            None => FlowConfig::default(),
        };
        config.validate().map_err(lib)?;
        let traj = run(&curve.0, &config).map_err(lib)?;
        *out = Box::into_raw(Box::new(HfTrajectory(traj)));
        Ok(())
    })
}

/// # Safety
/// `traj` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hf_trajectory_free(traj: *mut HfTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of samples, 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_trajectory_len(traj: *const HfTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.states.len())
}

/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_trajectory_termination(traj: *const HfTrajectory, out: *mut HfTermination) -> HfStatus {
    guard(|| {
        let traj = deref(traj, "traj")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = match traj.0.termination {
            hopflow::flow::Termination::GreatCircle => HfTermination::GreatCircle,
            hopflow::flow::Termination::GradientVanished => HfTermination::GradientVanished,
            hopflow::flow::Termination::EndTime => HfTermination::EndTime,
            hopflow::flow::Termination::MaxSteps => HfTermination::MaxSteps,
            hopflow::flow::Termination::SingularitySuspected { .. } => HfTermination::SingularitySuspected,
        };
        Ok(())
    })
}

/// Time and energy of sample `index`.
///
/// # Safety
/// `traj` must be a live handle; `t` and `energy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_trajectory_sample(
    traj: *const HfTrajectory,
    index: usize,
    t: *mut f64,
    energy: *mut f64,
) -> HfStatus {
    guard(|| {
        let traj = deref(traj, "traj")?;
        let state = traj.0.states.get(index).ok_or_else(|| {
            (
                HfStatus::InvalidArgument,
                format!("sample {index} out of range ({})", traj.0.states.len()),
            )
        })?;
        *t.as_mut().ok_or_else(|| null("t"))? = state.t;
        *energy.as_mut().ok_or_else(|| null("energy"))? = state.report.energy;
        Ok(())
    })
}

/// Copy of the curve at sample `index`, released with [`hf_curve_free`].
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_trajectory_curve(
    traj: *const HfTrajectory,
    index: usize,
    out: *mut *mut HfCurve,
) -> HfStatus {
    guard(|| {
        let traj = deref(traj, "traj")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let state = traj.0.states.get(index).ok_or_else(|| {
            (
                HfStatus::InvalidArgument,
                format!("sample {index} out of range ({})", traj.0.states.len()),
            )
        })?;
        *out = Box::into_raw(Box::new(HfCurve(state.curve.clone())));
        Ok(())
    })
}
