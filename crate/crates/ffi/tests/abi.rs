use std::f64::consts::{FRAC_PI_3, PI};
use std::ffi::CStr;
use std::ptr;

use hopflow_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(hf_last_error()).to_string_lossy().into_owned() }
}

fn latitude(n: usize, theta: f64) -> *mut HfCurve {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { hf_curve_latitude(n, theta, &mut c) }, HfStatus::Ok);
    c
}

#[test]
fn curve_round_trip_and_energy() {
    let c = latitude(64, FRAC_PI_3);
    unsafe {
        assert_eq!(hf_curve_len(c), 64);
        let mut xyz = vec![0.0; 3 * 64];
        assert_eq!(hf_curve_nodes(c, xyz.as_mut_ptr(), xyz.len()), HfStatus::Ok);
        let mut d = ptr::null_mut();
        assert_eq!(hf_curve_new(xyz.as_ptr(), 64, false, &mut d), HfStatus::Ok);
        let (mut a, mut b) = (HfEnergy::default(), HfEnergy::default());
        assert_eq!(hf_curve_energy(c, HfDiffScheme::Fourier, &mut a), HfStatus::Ok);
        assert_eq!(hf_curve_energy(d, HfDiffScheme::Fourier, &mut b), HfStatus::Ok);
        assert_eq!(a.energy, b.energy);
        assert!((a.length - PI * 3f64.sqrt()).abs() < 1e-12);
        assert!(a.embedded);
        assert_eq!(hf_curve_nodes(c, xyz.as_mut_ptr(), 10), HfStatus::InvalidArgument);
        hf_curve_free(c);
        hf_curve_free(d);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut c = ptr::null_mut();
        let xyz = [2.0, 0.0, 0.0].repeat(32);
        assert_eq!(hf_curve_new(xyz.as_ptr(), 32, false, &mut c), HfStatus::NonUnitInput);
        assert!(c.is_null());
        assert!(last_error().contains("unit"));
        assert_eq!(hf_curve_latitude(4, 1.0, &mut c), HfStatus::TooCoarse);
        assert_eq!(
            hf_curve_energy(ptr::null(), HfDiffScheme::Fourier, ptr::null_mut()),
            HfStatus::NullPointer
        );
        assert!(last_error().contains("curve"));
        assert_eq!(hf_curve_len(ptr::null()), 0);
        hf_curve_free(ptr::null_mut());
    }
}

#[test]
fn modulus_and_torus() {
    let c = latitude(128, FRAC_PI_3);
    unsafe {
        let mut m = HfModulus::default();
        assert_eq!(hf_curve_modulus(c, &mut m), HfStatus::Ok);
        assert!(m.reduced_re.abs() < 1e-10 && (m.reduced_im - 3f64.sqrt()).abs() < 1e-10);
        let mut t = HfTorus::default();
        assert_eq!(hf_torus_check(c, 64, &mut t), HfStatus::Ok);
        assert!(t.holonomy_error < 1e-10);
        assert!((t.willmore - t.pi_energy).abs() < 1e-3 * t.pi_energy);
        assert_eq!(hf_torus_check(c, 8, &mut t), HfStatus::TooCoarse);
        hf_curve_free(c);
    }
}

#[test]
fn flow_runs_and_exposes_samples() {
    let c = latitude(64, 1.2);
    let mut p = hf_flow_params_default();
    p.diff = HfDiffScheme::Fourier;
    p.t_end = 0.05;
    p.sample_interval = 0.01;
    unsafe {
        let mut traj = ptr::null_mut();
        assert_eq!(hf_flow_run(c, &p, &mut traj), HfStatus::Ok, "{}", last_error());
        let n = hf_trajectory_len(traj);
        assert!(n >= 5);
        let mut term = HfTermination::MaxSteps;
        assert_eq!(hf_trajectory_termination(traj, &mut term), HfStatus::Ok);
        assert_eq!(term, HfTermination::EndTime);
        let mut prev = f64::INFINITY;
        for i in 0..n {
            let (mut t, mut e) = (0.0, 0.0);
            assert_eq!(hf_trajectory_sample(traj, i, &mut t, &mut e), HfStatus::Ok);
            assert!(e <= prev);
            prev = e;
        }
        let mut last = ptr::null_mut();
        assert_eq!(hf_trajectory_curve(traj, n - 1, &mut last), HfStatus::Ok);
        assert_eq!(hf_curve_len(last), 64);
        let (mut t, mut e) = (0.0, 0.0);
        assert_eq!(hf_trajectory_sample(traj, n, &mut t, &mut e), HfStatus::InvalidArgument);
        hf_curve_free(last);
        hf_trajectory_free(traj);

        p.dt = -1.0;
        assert_eq!(hf_flow_run(c, &p, &mut traj), HfStatus::InvalidArgument);
        assert!(last_error().contains("dt"));
        hf_curve_free(c);
    }
}

#[test]
fn header_declares_the_api() {
    let header = include_str!("../include/hopflow.h");
    for name in [
        "hf_last_error",
        "hf_curve_new",
        "hf_curve_free",
        "hf_curve_energy",
        "hf_curve_modulus",
        "hf_torus_check",
        "hf_flow_params_default",
        "hf_flow_run",
        "hf_trajectory_sample",
        "hf_trajectory_free",
        "typedef struct HfCurve HfCurve",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
