use std::f64::consts::FRAC_PI_3;

use hopflow::config::RunConfig;
use hopflow::curve::{geometry, snapshot, DiffScheme, DiscreteCurve};
use hopflow::energy::elastic_energy;
use hopflow::family::CurveFamily;
use hopflow::flow::run;
use hopflow::hopf::{build_torus, horizontal_lift, seed_over, surface_geometry};
use hopflow::Error;

#[test]
fn snapshot_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let c = CurveFamily::mode_two(0.07, 3).build(96, true).unwrap();
    let p = dir.path().join("c.txt");
    snapshot::write(&p, &c, 0.125).unwrap();
    let (back, t) = snapshot::read(&p).unwrap();
    assert_eq!(t, 0.125);
    assert_eq!(back.nodes(), c.nodes());
    assert_eq!(back.orientation(), c.orientation());
}

#[test]
fn runs_are_deterministic() {
    let text = "family = perturbed\namplitude = 0.08\nmodes = 2, 3\nseed = 5\nnodes = 64\nt_end = 0.01\n";
    let cfg = RunConfig::parse(text, std::path::Path::new("x.cfg")).unwrap();
    let c = cfg.family.build(cfg.nodes, true).unwrap();
    let a = run(&c, &cfg.flow).unwrap();
    let b = run(&c, &cfg.flow).unwrap();
    assert_eq!(a.last().curve.nodes(), b.last().curve.nodes());
    assert_eq!(a.energies(), b.energies());
}

#[test]
fn latitude_torus_end_to_end() {
    let c = DiscreteCurve::latitude(128, FRAC_PI_3).unwrap();
    let lift = horizontal_lift(&c, seed_over(&c.nodes()[0])).unwrap();
    let mesh = build_torus(&lift, 64).unwrap();
    let g = surface_geometry(&mesh).unwrap();
    let e = elastic_energy(&geometry(&c, DiffScheme::Fourier).unwrap());
    assert!(
        (g.willmore - std::f64::consts::PI * e).abs() < 1e-4 * g.willmore,
        "{} {}",
        g.willmore,
        e
    );
}

#[test]
fn high_energy_start_is_refused() {
    let r = CurveFamily::Latitude { theta: 0.4 }.build(128, true);
    assert!(matches!(r, Err(Error::RegimeViolation { .. })));
}
