//! Batch commands behind the command-line tool: flow runs, curve diagnostics and torus checks.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::curve::{geometry, snapshot, DiffScheme, DiscreteCurve, Orientation};
use crate::energy::{check_bounds, enclosed_area, extrinsic_energy, EnergyReport, Finding, ENERGY_THRESHOLD};
use crate::error::Result;
use crate::flow::{
    curvature_evolution_residual, dissipation_residual, run_observed, FlowState, Termination, Trajectory,
};
use crate::hopf::{
    angle_distance, build_torus, horizontal_lift, seed_over, verify_all, FlowCorrespondenceReport, HopfIdentityReport,
};
use crate::moduli::{compactness_monitor, modulus, CompactnessReport, ModulusPoint};

pub const TRAJECTORY_COLUMNS: &str = "t,energy,length,area,sup_kappa,grad_l2,dissipation,dt,embedded";
pub const MODULUS_COLUMNS: &str = "tau_re,tau_im,tau_red_re,tau_red_im,word";

/// Writes one row per state; modulus cells stay empty where the curve is not embedded.
pub fn write_trajectory_csv(out: &mut impl Write, states: &[FlowState], moduli: bool) -> Result<()> {
    if moduli {
        writeln!(out, "{TRAJECTORY_COLUMNS},{MODULUS_COLUMNS}")?;
    } else {
        writeln!(out, "{TRAJECTORY_COLUMNS}")?;
    }
    for s in states {
        let r = &s.report;
        write!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            s.t, r.energy, r.length, r.area, r.sup_curvature, r.gradient_l2, r.dissipation, s.stats.dt, r.embedded
        )?;
        if moduli {
            match modulus(r) {
                Ok(m) => write!(
                    out,
                    ",{:e},{:e},{:e},{:e},{}",
                    m.raw.re, m.raw.im, m.reduced.re, m.reduced.im, m.word
                )?,
                Err(_) => write!(out, ",,,,,")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusReport {
    pub nodes: usize,
    pub fiber_res: usize,
    pub holonomy: f64,
    pub half_area: f64,
    /// Circular distance between the holonomy and `A/2`.
    pub holonomy_error: f64,
    pub fiber_residual: f64,
    pub horizontality_residual: f64,
    pub identities: HopfIdentityReport,
    pub correspondence: FlowCorrespondenceReport,
}

/// Lifts an embedded curve, builds its Hopf torus and evaluates every identity.
pub fn torus_report(curve: &DiscreteCurve, fiber_res: usize) -> Result<TorusReport> {
    let area = enclosed_area(&geometry(curve, DiffScheme::Fourier)?)?;
    let lift = horizontal_lift(curve, seed_over(&curve.nodes()[0]))?;
    let mesh = build_torus(&lift, fiber_res)?;
    let geom = geometry(curve, DiffScheme::FiniteDifference)?;
    let (_, identities, correspondence) = verify_all(&mesh, &geom)?;
    Ok(TorusReport {
        nodes: curve.len(),
        fiber_res,
        holonomy: lift.holonomy,
        half_area: area / 2.0,
        holonomy_error: angle_distance(lift.holonomy, area / 2.0),
        fiber_residual: lift.fiber_residual(),
        horizontality_residual: lift.horizontality_residual(),
        identities,
        correspondence,
    })
}

/// Plain-text residual table, one identity per line.
pub fn write_torus_table(out: &mut impl Write, r: &TorusReport) -> Result<()> {
    let i = &r.identities;
    let c = &r.correspondence;
    writeln!(out, "# hopf torus {} x {}", r.nodes, r.fiber_res)?;
    writeln!(out, "{:<28} {:>24}", "quantity", "value")?;
    let rows = [
        ("holonomy", r.holonomy),
        ("half_area", r.half_area),
        ("holonomy_error", r.holonomy_error),
        ("lift_fiber", r.fiber_residual),
        ("lift_horizontality", r.horizontality_residual),
        ("mean_curvature", i.mean_curvature),
        ("tracefree_norm", i.tracefree_norm),
        ("q_term", i.q_term),
        ("normal_laplacian", i.normal_laplacian),
        ("willmore_gradient", i.willmore_gradient),
        ("willmore_energy", i.willmore_energy),
        ("dissipation", i.dissipation),
        ("willmore", i.willmore),
        ("pi_energy", i.pi_energy),
        ("r4_second_form", i.r4_second_residual),
        ("r4_mean_curvature", i.r4_mean_residual),
        ("pushed_gradient", c.gradient),
        ("pushed_velocity", c.velocity),
        ("pushed_velocity_sup", c.pushed_velocity_sup),
    ];
    for (name, v) in rows {
        writeln!(out, "{name:<28} {v:>24e}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveInfo {
    pub t: f64,
    pub nodes: usize,
    pub orientation: Orientation,
    pub report: EnergyReport,
    pub extrinsic_energy: f64,
    /// Area is the signed quadrature value, not an enclosed area.
    pub nominal_area: bool,
    pub findings: Vec<Finding>,
    pub modulus: Option<ModulusPoint>,
}

/// Full diagnostic pass; the bounds are evaluated with the curve's own energy as `𝔈₀`.
pub fn curve_info(curve: &DiscreteCurve, t: f64, scheme: DiffScheme) -> Result<CurveInfo> {
    let geom = geometry(curve, scheme)?;
    let report = EnergyReport::new(&geom);
    Ok(CurveInfo {
        t,
        nodes: curve.len(),
        orientation: curve.orientation(),
        extrinsic_energy: extrinsic_energy(&geom),
        nominal_area: !report.embedded,
        findings: check_bounds(&report, report.energy),
        modulus: modulus(&report).ok(),
        report,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualSummary {
    pub dissipation_max_relative: Option<f64>,
    pub curvature_max_relative: Option<f64>,
    pub arclength_max: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TimedFinding {
    pub t: f64,
    #[serde(flatten)]
    pub finding: Finding,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub termination: Option<Termination>,
    pub failure: Option<String>,
    pub final_time: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub baseline_energy: Option<f64>,
    pub final_sup_kappa: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub resample_events: usize,
    pub samples: usize,
    pub energy_monotone: bool,
    /// Some sample was not embedded, so its area is nominal.
    pub nominal_area: bool,
    pub bound_violations: Vec<TimedFinding>,
    pub modulus: Option<ModulusPoint>,
    pub compactness: Option<CompactnessReport>,
    pub residuals: Option<ResidualSummary>,
    pub torus: Option<TorusReport>,
    pub snapshots: Vec<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn residual_summary(states: &[FlowState]) -> ResidualSummary {
    let mut notes = Vec::new();
    let dissipation_max_relative = match dissipation_residual(states) {
        Ok(r) => Some(r.iter().map(|x| x.relative).fold(0.0, f64::max)),
        Err(e) => {
            notes.push(e.to_string());
            None
        }
    };
    let (curvature_max_relative, arclength_max) = match curvature_evolution_residual(states) {
        Ok(r) => (
            Some(r.iter().map(|x| x.curvature_relative).fold(0.0, f64::max)),
            Some(r.iter().map(|x| x.arclength_max).fold(0.0, f64::max)),
        ),
        Err(e) => {
            notes.push(e.to_string());
            (None, None)
        }
    };
    ResidualSummary {
        dissipation_max_relative,
        curvature_max_relative,
        arclength_max,
        note: (!notes.is_empty()).then(|| notes.join("; ")),
    }
}

/// Runs the configured flow and writes `trajectory.csv`, snapshots and `summary.json`
/// into the output directory. A failing step dumps the last accepted curve to
/// `snapshots/failure.txt` before the error is returned.
pub fn flow_run(config: &RunConfig) -> Result<RunSummary> {
    let dir = &config.output_dir;
    let snaps = dir.join("snapshots");
    fs::create_dir_all(&snaps)?;
    let initial = config.family.build(config.nodes, config.flow.expect_small_energy)?;
    snapshot::write(&snaps.join("initial.txt"), &initial, 0.0)?;

    let mut last = (0.0, initial.clone());
    let outcome = run_observed(&initial, &config.flow, |t, c| last = (t, c.clone()));
    let traj = match outcome {
        Ok(traj) => traj,
        Err(e) => {
            let path = snaps.join("failure.txt");
            snapshot::write(&path, &last.1, last.0)?;
            let report = EnergyReport::new(&geometry(&last.1, config.flow.diff)?);
            let summary = RunSummary {
                termination: None,
                failure: Some(e.to_string()),
                final_time: last.0,
                initial_energy: f64::NAN,
                final_energy: report.energy,
                baseline_energy: None,
                final_sup_kappa: report.sup_curvature,
                accepted_steps: 0,
                rejected_steps: 0,
                resample_events: 0,
                samples: 0,
                energy_monotone: false,
                nominal_area: !report.embedded,
                bound_violations: Vec::new(),
                modulus: None,
                compactness: None,
                residuals: None,
                torus: None,
                snapshots: vec![path],
            };
            write_json(&dir.join("summary.json"), &summary)?;
            return Err(e);
        }
    };
    let summary = summarize(config, &traj)?;
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn summarize(config: &RunConfig, traj: &Trajectory) -> Result<RunSummary> {
    let dir = &config.output_dir;
    let snaps = dir.join("snapshots");
    let mut csv = create(&dir.join("trajectory.csv"))?;
    write_trajectory_csv(&mut csv, &traj.states, config.track_moduli)?;
    csv.flush()?;

    let mut snapshots = vec![snaps.join("initial.txt")];
    if config.snapshot_every > 0 {
        for (k, s) in traj.states.iter().enumerate().step_by(config.snapshot_every).skip(1) {
            let path = snaps.join(format!("sample_{k:06}.txt"));
            snapshot::write(&path, &s.curve, s.t)?;
            snapshots.push(path);
        }
    }
    let last = traj.last();
    let final_path = snaps.join("final.txt");
    snapshot::write(&final_path, &last.curve, last.t)?;
    snapshots.push(final_path);

    let e0 = traj.initial_energy;
    let bound_violations = if e0 < ENERGY_THRESHOLD {
        traj.states
            .iter()
            .flat_map(|s| {
                check_bounds(&s.report, e0)
                    .into_iter()
                    .filter(|f| !f.passed)
                    .map(|finding| TimedFinding { t: s.t, finding })
            })
            .collect()
    } else {
        Vec::new()
    };
    let energies = traj.energies();
    let energy_monotone = energies
        .windows(2)
        .all(|w| w[1] <= w[0] + config.flow.energy_increase_tol);

    let points: Vec<ModulusPoint> = traj.states.iter().filter_map(|s| modulus(&s.report).ok()).collect();
    let compactness = if config.track_moduli && e0 < ENERGY_THRESHOLD && !points.is_empty() {
        Some(compactness_monitor(&points, e0)?)
    } else {
        None
    };
    let torus = if config.check_hopf || config.export_mesh {
        let lift = horizontal_lift(&last.curve, seed_over(&last.curve.nodes()[0]))?;
        if config.export_mesh {
            let mesh = build_torus(&lift, config.fiber_res)?;
            let mut f = create(&dir.join("torus.mesh"))?;
            mesh.write_mesh(&mut f, true)?;
            f.flush()?;
        }
        if config.check_hopf {
            let report = torus_report(&last.curve, config.fiber_res)?;
            let mut f = create(&dir.join("torus_residuals.txt"))?;
            write_torus_table(&mut f, &report)?;
            f.flush()?;
            Some(report)
        } else {
            None
        }
    } else {
        None
    };

    Ok(RunSummary {
        termination: Some(traj.termination.clone()),
        failure: None,
        final_time: last.t,
        initial_energy: e0,
        final_energy: last.report.energy,
        baseline_energy: Some(traj.baseline_energy),
        final_sup_kappa: last.report.sup_curvature,
        accepted_steps: last.stats.accepted_steps,
        rejected_steps: last.stats.rejected_steps,
        resample_events: last.stats.resample_events,
        samples: traj.states.len(),
        energy_monotone,
        nominal_area: traj.states.iter().any(|s| !s.report.embedded),
        bound_violations,
        modulus: modulus(&last.report).ok(),
        compactness,
        residuals: config.check_residuals.then(|| residual_summary(&traj.states)),
        torus,
        snapshots,
    })
}

/// Reads a snapshot and writes the residual table next to it (or to `out`).
pub fn torus_check(snapshot_path: &Path, fiber_res: usize, out: Option<&Path>) -> Result<TorusReport> {
    let (curve, _) = snapshot::read(snapshot_path)?;
    let report = torus_report(&curve, fiber_res)?;
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| snapshot_path.with_extension("torus.txt"));
    let mut f = create(&path)?;
    write_torus_table(&mut f, &report)?;
    f.flush()?;
    Ok(report)
}

/// Reads a snapshot and writes its diagnostics as JSON next to it (or to `out`).
pub fn curve_info_file(snapshot_path: &Path, scheme: DiffScheme, out: Option<&Path>) -> Result<CurveInfo> {
    let (curve, t) = snapshot::read(snapshot_path)?;
    let info = curve_info(&curve, t, scheme)?;
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| snapshot_path.with_extension("info.json"));
    write_json(&path, &info)?;
    Ok(info)
}
