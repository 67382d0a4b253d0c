//! Elastic energy `𝔈 = ∫ 1 + |κ⃗|² dμ`, its L² gradient, and the enclosed area.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::Serialize;

use crate::curve::{is_embedded, CurveGeometry, DiscreteCurve};
use crate::error::{Error, Result};

/// Energies at or above this value lie outside the regime where embeddedness is preserved.
pub const ENERGY_THRESHOLD: f64 = 8.0;
/// Absolute slack on the strict area inequalities.
pub const STRICT_SLACK: f64 = 1e-9;
/// Relative slack on non-strict inequalities, which hold with equality on circles.
pub const DISCRETIZATION_SLACK: f64 = 1e-6;

pub fn elastic_energy(geom: &CurveGeometry) -> f64 {
    geom.integrate(|m| 1.0 + geom.curvature[m] * geom.curvature[m])
}

/// `∫ |∂_s² γ|² dμ` with the curve viewed in ℝ³.
pub fn extrinsic_energy(geom: &CurveGeometry) -> f64 {
    let k = geom.space_curvature_vector();
    geom.integrate(|m| k[m].norm_squared())
}

/// `∇𝔈 = 2(∇⊥_s)²κ⃗ + |κ⃗|²κ⃗ + κ⃗` by repeated covariant differentiation.
pub fn gradient(geom: &CurveGeometry) -> Vec<Vector3<f64>> {
    assemble(geom, &geom.normal_derivatives[1])
}

/// Same gradient with `(∇⊥_s)²κ⃗` expanded in coordinate derivatives of γ up to order four.
pub fn gradient_expanded(geom: &CurveGeometry) -> Vec<Vector3<f64>> {
    assemble(geom, &geom.second_normal_derivative_expanded())
}

fn assemble(geom: &CurveGeometry, second: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    geom.curvature_vector
        .iter()
        .zip(second)
        .map(|(k, d2)| d2 * 2.0 + k * (k.norm_squared() + 1.0))
        .collect()
}

/// Both gradient paths and their node-wise disagreement.
#[derive(Clone, Debug)]
pub struct GradientPaths {
    pub covariant: Vec<Vector3<f64>>,
    pub expanded: Vec<Vector3<f64>>,
    /// `max |covariant − expanded|`.
    pub residual: f64,
    /// `residual / max(max |covariant|, 1)`.
    pub relative_residual: f64,
}

pub fn gradient_paths(geom: &CurveGeometry) -> GradientPaths {
    let covariant = gradient(geom);
    let expanded = gradient_expanded(geom);
    let residual = covariant
        .iter()
        .zip(&expanded)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = covariant.iter().map(|v| v.norm()).fold(1.0, f64::max);
    GradientPaths {
        covariant,
        expanded,
        residual,
        relative_residual: residual / scale,
    }
}

/// `∫ κ dμ`.
pub fn total_curvature(geom: &CurveGeometry) -> f64 {
    geom.integrate(|m| geom.curvature[m])
}

/// Area of the region on the left of the curve, `2π − ∫κ dμ`, without the embeddedness check.
pub fn nominal_area(geom: &CurveGeometry) -> f64 {
    TAU - total_curvature(geom)
}

/// Area of the region on the left of an embedded curve.
pub fn enclosed_area(geom: &CurveGeometry) -> Result<f64> {
    let curve = DiscreteCurve::from_trusted(geom.nodes.clone(), geom.orientation);
    let e = is_embedded(&curve);
    if let Some((first, second)) = e.crossing {
        return Err(Error::NotEmbedded { first, second });
    }
    Ok(nominal_area(geom))
}

/// Scalar summary of a curve together with its gradient field.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub length: f64,
    pub total_curvature: f64,
    pub abs_total_curvature: f64,
    pub curvature_l2: f64,
    /// `2π − ∫κ dμ`; an actual area only when `embedded`.
    pub area: f64,
    pub embedded: bool,
    pub crossing: Option<(usize, usize)>,
    pub sup_curvature: f64,
    /// `(∫ |∇𝔈|² dμ)^{1/2}`.
    pub gradient_l2: f64,
    /// `∫ (κ²+1)⁻² |∇𝔈|² dμ`, the energy dissipation rate of the flow.
    pub dissipation: f64,
    #[serde(skip)]
    pub gradient: Vec<Vector3<f64>>,
    #[serde(skip)]
    pub dissipation_density: Vec<f64>,
}

impl EnergyReport {
    pub fn new(geom: &CurveGeometry) -> Self {
        let gradient = gradient(geom);
        let dissipation_density: Vec<f64> = gradient
            .iter()
            .zip(&geom.curvature)
            .map(|(g, k)| g.norm_squared() / (k * k + 1.0).powi(2))
            .collect();
        let curve = DiscreteCurve::from_trusted(geom.nodes.clone(), geom.orientation);
        let embedding = is_embedded(&curve);
        Self {
            energy: elastic_energy(geom),
            length: geom.length,
            total_curvature: total_curvature(geom),
            abs_total_curvature: geom.integrate(|m| geom.curvature[m].abs()),
            curvature_l2: geom.integrate(|m| geom.curvature[m].powi(2)),
            area: nominal_area(geom),
            embedded: embedding.embedded,
            crossing: embedding.crossing,
            sup_curvature: geom.sup_curvature(),
            gradient_l2: geom.integrate(|m| gradient[m].norm_squared()).sqrt(),
            dissipation: geom.integrate(|m| dissipation_density[m]),
            gradient,
            dissipation_density,
        }
    }

    /// The area, or `NotEmbedded` for a self-crossing curve.
    pub fn checked_area(&self) -> Result<f64> {
        match self.crossing {
            Some((first, second)) => Err(Error::NotEmbedded { first, second }),
            None => Ok(self.area),
        }
    }
}

/// One evaluated inequality.
#[derive(Clone, Debug, Serialize)]
pub struct Finding {
    pub check: &'static str,
    pub passed: bool,
    /// Quantity that should satisfy the bound.
    pub value: f64,
    pub bound: f64,
    pub note: Option<String>,
}

impl Finding {
    pub(crate) fn at_most(check: &'static str, value: f64, bound: f64) -> Self {
        let slack = DISCRETIZATION_SLACK * bound.abs().max(1.0);
        Self::new(check, value <= bound + slack, value, bound)
    }

    /// `value ≥ bound`, with slack relative to `scale`, the size of the terms forming `bound`.
    pub(crate) fn at_least(check: &'static str, value: f64, bound: f64, scale: f64) -> Self {
        let slack = DISCRETIZATION_SLACK * scale.abs().max(1.0);
        Self::new(check, value >= bound - slack, value, bound)
    }

    pub(crate) fn new(check: &'static str, passed: bool, value: f64, bound: f64) -> Self {
        Self {
            check,
            passed,
            value,
            bound,
            note: None,
        }
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Evaluates the a-priori bounds of the flow against the initial energy `e0`.
pub fn check_bounds(report: &EnergyReport, e0: f64) -> Vec<Finding> {
    let mut out = vec![
        Finding::at_most("length_le_initial_energy", report.length, e0),
        Finding::at_most("curvature_l2_le_initial_energy", report.curvature_l2, e0),
        Finding::at_least(
            "length_lower_bound",
            report.length,
            PI.min(3.0 * PI * PI / report.energy),
            PI,
        ),
        Finding::at_least(
            "total_curvature_inequality",
            report.abs_total_curvature.powi(2),
            4.0 * PI * PI - report.length.powi(2),
            4.0 * PI * PI,
        ),
    ];
    let regime = Finding::new("energy_below_threshold", e0 < ENERGY_THRESHOLD, e0, ENERGY_THRESHOLD);
    if e0 < ENERGY_THRESHOLD {
        out.push(regime);
        out.push(Finding::at_least("length_at_least_pi", report.length, PI, PI));
        let note = (!report.embedded).then_some("curve not embedded; nominal area");
        let mut lo = Finding::new(
            "area_lower_bound",
            report.area > 2.0 * (PI - 2.0) - STRICT_SLACK,
            report.area,
            2.0 * (PI - 2.0),
        );
        let mut hi = Finding::new(
            "area_upper_bound",
            report.area < 2.0 * (PI + 2.0) + STRICT_SLACK,
            report.area,
            2.0 * (PI + 2.0),
        );
        if let Some(n) = note {
            lo = lo.with_note(n);
            hi = hi.with_note(n);
        }
        out.push(lo);
        out.push(hi);
    } else {
        log::warn!("initial energy {e0:.6} is not below {ENERGY_THRESHOLD}");
        out.push(regime.with_note("outside the small-energy regime; conditional bounds skipped"));
    }
    out
}
