//! Conformal class of a Hopf torus: the lattice modulus `τ = A/4π + iL/4π` and its
//! reduction to the fundamental domain of PSL₂(ℤ).

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::energy::{EnergyReport, Finding, ENERGY_THRESHOLD};
use crate::error::{Error, Result};

/// Tolerance for the fundamental-domain boundary ties.
const TIE_TOL: f64 = 1e-12;
const MAX_REDUCTION_STEPS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    /// `τ ↦ τ + 1`
    T,
    /// `τ ↦ τ − 1`
    TInv,
    /// `τ ↦ −1/τ`
    S,
}

impl Generator {
    pub fn apply(self, tau: Complex64) -> Complex64 {
        match self {
            Generator::T => tau + 1.0,
            Generator::TInv => tau - 1.0,
            Generator::S => -tau.inv(),
        }
    }

    fn letter(self) -> char {
        match self {
            Generator::T => 'T',
            Generator::TInv => 't',
            Generator::S => 'S',
        }
    }
}

/// Generators in the order they are applied.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Word(pub Vec<Generator>);

impl Word {
    pub fn apply(&self, tau: Complex64) -> Complex64 {
        self.0.iter().fold(tau, |t, g| g.apply(t))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

/// `T` and `t` (inverse) and `S`, left to right in application order; `id` when empty.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("id");
        }
        self.0.iter().try_for_each(|g| write!(f, "{}", g.letter()))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn serialize_complex<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// Reduces `τ` into `|Re τ| ≤ ½`, `|τ| ≥ 1`, with `Re τ ≥ 0` on the boundary.
pub fn reduce(tau: Complex64) -> (Complex64, Word) {
    let mut t = tau;
    let mut word = Vec::new();
    for _ in 0..MAX_REDUCTION_STEPS {
        let shift = if t.re.abs() <= 0.5 + TIE_TOL { 0.0 } else { t.re.round() };
        let g = if shift > 0.0 { Generator::TInv } else { Generator::T };
        for _ in 0..shift.abs() as usize {
            t = g.apply(t);
            word.push(g);
        }
        if t.norm_sqr() < 1.0 - TIE_TOL {
            t = Generator::S.apply(t);
            word.push(Generator::S);
            continue;
        }
        break;
    }
    if t.re < -0.5 + TIE_TOL {
        t = Generator::T.apply(t);
        word.push(Generator::T);
    } else if t.re < 0.0 && t.norm_sqr() < 1.0 + TIE_TOL {
        t = Generator::S.apply(t);
        word.push(Generator::S);
    }
    (t, Word(word))
}

/// `|Re τ| ≤ ½` and `|τ| ≥ 1`, up to the tie tolerance.
pub fn in_fundamental_domain(tau: Complex64) -> bool {
    tau.im > 0.0 && tau.re.abs() <= 0.5 + TIE_TOL && tau.norm_sqr() >= 1.0 - TIE_TOL
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulusPoint {
    #[serde(serialize_with = "serialize_complex")]
    pub raw: Complex64,
    #[serde(serialize_with = "serialize_complex")]
    pub reduced: Complex64,
    pub word: Word,
}

impl ModulusPoint {
    /// From the left-hand enclosed area and the length of the profile curve.
    pub fn from_area_length(area: f64, length: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::DegenerateCurve {
                node: 0,
                reason: "non-positive length",
            });
        }
        let raw = Complex64::new(area / (4.0 * PI), length / (4.0 * PI));
        let (reduced, word) = reduce(raw);
        Ok(Self { raw, reduced, word })
    }
}

pub fn modulus(report: &EnergyReport) -> Result<ModulusPoint> {
    ModulusPoint::from_area_length(report.checked_area()?, report.length)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompactnessReport {
    pub raw_im_min: f64,
    pub raw_im_max: f64,
    pub reduced_im_min: f64,
    pub reduced_im_max: f64,
    /// Upper bound on `Im τ*` implied by the raw bounds.
    pub reduced_im_bound: f64,
    pub findings: Vec<Finding>,
}

impl CompactnessReport {
    pub fn passed(&self) -> bool {
        self.findings.iter().all(|f| f.passed)
    }
}

/// Checks `Im τ = L/4π ∈ [1/4, 𝔈₀/4π]` along a trajectory and that `τ*` stays in
/// `Im τ* ≤ max(𝔈₀/4π, 4)`, which the raw bounds force.
pub fn compactness_monitor(points: &[ModulusPoint], e0: f64) -> Result<CompactnessReport> {
    if e0 >= ENERGY_THRESHOLD {
        return Err(Error::RegimeViolation { energy: e0 });
    }
    let fold = |f: fn(&ModulusPoint) -> f64| {
        points
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (raw_im_min, raw_im_max) = fold(|p| p.raw.im);
    let (reduced_im_min, reduced_im_max) = fold(|p| p.reduced.im);
    let upper = e0 / (4.0 * PI);
    let reduced_im_bound = upper.max(4.0);
    let findings = vec![
        Finding::at_least("raw_im_lower", raw_im_min, 0.25, 0.25),
        Finding::at_most("raw_im_upper", raw_im_max, upper),
        Finding::at_most("reduced_im_upper", reduced_im_max, reduced_im_bound),
        Finding::new(
            "reduced_in_fundamental_domain",
            points.iter().all(|p| in_fundamental_domain(p.reduced)),
            reduced_im_min,
            3f64.sqrt() / 2.0,
        ),
    ];
    Ok(CompactnessReport {
        raw_im_min,
        raw_im_max,
        reduced_im_min,
        reduced_im_max,
        reduced_im_bound,
        findings,
    })
}
