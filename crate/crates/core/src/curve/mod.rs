//! Closed regular curves on S², sampled on a uniform periodic parameter grid.

mod diff;
mod embed;
mod geometry;
mod interp;
mod resample;
pub mod snapshot;

use std::f64::consts::TAU;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub(crate) use diff::D4;
pub use diff::{
    differentiate, differentiate_scalar, fourier_derivative, periodic_stencil_derivative, stencil, stencil_derivative,
    DiffScheme, Linear, MIN_NODES,
};
pub use embed::{is_embedded, Embedding};
pub use geometry::{geometry, CurveGeometry};
pub use interp::{PeriodicIntegral, TrigInterpolant};
pub use resample::resample_uniform_arclength;

use crate::error::{Error, Result};
use crate::quat::{rotate_raw, Quaternion, UNIT_TOL};

/// Chord ratio above which a curve is reported as not quasi-uniform.
pub const QUASI_UNIFORM_RATIO: f64 = 10.0;

/// Traversal sense relative to increasing node index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    Forward,
    Reverse,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Forward => 1.0,
            Orientation::Reverse => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Forward => Orientation::Reverse,
            Orientation::Reverse => Orientation::Forward,
        }
    }
}

/// A closed curve γ: S¹ → S² given by its values at `x_m = 2πm/N`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCurve {
    nodes: Vec<Vector3<f64>>,
    orientation: Orientation,
}

impl DiscreteCurve {
    /// Validates unit norm of every node and a strictly positive minimal chord.
    pub fn new(nodes: Vec<Vector3<f64>>, orientation: Orientation) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(Error::TooCoarse {
                nodes: nodes.len(),
                min: MIN_NODES,
            });
        }
        if let Some(bad) = nodes.iter().find(|p| (p.norm() - 1.0).abs() > UNIT_TOL) {
            return Err(Error::NonUnitInput { norm: bad.norm() });
        }
        let curve = Self { nodes, orientation };
        let (min, max) = curve.chord_range();
        if min <= 0.0 {
            let node = curve.chords().position(|c| c <= 0.0).unwrap_or(0);
            return Err(Error::DegenerateCurve {
                node,
                reason: "repeated node",
            });
        }
        if max / min >= QUASI_UNIFORM_RATIO {
            log::warn!("curve is not quasi-uniform: chord ratio {:.3}", max / min);
        }
        Ok(curve)
    }

    /// Projects arbitrary non-zero points onto S² before validating.
    pub fn from_points(points: Vec<Vector3<f64>>, orientation: Orientation) -> Result<Self> {
        Self::new(points.into_iter().map(|p| p.normalize()).collect(), orientation)
    }

    /// Samples `f` at the uniform grid and projects the values onto S².
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Vector3<f64>) -> Result<Self> {
        Self::from_points(
            (0..n).map(|m| f(TAU * m as f64 / n as f64)).collect(),
            Orientation::Forward,
        )
    }

    /// The equator `(cos x, sin x, 0)` in `(1, j, k)` coordinates.
    pub fn great_circle(n: usize) -> Result<Self> {
        Self::from_fn(n, |x| Vector3::new(x.cos(), x.sin(), 0.0))
    }

    /// Circle at polar angle `theta` from the pole `(0, 0, 1)`, counterclockwise seen
    /// from that pole, so the polar cap lies on its left.
    pub fn latitude(n: usize, theta: f64) -> Result<Self> {
        let (s, c) = theta.sin_cos();
        Self::from_fn(n, |x| Vector3::new(s * x.cos(), s * x.sin(), c))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vector3<f64>] {
        &self.nodes
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    /// Parameter spacing `2π/N`.
    pub fn spacing(&self) -> f64 {
        TAU / self.nodes.len() as f64
    }

    pub fn node(&self, m: isize) -> Vector3<f64> {
        self.nodes[m.rem_euclid(self.nodes.len() as isize) as usize]
    }

    pub fn chords(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.nodes.len();
        (0..n).map(move |m| (self.nodes[(m + 1) % n] - self.nodes[m]).norm())
    }

    pub fn chord_range(&self) -> (f64, f64) {
        self.chords()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), c| (lo.min(c), hi.max(c)))
    }

    pub fn is_quasi_uniform(&self) -> bool {
        let (lo, hi) = self.chord_range();
        hi / lo < QUASI_UNIFORM_RATIO
    }

    /// Same trace traversed in the stored orientation with `Forward` flag:
    /// a `Reverse` curve has its node order reversed, keeping node 0 first.
    pub fn to_forward(&self) -> Self {
        match self.orientation {
            Orientation::Forward => self.clone(),
            Orientation::Reverse => {
                let n = self.nodes.len();
                let nodes = (0..n).map(|m| self.nodes[(n - m) % n]).collect();
                Self {
                    nodes,
                    orientation: Orientation::Forward,
                }
            }
        }
    }

    /// Applies the rotation `p ↦ r̃·p·r` to every node.
    pub fn rotated(&self, r: Quaternion) -> Self {
        let r = r.normalize();
        Self {
            nodes: self.nodes.iter().map(|p| rotate_raw(p, &r).normalize()).collect(),
            orientation: self.orientation,
        }
    }

    /// Cyclic relabelling `m ↦ m + shift`.
    pub fn shifted(&self, shift: usize) -> Self {
        let n = self.nodes.len();
        Self {
            nodes: (0..n).map(|m| self.nodes[(m + shift) % n]).collect(),
            orientation: self.orientation,
        }
    }

    pub(crate) fn from_trusted(nodes: Vec<Vector3<f64>>, orientation: Orientation) -> Self {
        Self { nodes, orientation }
    }

    pub fn differentiate(&self, order: usize, scheme: DiffScheme) -> Result<Vec<Vector3<f64>>> {
        differentiate(&self.nodes, order, scheme)
    }

    /// Symmetric Hausdorff distance between the node sets (chordal).
    pub fn hausdorff_nodes(&self, other: &Self) -> f64 {
        let one_way = |a: &[Vector3<f64>], b: &[Vector3<f64>]| {
            a.iter()
                .map(|p| b.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        one_way(&self.nodes, &other.nodes).max(one_way(&other.nodes, &self.nodes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            DiscreteCurve::new(vec![Vector3::x(); 8], Orientation::Forward),
            Err(Error::TooCoarse { .. })
        ));
        let mut nodes = DiscreteCurve::great_circle(32).unwrap().nodes().to_vec();
        nodes[3] *= 1.01;
        assert!(matches!(
            DiscreteCurve::new(nodes.clone(), Orientation::Forward),
            Err(Error::NonUnitInput { .. })
        ));
        nodes[3] = nodes[4];
        assert!(matches!(
            DiscreteCurve::new(nodes, Orientation::Forward),
            Err(Error::DegenerateCurve { node: 3, .. })
        ));
    }

    #[test]
    fn quasi_uniformity_is_reported_not_enforced() {
        let curve = DiscreteCurve::from_fn(64, |x| {
            let y = x + 0.95 * x.sin();
            Vector3::new(y.cos(), y.sin(), 0.0)
        })
        .unwrap();
        assert!(!curve.is_quasi_uniform());
        assert!(DiscreteCurve::great_circle(64).unwrap().is_quasi_uniform());
    }

    #[test]
    fn to_forward_reverses_traversal() {
        let c = DiscreteCurve::latitude(32, 1.0).unwrap();
        let r = c.clone().with_orientation(Orientation::Reverse).to_forward();
        assert_eq!(r.node(0), c.node(0));
        assert_eq!(r.node(1), c.node(-1));
        assert_eq!(r.orientation(), Orientation::Forward);
    }
}
