use nalgebra::Vector3;

use super::{differentiate, DiffScheme, DiscreteCurve, Orientation};
use crate::error::{Error, Result};

/// Per-node differential geometry of a discrete curve on S².
///
/// The frame `(γ, T, ν)` is orthonormal with `ν = γ × T`, and `T` follows the
/// stored orientation. The curvature vector `κ⃗` and its even normal derivatives
/// do not depend on the orientation; `κ`, `T` and odd derivatives flip sign.
#[derive(Clone, Debug)]
pub struct CurveGeometry {
    pub scheme: DiffScheme,
    pub orientation: Orientation,
    /// Parameter spacing `2π/N`.
    pub h: f64,
    pub nodes: Vec<Vector3<f64>>,
    /// `∂_x^k γ` for `k = 1..=4`.
    pub derivatives: [Vec<Vector3<f64>>; 4],
    /// `|∂_x γ|`.
    pub speed: Vec<f64>,
    /// Arclength weights `dμ = |∂_x γ| h`.
    pub weight: Vec<f64>,
    pub tangent: Vec<Vector3<f64>>,
    pub normal: Vec<Vector3<f64>>,
    pub curvature_vector: Vec<Vector3<f64>>,
    /// Signed curvature `⟨κ⃗, ν⟩`.
    pub curvature: Vec<f64>,
    /// `(∇⊥_s)^k κ⃗` for `k = 1, 2, 3`, by repeated covariant differentiation.
    pub normal_derivatives: [Vec<Vector3<f64>>; 3],
    pub length: f64,
}

/// Speeds below this fraction of the mean speed count as degenerate.
const SPEED_FLOOR: f64 = 1e-10;

pub fn geometry(curve: &DiscreteCurve, scheme: DiffScheme) -> Result<CurveGeometry> {
    let nodes = curve.nodes().to_vec();
    let n = nodes.len();
    let h = curve.spacing();
    let sign = curve.orientation().sign();
    let d1 = differentiate(&nodes, 1, scheme)?;
    let d2 = differentiate(&nodes, 2, scheme)?;
    let d3 = differentiate(&nodes, 3, scheme)?;
    let d4 = differentiate(&nodes, 4, scheme)?;

    let tangential: Vec<Vector3<f64>> = nodes.iter().zip(&d1).map(|(g, v)| v - g * g.dot(v)).collect();
    let speed: Vec<f64> = tangential.iter().map(|v| v.norm()).collect();
    let mean_speed = speed.iter().sum::<f64>() / n as f64;
    if let Some(node) = speed
        .iter()
        .position(|&s| !(s > SPEED_FLOOR * mean_speed.max(f64::MIN_POSITIVE)))
    {
        return Err(Error::DegenerateCurve {
            node,
            reason: "speed underflow",
        });
    }
    let tangent: Vec<Vector3<f64>> = tangential.iter().zip(&speed).map(|(v, s)| v * (sign / s)).collect();
    let normal: Vec<Vector3<f64>> = nodes.iter().zip(&tangent).map(|(g, t)| g.cross(t)).collect();

    let dss: Vec<Vector3<f64>> = (0..n).map(|m| arclength_second(&d1[m], &d2[m])).collect();
    let curvature_vector: Vec<Vector3<f64>> = dss.iter().zip(&normal).map(|(a, nu)| nu * a.dot(nu)).collect();
    let curvature: Vec<f64> = curvature_vector.iter().zip(&normal).map(|(k, nu)| k.dot(nu)).collect();

    let normal_derivative = |field: &[Vector3<f64>]| -> Result<Vec<Vector3<f64>>> {
        let dx = differentiate(field, 1, scheme)?;
        Ok(dx
            .iter()
            .zip(&speed)
            .zip(&normal)
            .map(|((d, s), nu)| nu * (d.dot(nu) * sign / s))
            .collect())
    };
    let nd1 = normal_derivative(&curvature_vector)?;
    let nd2 = normal_derivative(&nd1)?;
    let nd3 = normal_derivative(&nd2)?;

    let weight: Vec<f64> = speed.iter().map(|s| s * h).collect();
    let length = weight.iter().sum();

    Ok(CurveGeometry {
        scheme,
        orientation: curve.orientation(),
        h,
        nodes,
        derivatives: [d1, d2, d3, d4],
        speed,
        weight,
        tangent,
        normal,
        curvature_vector,
        curvature,
        normal_derivatives: [nd1, nd2, nd3],
        length,
    })
}

/// `∂_s² γ` in ℝ³ from `γ'`, `γ''`, with `∂_s = ∂_x / |γ'|`.
fn arclength_second(d1: &Vector3<f64>, d2: &Vector3<f64>) -> Vector3<f64> {
    let p = d1.norm_squared();
    let u = p.powf(-0.5);
    let du = -d1.dot(d2) * p.powf(-1.5);
    d2 * (u * u) + d1 * (u * du)
}

impl CurveGeometry {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sup_curvature(&self) -> f64 {
        self.curvature.iter().fold(0.0, |a, k| a.max(k.abs()))
    }

    /// `Σ f_m dμ_m`.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weight.iter().enumerate().map(|(m, w)| f(m) * w).sum()
    }

    /// Full second arclength derivative `∂_s² γ` in ℝ³ (curvature vector of γ as a space curve).
    pub fn space_curvature_vector(&self) -> Vec<Vector3<f64>> {
        self.derivatives[0]
            .iter()
            .zip(&self.derivatives[1])
            .map(|(a, b)| arclength_second(a, b))
            .collect()
    }

    /// `∂_s⁴ γ` from the coordinate derivatives `γ', …, γ''''` by the chain rule.
    pub fn fourth_arclength_derivative(&self) -> Vec<Vector3<f64>> {
        let [d1, d2, d3, d4] = &self.derivatives;
        (0..self.len())
            .map(|m| {
                let (g1, g2, g3, g4) = (d1[m], d2[m], d3[m], d4[m]);
                let p = g1.norm_squared();
                let p1 = 2.0 * g1.dot(&g2);
                let p2 = 2.0 * (g2.norm_squared() + g1.dot(&g3));
                let p3 = 2.0 * (3.0 * g2.dot(&g3) + g1.dot(&g4));
                let u = p.powf(-0.5);
                let u1 = -0.5 * p.powf(-1.5) * p1;
                let u2 = 0.75 * p.powf(-2.5) * p1 * p1 - 0.5 * p.powf(-1.5) * p2;
                let u3 = -1.875 * p.powf(-3.5) * p1.powi(3) + 2.25 * p.powf(-2.5) * p1 * p2 - 0.5 * p.powf(-1.5) * p3;
                g4 * u.powi(4)
                    + g3 * (6.0 * u.powi(3) * u1)
                    + g2 * (7.0 * u * u * u1 * u1 + 4.0 * u.powi(3) * u2)
                    + g1 * (u * u1.powi(3) + 4.0 * u * u * u1 * u2 + u.powi(3) * u3)
            })
            .collect()
    }

    /// `(∇⊥_s)² κ⃗` from coordinate derivatives: the normal part of `∂_s⁴γ`
    /// plus `|∂_s²γ|² κ⃗`.
    pub fn second_normal_derivative_expanded(&self) -> Vec<Vector3<f64>> {
        let d4s = self.fourth_arclength_derivative();
        let dss = self.space_curvature_vector();
        (0..self.len())
            .map(|m| {
                let nu = self.normal[m];
                nu * d4s[m].dot(&nu) + self.curvature_vector[m] * dss[m].norm_squared()
            })
            .collect()
    }

    /// Scalar `∂_s^k κ = ⟨(∇⊥_s)^k κ⃗, ν⟩`.
    pub fn curvature_derivative(&self, k: usize) -> Vec<f64> {
        let field = match k {
            0 => &self.curvature_vector,
            1..=3 => &self.normal_derivatives[k - 1],
            _ => panic!("curvature derivatives are stored up to order 3"),
        };
        field.iter().zip(&self.normal).map(|(f, nu)| f.dot(nu)).collect()
    }

    /// Arclength derivative of a scalar node field, `∂_s f = ±∂_x f / |γ'|`.
    pub fn arclength_derivative(&self, f: &[f64]) -> Result<Vec<f64>> {
        let sign = self.orientation.sign();
        let dx = super::differentiate_scalar(f, 1, self.scheme)?;
        Ok(dx.iter().zip(&self.speed).map(|(d, s)| d * sign / s).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, PI, TAU};

    fn max_norm(v: &[Vector3<f64>]) -> f64 {
        v.iter().fold(0.0, |a, x| a.max(x.norm()))
    }

    #[test]
    fn great_circle_is_geodesic() {
        for scheme in [DiffScheme::FiniteDifference, DiffScheme::Fourier] {
            let g = geometry(&DiscreteCurve::great_circle(128).unwrap(), scheme).unwrap();
            assert!(max_norm(&g.curvature_vector) < 1e-12);
            // The stencil's eigenvalue on the first mode is 1 - h^4/30 + O(h^6).
            let expected = match scheme {
                DiffScheme::Fourier => TAU,
                DiffScheme::FiniteDifference => TAU * (1.0 - g.h.powi(4) / 30.0),
            };
            assert!((g.length - expected).abs() < 1e-9, "{scheme:?}: {}", g.length);
        }
    }

    #[test]
    fn latitude_circle_closed_form() {
        // Closed-form oracle: geodesic curvature cot θ, circumference 2π sin θ.
        let theta = FRAC_PI_3;
        let g = geometry(
            &DiscreteCurve::latitude(256, theta).unwrap(),
            DiffScheme::FiniteDifference,
        )
        .unwrap();
        let cot = 1.0 / theta.tan();
        assert!((cot - 0.577_350_269_189_625_8).abs() < 1e-15);
        for k in &g.curvature {
            assert!((k - cot).abs() < 1e-7);
        }
        assert!((g.length - TAU * theta.sin()).abs() < 1e-6);
        assert!((TAU * theta.sin() - 5.441_398_092_702_653).abs() < 1e-12);
        assert!(max_norm(&g.normal_derivatives[0]) < 1e-9);
        assert!(max_norm(&g.normal_derivatives[1]) < 1e-8);
        // Normal points toward the enclosed pole.
        assert!(g.normal[0][2] > 0.0);
    }

    #[test]
    fn reversed_orientation_flips_signed_curvature() {
        let c = DiscreteCurve::latitude(64, 1.0).unwrap();
        let f = geometry(&c, DiffScheme::Fourier).unwrap();
        let r = geometry(&c.clone().with_orientation(Orientation::Reverse), DiffScheme::Fourier).unwrap();
        for m in 0..64 {
            assert!((f.curvature[m] + r.curvature[m]).abs() < 1e-12);
            assert!((f.curvature_vector[m] - r.curvature_vector[m]).norm() < 1e-12);
        }
    }

    /// Smooth non-circular test curve: tilted latitude with a few Fourier modes.
    fn wobbly(n: usize) -> DiscreteCurve {
        DiscreteCurve::from_fn(n, |x| {
            let theta = 1.1 + 0.15 * (2.0 * x).cos() - 0.08 * (3.0 * x + 0.4).sin();
            let phi = x + 0.1 * x.sin();
            Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
        })
        .unwrap()
    }

    #[test]
    fn frame_and_orthogonality() {
        let g = geometry(&wobbly(256), DiffScheme::FiniteDifference).unwrap();
        for m in 0..g.len() {
            let k = g.curvature_vector[m];
            assert!(k.dot(&g.tangent[m]).abs() < 1e-12);
            assert!(k.dot(&g.nodes[m]).abs() < 1e-12);
            assert!((k.norm() - g.curvature[m].abs()).abs() < 1e-12);
            assert!(g.nodes[m].dot(&g.tangent[m]).abs() < 1e-14);
        }
    }

    #[test]
    fn frenet_relation_on_the_sphere() {
        // ∇_s T has no T component; its ν component is κ.
        let c = wobbly(512);
        let g = geometry(&c, DiffScheme::Fourier).unwrap();
        let dt = differentiate(&g.tangent, 1, DiffScheme::Fourier).unwrap();
        for m in 0..g.len() {
            let ds_t = dt[m] / g.speed[m];
            let cov = ds_t - g.nodes[m] * g.nodes[m].dot(&ds_t);
            assert!(cov.dot(&g.tangent[m]).abs() < 1e-9);
            assert!((cov.dot(&g.normal[m]) - g.curvature[m]).abs() < 1e-9);
        }
    }

    #[test]
    fn expanded_second_derivative_matches_covariant_path() {
        let mut prev = f64::INFINITY;
        for n in [128, 256, 512] {
            let g = geometry(&wobbly(n), DiffScheme::FiniteDifference).unwrap();
            let exp = g.second_normal_derivative_expanded();
            let err = exp
                .iter()
                .zip(&g.normal_derivatives[1])
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < prev / 8.0 || err < 1e-9, "n = {n}: {err} vs {prev}");
            prev = err;
        }
        let g = geometry(&wobbly(256), DiffScheme::Fourier).unwrap();
        let exp = g.second_normal_derivative_expanded();
        for (a, b) in exp.iter().zip(&g.normal_derivatives[1]) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn latitude_refinement_rate() {
        let theta = 0.9;
        let err = |n: usize| {
            let g = geometry(
                &DiscreteCurve::latitude(n, theta).unwrap(),
                DiffScheme::FiniteDifference,
            )
            .unwrap();
            g.curvature
                .iter()
                .map(|k| (k - 1.0 / theta.tan()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        assert!((e1 / e2).log2() > 3.9, "{e1} {e2}");
    }

    #[test]
    fn degenerate_speed_is_rejected() {
        // Nodes bunch up: the curve stops at x = π.
        let c = DiscreteCurve::from_fn(64, |x| {
            let y = x - x.sin();
            Vector3::new(y.cos(), y.sin(), 0.0)
        });
        // Node 0 has zero speed under this reparametrization.
        let g = c.and_then(|c| geometry(&c, DiffScheme::Fourier));
        match g {
            Err(Error::DegenerateCurve { node, .. }) => assert_eq!(node, 0),
            Ok(g) => assert!(g.speed[0] < 1e-3 * PI, "speed {}", g.speed[0]),
            Err(e) => panic!("{e}"),
        }
    }
}
