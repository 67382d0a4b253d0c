//! Quaternions, the Hopf fibration `q ↦ q̃·q` and the rotation action of S³ on S².
//!
//! Components are ordered `(w, x, y, z)` in the basis `{1, i, j, k}`. The sphere
//! S² sits inside `span{1, j, k}`; its 3-vector coordinates are the `(w, y, z)`
//! components in that order.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Tolerance on `|q| = 1` for inputs that must lie on a unit sphere.
pub const UNIT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// `e^{iφ} = cos φ + i sin φ`, the fiber action of the Hopf map.
    pub fn exp_i(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self::new(c, s, 0.0, 0.0)
    }

    /// Embeds a point of `span{1, j, k}` given in `(1, j, k)` coordinates.
    pub fn from_s2_coords(p: &Vector3<f64>) -> Self {
        Self::new(p[0], 0.0, p[1], p[2])
    }

    /// The `(1, j, k)` coordinates; the `i` component is dropped.
    pub fn s2_coords(&self) -> Vector3<f64> {
        Vector3::new(self.w, self.y, self.z)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// `q ↦ q̃`: fixes 1, j, k and sends i to −i.
    pub fn involution(&self) -> Self {
        Self::new(self.w, -self.x, self.y, self.z)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalize(&self) -> Self {
        *self * (1.0 / self.norm())
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        let (a1, b1, c1, d1) = (self.w, self.x, self.y, self.z);
        let (a2, b2, c2, d2) = (o.w, o.x, o.y, o.z);
        Quaternion::new(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )
    }
}

/// A point of S³ ⊂ ℍ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint3(Quaternion);

impl SpherePoint3 {
    pub fn new(q: Quaternion) -> Result<Self> {
        check_unit(q.norm())?;
        Ok(Self(q))
    }

    /// Projects any non-zero quaternion onto S³.
    pub fn normalized(q: Quaternion) -> Self {
        Self(q.normalize())
    }

    pub fn quaternion(&self) -> Quaternion {
        self.0
    }

    /// `q̃·q`, always a unit element of `span{1, j, k}`.
    pub fn hopf(&self) -> SpherePoint2 {
        SpherePoint2(hopf_raw(&self.0).s2_coords())
    }

    /// Group product, renormalized.
    pub fn compose(&self, other: &Self) -> Self {
        Self::normalized(self.0 * other.0)
    }
}

/// A point of S² = S³ ∩ span{1, j, k}, in `(1, j, k)` coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint2(Vector3<f64>);

impl SpherePoint2 {
    pub fn new(p: Vector3<f64>) -> Result<Self> {
        check_unit(p.norm())?;
        Ok(Self(p))
    }

    pub fn normalized(p: Vector3<f64>) -> Self {
        Self(p.normalize())
    }

    pub fn coords(&self) -> Vector3<f64> {
        self.0
    }
}

fn check_unit(norm: f64) -> Result<()> {
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitInput { norm });
    }
    Ok(())
}

pub fn involution(q: Quaternion) -> Quaternion {
    q.involution()
}

#[inline]
pub(crate) fn hopf_raw(q: &Quaternion) -> Quaternion {
    q.involution() * *q
}

/// The Hopf fibration `π(q) = q̃·q`.
pub fn hopf_map(q: Quaternion) -> Result<SpherePoint2> {
    Ok(SpherePoint3::new(q)?.hopf())
}

/// `Dπ_q(v) = ṽ·q + q̃·v` without any precondition checks, as a quaternion.
#[inline]
pub(crate) fn hopf_differential_raw(q: &Quaternion, v: &Quaternion) -> Quaternion {
    v.involution() * *q + q.involution() * *v
}

/// `Dπ_q(v)` for a unit `q` and a tangent vector `v ⟂ q`, in `(1, j, k)` coordinates.
pub fn hopf_differential(q: Quaternion, v: Quaternion) -> Result<Vector3<f64>> {
    check_unit(q.norm())?;
    let dot = q.dot(&v);
    if dot.abs() > UNIT_TOL * v.norm().max(1.0) {
        return Err(Error::NonTangentInput { dot });
    }
    Ok(hopf_differential_raw(&q, &v).s2_coords())
}

#[inline]
pub(crate) fn rotate_raw(p: &Vector3<f64>, r: &Quaternion) -> Vector3<f64> {
    (r.involution() * Quaternion::from_s2_coords(p) * *r).s2_coords()
}

/// The rotation `p ↦ r̃·p·r` of S² induced by `r ∈ S³`.
pub fn rotate_s2(p: Vector3<f64>, r: Quaternion) -> Result<SpherePoint2> {
    check_unit(p.norm())?;
    check_unit(r.norm())?;
    Ok(SpherePoint2::normalized(rotate_raw(&p, &r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: Quaternion, b: Quaternion, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn basis_products() {
        let (one, i, j, k) = (Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K);
        assert_eq!(i * i, -one);
        assert_eq!(j * j, -one);
        assert_eq!(k * k, -one);
        assert_eq!(i * j * k, -one);
        assert_eq!(i * j, k);
        assert_eq!(j * k, i);
        assert_eq!(k * i, j);
    }

    #[test]
    fn involution_examples() {
        assert_eq!(involution(Quaternion::ONE), Quaternion::ONE);
        assert_eq!(involution(Quaternion::I), -Quaternion::I);
        assert_eq!(
            involution(Quaternion::new(2.0, 3.0, 4.0, 5.0)),
            Quaternion::new(2.0, -3.0, 4.0, 5.0)
        );
    }

    #[test]
    fn hopf_map_examples() {
        assert_eq!(hopf_map(Quaternion::ONE).unwrap().coords(), Vector3::new(1.0, 0.0, 0.0));
        let q = Quaternion::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0);
        let p = hopf_map(q).unwrap().coords();
        assert_abs_diff_eq!(p, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        let p = hopf_map(Quaternion::J).unwrap().coords();
        assert_abs_diff_eq!(p, Vector3::new(-1.0, 0.0, 0.0), epsilon = 1e-15);
        for phi in [0.3, 1.0, 2.5, -4.0] {
            let p = hopf_map(Quaternion::exp_i(phi)).unwrap().coords();
            assert_abs_diff_eq!(p, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        }
        assert!(matches!(
            hopf_map(Quaternion::new(1.1, 0.0, 0.0, 0.0)),
            Err(Error::NonUnitInput { .. })
        ));
    }

    #[test]
    fn hopf_differential_examples() {
        let d = hopf_differential(Quaternion::ONE, Quaternion::J).unwrap();
        assert_abs_diff_eq!(d, Vector3::new(0.0, 2.0, 0.0), epsilon = 1e-15);
        let d = hopf_differential(Quaternion::ONE, Quaternion::I).unwrap();
        assert_abs_diff_eq!(d, Vector3::zeros(), epsilon = 1e-15);
        assert!(matches!(
            hopf_differential(Quaternion::ONE, Quaternion::ONE),
            Err(Error::NonTangentInput { .. })
        ));
    }

    #[test]
    fn rotation_about_third_axis_family() {
        // r = e^{jθ/2} fixes k and rotates the (1, j) plane by θ.
        let basis = [Vector3::x(), Vector3::y(), Vector3::z()];
        for step in 0..12 {
            let theta = step as f64 * PI / 6.0;
            let r = Quaternion::new((theta / 2.0).cos(), 0.0, (theta / 2.0).sin(), 0.0);
            let (s, c) = theta.sin_cos();
            // 3x3 rotation matrix oracle in the (1, j, k) frame.
            let m = nalgebra::Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
            for p in basis {
                let got = rotate_s2(p, r).unwrap().coords();
                assert_abs_diff_eq!(got, m * p, epsilon = 1e-14);
            }
        }
        assert_abs_diff_eq!(
            rotate_s2(Vector3::new(0.0, 0.6, 0.8), Quaternion::ONE)
                .unwrap()
                .coords(),
            Vector3::new(0.0, 0.6, 0.8),
            epsilon = 1e-15
        );
    }

    fn unit_quaternion() -> impl Strategy<Value = Quaternion> {
        prop::array::uniform4(-1.0f64..1.0)
            .prop_filter("non-degenerate", |a| a.iter().map(|v| v * v).sum::<f64>() > 1e-2)
            .prop_map(|a| Quaternion::from_array(a).normalize())
    }

    fn s2_point() -> impl Strategy<Value = Vector3<f64>> {
        prop::array::uniform3(-1.0f64..1.0)
            .prop_filter("non-degenerate", |a| a.iter().map(|v| v * v).sum::<f64>() > 1e-2)
            .prop_map(|a| Vector3::from(a).normalize())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn conjugation_reverses_products(p in unit_quaternion(), q in unit_quaternion()) {
            prop_assert!(close((p * q).conj(), q.conj() * p.conj(), 1e-14));
        }

        #[test]
        fn associativity(p in unit_quaternion(), q in unit_quaternion(), r in unit_quaternion()) {
            prop_assert!(close((p * q) * r, p * (q * r), 1e-14));
        }

        #[test]
        fn hopf_image_is_unit_and_fiber_invariant(q in unit_quaternion(), phi in -10.0f64..10.0) {
            let p = hopf_raw(&q);
            prop_assert!(p.x.abs() < 1e-14);
            prop_assert!((p.norm() - 1.0).abs() < 1e-14);
            let shifted = hopf_raw(&(Quaternion::exp_i(phi) * q));
            prop_assert!(close(p, shifted, 1e-13));
        }

        #[test]
        fn equivariance(q in unit_quaternion(), r in unit_quaternion()) {
            let lhs = hopf_raw(&(q * r));
            let rhs = r.involution() * hopf_raw(&q) * r;
            prop_assert!(close(lhs, rhs, 1e-12));
        }

        #[test]
        fn rotation_is_isometric(p in s2_point(), a in s2_point(), r in unit_quaternion()) {
            let rp = rotate_raw(&p, &r);
            let ra = rotate_raw(&a, &r);
            prop_assert!((rp.norm() - 1.0).abs() < 1e-13);
            prop_assert!(((rp - ra).norm() - (p - a).norm()).abs() < 1e-13);
        }

        #[test]
        fn rotation_composes(p in s2_point(), r1 in unit_quaternion(), r2 in unit_quaternion()) {
            let lhs = rotate_raw(&rotate_raw(&p, &r1), &r2);
            let rhs = rotate_raw(&p, &(r1 * r2));
            prop_assert!((lhs - rhs).norm() < 1e-13);
        }

        #[test]
        fn differential_matches_finite_differences(q in unit_quaternion(), a in unit_quaternion()) {
            // Tangent direction at q, then a geodesic q cos t + v sin t.
            let v = (a - q * q.dot(&a)).normalize();
            let exact = hopf_differential(q, v).unwrap();
            let fd = |h: f64| {
                let plus = q * h.cos() + v * h.sin();
                let minus = q * h.cos() - v * h.sin();
                (hopf_raw(&plus) - hopf_raw(&minus)).s2_coords() / (2.0 * h)
            };
            let e1 = (fd(1e-2) - exact).norm();
            let e2 = (fd(5e-3) - exact).norm();
            prop_assert!(e1 < 1e-3);
            // second order: halving h divides the error by ~4
            prop_assert!(e2 < e1 / 3.0 || e1 < 1e-10);
        }
    }
}
