//! Periodic differentiation on the uniform parameter grid `x_m = 2πm/N`.

use std::cell::RefCell;
use std::ops::{Add, Mul, Sub};

use nalgebra::Vector3;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::Quaternion;

pub const MIN_NODES: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffScheme {
    /// Fourth-order central differences.
    #[default]
    FiniteDifference,
    /// Trigonometric (FFT) differentiation.
    Fourier,
}

impl std::str::FromStr for DiffScheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fd" | "finite-difference" => Ok(Self::FiniteDifference),
            "fourier" | "spectral" => Ok(Self::Fourier),
            other => Err(format!("unknown differentiation scheme `{other}`")),
        }
    }
}

/// Values that can be combined by a linear stencil.
pub trait Linear: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
}

impl Linear for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Linear for Vector3<f64> {
    fn zero() -> Self {
        Vector3::zeros()
    }
}

impl Linear for Quaternion {
    fn zero() -> Self {
        Quaternion::ZERO
    }
}

const D1: [(isize, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
const D2: [(isize, f64); 5] = [
    (-2, -1.0 / 12.0),
    (-1, 16.0 / 12.0),
    (0, -30.0 / 12.0),
    (1, 16.0 / 12.0),
    (2, -1.0 / 12.0),
];
const D3: [(isize, f64); 6] = [
    (-3, 1.0 / 8.0),
    (-2, -1.0),
    (-1, 13.0 / 8.0),
    (1, -13.0 / 8.0),
    (2, 1.0),
    (3, -1.0 / 8.0),
];
pub(crate) const D4: [(isize, f64); 7] = [
    (-3, -1.0 / 6.0),
    (-2, 12.0 / 6.0),
    (-1, -39.0 / 6.0),
    (0, 56.0 / 6.0),
    (1, -39.0 / 6.0),
    (2, 12.0 / 6.0),
    (3, -1.0 / 6.0),
];

/// Fourth-order central stencil for `d^order/dx^order`, weights to be divided by `h^order`.
pub fn stencil(order: usize) -> Result<&'static [(isize, f64)]> {
    match order {
        1 => Ok(&D1),
        2 => Ok(&D2),
        3 => Ok(&D3),
        4 => Ok(&D4),
        other => Err(Error::UnsupportedOrder(other)),
    }
}

/// Applies the central stencil of the given order at every index `0..n`.
///
/// `sample` must accept any index in `-3..n+3`; it encodes the periodicity
/// (plain wrap-around, or a twisted identification at the seam).
pub fn stencil_derivative<T: Linear>(n: usize, h: f64, order: usize, sample: impl Fn(isize) -> T) -> Result<Vec<T>> {
    let weights = stencil(order)?;
    let scale = h.powi(-(order as i32));
    Ok((0..n as isize)
        .map(|m| {
            weights
                .iter()
                .fold(T::zero(), |acc, &(off, w)| acc + sample(m + off) * w)
                * scale
        })
        .collect())
}

pub fn periodic_stencil_derivative<T: Linear>(values: &[T], order: usize) -> Result<Vec<T>> {
    let n = values.len();
    let h = std::f64::consts::TAU / n as f64;
    stencil_derivative(n, h, order, |i| values[i.rem_euclid(n as isize) as usize])
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward DFT, unnormalized.
pub(crate) fn fft(data: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(data.len()));
    plan.process(data);
}

/// Inverse DFT, unnormalized.
pub(crate) fn ifft(data: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(data.len()));
    plan.process(data);
}

/// Signed wavenumber of DFT bin `k` for length `n`.
pub(crate) fn wavenumber(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

pub fn fourier_derivative(values: &[f64], order: usize) -> Result<Vec<f64>> {
    if !(1..=4).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&mut buf);
    let i = Complex64::i();
    for (k, c) in buf.iter_mut().enumerate() {
        let nyquist = n.is_multiple_of(2) && k == n / 2;
        if nyquist && !order.is_multiple_of(2) {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let ik = i * wavenumber(k, n);
        *c *= ik.powu(order as u32);
    }
    ifft(&mut buf);
    let inv_n = 1.0 / n as f64;
    Ok(buf.iter().map(|c| c.re * inv_n).collect())
}

pub fn differentiate_scalar(values: &[f64], order: usize, scheme: DiffScheme) -> Result<Vec<f64>> {
    check_nodes(values.len())?;
    match scheme {
        DiffScheme::FiniteDifference => periodic_stencil_derivative(values, order),
        DiffScheme::Fourier => fourier_derivative(values, order),
    }
}

/// Periodic derivative of a sequence of 3-vectors with respect to the uniform parameter.
pub fn differentiate(values: &[Vector3<f64>], order: usize, scheme: DiffScheme) -> Result<Vec<Vector3<f64>>> {
    check_nodes(values.len())?;
    match scheme {
        DiffScheme::FiniteDifference => periodic_stencil_derivative(values, order),
        DiffScheme::Fourier => {
            let mut out = vec![Vector3::zeros(); values.len()];
            for c in 0..3 {
                let comp: Vec<f64> = values.iter().map(|v| v[c]).collect();
                for (o, d) in out.iter_mut().zip(fourier_derivative(&comp, order)?) {
                    o[c] = d;
                }
            }
            Ok(out)
        }
    }
}

fn check_nodes(n: usize) -> Result<()> {
    if n < MIN_NODES {
        return Err(Error::TooCoarse {
            nodes: n,
            min: MIN_NODES,
        });
    }
    Ok(())
}

/// Fourier symbol (times `h^4`) of the stencil `D4`, i.e. its eigenvalue on mode `θ = k h`.
#[cfg(test)]
pub(crate) fn d4_symbol(theta: f64) -> f64 {
    D4.iter().map(|&(off, w)| w * (off as f64 * theta).cos()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|m| TAU * m as f64 / n as f64).collect()
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let v = vec![Vector3::new(0.3, -0.2, 0.9); 32];
        for scheme in [DiffScheme::FiniteDifference, DiffScheme::Fourier] {
            for order in 1..=4 {
                let d = differentiate(&v, order, scheme).unwrap();
                assert!(d.iter().all(|x| x.norm() < 1e-12), "{scheme:?} order {order}");
            }
        }
    }

    #[test]
    fn great_circle_second_derivative_fourier_is_exact() {
        let nodes: Vec<_> = grid(64).iter().map(|&x| Vector3::new(x.cos(), x.sin(), 0.0)).collect();
        let d2 = differentiate(&nodes, 2, DiffScheme::Fourier).unwrap();
        for (a, b) in d2.iter().zip(&nodes) {
            assert!((a + b).norm() < 1e-12);
        }
        // The stencil is an eigen-operator on this mode, with eigenvalue -(1 - O(h^4)).
        let d2 = differentiate(&nodes, 2, DiffScheme::FiniteDifference).unwrap();
        let h = TAU / 64.0;
        for (a, b) in d2.iter().zip(&nodes) {
            assert!((a + b).norm() < 1.01 * h.powi(4) / 90.0);
        }
    }

    #[test]
    fn too_coarse_and_bad_order() {
        let v = vec![0.0; 8];
        assert!(matches!(
            differentiate_scalar(&v, 1, DiffScheme::FiniteDifference),
            Err(Error::TooCoarse { nodes: 8, .. })
        ));
        let v = vec![0.0; 32];
        assert!(matches!(
            differentiate_scalar(&v, 5, DiffScheme::Fourier),
            Err(Error::UnsupportedOrder(5))
        ));
    }

    /// f(x) = Σ a_k cos(kx) + b_k sin(kx) with analytic derivatives.
    struct Modes(Vec<(f64, f64)>);

    impl Modes {
        fn eval(&self, x: f64, order: usize) -> f64 {
            self.0
                .iter()
                .enumerate()
                .map(|(k, &(a, b))| {
                    let kf = k as f64;
                    let phase = kf * x + order as f64 * std::f64::consts::FRAC_PI_2;
                    kf.powi(order as i32) * (a * phase.cos() + b * phase.sin())
                })
                .sum()
        }
    }

    fn max_err(modes: &Modes, n: usize, order: usize, scheme: DiffScheme) -> f64 {
        let xs = grid(n);
        let vals: Vec<f64> = xs.iter().map(|&x| modes.eval(x, 0)).collect();
        let d = differentiate_scalar(&vals, order, scheme).unwrap();
        xs.iter()
            .zip(&d)
            .map(|(&x, &v)| (v - modes.eval(x, order)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn fourier_matches_analytic_derivatives() {
        let modes = Modes(vec![(0.1, 0.0), (0.5, -0.3), (0.2, 0.25), (-0.1, 0.05), (0.03, 0.02)]);
        for order in 1..=4 {
            assert!(max_err(&modes, 64, order, DiffScheme::Fourier) < 1e-10, "order {order}");
        }
    }

    #[test]
    fn stencils_converge_at_fourth_order() {
        let modes = Modes(vec![(0.0, 0.0), (0.5, -0.3), (0.2, 0.25), (-0.1, 0.05)]);
        for order in 1..=4 {
            let e1 = max_err(&modes, 64, order, DiffScheme::FiniteDifference);
            let e2 = max_err(&modes, 128, order, DiffScheme::FiniteDifference);
            let rate = (e1 / e2).log2();
            assert!(rate > 3.8, "order {order}: rate {rate} ({e1} -> {e2})");
        }
    }

    #[test]
    fn d4_symbol_is_nonnegative() {
        for i in 0..=1000 {
            let theta = std::f64::consts::PI * i as f64 / 1000.0;
            assert!(d4_symbol(theta) >= -1e-14);
        }
        assert!((d4_symbol(std::f64::consts::PI) - 160.0 / 6.0).abs() < 1e-12);
    }
}
