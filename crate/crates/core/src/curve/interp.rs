use nalgebra::Vector3;
use num_complex::Complex64;

use super::diff::{fft, wavenumber};

/// Trigonometric interpolant of a periodic sequence of 3-vectors sampled at `x_m = 2πm/N`.
///
/// The Nyquist mode (even `N`) is split symmetrically so the interpolant is real.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    /// `(wavenumber, coefficient per component)`, coefficients already divided by `N`.
    modes: Vec<(f64, [Complex64; 3])>,
}

impl TrigInterpolant {
    pub fn new(values: &[Vector3<f64>]) -> Self {
        let n = values.len();
        let mut comps: [Vec<Complex64>; 3] = Default::default();
        for (c, buf) in comps.iter_mut().enumerate() {
            *buf = values.iter().map(|v| Complex64::new(v[c], 0.0)).collect();
            fft(buf);
        }
        let inv_n = 1.0 / n as f64;
        let mut modes = Vec::with_capacity(n + 1);
        for k in 0..n {
            let coeff = [comps[0][k] * inv_n, comps[1][k] * inv_n, comps[2][k] * inv_n];
            if n.is_multiple_of(2) && k == n / 2 {
                let half = coeff.map(|c| c * 0.5);
                modes.push((k as f64, half));
                modes.push((-(k as f64), half));
            } else {
                modes.push((wavenumber(k, n), coeff));
            }
        }
        Self { modes }
    }

    /// `d^order/dx^order` of the interpolant at `x`.
    pub fn eval(&self, x: f64, order: u32) -> Vector3<f64> {
        let i = Complex64::i();
        let mut acc = [Complex64::new(0.0, 0.0); 3];
        for (k, coeff) in &self.modes {
            let factor = (i * *k).powu(order) * Complex64::from_polar(1.0, k * x);
            for c in 0..3 {
                acc[c] += coeff[c] * factor;
            }
        }
        Vector3::new(acc[0].re, acc[1].re, acc[2].re)
    }
}

/// Antiderivative of a real periodic function known at `x_m = 2πm/N`:
/// `F(x) = mean·x + periodic part`, normalized so `F(0) = 0`.
#[derive(Clone, Debug)]
pub struct PeriodicIntegral {
    mean: f64,
    modes: Vec<(f64, Complex64)>,
    offset: f64,
}

impl PeriodicIntegral {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft(&mut buf);
        let inv_n = 1.0 / n as f64;
        let mean = buf[0].re * inv_n;
        let mut modes = Vec::with_capacity(n);
        for (k, c) in buf.iter().enumerate().skip(1) {
            if n.is_multiple_of(2) && k == n / 2 {
                // cos(N/2 x) integrates to a sine vanishing on the grid; keep it anyway.
                let half = *c * inv_n * 0.5;
                let kf = k as f64;
                modes.push((kf, half / Complex64::new(0.0, kf)));
                modes.push((-kf, half / Complex64::new(0.0, -kf)));
            } else {
                let kf = wavenumber(k, n);
                modes.push((kf, *c * inv_n / Complex64::new(0.0, kf)));
            }
        }
        let mut out = Self {
            mean,
            modes,
            offset: 0.0,
        };
        out.offset = out.eval(0.0);
        out
    }

    pub fn eval(&self, x: f64) -> f64 {
        let periodic: f64 = self
            .modes
            .iter()
            .map(|(k, c)| (c * Complex64::from_polar(1.0, k * x)).re)
            .sum();
        self.mean * x + periodic - self.offset
    }

    /// Integral over one period.
    pub fn total(&self) -> f64 {
        self.mean * std::f64::consts::TAU
    }
}
