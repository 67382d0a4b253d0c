/// Cholesky factor of a symmetric positive definite cyclic band matrix with half-bandwidth 3.
///
/// Rows are stored over their envelope: row `i` holds columns `first[i]..=i`.
/// Only the last three rows reach back to column 0, so fill-in stays linear in `n`.
pub(crate) struct CyclicBandCholesky {
    first: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl CyclicBandCholesky {
    /// Factors `diag(d) + B`, where `B` is circulant with symmetric weights
    /// `band[0]` on the diagonal and `band[k]` at cyclic distance `k = 1..=3`.
    pub fn new(d: &[f64], band: [f64; 4]) -> Option<Self> {
        let n = d.len();
        assert!(n >= 7, "cyclic band needs at least 7 rows");
        let first: Vec<usize> = (0..n)
            .map(|i| if i + 3 < n { i.saturating_sub(3) } else { 0 })
            .collect();
        let entry = |i: usize, j: usize| -> f64 {
            let dist = i.abs_diff(j);
            let dist = dist.min(n - dist);
            let base = if dist <= 3 { band[dist] } else { 0.0 };
            if i == j {
                base + d[i]
            } else {
                base
            }
        };
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let fi = first[i];
            let mut row = vec![0.0; i - fi + 1];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = entry(i, j);
                let other = if j < i { &rows[j][..] } else { &row[..] };
                s -= (k0..j).map(|k| row[k - fi] * other[k - fj]).sum::<f64>();
                if j < i {
                    row[j - fi] = s / rows[j][j - fj];
                } else {
                    if !(s > 0.0) {
                        return None;
                    }
                    row[j - fi] = s.sqrt();
                }
            }
            rows.push(row);
        }
        Some(Self { first, rows })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.rows[i];
            let mut s = b[i];
            for k in fi..i {
                s -= row[k - fi] * b[k];
            }
            b[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.rows[i];
            b[i] /= row[i - fi];
            let xi = b[i];
            for k in fi..i {
                b[k] -= row[k - fi] * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn matches_dense_solve() {
        for n in [7, 8, 13, 64] {
            let d: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * (i as f64).sin().abs()).collect();
            let band = [56.0 / 6.0, -39.0 / 6.0, 12.0 / 6.0, -1.0 / 6.0].map(|w| w * 0.7);
            let chol = CyclicBandCholesky::new(&d, band).unwrap();
            let mut dense = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                dense[(i, i)] += d[i];
                for (k, w) in band.iter().enumerate() {
                    dense[(i, (i + k) % n)] += if k == 0 { *w } else { 0.0 };
                    if k > 0 {
                        dense[(i, (i + k) % n)] += w;
                        dense[(i, (i + n - k) % n)] += w;
                    }
                }
            }
            let rhs: Vec<f64> = (0..n).map(|i| (0.7 * i as f64).cos()).collect();
            let mut x = rhs.clone();
            chol.solve_in_place(&mut x);
            let r = &dense * DVector::from_vec(x) - DVector::from_vec(rhs);
            assert!(r.amax() < 1e-12, "n = {n}: {}", r.amax());
        }
    }

    #[test]
    fn indefinite_matrix_is_refused() {
        assert!(CyclicBandCholesky::new(&[-1.0; 10], [0.0; 4]).is_none());
    }
}
