use nalgebra::Vector3;
use rayon::prelude::*;

use super::DiscreteCurve;

/// Result of the pairwise segment-crossing test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Embedding {
    pub embedded: bool,
    /// First crossing found, as indices of the segment starts `(m, m')` with `m < m'`.
    pub crossing: Option<(usize, usize)>,
}

/// Tests every pair of non-adjacent great-arc segments `[γ_m, γ_{m+1}]` for intersection.
pub fn is_embedded(curve: &DiscreteCurve) -> Embedding {
    let nodes = curve.nodes();
    let n = nodes.len();
    let segs: Vec<Segment> = (0..n).map(|m| Segment::new(nodes[m], nodes[(m + 1) % n])).collect();
    let crossing = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            ((i + 2)..n)
                .filter(|&j| !(i == 0 && j == n - 1))
                .find(|&j| segs[i].crosses(&segs[j]))
                .map(|j| (i, j))
        })
        .min();
    Embedding {
        embedded: crossing.is_none(),
        crossing,
    }
}

struct Segment {
    a: Vector3<f64>,
    b: Vector3<f64>,
    normal: Vector3<f64>,
    mid: Vector3<f64>,
    radius: f64,
}

impl Segment {
    fn new(a: Vector3<f64>, b: Vector3<f64>) -> Self {
        let mid = (a + b) * 0.5;
        Self {
            a,
            b,
            normal: a.cross(&b),
            mid,
            radius: (a - b).norm() * 0.5,
        }
    }

    fn crosses(&self, other: &Segment) -> bool {
        // Chord bounding spheres; arcs bulge by at most the sagitta, well below the radius.
        if (self.mid - other.mid).norm() > 1.1 * (self.radius + other.radius) {
            return false;
        }
        let (s1, s2) = (self.normal.dot(&other.a), self.normal.dot(&other.b));
        let (s3, s4) = (other.normal.dot(&self.a), other.normal.dot(&self.b));
        if s1 * s2 > 0.0 || s3 * s4 > 0.0 {
            return false;
        }
        if s1 == 0.0 && s2 == 0.0 {
            // Same great circle: overlap of the arcs.
            return within(&self.a, &self.b, &other.a)
                || within(&self.a, &self.b, &other.b)
                || within(&other.a, &other.b, &self.a);
        }
        let mut p = self.normal.cross(&other.normal);
        if p.norm_squared() == 0.0 {
            return false;
        }
        if p.dot(&(self.a + self.b)) < 0.0 {
            p = -p;
        }
        within(&self.a, &self.b, &p) && within(&other.a, &other.b, &p)
    }
}

/// `p` lies on the short arc from `a` to `b` (`p` assumed on their great circle).
fn within(a: &Vector3<f64>, b: &Vector3<f64>, p: &Vector3<f64>) -> bool {
    let n = a.cross(b);
    a.cross(p).dot(&n) >= 0.0 && p.cross(b).dot(&n) >= 0.0 && p.dot(&(a + b)) > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Projected figure eight around the pole, self-crossing at `x = 0` and `x = π`.
    fn figure_eight(n: usize) -> DiscreteCurve {
        DiscreteCurve::from_fn(n, |x| Vector3::new(0.6 * x.sin(), 0.3 * (2.0 * x).sin(), 1.0)).unwrap()
    }

    #[test]
    fn circles_are_embedded() {
        assert!(is_embedded(&DiscreteCurve::great_circle(128).unwrap()).embedded);
        assert!(is_embedded(&DiscreteCurve::latitude(200, 1.0).unwrap()).embedded);
        assert!(is_embedded(&DiscreteCurve::latitude(64, 0.05).unwrap()).embedded);
    }

    #[test]
    fn figure_eight_crossing_is_found() {
        let n = 128;
        let e = is_embedded(&figure_eight(n));
        assert!(!e.embedded);
        let (i, j) = e.crossing.unwrap();
        // The crossing sits at node 0 = node N/2; touching segments are N-1 or 0 and N/2-1 or N/2.
        let near = |m: usize, t: usize| m == t || (m + 1) % n == t;
        assert!(near(i, 0) || near(i, n / 2), "{i} {j}");
        assert!(near(j, 0) || near(j, n / 2), "{i} {j}");
    }

    #[test]
    fn brute_force_oracle_agrees() {
        // Independent check: planar segment intersection after gnomonic projection to z = 1.
        let c = DiscreteCurve::from_fn(96, |x| {
            Vector3::new(
                0.5 * x.cos() + 0.2 * (3.0 * x).cos(),
                0.5 * x.sin() - 0.2 * (3.0 * x).sin(),
                1.0,
            )
        })
        .unwrap();
        let p: Vec<(f64, f64)> = c.nodes().iter().map(|v| (v.x / v.z, v.y / v.z)).collect();
        let n = p.len();
        let orient =
            |a: (f64, f64), b: (f64, f64), c: (f64, f64)| (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
        let mut planar = false;
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b, c2, d) = (p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]);
                if orient(a, b, c2) * orient(a, b, d) < 0.0 && orient(c2, d, a) * orient(c2, d, b) < 0.0 {
                    planar = true;
                }
            }
        }
        assert_eq!(planar, !is_embedded(&c).embedded);
        assert!(planar);
    }
}
