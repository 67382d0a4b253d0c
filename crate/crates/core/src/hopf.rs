//! Horizontal lifts to S³, Hopf tori `X(s, φ) = e^{iφ}·η(s)` and their surface geometry.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use nalgebra::{Matrix2, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{fourier_derivative, stencil, CurveGeometry, DiscreteCurve, Orientation, TrigInterpolant};
use crate::energy::{elastic_energy, gradient};
use crate::error::{Error, Result};
use crate::flow::velocity;
use crate::quat::{hopf_differential_raw, hopf_raw, Quaternion, UNIT_TOL};

/// Tolerance on `|π(q*) − γ_0|` for a lift seed.
pub const SEED_TOL: f64 = 1e-8;
pub const MIN_FIBER_RES: usize = 16;
/// RK4 substeps per node interval of the lift.
pub const LIFT_SUBSTEPS: usize = 4;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between angles on the circle, in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// A point on the fiber over `p`: the square root of `p` in `span{1, j, k}`.
pub fn seed_over(p: &Vector3<f64>) -> Quaternion {
    let q = Quaternion::from_s2_coords(p) + Quaternion::ONE;
    if q.norm() < 1e-8 {
        Quaternion::J
    } else {
        q.normalize()
    }
}

/// Closest point to `q` on the fiber over `p`.
fn onto_fiber(q: &Quaternion, p: &Vector3<f64>) -> Quaternion {
    let base = seed_over(p);
    let phase = (Quaternion::I * base).dot(q).atan2(base.dot(q));
    Quaternion::exp_i(phase) * base
}

/// Horizontal lift `η` of a closed curve: `π(η) = γ`, `⟨η', iη⟩ = 0`.
#[derive(Clone, Debug)]
pub struct HorizontalLift {
    pub nodes: Vec<Quaternion>,
    pub seed: Quaternion,
    /// Phase `δ ∈ [0, 2π)` of the traversal in the curve's orientation: going once
    /// around returns to `e^{−iδ}` times the start, the lattice generator `(δ, L/2)`.
    pub holonomy: f64,
    /// Same phase for increasing node index; the seam twist of the torus is `e^{−i·twist}`.
    pub twist: f64,
    pub orientation: Orientation,
    pub curve: Vec<Vector3<f64>>,
}

impl HorizontalLift {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `max_m |π(η_m) − γ_m|`.
    pub fn fiber_residual(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.curve)
            .map(|(q, g)| (hopf_raw(q).s2_coords() - g).norm())
            .fold(0.0, f64::max)
    }

    /// Spectral derivative of the lift: `η = e^{−iδx/2π} ζ` with `ζ` periodic.
    pub fn derivative(&self) -> Vec<Quaternion> {
        let n = self.nodes.len();
        let rate = self.twist / TAU;
        let zeta: Vec<Quaternion> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(m, q)| Quaternion::exp_i(rate * TAU * m as f64 / n as f64) * *q)
            .collect();
        let mut dz = vec![Quaternion::ZERO; n];
        for c in 0..4 {
            let comp: Vec<f64> = zeta.iter().map(|q| q.to_array()[c]).collect();
            let d = fourier_derivative(&comp, 1).expect("order 1 is supported");
            for (o, v) in dz.iter_mut().zip(d) {
                let mut a = o.to_array();
                a[c] = v;
                *o = Quaternion::from_array(a);
            }
        }
        (0..n)
            .map(|m| {
                let x = TAU * m as f64 / n as f64;
                Quaternion::exp_i(-rate * x) * (dz[m] - Quaternion::I * zeta[m] * rate)
            })
            .collect()
    }

    /// `max_m |⟨η', iη⟩| / |η'|`.
    pub fn horizontality_residual(&self) -> f64 {
        self.derivative()
            .iter()
            .zip(&self.nodes)
            .map(|(d, q)| d.dot(&(Quaternion::I * *q)).abs() / d.norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Integrates `η' = ½ (η̄)~ γ'` node to node with RK4 along the trigonometric interpolant of γ.
pub fn horizontal_lift(curve: &DiscreteCurve, seed: Quaternion) -> Result<HorizontalLift> {
    let norm = seed.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitInput { norm });
    }
    let nodes = curve.nodes();
    let distance = (hopf_raw(&seed).s2_coords() - nodes[0]).norm();
    if distance > SEED_TOL {
        return Err(Error::SeedOffFiber { distance });
    }
    let n = nodes.len();
    let interp = TrigInterpolant::new(nodes);
    let rhs = |x: f64, eta: &Quaternion| -> Quaternion {
        let v = Quaternion::from_s2_coords(&interp.eval(x, 1));
        eta.conj().involution() * v * 0.5
    };
    let h = TAU / (n * LIFT_SUBSTEPS) as f64;
    let mut eta = seed;
    let mut lifted = Vec::with_capacity(n);
    for m in 0..n {
        if m > 0 {
            eta = onto_fiber(&eta, &nodes[m]);
        }
        lifted.push(eta);
        for k in 0..LIFT_SUBSTEPS {
            let x = TAU * m as f64 / n as f64 + k as f64 * h;
            let k1 = rhs(x, &eta);
            let k2 = rhs(x + 0.5 * h, &(eta + k1 * (0.5 * h)));
            let k3 = rhs(x + 0.5 * h, &(eta + k2 * (0.5 * h)));
            let k4 = rhs(x + h, &(eta + k3 * h));
            eta = (eta + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)).normalize();
        }
    }
    let back = onto_fiber(&eta, &nodes[0]) * seed.conj();
    let twist = wrap_angle(-back.x.atan2(back.w));
    let holonomy = wrap_angle(curve.orientation().sign() * twist);
    Ok(HorizontalLift {
        nodes: lifted,
        seed,
        holonomy,
        twist,
        orientation: curve.orientation(),
        curve: nodes.to_vec(),
    })
}

/// Hopf torus sampled on an `N × M` grid, row-major in `(s, φ)`.
#[derive(Clone, Debug)]
pub struct HopfTorusMesh {
    pub n_s: usize,
    pub n_phi: usize,
    pub points: Vec<Quaternion>,
    /// Seam identification `X(s + 2π, φ) = e^{−i·twist} X(s, φ)`.
    pub twist: f64,
    pub orientation: Orientation,
    pub curve: Vec<Vector3<f64>>,
}

pub fn build_torus(lift: &HorizontalLift, fiber_res: usize) -> Result<HopfTorusMesh> {
    if fiber_res < MIN_FIBER_RES {
        return Err(Error::TooCoarse {
            nodes: fiber_res,
            min: MIN_FIBER_RES,
        });
    }
    let fibers: Vec<Quaternion> = (0..fiber_res)
        .map(|k| Quaternion::exp_i(TAU * k as f64 / fiber_res as f64))
        .collect();
    let points = lift
        .nodes
        .iter()
        .flat_map(|eta| fibers.iter().map(move |f| *f * *eta))
        .collect();
    Ok(HopfTorusMesh {
        n_s: lift.len(),
        n_phi: fiber_res,
        points,
        twist: lift.twist,
        orientation: lift.orientation,
        curve: lift.curve.clone(),
    })
}

impl HopfTorusMesh {
    pub fn index(&self, m: usize, n: usize) -> usize {
        m * self.n_phi + n
    }

    pub fn point(&self, m: usize, n: usize) -> Quaternion {
        self.points[self.index(m, n)]
    }

    fn h_s(&self) -> f64 {
        TAU / self.n_s as f64
    }

    fn h_phi(&self) -> f64 {
        TAU / self.n_phi as f64
    }

    /// Derivative along `s` of a field that transforms like the points across the seam.
    fn ds(&self, field: &[Quaternion], order: usize) -> Vec<Quaternion> {
        let weights = stencil(order).expect("orders 1 and 2 are supported");
        let scale = self.h_s().powi(-(order as i32));
        let (ns, np) = (self.n_s as isize, self.n_phi);
        let fwd = Quaternion::exp_i(-self.twist);
        let back = fwd.conj();
        (0..field.len())
            .into_par_iter()
            .map(|p| {
                let (m, n) = ((p / np) as isize, p % np);
                weights.iter().fold(Quaternion::ZERO, |acc, &(off, w)| {
                    let i = m + off;
                    let base = field[i.rem_euclid(ns) as usize * np + n];
                    let v = match i.div_euclid(ns) {
                        0 => base,
                        1 => fwd * base,
                        -1 => back * base,
                        k => Quaternion::exp_i(-self.twist * k as f64) * base,
                    };
                    acc + v * w
                }) * scale
            })
            .collect()
    }

    /// Derivative along the closed fibers.
    fn dphi(&self, field: &[Quaternion], order: usize) -> Vec<Quaternion> {
        let weights = stencil(order).expect("orders 1 and 2 are supported");
        let scale = self.h_phi().powi(-(order as i32));
        let np = self.n_phi as isize;
        (0..field.len())
            .into_par_iter()
            .map(|p| {
                let row = (p as isize / np) * np;
                let n = p as isize % np;
                weights.iter().fold(Quaternion::ZERO, |acc, &(off, w)| {
                    acc + field[(row + (n + off).rem_euclid(np)) as usize] * w
                }) * scale
            })
            .collect()
    }

    /// Writes `v x y z w` vertex lines, an optional stereographic `v3 x y z` block, and quad faces.
    ///
    /// The seam row is written twice (`N + 1` rows), the copy carrying the twist.
    pub fn write_mesh(&self, out: &mut impl Write, stereographic: bool) -> Result<()> {
        let twist = Quaternion::exp_i(-self.twist);
        let rows = self.n_s + 1;
        let vertex = |m: usize, n: usize| {
            if m == self.n_s {
                twist * self.point(0, n)
            } else {
                self.point(m, n)
            }
        };
        writeln!(out, "# hopf torus {} x {}", rows, self.n_phi)?;
        for m in 0..rows {
            for n in 0..self.n_phi {
                let q = vertex(m, n);
                writeln!(out, "v {:e} {:e} {:e} {:e}", q.w, q.x, q.y, q.z)?;
            }
        }
        if stereographic {
            for m in 0..rows {
                for n in 0..self.n_phi {
                    let q = vertex(m, n);
                    let d = (1.0 + q.w).max(1e-12);
                    writeln!(out, "v3 {:e} {:e} {:e}", q.x / d, q.y / d, q.z / d)?;
                }
            }
        }
        for m in 0..self.n_s {
            for n in 0..self.n_phi {
                let a = m * self.n_phi + n + 1;
                let b = m * self.n_phi + (n + 1) % self.n_phi + 1;
                let c = b + self.n_phi;
                let d = a + self.n_phi;
                writeln!(out, "f {a} {b} {c} {d}")?;
            }
        }
        Ok(())
    }
}

/// Generalized cross product: the vector orthogonal to `a`, `b`, `c` in ℝ⁴.
fn cross4(a: &Quaternion, b: &Quaternion, c: &Quaternion) -> Quaternion {
    let (a, b, c) = (a.to_array(), b.to_array(), c.to_array());
    let det3 = |i: usize, j: usize, k: usize| {
        a[i] * (b[j] * c[k] - b[k] * c[j]) - a[j] * (b[i] * c[k] - b[k] * c[i]) + a[k] * (b[i] * c[j] - b[j] * c[i])
    };
    Quaternion::new(det3(1, 2, 3), -det3(0, 2, 3), det3(0, 1, 3), -det3(0, 1, 2))
}

/// Discrete surface geometry of a Hopf torus in S³, per grid point.
///
/// Index pairs `ij` are stored in the order `(ss, sφ, φφ)`.
#[derive(Clone, Debug)]
pub struct SurfaceGeometry {
    pub n_s: usize,
    pub n_phi: usize,
    pub metric: Vec<[f64; 3]>,
    /// Unit normal in `T S³`, oriented so that `Dπ(N)` points along the curve normal ν.
    pub normal: Vec<Quaternion>,
    /// `⟨∂_i∂_j X, N⟩`.
    pub second: Vec<[f64; 3]>,
    /// Scalar mean curvature `g^{ij} h_ij`.
    pub mean_scalar: Vec<f64>,
    /// Mean curvature vector in S³.
    pub mean: Vec<Quaternion>,
    pub a_sq: Vec<f64>,
    pub a0_sq: Vec<f64>,
    /// `Q(A⁰)(H) = |A⁰|² H`.
    pub q_h: Vec<Quaternion>,
    /// Normal Laplacian `Δ⊥H`.
    pub laplace_h: Vec<Quaternion>,
    /// `∇_{L²}𝒲 = ½(Δ⊥H + Q(A⁰)(H))`.
    pub willmore_gradient: Vec<Quaternion>,
    /// `A(e_1, e_2)` in the orthonormal (lift, fiber) frame.
    pub frame_offdiag: Vec<f64>,
    pub area_element: Vec<f64>,
    pub area: f64,
    /// `∫ 1 + ¼|H|² dμ`.
    pub willmore: f64,
    /// `max |A_{ℝ⁴} − (A_{S³} − X g)|` with `A_{ℝ⁴}` taken directly from `∂_i∂_j X`.
    pub r4_second_residual: f64,
    /// `max |H_{ℝ⁴} − (H_{S³} − 2X)|`.
    pub r4_mean_residual: f64,
}

fn inverse(g: &[f64; 3]) -> Option<[f64; 3]> {
    let m = Matrix2::new(g[0], g[1], g[1], g[2]);
    let det = m.determinant();
    if !(det > 1e-14 * (g[0] * g[2]).abs().max(f64::MIN_POSITIVE)) {
        return None;
    }
    let inv = m.try_inverse()?;
    Some([inv[(0, 0)], inv[(0, 1)], inv[(1, 1)]])
}

/// `g^{ij} t_ij` for a symmetric pair stored as `(11, 12, 22)`.
fn trace<T>(ginv: &[f64; 3], t: [T; 3]) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    t[0] * ginv[0] + t[1] * (2.0 * ginv[1]) + t[2] * ginv[2]
}

pub fn surface_geometry(mesh: &HopfTorusMesh) -> Result<SurfaceGeometry> {
    if mesh.n_s < 64 || mesh.n_phi < MIN_FIBER_RES {
        return Err(Error::TooCoarse {
            nodes: mesh.n_s.min(mesh.n_phi),
            min: if mesh.n_s < 64 { 64 } else { MIN_FIBER_RES },
        });
    }
    let x = &mesh.points;
    let xs = mesh.ds(x, 1);
    let xss = mesh.ds(x, 2);
    let xp = mesh.dphi(x, 1);
    let xpp = mesh.dphi(x, 2);
    let xsp = mesh.dphi(&xs, 1);
    let len = x.len();
    let sign = mesh.orientation.sign();

    let metric: Vec<[f64; 3]> = (0..len)
        .map(|p| [xs[p].dot(&xs[p]), xs[p].dot(&xp[p]), xp[p].dot(&xp[p])])
        .collect();
    let mut ginv = Vec::with_capacity(len);
    for (p, g) in metric.iter().enumerate() {
        match inverse(g) {
            Some(i) => ginv.push(i),
            None => {
                return Err(Error::DegenerateMetric {
                    row: p / mesh.n_phi,
                    col: p % mesh.n_phi,
                })
            }
        }
    }
    let normal: Vec<Quaternion> = (0..len)
        .into_par_iter()
        .map(|p| {
            let nrm = cross4(&x[p], &xs[p], &xp[p]).normalize();
            let base = hopf_raw(&x[p]).s2_coords();
            let t = hopf_differential_raw(&x[p], &xs[p]).s2_coords() * sign;
            let nu = base.cross(&t);
            if hopf_differential_raw(&x[p], &nrm).s2_coords().dot(&nu) < 0.0 {
                -nrm
            } else {
                nrm
            }
        })
        .collect();
    let second: Vec<[f64; 3]> = (0..len)
        .map(|p| [xss[p].dot(&normal[p]), xsp[p].dot(&normal[p]), xpp[p].dot(&normal[p])])
        .collect();
    let mean_scalar: Vec<f64> = (0..len).map(|p| trace(&ginv[p], second[p])).collect();
    let mean: Vec<Quaternion> = (0..len).map(|p| normal[p] * mean_scalar[p]).collect();
    let a_sq: Vec<f64> = (0..len)
        .map(|p| {
            let (gi, h) = (&ginv[p], &second[p]);
            // g^{ik} g^{jl} h_ij h_kl for symmetric 2×2 tensors.
            let m = Matrix2::new(gi[0], gi[1], gi[1], gi[2]) * Matrix2::new(h[0], h[1], h[1], h[2]);
            (m * m).trace()
        })
        .collect();
    let a0_sq: Vec<f64> = (0..len).map(|p| a_sq[p] - 0.5 * mean_scalar[p].powi(2)).collect();
    let q_h: Vec<Quaternion> = (0..len).map(|p| mean[p] * a0_sq[p]).collect();

    // Christoffel symbols Γ^k_ij = g^{kl}⟨∂_i∂_j X, ∂_l X⟩, as [ij][k].
    let christoffel: Vec<[[f64; 2]; 3]> = (0..len)
        .map(|p| {
            let gi = &ginv[p];
            let mut out = [[0.0; 2]; 3];
            for (ij, d) in [xss[p], xsp[p], xpp[p]].iter().enumerate() {
                let (a, b) = (d.dot(&xs[p]), d.dot(&xp[p]));
                out[ij] = [gi[0] * a + gi[1] * b, gi[1] * a + gi[2] * b];
            }
            out
        })
        .collect();
    let project = |v: &Quaternion, p: usize| normal[p] * v.dot(&normal[p]);
    let hs = mesh.ds(&mean, 1);
    let hp = mesh.dphi(&mean, 1);
    let y1: Vec<Quaternion> = (0..len).map(|p| project(&hs[p], p)).collect();
    let y2: Vec<Quaternion> = (0..len).map(|p| project(&hp[p], p)).collect();
    let y1s = mesh.ds(&y1, 1);
    let y1p = mesh.dphi(&y1, 1);
    let y2s = mesh.ds(&y2, 1);
    let y2p = mesh.dphi(&y2, 1);
    let laplace_h: Vec<Quaternion> = (0..len)
        .map(|p| {
            let c = &christoffel[p];
            let z = |d: Quaternion, ij: usize| project(&d, p) - y1[p] * c[ij][0] - y2[p] * c[ij][1];
            let mixed = (y1p[p] + y2s[p]) * 0.5;
            trace(&ginv[p], [z(y1s[p], 0), z(mixed, 1), z(y2p[p], 2)])
        })
        .collect();
    let willmore_gradient: Vec<Quaternion> = (0..len).map(|p| (laplace_h[p] + q_h[p]) * 0.5).collect();
    let frame_offdiag: Vec<f64> = (0..len)
        .map(|p| second[p][1] / (metric[p][0] * metric[p][2]).sqrt())
        .collect();
    let cell = mesh.h_s() * mesh.h_phi();
    let area_element: Vec<f64> = metric
        .iter()
        .map(|g| (g[0] * g[2] - g[1] * g[1]).sqrt() * cell)
        .collect();
    let area = area_element.iter().sum();
    let willmore = (0..len)
        .map(|p| (1.0 + 0.25 * mean_scalar[p].powi(2)) * area_element[p])
        .sum();

    let mut r4_second_residual: f64 = 0.0;
    let mut r4_mean_residual: f64 = 0.0;
    for p in 0..len {
        let d = [xss[p], xsp[p], xpp[p]];
        let direct: [Quaternion; 3] = d.map(|v| normal[p] * v.dot(&normal[p]) + x[p] * v.dot(&x[p]));
        for ij in 0..3 {
            let conv = normal[p] * second[p][ij] - x[p] * metric[p][ij];
            r4_second_residual = r4_second_residual.max((direct[ij] - conv).norm());
        }
        let h_direct = trace(&ginv[p], direct);
        r4_mean_residual = r4_mean_residual.max((h_direct - (mean[p] - x[p] * 2.0)).norm());
    }

    Ok(SurfaceGeometry {
        n_s: mesh.n_s,
        n_phi: mesh.n_phi,
        metric,
        normal,
        second,
        mean_scalar,
        mean,
        a_sq,
        a0_sq,
        q_h,
        laplace_h,
        willmore_gradient,
        frame_offdiag,
        area_element,
        area,
        willmore,
        r4_second_residual,
        r4_mean_residual,
    })
}

/// `max |lhs − rhs| / max(max |rhs|, 1)`.
fn relative(diff_max: f64, rhs_max: f64) -> f64 {
    diff_max / rhs_max.max(1.0)
}

fn field_residual(n: usize, f: impl Fn(usize) -> (f64, f64)) -> f64 {
    let (d, r) = (0..n).fold((0.0f64, 0.0f64), |(d, r), p| {
        let (dp, rp) = f(p);
        (d.max(dp), r.max(rp))
    });
    relative(d, r)
}

/// Relative residuals of the curve-to-surface identities.
#[derive(Clone, Debug, Serialize)]
pub struct HopfIdentityReport {
    /// `H = 2κ N`.
    pub mean_curvature: f64,
    /// `|A⁰|² = 2(κ²+1)`.
    pub tracefree_norm: f64,
    /// `Q(A⁰)(H) = 4(κ³+κ) N`.
    pub q_term: f64,
    /// `Δ⊥H = 8κ_ss N`.
    pub normal_laplacian: f64,
    /// `∇_{L²}𝒲 = 2(2κ_ss + κ³ + κ) N`.
    pub willmore_gradient: f64,
    /// `𝒲(F) = π𝔈(γ)`.
    pub willmore_energy: f64,
    /// `∫ |A⁰|⁻⁴ |∇𝒲|² dμ_F = π ∫ (κ²+1)⁻² |∇𝔈|² dμ_γ`.
    pub dissipation: f64,
    pub willmore: f64,
    pub pi_energy: f64,
    pub r4_second_residual: f64,
    pub r4_mean_residual: f64,
}

impl HopfIdentityReport {
    pub fn max_pointwise(&self) -> f64 {
        [
            self.mean_curvature,
            self.tracefree_norm,
            self.q_term,
            self.normal_laplacian,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Relative residuals of the flow correspondence under `Dπ`.
#[derive(Clone, Debug, Serialize)]
pub struct FlowCorrespondenceReport {
    /// `Dπ(∇_{L²}𝒲) = 4∇𝔈`.
    pub gradient: f64,
    /// `Dπ(−|A⁰|⁻⁴ ∇_{L²}𝒲) = −(κ²+1)⁻² ∇𝔈`.
    pub velocity: f64,
    /// `max |Dπ(−|A⁰|⁻⁴ ∇𝒲)|` over the mesh.
    pub pushed_velocity_sup: f64,
}

fn check_match(mesh: &HopfTorusMesh, geom: &CurveGeometry) -> Result<()> {
    if geom.len() != mesh.n_s {
        return Err(Error::MeshCurveMismatch(format!(
            "mesh has {} rows, curve has {} nodes",
            mesh.n_s,
            geom.len()
        )));
    }
    if geom.orientation != mesh.orientation {
        return Err(Error::MeshCurveMismatch("orientations differ".into()));
    }
    for m in 0..mesh.n_s {
        let d = (hopf_raw(&mesh.point(m, 0)).s2_coords() - geom.nodes[m]).norm();
        if d > 1e-6 {
            return Err(Error::MeshCurveMismatch(format!(
                "row {m} lies {d:e} off the curve node"
            )));
        }
    }
    Ok(())
}

pub fn verify_hopf_identities(mesh: &HopfTorusMesh, geom: &CurveGeometry) -> Result<HopfIdentityReport> {
    check_match(mesh, geom)?;
    let surf = surface_geometry(mesh)?;
    Ok(identities(mesh, &surf, geom))
}

pub fn verify_flow_correspondence(mesh: &HopfTorusMesh, geom: &CurveGeometry) -> Result<FlowCorrespondenceReport> {
    check_match(mesh, geom)?;
    let surf = surface_geometry(mesh)?;
    Ok(correspondence(mesh, &surf, geom))
}

/// Both reports from one surface evaluation.
pub fn verify_all(
    mesh: &HopfTorusMesh,
    geom: &CurveGeometry,
) -> Result<(SurfaceGeometry, HopfIdentityReport, FlowCorrespondenceReport)> {
    check_match(mesh, geom)?;
    let surf = surface_geometry(mesh)?;
    let ids = identities(mesh, &surf, geom);
    let corr = correspondence(mesh, &surf, geom);
    Ok((surf, ids, corr))
}

fn identities(mesh: &HopfTorusMesh, surf: &SurfaceGeometry, geom: &CurveGeometry) -> HopfIdentityReport {
    let np = mesh.n_phi;
    let len = mesh.points.len();
    let k = &geom.curvature;
    let kss = geom.curvature_derivative(2);
    let row = |p: usize| p / np;

    let vector = |lhs: &dyn Fn(usize) -> Quaternion, coeff: &dyn Fn(usize) -> f64| {
        field_residual(len, |p| {
            let rhs = surf.normal[p] * coeff(row(p));
            ((lhs(p) - rhs).norm(), rhs.norm())
        })
    };
    let mean_curvature = vector(&|p| surf.mean[p], &|m| 2.0 * k[m]);
    let q_term = vector(&|p| surf.q_h[p], &|m| 4.0 * (k[m].powi(3) + k[m]));
    let normal_laplacian = vector(&|p| surf.laplace_h[p], &|m| 8.0 * kss[m]);
    let willmore_gradient = vector(&|p| surf.willmore_gradient[p], &|m| {
        2.0 * (2.0 * kss[m] + k[m].powi(3) + k[m])
    });
    let tracefree_norm = field_residual(len, |p| {
        let rhs = 2.0 * (k[row(p)].powi(2) + 1.0);
        ((surf.a0_sq[p] - rhs).abs(), rhs)
    });

    let pi_energy = PI * elastic_energy(geom);
    let grad = gradient(geom);
    let curve_dissipation: f64 = geom.integrate(|m| grad[m].norm_squared() / (k[m] * k[m] + 1.0).powi(2));
    let surface_dissipation: f64 = (0..len)
        .map(|p| surf.willmore_gradient[p].norm_squared() / surf.a0_sq[p].powi(2) * surf.area_element[p])
        .sum();
    let rhs = PI * curve_dissipation;
    HopfIdentityReport {
        mean_curvature,
        tracefree_norm,
        q_term,
        normal_laplacian,
        willmore_gradient,
        willmore_energy: (surf.willmore - pi_energy).abs() / pi_energy,
        dissipation: relative((surface_dissipation - rhs).abs(), rhs.abs()),
        willmore: surf.willmore,
        pi_energy,
        r4_second_residual: surf.r4_second_residual,
        r4_mean_residual: surf.r4_mean_residual,
    }
}

fn correspondence(mesh: &HopfTorusMesh, surf: &SurfaceGeometry, geom: &CurveGeometry) -> FlowCorrespondenceReport {
    let np = mesh.n_phi;
    let len = mesh.points.len();
    let grad = gradient(geom);
    let vel = velocity(geom);
    let push = |p: usize, v: &Quaternion| hopf_differential_raw(&mesh.points[p], v).s2_coords();
    let gradient = field_residual(len, |p| {
        let lhs = push(p, &surf.willmore_gradient[p]);
        let rhs = grad[p / np] * 4.0;
        ((lhs - rhs).norm(), rhs.norm())
    });
    let mut pushed_velocity_sup: f64 = 0.0;
    let velocity = field_residual(len, |p| {
        let lhs = push(p, &(surf.willmore_gradient[p] * (-1.0 / surf.a0_sq[p].powi(2))));
        let rhs = vel[p / np];
        ((lhs - rhs).norm(), rhs.norm())
    });
    for p in 0..len {
        let lhs = push(p, &(surf.willmore_gradient[p] * (-1.0 / surf.a0_sq[p].powi(2))));
        pushed_velocity_sup = pushed_velocity_sup.max(lhs.norm());
    }
    FlowCorrespondenceReport {
        gradient,
        velocity,
        pushed_velocity_sup,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{geometry, DiffScheme};
    use crate::energy::enclosed_area;
    use std::f64::consts::FRAC_PI_3;

    fn lift(c: &DiscreteCurve) -> HorizontalLift {
        horizontal_lift(c, seed_over(&c.nodes()[0])).unwrap()
    }

    #[test]
    fn seed_lies_on_the_fiber() {
        for p in [
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(0.0, 0.6, -0.8),
        ] {
            assert!((hopf_raw(&seed_over(&p)).s2_coords() - p).norm() < 1e-14);
        }
    }

    #[test]
    fn lift_holonomy_on_circles() {
        let eq = lift(&DiscreteCurve::great_circle(512).unwrap());
        assert!(angle_distance(eq.holonomy, PI) < 1e-9, "{}", eq.holonomy);
        let c = DiscreteCurve::latitude(512, FRAC_PI_3).unwrap();
        let l = lift(&c);
        assert!(angle_distance(l.holonomy, PI / 2.0) < 1e-9, "{}", l.holonomy);
        let a = enclosed_area(&geometry(&c, DiffScheme::Fourier).unwrap()).unwrap();
        assert!(angle_distance(l.holonomy, a / 2.0) < 1e-9);
        for l in [eq, l] {
            assert!(l.fiber_residual() < 1e-8);
            assert!(l.horizontality_residual() < 1e-8);
        }
    }

    #[test]
    fn reversed_curve_gets_the_complementary_phase() {
        let c = DiscreteCurve::latitude(256, 1.0).unwrap();
        let f = lift(&c);
        let r = lift(&c.clone().with_orientation(Orientation::Reverse));
        let a = TAU * (1.0 - 1f64.cos());
        assert!(angle_distance(f.holonomy, a / 2.0) < 1e-9);
        assert!(angle_distance(r.holonomy, (4.0 * PI - a) / 2.0) < 1e-9);
    }

    #[test]
    fn seed_off_fiber_is_refused() {
        let c = DiscreteCurve::great_circle(64).unwrap();
        assert!(matches!(
            horizontal_lift(&c, Quaternion::J),
            Err(Error::SeedOffFiber { .. })
        ));
    }

    #[test]
    fn lifts_from_rotated_seeds_differ_by_a_fiber_factor() {
        let c = DiscreteCurve::latitude(128, 0.9).unwrap();
        let q = seed_over(&c.nodes()[0]);
        let f = Quaternion::exp_i(0.7);
        let (a, b) = (lift(&c), horizontal_lift(&c, f * q).unwrap());
        for (x, y) in a.nodes.iter().zip(&b.nodes) {
            assert!((f * *x - *y).norm() < 1e-12);
        }
    }

    fn torus(c: &DiscreteCurve, m: usize) -> (HopfTorusMesh, CurveGeometry) {
        (
            build_torus(&lift(c), m).unwrap(),
            geometry(c, DiffScheme::FiniteDifference).unwrap(),
        )
    }

    #[test]
    fn clifford_torus() {
        let c = DiscreteCurve::great_circle(128).unwrap();
        let (mesh, geom) = torus(&c, 64);
        for q in &mesh.points {
            assert!((q.norm() - 1.0).abs() < 1e-12);
        }
        let surf = surface_geometry(&mesh).unwrap();
        for p in 0..mesh.points.len() {
            assert!(surf.mean_scalar[p].abs() < 1e-6);
            assert!((surf.a0_sq[p] - 2.0).abs() < 1e-6);
            assert!((surf.frame_offdiag[p].abs() - 1.0).abs() < 1e-6);
        }
        let ids = verify_hopf_identities(&mesh, &geom).unwrap();
        assert!(
            (ids.willmore - 2.0 * PI * PI).abs() < 1e-4 * ids.willmore,
            "{}",
            ids.willmore
        );
        assert!((2.0 * PI * PI - 19.739_208_802_178_716).abs() < 1e-12);
    }

    #[test]
    fn fibers_close_and_project_to_the_node() {
        let c = DiscreteCurve::latitude(64, 1.1).unwrap();
        let (mesh, _) = torus(&c, 24);
        for m in 0..mesh.n_s {
            let chord: f64 = (0..mesh.n_phi)
                .map(|n| (mesh.point(m, (n + 1) % mesh.n_phi) - mesh.point(m, n)).norm())
                .sum();
            assert!((chord - TAU).abs() < 0.02);
            for n in 0..mesh.n_phi {
                assert!((hopf_raw(&mesh.point(m, n)).s2_coords() - c.nodes()[m]).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn latitude_torus_values() {
        let theta = FRAC_PI_3;
        let c = DiscreteCurve::latitude(256, theta).unwrap();
        let (mesh, geom) = torus(&c, 64);
        let (surf, ids, corr) = verify_all(&mesh, &geom).unwrap();
        let k = 1.0 / theta.tan();
        for p in 0..mesh.points.len() {
            assert!((surf.mean_scalar[p] - 2.0 * k).abs() < 1e-6);
            assert!((surf.a0_sq[p] - 8.0 / 3.0).abs() < 1e-6);
            assert!((surf.frame_offdiag[p].abs() - 1.0).abs() < 1e-6);
        }
        assert!((2.0 * k - 1.154_700_538_379_251_5).abs() < 1e-12);
        assert!(ids.willmore_energy < 1e-5, "{ids:?}");
        assert!((ids.pi_energy - 22.792_913_087_952_36).abs() < 1e-4);
        assert!(ids.pi_energy < 8.0 * PI);
        assert!(ids.max_pointwise() < 1e-6, "{ids:?}");
        assert!(corr.gradient < 1e-6 && corr.velocity < 1e-6, "{corr:?}");
        assert!((corr.pushed_velocity_sup - 3f64.sqrt() / 4.0).abs() < 1e-4);
        assert!(surf.r4_second_residual < 1e-4 && surf.r4_mean_residual < 1e-4);
    }

    #[test]
    fn mismatched_curve_is_refused() {
        let c = DiscreteCurve::latitude(128, 1.0).unwrap();
        let (mesh, _) = torus(&c, 16);
        let other = geometry(
            &DiscreteCurve::latitude(128, 1.1).unwrap(),
            DiffScheme::FiniteDifference,
        )
        .unwrap();
        assert!(matches!(
            verify_hopf_identities(&mesh, &other),
            Err(Error::MeshCurveMismatch(_))
        ));
    }

    #[test]
    fn mesh_export_shape() {
        let c = DiscreteCurve::latitude(64, 1.0).unwrap();
        let (mesh, _) = torus(&c, 16);
        let mut buf = Vec::new();
        mesh.write_mesh(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 65 * 16);
        assert_eq!(text.lines().filter(|l| l.starts_with("v3 ")).count(), 65 * 16);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 64 * 16);
    }
}
