//! Per-mode velocity profiles, polar differential operators, and norms.
//!
//! A velocity field on the exterior domain is expanded as
//! `v(r, theta) = sum_n (v_{r,n}(r) e_r + v_{theta,n}(r) e_theta) e^{i n theta}`.
//! Reality of the physical field is the conjugate symmetry
//! `v_{-n} = conj(v_n)`. For a single mode the scalar vorticity and
//! divergence reduce to
//!
//! ```text
//! rot_n v = (1/r) (r v_theta)' - (i n / r) v_r,
//! div_n v = (1/r) (r v_r)' + (i n / r) v_theta,
//! ```
//!
//! and the Dirichlet gradient energy (the `H^1` seminorm squared, with the
//! angular factor `2 pi` included) is
//!
//! ```text
//! ||grad v_n||^2 = 2 pi int_1^oo [ |v_r'|^2 + |v_theta'|^2
//!     + ((1 + n^2)(|v_r|^2 + |v_theta|^2) + 4 n Im(v_r conj(v_theta))) / r^2 ] r dr,
//! ```
//!
//! which is bounded below by `(|n| - 1)^2 (||v_r / r||^2 + ||v_theta / r||^2)`
//! since the coupling matrix has smallest eigenvalue `(|n| - 1)^2`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Measure, RadialGrid};
use crate::{C, I};

/// Angular prefactor of all integral norms.
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// One angular Fourier mode of a velocity field, sampled on the grid nodes.
#[derive(Debug, Clone)]
pub struct ModeProfile {
    /// Mode index.
    pub n: i32,
    /// Radial component `v_{r,n}(r_j)`.
    pub v_r: Vec<C>,
    /// Azimuthal component `v_{theta,n}(r_j)`.
    pub v_theta: Vec<C>,
    /// Cached vorticity, when the producing solver already has it.
    pub omega: Option<Vec<C>>,
    /// Cached stream function, when the mode came from one.
    pub psi: Option<Vec<C>>,
}

impl ModeProfile {
    /// The zero profile for mode `n`.
    pub fn zero(n: i32, grid: &RadialGrid) -> Self {
        let z = vec![C::default(); grid.n_nodes()];
        ModeProfile {
            n,
            v_r: z.clone(),
            v_theta: z,
            omega: None,
            psi: None,
        }
    }

    /// Builds a profile from explicit components.
    pub fn new(n: i32, v_r: Vec<C>, v_theta: Vec<C>) -> Self {
        assert_eq!(v_r.len(), v_theta.len());
        ModeProfile {
            n,
            v_r,
            v_theta,
            omega: None,
            psi: None,
        }
    }

    /// Pointwise magnitude `sqrt(|v_r|^2 + |v_theta|^2)` at node `j`.
    pub fn abs_at(&self, j: usize) -> f64 {
        (self.v_r[j].norm_sqr() + self.v_theta[j].norm_sqr()).sqrt()
    }

    /// `self - other` (same mode index required); caches are dropped.
    pub fn sub(&self, other: &ModeProfile) -> ModeProfile {
        assert_eq!(self.n, other.n, "mode indices must match");
        ModeProfile::new(
            self.n,
            self.v_r.iter().zip(&other.v_r).map(|(a, b)| a - b).collect(),
            self.v_theta
                .iter()
                .zip(&other.v_theta)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// `self + c * other`; caches combine when both sides have them.
    pub fn add_scaled(&self, c: C, other: &ModeProfile) -> ModeProfile {
        assert_eq!(self.n, other.n, "mode indices must match");
        let comb = |a: &[C], b: &[C]| -> Vec<C> {
            a.iter().zip(b).map(|(x, y)| x + c * y).collect()
        };
        let omega = match (&self.omega, &other.omega) {
            (Some(a), Some(b)) => Some(comb(a, b)),
            _ => None,
        };
        let psi = match (&self.psi, &other.psi) {
            (Some(a), Some(b)) => Some(comb(a, b)),
            _ => None,
        };
        ModeProfile {
            n: self.n,
            v_r: comb(&self.v_r, &other.v_r),
            v_theta: comb(&self.v_theta, &other.v_theta),
            omega,
            psi,
        }
    }

    /// The conjugate-reflected profile at mode `-n` (same physical field).
    pub fn conj_reflect(&self) -> ModeProfile {
        ModeProfile {
            n: -self.n,
            v_r: self.v_r.iter().map(|z| z.conj()).collect(),
            v_theta: self.v_theta.iter().map(|z| z.conj()).collect(),
            omega: self.omega.as_ref().map(|w| w.iter().map(|z| z.conj()).collect()),
            psi: self.psi.as_ref().map(|w| w.iter().map(|z| z.conj()).collect()),
        }
    }

}

/// Multi-mode solution tied to the grid it lives on.
#[derive(Clone)]
pub struct FlowSolution {
    /// Shared grid.
    pub grid: Arc<RadialGrid>,
    /// Modes by index; reality requires `modes[-n] = conj(modes[n])`.
    pub modes: BTreeMap<i32, ModeProfile>,
    /// Per-mode relative momentum residuals recorded by the solver.
    pub residuals: BTreeMap<i32, f64>,
    /// Number of outer-radius doublings performed while solving.
    pub regrids: u32,
}

impl std::fmt::Debug for FlowSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowSolution")
            .field("r_max", &self.grid.r_max())
            .field("m", &self.grid.m())
            .field("modes", &self.modes.keys().collect::<Vec<_>>())
            .field("residuals", &self.residuals)
            .field("regrids", &self.regrids)
            .finish()
    }
}

impl FlowSolution {
    /// Empty solution on `grid`.
    pub fn empty(grid: Arc<RadialGrid>) -> Self {
        FlowSolution {
            grid,
            modes: BTreeMap::new(),
            residuals: BTreeMap::new(),
            regrids: 0,
        }
    }
}

/// Scalar vorticity `rot_n v` of one mode.
pub fn rot_mode(grid: &RadialGrid, p: &ModeProfile) -> Vec<C> {
    let r = grid.nodes();
    let rv: Vec<C> = p.v_theta.iter().zip(r).map(|(v, &r)| v * r).collect();
    let d = grid.deriv1(&rv);
    (0..grid.n_nodes())
        .map(|j| d[j] * (1.0 / r[j]) - I * (p.n as f64 / r[j]) * p.v_r[j])
        .collect()
}

/// Divergence `div_n v` of one mode.
pub fn div_mode(grid: &RadialGrid, p: &ModeProfile) -> Vec<C> {
    let r = grid.nodes();
    let rv: Vec<C> = p.v_r.iter().zip(r).map(|(v, &r)| v * r).collect();
    let d = grid.deriv1(&rv);
    (0..grid.n_nodes())
        .map(|j| d[j] * (1.0 / r[j]) + I * (p.n as f64 / r[j]) * p.v_theta[j])
        .collect()
}

/// Vorticity of one mode, preferring the solver's cache.
pub fn vorticity(grid: &RadialGrid, p: &ModeProfile) -> Vec<C> {
    match &p.omega {
        Some(w) => w.clone(),
        None => rot_mode(grid, p),
    }
}

/// Gradient energy `||grad v_n||^2` (the square of the `H^1` seminorm).
pub fn gradient_energy(grid: &RadialGrid, p: &ModeProfile) -> f64 {
    let r = grid.nodes();
    let d_vr = grid.deriv1(&p.v_r);
    let d_vt = grid.deriv1(&p.v_theta);
    let n = p.n as f64;
    let integrand: Vec<f64> = (0..grid.n_nodes())
        .map(|j| {
            let ang = (1.0 + n * n) * (p.v_r[j].norm_sqr() + p.v_theta[j].norm_sqr())
                + 4.0 * n * (p.v_r[j] * p.v_theta[j].conj()).im;
            d_vr[j].norm_sqr() + d_vt[j].norm_sqr() + ang / (r[j] * r[j])
        })
        .collect();
    TWO_PI * grid.integrate(&integrand, Measure::RDr)
}

/// Pointwise supremum of the gradient magnitude of one mode.
pub fn gradient_linf(grid: &RadialGrid, p: &ModeProfile) -> f64 {
    let r = grid.nodes();
    let d_vr = grid.deriv1(&p.v_r);
    let d_vt = grid.deriv1(&p.v_theta);
    let n = p.n as f64;
    (0..grid.n_nodes())
        .map(|j| {
            let ang = (1.0 + n * n) * (p.v_r[j].norm_sqr() + p.v_theta[j].norm_sqr())
                + 4.0 * n * (p.v_r[j] * p.v_theta[j].conj()).im;
            (d_vr[j].norm_sqr() + d_vt[j].norm_sqr() + ang / (r[j] * r[j])).sqrt()
        })
        .fold(0.0, f64::max)
}

/// `L^2` norm of a scalar radial profile against `2 pi r dr`.
pub fn l2_scalar(grid: &RadialGrid, f: &[C]) -> f64 {
    let sq: Vec<f64> = f.iter().map(|z| z.norm_sqr()).collect();
    (TWO_PI * grid.integrate(&sq, Measure::RDr)).sqrt()
}

/// Weighted `L^2` norm with weight `w(r) = sqrt(r^2 - 1) / r`.
pub fn weighted_l2_scalar(grid: &RadialGrid, f: &[C]) -> f64 {
    let r = grid.nodes();
    let sq: Vec<f64> = f
        .iter()
        .zip(r)
        .map(|(z, &r)| z.norm_sqr() * (r * r - 1.0) / (r * r))
        .collect();
    (TWO_PI * grid.integrate(&sq, Measure::RDr)).sqrt()
}

/// Norm bundle for one mode or a whole solution.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct NormReport {
    /// `L^2` norm against `2 pi r dr`.
    pub l2: f64,
    /// Supremum of the pointwise magnitude.
    pub linf: f64,
    /// `H^1` seminorm (square root of the gradient energy).
    pub h1_seminorm: f64,
    /// `L^2` norm with the wall weight `sqrt(r^2 - 1) / r`.
    pub weighted_l2: f64,
    /// Source-space norm: `L^1(2 pi r dr)` of the axisymmetric part plus
    /// `L^2` of the rest.
    pub y_norm: f64,
    /// Solution-space norm: sup norms of the axisymmetric part and of each
    /// nonzero mode, plus `L^2` and gradient `L^2` of the nonzero-mode sum.
    pub x0_norm: f64,
}

/// Norms of a single mode.
pub fn mode_norms(grid: &RadialGrid, p: &ModeProfile) -> NormReport {
    let sq: Vec<f64> = (0..grid.n_nodes())
        .map(|j| p.v_r[j].norm_sqr() + p.v_theta[j].norm_sqr())
        .collect();
    let l2 = (TWO_PI * grid.integrate(&sq, Measure::RDr)).sqrt();
    let linf = (0..grid.n_nodes())
        .map(|j| p.abs_at(j))
        .fold(0.0, f64::max);
    let h1 = gradient_energy(grid, p).sqrt();
    let r = grid.nodes();
    let wsq: Vec<f64> = sq
        .iter()
        .zip(r)
        .map(|(&s, &r)| s * (r * r - 1.0) / (r * r))
        .collect();
    let weighted = (TWO_PI * grid.integrate(&wsq, Measure::RDr)).sqrt();
    let (y_norm, x0_norm) = if p.n == 0 {
        let absv: Vec<f64> = sq.iter().map(|&s| s.sqrt()).collect();
        let l1 = TWO_PI * grid.integrate(&absv, Measure::RDr);
        (l1, linf + gradient_linf(grid, p))
    } else {
        (l2, linf)
    };
    NormReport {
        l2,
        linf,
        h1_seminorm: h1,
        weighted_l2: weighted,
        y_norm,
        x0_norm,
    }
}

/// Norms of a whole solution.
///
/// `linf` aggregates by mode-sum (an upper bound for the physical sup);
/// `x0_norm` is the sum of the axisymmetric sup norms, the `L^2` and
/// gradient-`L^2` norms of the nonaxisymmetric part, and the per-mode sup
/// norms of the nonaxisymmetric modes.
pub fn flow_norms(grid: &RadialGrid, sol: &FlowSolution) -> NormReport {
    let mut l2_sq = 0.0;
    let mut linf = 0.0;
    let mut h1_sq = 0.0;
    let mut w_sq = 0.0;
    let mut y = 0.0;
    let mut y_q_sq = 0.0;
    let mut x0 = 0.0;
    let mut q_l2_sq = 0.0;
    let mut q_h1_sq = 0.0;
    for p in sol.modes.values() {
        let n = mode_norms(grid, p);
        l2_sq += n.l2 * n.l2;
        linf += n.linf;
        h1_sq += n.h1_seminorm * n.h1_seminorm;
        w_sq += n.weighted_l2 * n.weighted_l2;
        if p.n == 0 {
            y += n.y_norm;
            x0 += n.x0_norm;
        } else {
            y_q_sq += n.l2 * n.l2;
            x0 += n.linf;
            q_l2_sq += n.l2 * n.l2;
            q_h1_sq += n.h1_seminorm * n.h1_seminorm;
        }
    }
    NormReport {
        l2: l2_sq.sqrt(),
        linf,
        h1_seminorm: h1_sq.sqrt(),
        weighted_l2: w_sq.sqrt(),
        y_norm: y + y_q_sq.sqrt(),
        x0_norm: x0 + q_l2_sq.sqrt() + q_h1_sq.sqrt(),
    }
}

/// The four ball-norm components used by the nonlinear iteration:
/// `(||P_0 v||_inf, ||grad P_0 v||_inf, ||Q v||_{L^2}, ||grad Q v||_{L^2})`.
pub fn ball_components(grid: &RadialGrid, sol: &FlowSolution) -> [f64; 4] {
    let mut p0_inf = 0.0;
    let mut p0_grad = 0.0;
    let mut q_l2_sq = 0.0;
    let mut q_h1_sq = 0.0;
    for p in sol.modes.values() {
        if p.n == 0 {
            p0_inf = (0..grid.n_nodes()).map(|j| p.abs_at(j)).fold(0.0, f64::max);
            p0_grad = gradient_linf(grid, p);
        } else {
            let n = mode_norms(grid, p);
            q_l2_sq += n.l2 * n.l2;
            q_h1_sq += n.h1_seminorm * n.h1_seminorm;
        }
    }
    [p0_inf, p0_grad, q_l2_sq.sqrt(), q_h1_sq.sqrt()]
}

/// Background swirl `U = e_theta / r` with pressure `P = -1 / (2 r^2)`,
/// an exact stationary solution in the rotating frame: it is irrotational,
/// divergence free, and satisfies the radial balance `P' = U^2 / r`.
#[derive(Debug, Clone, Copy)]
pub struct BackgroundFlow {
    /// Rotation speed of the disk.
    pub alpha: f64,
}

impl BackgroundFlow {
    /// Azimuthal velocity at radius `r`.
    pub fn velocity(&self, r: f64) -> f64 {
        1.0 / r
    }

    /// Pressure at radius `r`.
    pub fn pressure(&self, r: f64) -> f64 {
        -0.5 / (r * r)
    }

    /// The swirl as an axisymmetric mode profile on `grid`.
    pub fn profile(&self, grid: &RadialGrid) -> ModeProfile {
        let v_theta: Vec<C> = grid.nodes().iter().map(|&r| C::new(1.0 / r, 0.0)).collect();
        let v_r = vec![C::default(); grid.n_nodes()];
        ModeProfile::new(0, v_r, v_theta)
    }
}

/// Physical-space samples of a solution on a tensor grid in `(theta, r)`.
pub struct PhysicalField {
    /// Angular sample points.
    pub theta: Vec<f64>,
    /// `u_r[k][j]` at `(theta_k, r_j)`.
    pub u_r: Vec<Vec<f64>>,
    /// `u_theta[k][j]` at `(theta_k, r_j)`.
    pub u_theta: Vec<Vec<f64>>,
}

/// Relative conjugate-symmetry defect of a mode pair, or of the
/// imaginary part of mode zero.
fn symmetry_defect(p: &ModeProfile, q: &ModeProfile) -> f64 {
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..p.v_r.len() {
        err = err.max((p.v_r[j] - q.v_r[j].conj()).norm());
        err = err.max((p.v_theta[j] - q.v_theta[j].conj()).norm());
        scale = scale.max(p.abs_at(j)).max(q.abs_at(j));
    }
    if scale == 0.0 {
        0.0
    } else {
        err / scale
    }
}

/// Evaluates the real velocity field on `n_theta` equispaced angles.
///
/// Fails with [`Error::SymmetryViolation`] unless every mode `n` has a
/// partner `-n` with `v_{-n} = conj(v_n)` to relative precision `1e-10`
/// (and mode zero is real to the same precision).
pub fn synthesize_physical(
    grid: &RadialGrid,
    sol: &FlowSolution,
    n_theta: usize,
) -> Result<PhysicalField> {
    const TOL: f64 = 1e-10;
    for (&n, p) in &sol.modes {
        if n == 0 {
            let mut err: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for j in 0..p.v_r.len() {
                err = err.max(p.v_r[j].im.abs()).max(p.v_theta[j].im.abs());
                scale = scale.max(p.abs_at(j));
            }
            if scale > 0.0 && err / scale > TOL {
                return Err(Error::SymmetryViolation {
                    n: 0,
                    mismatch: err / scale,
                });
            }
            continue;
        }
        match sol.modes.get(&-n) {
            None => {
                return Err(Error::SymmetryViolation {
                    n,
                    mismatch: f64::INFINITY,
                })
            }
            Some(q) => {
                let d = symmetry_defect(p, q);
                if d > TOL {
                    return Err(Error::SymmetryViolation { n, mismatch: d });
                }
            }
        }
    }
    let theta: Vec<f64> = (0..n_theta)
        .map(|k| TWO_PI * k as f64 / n_theta as f64)
        .collect();
    let mut u_r = vec![vec![0.0; grid.n_nodes()]; n_theta];
    let mut u_theta = vec![vec![0.0; grid.n_nodes()]; n_theta];
    for (k, &th) in theta.iter().enumerate() {
        for (&n, p) in &sol.modes {
            let phase = C::new(0.0, n as f64 * th).exp();
            for j in 0..grid.n_nodes() {
                u_r[k][j] += (p.v_r[j] * phase).re;
                u_theta[k][j] += (p.v_theta[j] * phase).re;
            }
        }
    }
    Ok(PhysicalField { theta, u_r, u_theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> RadialGrid {
        RadialGrid::new(30.0, 1024, 6.0).unwrap()
    }

    /// Mode built from a stream function: `v_r = (i n / r) psi`,
    /// `v_theta = -psi'` with analytic derivative.
    fn from_stream(g: &RadialGrid, n: i32) -> (ModeProfile, Vec<C>) {
        // psi = (r - 1)^2 e^{-(r - 1)}; psi' = (r-1)(2 - (r-1)) e^{-(r-1)}.
        let mut v_r = Vec::new();
        let mut v_t = Vec::new();
        let mut psi_v = Vec::new();
        for &r in g.nodes() {
            let s = r - 1.0;
            let e = (-s).exp();
            let psi = s * s * e;
            let dpsi = s * (2.0 - s) * e;
            v_r.push(I * (n as f64 / r) * psi);
            v_t.push(C::new(-dpsi, 0.0));
            psi_v.push(C::new(psi, 0.0));
        }
        (ModeProfile::new(n, v_r, v_t), psi_v)
    }

    #[test]
    fn stream_modes_are_divergence_free() {
        let g = grid();
        let (p, _) = from_stream(&g, 3);
        let d = div_mode(&g, &p);
        let scale = (0..g.n_nodes()).map(|j| p.abs_at(j)).fold(0.0, f64::max);
        for z in &d {
            assert!(z.norm() < 1e-8 * scale, "div = {z}");
        }
    }

    #[test]
    fn rot_matches_analytic() {
        let g = grid();
        let (p, _) = from_stream(&g, 2);
        // rot v = -psi'' - psi'/r + n^2 psi / r^2 with
        // psi'' = (2 - 4s + s^2) e^{-s}, s = r - 1.
        let w = rot_mode(&g, &p);
        for (j, &r) in g.nodes().iter().enumerate() {
            let s = r - 1.0;
            let e = (-s).exp();
            let psi = s * s * e;
            let dpsi = s * (2.0 - s) * e;
            let ddpsi = (2.0 - 4.0 * s + s * s) * e;
            let expect = -ddpsi - dpsi / r + 4.0 * psi / (r * r);
            assert!(
                (w[j] - C::new(expect, 0.0)).norm() < 1e-7,
                "j = {j}: {} vs {expect}",
                w[j]
            );
        }
    }

    #[test]
    fn gradient_energy_against_fine_simpson() {
        let g = grid();
        let n = 3;
        // v_r = (r-1) e^{-(r-1)}, v_theta = i (r-1)^2 e^{-(r-1)}.
        let p = ModeProfile::new(
            n,
            g.nodes()
                .iter()
                .map(|&r| C::new((r - 1.0) * (-(r - 1.0)).exp(), 0.0))
                .collect(),
            g.nodes()
                .iter()
                .map(|&r| I * (r - 1.0) * (r - 1.0) * (-(r - 1.0)).exp())
                .collect(),
        );
        let got = gradient_energy(&g, &p);
        // Independent Simpson quadrature of the analytic integrand.
        let nn = n as f64;
        let f = |r: f64| -> f64 {
            let s = r - 1.0;
            let e = (-s).exp();
            let vr = s * e;
            let vt = s * s * e; // imaginary part; |v_t| = vt
            let dvr = (1.0 - s) * e;
            let dvt = s * (2.0 - s) * e;
            // Im(v_r conj(v_theta)) = Im(vr * (-i vt)) = -vr vt.
            let ang = (1.0 + nn * nn) * (vr * vr + vt * vt) - 4.0 * nn * vr * vt;
            (dvr * dvr + dvt * dvt + ang / (r * r)) * r
        };
        let k = 200_000;
        let h = 29.0 / k as f64;
        let mut acc = f(1.0) + f(30.0);
        for i in 1..k {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(1.0 + i as f64 * h);
        }
        let expect = TWO_PI * acc * h / 3.0;
        assert_relative_eq!(got, expect, max_relative = 1e-8);
    }

    #[test]
    fn gradient_energy_lower_bound() {
        let g = grid();
        for n in [1i32, 2, 5, 9] {
            let (p, _) = from_stream(&g, n);
            let e = gradient_energy(&g, &p);
            let r = g.nodes();
            let over_r: Vec<f64> = (0..g.n_nodes())
                .map(|j| (p.v_r[j].norm_sqr() + p.v_theta[j].norm_sqr()) / (r[j] * r[j]))
                .collect();
            let bound = (n as f64 - 1.0).powi(2) * TWO_PI * g.integrate(&over_r, Measure::RDr);
            assert!(
                e >= bound * (1.0 - 1e-10),
                "n = {n}: energy {e} < bound {bound}"
            );
        }
    }

    #[test]
    fn swirl_norms() {
        let g = grid();
        let bg = BackgroundFlow { alpha: 2.0 };
        let p = bg.profile(&g);
        let rep = mode_norms(&g, &p);
        // L^2: 2 pi int r^{-2} r dr = 2 pi ln 30.
        assert_relative_eq!(rep.l2 * rep.l2, TWO_PI * 30f64.ln(), max_relative = 1e-9);
        assert_relative_eq!(rep.linf, 1.0, max_relative = 1e-14);
        // Weighted: 2 pi int (r^2-1)/r^4 r dr = 2 pi (ln 30 + (30^{-2} - 1)/2).
        assert_relative_eq!(
            rep.weighted_l2 * rep.weighted_l2,
            TWO_PI * (30f64.ln() + (30f64.powi(-2) - 1.0) / 2.0),
            max_relative = 1e-8
        );
        // Gradient energy of e_theta / r: integrand |v'|^2 + |v|^2/r^2 = 2 r^{-4}.
        assert_relative_eq!(
            rep.h1_seminorm * rep.h1_seminorm,
            TWO_PI * (1.0 - 30f64.powi(-2)),
            max_relative = 1e-8
        );
    }

    #[test]
    fn background_is_irrotational_and_balanced() {
        let g = grid();
        let bg = BackgroundFlow { alpha: 1.0 };
        let p = bg.profile(&g);
        let w = rot_mode(&g, &p);
        let d = div_mode(&g, &p);
        for j in 0..g.n_nodes() {
            assert!(w[j].norm() < 1e-9, "rot at {j}: {}", w[j]);
            assert!(d[j].norm() < 1e-12);
        }
        assert_relative_eq!(bg.velocity(1.0), 1.0);
        // Radial momentum balance P' = U^2 / r.
        for &r in [1.0, 1.7, 4.0, 12.0].iter() {
            let dp = (bg.pressure(r + 1e-6) - bg.pressure(r - 1e-6)) / 2e-6;
            assert_relative_eq!(dp, bg.velocity(r).powi(2) / r, max_relative = 1e-8);
        }
    }

    #[test]
    fn synthesis_requires_symmetry() {
        let g = Arc::new(grid());
        let (p, _) = from_stream(&g, 2);
        let mut sol = FlowSolution::empty(g.clone());
        sol.modes.insert(2, p.clone());
        assert!(matches!(
            synthesize_physical(&g, &sol, 8),
            Err(Error::SymmetryViolation { n: 2, .. })
        ));
        sol.modes.insert(-2, p.conj_reflect());
        let phys = synthesize_physical(&g, &sol, 8).unwrap();
        // Against a direct evaluation: u_r(theta) = 2 Re(v_r e^{2 i theta}).
        let th = phys.theta[3];
        for j in (0..g.n_nodes()).step_by(97) {
            let expect = 2.0 * (p.v_r[j] * C::new(0.0, 2.0 * th).exp()).re;
            assert_relative_eq!(phys.u_r[3][j], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn ball_components_split_modes() {
        let g = Arc::new(grid());
        let bg = BackgroundFlow { alpha: 1.0 };
        let mut sol = FlowSolution::empty(g.clone());
        sol.modes.insert(0, bg.profile(&g));
        let (p, _) = from_stream(&g, 1);
        sol.modes.insert(1, p.clone());
        sol.modes.insert(-1, p.conj_reflect());
        let b = ball_components(&g, &sol);
        assert_relative_eq!(b[0], 1.0, max_relative = 1e-12);
        assert!(b[1] > 0.0 && b[2] > 0.0 && b[3] > 0.0);
        let n1 = mode_norms(&g, &p);
        assert_relative_eq!(b[2], (2.0 * n1.l2 * n1.l2).sqrt(), max_relative = 1e-12);
    }
}
