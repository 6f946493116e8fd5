//! Graded radial grids on `[1, R_max]` with fourth-order finite differences
//! and cell-based quadrature.
//!
//! Nodes follow the sinh map
//!
//! ```text
//! r_j = 1 + (R_max - 1) * sinh(sigma * j / M) / sinh(sigma),   j = 0..=M,
//! ```
//!
//! which clusters points near the disk boundary `r = 1` (first spacing
//! `~ (R_max - 1) * sigma / (M * sinh sigma)`) while keeping a smooth,
//! analytic map `r(x)` of the uniform variable `x = j / M`. Derivatives in
//! `r` are taken by differentiating in `x` with fourth-order stencils and
//! applying the chain rule `d/dr = (1/r') d/dx`,
//! `d^2/dr^2 = (1/r'^2) d^2/dx^2 - (r''/r'^3) d/dx`. As `sigma -> 0` the map
//! degenerates smoothly to the uniform grid.
//!
//! Quadrature integrates the cubic interpolant through the four nodes
//! nearest each cell, so `integrate` is exact for polynomials of degree 3
//! (degree 2 against the measure `r dr`), and cumulative integrals are
//! prefix or suffix sums of the same cell values. Suffix sums accumulate
//! from the outer end so that small tail contributions are not lost to
//! cancellation.

use crate::error::{Error, Result};
use crate::C;

/// Below this grading strength the map is treated as exactly linear.
const SIGMA_LINEAR: f64 = 1e-8;

/// Integration measure on the half-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// Plain line measure `dr`.
    Dr,
    /// Area-weighted measure `r dr` (polar Jacobian).
    RDr,
}

/// Scalar types the grid operators act on.
pub trait Scalar:
    Copy
    + Default
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
{
}
impl Scalar for f64 {}
impl Scalar for C {}

struct QuadCell {
    base: usize,
    len: usize,
    w_dr: [f64; 4],
    w_rdr: [f64; 4],
}

/// Sinh-graded grid on `[1, R_max]` with `M + 1` nodes.
pub struct RadialGrid {
    r_max: f64,
    m: usize,
    sigma: f64,
    h: f64,
    nodes: Vec<f64>,
    rp: Vec<f64>,
    rpp: Vec<f64>,
    cells: Vec<QuadCell>,
    poly_degree: usize,
}

// One-dimensional stencil tables on the uniform x grid.
// First derivative, weights / (12 h):
const D1_J0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const D1_J1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const D1_IN: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
// Second derivative, weights / (12 h^2):
const D2_J0: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
const D2_J1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];
const D2_IN: [f64; 6] = [-1.0, 16.0, -30.0, 16.0, -1.0, 0.0];

const GAUSS_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

fn lagrange(xs: &[f64], i: usize, t: f64) -> f64 {
    let mut p = 1.0;
    for (k, &xk) in xs.iter().enumerate() {
        if k != i {
            p *= (t - xk) / (xs[i] - xk);
        }
    }
    p
}

impl RadialGrid {
    /// Builds the grid. Requires `r_max > 1`, `m >= 1`, `sigma >= 0`.
    ///
    /// ```
    /// use rotorflow::grid::RadialGrid;
    /// let g = RadialGrid::new(2.0, 1, 0.0).unwrap();
    /// assert_eq!(g.nodes(), &[1.0, 2.0]);
    /// let g = RadialGrid::new(30.0, 2048, 6.0).unwrap();
    /// assert_eq!(g.nodes().len(), 2049);
    /// let first = g.nodes()[1] - g.nodes()[0];
    /// assert!(first > 4.1e-4 && first < 4.3e-4);
    /// ```
    pub fn new(r_max: f64, m: usize, sigma: f64) -> Result<Self> {
        if !(r_max > 1.0) || !r_max.is_finite() {
            return Err(Error::Config(format!("r_max must exceed 1, got {r_max}")));
        }
        if m == 0 {
            return Err(Error::Config("grid needs at least one cell".into()));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Config(format!("sigma must be >= 0, got {sigma}")));
        }
        let h = 1.0 / m as f64;
        let span = r_max - 1.0;
        let linear = sigma < SIGMA_LINEAR;
        let mut nodes = Vec::with_capacity(m + 1);
        let mut rp = Vec::with_capacity(m + 1);
        let mut rpp = Vec::with_capacity(m + 1);
        for j in 0..=m {
            let x = j as f64 * h;
            if linear {
                nodes.push(1.0 + span * x);
                rp.push(span);
                rpp.push(0.0);
            } else {
                let sh = sigma.sinh();
                nodes.push(1.0 + span * (sigma * x).sinh() / sh);
                rp.push(span * sigma * (sigma * x).cosh() / sh);
                rpp.push(span * sigma * sigma * (sigma * x).sinh() / sh);
            }
        }
        // Pin the endpoints exactly.
        nodes[0] = 1.0;
        nodes[m] = r_max;

        let (cells, poly_degree) = Self::build_cells(&nodes, m);
        Ok(RadialGrid {
            r_max,
            m,
            sigma,
            h,
            nodes,
            rp,
            rpp,
            cells,
            poly_degree,
        })
    }

    fn build_cells(nodes: &[f64], m: usize) -> (Vec<QuadCell>, usize) {
        let mut cells = Vec::with_capacity(m);
        if m < 3 {
            for j in 0..m {
                let (a, b) = (nodes[j], nodes[j + 1]);
                let w = 0.5 * (b - a);
                cells.push(QuadCell {
                    base: j,
                    len: 2,
                    w_dr: [w, w, 0.0, 0.0],
                    w_rdr: [w * a, w * b, 0.0, 0.0],
                });
            }
            return (cells, 1);
        }
        for j in 0..m {
            let base = j.saturating_sub(1).min(m - 3);
            let xs = &nodes[base..base + 4];
            let (a, b) = (nodes[j], nodes[j + 1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut w_dr = [0.0; 4];
            let mut w_rdr = [0.0; 4];
            for (gx, gw) in GAUSS_X.iter().zip(GAUSS_W.iter()) {
                let t = mid + half * gx;
                let w = half * gw;
                for i in 0..4 {
                    let l = lagrange(xs, i, t);
                    w_dr[i] += w * l;
                    w_rdr[i] += w * t * l;
                }
            }
            cells.push(QuadCell {
                base,
                len: 4,
                w_dr,
                w_rdr,
            });
        }
        (cells, 3)
    }

    /// Grid nodes `r_0 = 1 < r_1 < ... < r_M = R_max`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of cells `M`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of nodes `M + 1`.
    pub fn n_nodes(&self) -> usize {
        self.m + 1
    }

    /// Outer truncation radius.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Grading strength of the sinh map.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Degree up to which `integrate` is exact against `dr`.
    pub fn quadrature_degree(&self) -> usize {
        self.poly_degree
    }

    /// Checks that at least `min_points` nodes lie in `[1, 1 + layer_width]`.
    pub fn ensure_layer_resolved(&self, layer_width: f64, min_points: usize) -> Result<()> {
        let got = self
            .nodes
            .iter()
            .take_while(|&&r| r <= 1.0 + layer_width)
            .count();
        if got < min_points {
            Err(Error::GradingInsufficient {
                got,
                need: min_points,
                layer_width,
            })
        } else {
            Ok(())
        }
    }

    fn d1_x<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let m = self.m;
        assert!(m >= 5, "derivatives require at least 5 cells, got {m}");
        assert_eq!(f.len(), m + 1, "profile length must match node count");
        let scale = 1.0 / (12.0 * self.h);
        let mut out = vec![T::default(); m + 1];
        let dot5 = |w: &[f64; 5], base: usize| -> T {
            let mut acc = T::default();
            for (k, &wk) in w.iter().enumerate() {
                acc = acc + f[base + k] * wk;
            }
            acc
        };
        out[0] = dot5(&D1_J0, 0) * scale;
        out[1] = dot5(&D1_J1, 0) * scale;
        for j in 2..m - 1 {
            out[j] = dot5(&D1_IN, j - 2) * scale;
        }
        let mut rev = [0.0; 5];
        for k in 0..5 {
            rev[k] = -D1_J1[4 - k];
        }
        out[m - 1] = dot5(&rev, m - 4) * scale;
        for k in 0..5 {
            rev[k] = -D1_J0[4 - k];
        }
        out[m] = dot5(&rev, m - 4) * scale;
        out
    }

    fn d2_x<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let m = self.m;
        assert!(m >= 5, "derivatives require at least 5 cells, got {m}");
        assert_eq!(f.len(), m + 1, "profile length must match node count");
        let scale = 1.0 / (12.0 * self.h * self.h);
        let mut out = vec![T::default(); m + 1];
        let dot6 = |w: &[f64; 6], base: usize| -> T {
            let mut acc = T::default();
            for (k, &wk) in w.iter().enumerate() {
                if wk != 0.0 {
                    acc = acc + f[base + k] * wk;
                }
            }
            acc
        };
        out[0] = dot6(&D2_J0, 0) * scale;
        out[1] = dot6(&D2_J1, 0) * scale;
        for j in 2..m - 1 {
            // Five-point symmetric row stored with a trailing zero.
            out[j] = dot6(&D2_IN, j - 2) * scale;
        }
        let mut rev = [0.0; 6];
        for k in 0..6 {
            rev[k] = D2_J1[5 - k];
        }
        out[m - 1] = dot6(&rev, m - 5) * scale;
        for k in 0..6 {
            rev[k] = D2_J0[5 - k];
        }
        out[m] = dot6(&rev, m - 5) * scale;
        out
    }

    /// First derivative `df/dr` at every node (fourth order).
    pub fn deriv1<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let dx = self.d1_x(f);
        dx.into_iter()
            .zip(self.rp.iter())
            .map(|(v, &rp)| v * (1.0 / rp))
            .collect()
    }

    /// Second derivative `d2f/dr2` at every node (fourth order).
    pub fn deriv2<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let dx = self.d1_x(f);
        let dxx = self.d2_x(f);
        (0..=self.m)
            .map(|j| {
                let rp = self.rp[j];
                let rpp = self.rpp[j];
                dxx[j] * (1.0 / (rp * rp)) - dx[j] * (rpp / (rp * rp * rp))
            })
            .collect()
    }

    /// Stencil row of [`Self::deriv1`] at node `j`.
    ///
    /// Returns `(base, w)` with `deriv1(f)[j] = sum_k w[k] * f[base + k]`;
    /// `w` is padded to six entries because boundary rows are six wide in
    /// [`Self::d2_row`] and the two accessors share call sites in matrix
    /// assembly. Rows reproduce the vector operator to rounding error,
    /// so banded operators built from them agree with `deriv1`/`deriv2`.
    /// Five-point x-space stencil for the first derivative at node `j`,
    /// as `(first node index, weights)`.
    fn d1_stencil(&self, j: usize) -> (usize, [f64; 5]) {
        let m = self.m;
        if j == 0 {
            (0, D1_J0)
        } else if j == 1 {
            (0, D1_J1)
        } else if j == m - 1 {
            let mut r = [0.0; 5];
            for k in 0..5 {
                r[k] = -D1_J1[4 - k];
            }
            (m - 4, r)
        } else if j == m {
            let mut r = [0.0; 5];
            for k in 0..5 {
                r[k] = -D1_J0[4 - k];
            }
            (m - 4, r)
        } else {
            (j - 2, D1_IN)
        }
    }

    pub fn d1_row(&self, j: usize) -> (usize, [f64; 6]) {
        let m = self.m;
        assert!(m >= 5, "derivatives require at least 5 cells, got {m}");
        assert!(j <= m, "node index {j} out of range");
        let scale = 1.0 / (12.0 * self.h * self.rp[j]);
        let (nb, s) = self.d1_stencil(j);
        // Clamp the window so `base + 5 <= m`; the stencil then sits at
        // offset 0 or 1 inside it.
        let base = nb.min(m - 5);
        let off = nb - base;
        let mut w = [0.0_f64; 6];
        for k in 0..5 {
            w[off + k] = s[k] * scale;
        }
        (base, w)
    }

    /// Stencil row of [`Self::deriv2`] at node `j`.
    ///
    /// Returns `(base, w)` with `deriv2(f)[j] = sum_k w[k] * f[base + k]`,
    /// combining the second- and first-derivative map-chain terms into a
    /// single six-wide row.
    pub fn d2_row(&self, j: usize) -> (usize, [f64; 6]) {
        let m = self.m;
        assert!(m >= 5, "derivatives require at least 5 cells, got {m}");
        assert!(j <= m, "node index {j} out of range");
        let rp = self.rp[j];
        let rpp = self.rpp[j];
        let s2 = 1.0 / (12.0 * self.h * self.h * rp * rp);
        let s1 = rpp / (12.0 * self.h * rp * rp * rp);
        // Pure-x second-derivative stencil.
        let (nb2, t2): (usize, [f64; 6]) = if j == 0 {
            (0, D2_J0)
        } else if j == 1 {
            (0, D2_J1)
        } else if j == m - 1 {
            let mut r = [0.0; 6];
            for k in 0..6 {
                r[k] = D2_J1[5 - k];
            }
            (m - 5, r)
        } else if j == m {
            let mut r = [0.0; 6];
            for k in 0..6 {
                r[k] = D2_J0[5 - k];
            }
            (m - 5, r)
        } else {
            (j - 2, D2_IN)
        };
        let (nb1, t1) = self.d1_stencil(j);
        // Interior rows carry a trailing zero, so their live width is five
        // and the window may be clamped like the first-derivative one.
        let live2 = if t2[5] == 0.0 { 5 } else { 6 };
        let base = nb2.min(nb1).min(m - 5);
        let off2 = nb2 - base;
        let off1 = nb1 - base;
        assert!(off2 + live2 <= 6 && off1 + 5 <= 6);
        let mut w = [0.0_f64; 6];
        for k in 0..live2 {
            w[off2 + k] = t2[k] * s2;
        }
        for k in 0..5 {
            w[off1 + k] -= t1[k] * s1;
        }
        (base, w)
    }

    /// Per-cell integrals of the cubic interpolant of `f` against `measure`.
    pub fn cell_integrals<T: Scalar>(&self, f: &[T], measure: Measure) -> Vec<T> {
        assert_eq!(f.len(), self.m + 1, "profile length must match node count");
        self.cells
            .iter()
            .map(|c| {
                let w = match measure {
                    Measure::Dr => &c.w_dr,
                    Measure::RDr => &c.w_rdr,
                };
                let mut acc = T::default();
                for k in 0..c.len {
                    acc = acc + f[c.base + k] * w[k];
                }
                acc
            })
            .collect()
    }

    /// `int_1^{R_max} f measure`, exact for the interpolating cubic.
    pub fn integrate<T: Scalar>(&self, f: &[T], measure: Measure) -> T {
        // Accumulate from the outer end: the graded inner cells are tiny and
        // adding them last keeps their contribution from being rounded away
        // against a large running total.
        let cells = self.cell_integrals(f, measure);
        let mut acc = T::default();
        for v in cells.into_iter().rev() {
            acc = acc + v;
        }
        acc
    }

    /// Cumulative integral from the wall: entry `j` is `int_1^{r_j}`.
    pub fn cum_from_inner<T: Scalar>(&self, f: &[T], measure: Measure) -> Vec<T> {
        let cells = self.cell_integrals(f, measure);
        let mut out = Vec::with_capacity(self.m + 1);
        let mut acc = T::default();
        out.push(acc);
        for v in cells {
            acc = acc + v;
            out.push(acc);
        }
        out
    }

    /// Cumulative integral to the outer edge: entry `j` is
    /// `int_{r_j}^{R_max}`, accumulated from the far end for stability.
    pub fn cum_to_outer<T: Scalar>(&self, f: &[T], measure: Measure) -> Vec<T> {
        let cells = self.cell_integrals(f, measure);
        let mut out = vec![T::default(); self.m + 1];
        let mut acc = T::default();
        for j in (0..self.m).rev() {
            acc = acc + cells[j];
            out[j] = acc;
        }
        out
    }

    /// Index of the cell containing `r` (clamped to the grid).
    pub fn find_cell(&self, r: f64) -> usize {
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&r).expect("grid nodes are finite"))
        {
            Ok(j) => j.min(self.m - 1),
            Err(j) => j.saturating_sub(1).min(self.m - 1),
        }
    }

    /// Cubic Lagrange interpolation of a nodal profile at radius `r`
    /// (clamped to `[1, R_max]`).
    pub fn interp<T: Scalar>(&self, f: &[T], r: f64) -> T {
        assert_eq!(f.len(), self.m + 1, "profile length must match node count");
        let r = r.clamp(1.0, self.r_max);
        let cell = self.find_cell(r);
        let (base, len) = if self.m < 3 {
            (cell, 2)
        } else {
            (cell.saturating_sub(1).min(self.m - 3), 4)
        };
        let xs = &self.nodes[base..base + len];
        let mut acc = T::default();
        for i in 0..len {
            acc = acc + f[base + i] * lagrange(xs, i, r);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn endpoints_and_monotonicity() {
        let g = RadialGrid::new(30.0, 2048, 6.0).unwrap();
        assert_eq!(g.nodes()[0], 1.0);
        assert_eq!(g.nodes()[2048], 30.0);
        for w in g.nodes().windows(2) {
            assert!(w[1] > w[0]);
        }
        let first = g.nodes()[1] - g.nodes()[0];
        assert!((4.1e-4..4.3e-4).contains(&first), "first = {first}");
    }

    #[test]
    fn tiny_linear_grid() {
        let g = RadialGrid::new(2.0, 1, 0.0).unwrap();
        assert_eq!(g.nodes(), &[1.0, 2.0]);
        assert_eq!(g.quadrature_degree(), 1);
        // Trapezoid on one cell: int_1^2 r dr -> (1 + 2)/2 = 1.5.
        let f = vec![1.0, 1.0];
        assert_relative_eq!(g.integrate(&f, Measure::Dr), 1.0, epsilon = 1e-15);
        assert_relative_eq!(g.integrate(&f, Measure::RDr), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn stencil_rows_match_vector_operators() {
        let g = RadialGrid::new(30.0, 96, 6.0).unwrap();
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&r| (-0.4 * (r - 1.0)).exp() * (1.3 * r).sin() / r)
            .collect();
        let d1 = g.deriv1(&f);
        let d2 = g.deriv2(&f);
        for j in 0..=g.m() {
            let (b1, w1) = g.d1_row(j);
            let (b2, w2) = g.d2_row(j);
            let r1: f64 = w1.iter().enumerate().map(|(k, &w)| w * f[b1 + k]).sum();
            let r2: f64 = w2.iter().enumerate().map(|(k, &w)| w * f[b2 + k]).sum();
            // Same stencil values, different summation order: the gap is
            // bounded by a few ulp of the row's own term magnitudes, which
            // near the wall vastly exceed the cancelled result.
            let t1: f64 = w1.iter().enumerate().map(|(k, &w)| (w * f[b1 + k]).abs()).sum();
            let t2: f64 = w2.iter().enumerate().map(|(k, &w)| (w * f[b2 + k]).abs()).sum();
            assert!(
                (r1 - d1[j]).abs() <= 1e-14 * t1 + 1e-13 * d1[j].abs(),
                "d1 row mismatch at j = {j}: {r1} vs {}",
                d1[j]
            );
            assert!(
                (r2 - d2[j]).abs() <= 1e-14 * t2 + 1e-13 * d2[j].abs(),
                "d2 row mismatch at j = {j}: {r2} vs {}",
                d2[j]
            );
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RadialGrid::new(1.0, 8, 0.0).is_err());
        assert!(RadialGrid::new(30.0, 0, 0.0).is_err());
        assert!(RadialGrid::new(30.0, 8, -1.0).is_err());
    }

    #[test]
    fn derivatives_exact_on_quartics_uniform() {
        let g = RadialGrid::new(3.0, 16, 0.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|&r| r.powi(4)).collect();
        let d1 = g.deriv1(&f);
        let d2 = g.deriv2(&f);
        for (j, &r) in g.nodes().iter().enumerate() {
            assert_relative_eq!(d1[j], 4.0 * r.powi(3), max_relative = 1e-11);
            assert_relative_eq!(d2[j], 12.0 * r.powi(2), max_relative = 1e-10);
        }
    }

    #[test]
    fn derivatives_fourth_order_on_sinh_grid() {
        // e^{-2(r-1)} on a graded grid: compare against the analytic
        // derivative and check the error falls by ~16x when M doubles.
        let err = |m: usize| -> f64 {
            let g = RadialGrid::new(30.0, m, 6.0).unwrap();
            let f: Vec<f64> = g.nodes().iter().map(|&r| (-2.0 * (r - 1.0)).exp()).collect();
            let d1 = g.deriv1(&f);
            let d2 = g.deriv2(&f);
            let mut worst: f64 = 0.0;
            for (j, &r) in g.nodes().iter().enumerate() {
                let e = (-2.0 * (r - 1.0)).exp();
                worst = worst.max((d1[j] + 2.0 * e).abs());
                worst = worst.max((d2[j] - 4.0 * e).abs() / 4.0);
            }
            worst
        };
        let e512 = err(512);
        let e1024 = err(1024);
        assert!(e512 < 1e-6, "coarse error {e512}");
        let rate = (e512 / e1024).log2();
        assert!(rate > 3.5, "observed order {rate}");
    }

    #[test]
    fn quadrature_exact_for_cubics() {
        let g = RadialGrid::new(30.0, 64, 4.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|&r| r.powi(3) - 2.0 * r).collect();
        // int_1^30 (r^3 - 2r) dr = (30^4 - 1)/4 - (30^2 - 1) = 202499.75 - 899.
        assert_relative_eq!(
            g.integrate(&f, Measure::Dr),
            (30f64.powi(4) - 1.0) / 4.0 - (30f64.powi(2) - 1.0),
            max_relative = 1e-13
        );
        let f2: Vec<f64> = g.nodes().iter().map(|&r| r * r).collect();
        // int_1^30 r^2 * r dr = (30^4 - 1)/4.
        assert_relative_eq!(
            g.integrate(&f2, Measure::RDr),
            (30f64.powi(4) - 1.0) / 4.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn quadrature_smooth_decay() {
        // Fourth-order error: ~6e-9 at M = 512 and 16x smaller per doubling.
        let g = RadialGrid::new(30.0, 512, 6.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|&r| (-3.0 * (r - 1.0)).exp()).collect();
        // int_1^30 e^{-3(r-1)} r dr = 4/9 - (91/9) e^{-87}.
        assert_relative_eq!(g.integrate(&f, Measure::RDr), 4.0 / 9.0, max_relative = 2e-8);
        let g2 = RadialGrid::new(30.0, 2048, 6.0).unwrap();
        let f2: Vec<f64> = g2.nodes().iter().map(|&r| (-3.0 * (r - 1.0)).exp()).collect();
        assert_relative_eq!(g2.integrate(&f2, Measure::RDr), 4.0 / 9.0, max_relative = 1e-10);
    }

    #[test]
    fn cumulative_sums_are_consistent() {
        let g = RadialGrid::new(30.0, 1024, 6.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|&r| 1.0 / (r * r)).collect();
        let total = g.integrate(&f, Measure::Dr);
        let fwd = g.cum_from_inner(&f, Measure::Dr);
        let bwd = g.cum_to_outer(&f, Measure::Dr);
        assert_relative_eq!(fwd[g.m()], total, max_relative = 1e-13);
        assert_relative_eq!(bwd[0], total, max_relative = 1e-13);
        for j in 0..=g.m() {
            assert_relative_eq!(fwd[j] + bwd[j], total, max_relative = 1e-12);
        }
        // int_1^30 r^{-2} dr = 1 - 1/30; fourth-order error ~4e-10 at M = 1024.
        assert_relative_eq!(total, 1.0 - 1.0 / 30.0, max_relative = 2e-9);
    }

    #[test]
    fn layer_resolution_check() {
        let g = RadialGrid::new(30.0, 2048, 6.0).unwrap();
        assert!(g.ensure_layer_resolved(0.05, 8).is_ok());
        let u = RadialGrid::new(30.0, 2048, 0.0).unwrap();
        match u.ensure_layer_resolved(0.02, 8) {
            Err(Error::GradingInsufficient { got, need, .. }) => {
                assert!(got < need);
            }
            other => panic!("expected GradingInsufficient, got {other:?}"),
        }
    }

    #[test]
    fn interpolation_matches_smooth_function() {
        let g = RadialGrid::new(10.0, 1024, 3.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|&r| r.sin()).collect();
        for k in 0..100 {
            let r = 1.0 + 9.0 * (k as f64 + 0.5) / 100.0;
            let got = g.interp(&f, r);
            assert!((got - r.sin()).abs() < 2e-7, "r = {r}: {got} vs {}", r.sin());
        }
    }

    #[test]
    fn complex_profiles_supported() {
        let g = RadialGrid::new(5.0, 256, 2.0).unwrap();
        let f: Vec<C> = g
            .nodes()
            .iter()
            .map(|&r| C::new(r * r, -r))
            .collect();
        let d1 = g.deriv1(&f);
        for (j, &r) in g.nodes().iter().enumerate() {
            assert!((d1[j] - C::new(2.0 * r, -1.0)).norm() < 1e-6);
        }
    }
}
