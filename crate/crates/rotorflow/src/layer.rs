//! Wall-layer profile family.
//!
//! Near `r = 1` the dominant balance of the mode-`n` vorticity equation is
//!
//! ```text
//! -w'' + 2 i alpha n (r - 1) w = 0,
//! ```
//!
//! which under the stretching `rho = |beta| (r - 1)`, `|beta| = (2|alpha
//! n|)^{1/3}`, becomes a complex Airy equation. The decaying solution is
//!
//! ```text
//! Gtilde(rho) = Ai(c rho + lambda^2),
//! ```
//!
//! with `c = (sqrt(3) - i)/2` when `alpha n > 0` and its conjugate
//! otherwise (the branch that selects decay in the right half plane), and
//! `lambda = |n| conj(c) / |beta|`. Integrating `Gtilde` twice against the
//! exponential kernels of the modified Bessel pair at wall distance zero
//! produces the layer stream profile
//!
//! ```text
//! G(rho) = -int_rho^inf e^{ m (tau - rho)} J(tau) dtau,
//! J(rho) =  int_rho^inf e^{-m (sigma - rho)} Gtilde(sigma) dsigma,
//! m = |n| / |beta|,
//! ```
//!
//! which satisfies `-G'' + m^2 G = Gtilde` and decays super-exponentially.
//! The normalization `C0` caps the wall value at one, and the quantity
//! `C0 (|beta| G'(0) + |n| G(0)) = C0 |beta| J(0)` measures how strongly
//! the layer responds at the wall; its nonvanishing is what makes the
//! no-slip corrector well posed.
//!
//! All kernels are evaluated by product integration: on each step of the
//! uniform `rho`-grid the integrand factor is replaced by its cubic
//! interpolant and integrated exactly against the exponential weight, so
//! the slow kernel `e^{+/- m s}` costs no accuracy even when `m h` is far
//! below the grid scale.

use crate::airy::{airy_ai, airy_ai_both};
use crate::error::{Error, Result};
use crate::field::ModeProfile;
use crate::grid::RadialGrid;
use crate::{C, I};

/// `(sqrt(3) + i) / 2`, the unit constant rotating the layer variable for
/// `alpha n < 0`.
pub const C_PLUS: C = C::new(0.866_025_403_784_438_6, 0.5);
/// `(sqrt(3) - i) / 2`, used for `alpha n > 0`.
pub const C_MINUS: C = C::new(0.866_025_403_784_438_6, -0.5);

/// Default regime constant: layer asymptotics are used for
/// `|n| <= kappa sqrt(|alpha|)`.
pub const DEFAULT_KAPPA: f64 = 0.2;
/// Default extent of the layer grid; the profile is below `1e-50` there.
pub const DEFAULT_RHO_MAX: f64 = 40.0;
/// Default step of the layer grid (the `~h^4` cell error keeps the
/// kernel integrals near `1e-10` relative at this step).
pub const DEFAULT_RHO_STEP: f64 = 0.01;

/// Scaling parameters of the wall layer for one `(alpha, n)` pair.
#[derive(Clone, Copy, Debug)]
pub struct LayerParams {
    /// Rotation rate (nonzero).
    pub alpha: f64,
    /// Mode index (nonzero).
    pub n: i32,
    /// Layer wavenumber `beta = |beta| c_branch`; `beta^3 = -2 i alpha n`.
    pub beta: C,
    /// `|beta| = (2 |alpha n|)^{1/3}`, the reciprocal layer width.
    pub abs_beta: f64,
    /// `(sqrt(3) + i)/2`.
    pub c_plus: C,
    /// `(sqrt(3) - i)/2`.
    pub c_minus: C,
    /// Slow-decay exponent `|n| conj(c_branch) / |beta|`.
    pub lambda: C,
}

impl LayerParams {
    /// Builds the parameter pack, selecting the branch by the sign of
    /// `alpha n`.
    pub fn new(alpha: f64, n: i32) -> Result<LayerParams> {
        if n == 0 || alpha == 0.0 {
            return Err(Error::ZeroMode {
                context: format!("layer parameters for alpha = {alpha}, n = {n}"),
            });
        }
        let abs_beta = (2.0 * (alpha * n as f64).abs()).cbrt();
        let branch = if alpha * n as f64 > 0.0 { C_MINUS } else { C_PLUS };
        Ok(LayerParams {
            alpha,
            n,
            beta: branch * abs_beta,
            abs_beta,
            c_plus: C_PLUS,
            c_minus: C_MINUS,
            lambda: branch.conj() * (n.abs() as f64 / abs_beta),
        })
    }

    /// The branch constant actually used in `beta`.
    pub fn c_branch(&self) -> C {
        if self.alpha * self.n as f64 > 0.0 {
            self.c_minus
        } else {
            self.c_plus
        }
    }

    /// Kernel rate `m = |n| / |beta|`; bounded by `kappa^{2/3} / 2^{1/3}`
    /// inside the regime `|n| <= kappa sqrt(|alpha|)`.
    pub fn m(&self) -> f64 {
        self.n.abs() as f64 / self.abs_beta
    }
}

/// Sampled wall-layer profile `G` with derivatives and its Airy source.
#[derive(Clone, Debug)]
pub struct LayerProfile {
    /// The generating parameters.
    pub params: LayerParams,
    /// Normalization: `1/G(0)` when `|G(0)| >= 1`, else `1`.
    pub c0: C,
    /// Grid step.
    pub h: f64,
    /// Grid extent.
    pub rho_max: f64,
    /// Grid nodes `rho_i = i h`.
    pub rho: Vec<f64>,
    /// `G(rho_i)`.
    pub g: Vec<C>,
    /// `G'(rho_i)`.
    pub g1: Vec<C>,
    /// `G''(rho_i)`, from `G'' = m^2 G - Gtilde`.
    pub g2: Vec<C>,
    /// `G'''(rho_i)`, from `G''' = m^2 G' - Gtilde'`.
    pub g3: Vec<C>,
    /// Airy source `Gtilde(rho_i)`.
    pub gtilde: Vec<C>,
    /// `Gtilde'(rho_i)`.
    pub gtilde1: Vec<C>,
    /// Inner kernel integral `J(rho_i)`.
    pub j: Vec<C>,
}

impl LayerProfile {
    /// `(G, G')` at an arbitrary `rho >= 0` by quartic Taylor expansion
    /// from the nearest node; `G''''` closes through the defining relation
    /// `G'''' = m^2 G'' - Gtilde''` with `Gtilde'' = c^2 (c rho +
    /// lambda^2) Gtilde`. Past the grid the profile is below `1e-50` and
    /// is returned as zero.
    pub fn g_at(&self, rho: f64) -> (C, C) {
        assert!(rho >= -1e-12, "layer profile queried at rho = {rho}");
        if rho >= self.rho_max {
            return (C::default(), C::default());
        }
        let i = ((rho / self.h).round() as usize).min(self.rho.len() - 1);
        let d = rho - self.rho[i];
        let m2 = self.params.m().powi(2);
        let c = self.params.c_branch();
        let lam2 = self.params.lambda * self.params.lambda;
        let gt2 = c * c * (c * self.rho[i] + lam2) * self.gtilde[i];
        let g4 = m2 * self.g2[i] - gt2;
        let g = self.g[i]
            + d * (self.g1[i] + d * (self.g2[i] / 2.0 + d * (self.g3[i] / 6.0 + d * g4 / 24.0)));
        let g1 = self.g1[i] + d * (self.g2[i] + d * (self.g3[i] / 2.0 + d * g4 / 6.0));
        (g, g1)
    }
}

/// Moments `M_t = int_0^h e^{-mu s} s^t ds`, `t = 0..3`, stable for any
/// sign of `mu`: a Taylor expansion in `mu h` below `|mu h| = 1` (where
/// the closed form cancels), the closed-form recurrence above.
fn exp_moments(mu: f64, h: f64) -> [f64; 4] {
    let x = mu * h;
    let mut m = [0.0; 4];
    if x.abs() <= 1.0 {
        for (t, mt) in m.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut sum = 1.0 / (t as f64 + 1.0);
            for k in 1..40 {
                term *= -x / k as f64;
                let contrib = term / (t + k + 1) as f64;
                sum += contrib;
                if contrib.abs() < 1e-22 * sum.abs() {
                    break;
                }
            }
            *mt = sum * h.powi(t as i32 + 1);
        }
    } else {
        let e = (-x).exp();
        m[0] = (1.0 - e) / mu;
        for t in 1..4 {
            m[t] = (t as f64 * m[t - 1] - h.powi(t as i32) * e) / mu;
        }
    }
    m
}

/// Weights `w_k` with `int_0^h e^{-mu s} p(s) ds = sum_k w_k p(o_k h)` for
/// every cubic `p`, where `o_k` are the stencil offsets in grid units.
fn lagrange_exp_weights(offsets: [i32; 4], h: f64, mu: f64) -> [f64; 4] {
    let moments = exp_moments(mu, h);
    let x: Vec<f64> = offsets.iter().map(|&o| o as f64 * h).collect();
    let mut w = [0.0; 4];
    for k in 0..4 {
        // Monomial coefficients of prod_{j != k} (s - x_j).
        let mut coef = [0.0; 4];
        coef[0] = 1.0;
        let mut deg = 0;
        let mut denom = 1.0;
        for j in 0..4 {
            if j == k {
                continue;
            }
            denom *= x[k] - x[j];
            for t in (0..=deg).rev() {
                coef[t + 1] += coef[t];
                coef[t] *= -x[j];
            }
            deg += 1;
        }
        w[k] = coef.iter().zip(moments).map(|(c, m)| c * m).sum::<f64>() / denom;
    }
    w
}

/// `W(rho_i) = int_{rho_i}^{rho_max} e^{-mu (s - rho_i)} p(s) ds` for
/// sampled `p`, by backward recurrence with exact exponential-weighted
/// cubic cells. `mu` may be negative (growing kernel) provided `p` decays
/// fast enough that the integral converges; the neglected tail beyond the
/// grid must be negligible on the caller's scale.
fn weighted_backward_integral(values: &[C], h: f64, mu: f64) -> Vec<C> {
    let n = values.len();
    assert!(n >= 5, "product integration needs at least 5 nodes");
    let step = (-mu * h).exp();
    let w_first = lagrange_exp_weights([0, 1, 2, 3], h, mu);
    let w_mid = lagrange_exp_weights([-1, 0, 1, 2], h, mu);
    let w_last = lagrange_exp_weights([-2, -1, 0, 1], h, mu);
    let mut out = vec![C::default(); n];
    for i in (0..n - 1).rev() {
        let (base, w) = if i == 0 {
            (0, &w_first)
        } else if i + 2 >= n {
            (n - 4, &w_last)
        } else {
            (i - 1, &w_mid)
        };
        let mut local = C::default();
        for (k, wk) in w.iter().enumerate() {
            local += values[base + k] * *wk;
        }
        out[i] = local + out[i + 1] * step;
    }
    out
}

/// Builds the layer profile on a uniform grid of the given extent and
/// step. Requires `|n| <= sqrt(|alpha|)` (the regime where the layer
/// asymptotics are meaningful) and an extent long enough that the Airy
/// source has decayed below `1e-14`.
pub fn profile_g(params: &LayerParams, rho_max: f64, step: f64) -> Result<LayerProfile> {
    let nf = params.n.abs() as f64;
    if nf > params.alpha.abs().sqrt() {
        return Err(Error::RegimeViolation {
            detail: format!(
                "|n| = {} exceeds sqrt(|alpha|) = {:.3}",
                params.n.abs(),
                params.alpha.abs().sqrt()
            ),
        });
    }
    if !(step > 0.0 && step <= 0.02 && rho_max > 1.0) {
        return Err(Error::Config(format!(
            "layer grid must have 0 < step <= 0.02 and rho_max > 1, got step = {step}, rho_max = {rho_max}"
        )));
    }
    let n_cells = (rho_max / step).ceil() as usize;
    let h = rho_max / n_cells as f64;
    let c = params.c_branch();
    let lam2 = params.lambda * params.lambda;
    let rho: Vec<f64> = (0..=n_cells).map(|i| i as f64 * h).collect();
    let mut gtilde = Vec::with_capacity(rho.len());
    let mut gtilde1 = Vec::with_capacity(rho.len());
    for &p in &rho {
        let (ai, aip) = airy_ai_both(c * p + lam2);
        gtilde.push(ai);
        gtilde1.push(c * aip);
    }
    let edge = gtilde.last().unwrap().norm();
    if edge >= 1e-14 {
        return Err(Error::TailNotNegligible {
            r_max: rho_max,
            detail: format!("layer source still {edge:.3e} at the end of the rho-grid"),
        });
    }
    let m = params.m();
    let j = weighted_backward_integral(&gtilde, h, m);
    let k = weighted_backward_integral(&j, h, -m);
    let g: Vec<C> = k.iter().map(|&x| -x).collect();
    let g1: Vec<C> = j.iter().zip(&g).map(|(&ji, &gi)| ji - m * gi).collect();
    let g2: Vec<C> = g
        .iter()
        .zip(&gtilde)
        .map(|(&gi, &ti)| m * m * gi - ti)
        .collect();
    let g3: Vec<C> = g1
        .iter()
        .zip(&gtilde1)
        .map(|(&gi, &ti)| m * m * gi - ti)
        .collect();
    let c0 = if g[0].norm() >= 1.0 {
        1.0 / g[0]
    } else {
        C::new(1.0, 0.0)
    };
    Ok(LayerProfile {
        params: *params,
        c0,
        h,
        rho_max,
        rho,
        g,
        g1,
        g2,
        g3,
        gtilde,
        gtilde1,
        j,
    })
}

/// [`profile_g`] on the default grid.
pub fn profile_g_default(params: &LayerParams) -> Result<LayerProfile> {
    profile_g(params, DEFAULT_RHO_MAX, DEFAULT_RHO_STEP)
}

/// Wall response of the normalized layer profile,
/// `C0 (|beta| G'(0) + |n| G(0))`, equal to `C0 |beta| J(0)`. This is the
/// denominator-driving quantity of the no-slip corrector; it is required
/// to stay away from zero. Only meaningful in the regime
/// `|n| <= kappa sqrt(|alpha|)`.
pub fn key_quantity(params: &LayerParams, profile: &LayerProfile, kappa: f64) -> Result<C> {
    let nf = params.n.abs() as f64;
    if nf > kappa * params.alpha.abs().sqrt() {
        return Err(Error::RegimeViolation {
            detail: format!(
                "|n| = {} exceeds kappa sqrt(|alpha|) = {:.3}",
                params.n.abs(),
                kappa * params.alpha.abs().sqrt()
            ),
        });
    }
    Ok(profile.c0 * (params.abs_beta * profile.g1[0] + nf * profile.g[0]))
}

/// The boundary-layer velocity ansatz for coefficient `b_n`:
/// `v_r = i n b_n G(|beta|(r-1)) / r`, `v_theta = -|beta| b_n
/// G'(|beta|(r-1))`. Its mass concentrates within a few multiples of
/// `|beta|^{-1}` of the wall and its amplitude scales like `|b_n|
/// |beta|^{1/2}` in `L^2`.
pub fn bl_velocity(
    params: &LayerParams,
    profile: &LayerProfile,
    b_n: C,
    grid: &RadialGrid,
) -> ModeProfile {
    let nf = params.n as f64;
    let mut v_r = Vec::with_capacity(grid.n_nodes());
    let mut v_theta = Vec::with_capacity(grid.n_nodes());
    for &r in grid.nodes() {
        let (g, g1) = profile.g_at(params.abs_beta * (r - 1.0));
        v_r.push(I * nf * b_n * g / r);
        v_theta.push(-params.abs_beta * b_n * g1);
    }
    ModeProfile::new(params.n, v_r, v_theta)
}

/// `int_0^inf e^{-lambda s} Ai(s + lambda^2) ds` by composite
/// Gauss-Legendre quadrature on `[0, 30]` (the integrand is below
/// `1e-40` beyond). Equals `c_branch J(0)` by rotating the layer
/// integration ray onto the positive axis; at `lambda = 0` it reduces to
/// the total Airy integral `1/3`.
pub fn lemma_a1_integral(lambda: C) -> C {
    // 8-point Gauss-Legendre rule on [-1, 1].
    const X: [f64; 8] = [
        -0.960_289_856_497_536_2,
        -0.796_666_477_413_626_7,
        -0.525_532_409_916_329,
        -0.183_434_642_495_649_8,
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_2,
    ];
    const W: [f64; 8] = [
        0.101_228_536_290_376_26,
        0.222_381_034_453_374_47,
        0.313_706_645_877_887_29,
        0.362_683_783_378_361_98,
        0.362_683_783_378_361_98,
        0.313_706_645_877_887_29,
        0.222_381_034_453_374_47,
        0.101_228_536_290_376_26,
    ];
    let lam2 = lambda * lambda;
    let panels = 60;
    let width = 0.5;
    let mut total = C::default();
    for p in 0..panels {
        let a = p as f64 * width;
        for (x, w) in X.iter().zip(W) {
            let s = a + width * 0.5 * (x + 1.0);
            total += (-lambda * s).exp() * airy_ai(C::new(s, 0.0) + lam2) * (w * width * 0.5);
        }
    }
    total
}
