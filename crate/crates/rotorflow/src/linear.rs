//! Per-mode solvers for the linearized rotating-frame system.
//!
//! For a single angular mode `n` the system reduces to ordinary
//! differential equations in `r`. Mode zero has a closed-form quadrature
//! solution. Every other mode is solved along two independent routes:
//!
//! * **constructive** — first a *slip* solution whose vorticity solves the
//!   second-order boundary-value problem `A_n w = rot f` with `w` vanishing
//!   at both ends of the grid ([`solve_slip`]), then a homogeneous *fast
//!   mode* built from a wall-layer profile ([`fast_mode`]), and finally a
//!   corrector assembly that restores the no-slip condition at the wall
//!   ([`assemble_noslip`]);
//! * **direct** — a monolithic banded solve of the coupled streamfunction
//!   and vorticity equations with all four boundary conditions imposed at
//!   once ([`solve_noslip_direct`]).
//!
//! The two routes share no linear algebra beyond the banded factorization
//! itself, so their agreement is a genuine cross-check. [`solve_linear`]
//! dispatches modes to routes, recovers the pressure, and gates every mode
//! on the residual of the full momentum equation.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::field::{
    l2_scalar, mode_norms, vorticity, FlowSolution, ModeProfile, NormReport, TWO_PI,
};
use crate::grid::{Measure, RadialGrid};
use crate::layer::{bl_velocity, profile_g_default, LayerParams, LayerProfile};
use crate::stream::{
    biot_savart, cum_to_outer_with_tail, fit_tail, streamfunction_green, TailTreatment,
};
use crate::{C, I};

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Default constructive-route threshold: modes with
/// `1 <= |n| <= kappa sqrt(alpha)` take the layered route.
pub const DEFAULT_KAPPA: f64 = 0.2;
/// Default relative momentum-residual gate for accepted solves.
pub const DEFAULT_TOL_RES: f64 = 1e-6;
/// Fraction of the vorticity maximum that may remain near the outer edge
/// before the domain is considered too short.
const TAIL_FRACTION: f64 = 1e-12;
/// Nodes (excluding the pinned outermost one) inspected by the edge check.
const TAIL_NODES: usize = 8;
/// Minimal number of nodes inside one layer width `|beta|^{-1}`.
const MIN_LAYER_NODES: usize = 6;

// ---------------------------------------------------------------------
// Forcing
// ---------------------------------------------------------------------

/// One angular mode of a forcing field, sampled on the grid nodes.
#[derive(Debug, Clone)]
pub struct ForcingMode {
    /// Radial component.
    pub f_r: Vec<C>,
    /// Angular component.
    pub f_theta: Vec<C>,
}

impl ForcingMode {
    /// All-zero mode.
    pub fn zero(grid: &RadialGrid) -> Self {
        ForcingMode {
            f_r: vec![ZERO; grid.n_nodes()],
            f_theta: vec![ZERO; grid.n_nodes()],
        }
    }

    /// Purely angular forcing.
    pub fn angular(f_theta: Vec<C>) -> Self {
        let f_r = vec![ZERO; f_theta.len()];
        ForcingMode { f_r, f_theta }
    }

    /// `L^2` norm of the two-component field.
    pub fn l2(&self, grid: &RadialGrid) -> f64 {
        let a = l2_scalar(grid, &self.f_r);
        let b = l2_scalar(grid, &self.f_theta);
        (a * a + b * b).sqrt()
    }
}

/// How a forcing was constructed. Recipes can be re-evaluated on a finer
/// or longer grid; raw samples cannot.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingRecipe {
    /// `f_theta = exp(-((r - center)/width)^2)` on every listed mode.
    GaussianRing {
        /// Ring center.
        center: f64,
        /// Ring width.
        width: f64,
        /// Modes carrying the ring.
        modes: Vec<i32>,
    },
    /// Per-mode ring hugging the wall layer: center `1 + 1.5/|beta_n|`,
    /// width `0.75/|beta_n|`, normalized to unit `L^2`. Exercises the
    /// sharp layer response, unlike a ring at fixed radius whose response
    /// is the bulk one.
    LayerRing {
        /// Rotation rate fixing the layer scale.
        alpha: f64,
        /// Modes carrying the ring (all nonzero).
        modes: Vec<i32>,
    },
    /// Raw samples without a generating rule.
    Samples,
}

impl ForcingRecipe {
    /// Human- and machine-readable tag for manifests.
    pub fn tag(&self) -> String {
        match self {
            ForcingRecipe::GaussianRing {
                center,
                width,
                modes,
            } => {
                format!("gaussian_ring(center={center},width={width},modes={modes:?})")
            }
            ForcingRecipe::LayerRing { alpha, modes } => {
                format!("layer_ring(alpha={alpha},modes={modes:?})")
            }
            ForcingRecipe::Samples => "samples".into(),
        }
    }
}

/// A forcing field, one radial profile pair per angular mode.
#[derive(Debug, Clone)]
pub struct ForcingSpec {
    /// Mode data keyed by `n`.
    pub modes: BTreeMap<i32, ForcingMode>,
    /// Construction recipe.
    pub recipe: ForcingRecipe,
    /// `L^1(Omega)` norm of the axisymmetric part.
    pub y_mode0: f64,
    /// Root-sum-square of the `L^2` norms of the nonaxisymmetric modes.
    pub y_rest: f64,
}

impl ForcingSpec {
    /// Wraps sampled mode data, checking lengths and the conjugate
    /// symmetry `f_{-n} = conj(f_n)` whenever both signs are present.
    pub fn from_samples(
        grid: &RadialGrid,
        modes: BTreeMap<i32, ForcingMode>,
        recipe: ForcingRecipe,
    ) -> Result<ForcingSpec> {
        let nn = grid.n_nodes();
        for (n, fm) in &modes {
            if fm.f_r.len() != nn || fm.f_theta.len() != nn {
                return Err(Error::Config(format!(
                    "forcing mode {n}: profile length does not match the grid"
                )));
            }
        }
        for (&n, fm) in modes.iter().filter(|(&n, _)| n > 0) {
            if let Some(fneg) = modes.get(&(-n)) {
                let mut scale = 0.0_f64;
                let mut gap = 0.0_f64;
                for j in 0..nn {
                    scale = scale.max(fm.f_r[j].norm()).max(fm.f_theta[j].norm());
                    gap = gap
                        .max((fneg.f_r[j] - fm.f_r[j].conj()).norm())
                        .max((fneg.f_theta[j] - fm.f_theta[j].conj()).norm());
                }
                if gap > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::SymmetryViolation {
                        n,
                        mismatch: gap / scale.max(f64::MIN_POSITIVE),
                    });
                }
            }
        }
        let y_mode0 = match modes.get(&0) {
            Some(fm) => {
                let absf: Vec<f64> = (0..nn)
                    .map(|j| (fm.f_r[j].norm_sqr() + fm.f_theta[j].norm_sqr()).sqrt())
                    .collect();
                TWO_PI * grid.integrate(&absf, Measure::RDr)
            }
            None => 0.0,
        };
        let y_rest = modes
            .iter()
            .filter(|(&n, _)| n != 0)
            .map(|(_, fm)| {
                let l2 = fm.l2(grid);
                l2 * l2
            })
            .sum::<f64>()
            .sqrt();
        Ok(ForcingSpec {
            modes,
            recipe,
            y_mode0,
            y_rest,
        })
    }

    /// Product-space norm: axisymmetric `L^1` plus nonaxisymmetric `L^2`.
    pub fn y_norm(&self) -> f64 {
        self.y_mode0 + self.y_rest
    }

    /// Largest `|n|` present.
    pub fn max_mode(&self) -> i32 {
        self.modes.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    /// Gaussian ring of angular forcing at fixed radius, the default
    /// smooth test force `f_theta = exp(-(r - 2)^2 / 0.25)`.
    pub fn gaussian_ring(grid: &RadialGrid, modes: &[i32]) -> Result<ForcingSpec> {
        ForcingSpec::gaussian_ring_with(grid, 2.0, 0.5, modes)
    }

    /// Gaussian ring with explicit center and width.
    pub fn gaussian_ring_with(
        grid: &RadialGrid,
        center: f64,
        width: f64,
        modes: &[i32],
    ) -> Result<ForcingSpec> {
        if width <= 0.0 {
            return Err(Error::Config("ring width must be positive".into()));
        }
        let profile: Vec<C> = grid
            .nodes()
            .iter()
            .map(|&r| C::new((-((r - center) / width).powi(2)).exp(), 0.0))
            .collect();
        let map: BTreeMap<i32, ForcingMode> = modes
            .iter()
            .map(|&n| (n, ForcingMode::angular(profile.clone())))
            .collect();
        ForcingSpec::from_samples(
            grid,
            map,
            ForcingRecipe::GaussianRing {
                center,
                width,
                modes: modes.to_vec(),
            },
        )
    }

    /// Ring of angular forcing inside the wall layer of each mode:
    /// center `1 + 1.5/|beta_n|`, width `0.75/|beta_n|`, unit `L^2` norm.
    pub fn layer_ring(grid: &RadialGrid, alpha: f64, modes: &[i32]) -> Result<ForcingSpec> {
        let mut map = BTreeMap::new();
        for &n in modes {
            let params = LayerParams::new(alpha, n)?;
            let inv_beta = 1.0 / params.abs_beta;
            let center = 1.0 + 1.5 * inv_beta;
            let width = 0.75 * inv_beta;
            let raw: Vec<C> = grid
                .nodes()
                .iter()
                .map(|&r| C::new((-((r - center) / width).powi(2)).exp(), 0.0))
                .collect();
            let norm = l2_scalar(grid, &raw);
            if norm == 0.0 {
                return Err(Error::GradingInsufficient {
                    got: 0,
                    need: MIN_LAYER_NODES,
                    layer_width: inv_beta,
                });
            }
            let profile: Vec<C> = raw.iter().map(|z| z * (1.0 / norm)).collect();
            map.insert(n, ForcingMode::angular(profile));
        }
        ForcingSpec::from_samples(
            grid,
            map,
            ForcingRecipe::LayerRing {
                alpha,
                modes: modes.to_vec(),
            },
        )
    }

    /// Re-evaluates the construction recipe on another grid. Raw samples
    /// cannot be transported.
    pub fn reevaluate(&self, grid: &RadialGrid) -> Result<ForcingSpec> {
        match &self.recipe {
            ForcingRecipe::GaussianRing {
                center,
                width,
                modes,
            } => ForcingSpec::gaussian_ring_with(grid, *center, *width, modes),
            ForcingRecipe::LayerRing { alpha, modes } => {
                ForcingSpec::layer_ring(grid, *alpha, modes)
            }
            ForcingRecipe::Samples => Err(Error::Config(
                "raw forcing samples cannot be re-evaluated on a new grid".into(),
            )),
        }
    }
}

// ---------------------------------------------------------------------
// Mode zero
// ---------------------------------------------------------------------

/// Closed-form quadrature solution of the axisymmetric problem:
/// `v_theta(r) = ((S(r) - S_oo)/r + r T(r)) / 2` with
/// `S(r) = int_1^r s^2 f ds`, `T(r) = int_r^oo f ds`, `S_oo = T(1)`,
/// and `v_r = 0`.
///
/// The forcing must decay faster than `r^{-2}` for the solution to stay
/// bounded; a fitted tail exponent at or below `2` is rejected.
pub fn solve_mode0(grid: &RadialGrid, f_theta0: &[C]) -> Result<ModeProfile> {
    assert_eq!(f_theta0.len(), grid.n_nodes());
    match fit_tail(grid, f_theta0)? {
        TailTreatment::Negligible => {}
        TailTreatment::PowerLaw { exponent } => {
            if exponent <= 2.0 {
                return Err(Error::NotIntegrable {
                    exponent,
                    required: 2.0,
                });
            }
        }
    }
    let r = grid.nodes();
    let s2f: Vec<C> = (0..grid.n_nodes())
        .map(|j| f_theta0[j] * (r[j] * r[j]))
        .collect();
    let inner = grid.cum_from_inner(&s2f, Measure::Dr);
    let outer = cum_to_outer_with_tail(grid, f_theta0, Measure::Dr)?;
    let total = outer[0];
    let v_theta: Vec<C> = (0..grid.n_nodes())
        .map(|j| ((inner[j] - total) * (1.0 / r[j]) + outer[j] * r[j]) * 0.5)
        .collect();
    let v_r = vec![ZERO; grid.n_nodes()];
    Ok(ModeProfile::new(0, v_r, v_theta))
}

// ---------------------------------------------------------------------
// Vorticity boundary-value problem
// ---------------------------------------------------------------------

/// Curl of a forcing mode: `(1/r) d_r(r f_theta) - (i n / r) f_r`.
pub fn rot_forcing(grid: &RadialGrid, n: i32, f: &ForcingMode) -> Vec<C> {
    let nf = n as f64;
    let r = grid.nodes();
    let rft: Vec<C> = (0..grid.n_nodes()).map(|j| f.f_theta[j] * r[j]).collect();
    let d = grid.deriv1(&rft);
    (0..grid.n_nodes())
        .map(|j| (d[j] - I * nf * f.f_r[j]) * (1.0 / r[j]))
        .collect()
}

/// Assembles and solves the banded Dirichlet problem
/// `A_n w = g`, `w(1) = wall`, `w(R_max) = outer`, where
/// `A_n = -d_rr - d_r/r + n^2/r^2 - i alpha n (1 - 1/r^2)`.
///
/// Rows are equilibrated to unit maximum magnitude before factorization;
/// partial pivoting does the rest.
fn solve_an_bvp(
    grid: &RadialGrid,
    n: i32,
    alpha: f64,
    g: &[C],
    wall: C,
    outer: C,
) -> Result<Vec<C>> {
    let m = grid.m();
    let nn = m + 1;
    let nf = n as f64;
    let n2 = nf * nf;
    let r = grid.nodes();
    let mut a = BandedMatrix::new(nn, 4, 4);
    let mut rhs = vec![ZERO; nn];
    a.set(0, 0, ONE);
    rhs[0] = wall;
    a.set(m, m, ONE);
    rhs[m] = outer;
    for j in 1..m {
        let rj = r[j];
        let (b1, w1) = grid.d1_row(j);
        let (b2, w2) = grid.d2_row(j);
        debug_assert_eq!(b1, b2);
        let pot = C::new(n2 / (rj * rj), -alpha * nf * (1.0 - 1.0 / (rj * rj)));
        let mut row = [ZERO; 6];
        let mut rowmax = 0.0_f64;
        for k in 0..6 {
            let mut c = C::new(-w2[k] - w1[k] / rj, 0.0);
            if b1 + k == j {
                c += pot;
            }
            row[k] = c;
            rowmax = rowmax.max(c.norm());
        }
        let s = 1.0 / rowmax;
        for (k, &c) in row.iter().enumerate() {
            a.set(j, b1 + k, c * s);
        }
        rhs[j] = g[j] * s;
    }
    let lu = a.factor()?;
    Ok(lu.solve(&rhs))
}

/// Slip solution of one mode: vorticity from the boundary-value problem
/// `A_n w = rot f` with `w(1) = w(R_max) = 0`, velocity reconstructed
/// through the stream function. The result satisfies `v_r(1) = 0` but
/// carries a residual angular slip at the wall.
///
/// The returned profile caches both the vorticity and the stream function.
pub fn solve_slip(grid: &RadialGrid, n: i32, alpha: f64, f: &ForcingMode) -> Result<ModeProfile> {
    if n == 0 || alpha == 0.0 {
        return Err(Error::ZeroMode {
            context: "solve_slip".into(),
        });
    }
    let rot = rot_forcing(grid, n, f);
    let omega = solve_an_bvp(grid, n, alpha, &rot, ZERO, ZERO)?;
    biot_savart(grid, n, &omega)
}

// ---------------------------------------------------------------------
// Fast mode and no-slip assembly
// ---------------------------------------------------------------------

/// Homogeneous fast mode: the wall-layer branch of the stream-function
/// equation, in vorticity form `chi` and stream form `phi_hat`.
#[derive(Debug, Clone)]
pub struct FastMode {
    /// Vorticity of the fast mode: `A_n chi = 0`, layer datum at the wall.
    pub chi: Vec<C>,
    /// Stream function with `H_n phi_hat = chi` and
    /// `phi_hat(1)` equal to the wall value of the layer profile.
    pub phi_hat: Vec<C>,
    /// First derivative of `phi_hat`, shared so that wall assembly and
    /// boundary checks use the same samples.
    pub dphi_hat: Vec<C>,
    /// Wall value `phi_hat(1)`.
    pub wall_value: C,
}

/// Solves `A_n chi = 0` with `chi(1) = wall`, `chi(R_max) = 0`.
pub fn homogeneous_chi(grid: &RadialGrid, n: i32, alpha: f64, wall: C) -> Result<Vec<C>> {
    if n == 0 || alpha == 0.0 {
        return Err(Error::ZeroMode {
            context: "homogeneous_chi".into(),
        });
    }
    let zeros = vec![ZERO; grid.n_nodes()];
    solve_an_bvp(grid, n, alpha, &zeros, wall, ZERO)
}

/// Builds the fast mode from the wall-layer profile: `chi` solves the
/// homogeneous vorticity equation with datum `|beta|^2 C0 Gtilde(0)`, and
/// `phi_hat` adds the harmonic tail `d r^{-|n|}` so that
/// `phi_hat(1) = C0 G(0)` exactly matches the layer stream function at
/// the wall.
pub fn fast_mode(
    grid: &RadialGrid,
    params: &LayerParams,
    profile: &LayerProfile,
) -> Result<FastMode> {
    let n = params.n;
    let na = n.unsigned_abs() as f64;
    let chi_wall = profile.c0 * profile.gtilde[0] * (params.abs_beta * params.abs_beta);
    let chi = homogeneous_chi(grid, n, params.alpha, chi_wall)?;
    let green = streamfunction_green(grid, n, &chi)?;
    // The kernel solution vanishes at the wall, so adding `d r^{-|n|}`
    // pins the wall value exactly.
    let d = profile.c0 * profile.g[0];
    let phi_hat: Vec<C> = grid
        .nodes()
        .iter()
        .zip(green.psi.iter())
        .map(|(&r, &p)| p + d * r.powf(-na))
        .collect();
    let dphi_hat = grid.deriv1(&phi_hat);
    Ok(FastMode {
        chi,
        phi_hat,
        dphi_hat,
        wall_value: d,
    })
}

/// A no-slip mode assembled from the constructive route.
#[derive(Debug, Clone)]
pub struct AssembledMode {
    /// The no-slip velocity, with vorticity and stream function cached.
    pub v: ModeProfile,
    /// Coefficient of the harmonic (slow) stream function `r^{-|n|}`.
    pub a_n: C,
    /// Coefficient of the fast mode.
    pub b_n: C,
}

/// Cancels the wall slip of `slip` with the fast mode:
/// `psi = a_n r^{-|n|} + b_n phi_hat + psi_slip` with
/// `b_n (phi_hat'(1) + |n| phi_hat(1)) = v_theta_slip(1)` and
/// `a_n = -b_n phi_hat(1)`.
///
/// Both wall conditions then hold by construction: `v_r(1)` cancels
/// exactly in floating point, `v_theta(1)` to a rounding error of the
/// slip value.
pub fn assemble_noslip(
    grid: &RadialGrid,
    n: i32,
    alpha: f64,
    slip: &ModeProfile,
    fast: &FastMode,
) -> Result<AssembledMode> {
    let nf = n as f64;
    let na = n.unsigned_abs() as f64;
    let abs_beta = (2.0 * (alpha * nf).abs()).cbrt();
    let denom = fast.dphi_hat[0] + fast.phi_hat[0] * na;
    let floor = 1e-10 * abs_beta;
    if denom.norm() < floor {
        return Err(Error::DegenerateCorrector {
            denom: denom.norm(),
            floor,
        });
    }
    let psi_slip = slip.psi.as_ref().ok_or_else(|| {
        Error::Config("assemble_noslip needs a slip profile with cached stream function".into())
    })?;
    let omega_slip = slip.omega.as_ref().ok_or_else(|| {
        Error::Config("assemble_noslip needs a slip profile with cached vorticity".into())
    })?;
    let b = slip.v_theta[0] / denom;
    let b_phi_wall = b * fast.phi_hat[0];
    let a = -b_phi_wall;
    let nn = grid.n_nodes();
    let r = grid.nodes();
    let mut psi = Vec::with_capacity(nn);
    let mut v_r = Vec::with_capacity(nn);
    let mut v_theta = Vec::with_capacity(nn);
    let mut omega = Vec::with_capacity(nn);
    for j in 0..nn {
        let rj = r[j];
        let harmonic = rj.powf(-na);
        // At the wall `harmonic = 1`, so `a * harmonic + b * phi_hat(1)`
        // is `-b_phi_wall + b_phi_wall = 0` exactly.
        let p = a * harmonic + b * fast.phi_hat[j] + psi_slip[j];
        psi.push(p);
        v_r.push(I * (nf / rj) * p);
        v_theta.push(a * (na * harmonic / rj) - b * fast.dphi_hat[j] + slip.v_theta[j]);
        omega.push(b * fast.chi[j] + omega_slip[j]);
    }
    let mut v = ModeProfile::new(n, v_r, v_theta);
    v.psi = Some(psi);
    v.omega = Some(omega);
    Ok(AssembledMode { v, a_n: a, b_n: b })
}

// ---------------------------------------------------------------------
// Direct monolithic solver
// ---------------------------------------------------------------------

/// Monolithic no-slip solve of one mode: the coupled system
/// `H_n psi = w`, `A_n w = rot f` with boundary rows
/// `psi(1) = 0`, `psi'(1) = 0` (one-sided fourth order),
/// `psi(R_max) = 0`, `w(R_max) = 0`, as one banded matrix over the
/// interleaved unknowns `[psi_0, w_0, psi_1, w_1, ...]`.
///
/// Shares no code path with the constructive route past the banded
/// factorization, which makes it an independent cross-check.
pub fn solve_noslip_direct(
    grid: &RadialGrid,
    n: i32,
    alpha: f64,
    f: &ForcingMode,
) -> Result<ModeProfile> {
    if n == 0 || alpha == 0.0 {
        return Err(Error::ZeroMode {
            context: "solve_noslip_direct".into(),
        });
    }
    let m = grid.m();
    let nn = m + 1;
    let nf = n as f64;
    let n2 = nf * nf;
    let r = grid.nodes();
    let rot = rot_forcing(grid, n, f);
    let nsys = 2 * nn;
    let mut a = BandedMatrix::new(nsys, 8, 8);
    let mut rhs = vec![ZERO; nsys];
    // Wall rows: psi(1) = 0 and psi'(1) = 0.
    a.set(0, 0, ONE);
    {
        let (b1, w1) = grid.d1_row(0);
        let mut rowmax = 0.0_f64;
        for &wk in &w1 {
            rowmax = rowmax.max(wk.abs());
        }
        let s = 1.0 / rowmax;
        for (k, &wk) in w1.iter().enumerate() {
            if wk != 0.0 {
                a.set(1, 2 * (b1 + k), C::new(wk * s, 0.0));
            }
        }
    }
    // Outer rows: psi(R_max) = 0 and w(R_max) = 0.
    a.set(2 * m, 2 * m, ONE);
    a.set(2 * m + 1, 2 * m + 1, ONE);
    for j in 1..m {
        let rj = r[j];
        let (b1, w1) = grid.d1_row(j);
        let (b2, w2) = grid.d2_row(j);
        debug_assert_eq!(b1, b2);
        // Row 2j: H_n psi - w = 0 at node j.
        {
            let mut row = [0.0_f64; 6];
            let mut rowmax = 1.0_f64; // the -1 coefficient of w_j
            for k in 0..6 {
                let mut c = -w2[k] - w1[k] / rj;
                if b1 + k == j {
                    c += n2 / (rj * rj);
                }
                row[k] = c;
                rowmax = rowmax.max(c.abs());
            }
            let s = 1.0 / rowmax;
            for (k, &c) in row.iter().enumerate() {
                if c != 0.0 {
                    a.set(2 * j, 2 * (b1 + k), C::new(c * s, 0.0));
                }
            }
            a.set(2 * j, 2 * j + 1, C::new(-s, 0.0));
        }
        // Row 2j + 1: A_n w = rot f at node j.
        {
            let pot = C::new(n2 / (rj * rj), -alpha * nf * (1.0 - 1.0 / (rj * rj)));
            let mut row = [ZERO; 6];
            let mut rowmax = 0.0_f64;
            for k in 0..6 {
                let mut c = C::new(-w2[k] - w1[k] / rj, 0.0);
                if b1 + k == j {
                    c += pot;
                }
                row[k] = c;
                rowmax = rowmax.max(c.norm());
            }
            let s = 1.0 / rowmax;
            for (k, &c) in row.iter().enumerate() {
                a.set(2 * j + 1, 2 * (b1 + k) + 1, c * s);
            }
            rhs[2 * j + 1] = rot[j] * s;
        }
    }
    let lu = a.factor()?;
    let x = lu.solve(&rhs);
    let psi: Vec<C> = (0..nn).map(|j| x[2 * j]).collect();
    let omega: Vec<C> = (0..nn).map(|j| x[2 * j + 1]).collect();
    let dpsi = grid.deriv1(&psi);
    let v_r: Vec<C> = (0..nn).map(|j| I * (nf / r[j]) * psi[j]).collect();
    let v_theta: Vec<C> = dpsi.iter().map(|z| -z).collect();
    let mut p = ModeProfile::new(n, v_r, v_theta);
    p.psi = Some(psi);
    p.omega = Some(omega);
    Ok(p)
}

// ---------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------

/// A no-slip mode split into its four structural parts.
#[derive(Debug, Clone)]
pub struct ModeDecomposition {
    /// The slip solution (vanishing normal velocity, residual slip).
    pub v_slip: ModeProfile,
    /// Irrotational slow part from the harmonic stream function.
    pub v_slow: ModeProfile,
    /// Wall-layer part from the layer profile.
    pub v_bl: ModeProfile,
    /// Remainder of the fast mode beyond the layer profile.
    pub v_rem: ModeProfile,
    /// Harmonic coefficient.
    pub a_n: C,
    /// Fast-mode coefficient.
    pub b_n: C,
    /// Norms of the slip part.
    pub norm_slip: NormReport,
    /// Norms of the slow part.
    pub norm_slow: NormReport,
    /// Norms of the layer part.
    pub norm_bl: NormReport,
    /// Norms of the remainder.
    pub norm_rem: NormReport,
}

/// Splits an assembled mode into slip, slow, layer, and remainder parts.
///
/// The slow part comes from the harmonic stream function
/// `a_n r^{-|n|}` with analytic derivative; the layer part is
/// `b_n` times the wall-layer velocity; the remainder is `b_n` times the
/// velocity of `phi_hat` minus the layer stream function. The four parts
/// sum to the assembled velocity up to rounding.
pub fn decompose(
    grid: &RadialGrid,
    assembled: &AssembledMode,
    slip: &ModeProfile,
    fast: &FastMode,
    params: &LayerParams,
    profile: &LayerProfile,
) -> ModeDecomposition {
    let n = slip.n;
    let nf = n as f64;
    let na = n.unsigned_abs() as f64;
    let a = assembled.a_n;
    let b = assembled.b_n;
    let nn = grid.n_nodes();
    let r = grid.nodes();
    let mut slow_r = Vec::with_capacity(nn);
    let mut slow_t = Vec::with_capacity(nn);
    let mut rem_r = Vec::with_capacity(nn);
    let mut rem_t = Vec::with_capacity(nn);
    let bc0 = b * profile.c0;
    for j in 0..nn {
        let rj = r[j];
        let harmonic = rj.powf(-na);
        slow_r.push(I * (nf / rj) * a * harmonic);
        slow_t.push(a * (na * harmonic / rj));
        let (g, g1) = profile.g_at(params.abs_beta * (rj - 1.0));
        rem_r.push(I * (nf / rj) * (b * fast.phi_hat[j] - bc0 * g));
        rem_t.push(-(b * fast.dphi_hat[j] - bc0 * (params.abs_beta * g1)));
    }
    let v_slow = ModeProfile::new(n, slow_r, slow_t);
    let v_bl = bl_velocity(params, profile, bc0, grid);
    let v_rem = ModeProfile::new(n, rem_r, rem_t);
    ModeDecomposition {
        norm_slip: mode_norms(grid, slip),
        norm_slow: mode_norms(grid, &v_slow),
        norm_bl: mode_norms(grid, &v_bl),
        norm_rem: mode_norms(grid, &v_rem),
        v_slip: slip.clone(),
        v_slow,
        v_bl,
        v_rem,
        a_n: a,
        b_n: b,
    }
}

// ---------------------------------------------------------------------
// Pressure and residual
// ---------------------------------------------------------------------

/// Pressure of one mode, recovered algebraically from the velocity.
#[derive(Debug, Clone)]
pub struct PressureProfile {
    /// Mode index.
    pub n: i32,
    /// Pressure samples.
    pub q: Vec<C>,
    /// How the additive gauge is fixed.
    pub gauge: &'static str,
}

/// Recovers the mode pressure from the angular momentum equation
/// (`n != 0`), or by radial integration of the radial momentum equation
/// with gauge `q(1) = 0` (`n = 0`, where the angular equation has no
/// pressure).
///
/// For a divergence-free mode with vorticity `w = rot v`, the angular
/// component of the vector Laplacian collapses to a single derivative of
/// the vorticity, `(Lap v)_theta = w'`, so the angular momentum equation
/// gives
///
/// `q_n = (r / (i n)) (f_theta + w' + i alpha n v_theta)`.
///
/// Working from the vorticity (the primary solver unknown) instead of
/// chaining three numerical derivatives of the stream function keeps the
/// recovery well conditioned near the wall, where one-sided stencils on a
/// strongly graded mesh would otherwise amplify truncation noise by a
/// factor `1/h` per pass.
pub fn recover_pressure(
    grid: &RadialGrid,
    n: i32,
    alpha: f64,
    v: &ModeProfile,
    f: &ForcingMode,
) -> PressureProfile {
    let nn = grid.n_nodes();
    let r = grid.nodes();
    let omega = match &v.omega {
        Some(w) => w.clone(),
        None => vorticity(grid, v),
    };
    if n == 0 {
        let integrand: Vec<C> = (0..nn)
            .map(|j| f.f_r[j] + omega[j] * (alpha / r[j]))
            .collect();
        let q = grid.cum_from_inner(&integrand, Measure::Dr);
        return PressureProfile {
            n,
            q,
            gauge: "q(1) = 0",
        };
    }
    let nf = n as f64;
    let dw = grid.deriv1(&omega);
    let q: Vec<C> = (0..nn)
        .map(|j| {
            let bracket = f.f_theta[j] + dw[j] + I * (alpha * nf) * v.v_theta[j];
            bracket * r[j] / (I * nf)
        })
        .collect();
    PressureProfile {
        n,
        q,
        gauge: "determined by the angular momentum equation",
    }
}

/// Relative residual of the full mode-`n` momentum system for a solved
/// velocity and recovered pressure.
///
/// For a divergence-free mode the vector Laplacian reduces to first
/// derivatives of the vorticity, `(Lap v)_r = -(i n / r) w` and
/// `(Lap v)_theta = w'`, so both component equations are evaluated at
/// every node as
///
/// * radial: `(i n / r) w - i alpha n v_r + q' - alpha w / r - f_r`,
/// * angular: `-w' - i alpha n v_theta + (i n / r) q - f_theta`.
///
/// The maximum pointwise residual is normalized by the largest magnitude
/// any single term attains anywhere, so the figure reports cancellation
/// quality rather than raw size. The reduction also keeps the check well
/// conditioned: only one numerical derivative is ever applied to a field,
/// whereas forming the vector Laplacian from the velocity would chain
/// stencils and amplify wall truncation noise past the tolerances the
/// residual is meant to certify.
pub fn momentum_residual(
    grid: &RadialGrid,
    n: i32,
    alpha: f64,
    v: &ModeProfile,
    q: &PressureProfile,
    f: &ForcingMode,
) -> f64 {
    let nn = grid.n_nodes();
    let nf = n as f64;
    let r = grid.nodes();
    let omega = match &v.omega {
        Some(w) => w.clone(),
        None => vorticity(grid, v),
    };
    let dw = grid.deriv1(&omega);
    let dq = grid.deriv1(&q.q);
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for j in 0..nn {
        let rj = r[j];
        let terms_r = [
            I * (nf / rj) * omega[j],
            -I * (alpha * nf) * v.v_r[j],
            dq[j],
            -omega[j] * (alpha / rj),
            -f.f_r[j],
        ];
        let terms_t = [
            -dw[j],
            -I * (alpha * nf) * v.v_theta[j],
            I * (nf / rj) * q.q[j],
            -f.f_theta[j],
        ];
        let res_r: C = terms_r.iter().sum();
        let res_t: C = terms_t.iter().sum();
        worst = worst.max(res_r.norm()).max(res_t.norm());
        for t in terms_r.iter().chain(terms_t.iter()) {
            scale = scale.max(t.norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

// ---------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------

/// Which route solved a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveRoute {
    /// Closed-form axisymmetric quadrature.
    Mode0,
    /// Slip solution plus fast-mode corrector.
    Constructive,
    /// Monolithic banded solve.
    Direct,
}

/// Options of the linear front end.
#[derive(Debug, Clone)]
pub struct LinearOptions {
    /// Constructive-route threshold: `1 <= |n| <= kappa sqrt(alpha)`.
    pub kappa: f64,
    /// Relative momentum-residual gate per mode.
    pub tol_res: f64,
    /// Maximum number of domain doublings when vorticity has not decayed
    /// at the outer edge.
    pub max_regrids: u32,
    /// Whether to recover pressure and gate each mode on its residual.
    pub check_residuals: bool,
}

impl Default for LinearOptions {
    fn default() -> Self {
        LinearOptions {
            kappa: DEFAULT_KAPPA,
            tol_res: DEFAULT_TOL_RES,
            max_regrids: 2,
            check_residuals: true,
        }
    }
}

/// Whether mode `n` qualifies for the constructive route at this rotation
/// rate on this grid: inside the layer regime and with power weights
/// `r^{|n|}` still representable over the domain.
pub fn constructive_applicable(n: i32, alpha: f64, kappa: f64, r_max: f64) -> bool {
    let na = n.unsigned_abs() as f64;
    n != 0 && na <= kappa * alpha.abs().sqrt() && na * r_max.ln() <= 600.0
}

/// Solves one mode, dispatching to the closed-form, constructive, or
/// direct route. Returns the profile and the route taken.
pub fn solve_mode(
    grid: &RadialGrid,
    n: i32,
    alpha: f64,
    f: &ForcingMode,
    opts: &LinearOptions,
) -> Result<(ModeProfile, SolveRoute)> {
    if n == 0 {
        return Ok((solve_mode0(grid, &f.f_theta)?, SolveRoute::Mode0));
    }
    let abs_beta = (2.0 * (alpha * n as f64).abs()).cbrt();
    grid.ensure_layer_resolved(1.0 / abs_beta, MIN_LAYER_NODES)?;
    if constructive_applicable(n, alpha, opts.kappa, grid.r_max()) {
        let params = LayerParams::new(alpha, n)?;
        let profile = profile_g_default(&params)?;
        let slip = solve_slip(grid, n, alpha, f)?;
        let fast = fast_mode(grid, &params, &profile)?;
        let assembled = assemble_noslip(grid, n, alpha, &slip, &fast)?;
        Ok((assembled.v, SolveRoute::Constructive))
    } else {
        Ok((solve_noslip_direct(grid, n, alpha, f)?, SolveRoute::Direct))
    }
}

/// Vorticity magnitude near the outer edge relative to its maximum; used
/// to decide whether the truncated domain was long enough.
fn edge_fraction(grid: &RadialGrid, p: &ModeProfile) -> f64 {
    let omega = match &p.omega {
        Some(w) => w.clone(),
        None => vorticity(grid, p),
    };
    let maxabs = omega.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if maxabs == 0.0 {
        return 0.0;
    }
    let m = grid.m();
    let lo = m.saturating_sub(TAIL_NODES);
    omega[lo..m]
        .iter()
        .fold(0.0_f64, |a, z| a.max(z.norm()))
        / maxabs
}

/// Solves the linearized system for every mode of the forcing.
///
/// Modes are dispatched per [`solve_mode`] and solved in parallel. When
/// the vorticity of any nonzero mode has not decayed at the outer edge,
/// the domain is doubled (in radius and node count) and the recipe is
/// re-evaluated, at most `max_regrids` times. Each accepted mode passes
/// the momentum-residual gate.
pub fn solve_linear(
    grid: &Arc<RadialGrid>,
    alpha: f64,
    f: &ForcingSpec,
    n_max: i32,
    opts: &LinearOptions,
) -> Result<FlowSolution> {
    if f.max_mode() > n_max {
        return Err(Error::Config(format!(
            "forcing contains mode {} beyond the cutoff {n_max}",
            f.max_mode()
        )));
    }
    let mut grid_now = grid.clone();
    let mut forcing = f.clone();
    let mut regrids = 0_u32;
    loop {
        let solved: Result<Vec<(i32, ModeProfile, f64)>> = forcing
            .modes
            .par_iter()
            .map(|(&n, fm)| {
                let run = || -> Result<(i32, ModeProfile, f64)> {
                    let (v, _route) = solve_mode(&grid_now, n, alpha, fm, opts)?;
                    let residual = if opts.check_residuals {
                        let q = recover_pressure(&grid_now, n, alpha, &v, fm);
                        momentum_residual(&grid_now, n, alpha, &v, &q, fm)
                    } else {
                        0.0
                    };
                    Ok((n, v, residual))
                };
                run().map_err(|e| match e {
                    Error::ResidualGate { .. } => e,
                    other => Error::ModeFailed {
                        n,
                        source: Box::new(other),
                    },
                })
            })
            .collect();
        let solved = solved?;
        let needs_longer = solved
            .iter()
            .any(|(n, v, _)| *n != 0 && edge_fraction(&grid_now, v) > TAIL_FRACTION);
        if needs_longer && regrids < opts.max_regrids {
            let longer = RadialGrid::new(
                2.0 * grid_now.r_max(),
                2 * grid_now.m(),
                grid_now.sigma(),
            )?;
            let longer = Arc::new(longer);
            forcing = forcing.reevaluate(&longer).map_err(|e| match e {
                Error::Config(_) => Error::TailNotNegligible {
                    r_max: grid_now.r_max(),
                    detail: "vorticity alive at the edge and the forcing recipe cannot be \
                             re-evaluated on a longer domain"
                        .into(),
                },
                other => other,
            })?;
            grid_now = longer;
            regrids += 1;
            continue;
        }
        if needs_longer {
            return Err(Error::TailNotNegligible {
                r_max: grid_now.r_max(),
                detail: format!(
                    "vorticity alive at the edge after {regrids} domain doublings"
                ),
            });
        }
        if opts.check_residuals {
            for (n, _, res) in &solved {
                if *res > opts.tol_res {
                    return Err(Error::ResidualGate {
                        n: *n,
                        residual: *res,
                        tol: opts.tol_res,
                    });
                }
            }
        }
        let mut sol = FlowSolution::empty(grid_now.clone());
        sol.regrids = regrids;
        for (n, v, res) in solved {
            sol.residuals.insert(n, res);
            sol.modes.insert(n, v);
        }
        return Ok(sol);
    }
}
