//! Radial solvers for the stationary Navier-Stokes system in the exterior
//! of a rotating unit disk.
//!
//! In the frame rotating with the disk, the velocity perturbation `v` around
//! the background swirl `U = e_theta / r` satisfies, for rotation speed
//! `alpha`,
//!
//! ```text
//! -Delta v - alpha (d_theta v - v_perp) + grad q + alpha U_rot v = f,
//! div v = 0,        v = 0 on r = 1,
//! ```
//!
//! where `v_perp = (-v_theta, v_r)` and `(U_rot v)_r = -omega / r` couples the
//! perturbation vorticity `omega = rot v` back into the radial momentum
//! balance. Expanding in angular Fourier modes `v(r, theta) = sum_n v_n(r)
//! e^{i n theta}` decouples the system into one ODE boundary-value problem
//! per integer mode `n`, posed on the half-line `r >= 1`.
//!
//! The crate provides:
//!
//! * [`grid`]: graded finite-difference grids on `[1, R_max]` with
//!   fourth-order derivative stencils and cell quadrature;
//! * [`field`]: per-mode velocity profiles, differential operators
//!   (`rot`, `div`), norms, and physical-space synthesis;
//! * [`stream`]: stream-function machinery, the explicit Green kernel for
//!   the operator `H_n = -d_rr - d_r / r + n^2 / r^2`, and Biot-Savart
//!   recovery of velocities from vorticity;
//! * [`airy`]: the complex Airy function `Ai` and its derivative;
//! * [`layer`]: the wall-layer profile family built from `Ai`, with layer
//!   scale `|beta| ~ (2 |alpha n|)^{1/3}`;
//! * [`banded`]: complex banded LU factorization;
//! * [`linear`]: the per-mode linear solvers (axisymmetric quadrature
//!   solve, vorticity solve with slip data, wall-layer corrector assembly,
//!   and a direct coupled discretization), pressure recovery, and momentum
//!   residuals;
//! * [`nonlinear`]: the quadratic convolution term, Picard iteration, and
//!   invariant-ball bookkeeping;
//! * [`verify`]: energy identities, scaling sweeps, interpolation and
//!   nondegeneracy probes, and the acceptance checks used by the test
//!   suite and the `verify` subcommand of the CLI;
//! * [`io`]: CSV and JSON writers for profiles, traces, sweeps, and run
//!   manifests;
//! * [`config`]: the `RunConfig` consumed by the command-line interface.

pub mod airy;
pub mod banded;
pub mod config;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod layer;
pub mod linear;
pub mod nonlinear;
pub mod stream;
pub mod verify;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C = num_complex::Complex64;

/// Imaginary unit.
pub const I: C = C::new(0.0, 1.0);

#[cfg(doctest)]
mod book {
    /// Doc-tested snippets from the guide, chapter by chapter.
    macro_rules! book_chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    book_chapter!(ch_grid, "../../../book/src/grid.md");
    book_chapter!(ch_modes, "../../../book/src/modes.md");
    book_chapter!(ch_airy, "../../../book/src/airy.md");
    book_chapter!(ch_layer, "../../../book/src/layer.md");
    book_chapter!(ch_linear, "../../../book/src/linear.md");
    book_chapter!(ch_nonlinear, "../../../book/src/nonlinear.md");
    book_chapter!(ch_verification, "../../../book/src/verification.md");
}
