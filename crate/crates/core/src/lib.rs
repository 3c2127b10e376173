//! Equilibrium (time-consistent) controls for linear controlled SDEs
//!
//! ```text
//! dX_s = (A_s X_s + B_s u_s + C_s) ds + (D_s u_s + F_s) dW_s
//! ```
//!
//! whose objective is `kappa * E_t[X_T] + psi(t, M_2, ..., M_n)` with `M_j` the
//! conditional central moments of the terminal state. The equilibrium control
//! is state independent, `u(t) = beta_t exp(-int_t^T A) - F_t / D_t`, and the
//! terminal law along it is Gaussian with variance `y_t = int_t^T (D beta)^2`.
//!
//! Modules:
//!
//! * [`coeffs`]: model coefficients, time grid, quadrature primitives.
//! * [`moments`]: Gaussian moment calculus and penalty expectations.
//! * [`objectives`]: `psi`, its even-order gradient and the curvature sum `K`.
//! * [`equilibrium`]: closed-form, ODE and algebraic solvers for `beta`.
//! * [`verify`]: exact evaluation, spike variations, FBSDE diagonal,
//!   moment PDE residuals and Monte Carlo.

// `!(x >= 0.0)` is used on purpose so that NaN fails domain checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffs;
pub mod equilibrium;
mod error;
pub mod moments;
pub mod objectives;
pub mod quadrature;
pub mod verify;

pub use coeffs::{CoefficientSet, DiscountCache, Path, TimeGrid};
pub use equilibrium::{
    solve, solve_algebraic, solve_closed_form, solve_ode, ConcavityReport, EquilibriumSolution,
    SolverKind, SolverOptions,
};
pub use error::{Error, Result};
pub use moments::{DiscreteLaw, FourierDensity, MomentVector, Penalty};
pub use objectives::{MomentWeights, ObjectiveSpec, PsiGradient, Variant};
pub use verify::{
    DeterministicControl, FbsdeDiagonalReport, McReport, PdeResidualTable, SpikeTestReport,
};
