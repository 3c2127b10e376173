//! Independent checks of the equilibrium property.
//!
//! Deterministic (state independent) controls leave the terminal state
//! Gaussian, so their objective can be evaluated exactly from a mean and a
//! variance integral. All integrals here use Gauss-Legendre on closures, not
//! the node-based quadrature used by the solvers.

mod fbsde;
mod monte_carlo;
mod pde;
mod spike;
mod suite;

use serde::{Deserialize, Serialize};

use crate::coeffs::{CoefficientSet, TimeGrid};
use crate::equilibrium::EquilibriumSolution;
use crate::error::{Error, Result};
use crate::objectives::ObjectiveSpec;
use crate::quadrature::integrate_fn_pair;

pub use fbsde::{fbsde_diagonal_check, FbsdeDiagonalReport};
pub use monte_carlo::{monte_carlo, McOptions, McReport, MomentEstimate};
pub use pde::{pde_residual_check, PdeResidualRow, PdeResidualTable};
pub use spike::{default_epsilons, spike_test, SpikeTestReport};
pub use suite::{run_suite, CheckResult, SuiteOptions, VerificationReport};

/// Pass thresholds for every check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Scaled residual of `kappa B / D^2 + 2 beta K = 0`.
    pub integral_equation: f64,
    /// `|int_t^T (D beta)^2 - y_t|`.
    pub self_consistency: f64,
    /// Exact evaluation vs value function, relative to `1 + |V|`.
    pub evf: f64,
    /// Spike limit vs prediction, relative to the prediction.
    pub spike_relative: f64,
    /// Upper bound on the extrapolated spike limit.
    pub spike_nonpositive: f64,
    /// `|B Y + D calY| / (1 + kappa)`.
    pub fbsde: f64,
    /// Moment PDE residual scaled by `max |m_j|`.
    pub pde: f64,
    /// Monte Carlo acceptance band in standard errors.
    pub mc_sigmas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            integral_equation: 1e-8,
            self_consistency: 5e-6,
            evf: 1e-8,
            spike_relative: 1e-3,
            spike_nonpositive: 1e-6,
            fbsde: 1e-8,
            pde: 1e-5,
            mc_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone)]
enum Base<'a> {
    Constant(f64),
    Sampled { grid: TimeGrid, values: Vec<f64> },
    Equilibrium(&'a EquilibriumSolution),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Spike {
    start: f64,
    end: f64,
    zeta: f64,
}

/// A state-independent control `u(s)`, optionally with additive spikes
/// `zeta * 1_{[start, end)}`.
#[derive(Debug, Clone)]
pub struct DeterministicControl<'a> {
    base: Base<'a>,
    spikes: Vec<Spike>,
}

impl<'a> DeterministicControl<'a> {
    pub fn constant(u: f64) -> Result<Self> {
        if !u.is_finite() {
            return Err(Error::Domain { what: "u", value: u, lo: f64::MIN, hi: f64::MAX });
        }
        Ok(Self { base: Base::Constant(u), spikes: Vec::new() })
    }

    /// Node values on `grid`, linearly interpolated.
    pub fn sampled(grid: &TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCoefficients("non-finite control value".into()));
        }
        Ok(Self { base: Base::Sampled { grid: *grid, values }, spikes: Vec::new() })
    }

    /// The equilibrium control of a solution.
    pub fn equilibrium(sol: &'a EquilibriumSolution) -> Self {
        Self { base: Base::Equilibrium(sol), spikes: Vec::new() }
    }

    /// Adds `zeta` on `[start, end)`. A zero `zeta` still introduces the
    /// breakpoints, which keeps quadrature errors identical between a
    /// perturbed control and its reference.
    pub fn with_spike(mut self, start: f64, end: f64, zeta: f64) -> Result<Self> {
        if !(start < end && zeta.is_finite()) {
            return Err(Error::EpsilonRange(format!(
                "bad spike [{start}, {end}) with zeta {zeta}"
            )));
        }
        self.spikes.push(Spike { start, end, zeta });
        Ok(self)
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        let base = match &self.base {
            Base::Constant(u) => *u,
            Base::Sampled { grid, values } => {
                grid.check_time("s", s)?;
                let (cell, frac) = grid.locate(s);
                if frac == 0.0 {
                    values[cell]
                } else {
                    values[cell] + frac * (values[cell + 1] - values[cell])
                }
            }
            Base::Equilibrium(sol) => sol.control(s, 0.0)?,
        };
        let bump: f64 =
            self.spikes.iter().filter(|sp| s >= sp.start && s < sp.end).map(|sp| sp.zeta).sum();
        Ok(base + bump)
    }

    fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.spikes.iter().flat_map(|sp| [sp.start, sp.end])
    }
}

/// `(int e^{a}(B u + C), int e^{2a}(D u + F)^2)` over `[lo, hi]`, where
/// `a(s) = int_s^T A`. The interval must not contain a spike breakpoint.
pub(crate) fn moment_integrals(
    coeffs: &CoefficientSet,
    u: &DeterministicControl<'_>,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64)> {
    let mut failure = None;
    let mut record = |r: Result<f64>| match r {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let (mean, var) = integrate_fn_pair(
        coeffs.grid(),
        |s| {
            let e = coeffs.log_discount(s).exp();
            let us = record(u.value(s));
            let vol = e * (coeffs.d(s) * us + coeffs.f(s));
            (e * (coeffs.b(s) * us + coeffs.c(s)), vol * vol)
        },
        lo,
        hi,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((mean, var))
}

/// Sorted breakpoints partitioning `[t, T]` for the control.
fn segments(u: &DeterministicControl<'_>, t: f64, horizon: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = std::iter::once(t)
        .chain(u.breakpoints().filter(|b| *b > t && *b < horizon))
        .chain(std::iter::once(horizon))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Mean and variance of `X_T` started from `(t, x)` under `u`.
pub fn terminal_gaussian(
    coeffs: &CoefficientSet,
    t: f64,
    x: f64,
    u: &DeterministicControl<'_>,
) -> Result<(f64, f64)> {
    coeffs.grid().check_time("t", t)?;
    let pts = segments(u, t, coeffs.horizon());
    let mut mean = x * coeffs.log_discount(t).exp();
    let mut var = 0.0;
    for w in pts.windows(2) {
        let (m, v) = moment_integrals(coeffs, u, w[0], w[1])?;
        mean += m;
        var += v;
    }
    Ok((mean, var))
}

/// `J(t, x, u) = kappa E[X_T] + psi(t, alpha(Var X_T))` for a deterministic control.
pub fn evaluate_deterministic(
    coeffs: &CoefficientSet,
    spec: &ObjectiveSpec,
    t: f64,
    x: f64,
    u: &DeterministicControl<'_>,
) -> Result<f64> {
    let (mean, var) = terminal_gaussian(coeffs, t, x, u)?;
    Ok(spec.kappa * mean + spec.psi_gaussian(t, var)?)
}
