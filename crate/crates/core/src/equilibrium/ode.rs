use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::objectives::ObjectiveSpec;

use super::{
    check_model, is_trivial, trivial_solution, EquilibriumSolution, SolverKind, SolverOptions,
};

/// Integrates `y' = -(kappa B / D)^2 f(t, y)^2`, `y(T) = 0`, backward with
/// RK4 on the grid, where `f = -1 / (2K)`. Each step is checked against two
/// half steps; rejected steps are split recursively.
pub fn solve_ode(
    coeffs: &CoefficientSet,
    spec: &ObjectiveSpec,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    check_model(coeffs, spec)?;
    if is_trivial(coeffs, spec) {
        return trivial_solution(coeffs, spec, SolverKind::Ode);
    }
    let rhs = Rhs { coeffs, spec, opts };
    let grid = coeffs.grid();
    let n = grid.len();
    let mut y = vec![0.0; n];
    for k in (0..n - 1).rev() {
        y[k] = rhs.advance(grid.node(k + 1), y[k + 1], grid.node(k), 0)?;
    }
    let beta = grid
        .nodes()
        .zip(&y)
        .map(|(t, &yk)| Ok(spec.kappa * coeffs.b_over_d_sq(t) * rhs.f(t, yk)?))
        .collect::<Result<Vec<_>>>()?;
    EquilibriumSolution::assemble(coeffs, spec, y, beta, SolverKind::Ode, false)
}

struct Rhs<'a> {
    coeffs: &'a CoefficientSet,
    spec: &'a ObjectiveSpec,
    opts: &'a SolverOptions,
}

impl Rhs<'_> {
    fn f(&self, t: f64, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::StepFailure {
                t,
                reason: format!("stage value y = {y} left y >= 0"),
            });
        }
        let curvature = self.spec.curvature_sum(t, y)?;
        if !(curvature < 0.0) {
            return Err(Error::PositivityViolation { t, y, curvature });
        }
        let f = -0.5 / curvature;
        if !(f <= self.opts.f_bound) {
            return Err(Error::StepFailure { t, reason: format!("f = {f:e} is unbounded") });
        }
        Ok(f)
    }

    /// `dy/ds` in reversed time `s = T - t`.
    fn slope(&self, t: f64, y: f64) -> Result<f64> {
        let lead = self.spec.kappa * self.coeffs.b(t) / self.coeffs.d(t);
        let f = self.f(t, y)?;
        Ok(lead * lead * f * f)
    }

    fn rk4(&self, t: f64, y: f64, t_next: f64) -> Result<f64> {
        let h = t - t_next;
        let mid = t - 0.5 * h;
        let k1 = self.slope(t, y)?;
        let k2 = self.slope(mid, y + 0.5 * h * k1)?;
        let k3 = self.slope(mid, y + 0.5 * h * k2)?;
        let k4 = self.slope(t_next, y + h * k3)?;
        Ok(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    }

    fn advance(&self, t: f64, y: f64, t_next: f64, depth: u32) -> Result<f64> {
        let mid = 0.5 * (t + t_next);
        let full = self.rk4(t, y, t_next)?;
        let half = self.rk4(mid, self.rk4(t, y, mid)?, t_next)?;
        let err = (half - full).abs() / 15.0;
        if err <= self.opts.ode_tol * (1.0 + half.abs()) {
            return Ok(half + (half - full) / 15.0);
        }
        if depth >= self.opts.max_refine_depth {
            return Err(Error::StepFailure {
                t: t_next,
                reason: format!("local error {err:e} above tolerance after {depth} refinements"),
            });
        }
        let y_mid = self.advance(t, y, mid, depth + 1)?;
        self.advance(mid, y_mid, t_next, depth + 1)
    }
}
