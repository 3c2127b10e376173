//! Equilibrium strategies `beta_t` and the induced control and value function.
//!
//! Every solver produces the same [`EquilibriumSolution`]: node values of the
//! terminal variance `y_t` and of `beta_t`. The control is
//! `u(t, x) = beta_t exp(-int_t^T A) - F_t / D_t` and does not depend on `x`.

mod algebraic;
mod closed_form;
mod ode;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coeffs::{integrate, CoefficientSet, TimeGrid};
use crate::error::{Error, Result};
use crate::moments::Penalty;
use crate::objectives::{ObjectiveSpec, Variant};
use crate::quadrature::tail_integrals;

pub use algebraic::solve_algebraic;
pub use closed_form::{closed_form_available, solve_closed_form};
pub use ode::solve_ode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Auto,
    ClosedForm,
    Ode,
    Algebraic,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Auto => "auto",
            SolverKind::ClosedForm => "closed_form",
            SolverKind::Ode => "ode",
            SolverKind::Algebraic => "algebraic",
        })
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(SolverKind::Auto),
            "closed_form" | "closed-form" => Ok(SolverKind::ClosedForm),
            "ode" => Ok(SolverKind::Ode),
            "algebraic" => Ok(SolverKind::Algebraic),
            other => Err(format!(
                "unknown solver '{other}' (expected auto, closed_form, ode or algebraic)"
            )),
        }
    }
}

/// Numerical knobs shared by the solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Local error tolerance of an RK4 step, relative to `1 + |y|`.
    pub ode_tol: f64,
    /// Maximum recursive halvings of a rejected RK4 step.
    pub max_refine_depth: u32,
    pub bisection_steps: u32,
    pub newton_steps: u32,
    pub max_doublings: u32,
    /// Values of `f = -1/(2K)` above this count as unbounded.
    pub f_bound: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            ode_tol: 1e-12,
            max_refine_depth: 30,
            bisection_steps: 30,
            newton_steps: 3,
            max_doublings: 200,
            f_bound: 1e12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityReport {
    /// `max_k K(t_k, y_k)`; negative when the condition holds.
    pub max_curvature: f64,
    pub t_at_max: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    coeffs: CoefficientSet,
    objective: ObjectiveSpec,
    y: Vec<f64>,
    beta: Vec<f64>,
    control_offset: Vec<f64>,
    bbeta_tail: Vec<f64>,
    solver: SolverKind,
    concavity: ConcavityReport,
    trivial: bool,
}

/// Solve with the requested method; `Auto` prefers a closed form, then the
/// algebraic reduction for moment combinations, then the ODE.
pub fn solve(
    coeffs: &CoefficientSet,
    spec: &ObjectiveSpec,
    kind: SolverKind,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    match kind {
        SolverKind::ClosedForm => solve_closed_form(coeffs, spec, opts),
        SolverKind::Ode => solve_ode(coeffs, spec, opts),
        SolverKind::Algebraic => solve_algebraic(coeffs, spec, opts),
        SolverKind::Auto => {
            if closed_form_available(spec) {
                solve_closed_form(coeffs, spec, opts)
            } else if matches!(spec.variant, Variant::MomentCombo(_)) {
                solve_algebraic(coeffs, spec, opts)
            } else {
                solve_ode(coeffs, spec, opts)
            }
        }
    }
}

/// Supremum of the left side of the ambiguous-cosine root equation.
pub(crate) fn ambiguous_bound(law: &crate::moments::DiscreteLaw) -> f64 {
    let mut total = 0.0;
    for &(hi, pi) in &law.support {
        for &(hk, pk) in &law.support {
            let (a, b) = (hi * hi, hk * hk);
            if a + b > 0.0 {
                total += pi * pk * a * b * 2.0 / (a + b);
            }
        }
    }
    total
}

/// Model-level guards that do not depend on the solver.
pub(crate) fn check_model(coeffs: &CoefficientSet, spec: &ObjectiveSpec) -> Result<()> {
    spec.validate()?;
    let target = spec.kappa * spec.kappa * coeffs.theta0();
    match &spec.variant {
        Variant::Penalty(Penalty::Cos { .. }) if target >= 1.0 => {
            Err(Error::CosDomain { value: target })
        }
        Variant::Penalty(Penalty::AmbiguousCos(law)) => {
            let bound = ambiguous_bound(law);
            if target >= bound {
                Err(Error::UnboundedVariance { value: target, bound })
            } else {
                Ok(())
            }
        }
        Variant::Penalty(Penalty::Fourier(d)) => d.check_window(),
        _ => Ok(()),
    }
}

/// `kappa = 0` or `B = 0`: the zero strategy solves the integral equation.
pub(crate) fn is_trivial(coeffs: &CoefficientSet, spec: &ObjectiveSpec) -> bool {
    spec.kappa == 0.0 || coeffs.b_vanishes()
}

pub(crate) fn trivial_solution(
    coeffs: &CoefficientSet,
    spec: &ObjectiveSpec,
    solver: SolverKind,
) -> Result<EquilibriumSolution> {
    let n = coeffs.grid().len();
    EquilibriumSolution::assemble(coeffs, spec, vec![0.0; n], vec![0.0; n], solver, true)
}

impl EquilibriumSolution {
    /// Builds the solution and enforces `K(t_k, y_k) < 0` at every node.
    pub(crate) fn assemble(
        coeffs: &CoefficientSet,
        spec: &ObjectiveSpec,
        y: Vec<f64>,
        beta: Vec<f64>,
        solver: SolverKind,
        trivial: bool,
    ) -> Result<Self> {
        let grid = coeffs.grid();
        let mut max_curvature = f64::NEG_INFINITY;
        let mut t_at_max = 0.0;
        for (k, t) in grid.nodes().enumerate() {
            let curvature = spec.curvature_sum(t, y[k])?;
            if !(curvature < 0.0) {
                return Err(Error::PositivityViolation { t, y: y[k], curvature });
            }
            if curvature > max_curvature {
                max_curvature = curvature;
                t_at_max = t;
            }
        }
        let control_offset = grid.nodes().map(|t| -coeffs.f(t) / coeffs.d(t)).collect();
        let bbeta: Vec<f64> = grid.nodes().zip(&beta).map(|(t, b)| coeffs.b(t) * b).collect();
        let bbeta_tail = tail_integrals(&bbeta, grid.step());
        Ok(Self {
            coeffs: coeffs.clone(),
            objective: spec.clone(),
            y,
            beta,
            control_offset,
            bbeta_tail,
            solver,
            concavity: ConcavityReport { max_curvature, t_at_max, ok: true },
            trivial,
        })
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn objective(&self) -> &ObjectiveSpec {
        &self.objective
    }

    pub fn grid(&self) -> &TimeGrid {
        self.coeffs.grid()
    }

    /// `y_t` at the nodes.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// `beta_t` at the nodes.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `-F_t / D_t` at the nodes.
    pub fn control_offset(&self) -> &[f64] {
        &self.control_offset
    }

    /// Which solver produced the solution.
    pub fn solver(&self) -> SolverKind {
        self.solver
    }

    /// `y_t` at an arbitrary time: cubic Hermite interpolation using the
    /// nodal slopes `y' = -(D beta)^2`.
    pub fn y_at(&self, t: f64) -> Result<f64> {
        let grid = self.grid();
        grid.check_time("t", t)?;
        if let Some(k) = grid.index_of(t) {
            return Ok(self.y[k]);
        }
        let (k, s) = grid.locate(t);
        let h = grid.step();
        let slope = |i: usize| {
            let v = self.coeffs.d(grid.node(i)) * self.beta[i];
            -v * v
        };
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * self.y[k] + h10 * h * slope(k) + h01 * self.y[k + 1] + h11 * h * slope(k + 1);
        Ok(v.max(0.0))
    }

    /// `beta_t` at an arbitrary time, from `kappa B_t / D_t^2 * f(t, y_t)`.
    pub fn beta_at(&self, t: f64) -> Result<f64> {
        let grid = self.grid();
        grid.check_time("t", t)?;
        if let Some(k) = grid.index_of(t) {
            return Ok(self.beta[k]);
        }
        if self.trivial {
            return Ok(0.0);
        }
        let y = self.y_at(t)?;
        let curvature = self.objective.curvature_sum(t, y)?;
        Ok(-self.objective.kappa * self.coeffs.b_over_d_sq(t) / (2.0 * curvature))
    }

    /// Equilibrium control `u(t, x)`; the same rule is closed-loop and open-loop.
    pub fn control(&self, t: f64, _x: f64) -> Result<f64> {
        let beta = self.beta_at(t)?;
        Ok(beta * (-self.coeffs.log_discount(t)).exp() - self.coeffs.f(t) / self.coeffs.d(t))
    }

    /// `int_t^T B_s beta_s ds`.
    pub fn mean_shift(&self, t: f64) -> Result<f64> {
        let grid = self.grid();
        grid.check_time("t", t)?;
        if let Some(k) = grid.index_of(t) {
            return Ok(self.bbeta_tail[k]);
        }
        let bbeta: Vec<f64> =
            grid.nodes().zip(&self.beta).map(|(s, b)| self.coeffs.b(s) * b).collect();
        integrate(grid, &bbeta, t, grid.horizon())
    }

    /// Mean of `X_T` along the equilibrium from `(t, x)`.
    pub fn terminal_mean(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.coeffs.big_theta(t, x)? + self.mean_shift(t)?)
    }

    /// Equilibrium value function `V(t, x) = kappa E[X_T] + psi(t, alpha(y_t))`.
    pub fn value(&self, t: f64, x: f64) -> Result<f64> {
        let mean = self.terminal_mean(t, x)?;
        let y = self.y_at(t)?;
        Ok(self.objective.kappa * mean + self.objective.psi_gaussian(t, y)?)
    }

    /// Curvature `K(t, y_t)` along the solution.
    pub fn curvature_at(&self, t: f64) -> Result<f64> {
        let y = self.y_at(t)?;
        self.objective.curvature_sum(t, y)
    }

    pub fn concavity_check(&self) -> &ConcavityReport {
        &self.concavity
    }

    /// `|kappa B/D^2 + 2 beta K| / (1 + |kappa B/D^2|)` at every node.
    pub fn integral_equation_residuals(&self) -> Result<Vec<f64>> {
        self.grid()
            .nodes()
            .enumerate()
            .map(|(k, t)| {
                let lead = self.objective.kappa * self.coeffs.b_over_d_sq(t);
                let curvature = self.objective.curvature_sum(t, self.y[k])?;
                Ok((lead + 2.0 * self.beta[k] * curvature).abs() / (1.0 + lead.abs()))
            })
            .collect()
    }

    /// `|int_t^T (D beta)^2 - y_t|` at every node.
    pub fn self_consistency_residuals(&self) -> Result<Vec<f64>> {
        self.grid()
            .nodes()
            .enumerate()
            .map(|(k, t)| Ok((self.coeffs.y_from_beta(&self.beta, t)? - self.y[k]).abs()))
            .collect()
    }

    /// One row per node: `t, y, beta, control(t, x0), value(t, x0)`.
    pub fn table(&self, x0: f64) -> Result<Vec<[f64; 5]>> {
        self.grid()
            .nodes()
            .enumerate()
            .map(|(k, t)| {
                Ok([t, self.y[k], self.beta[k], self.control(t, x0)?, self.value(t, x0)?])
            })
            .collect()
    }

    /// CSV with full double precision.
    pub fn to_csv(&self, x0: f64) -> Result<String> {
        let mut out = String::from("t,y,beta,control_at_x0,value_at_x0\n");
        for row in self.table(x0)? {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn to_json(&self, x0: f64) -> Result<serde_json::Value> {
        let table = self.table(x0)?;
        let column = |i: usize| table.iter().map(|r| r[i]).collect::<Vec<_>>();
        Ok(serde_json::json!({
            "solver": self.solver.to_string(),
            "horizon": self.grid().horizon(),
            "num_steps": self.grid().num_steps(),
            "x0": x0,
            "objective": self.objective,
            "concavity": self.concavity,
            "t": column(0),
            "y": column(1),
            "beta": column(2),
            "control_at_x0": column(3),
            "value_at_x0": column(4),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::ObjectiveSpec;

    fn coeffs(b: f64) -> CoefficientSet {
        CoefficientSet::constant(TimeGrid::new(1.0, 512).unwrap(), 0.0, b, 0.0, 0.2, 0.0).unwrap()
    }

    #[test]
    fn mv_closed_form_example() {
        let spec = ObjectiveSpec::moment_combo(1.0, vec![2.0]).unwrap();
        let sol = solve(&coeffs(0.3), &spec, SolverKind::Auto, &SolverOptions::default()).unwrap();
        assert_eq!(sol.solver(), SolverKind::ClosedForm);
        assert!(sol.beta().iter().all(|b| (b - 3.75).abs() < 1e-13));
        assert!((sol.y()[0] - 0.5625).abs() < 1e-13);
        assert!((sol.control(0.5, 7.0).unwrap() - 3.75).abs() < 1e-13);
        assert!((sol.control(0.123, 7.0).unwrap() - 3.75).abs() < 1e-12);
        assert_eq!(sol.control(0.3, -1.0).unwrap(), sol.control(0.3, 1e6).unwrap());
        assert!((sol.concavity_check().max_curvature + 1.0).abs() < 1e-15);
    }

    #[test]
    fn value_examples() {
        let opts = SolverOptions::default();
        let exp = ObjectiveSpec::penalty(1.0, Penalty::Exp { c: 1.0 }).unwrap();
        let sol = solve_closed_form(&coeffs(0.3), &exp, &opts).unwrap();
        assert!((sol.control(0.0, 0.0).unwrap() - 0.3 / (0.04 * 3.25f64.sqrt())).abs() < 1e-12);
        // kappa int B beta + psi = (sqrt(1 + kappa^2 theta) - 1) / c
        let v = sol.value(0.0, 1.5).unwrap();
        assert!((v - 1.5 - (3.25f64.sqrt() - 1.0)).abs() < 1e-9, "{v}");
        assert!((sol.value(1.0, 2.0).unwrap() - 2.0).abs() < 1e-15);

        let cos = ObjectiveSpec::penalty(1.0, Penalty::Cos { c: 1.0 }).unwrap();
        let sol = solve_closed_form(&coeffs(0.1), &cos, &opts).unwrap();
        let v = sol.value(0.0, -0.4).unwrap();
        assert!((v + 0.4 - (1.0 - 0.75f64.sqrt())).abs() < 1e-9, "{v}");
        assert!(matches!(
            solve_closed_form(&coeffs(0.3), &cos, &opts),
            Err(Error::CosDomain { .. })
        ));
    }

    #[test]
    fn kappa_zero_gives_offset_control() {
        let c = CoefficientSet::constant(TimeGrid::new(1.0, 64).unwrap(), 0.1, 0.3, 0.0, 0.2, 0.05)
            .unwrap();
        let spec = ObjectiveSpec::penalty(0.0, Penalty::Exp { c: 1.0 }).unwrap();
        for kind in [SolverKind::ClosedForm, SolverKind::Ode] {
            let sol = solve(&c, &spec, kind, &SolverOptions::default()).unwrap();
            assert!(sol.beta().iter().all(|b| *b == 0.0));
            assert!(sol.y().iter().all(|y| *y == 0.0));
            assert!((sol.control(0.4, 1.0).unwrap() + 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn hermite_y_tracks_closed_form_between_nodes() {
        let c = CoefficientSet::constant(TimeGrid::new(1.0, 512).unwrap(), 0.0, 0.3, 0.0, 0.2, 0.0)
            .unwrap();
        let spec = ObjectiveSpec::penalty(1.0, Penalty::Exp { c: 1.0 }).unwrap();
        let sol = solve_closed_form(&c, &spec, &SolverOptions::default()).unwrap();
        for t in [0.003f64, 0.5071, 0.9999] {
            let exact = (2.25 * (1.0 - t)).ln_1p();
            assert!((sol.y_at(t).unwrap() - exact).abs() < 1e-9);
            let beta = 7.5 / (1.0 + 2.25 * (1.0 - t)).sqrt();
            assert!((sol.beta_at(t).unwrap() - beta).abs() < 1e-8);
        }
    }

    #[test]
    fn solver_kind_parses() {
        assert_eq!("closed_form".parse::<SolverKind>().unwrap(), SolverKind::ClosedForm);
        assert!("newton".parse::<SolverKind>().is_err());
    }
}
