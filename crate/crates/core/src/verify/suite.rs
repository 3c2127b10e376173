use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::equilibrium::EquilibriumSolution;
use crate::error::Result;
use crate::moments::Penalty;
use crate::objectives::Variant;

use super::pde::PDE_TIME_DIVISIONS;
use super::{
    default_epsilons, evaluate_deterministic, fbsde_diagonal_check, monte_carlo,
    pde_residual_check, spike_test, DeterministicControl, McOptions, Tolerances,
};

/// Which checks to run and with what parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    pub integral_equation: bool,
    pub evf: bool,
    pub spike: bool,
    pub fbsde: bool,
    pub pde: bool,
    pub mc: bool,
    /// Spike times as fractions of the horizon.
    pub spike_times: Vec<f64>,
    pub spike_zetas: Vec<f64>,
    pub evf_times: Vec<f64>,
    pub evf_states: Vec<f64>,
    pub pde_max_order: usize,
    pub pde_states: Vec<f64>,
    pub monte_carlo: McOptions,
    pub tolerances: Tolerances,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            integral_equation: true,
            evf: true,
            spike: true,
            fbsde: true,
            pde: true,
            mc: false,
            spike_times: vec![0.0, 0.5, 0.9],
            spike_zetas: vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0],
            evf_times: vec![0.0, 0.5],
            evf_states: vec![-1.0, 0.0, 2.0],
            pde_max_order: 4,
            pde_states: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            monte_carlo: McOptions::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// Runs every enabled check against a solved equilibrium.
pub fn run_suite(sol: &EquilibriumSolution, opts: &SuiteOptions) -> Result<VerificationReport> {
    let tol = &opts.tolerances;
    let coeffs = sol.coeffs();
    let horizon = coeffs.horizon();
    let mut checks = Vec::new();
    let mut push = |name: &str, pass: bool, detail: serde_json::Value| {
        checks.push(CheckResult { name: name.to_string(), pass, detail });
    };

    let concavity = sol.concavity_check();
    push("concavity", concavity.max_curvature < 0.0, json!(concavity));

    // Informational: a signed weight is allowed but is no longer a mixture of cosines.
    if let Variant::Penalty(Penalty::Fourier(density)) = &sol.objective().variant {
        push("fourier_density", true, json!({ "signed": density.is_signed() }));
    }

    if opts.integral_equation {
        let ie = max_of(sol.integral_equation_residuals()?);
        push(
            "integral_equation",
            ie <= tol.integral_equation,
            json!({ "max_scaled_residual": ie, "tolerance": tol.integral_equation }),
        );
        let sc = max_of(sol.self_consistency_residuals()?);
        push(
            "self_consistency",
            sc <= tol.self_consistency,
            json!({ "max_abs_residual": sc, "tolerance": tol.self_consistency }),
        );
    }

    if opts.evf {
        let u = DeterministicControl::equilibrium(sol);
        let mut worst: f64 = 0.0;
        let mut rows = Vec::new();
        for &frac in &opts.evf_times {
            let t = frac * horizon;
            for &x in &opts.evf_states {
                let j = evaluate_deterministic(coeffs, sol.objective(), t, x, &u)?;
                let v = sol.value(t, x)?;
                let scaled = (j - v).abs() / (1.0 + v.abs());
                worst = worst.max(scaled);
                rows.push(json!({ "t": t, "x": x, "evaluated": j, "value": v, "scaled": scaled }));
            }
        }
        push(
            "evf",
            worst <= tol.evf,
            json!({ "max_scaled_gap": worst, "tolerance": tol.evf, "samples": rows }),
        );
    }

    if opts.spike {
        let mut reports = Vec::new();
        let mut pass = true;
        for &frac in &opts.spike_times {
            let t = frac * horizon;
            let eps = default_epsilons(horizon, t);
            for &zeta in &opts.spike_zetas {
                let r = spike_test(sol, t, zeta, &eps, tol)?;
                pass &= r.pass;
                reports.push(r);
            }
        }
        push("spike", pass, json!(reports));
    }

    if opts.fbsde {
        let mut worst: f64 = 0.0;
        let mut z_max = f64::NEG_INFINITY;
        for t in coeffs.grid().nodes().take(coeffs.grid().num_steps()) {
            let r = fbsde_diagonal_check(sol, t)?;
            worst = worst.max(r.linear_residual);
            z_max = z_max.max(r.z_tt);
        }
        let bound = tol.fbsde * (1.0 + sol.objective().kappa);
        push(
            "fbsde",
            worst <= bound && z_max < 0.0,
            json!({ "max_linear_residual": worst, "bound": bound, "max_z": z_max }),
        );
    }

    if opts.pde {
        let dt = horizon / PDE_TIME_DIVISIONS;
        let (lo, hi) = (2.0 * dt, horizon - 2.0 * dt);
        let ts: Vec<f64> = (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect();
        let table = pde_residual_check(sol, opts.pde_max_order, &ts, &opts.pde_states)?;
        let worst = table.max_scaled();
        push("pde", worst <= tol.pde, json!({ "tolerance": tol.pde, "table": table }));
    }

    if opts.mc {
        let report = monte_carlo(sol, &opts.monte_carlo, tol.mc_sigmas)?;
        push("monte_carlo", report.pass, json!(report));
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport { pass, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{CoefficientSet, TimeGrid};
    use crate::equilibrium::{solve, SolverKind, SolverOptions};
    use crate::moments::FourierDensity;
    use crate::objectives::ObjectiveSpec;

    #[test]
    fn signed_fourier_density_is_reported() {
        let n = 241;
        let h_max = 12.0;
        let values = (0..n)
            .map(|i| {
                let h = -h_max + i as f64 * 2.0 * h_max / (n - 1) as f64;
                -(-0.5 * h * h).exp() / (2.0 * std::f64::consts::PI).sqrt()
            })
            .collect();
        let density = FourierDensity { h_max, values, atom: 1.0 };
        let spec = ObjectiveSpec::penalty(1.0, Penalty::Fourier(density)).unwrap();
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let coeffs = CoefficientSet::constant(grid, 0.0, 0.1, 0.0, 0.2, 0.0).unwrap();
        let sol = solve(&coeffs, &spec, SolverKind::Auto, &SolverOptions::default()).unwrap();
        let opts = SuiteOptions {
            spike: false,
            pde: false,
            fbsde: false,
            evf: false,
            ..Default::default()
        };
        let report = run_suite(&sol, &opts).unwrap();
        let flag = report.checks.iter().find(|c| c.name == "fourier_density").unwrap();
        assert_eq!(flag.detail["signed"], true);
    }
}
