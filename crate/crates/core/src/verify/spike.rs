use serde::Serialize;

use crate::equilibrium::EquilibriumSolution;
use crate::error::{Error, Result};

use super::{moment_integrals, DeterministicControl, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpikeTestReport {
    pub t: f64,
    pub zeta: f64,
    pub epsilons: Vec<f64>,
    pub delta_j_over_eps: Vec<f64>,
    pub extrapolated_limit: f64,
    /// `e^{2 int_t^T A} D_t^2 zeta^2 K(t, y_t)`.
    pub predicted_limit: f64,
    pub pass: bool,
}

/// `2^{-4}, ..., 2^{-10}` times `T - t`.
pub fn default_epsilons(horizon: f64, t: f64) -> Vec<f64> {
    (4..=10).map(|p| (horizon - t) * 0.5f64.powi(p)).collect()
}

/// Adds `zeta` to the equilibrium control on `[t, t + eps)` for each `eps`
/// and extrapolates `(J(perturbed) - J(equilibrium)) / eps` to `eps -> 0`.
pub fn spike_test(
    sol: &EquilibriumSolution,
    t: f64,
    zeta: f64,
    epsilons: &[f64],
    tol: &Tolerances,
) -> Result<SpikeTestReport> {
    let coeffs = sol.coeffs();
    let spec = sol.objective();
    let horizon = coeffs.horizon();
    coeffs.grid().check_time("t", t)?;
    if t >= horizon {
        return Err(Error::EpsilonRange(format!("spike time {t} must be before T = {horizon}")));
    }
    if epsilons.len() < 2 {
        return Err(Error::EpsilonRange("need at least two epsilons".into()));
    }
    if !epsilons.iter().all(|e| *e > 0.0) || epsilons[0] > horizon - t {
        return Err(Error::EpsilonRange(format!("epsilons must lie in (0, {}]", horizon - t)));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::EpsilonRange("epsilons must be strictly decreasing".into()));
    }

    let base = DeterministicControl::equilibrium(sol);
    let bumped = DeterministicControl::equilibrium(sol).with_spike(t, horizon + 1.0, zeta)?;

    // Base-control integrals over every whole cell after t, summed from the
    // back, so each epsilon only integrates its window and one partial cell.
    let grid = coeffs.grid();
    let cells = grid.num_steps();
    let (cell_t, frac_t) = grid.locate(t);
    let first = if frac_t == 0.0 { cell_t } else { cell_t + 1 };
    let mut suffix = vec![(0.0, 0.0); cells + 1];
    for c in (first..cells).rev() {
        let (m, v) = moment_integrals(coeffs, &base, grid.node(c), grid.node(c + 1))?;
        suffix[c] = (suffix[c + 1].0 + m, suffix[c + 1].1 + v);
    }

    let mut ratios = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let end = t + eps;
        let (cell_e, frac_e) = grid.locate(end);
        let next = if frac_e == 0.0 { cell_e } else { cell_e + 1 };
        let (pm, pv) = moment_integrals(coeffs, &base, end, grid.node(next))?;
        let (m_tail, v_tail) = (suffix[next].0 + pm, suffix[next].1 + pv);
        let (m0, v0) = moment_integrals(coeffs, &base, t, end)?;
        let (m1, v1) = moment_integrals(coeffs, &bumped, t, end)?;
        let j0 = spec.kappa * (m_tail + m0) + spec.psi_gaussian(t, v_tail + v0)?;
        let j1 = spec.kappa * (m_tail + m1) + spec.psi_gaussian(t, v_tail + v1)?;
        ratios.push((j1 - j0) / eps);
    }

    let n = epsilons.len();
    let (e1, e2) = (epsilons[n - 2], epsilons[n - 1]);
    let (g1, g2) = (ratios[n - 2], ratios[n - 1]);
    let extrapolated = g2 + (g2 - g1) * e2 / (e1 - e2);

    let log_disc = coeffs.log_discount(t);
    let d = coeffs.d(t);
    let predicted = (2.0 * log_disc).exp() * d * d * zeta * zeta * sol.curvature_at(t)?;
    let pass = (extrapolated - predicted).abs() <= tol.spike_relative * predicted.abs()
        && extrapolated <= tol.spike_nonpositive;

    Ok(SpikeTestReport {
        t,
        zeta,
        epsilons: epsilons.to_vec(),
        delta_j_over_eps: ratios,
        extrapolated_limit: extrapolated,
        predicted_limit: predicted,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{CoefficientSet, TimeGrid};
    use crate::equilibrium::{solve, SolverKind, SolverOptions};
    use crate::moments::Penalty;
    use crate::objectives::ObjectiveSpec;

    fn solved(spec: ObjectiveSpec) -> EquilibriumSolution {
        let c = CoefficientSet::constant(TimeGrid::new(1.0, 512).unwrap(), 0.0, 0.3, 0.0, 0.2, 0.0)
            .unwrap();
        solve(&c, &spec, SolverKind::Auto, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn mv_limit_is_minus_four_hundredths() {
        let sol = solved(ObjectiveSpec::moment_combo(1.0, vec![2.0]).unwrap());
        let tol = Tolerances::default();
        let r = spike_test(&sol, 0.0, 1.0, &default_epsilons(1.0, 0.0), &tol).unwrap();
        assert!((r.predicted_limit + 0.04).abs() < 1e-15);
        assert!((r.extrapolated_limit + 0.04).abs() < 1e-9, "{r:?}");
        assert!(r.pass);
        let r = spike_test(&sol, 0.0, 0.0, &default_epsilons(1.0, 0.0), &tol).unwrap();
        assert!(r.delta_j_over_eps.iter().all(|v| *v == 0.0));
        assert!(r.pass);
    }

    #[test]
    fn exp_penalty_limit() {
        let sol = solved(ObjectiveSpec::penalty(1.0, Penalty::Exp { c: 1.0 }).unwrap());
        let r = spike_test(&sol, 0.0, 1.0, &default_epsilons(1.0, 0.0), &Tolerances::default())
            .unwrap();
        assert!((r.predicted_limit + 0.02 * 3.25f64.sqrt()).abs() < 1e-12);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn rejects_bad_epsilons() {
        let sol = solved(ObjectiveSpec::moment_combo(1.0, vec![2.0]).unwrap());
        let tol = Tolerances::default();
        assert!(spike_test(&sol, 0.5, 1.0, &[0.6, 0.1], &tol).is_err());
        assert!(spike_test(&sol, 0.5, 1.0, &[0.1, 0.2], &tol).is_err());
        assert!(spike_test(&sol, 1.0, 1.0, &[0.1, 0.05], &tol).is_err());
    }
}
