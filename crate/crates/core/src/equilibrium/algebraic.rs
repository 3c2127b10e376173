use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::moments::double_factorial_f64;
use crate::objectives::{MomentWeights, ObjectiveSpec, Variant};

use super::closed_form::variant_name;
use super::{
    check_model, is_trivial, trivial_solution, EquilibriumSolution, SolverKind, SolverOptions,
};

/// Per-node root of `kappa^2 theta_t = P(y)` for moment combinations, with
/// `P(y) = int_0^y q(z)^2 dz` and `q(y) = sum_j kappa_{2j} y^{j-1} / (2j-2)!!`.
///
/// Only the even-order weights are read, so the output does not depend on
/// `kappa_3, kappa_5, ...` at all.
pub fn solve_algebraic(
    coeffs: &CoefficientSet,
    spec: &ObjectiveSpec,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    let weights = match &spec.variant {
        Variant::MomentCombo(w) => w,
        other => {
            return Err(Error::UnsupportedVariant(format!(
                "algebraic solver needs moment_combo, got {}",
                variant_name(other)
            )))
        }
    };
    check_model(coeffs, spec)?;
    if is_trivial(coeffs, spec) {
        return trivial_solution(coeffs, spec, SolverKind::Algebraic);
    }
    let q = q_coefficients(weights);
    let p = p_coefficients(&q);
    let kappa = spec.kappa;
    let grid = coeffs.grid();
    let mut y = Vec::with_capacity(grid.len());
    let mut beta = Vec::with_capacity(grid.len());
    for (k, t) in grid.nodes().enumerate() {
        let target = kappa * kappa * coeffs.theta_nodes()[k];
        let yk = if target == 0.0 {
            0.0
        } else {
            bracket_and_polish(|v| horner(&p, v), |v| horner(&q, v).powi(2), target, opts)?
        };
        y.push(yk);
        beta.push(kappa * coeffs.b_over_d_sq(t) / horner(&q, yk));
    }
    EquilibriumSolution::assemble(coeffs, spec, y, beta, SolverKind::Algebraic, false)
}

/// Coefficients of `q` in increasing powers of `y`.
pub(crate) fn q_coefficients(w: &MomentWeights) -> Vec<f64> {
    (1..=w.order() / 2).map(|j| w.get(2 * j) / double_factorial_f64(2 * j as u32 - 2)).collect()
}

/// Coefficients of `P(y) = int_0^y q^2`.
fn p_coefficients(q: &[f64]) -> Vec<f64> {
    let mut sq = vec![0.0; 2 * q.len() - 1];
    for (i, a) in q.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            sq[i + j] += a * b;
        }
    }
    let mut p = vec![0.0; sq.len() + 1];
    for (m, c) in sq.iter().enumerate() {
        p[m + 1] = c / (m + 1) as f64;
    }
    p
}

fn horner(coeffs: &[f64], y: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
}

/// Root of an increasing function `g` with `g(0) = 0`: doubling bracket,
/// bisection, then Newton steps kept inside the bracket.
pub(crate) fn bracket_and_polish(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    target: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while g(hi) < target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > opts.max_doublings || !hi.is_finite() {
            return Err(Error::BracketFailure { target });
        }
    }
    for _ in 0..opts.bisection_steps {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..opts.newton_steps {
        let slope = dg(y);
        if !(slope > 0.0) {
            break;
        }
        let next = y - (g(y) - target) / slope;
        if !(next >= lo && next <= hi) {
            break;
        }
        y = next;
    }
    Ok(y)
}
