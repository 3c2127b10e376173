use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::moments::{DiscreteLaw, Penalty};
use crate::objectives::{MomentWeights, ObjectiveSpec, Variant};

use super::{
    check_model, is_trivial, trivial_solution, EquilibriumSolution, SolverKind, SolverOptions,
};

/// True for variance, variance-plus-kurtosis and the cosine/exponential penalties.
pub fn closed_form_available(spec: &ObjectiveSpec) -> bool {
    match &spec.variant {
        Variant::MomentCombo(w) => mvsk_only(w),
        Variant::StandardizedMoments(_) => false,
        Variant::Penalty(p) => !matches!(p, Penalty::Fourier(_)),
    }
}

fn mvsk_only(w: &MomentWeights) -> bool {
    (6..=w.order()).step_by(2).all(|j| w.get(j) == 0.0)
}

pub fn solve_closed_form(
    coeffs: &CoefficientSet,
    spec: &ObjectiveSpec,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    if !closed_form_available(spec) {
        return Err(Error::UnsupportedVariant(format!(
            "no closed form for {}",
            variant_name(&spec.variant)
        )));
    }
    check_model(coeffs, spec)?;
    if is_trivial(coeffs, spec) {
        return trivial_solution(coeffs, spec, SolverKind::ClosedForm);
    }
    let kappa = spec.kappa;
    let k2 = kappa * kappa;
    let grid = coeffs.grid();
    let mut y = Vec::with_capacity(grid.len());
    let mut beta = Vec::with_capacity(grid.len());
    for (k, t) in grid.nodes().enumerate() {
        let s = k2 * coeffs.theta_nodes()[k];
        let lead = kappa * coeffs.b_over_d_sq(t);
        let (yk, denom) = match &spec.variant {
            Variant::MomentCombo(w) => {
                let (a2, a4) = (w.get(2), w.get(4));
                // (a2 + a4 y / 2)^3 = a2^3 + 3/2 a4 s, written without cancellation.
                let r = (a2 * a2 * a2 + 1.5 * a4 * s).cbrt();
                let yk = if s == 0.0 { 0.0 } else { 3.0 * s / (r * r + r * a2 + a2 * a2) };
                (yk, a2 + 0.5 * a4 * yk)
            }
            Variant::Penalty(Penalty::Exp { c }) | Variant::Penalty(Penalty::Cosh { c }) => {
                (s.ln_1p() / (c * c), c * (1.0 + s).sqrt())
            }
            Variant::Penalty(Penalty::Cos { c }) => (-(-s).ln_1p() / (c * c), c * (1.0 - s).sqrt()),
            Variant::Penalty(Penalty::AmbiguousCos(law)) => {
                let yk = ambiguous_root(law, s, opts)?;
                (yk, law.expect(|h2| h2 * (-0.5 * h2 * yk).exp()))
            }
            _ => unreachable!("filtered by closed_form_available"),
        };
        y.push(yk);
        beta.push(lead / denom);
    }
    EquilibriumSolution::assemble(coeffs, spec, y, beta, SolverKind::ClosedForm, false)
}

/// Root of `G(y) = int_0^y (E[H^2 e^{-H^2 z/2}])^2 dz = target`.
fn ambiguous_root(law: &DiscreteLaw, target: f64, opts: &SolverOptions) -> Result<f64> {
    if target == 0.0 {
        return Ok(0.0);
    }
    let g = |y: f64| {
        let mut total = 0.0;
        for &(hi, pi) in &law.support {
            for &(hk, pk) in &law.support {
                let (a, b) = (hi * hi, hk * hk);
                if a + b > 0.0 {
                    total += pi * pk * a * b * 2.0 * -(-0.5 * (a + b) * y).exp_m1() / (a + b);
                }
            }
        }
        total
    };
    let dg = |y: f64| {
        let m = law.expect(|h2| h2 * (-0.5 * h2 * y).exp());
        m * m
    };
    super::algebraic::bracket_and_polish(g, dg, target, opts)
}

pub(crate) fn variant_name(v: &Variant) -> &'static str {
    match v {
        Variant::MomentCombo(_) => "moment_combo",
        Variant::StandardizedMoments(_) => "standardized_moments",
        Variant::Penalty(Penalty::Exp { .. }) => "exp penalty",
        Variant::Penalty(Penalty::Cosh { .. }) => "cosh penalty",
        Variant::Penalty(Penalty::Cos { .. }) => "cos penalty",
        Variant::Penalty(Penalty::AmbiguousCos(_)) => "ambiguous cos penalty",
        Variant::Penalty(Penalty::Fourier(_)) => "fourier penalty",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::TimeGrid;

    fn base() -> CoefficientSet {
        CoefficientSet::constant(TimeGrid::new(1.0, 512).unwrap(), 0.0, 0.3, 0.0, 0.2, 0.0).unwrap()
    }

    #[test]
    fn mvsk_example() {
        let spec = ObjectiveSpec::moment_combo(1.0, vec![1.0, 0.0, 1.0]).unwrap();
        let sol = solve_closed_form(&base(), &spec, &SolverOptions::default()).unwrap();
        let r = 4.375f64.cbrt();
        assert!((sol.y()[0] - 2.0 * (r - 1.0)).abs() < 1e-13);
        assert!((sol.control(0.0, 3.0).unwrap() - 7.5 / r).abs() < 1e-12);
        assert!((sol.control(0.0, 3.0).unwrap() - 4.5857).abs() < 1e-4);
        assert!((sol.y()[0] - 1.2710).abs() < 1e-4);
    }

    #[test]
    fn higher_even_weights_have_no_closed_form() {
        let spec = ObjectiveSpec::moment_combo(1.0, vec![1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            solve_closed_form(&base(), &spec, &SolverOptions::default()),
            Err(Error::UnsupportedVariant(_))
        ));
    }

    #[test]
    fn single_point_ambiguity_is_the_cos_penalty() {
        let c = CoefficientSet::constant(TimeGrid::new(1.0, 128).unwrap(), 0.0, 0.1, 0.0, 0.2, 0.0)
            .unwrap();
        let opts = SolverOptions::default();
        let amb = ObjectiveSpec::penalty(
            1.0,
            Penalty::AmbiguousCos(DiscreteLaw::new(vec![(1.3, 1.0)]).unwrap()),
        )
        .unwrap();
        // S = 1 - cos(hx) is h times the cos penalty with c = h; rescaling the
        // objective by 1/h leaves the equilibrium unchanged.
        let cos = ObjectiveSpec::penalty(1.0 / 1.3, Penalty::Cos { c: 1.3 }).unwrap();
        let a = solve_closed_form(&c, &amb, &opts).unwrap();
        let b = solve_closed_form(&c, &cos, &opts).unwrap();
        for k in 0..c.grid().len() {
            assert!((a.y()[k] - b.y()[k]).abs() < 1e-12);
            assert!((a.beta()[k] - b.beta()[k]).abs() < 1e-10 * a.beta()[k].abs());
        }
    }

    #[test]
    fn ambiguous_guard() {
        let law = DiscreteLaw::new(vec![(0.2, 0.5), (0.4, 0.5)]).unwrap();
        let spec = ObjectiveSpec::penalty(1.0, Penalty::AmbiguousCos(law)).unwrap();
        assert!(matches!(
            solve_closed_form(&base(), &spec, &SolverOptions::default()),
            Err(Error::UnboundedVariance { .. })
        ));
    }
}
