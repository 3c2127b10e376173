use serde::Serialize;

use crate::equilibrium::EquilibriumSolution;
use crate::error::{Error, Result};
use crate::moments::{alpha_unchecked, binomial};

use super::{terminal_gaussian, DeterministicControl};

/// Number of time steps per horizon in the finite-difference stencil.
pub const PDE_TIME_DIVISIONS: f64 = 4096.0;
/// Relative space step, `dx = PDE_SPACE_STEP * (1 + |x|)`.
pub const PDE_SPACE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeResidualRow {
    pub order: usize,
    pub max_abs_residual: f64,
    pub max_abs_moment: f64,
    /// `max |residual| / max |m_j|`.
    pub scaled_residual: f64,
    /// `max |m_j(T, x) - x^j|`.
    pub terminal_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeResidualTable {
    pub t_samples: Vec<f64>,
    pub x_samples: Vec<f64>,
    pub rows: Vec<PdeResidualRow>,
}

impl PdeResidualTable {
    pub fn max_scaled(&self) -> f64 {
        self.rows.iter().map(|r| r.scaled_residual).fold(0.0, f64::max)
    }
}

/// Raw moments `m_j(t, x) = E[X_T^j]` under the equilibrium control, from the
/// Gaussian terminal law; checked against `d/dt m + L_u m = 0` by central
/// differences.
pub fn pde_residual_check(
    sol: &EquilibriumSolution,
    max_order: usize,
    t_samples: &[f64],
    x_samples: &[f64],
) -> Result<PdeResidualTable> {
    let coeffs = sol.coeffs();
    let horizon = coeffs.horizon();
    let dt = horizon / PDE_TIME_DIVISIONS;
    if max_order == 0 {
        return Err(Error::SampleDomain("max_order must be at least 1".into()));
    }
    for &t in t_samples {
        if !(t >= 2.0 * dt && t <= horizon - 2.0 * dt) {
            return Err(Error::SampleDomain(format!(
                "t = {t} outside [{}, {}] needed by the time stencil",
                2.0 * dt,
                horizon - 2.0 * dt
            )));
        }
    }
    if x_samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::SampleDomain("non-finite x sample".into()));
    }
    let u = DeterministicControl::equilibrium(sol);

    // (e^{a(t)}, shift(t), variance(t)) so that mean = x e^{a} + shift.
    let law = |t: f64| -> Result<(f64, f64, f64)> {
        let (shift, var) = terminal_gaussian(coeffs, t, 0.0, &u)?;
        Ok((coeffs.log_discount(t).exp(), shift, var))
    };
    let moment = |j: usize, l: (f64, f64, f64), x: f64| {
        let mean = x * l.0 + l.1;
        (0..=j)
            .map(|k| binomial(j, k) * mean.powi((j - k) as i32) * alpha_unchecked(k as u32, l.2))
            .sum::<f64>()
    };

    let mut rows: Vec<PdeResidualRow> = (1..=max_order)
        .map(|order| PdeResidualRow {
            order,
            max_abs_residual: 0.0,
            max_abs_moment: 0.0,
            scaled_residual: 0.0,
            terminal_error: 0.0,
        })
        .collect();

    for &t in t_samples {
        let stencil_t = [law(t - 2.0 * dt)?, law(t - dt)?, law(t + dt)?, law(t + 2.0 * dt)?];
        let here = law(t)?;
        let ut = sol.control(t, 0.0)?;
        let drift_free = coeffs.b(t) * ut + coeffs.c(t);
        let vol = coeffs.d(t) * ut + coeffs.f(t);
        for &x in x_samples {
            let dx = PDE_SPACE_STEP * (1.0 + x.abs());
            for row in rows.iter_mut() {
                let j = row.order;
                let m = |l, x| moment(j, l, x);
                let d_t = (m(stencil_t[0], x) - 8.0 * m(stencil_t[1], x)
                    + 8.0 * m(stencil_t[2], x)
                    - m(stencil_t[3], x))
                    / (12.0 * dt);
                let xs = [x - 2.0 * dx, x - dx, x, x + dx, x + 2.0 * dx];
                let v = xs.map(|xi| m(here, xi));
                let d_x = (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * dx);
                let d_xx =
                    (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * dx * dx);
                let residual = d_t + (coeffs.a(t) * x + drift_free) * d_x + 0.5 * vol * vol * d_xx;
                row.max_abs_residual = row.max_abs_residual.max(residual.abs());
                row.max_abs_moment = row.max_abs_moment.max(v[2].abs());
            }
        }
    }

    let terminal = law(horizon)?;
    for row in rows.iter_mut() {
        for &x in x_samples {
            let err = (moment(row.order, terminal, x) - x.powi(row.order as i32)).abs();
            row.terminal_error = row.terminal_error.max(err);
        }
        row.scaled_residual = if row.max_abs_moment > 0.0 {
            row.max_abs_residual / row.max_abs_moment
        } else {
            row.max_abs_residual
        };
    }

    Ok(PdeResidualTable { t_samples: t_samples.to_vec(), x_samples: x_samples.to_vec(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{CoefficientSet, TimeGrid};
    use crate::equilibrium::{solve, SolverKind, SolverOptions};
    use crate::objectives::ObjectiveSpec;

    #[test]
    fn mv_residuals_are_small() {
        let c = CoefficientSet::constant(TimeGrid::new(1.0, 512).unwrap(), 0.0, 0.3, 0.0, 0.2, 0.0)
            .unwrap();
        let spec = ObjectiveSpec::moment_combo(1.0, vec![2.0]).unwrap();
        let sol = solve(&c, &spec, SolverKind::Auto, &SolverOptions::default()).unwrap();
        let table = pde_residual_check(&sol, 2, &[0.1, 0.5], &[-1.0, 0.0, 2.0]).unwrap();
        assert!(table.rows[0].scaled_residual < 1e-6, "{table:?}");
        assert!(table.rows[1].scaled_residual < 1e-5, "{table:?}");
        assert!(table.rows.iter().all(|r| r.terminal_error == 0.0));
        assert!(pde_residual_check(&sol, 2, &[0.0], &[1.0]).is_err());
    }
}
