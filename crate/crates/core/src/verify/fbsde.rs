use serde::Serialize;

use crate::equilibrium::EquilibriumSolution;
use crate::error::Result;

/// Diagonal values `Y^t_t`, `calY^t_t`, `Z^t_t` of the adjoint processes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FbsdeDiagonalReport {
    pub t: f64,
    pub y_tt: f64,
    pub cal_y_tt: f64,
    pub z_tt: f64,
    /// `|B_t Y^t_t + D_t calY^t_t|`, zero at an open-loop equilibrium.
    pub linear_residual: f64,
    pub z_negative: bool,
}

pub fn fbsde_diagonal_check(sol: &EquilibriumSolution, t: f64) -> Result<FbsdeDiagonalReport> {
    let coeffs = sol.coeffs();
    let beta = sol.beta_at(t)?;
    let two_k = 2.0 * sol.curvature_at(t)?;
    let e = coeffs.log_discount(t).exp();
    let d = coeffs.d(t);
    let y_tt = sol.objective().kappa * e;
    let cal_y_tt = e * d * beta * two_k;
    let z_tt = e * e * two_k;
    Ok(FbsdeDiagonalReport {
        t,
        y_tt,
        cal_y_tt,
        z_tt,
        linear_residual: (coeffs.b(t) * y_tt + d * cal_y_tt).abs(),
        z_negative: z_tt < 0.0,
    })
}
