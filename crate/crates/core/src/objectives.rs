//! Objective functions `J = kappa * E_t[X_T] + psi(t, M_2, ..., M_n)`.
//!
//! Only the even-order partial derivatives of `psi` at a Gaussian moment
//! vector matter for the equilibrium; they enter through the curvature sum
//!
//! ```text
//! K(t, y) = sum_{1 <= j <= n/2} j (2j - 1) alpha_{2j-2}(y) psi_{z_{2j}}(t, alpha(y))
//! ```
//!
//! which must be negative. Odd-order weights are accepted but never read by
//! the gradient or the curvature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{
    alpha_unchecked, factorial_f64, gaussian_penalty_expectation, MomentVector, Penalty,
};

/// Number of series terms used for penalty objectives (orders 2..=40).
pub const PENALTY_SERIES_ORDER: usize = 40;

/// Relative finite-difference step for the fallback gradient.
pub const FD_STEP: f64 = 1e-5;

/// Weights `kappa_2, kappa_3, ..., kappa_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentWeights {
    /// `kappas[i]` is `kappa_{i+2}`.
    pub kappas: Vec<f64>,
}

impl MomentWeights {
    pub fn new(kappas: Vec<f64>) -> Self {
        Self { kappas }
    }

    /// Highest moment order `n`.
    pub fn order(&self) -> usize {
        self.kappas.len() + 1
    }

    /// `kappa_j` (zero beyond `n`).
    pub fn get(&self, j: usize) -> f64 {
        if j < 2 {
            0.0
        } else {
            self.kappas.get(j - 2).copied().unwrap_or(0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `psi = sum_j (-1)^{j+1} kappa_j / j! * z_j`.
    MomentCombo(MomentWeights),
    /// Variance plus standardized moments `z_j / |z_2|^{j/2}` for `j >= 3`.
    StandardizedMoments(MomentWeights),
    /// `psi = -E[S(X_T - E_t X_T)]`.
    Penalty(Penalty),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kappa: f64,
    pub variant: Variant,
}

/// Even-order gradient `psi_{z_{2j}}(t, alpha(y))`, `j = 1..`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiGradient {
    pub t: f64,
    pub y: f64,
    /// `values[j - 1] = psi_{z_{2j}}`.
    pub values: Vec<f64>,
}

impl ObjectiveSpec {
    pub fn new(kappa: f64, variant: Variant) -> Result<Self> {
        let spec = Self { kappa, variant };
        spec.validate()?;
        Ok(spec)
    }

    pub fn moment_combo(kappa: f64, kappas: Vec<f64>) -> Result<Self> {
        Self::new(kappa, Variant::MomentCombo(MomentWeights::new(kappas)))
    }

    pub fn standardized(kappa: f64, kappas: Vec<f64>) -> Result<Self> {
        Self::new(kappa, Variant::StandardizedMoments(MomentWeights::new(kappas)))
    }

    pub fn penalty(kappa: f64, penalty: Penalty) -> Result<Self> {
        Self::new(kappa, Variant::Penalty(penalty))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::InvalidObjective(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        match &self.variant {
            Variant::MomentCombo(w) => {
                check_weights(w)?;
                let evens = w.kappas.iter().step_by(2);
                if evens.clone().any(|k| *k < 0.0) {
                    return Err(Error::InvalidObjective("even-order weights must be >= 0".into()));
                }
                if !evens.clone().any(|k| *k > 0.0) {
                    return Err(Error::InvalidObjective(
                        "at least one even-order weight must be > 0".into(),
                    ));
                }
                Ok(())
            }
            Variant::StandardizedMoments(w) => {
                check_weights(w)?;
                if w.get(2) <= 0.0 {
                    return Err(Error::InvalidObjective(
                        "standardized moments need kappa_2 > 0".into(),
                    ));
                }
                Ok(())
            }
            Variant::Penalty(p) => p.validate(),
        }
    }

    /// Highest moment order, `None` for penalty (series) objectives.
    pub fn order(&self) -> Option<usize> {
        match &self.variant {
            Variant::MomentCombo(w) | Variant::StandardizedMoments(w) => Some(w.order()),
            Variant::Penalty(_) => None,
        }
    }

    /// Number of even-order gradient entries, `floor(n / 2)`.
    pub fn gradient_len(&self) -> usize {
        self.order().unwrap_or(PENALTY_SERIES_ORDER) / 2
    }

    /// `psi(t, mv)`.
    pub fn psi(&self, _t: f64, mv: &MomentVector) -> Result<f64> {
        let require = |n: usize| {
            if mv.order() < n {
                Err(Error::IncompatibleOrder { needed: n, got: mv.order() })
            } else {
                Ok(())
            }
        };
        match &self.variant {
            Variant::MomentCombo(w) => {
                require(w.order())?;
                Ok((2..=w.order()).map(|j| combo_coefficient(w, j) * mv.central_moment(j)).sum())
            }
            Variant::StandardizedMoments(w) => {
                require(w.order())?;
                let z2 = mv.central_moment(2);
                let scale = z2.abs();
                let mut total = -0.5 * w.get(2) * z2;
                for j in 3..=w.order() {
                    let kj = w.get(j);
                    if kj == 0.0 {
                        continue;
                    }
                    // A degenerate law has no standardized moments; take them as zero.
                    let ratio = if scale == 0.0 {
                        0.0
                    } else {
                        mv.central_moment(j) / scale.powf(j as f64 / 2.0)
                    };
                    total += combo_coefficient(w, j) * ratio;
                }
                Ok(total)
            }
            Variant::Penalty(p) => match mv.gaussian {
                Some(y) => Ok(-gaussian_penalty_expectation(p, y)?),
                None => {
                    let constant = match p {
                        Penalty::Fourier(d) => -d.even_moment(0),
                        _ => 0.0,
                    };
                    Ok(constant
                        + (2..=mv.order())
                            .map(|j| penalty_coefficient(p, j) * mv.central_moment(j))
                            .sum::<f64>())
                }
            },
        }
    }

    /// `psi` at the Gaussian point `alpha(y)`.
    pub fn psi_gaussian(&self, t: f64, y: f64) -> Result<f64> {
        let n = self.order().unwrap_or(2);
        self.psi(t, &MomentVector::gaussian(0.0, y, n)?)
    }

    /// Even-order partial derivatives of `psi` at `alpha(y)`.
    pub fn psi_grad_even(&self, t: f64, y: f64) -> Result<PsiGradient> {
        if !(y >= 0.0) {
            return Err(Error::Domain { what: "y", value: y, lo: 0.0, hi: f64::INFINITY });
        }
        let terms = self.gradient_len();
        let values = match &self.variant {
            Variant::MomentCombo(w) => (1..=terms).map(|j| combo_coefficient(w, 2 * j)).collect(),
            Variant::Penalty(p @ Penalty::Fourier(_)) => {
                let _ = p;
                self.finite_difference_gradient(t, y, terms)?
            }
            Variant::Penalty(p) => (1..=terms).map(|j| penalty_coefficient(p, 2 * j)).collect(),
            Variant::StandardizedMoments(_) => self.finite_difference_gradient(t, y, terms)?,
        };
        Ok(PsiGradient { t, y, values })
    }

    fn finite_difference_gradient(&self, t: f64, y: f64, terms: usize) -> Result<Vec<f64>> {
        let n = (2 * terms).max(self.order().unwrap_or(0));
        let mut base = MomentVector::gaussian(0.0, y, n)?;
        base.gaussian = None;
        let mut out = Vec::with_capacity(terms);
        for j in 1..=terms {
            let slot = 2 * j - 2;
            let z = base.central[slot];
            let h = if z != 0.0 { FD_STEP * z.abs() } else { FD_STEP };
            let mut probe = base.clone();
            probe.central[slot] = z + h;
            let up = self.psi(t, &probe)?;
            probe.central[slot] = z - h;
            let down = self.psi(t, &probe)?;
            let d = (up - down) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::FiniteDifference(format!(
                    "non-finite derivative in slot {} at y = {y}",
                    2 * j
                )));
            }
            out.push(d);
        }
        Ok(out)
    }

    /// Curvature sum `K(t, y)`; the equilibrium requires `K < 0`.
    pub fn curvature_sum(&self, t: f64, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain { what: "y", value: y, lo: 0.0, hi: f64::INFINITY });
        }
        match &self.variant {
            Variant::MomentCombo(w) => Ok((1..=w.order() / 2)
                .map(|j| {
                    let jf = j as f64;
                    jf * (2.0 * jf - 1.0)
                        * alpha_unchecked(2 * j as u32 - 2, y)
                        * combo_coefficient(w, 2 * j)
                })
                .sum()),
            Variant::Penalty(Penalty::Exp { c }) | Variant::Penalty(Penalty::Cosh { c }) => {
                Ok(-0.5 * c * (0.5 * c * c * y).exp())
            }
            Variant::Penalty(Penalty::Cos { c }) => Ok(-0.5 * c * (-0.5 * c * c * y).exp()),
            Variant::Penalty(Penalty::AmbiguousCos(law)) => {
                Ok(-0.5 * law.expect(|h2| h2 * (-0.5 * h2 * y).exp()))
            }
            Variant::Penalty(Penalty::Fourier(d)) => {
                Ok(0.5 * d.integrate(|h| h * h * (-0.5 * h * h * y).exp()))
            }
            Variant::StandardizedMoments(_) => {
                let grad = self.psi_grad_even(t, y)?;
                Ok(grad
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, g)| {
                        let j = (i + 1) as f64;
                        let a = alpha_unchecked(2 * i as u32, y);
                        // alpha = 0 kills the term even where psi_{z_{2j}} blows up.
                        if a == 0.0 {
                            0.0
                        } else {
                            j * (2.0 * j - 1.0) * a * g
                        }
                    })
                    .sum())
            }
        }
    }
}

fn check_weights(w: &MomentWeights) -> Result<()> {
    if w.kappas.is_empty() {
        return Err(Error::InvalidObjective("need at least kappa_2".into()));
    }
    if w.kappas.iter().any(|k| !k.is_finite()) {
        return Err(Error::InvalidObjective("non-finite moment weight".into()));
    }
    Ok(())
}

/// `(-1)^{j+1} kappa_j / j!`.
fn combo_coefficient(w: &MomentWeights, j: usize) -> f64 {
    let sign = if j.is_multiple_of(2) { -1.0 } else { 1.0 };
    sign * w.get(j) / factorial_f64(j as u32)
}

/// Coefficient of `z_j` in the series expansion of `psi = -E[S]`, `j >= 2`.
pub fn penalty_coefficient(p: &Penalty, j: usize) -> f64 {
    let fact = factorial_f64(j as u32);
    let even = j.is_multiple_of(2);
    let m = (j / 2) as i32;
    let alt = if m % 2 == 0 { 1.0 } else { -1.0 };
    match p {
        Penalty::Exp { c } => (-c).powi(j as i32 - 1) / fact,
        Penalty::Cosh { c } if even => -c.powi(j as i32 - 1) / fact,
        Penalty::Cos { c } if even => alt * c.powi(j as i32 - 1) / fact,
        Penalty::AmbiguousCos(law) if even => alt * law.even_moment(m as u32) / fact,
        Penalty::Fourier(d) if even => -alt * d.even_moment(m as u32) / fact,
        _ => 0.0,
    }
}
