//! Gaussian moment calculus.
//!
//! `alpha(j, y)` is the `j`-th central moment of `N(0, y)`. Moment vectors
//! store the mean in slot 1 and central moments of order `2..=n`; raw and
//! central moments convert through the binomial expansion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// `k!! = k (k-2) (k-4) ...`, with `0!! = (-1)!! = 1`. Exact up to `33!!`.
pub fn double_factorial(k: u32) -> Result<u64> {
    if k > 33 {
        return Err(Error::Overflow(k));
    }
    Ok((1..=k).rev().step_by(2).map(u64::from).product())
}

/// Floating-point double factorial, valid for any `k`.
pub fn double_factorial_f64(k: u32) -> f64 {
    (1..=k).rev().step_by(2).map(f64::from).product()
}

pub(crate) fn factorial_f64(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central moment of order `j` of `N(0, y)`.
pub fn alpha(j: u32, y: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::Domain { what: "y", value: y, lo: 0.0, hi: f64::INFINITY });
    }
    Ok(alpha_unchecked(j, y))
}

pub(crate) fn alpha_unchecked(j: u32, y: f64) -> f64 {
    if j % 2 == 1 {
        0.0
    } else if j == 0 {
        1.0
    } else {
        double_factorial_f64(j - 1) * y.powi((j / 2) as i32)
    }
}

/// Mean plus central moments of orders `2..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub mean: f64,
    /// `central[i]` is the central moment of order `i + 2`.
    pub central: Vec<f64>,
    /// Set when the vector holds the exact moments of `N(mean, y)`.
    pub gaussian: Option<f64>,
}

impl MomentVector {
    pub fn new(mean: f64, central: Vec<f64>) -> Result<Self> {
        if central.is_empty() {
            return Err(Error::IncompatibleOrder { needed: 2, got: 1 });
        }
        if central[0] < 0.0 {
            return Err(Error::Domain {
                what: "variance",
                value: central[0],
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(Self { mean, central, gaussian: None })
    }

    /// Moments of `N(mean, y)` up to order `n`.
    pub fn gaussian(mean: f64, y: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::IncompatibleOrder { needed: 2, got: n });
        }
        let central = (2..=n as u32).map(|j| alpha(j, y)).collect::<Result<Vec<_>>>()?;
        Ok(Self { mean, central, gaussian: Some(y) })
    }

    /// Highest order stored.
    pub fn order(&self) -> usize {
        self.central.len() + 1
    }

    /// Central moment of order `j`, with the conventions `M_0 = 1`, `M_1 = 0`.
    pub fn central_moment(&self, j: usize) -> f64 {
        match j {
            0 => 1.0,
            1 => 0.0,
            _ => self.central.get(j - 2).copied().unwrap_or(0.0),
        }
    }
}

/// Raw moments `m_1..m_n` of a moment vector.
pub fn central_to_raw(mv: &MomentVector) -> Vec<f64> {
    let n = mv.order();
    (1..=n)
        .map(|i| {
            (0..=i)
                .map(|k| binomial(i, k) * mv.mean.powi((i - k) as i32) * mv.central_moment(k))
                .sum()
        })
        .collect()
}

/// Inverse of [`central_to_raw`]; `raw[i]` is the raw moment of order `i + 1`.
pub fn raw_to_central(raw: &[f64]) -> Result<MomentVector> {
    if raw.len() < 2 {
        return Err(Error::IncompatibleOrder { needed: 2, got: raw.len() });
    }
    let mean = raw[0];
    let raw_moment = |k: usize| if k == 0 { 1.0 } else { raw[k - 1] };
    let central = (2..=raw.len())
        .map(|i| {
            (0..=i).map(|k| binomial(i, k) * (-mean).powi((i - k) as i32) * raw_moment(k)).sum()
        })
        .collect();
    Ok(MomentVector { mean, central, gaussian: None })
}

/// Finite distribution of the frequency `H` in the ambiguous cosine penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    /// `(h_i, p_i)` pairs.
    pub support: Vec<(f64, f64)>,
}

impl DiscreteLaw {
    pub fn new(support: Vec<(f64, f64)>) -> Result<Self> {
        let law = Self { support };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.is_empty() {
            return Err(Error::InvalidObjective("empty support for H".into()));
        }
        if self.support.iter().any(|(h, p)| !h.is_finite() || !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidObjective("H support needs finite h and p >= 0".into()));
        }
        let total: f64 = self.support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidObjective(format!("H probabilities sum to {total}")));
        }
        if self.support.iter().all(|(h, p)| *h == 0.0 || *p == 0.0) {
            return Err(Error::InvalidObjective("H is almost surely zero".into()));
        }
        Ok(())
    }

    /// `E[g(H^2)]`.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.support.iter().map(|(h, p)| p * g(h * h)).sum()
    }

    /// `E[H^{2m}]`.
    pub fn even_moment(&self, m: u32) -> f64 {
        self.expect(|h2| h2.powi(m as i32))
    }
}

/// Weight `w(h) = S_hat(h) / 2 pi` of an even penalty `S(x) = int w(h) cos(hx) dh`,
/// sampled on a symmetric uniform grid, plus a point mass at `h = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierDensity {
    pub h_max: f64,
    /// Samples at `h_i = -h_max + i * 2 h_max / (len - 1)`; odd length.
    pub values: Vec<f64>,
    #[serde(default)]
    pub atom: f64,
}

impl FourierDensity {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_max.is_finite() && self.h_max > 0.0) {
            return Err(Error::InvalidObjective("fourier h_max must be positive".into()));
        }
        if self.values.len() < 3 || self.values.len().is_multiple_of(2) {
            return Err(Error::InvalidObjective(
                "fourier density needs an odd number (>= 3) of samples".into(),
            ));
        }
        if !self.atom.is_finite() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidObjective("non-finite fourier density".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.h_max / (self.values.len() - 1) as f64
    }

    pub fn abscissae(&self) -> impl Iterator<Item = f64> + '_ {
        let dh = self.spacing();
        (0..self.values.len()).map(move |i| -self.h_max + i as f64 * dh)
    }

    /// `int w(h) g(h) dh`, atom included.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let weighted: Vec<f64> =
            self.abscissae().zip(&self.values).map(|(h, w)| w * g(h)).collect();
        self.atom * g(0.0) + quadrature::integrate_uniform(&weighted, self.spacing())
    }

    /// `int w(h) h^{2m} dh`.
    pub fn even_moment(&self, m: u32) -> f64 {
        self.integrate(|h| h.powi(2 * m as i32))
    }

    /// True when the sampled weight takes negative values anywhere.
    pub fn is_signed(&self) -> bool {
        self.values.iter().any(|v| *v < 0.0)
    }

    /// The weight must have decayed at the window edges, otherwise the
    /// truncated integrals are meaningless.
    pub fn check_window(&self) -> Result<()> {
        let edge = self.values[0].abs().max(self.values[self.values.len() - 1].abs());
        let scale = self.integrate(|h| 1.0 + h * h).abs().max(self.atom.abs()).max(1e-300);
        let edge_mass = edge * (1.0 + self.h_max * self.h_max);
        if edge_mass > 1e-6 * scale {
            return Err(Error::Quadrature(format!(
                "fourier density not negligible at |h| = {}: edge mass {edge_mass:e}",
                self.h_max
            )));
        }
        Ok(())
    }
}

/// Penalty function `S` applied to the deviation `X_T - E_t[X_T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// `S(x) = (e^{-cx} - 1 + cx) / c`.
    Exp { c: f64 },
    /// `S(x) = (cosh(cx) - 1) / c`.
    Cosh { c: f64 },
    /// `S(x) = (1 - cos(cx)) / c`.
    Cos { c: f64 },
    /// `S(x) = 1 - E[cos(H x)]`.
    AmbiguousCos(DiscreteLaw),
    /// `S(x) = int w(h) cos(hx) dh`.
    Fourier(FourierDensity),
}

impl Penalty {
    pub fn validate(&self) -> Result<()> {
        match self {
            Penalty::Exp { c } | Penalty::Cosh { c } | Penalty::Cos { c } => {
                if c.is_finite() && *c > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidObjective(format!(
                        "penalty parameter c must be > 0, got {c}"
                    )))
                }
            }
            Penalty::AmbiguousCos(law) => law.validate(),
            Penalty::Fourier(density) => {
                density.validate()?;
                density.check_window()
            }
        }
    }
}

/// `E[S(Z)]` for `Z ~ N(0, variance)`.
pub fn gaussian_penalty_expectation(penalty: &Penalty, variance: f64) -> Result<f64> {
    if !(variance >= 0.0) {
        return Err(Error::Domain {
            what: "variance",
            value: variance,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let v = variance;
    Ok(match penalty {
        Penalty::Exp { c } | Penalty::Cosh { c } => (0.5 * c * c * v).exp_m1() / c,
        Penalty::Cos { c } => -(-0.5 * c * c * v).exp_m1() / c,
        Penalty::AmbiguousCos(law) => law.expect(|h2| -(-0.5 * h2 * v).exp_m1()),
        Penalty::Fourier(density) => {
            density.check_window()?;
            density.integrate(|h| (-0.5 * h * h * v).exp())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial(0).unwrap(), 1);
        assert_eq!(double_factorial(1).unwrap(), 1);
        assert_eq!(double_factorial(5).unwrap(), 15);
        assert_eq!(double_factorial(7).unwrap(), 105);
        assert_eq!(double_factorial(33).unwrap(), 6_332_659_870_762_850_625);
        assert_eq!(double_factorial(34), Err(Error::Overflow(34)));
        assert_eq!(double_factorial_f64(34), 2f64.powi(17) * factorial_f64(17));
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha(3, 7.2).unwrap(), 0.0);
        assert_eq!(alpha(1, 7.2).unwrap(), 0.0);
        assert_eq!(alpha(0, 7.2).unwrap(), 1.0);
        assert_eq!(alpha(2, 0.5).unwrap(), 0.5);
        assert_eq!(alpha(4, 0.5).unwrap(), 0.75);
        assert_eq!(alpha(6, 2.0).unwrap(), 120.0);
        assert!(matches!(alpha(2, -1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn raw_central_examples() {
        let mv = MomentVector::new(0.0, vec![0.7, 0.0]).unwrap();
        assert_eq!(central_to_raw(&mv)[1], 0.7);
        let mv = MomentVector::new(1.0, vec![1.0]).unwrap();
        assert_eq!(central_to_raw(&mv), vec![1.0, 2.0]);
        let mv = MomentVector::gaussian(0.0, 1.0, 4).unwrap();
        assert_eq!(central_to_raw(&mv), vec![0.0, 1.0, 0.0, 3.0]);
        let back = raw_to_central(&[0.0, 1.0, 0.0, 3.0]).unwrap();
        assert_eq!(back.central, vec![1.0, 0.0, 3.0]);
        let back = raw_to_central(&[1.0, 2.0]).unwrap();
        assert_eq!((back.mean, back.central[0]), (1.0, 1.0));
        assert!(raw_to_central(&[1.0]).is_err());
    }

    #[test]
    fn penalty_expectations() {
        let exp = Penalty::Exp { c: 1.0 };
        assert_eq!(gaussian_penalty_expectation(&exp, 0.0).unwrap(), 0.0);
        let v = 3.25f64.ln();
        let got = gaussian_penalty_expectation(&exp, v).unwrap();
        assert!((got - (3.25f64.sqrt() - 1.0)).abs() < 1e-14);
        assert!((got - 0.80278).abs() < 1e-5);
        let cos = Penalty::Cos { c: 1.0 };
        let got = gaussian_penalty_expectation(&cos, 0.2877).unwrap();
        assert!((got - (1.0 - (-0.14385f64).exp())).abs() < 1e-14);
        assert!((got - 0.13399).abs() < 1e-5);
        assert!(gaussian_penalty_expectation(&cos, -1.0).is_err());
    }

    #[test]
    fn ambiguous_with_point_mass_matches_cos() {
        let amb = Penalty::AmbiguousCos(DiscreteLaw::new(vec![(1.0, 1.0)]).unwrap());
        let cos = Penalty::Cos { c: 1.0 };
        for v in [0.0, 0.3, 2.0] {
            let a = gaussian_penalty_expectation(&amb, v).unwrap();
            let b = gaussian_penalty_expectation(&cos, v).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn discrete_law_validation() {
        assert!(DiscreteLaw::new(vec![]).is_err());
        assert!(DiscreteLaw::new(vec![(1.0, 0.5)]).is_err());
        assert!(DiscreteLaw::new(vec![(1.0, -0.5), (2.0, 1.5)]).is_err());
        assert!(DiscreteLaw::new(vec![(0.0, 1.0)]).is_err());
    }

    #[test]
    fn fourier_window_check() {
        let wide = FourierDensity { h_max: 1.0, values: vec![1.0; 5], atom: 0.0 };
        assert!(matches!(wide.check_window(), Err(Error::Quadrature(_))));
        assert!(gaussian_penalty_expectation(&Penalty::Fourier(wide), 1.0).is_err());
    }
}
