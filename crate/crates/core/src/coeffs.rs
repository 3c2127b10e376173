//! Deterministic model coefficients `A, B, C, D, F` on `[0, T]` and the
//! time-integral primitives built from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

pub use crate::quadrature::integrate;

/// Uniform grid `t_k = k * T / num_steps`, `k = 0..=num_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    num_steps: usize,
}

pub const DEFAULT_NUM_STEPS: usize = 512;
pub const DEFAULT_D_MIN: f64 = 1e-10;

impl TimeGrid {
    pub fn new(horizon: f64, num_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if num_steps < 2 {
            return Err(Error::InvalidGrid(format!("num_steps must be >= 2, got {num_steps}")));
        }
        Ok(Self { horizon, num_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    /// Number of nodes, `num_steps + 1`.
    pub fn len(&self) -> usize {
        self.num_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.num_steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.num_steps {
            self.horizon
        } else {
            k as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }

    pub(crate) fn check_time(&self, what: &'static str, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Domain { what, value: t, lo: 0.0, hi: self.horizon });
        }
        Ok(())
    }

    /// Cell index and fractional position of `t`; positions within `1e-12`
    /// of a node snap onto it. `t = T` maps to the last cell with fraction 1.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let pos = (t / self.step()).clamp(0.0, self.num_steps as f64);
        let nearest = pos.round();
        let pos = if (pos - nearest).abs() < 1e-12 * (1.0 + nearest) { nearest } else { pos };
        let cell = (pos.floor() as usize).min(self.num_steps - 1);
        (cell, pos - cell as f64)
    }

    /// Node index if `t` coincides with a node.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let (cell, frac) = self.locate(t);
        if frac == 0.0 {
            Some(cell)
        } else if frac == 1.0 {
            Some(cell + 1)
        } else {
            None
        }
    }
}

/// A scalar coefficient path on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    Constant(f64),
    /// `sum_k c_k t^k`.
    Polynomial(Vec<f64>),
    /// `shift + scale * exp(rate * t)`.
    Exponential {
        scale: f64,
        rate: f64,
        #[serde(default)]
        shift: f64,
    },
    /// Uniform samples over `[0, horizon]`, linearly interpolated.
    Sampled {
        horizon: f64,
        values: Vec<f64>,
    },
}

impl Path {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Path::Constant(c) => *c,
            Path::Polynomial(cs) => cs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Path::Exponential { scale, rate, shift } => shift + scale * (rate * t).exp(),
            Path::Sampled { horizon, values } => {
                let last = values.len() - 1;
                let pos = (t / horizon * last as f64).clamp(0.0, last as f64);
                let i = (pos.floor() as usize).min(last.saturating_sub(1));
                let w = pos - i as f64;
                values[i] * (1.0 - w) + values[(i + 1).min(last)] * w
            }
        }
    }

    /// Exact integral over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Path::Constant(c) => c * (b - a),
            Path::Polynomial(cs) => cs
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let p = k as i32 + 1;
                    c * (b.powi(p) - a.powi(p)) / p as f64
                })
                .sum(),
            Path::Exponential { scale, rate, shift } => {
                let exp_part = if *rate == 0.0 {
                    b - a
                } else {
                    (rate * a).exp() * (rate * (b - a)).exp_m1() / rate
                };
                shift * (b - a) + scale * exp_part
            }
            Path::Sampled { horizon, values } => {
                if b <= a {
                    return -self.integral(b, a);
                }
                let last = values.len() - 1;
                let dh = horizon / last as f64;
                let ia = ((a / dh).floor().max(0.0) as usize).min(last - 1);
                let ib = ((b / dh).ceil().max(1.0) as usize).min(last);
                let mut total = 0.0;
                for i in ia..ib {
                    let lo = a.max(i as f64 * dh);
                    let hi = b.min((i + 1) as f64 * dh);
                    if hi > lo {
                        total += 0.5 * (hi - lo) * (self.eval(lo) + self.eval(hi));
                    }
                }
                total
            }
        }
    }

    fn validate(&self, name: &str, horizon: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCoefficients(format!("{name}: {msg}")));
        match self {
            Path::Constant(c) if !c.is_finite() => bad(format!("non-finite constant {c}")),
            Path::Polynomial(cs) if cs.is_empty() || cs.iter().any(|c| !c.is_finite()) => {
                bad("polynomial needs finite coefficients".into())
            }
            Path::Exponential { scale, rate, shift }
                if !(scale.is_finite() && rate.is_finite() && shift.is_finite()) =>
            {
                bad("non-finite exponential parameters".into())
            }
            Path::Sampled { horizon: h, values } => {
                if values.len() < 2 {
                    return bad("need at least two samples".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("non-finite sample".into());
                }
                if (h - horizon).abs() > 1e-12 * horizon {
                    return bad(format!("samples span [0, {h}] but horizon is {horizon}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// `exp(int_t^T A)` and its square at grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCache {
    log: Vec<f64>,
    factor: Vec<f64>,
    factor_sq: Vec<f64>,
}

impl DiscountCache {
    fn new(a: &Path, grid: &TimeGrid) -> Self {
        let horizon = grid.horizon();
        let log: Vec<f64> = grid.nodes().map(|t| a.integral(t, horizon)).collect();
        let factor = log.iter().map(|l| l.exp()).collect();
        let factor_sq = log.iter().map(|l| (2.0 * l).exp()).collect();
        Self { log, factor, factor_sq }
    }

    /// `int_{t_k}^T A`.
    pub fn log(&self, k: usize) -> f64 {
        self.log[k]
    }

    /// `exp(int_{t_k}^T A)`.
    pub fn factor(&self, k: usize) -> f64 {
        self.factor[k]
    }

    /// `exp(2 int_{t_k}^T A)`.
    pub fn factor_sq(&self, k: usize) -> f64 {
        self.factor_sq[k]
    }

    /// `exp(int_{t_i}^{t_j} A)` for `i <= j`.
    pub fn between(&self, i: usize, j: usize) -> f64 {
        (self.log[i] - self.log[j]).exp()
    }

    pub fn factors(&self) -> &[f64] {
        &self.factor
    }
}

/// The five coefficient paths together with the grid they are sampled on.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    grid: TimeGrid,
    a: Path,
    b: Path,
    c: Path,
    d: Path,
    f: Path,
    d_min: f64,
    discount: DiscountCache,
    risk_sq: Vec<f64>,
    theta: Vec<f64>,
    shift_integrand: Vec<f64>,
}

impl CoefficientSet {
    pub fn new(grid: TimeGrid, a: Path, b: Path, c: Path, d: Path, f: Path) -> Result<Self> {
        Self::with_d_min(grid, a, b, c, d, f, DEFAULT_D_MIN)
    }

    pub fn with_d_min(
        grid: TimeGrid,
        a: Path,
        b: Path,
        c: Path,
        d: Path,
        f: Path,
        d_min: f64,
    ) -> Result<Self> {
        if !(d_min.is_finite() && d_min > 0.0) {
            return Err(Error::InvalidCoefficients(format!("d_min must be positive, got {d_min}")));
        }
        let horizon = grid.horizon();
        for (name, p) in [("A", &a), ("B", &b), ("C", &c), ("D", &d), ("F", &f)] {
            p.validate(name, horizon)?;
        }

        // Dense scan: nodes and cell midpoints. D must keep its sign and stay
        // away from zero; every path must be finite.
        let checks = 2 * grid.num_steps();
        let mut prev_sign = 0.0;
        for i in 0..=checks {
            let t = horizon * i as f64 / checks as f64;
            for (name, p) in [("A", &a), ("B", &b), ("C", &c), ("F", &f)] {
                let v = p.eval(t);
                if !v.is_finite() {
                    return Err(Error::InvalidCoefficients(format!("{name}({t}) = {v}")));
                }
            }
            let dv = d.eval(t);
            if !dv.is_finite() || dv.abs() < d_min {
                return Err(Error::DiffusionTooSmall { t, value: dv, d_min });
            }
            if prev_sign != 0.0 && dv.signum() != prev_sign {
                return Err(Error::DiffusionTooSmall { t, value: 0.0, d_min });
            }
            prev_sign = dv.signum();
        }

        let discount = DiscountCache::new(&a, &grid);
        let risk_sq: Vec<f64> = grid
            .nodes()
            .map(|t| {
                let r = b.eval(t) / d.eval(t);
                r * r
            })
            .collect();
        let theta = quadrature::nonneg_tail_integrals(&risk_sq, grid.step());
        let shift_integrand = grid
            .nodes()
            .enumerate()
            .map(|(k, t)| discount.factor(k) * (c.eval(t) - b.eval(t) / d.eval(t) * f.eval(t)))
            .collect();

        Ok(Self { grid, a, b, c, d, f, d_min, discount, risk_sq, theta, shift_integrand })
    }

    /// All-constant coefficients.
    pub fn constant(grid: TimeGrid, a: f64, b: f64, c: f64, d: f64, f: f64) -> Result<Self> {
        Self::new(
            grid,
            Path::Constant(a),
            Path::Constant(b),
            Path::Constant(c),
            Path::Constant(d),
            Path::Constant(f),
        )
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn paths(&self) -> [&Path; 5] {
        [&self.a, &self.b, &self.c, &self.d, &self.f]
    }

    pub fn a(&self, t: f64) -> f64 {
        self.a.eval(t)
    }
    pub fn b(&self, t: f64) -> f64 {
        self.b.eval(t)
    }
    pub fn c(&self, t: f64) -> f64 {
        self.c.eval(t)
    }
    pub fn d(&self, t: f64) -> f64 {
        self.d.eval(t)
    }
    pub fn f(&self, t: f64) -> f64 {
        self.f.eval(t)
    }

    pub fn discount(&self) -> &DiscountCache {
        &self.discount
    }

    /// `int_t^T A_v dv` at an arbitrary time.
    pub fn log_discount(&self, t: f64) -> f64 {
        let (cell, frac) = self.grid.locate(t);
        if frac == 0.0 {
            return self.discount.log(cell);
        }
        if frac == 1.0 {
            return self.discount.log(cell + 1);
        }
        self.discount.log(cell + 1) + self.a.integral(t, self.grid.node(cell + 1))
    }

    /// `(B_t / D_t)^2` at every node.
    pub fn risk_ratio_sq(&self) -> &[f64] {
        &self.risk_sq
    }

    /// `theta_t` at every node.
    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta0(&self) -> f64 {
        self.theta[0]
    }

    /// `theta_t = int_t^T (B_s / D_s)^2 ds`.
    pub fn theta(&self, t: f64) -> Result<f64> {
        self.grid.check_time("t", t)?;
        if let Some(k) = self.grid.index_of(t) {
            return Ok(self.theta[k]);
        }
        Ok(quadrature::nonneg_tail_at(&self.grid, &self.risk_sq, &self.theta, t))
    }

    /// `Theta(t, x) = x e^{int_t^T A} + int_t^T e^{int_s^T A} (C_s - B_s F_s / D_s) ds`.
    pub fn big_theta(&self, t: f64, x: f64) -> Result<f64> {
        self.grid.check_time("t", t)?;
        let shift = integrate(&self.grid, &self.shift_integrand, t, self.horizon())?;
        Ok(x * self.log_discount(t).exp() + shift)
    }

    /// `y^beta_t = int_t^T (D_s beta_s)^2 ds` for `beta` sampled on the grid.
    pub fn y_from_beta(&self, beta: &[f64], t: f64) -> Result<f64> {
        if beta.len() != self.grid.len() {
            return Err(Error::GridMismatch { expected: self.grid.len(), got: beta.len() });
        }
        let integrand: Vec<f64> = self
            .grid
            .nodes()
            .zip(beta)
            .map(|(s, b)| {
                let v = self.d(s) * b;
                v * v
            })
            .collect();
        self.grid.check_time("t", t)?;
        let tails = quadrature::nonneg_tail_integrals(&integrand, self.grid.step());
        Ok(quadrature::nonneg_tail_at(&self.grid, &integrand, &tails, t))
    }

    /// `B_t / |D_t|^2`.
    pub fn b_over_d_sq(&self, t: f64) -> f64 {
        let d = self.d(t);
        self.b(t) / (d * d)
    }

    /// True if `B` vanishes on every node.
    pub fn b_vanishes(&self) -> bool {
        self.grid.nodes().all(|t| self.b(t) == 0.0)
    }
}
