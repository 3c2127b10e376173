use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumSolution;
use crate::error::{Error, Result};
use crate::moments::alpha_unchecked;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "EQUICONTROL_THREADS";

const MIN_PATHS: usize = 10_000;
const MAX_PATHS: usize = 500_000_000;
const MAX_STEPS: usize = 10_000_000;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McOptions {
    pub seed: u64,
    pub num_paths: usize,
    pub num_steps: usize,
    /// Highest central moment to estimate.
    pub max_order: usize,
    pub x0: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { seed: 20240601, num_paths: 1_000_000, num_steps: 2048, max_order: 5, x0: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate {
    /// 1 for the mean, otherwise the central moment order.
    pub order: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub target: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub seed: u64,
    pub num_paths: usize,
    pub num_steps: usize,
    /// Mean first, then central moments `2..=max_order`.
    pub moments: Vec<MomentEstimate>,
    pub pass: bool,
}

impl McReport {
    pub fn moment(&self, order: usize) -> Option<&MomentEstimate> {
        self.moments.iter().find(|m| m.order == order)
    }
}

/// Euler-Maruyama simulation of `X` under the equilibrium control from
/// `(0, x0)`. Path `i` draws from the ChaCha8 stream `i` of `seed`, so the
/// result does not depend on the number of threads.
pub fn monte_carlo(sol: &EquilibriumSolution, opts: &McOptions, sigmas: f64) -> Result<McReport> {
    if opts.num_paths < MIN_PATHS || opts.num_paths > MAX_PATHS {
        return Err(Error::Resource(format!(
            "num_paths = {} outside [{MIN_PATHS}, {MAX_PATHS}]",
            opts.num_paths
        )));
    }
    if opts.num_steps == 0 || opts.num_steps > MAX_STEPS {
        return Err(Error::Resource(format!(
            "num_steps = {} outside [1, {MAX_STEPS}]",
            opts.num_steps
        )));
    }
    if opts.max_order < 2 {
        return Err(Error::Resource("max_order must be at least 2".into()));
    }
    let coeffs = sol.coeffs();
    let horizon = coeffs.horizon();
    let dt = horizon / opts.num_steps as f64;
    let sqrt_dt = dt.sqrt();

    // Coefficients frozen at the left end of each step.
    let mut steps = Vec::with_capacity(opts.num_steps);
    for k in 0..opts.num_steps {
        let s = k as f64 * dt;
        let u = sol.control(s, 0.0)?;
        steps.push((
            1.0 + coeffs.a(s) * dt,
            (coeffs.b(s) * u + coeffs.c(s)) * dt,
            (coeffs.d(s) * u + coeffs.f(s)) * sqrt_dt,
        ));
    }

    let mut terminal = vec![0.0; opts.num_paths];
    let simulate = |terminal: &mut [f64]| {
        terminal.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            for (i, out) in chunk.iter_mut().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream((c * CHUNK + i) as u64);
                let mut x = opts.x0;
                for &(growth, drift, vol) in &steps {
                    let z: f64 = rng.sample(StandardNormal);
                    x = x * growth + drift + vol * z;
                }
                *out = x;
            }
        });
    };
    match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Resource(e.to_string()))?
            .install(|| simulate(&mut terminal)),
        None => simulate(&mut terminal),
    }

    let moments = estimate(&terminal, opts.max_order);
    let target_mean = sol.terminal_mean(0.0, opts.x0)?;
    let y0 = sol.y()[0];
    let mut out = Vec::with_capacity(moments.len());
    let mut all = true;
    for (order, estimate, std_error) in moments {
        let target = if order == 1 { target_mean } else { alpha_unchecked(order as u32, y0) };
        let err = (estimate - target).abs();
        // A degenerate terminal law has zero sampling error; allow Euler bias only.
        let pass = if std_error > 0.0 {
            err <= sigmas * std_error
        } else {
            err <= dt * (1.0 + target.abs())
        };
        all &= pass;
        out.push(MomentEstimate { order, estimate, std_error, target, pass });
    }
    Ok(McReport {
        seed: opts.seed,
        num_paths: opts.num_paths,
        num_steps: opts.num_steps,
        moments: out,
        pass: all,
    })
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Resource(format!("{THREADS_ENV} = '{v}' is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

/// Sample mean and central moments with delta-method standard errors. The
/// influence function of the `j`-th central moment is
/// `d^j - m_j - j m_{j-1} d`, `d = X - mean`.
fn estimate(samples: &[f64], max_order: usize) -> Vec<(usize, f64, f64)> {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mut m = vec![0.0; max_order + 1];
    m[0] = 1.0;
    for x in samples {
        let d = x - mean;
        let mut p = d;
        for mj in m.iter_mut().skip(1) {
            *mj += p;
            p *= d;
        }
    }
    for mj in m.iter_mut().skip(1) {
        *mj /= n;
    }
    m[1] = 0.0;
    let mut out = Vec::with_capacity(max_order);
    out.push((1, mean, (m[2] / n).sqrt()));
    for j in 2..=max_order {
        let jf = j as f64;
        let mut acc = 0.0;
        for x in samples {
            let d = x - mean;
            let infl = d.powi(j as i32) - m[j] - jf * m[j - 1] * d;
            acc += infl * infl;
        }
        out.push((j, m[j], (acc / n / n).sqrt()));
    }
    out
}
