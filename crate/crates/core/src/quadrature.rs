//! Quadrature on uniform grids.
//!
//! Two independent routes are provided. [`integrate`] works on node samples
//! only (composite Simpson, 3/8 closure for odd cell counts, quadratic
//! interpolation on partial cells). [`integrate_fn`] evaluates a closure at
//! 5-point Gauss-Legendre nodes inside every grid cell and is used by the
//! verification code so that checks do not share the solver's quadrature.

use crate::coeffs::TimeGrid;
use crate::error::{Error, Result};

/// Integral of samples over whole cells `[t_i, t_j]`, `i <= j`.
pub(crate) fn integrate_nodes(values: &[f64], h: f64, i: usize, j: usize) -> f64 {
    debug_assert!(i <= j && j < values.len());
    let cells = j - i;
    match cells {
        0 => 0.0,
        1 => single_cell(values, h, i),
        _ => {
            let (simpson_end, tail) =
                if cells.is_multiple_of(2) { (j, false) } else { (j - 3, true) };
            let mut acc = 0.0;
            let mut k = i;
            while k < simpson_end {
                acc += values[k] + 4.0 * values[k + 1] + values[k + 2];
                k += 2;
            }
            let mut total = acc * h / 3.0;
            if tail {
                let s = simpson_end;
                total += 3.0 * h / 8.0
                    * (values[s] + 3.0 * values[s + 1] + 3.0 * values[s + 2] + values[s + 3]);
            }
            total
        }
    }
}

fn single_cell(values: &[f64], h: f64, cell: usize) -> f64 {
    let n = values.len();
    if n < 3 {
        return 0.5 * h * (values[cell] + values[cell + 1]);
    }
    let start = cell.min(n - 3);
    let tau0 = (cell - start) as f64;
    quadratic_piece(&values[start..start + 3], h, tau0, tau0 + 1.0)
}

/// Integral over `tau in [ta, tb]` (in units of `h`) of the quadratic through
/// three consecutive samples located at `tau = 0, 1, 2`.
fn quadratic_piece(v: &[f64], h: f64, ta: f64, tb: f64) -> f64 {
    let l0 = |t: f64| (t * t * t / 3.0 - 1.5 * t * t + 2.0 * t) / 2.0;
    let l1 = |t: f64| -(t * t * t / 3.0 - t * t);
    let l2 = |t: f64| (t * t * t / 3.0 - 0.5 * t * t) / 2.0;
    h * (v[0] * (l0(tb) - l0(ta)) + v[1] * (l1(tb) - l1(ta)) + v[2] * (l2(tb) - l2(ta)))
}

fn partial_cell(values: &[f64], h: f64, cell: usize, ta: f64, tb: f64) -> f64 {
    let n = values.len();
    if n < 3 {
        let lerp = |t: f64| values[cell] + (values[cell + 1] - values[cell]) * t;
        return h * (tb - ta) * 0.5 * (lerp(ta) + lerp(tb));
    }
    let start = cell.min(n - 3);
    let shift = (cell - start) as f64;
    quadratic_piece(&values[start..start + 3], h, ta + shift, tb + shift)
}

/// Integral of a sampled path over `[a, b]`, exact for quadratics on the grid.
pub fn integrate(grid: &TimeGrid, values: &[f64], a: f64, b: f64) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch { expected: grid.len(), got: values.len() });
    }
    grid.check_time("a", a)?;
    grid.check_time("b", b)?;
    if a > b {
        return Err(Error::Domain { what: "a", value: a, lo: 0.0, hi: b });
    }
    if a == b {
        return Ok(0.0);
    }
    let h = grid.step();
    let (ca, fa) = grid.locate(a);
    let (cb, fb) = grid.locate(b);
    if ca == cb {
        return Ok(partial_cell(values, h, ca, fa, fb));
    }
    // Normalise to node indices: first node at or after a, last node at or before b.
    let first = if fa == 0.0 { ca } else { ca + 1 };
    let last = if fb == 1.0 { cb + 1 } else { cb };
    let mut total = 0.0;
    if fa > 0.0 && fa < 1.0 {
        total += partial_cell(values, h, ca, fa, 1.0);
    }
    if first <= last {
        total += integrate_nodes(values, h, first, last);
    }
    if fb > 0.0 && fb < 1.0 {
        total += partial_cell(values, h, cb, 0.0, fb);
    }
    Ok(total)
}

/// Integral over `[t_k, T]` for every node `k`.
pub fn tail_integrals(values: &[f64], h: f64) -> Vec<f64> {
    let last = values.len() - 1;
    (0..values.len()).map(|k| integrate_nodes(values, h, k, last)).collect()
}

/// Block start and local offset of `cell` when Simpson blocks are aligned to
/// end at the last node.
fn aligned_block(cells: usize, cell: usize) -> (usize, f64) {
    if (cells - cell).is_multiple_of(2) {
        (cell, 0.0)
    } else if cell == 0 {
        (0, 0.0)
    } else {
        (cell - 1, 1.0)
    }
}

/// True if the quadratic through `v` at `tau = 0, 1, 2` is nonnegative on `[lo, lo + 1]`.
fn quadratic_nonneg(v: &[f64], lo: f64) -> bool {
    let a = 0.5 * (v[0] - 2.0 * v[1] + v[2]);
    let b = v[1] - v[0] - a;
    let eval = |t: f64| v[0] + t * (b + a * t);
    if eval(lo) < 0.0 || eval(lo + 1.0) < 0.0 {
        return false;
    }
    if a > 0.0 {
        let vertex = -b / (2.0 * a);
        if vertex > lo && vertex < lo + 1.0 {
            return eval(vertex) >= 0.0;
        }
    }
    true
}

/// Integral over `[frac, 1]` of cell `cell` for nonnegative samples: the
/// aligned Simpson quadratic when it stays nonnegative on the cell, linear
/// interpolation otherwise.
fn nonneg_cell_tail(values: &[f64], h: f64, cell: usize, frac: f64) -> f64 {
    let cells = values.len() - 1;
    if cells >= 2 {
        let (start, offset) = aligned_block(cells, cell);
        let v = &values[start..start + 3];
        if quadratic_nonneg(v, offset) {
            return quadratic_piece(v, h, offset + frac, offset + 1.0).max(0.0);
        }
    }
    let (v0, v1) = (values[cell], values[cell + 1]);
    let mid = v0 + (v1 - v0) * frac;
    0.5 * h * (1.0 - frac) * (mid + v1)
}

/// Tail integrals of nonnegative samples that are nonincreasing by
/// construction. Cells take their share of Simpson blocks aligned to the last
/// node; a cell whose block quadratic dips below zero falls back to the
/// trapezoid rule. Exact for nonnegative quadratics.
pub fn nonneg_tail_integrals(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for cell in (0..values.len().saturating_sub(1)).rev() {
        out[cell] = out[cell + 1] + nonneg_cell_tail(values, h, cell, 0.0);
    }
    out
}

/// Off-node evaluation of [`nonneg_tail_integrals`].
pub fn nonneg_tail_at(grid: &TimeGrid, values: &[f64], tails: &[f64], t: f64) -> f64 {
    let (cell, frac) = grid.locate(t);
    if frac == 0.0 {
        return tails[cell];
    }
    if frac == 1.0 {
        return tails[cell + 1];
    }
    tails[cell + 1] + nonneg_cell_tail(values, grid.step(), cell, frac)
}

/// Composite Simpson over all samples of a uniform grid with spacing `h`.
pub fn integrate_uniform(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    integrate_nodes(values, h, 0, values.len() - 1)
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// 5-point Gauss-Legendre rule on `[a, b]`, exact for polynomials of degree 9.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL_NODES.iter().zip(GL_WEIGHTS.iter()).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Gauss-Legendre applied on every grid cell intersecting `[a, b]`.
pub fn integrate_fn<F: FnMut(f64) -> f64>(grid: &TimeGrid, mut f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = grid.step();
    let (ca, _) = grid.locate(a);
    let (cb, _) = grid.locate(b);
    let mut total = 0.0;
    for cell in ca..=cb {
        let lo = a.max(cell as f64 * h);
        let hi = b.min((cell + 1) as f64 * h);
        if hi > lo {
            total += gauss_legendre(&mut f, lo, hi);
        }
    }
    total
}

/// [`integrate_fn`] for a pair of integrands sharing their evaluation points.
pub fn integrate_fn_pair<F: FnMut(f64) -> (f64, f64)>(
    grid: &TimeGrid,
    mut f: F,
    a: f64,
    b: f64,
) -> (f64, f64) {
    if b <= a {
        return (0.0, 0.0);
    }
    let h = grid.step();
    let (ca, _) = grid.locate(a);
    let (cb, _) = grid.locate(b);
    let (mut first, mut second) = (0.0, 0.0);
    for cell in ca..=cb {
        let lo = a.max(cell as f64 * h);
        let hi = b.min((cell + 1) as f64 * h);
        if hi > lo {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let (mut s1, mut s2) = (0.0, 0.0);
            for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                let (v1, v2) = f(mid + half * x);
                s1 += w * v1;
                s2 += w * v2;
            }
            first += s1 * half;
            second += s2 * half;
        }
    }
    (first, second)
}
