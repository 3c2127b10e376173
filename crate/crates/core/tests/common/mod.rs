//! Shared fixtures and independent numerical oracles for the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use equicontrol::{
    CoefficientSet, DiscreteLaw, FourierDensity, ObjectiveSpec, Path, Penalty, TimeGrid,
};

/// Gauss-Hermite nodes and weights for `int e^{-x^2} g(x) dx`, found by
/// Newton iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut z: f64 = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `E[g(Z)]` for `Z ~ N(0, v)` by 64-point Gauss-Hermite.
pub fn gaussian_expect(v: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_hermite(64);
    let s = (2.0 * v).sqrt();
    x.iter().zip(&w).map(|(xi, wi)| wi * g(s * xi)).sum::<f64>() / PI.sqrt()
}

/// Penalty functions written out directly.
pub fn penalty_fn(p: &Penalty) -> Box<dyn Fn(f64) -> f64 + '_> {
    match p {
        Penalty::Exp { c } => Box::new(move |x| ((-c * x).exp() - 1.0 + c * x) / c),
        Penalty::Cosh { c } => Box::new(move |x| ((c * x).cosh() - 1.0) / c),
        Penalty::Cos { c } => Box::new(move |x| (1.0 - (c * x).cos()) / c),
        Penalty::AmbiguousCos(law) => {
            Box::new(move |x| 1.0 - law.support.iter().map(|(h, p)| p * (h * x).cos()).sum::<f64>())
        }
        Penalty::Fourier(_) => unimplemented!("fourier penalties have no pointwise oracle here"),
    }
}

pub const HORIZON: f64 = 1.0;
pub const GRID: usize = 512;

pub fn grid() -> TimeGrid {
    TimeGrid::new(HORIZON, GRID).unwrap()
}

/// `A = C = F = 0`, `D = 0.2` and the given constant `B`.
pub fn constant_coeffs(b: f64) -> CoefficientSet {
    CoefficientSet::constant(grid(), 0.0, b, 0.0, 0.2, 0.0).unwrap()
}

/// Smoothly time-varying coefficients with nonzero drift and noise offsets.
pub fn varying_coeffs() -> CoefficientSet {
    CoefficientSet::new(
        grid(),
        Path::Constant(0.05),
        Path::Polynomial(vec![0.3, 0.1]),
        Path::Constant(0.02),
        Path::Exponential { scale: 0.2, rate: 0.1, shift: 0.0 },
        Path::Constant(0.05),
    )
    .unwrap()
}

/// Weight of `S(x) = 1 - exp(-x^2/2)`: unit atom at zero minus the standard
/// normal density.
pub fn gaussian_kernel_density() -> FourierDensity {
    let n = 481;
    let h_max = 12.0;
    let dh = 2.0 * h_max / (n - 1) as f64;
    let values = (0..n)
        .map(|i| {
            let h = -h_max + i as f64 * dh;
            -(-0.5 * h * h).exp() / (2.0 * PI).sqrt()
        })
        .collect();
    FourierDensity { h_max, values, atom: 1.0 }
}

pub fn two_point_law() -> DiscreteLaw {
    DiscreteLaw::new(vec![(0.8, 0.5), (1.5, 0.5)]).unwrap()
}

/// A named solved case: coefficients, objective and a preferred solver.
pub struct Case {
    pub name: &'static str,
    pub coeffs: CoefficientSet,
    pub spec: ObjectiveSpec,
    pub solver: equicontrol::SolverKind,
}

/// Every case the acceptance suite treats as "solved".
pub fn solved_cases() -> Vec<Case> {
    use equicontrol::SolverKind::*;
    let mv = ObjectiveSpec::moment_combo(1.0, vec![2.0]).unwrap();
    let mvsk = ObjectiveSpec::moment_combo(1.0, vec![1.0, 0.0, 1.0]).unwrap();
    let general = ObjectiveSpec::moment_combo(1.0, vec![2.0, 0.5, 1.0, 0.0, 0.3]).unwrap();
    let exp = ObjectiveSpec::penalty(1.0, Penalty::Exp { c: 1.0 }).unwrap();
    let cosh = ObjectiveSpec::penalty(1.0, Penalty::Cosh { c: 0.7 }).unwrap();
    let cos = ObjectiveSpec::penalty(1.0, Penalty::Cos { c: 1.0 }).unwrap();
    let amb = ObjectiveSpec::penalty(1.0, Penalty::AmbiguousCos(two_point_law())).unwrap();
    let std = ObjectiveSpec::standardized(1.0, vec![2.0, 1.0]).unwrap();
    let fourier = ObjectiveSpec::penalty(1.0, Penalty::Fourier(gaussian_kernel_density())).unwrap();
    vec![
        Case { name: "mv", coeffs: constant_coeffs(0.3), spec: mv.clone(), solver: ClosedForm },
        Case { name: "mv-ode", coeffs: constant_coeffs(0.3), spec: mv.clone(), solver: Ode },
        Case { name: "mvsk", coeffs: constant_coeffs(0.3), spec: mvsk.clone(), solver: ClosedForm },
        Case { name: "mvsk-alg", coeffs: constant_coeffs(0.3), spec: mvsk, solver: Algebraic },
        Case {
            name: "moment-combo-6",
            coeffs: constant_coeffs(0.3),
            spec: general.clone(),
            solver: Algebraic,
        },
        Case {
            name: "moment-combo-6-ode",
            coeffs: constant_coeffs(0.3),
            spec: general,
            solver: Ode,
        },
        Case { name: "exp", coeffs: constant_coeffs(0.3), spec: exp.clone(), solver: ClosedForm },
        Case { name: "exp-ode", coeffs: constant_coeffs(0.3), spec: exp.clone(), solver: Ode },
        Case { name: "cosh", coeffs: constant_coeffs(0.3), spec: cosh, solver: ClosedForm },
        Case { name: "cos", coeffs: constant_coeffs(0.1), spec: cos.clone(), solver: ClosedForm },
        Case { name: "cos-ode", coeffs: constant_coeffs(0.1), spec: cos, solver: Ode },
        Case {
            name: "ambiguous-cos",
            coeffs: constant_coeffs(0.1),
            spec: amb.clone(),
            solver: ClosedForm,
        },
        Case { name: "ambiguous-cos-ode", coeffs: constant_coeffs(0.1), spec: amb, solver: Ode },
        Case { name: "standardized", coeffs: constant_coeffs(0.3), spec: std, solver: Ode },
        Case { name: "fourier", coeffs: constant_coeffs(0.1), spec: fourier, solver: Ode },
        Case { name: "varying-mv", coeffs: varying_coeffs(), spec: mv, solver: ClosedForm },
        Case { name: "varying-exp", coeffs: varying_coeffs(), spec: exp, solver: Ode },
    ]
}
