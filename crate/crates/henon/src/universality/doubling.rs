//! One-dimensional period doubling: the doubling fixed point, superstable
//! parameters of the quadratic family and the Feigenbaum constants.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::funcspace::{Field, Interval};

/// Accumulation parameter of `x -> c - x^2`, used as the critical value of
/// the normalized doubling fixed point.
pub const FEIGENBAUM_POINT: f64 = 1.401_155_189_092_050_6;

/// Even fixed point `g(x) = g(g(λx)) / λ` with `g(0) = 1`, `λ = g(1)`.
#[derive(Debug, Clone)]
pub struct DoublingFixedPoint {
    /// `g` is stored as a Chebyshev series in `u = 2 (x/radius)^2 - 1`.
    series: Field,
    radius: f64,
    lambda: f64,
    residual: f64,
}

impl DoublingFixedPoint {
    /// Newton solve in the space of even polynomials of degree `2 * terms`
    /// on `[-radius, radius]`.
    pub fn solve(terms: usize, radius: f64) -> Result<Self> {
        if terms < 2 || radius < 1.0 {
            return Err(Error::Invalid("need terms >= 2 and radius >= 1".into()));
        }
        let unit = Interval::new(-1.0, 1.0)?;
        let seed = Field::fit(
            |p| {
                let x2 = radius * radius * 0.5 * (p[0] + 1.0);
                1.0 - 1.527_6 * x2 + 0.104_8 * x2 * x2 + 0.026_7 * x2 * x2 * x2 - 0.003_5 * x2.powi(4)
            },
            &[terms],
            &[unit],
        )?;
        let mut a: Vec<f64> = seed.coefficients()[1..].to_vec();
        let nodes = unit.nodes(terms);
        let xs: Vec<f64> = nodes.iter().map(|u| radius * (0.5 * (u + 1.0)).sqrt()).collect();

        let residual = |a: &[f64]| -> Result<Vec<f64>> {
            let g = assemble(a, unit)?;
            let ev = |x: f64| eval_even(&g, radius, x);
            let lambda = ev(1.0);
            Ok(xs.iter().map(|&x| ev(x) - ev(ev(lambda * x)) / lambda).collect())
        };

        let mut r = residual(&a)?;
        for _ in 0..60 {
            let norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if norm < 1e-14 {
                break;
            }
            let mut jac = DMatrix::zeros(terms, terms);
            for k in 0..terms {
                let h = 1e-7 * a[k].abs().max(1e-3);
                let mut ap = a.clone();
                ap[k] += h;
                let rp = residual(&ap)?;
                for j in 0..terms {
                    jac[(j, k)] = (rp[j] - r[j]) / h;
                }
            }
            let rhs = DVector::from_vec(r.iter().map(|v| -v).collect());
            let step = jac
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Convergence("singular doubling Jacobian".into()))?;
            for k in 0..terms {
                a[k] += step[k];
            }
            r = residual(&a)?;
        }
        let series = assemble(&a, unit)?;
        let lambda = eval_even(&series, radius, 1.0);
        let mut out = Self { series, radius, lambda, residual: 0.0 };
        out.residual = out.functional_residual(400);
        if out.residual > 1e-9 {
            return Err(Error::Convergence(format!("doubling fixed point residual {:e}", out.residual)));
        }
        Ok(out)
    }

    /// Solve with the default resolution (degree 40 on `[-1.2, 1.2]`).
    pub fn standard() -> Result<Self> {
        Self::solve(20, 1.2)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn g(&self, x: f64) -> f64 {
        eval_even(&self.series, self.radius, x)
    }

    pub fn dg(&self, x: f64) -> f64 {
        let t = x / self.radius;
        4.0 * t / self.radius * self.series.partial(&[2.0 * t * t - 1.0], 0)
    }

    /// Sup of `|g(x) − g(g(λx))/λ|` on an equispaced grid of `[0, 1]`.
    pub fn functional_residual(&self, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| {
                let x = i as f64 / samples as f64;
                (self.g(x) - self.g(self.g(self.lambda * x)) / self.lambda).abs()
            })
            .fold(0.0, f64::max)
    }

    /// The fixed point in the normalization `f(0) = κ`: `f(x) = κ g(x/κ)`.
    pub fn unimodal(&self, kappa: f64, x: f64) -> f64 {
        kappa * self.g(x / kappa)
    }

    pub fn unimodal_slope(&self, kappa: f64, x: f64) -> f64 {
        self.dg(x / kappa)
    }

    /// Chebyshev refit of `x -> κ g(x/κ)` on `domain`.
    pub fn unimodal_field(&self, kappa: f64, domain: Interval, degree: usize) -> Result<Field> {
        Field::fit(|p| self.unimodal(kappa, p[0]), &[degree], &[domain])
    }
}

/// The default-resolution fixed point, solved once per process.
pub fn standard() -> &'static DoublingFixedPoint {
    static CELL: std::sync::OnceLock<DoublingFixedPoint> = std::sync::OnceLock::new();
    CELL.get_or_init(|| DoublingFixedPoint::standard().expect("doubling fixed point converges"))
}

/// `λ = g(1) ≈ −0.3995` of the standard fixed point.
pub fn standard_lambda() -> f64 {
    standard().lambda()
}

fn assemble(tail: &[f64], unit: Interval) -> Result<Field> {
    // g(0) = 1 fixes the constant term: u(0) = −1 and T_k(−1) = (−1)^k.
    let mut c = Vec::with_capacity(tail.len() + 1);
    let alt: f64 = tail.iter().enumerate().map(|(k, a)| if k % 2 == 0 { -a } else { *a }).sum();
    c.push(1.0 - alt);
    c.extend_from_slice(tail);
    Field::from_coefficients(vec![unit], vec![tail.len()], c)
}

#[inline]
fn eval_even(series: &Field, radius: f64, x: f64) -> f64 {
    let t = x / radius;
    series.value(&[2.0 * t * t - 1.0])
}

/// `f_c^m(0)` and its derivative in `c` for `f_c(x) = c − x²`.
fn orbit_with_slope(c: f64, m: usize) -> (f64, f64) {
    let (mut x, mut dx) = (0.0f64, 0.0f64);
    for _ in 0..m {
        let nx = c - x * x;
        dx = 1.0 - 2.0 * x * dx;
        x = nx;
    }
    (x, dx)
}

/// Superstable parameters `c_0 .. c_{n_max}`: `0` has period `2^n` under
/// `c − x²`. Newton steps seeded by geometric extrapolation.
pub fn superstable_parameters(n_max: usize) -> Result<Vec<f64>> {
    let mut cs = vec![0.0, 1.0];
    for n in 2..=n_max {
        let (c1, c2) = (cs[n - 1], cs[n - 2]);
        let ratio = if n >= 3 { (c2 - cs[n - 3]) / (c1 - c2) } else { 4.0 };
        let mut c = c1 + (c1 - c2) / ratio;
        let m = 1usize << n;
        let mut ok = false;
        for _ in 0..100 {
            let (v, dv) = orbit_with_slope(c, m);
            let step = v / dv;
            c -= step;
            if step.abs() < 1e-15 * c.abs() {
                ok = true;
                break;
            }
        }
        if !ok || !(c > c1) {
            return Err(Error::Convergence(format!("superstable parameter at n = {n}")));
        }
        cs.push(c);
    }
    cs.truncate(n_max + 1);
    Ok(cs)
}

/// Same parameters by bisection on the sign of `f_c^{2^n}(0)`, bracketed
/// between the previous parameter and the geometric extrapolation.
pub fn superstable_bisection(n_max: usize) -> Result<Vec<f64>> {
    let mut cs = vec![0.0, 1.0];
    for n in 2..=n_max {
        let (c1, c2) = (cs[n - 1], cs[n - 2]);
        let gap = c1 - c2;
        let m = 1usize << n;
        let val = |c: f64| orbit_with_slope(c, m).0;
        let mut lo = c1 + 0.1 * gap;
        let mut hi = c1 + 0.5 * gap;
        let (mut vlo, vhi) = (val(lo), val(hi));
        if vlo.signum() == vhi.signum() {
            return Err(Error::Bracket { lo, hi });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let vm = val(mid);
            if vm.signum() == vlo.signum() {
                lo = mid;
                vlo = vm;
            } else {
                hi = mid;
            }
        }
        cs.push(0.5 * (lo + hi));
    }
    cs.truncate(n_max + 1);
    Ok(cs)
}

/// Ratios `(c_{n} − c_{n−1}) / (c_{n+1} − c_n)`.
pub fn delta_ratios(cs: &[f64]) -> Vec<f64> {
    cs.windows(3).map(|w| (w[1] - w[0]) / (w[2] - w[1])).collect()
}

/// Geometric extrapolation of the last three parameters.
pub fn accumulation_point(cs: &[f64]) -> Result<f64> {
    let n = cs.len();
    if n < 3 {
        return Err(Error::Invalid("need at least three parameters".into()));
    }
    let d = (cs[n - 2] - cs[n - 3]) / (cs[n - 1] - cs[n - 2]);
    Ok(cs[n - 1] + (cs[n - 1] - cs[n - 2]) / (d - 1.0))
}
