//! Tensor Chebyshev fields on intervals, rectangles and cuboids.
//!
//! A [`Field`] stores Chebyshev coefficients of the first kind on an
//! axis-aligned box of dimension one to three. Values, partial derivatives and
//! increments are evaluated from the polynomial representative, which is also
//! used for the small extrapolation margin around the box.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative extrapolation margin accepted around every box.
pub const MARGIN: f64 = 0.02;
/// Relative size of the coefficient tail accepted by [`Field::tail_ok`].
pub const TAIL_TOL: f64 = 1e-10;
/// Default tolerance of the scalar root finders.
pub const NEWTON_TOL: f64 = 1e-12;
/// Iteration cap of the scalar root finders.
pub const NEWTON_CAP: usize = 50;
/// Bracketing steps allowed in [`invert_monotone`]; enough to bisect any
/// double-precision bracket down to its floor.
const MONOTONE_CAP: usize = 200;

const MAX_DEGREE: usize = 127;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Invalid(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Membership with the extrapolation margin.
    pub fn admits(&self, x: f64) -> bool {
        let m = MARGIN * self.width();
        x >= self.lo - m && x <= self.hi + m
    }

    pub fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - self.lo - self.hi) / self.width()
    }

    pub fn from_unit(&self, t: f64) -> f64 {
        0.5 * (self.lo + self.hi) + 0.5 * self.width() * t
    }

    pub fn inflate(&self, frac: f64) -> Self {
        let m = frac * self.width();
        Self { lo: self.lo - m, hi: self.hi + m }
    }

    /// Chebyshev points of the first kind, in descending order.
    pub fn nodes(&self, count: usize) -> Vec<f64> {
        (0..count).map(|j| self.from_unit(cheb_node(j, count))).collect()
    }

    /// `count` points from `lo` to `hi` inclusive.
    pub fn linspace(&self, count: usize) -> Vec<f64> {
        if count == 1 {
            return vec![self.mid()];
        }
        (0..count).map(|j| self.lo + self.width() * j as f64 / (count - 1) as f64).collect()
    }
}

pub type Box2 = [Interval; 2];
pub type Box3 = [Interval; 3];

fn cheb_node(j: usize, count: usize) -> f64 {
    (std::f64::consts::PI * (j as f64 + 0.5) / count as f64).cos()
}

/// Fills `out[0..=n]` with `T_k(t)`.
#[inline]
fn cheb_t(t: f64, n: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if n >= 1 {
        out[1] = t;
    }
    for k in 2..=n {
        out[k] = 2.0 * t * out[k - 1] - out[k - 2];
    }
}

/// Fills `out[0..=n]` with `T_k'(t) = k U_{k-1}(t)`.
#[inline]
fn cheb_dt(t: f64, n: usize, out: &mut [f64]) {
    out[0] = 0.0;
    let (mut u_prev, mut u) = (0.0, 1.0);
    for k in 1..=n {
        out[k] = k as f64 * u;
        let next = 2.0 * t * u - u_prev;
        u_prev = u;
        u = next;
    }
}

/// A tensor Chebyshev polynomial on a box of dimension one to three.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    domain: Vec<Interval>,
    degrees: Vec<usize>,
    /// Row-major: the first axis varies slowest.
    coefficients: Vec<f64>,
}

impl Field {
    pub fn from_coefficients(
        domain: Vec<Interval>,
        degrees: Vec<usize>,
        coefficients: Vec<f64>,
    ) -> Result<Self> {
        if domain.is_empty() || domain.len() > 3 || domain.len() != degrees.len() {
            return Err(Error::Invalid("field needs 1 to 3 axes".into()));
        }
        if degrees.iter().any(|&d| d > MAX_DEGREE) {
            return Err(Error::Invalid(format!("degree above {MAX_DEGREE}")));
        }
        for iv in &domain {
            Interval::new(iv.lo, iv.hi)?;
        }
        let len: usize = degrees.iter().map(|d| d + 1).product();
        if coefficients.len() != len {
            return Err(Error::Invalid(format!("expected {len} coefficients, got {}", coefficients.len())));
        }
        Ok(Self { domain, degrees, coefficients })
    }

    pub fn constant(domain: Vec<Interval>, value: f64) -> Self {
        let n = domain.len();
        let mut coefficients = vec![0.0; 1];
        coefficients[0] = value;
        Self { domain, degrees: vec![0; n], coefficients }
    }

    pub fn zero(domain: Vec<Interval>) -> Self {
        Self::constant(domain, 0.0)
    }

    pub fn dims(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0.0)
    }

    /// Tensor grid of Chebyshev nodes, row-major.
    pub fn grid(domain: &[Interval], degrees: &[usize]) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = domain.iter().zip(degrees).map(|(iv, &d)| iv.nodes(d + 1)).collect();
        let mut out = vec![Vec::new()];
        for ax in &axes {
            let mut next = Vec::with_capacity(out.len() * ax.len());
            for p in &out {
                for &x in ax {
                    let mut q = p.clone();
                    q.push(x);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }

    /// Interpolant through the tensor nodes.
    pub fn fit<S>(sampler: S, degrees: &[usize], domain: &[Interval]) -> Result<Self>
    where
        S: Fn(&[f64]) -> f64,
    {
        let values: Vec<f64> = Self::grid(domain, degrees).iter().map(|p| sampler(p)).collect();
        Self::from_values(domain.to_vec(), degrees.to_vec(), values)
    }

    /// [`Field::fit`] with a fallible sampler, evaluated in parallel.
    pub fn try_fit<S>(sampler: S, degrees: &[usize], domain: &[Interval]) -> Result<Self>
    where
        S: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let values: Result<Vec<f64>> = Self::grid(domain, degrees).par_iter().map(|p| sampler(p)).collect();
        Self::from_values(domain.to_vec(), degrees.to_vec(), values?)
    }

    /// Interpolant from values at [`Field::grid`] nodes.
    pub fn from_values(domain: Vec<Interval>, degrees: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if degrees.iter().any(|&d| d > MAX_DEGREE) {
            return Err(Error::Invalid(format!("degree above {MAX_DEGREE}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Fit(format!("non-finite sample at node {i}")));
        }
        let shape: Vec<usize> = degrees.iter().map(|d| d + 1).collect();
        let len: usize = shape.iter().product();
        if values.len() != len {
            return Err(Error::Fit(format!("expected {len} samples, got {}", values.len())));
        }
        let mut c = values;
        for axis in 0..shape.len() {
            dct_axis(&mut c, &shape, axis);
        }
        Self::from_coefficients(domain, degrees, c)
    }

    #[inline]
    fn check(&self, p: &[f64]) -> Result<()> {
        for (axis, iv) in self.domain.iter().enumerate() {
            let x = p[axis];
            if !iv.admits(x) || !x.is_finite() {
                return Err(Error::Domain { axis, point: p.to_vec() });
            }
        }
        Ok(())
    }

    /// Value at `p`, rejecting points beyond the extrapolation margin.
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        self.check(p)?;
        Ok(self.value(p))
    }

    /// Value at `p` without the domain check.
    #[inline]
    pub fn value(&self, p: &[f64]) -> f64 {
        self.contract(p, None)
    }

    /// Partial derivative along `axis` at `p`, unchecked.
    #[inline]
    pub fn partial(&self, p: &[f64], axis: usize) -> f64 {
        if self.degrees[axis] == 0 {
            return 0.0;
        }
        let scale = 2.0 / self.domain[axis].width();
        scale * self.contract(p, Some(axis))
    }

    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        (0..self.dims()).map(|a| self.partial(p, a)).collect()
    }

    fn contract(&self, p: &[f64], deriv: Option<usize>) -> f64 {
        let mut bufs = [[0.0f64; MAX_DEGREE + 1]; 3];
        for (axis, buf) in bufs.iter_mut().enumerate().take(self.dims()) {
            let t = self.domain[axis].to_unit(p[axis]);
            if deriv == Some(axis) {
                cheb_dt(t, self.degrees[axis], buf);
            } else {
                cheb_t(t, self.degrees[axis], buf);
            }
        }
        let c = &self.coefficients;
        match self.dims() {
            1 => {
                let n = self.degrees[0] + 1;
                c.iter().zip(&bufs[0][..n]).map(|(a, b)| a * b).sum()
            }
            2 => {
                let (nx, ny) = (self.degrees[0] + 1, self.degrees[1] + 1);
                let by = &bufs[1][..ny];
                let mut s = 0.0;
                for i in 0..nx {
                    let row = &c[i * ny..(i + 1) * ny];
                    let r: f64 = row.iter().zip(by).map(|(a, b)| a * b).sum();
                    s += bufs[0][i] * r;
                }
                s
            }
            _ => {
                let (nx, ny, nz) = (self.degrees[0] + 1, self.degrees[1] + 1, self.degrees[2] + 1);
                let bz = &bufs[2][..nz];
                let mut s = 0.0;
                for i in 0..nx {
                    let mut si = 0.0;
                    for j in 0..ny {
                        let off = (i * ny + j) * nz;
                        let r: f64 = c[off..off + nz].iter().zip(bz).map(|(a, b)| a * b).sum();
                        si += bufs[1][j] * r;
                    }
                    s += bufs[0][i] * si;
                }
                s
            }
        }
    }

    /// `q(p with p[axis] = to) − q(p)`, accurate relative to the size of the
    /// partial derivative even when the step is tiny.
    pub fn increment(&self, p: &[f64], axis: usize, to: f64) -> f64 {
        self.increment_by(p, axis, to - p[axis])
    }

    /// `q(p + h e_axis) − q(p)` for an exactly known step `h`.
    pub fn increment_by(&self, p: &[f64], axis: usize, h: f64) -> f64 {
        if h == 0.0 || self.degrees[axis] == 0 {
            return 0.0;
        }
        let from = p[axis];
        let n = p.len();
        let mut q = [0.0; 3];
        q[..n].copy_from_slice(p);
        let rel = h.abs() / self.domain[axis].width();
        if rel >= 1e-3 {
            let before = self.value(&q[..n]);
            q[axis] = from + h;
            return self.value(&q[..n]) - before;
        }
        let (ts, ws) = gauss_legendre(if rel < 1e-6 { 2 } else { 4 });
        let mut s = 0.0;
        for (t, w) in ts.iter().zip(ws) {
            q[axis] = from + t * h;
            s += w * self.partial(&q[..n], axis);
        }
        s * h
    }

    /// Exact derivative of the polynomial representative along `axis`.
    pub fn differentiate(&self, axis: usize) -> Result<Self> {
        if axis >= self.dims() {
            return Err(Error::Invalid(format!("axis {axis} out of range")));
        }
        let shape: Vec<usize> = self.degrees.iter().map(|d| d + 1).collect();
        let n = shape[axis];
        let mut out = self.coefficients.clone();
        let scale = 2.0 / self.domain[axis].width();
        for_each_line(&shape, axis, |idx| {
            let a: Vec<f64> = idx.iter().map(|&i| self.coefficients[i]).collect();
            let mut d = vec![0.0; n + 1];
            for k in (1..n).rev() {
                d[k - 1] = d[k + 1] + 2.0 * k as f64 * a[k];
            }
            d[0] *= 0.5;
            for (j, &i) in idx.iter().enumerate() {
                out[i] = scale * d[j];
            }
        });
        Self::from_coefficients(self.domain.clone(), self.degrees.clone(), out)
    }

    /// Largest coefficient among the top 10 % of degrees on any axis,
    /// relative to the largest coefficient overall.
    pub fn tail_indicator(&self) -> f64 {
        let lead = self.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if lead == 0.0 {
            return 0.0;
        }
        let shape: Vec<usize> = self.degrees.iter().map(|d| d + 1).collect();
        let cut: Vec<usize> =
            self.degrees.iter().map(|&d| if d == 0 { usize::MAX } else { d + 1 - (d / 10).max(1) }).collect();
        let mut tail = 0.0f64;
        for (flat, c) in self.coefficients.iter().enumerate() {
            let mut rem = flat;
            let mut in_tail = false;
            for axis in (0..shape.len()).rev() {
                let k = rem % shape[axis];
                rem /= shape[axis];
                if k >= cut[axis] {
                    in_tail = true;
                }
            }
            if in_tail {
                tail = tail.max(c.abs());
            }
        }
        tail / lead
    }

    pub fn tail_ok(&self) -> bool {
        self.tail_indicator() <= TAIL_TOL
    }

    /// Sup of |q| over a 17-point-per-axis grid (box corners included).
    pub fn sup_norm(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let degs: Vec<usize> = self.degrees.iter().map(|&d| if d == 0 { 0 } else { 16 }).collect();
        let axes: Vec<Vec<f64>> = self
            .domain
            .iter()
            .zip(&degs)
            .map(|(iv, &d)| if d == 0 { vec![iv.mid()] } else { iv.linspace(d + 1) })
            .collect();
        let mut best = 0.0f64;
        let mut p = vec![0.0; self.dims()];
        let mut idx = vec![0usize; self.dims()];
        loop {
            for a in 0..self.dims() {
                p[a] = axes[a][idx[a]];
            }
            best = best.max(self.value(&p).abs());
            let mut a = self.dims();
            loop {
                if a == 0 {
                    return best;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < axes[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// Sum of |c|, an upper bound for the sup norm on the box.
    pub fn coefficient_l1(&self) -> f64 {
        self.coefficients.iter().map(|c| c.abs()).sum()
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.coefficients.iter_mut().for_each(|c| *c *= a);
        out
    }
}

/// Calls `f` with the flat indices of every line along `axis`.
fn for_each_line<F: FnMut(&[usize])>(shape: &[usize], axis: usize, mut f: F) {
    let stride: usize = shape[axis + 1..].iter().product();
    let n = shape[axis];
    let total: usize = shape.iter().product();
    let outer = total / (n * stride);
    let mut idx = vec![0usize; n];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for (j, slot) in idx.iter_mut().enumerate() {
                *slot = base + j * stride;
            }
            f(&idx);
        }
    }
}

fn dct_axis(c: &mut [f64], shape: &[usize], axis: usize) {
    let n = shape[axis];
    let table: Vec<f64> = (0..n * n)
        .map(|kj| {
            let (k, j) = (kj / n, kj % n);
            (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64).cos()
        })
        .collect();
    let src = c.to_vec();
    for_each_line(shape, axis, |idx| {
        for k in 0..n {
            let mut s = 0.0;
            for (j, &i) in idx.iter().enumerate() {
                s += src[i] * table[k * n + j];
            }
            let w = if k == 0 { 1.0 } else { 2.0 };
            c[idx[k]] = w * s / n as f64;
        }
    });
}

/// Gauss–Legendre rule with `m` points on [0, 1].
pub fn gauss_legendre(m: usize) -> (&'static [f64], &'static [f64]) {
    static RULES: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=64).map(legendre_rule).collect());
    let (t, w) = &rules[m.clamp(1, 64)];
    (t, w)
}

fn legendre_rule(m: usize) -> (Vec<f64>, Vec<f64>) {
    if m == 0 {
        return (vec![], vec![]);
    }
    let mut ts = Vec::with_capacity(m);
    let mut ws = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        ts.push(0.5 * (1.0 - x));
        ws.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (ts, ws)
}

/// Divided difference `(g(a) − g(b)) / (a − b)` of a one-dimensional field,
/// relative-accurate for nearby arguments.
pub fn divided_difference(g: &Field, a: f64, b: f64) -> f64 {
    divided_by(g, b, a - b)
}

/// `(g(b + h) − g(b)) / h` for an exactly known step `h`.
pub fn divided_by(g: &Field, b: f64, h: f64) -> f64 {
    if h == 0.0 {
        return g.partial(&[b], 0);
    }
    let rel = h.abs() / g.domain[0].width();
    if rel >= 1e-3 {
        return (g.value(&[b + h]) - g.value(&[b])) / h;
    }
    let (ts, ws) = gauss_legendre(if rel < 1e-6 { 2 } else { 4 });
    ts.iter().zip(ws).map(|(t, w)| w * g.partial(&[b + t * h], 0)).sum()
}

/// Root of a continuous monotone `g` with `g(r) = target` inside `bracket`.
///
/// Secant steps keep the bracket (Illinois rule); a bisection step is taken
/// whenever the secant stalls.
pub fn invert_monotone<G>(g: G, target: f64, bracket: Interval, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (g(a) - target, g(b) - target);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Bracket { lo: a, hi: b });
    }
    if fa.abs() <= tol {
        return Ok(a);
    }
    if fb.abs() <= tol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket { lo: a, hi: b });
    }
    // Roots near 0 get an absolute width floor from the bracket span.
    let floor = 1e-3 * bracket.width();
    let mut side = 0i32;
    for it in 0..MONOTONE_CAP {
        let secant = (a * fb - b * fa) / (fb - fa);
        let x = if it % 4 == 3 || !(secant > a.min(b) && secant < a.max(b)) { 0.5 * (a + b) } else { secant };
        let fx = g(x) - target;
        if fx.abs() <= tol || (b - a).abs() <= 4.0 * f64::EPSILON * x.abs().max(floor) {
            return Ok(x);
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::Convergence(format!("invert_monotone on [{}, {}]", bracket.lo, bracket.hi)))
}

/// Newton iteration for `g(x) = target` from `seed` with value-and-slope
/// callback, falling back to [`invert_monotone`] on `bracket`.
pub fn newton_solve<G>(g: G, target: f64, seed: f64, bracket: Interval, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> (f64, f64),
{
    let mut x = seed;
    for _ in 0..NEWTON_CAP {
        let (v, d) = g(x);
        let r = v - target;
        if r.abs() <= tol {
            return Ok(x);
        }
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - r / d;
        if !bracket.admits(next) || !next.is_finite() {
            break;
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs() {
            return Ok(next);
        }
        x = next;
    }
    invert_monotone(|t| g(t).0, target, bracket, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::new(-1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_field() {
        let f = Field::constant(vec![unit(), unit()], 3.0);
        assert_eq!(f.eval(&[0.2, -0.7]).unwrap(), 3.0);
    }

    #[test]
    fn square_on_unit_interval() {
        let f = Field::fit(|p| p[0] * p[0], &[2], &[unit()]).unwrap();
        assert!((f.eval(&[0.3]).unwrap() - 0.09).abs() < 1e-15);
        let d = f.differentiate(0).unwrap();
        assert!((d.eval(&[0.3]).unwrap() - 0.6).abs() < 1e-14);
    }

    #[test]
    fn quadratic_family_critical_value() {
        let c = 1.401155;
        let iv = Interval::new(-1.6, 1.6).unwrap();
        let f = Field::fit(|p| c - p[0] * p[0], &[48], &[iv]).unwrap();
        assert!((f.eval(&[0.0]).unwrap() - c).abs() < 1e-14);
    }

    #[test]
    fn identity_and_bilinear_fits() {
        let id = Field::fit(|p| p[0], &[1], &[unit()]).unwrap();
        assert!((id.coefficients()[1] - 1.0).abs() < 1e-15);
        assert!(id.coefficients()[0].abs() < 1e-15);
        let b = 0.01;
        let bl = Field::fit(|p| b * p[1], &[1, 1], &[unit(), unit()]).unwrap();
        assert!((bl.eval(&[0.4, 0.5]).unwrap() - 0.005).abs() < 1e-16);
        let dy = bl.differentiate(1).unwrap();
        assert!((dy.eval(&[-0.3, 0.9]).unwrap() - b).abs() < 1e-16);
    }

    #[test]
    fn z_derivative_of_z_free_field_vanishes() {
        let bx = vec![unit(), unit(), unit()];
        let e = Field::fit(|p| 0.01 * p[1] * (1.0 + p[0]), &[3, 3, 2], &bx).unwrap();
        let dz = e.differentiate(2).unwrap();
        assert!(dz.coefficients().iter().all(|c| c.abs() < 1e-16));
    }

    #[test]
    fn domain_margin() {
        let f = Field::fit(|p| p[0], &[1], &[unit()]).unwrap();
        assert!(f.eval(&[1.019]).is_ok());
        assert!(matches!(f.eval(&[1.05]), Err(Error::Domain { .. })));
    }

    #[test]
    fn rejects_non_finite_samples() {
        let r = Field::fit(|p| if p[0] > 0.5 { f64::NAN } else { 0.0 }, &[4], &[unit()]);
        assert!(matches!(r, Err(Error::Fit(_))));
    }

    #[test]
    fn invert_examples() {
        let br = Interval::new(0.0, 2.0).unwrap();
        let r = invert_monotone(|x| x * x * x, 8.0, br, 1e-12).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        let r = invert_monotone(|x| x, 0.37, br, 1e-14).unwrap();
        assert!((r - 0.37).abs() < 1e-14);
        let c = 1.401155;
        let br = Interval::new(0.2, 1.2).unwrap();
        let r = invert_monotone(|x| c - x * x, 0.5, br, 1e-13).unwrap();
        assert!((r - (c - 0.5f64).sqrt()).abs() < 1e-12);
        assert!((r - 0.94929).abs() < 1e-5);
    }

    #[test]
    fn invert_reports_bracket_error() {
        let br = Interval::new(0.0, 1.0).unwrap();
        assert!(matches!(invert_monotone(|x| x, 3.0, br, 1e-12), Err(Error::Bracket { .. })));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (t, w) = gauss_legendre(5);
        let s: f64 = t.iter().zip(w).map(|(t, w)| w * t.powi(9)).sum();
        assert!((s - 0.1).abs() < 1e-15);
        let wsum: f64 = w.iter().sum();
        assert!((wsum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tiny_increments_keep_relative_precision() {
        let iv = Interval::new(-1.6, 1.6).unwrap();
        let f = Field::fit(|p| 1.3 - p[0] * p[0], &[4], &[iv]).unwrap();
        let h = (0.5 + 1e-13) - 0.5;
        let inc = f.increment(&[0.5], 0, 0.5 + h);
        let exact = -(2.0 * 0.5 * h + h * h);
        assert!(((inc - exact) / exact).abs() < 1e-12, "{inc} {exact}");
        let dd = divided_difference(&f, 0.5 + h, 0.5);
        assert!((dd + 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_of_smooth_function_is_small() {
        let iv = Interval::new(-1.6, 1.6).unwrap();
        let f = Field::fit(|p| (0.5 * p[0]).exp(), &[24], &[iv]).unwrap();
        assert!(f.tail_ok());
        let g = Field::fit(|p| p[0].abs(), &[24], &[iv]).unwrap();
        assert!(!g.tail_ok());
    }

    #[test]
    fn json_round_trip() {
        let f = Field::fit(|p| p[0] * p[1], &[2, 3], &[unit(), unit()]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"domain\"") && s.contains("\"degrees\"") && s.contains("\"coefficients\""));
        let g: Field = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
    }
}
