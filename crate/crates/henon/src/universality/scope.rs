//! Tip-centered scope maps `Ψ^n_k(w) = Ψ^n_{k,v}(w + τ_n) − τ_k` split into
//! the affine factors `(α, σ, t, u, d)` and the residuals `S`, `R`.
//!
//! The residuals are normalized to vanish to first order at the origin, so
//! `R'(0) = 0` and `d` is read directly off the derivative.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::cantor::{Hierarchy, Symbol, Word};
use crate::error::{Error, Result};
use crate::funcspace::{Field, Interval};
use crate::maps::{Mat3, Point};

use super::average_jacobian;
use super::oracle::UniversalProfile;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AffinePart {
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub t: f64,
    pub u: f64,
    pub d: f64,
    pub tip_k: Point,
    pub tip_n: Point,
    /// `DΨ^n_k(0)`.
    #[serde(skip)]
    pub jacobian: Mat3,
}

struct Centered<'a> {
    h: &'a Hierarchy,
    k: usize,
    word: Word,
    tip_k: Point,
    tip_n: Point,
}

impl Centered<'_> {
    fn eval(&self, w: Point) -> Result<Point> {
        let q = self.h.scope(self.k, &self.word, add(w, self.tip_n))?;
        Ok(sub(q, self.tip_k))
    }
}

fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn check_levels(h: &Hierarchy, k: usize, n: usize) -> Result<()> {
    if k >= n || n > h.depth() {
        return Err(Error::Scope(format!("need k < n ≤ depth, got k = {k}, n = {n}, depth {}", h.depth())));
    }
    Ok(())
}

fn centered(h: &Hierarchy, k: usize, n: usize) -> Result<Centered<'_>> {
    check_levels(h, k, n)?;
    let tips = h.tips()?;
    Ok(Centered { h, k, word: Word::repeat(Symbol::V, n - k), tip_k: tips[k], tip_n: tips[n] })
}

fn affine_from(c: &Centered<'_>, n: usize) -> Result<AffinePart> {
    let (_, j) = c.h.scope_jet(c.k, &c.word, c.tip_n)?;
    let sigma = j[1][1];
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(Error::Scope("degenerate vertical scaling".into()));
    }
    Ok(AffinePart {
        k: c.k,
        n,
        alpha: j[0][0],
        sigma,
        t: j[0][1] / sigma,
        u: j[0][2] / sigma,
        d: j[2][1] / sigma,
        tip_k: c.tip_k,
        tip_n: c.tip_n,
        jacobian: j,
    })
}

/// Affine factors of `Ψ^n_k` at the origin.
pub fn affine_part(h: &Hierarchy, k: usize, n: usize) -> Result<AffinePart> {
    let c = centered(h, k, n)?;
    affine_from(&c, n)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScopeDecomposition {
    #[serde(flatten)]
    pub affine: AffinePart,
    /// `S^n_k` over the tip-centered level-`n` box.
    #[serde(skip)]
    pub nonlinear: Field,
    /// `R^n_k(y)`; absent for planar towers.
    #[serde(skip)]
    pub vertical: Option<Field>,
    pub nonlinear_c1: f64,
    pub vertical_c1: f64,
    /// `|α/σ|`, the size of the first-order mixing left in `t` and `u`.
    pub mixing: f64,
}

pub const S_DEGREES: [usize; 3] = [20, 10, 6];
pub const R_DEGREE: usize = 16;

fn c1_norm(f: &Field) -> Result<f64> {
    let mut n = f.sup_norm();
    for axis in 0..f.dims() {
        n = n.max(f.differentiate(axis)?.sup_norm());
    }
    Ok(n)
}

fn centered_box(h: &Hierarchy, tip: Point) -> Result<Vec<Interval>> {
    h.reference_box()
        .iter()
        .enumerate()
        .map(|(a, iv)| Interval::new(iv.lo - tip[a], iv.hi - tip[a]))
        .collect()
}

pub fn scope_decomposition(h: &Hierarchy, k: usize, n: usize) -> Result<ScopeDecomposition> {
    let c = centered(h, k, n)?;
    let aff = affine_from(&c, n)?;
    let dims = h.dims();
    let dom = centered_box(h, c.tip_n)?;
    let (alpha, sigma) = (aff.alpha, aff.sigma);

    let vertical = if dims == 3 {
        Some(Field::try_fit(
            |p| Ok(c.eval([0.0, p[0], 0.0])?[2] / sigma - aff.d * p[0]),
            &[R_DEGREE],
            &dom[1..2],
        )?)
    } else {
        None
    };
    let r_at = |y: f64| vertical.as_ref().map_or(0.0, |r| r.value(&[y]));
    let degrees = &S_DEGREES[..dims];
    let nonlinear = Field::try_fit(
        |p| {
            let w = [p[0], p[1], if dims == 3 { p[2] } else { 0.0 }];
            let q = c.eval(w)?;
            Ok((q[0] - aff.t * sigma * w[1] - aff.u * sigma * (w[2] + r_at(w[1]))) / alpha - w[0])
        },
        degrees,
        &dom,
    )?;
    let nonlinear_c1 = c1_norm(&nonlinear)?;
    let vertical_c1 = match &vertical {
        Some(r) => c1_norm(r)?,
        None => 0.0,
    };
    Ok(ScopeDecomposition {
        mixing: (alpha / sigma).abs(),
        affine: aff,
        nonlinear,
        vertical,
        nonlinear_c1,
        vertical_c1,
    })
}

impl ScopeDecomposition {
    /// Affine factors applied to `(x + S(w), y, z + R(y))`.
    pub fn reconstruct(&self, w: Point) -> Point {
        let a = &self.affine;
        let dims = self.nonlinear.dims();
        let s = self.nonlinear.value(&w[..dims]);
        let r = self.vertical.as_ref().map_or(0.0, |r| r.value(&[w[1]]));
        let x = w[0] + s;
        let z = if dims == 3 { w[2] + r } else { 0.0 };
        [
            a.alpha * x + a.t * a.sigma * w[1] + a.u * a.sigma * z,
            a.sigma * w[1],
            if dims == 3 { a.d * a.sigma * w[1] + a.sigma * z } else { 0.0 },
        ]
    }

    /// Largest gap between [`Self::reconstruct`] and `Ψ^n_k` over `points`
    /// given in tip-centered level-`n` coordinates.
    pub fn reconstruction_error(&self, h: &Hierarchy, points: &[Point]) -> Result<f64> {
        let c = centered(h, self.affine.k, self.affine.n)?;
        let errs: Result<Vec<f64>> = points
            .par_iter()
            .map(|&w| {
                let exact = c.eval(w)?;
                let approx = self.reconstruct(w);
                Ok((0..3).map(|a| (exact[a] - approx[a]).abs()).fold(0.0, f64::max))
            })
            .collect();
        Ok(errs?.into_iter().fold(0.0, f64::max))
    }
}

/// Least-squares fit of `x + S^n_0` to `v(x) + q₁y² + q₂yz + q₃z²`.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoteReport {
    pub n: usize,
    pub q: [f64; 3],
    pub residual: f64,
    pub rms: f64,
    /// `sup |v' − v_*'|` on the sample abscissae.
    pub drift: f64,
    #[serde(skip)]
    pub profile: Field,
}

pub const ASYMPTOTE_DEGREE: usize = 12;

pub fn nonlinear_asymptote(h: &Hierarchy, n: usize) -> Result<AsymptoteReport> {
    let c = centered(h, 0, n)?;
    let aff = affine_from(&c, n)?;
    let dims = h.dims();
    let dom = centered_box(h, c.tip_n)?;
    let xs = dom[0].nodes(2 * ASYMPTOTE_DEGREE + 1);
    let ys = dom[1].linspace(7);
    let zs = if dims == 3 { dom[2].linspace(5) } else { vec![0.0] };
    let mut pts: Vec<Point> = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &x in &xs {
        for &y in &ys {
            for &z in &zs {
                pts.push([x, y, z]);
            }
        }
    }
    let (alpha, sigma) = (aff.alpha, aff.sigma);
    let vals: Result<Vec<f64>> = pts
        .par_iter()
        .map(|&w| {
            let q = c.eval(w)?;
            let r = if dims == 3 { c.eval([0.0, w[1], 0.0])?[2] / sigma - aff.d * w[1] } else { 0.0 };
            Ok((q[0] - aff.t * sigma * w[1] - aff.u * sigma * (w[2] + r)) / alpha)
        })
        .collect();
    let vals = vals?;
    let nq = if dims == 3 { 3 } else { 1 };
    let cols = ASYMPTOTE_DEGREE + 1 + nq;
    let mut a = DMatrix::zeros(pts.len(), cols);
    for (i, w) in pts.iter().enumerate() {
        let t = dom[0].to_unit(w[0]);
        let (mut t0, mut t1) = (1.0, t);
        for j in 0..=ASYMPTOTE_DEGREE {
            a[(i, j)] = if j == 0 { 1.0 } else { t1 };
            if j > 0 {
                let t2 = 2.0 * t * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
        }
        let base = ASYMPTOTE_DEGREE + 1;
        a[(i, base)] = w[1] * w[1];
        if dims == 3 {
            a[(i, base + 1)] = w[1] * w[2];
            a[(i, base + 2)] = w[2] * w[2];
        }
    }
    let rhs = DVector::from_vec(vals.clone());
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Convergence(format!("asymptote least squares: {e}")))?;
    let fitted = &a * &sol;
    let res: Vec<f64> = (0..pts.len()).map(|i| vals[i] - fitted[i]).collect();
    let residual = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let rms = (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt();
    let base = ASYMPTOTE_DEGREE + 1;
    let q = if dims == 3 { [sol[base], sol[base + 1], sol[base + 2]] } else { [sol[base], 0.0, 0.0] };
    let profile =
        Field::from_coefficients(vec![dom[0]], vec![ASYMPTOTE_DEGREE], sol.as_slice()[..base].to_vec())?;
    let oracle = UniversalProfile::new()?;
    let mut drift = 0.0f64;
    for &x in &xs {
        let v = profile.partial(&[x], 0);
        let target = oracle.linearizer_slope(x + c.tip_n[0])?;
        drift = drift.max((v - target).abs());
    }
    Ok(AsymptoteReport { n, q, residual, rms, drift, profile })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TiltRow {
    pub k: usize,
    pub t: f64,
    pub u: f64,
    pub d: f64,
    /// `b^{2^k}`.
    pub b_power: f64,
    /// `t_{k+1,k} / (−b^{2^k})`.
    pub ratio: f64,
}

/// Tilts of the one-step scope maps against `−b^{2^k}` for `k = 1..=k_max`.
pub fn tilt_scaling(h: &Hierarchy, k_max: usize) -> Result<Vec<TiltRow>> {
    if k_max + 1 > h.depth() {
        return Err(Error::Scope(format!("tilt table to k = {k_max} needs depth {}", k_max + 1)));
    }
    let avg = average_jacobian(h, h.depth())?;
    (1..=k_max)
        .map(|k| {
            let b_power = avg.log_power(k)?.exp();
            let a = affine_part(h, k, k + 1)?;
            Ok(TiltRow { k, t: a.t, u: a.u, d: a.d, b_power, ratio: a.t / -b_power })
        })
        .collect()
}
