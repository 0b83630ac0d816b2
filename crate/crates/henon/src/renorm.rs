//! Period-doubling renormalization `RF = Λ ∘ H ∘ F² ∘ H⁻¹ ∘ Λ⁻¹`.
//!
//! With `Λ⁻¹(x, y, z) = (x/s + p, y/s + p, z/s)` and
//! `H(x, y, z) = (f(x) − ε(x, y, z), y, z − δ(y, f⁻¹(y), 0))`, the map
//! `H ∘ F² ∘ H⁻¹` has the form `(G₁(X, Y, Z), X, G₃(X, Y, Z))`. The small
//! parts of the renormalized map are differences of `G₁` and `G₃` between two
//! inputs; they are propagated as exact increments through every link so that
//! they keep relative precision deep in the tower.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{Field, Interval};
use crate::maps::{default_box2, default_zaxis, HenonMap, Point, SplitField, Unimodal, DEFAULT_BUDGET};
use crate::universality::doubling::FEIGENBAUM_POINT;

/// Critical value of every renormalized unimodal part.
pub const CRITICAL_VALUE: f64 = FEIGENBAUM_POINT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub f_degree: usize,
    pub eps_degrees: [usize; 2],
    pub slope_degrees: [usize; 3],
    pub budget: f64,
    /// Largest accepted `|f_k(κ) − κλ|` for a level to count as renormalizable.
    pub indicator_cap: f64,
    pub recenter_iters: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            f_degree: 48,
            eps_degrees: [24, 24],
            slope_degrees: [16, 16, 7],
            budget: DEFAULT_BUDGET,
            indicator_cap: 0.25,
            recenter_iters: 4,
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        let degs = [self.f_degree, self.eps_degrees[0], self.eps_degrees[1]];
        if degs.iter().any(|&d| d < 2) || self.slope_degrees.iter().any(|&d| d < 1) {
            return Err(Error::Invalid("degrees must be at least 2 (1 for slopes)".into()));
        }
        if self.slope_degrees[2] % 2 == 0 {
            return Err(Error::Invalid("z-degree must be odd so no node sits at z = 0".into()));
        }
        if !(self.budget > 0.0) || !(self.indicator_cap > 0.0) {
            return Err(Error::Invalid("budget and indicator cap must be positive".into()));
        }
        Ok(())
    }
}

/// Values along `H ∘ F² ∘ H⁻¹` evaluated at `(X, Y, Z)`.
#[derive(Debug, Clone, Copy)]
pub struct Path {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// `f⁻¹(X)` on the right branch.
    pub v: f64,
    /// `f⁻¹(Y)` (spatial maps only).
    pub yinv: f64,
    pub zeta: f64,
    /// `u − v` where `u` is the first coordinate of `H⁻¹(X, Y, Z)`.
    pub shift: f64,
    pub u: f64,
    pub d1: f64,
    pub a: f64,
    pub d2: f64,
    pub g1: f64,
    pub g3: f64,
}

/// `G₁`, `G₃` differences between a path and its reference.
#[derive(Debug, Clone, Copy, Default)]
pub struct PathDelta {
    pub du: f64,
    pub dzeta: f64,
    pub dd1: f64,
    pub da: f64,
    pub dd2: f64,
    pub dg1: f64,
    pub dg3: f64,
}

const SOLVE_CAP: usize = 60;

/// Solves `h` from `f(b + h) − f(b) = rhs(h)` by fixed-point iteration.
fn solve_step<R: Fn(f64) -> f64>(f: &Unimodal, b: f64, rhs: R, what: &str) -> Result<f64> {
    let mut h = 0.0f64;
    let mut prev = f64::INFINITY;
    for _ in 0..SOLVE_CAP {
        let next = rhs(h) / f.divided(b, h);
        if !next.is_finite() {
            break;
        }
        let change = (next - h).abs();
        // Linear convergence ends in rounding-level oscillation.
        if change <= 4.0 * f64::EPSILON * next.abs() || (change >= prev && change <= 1e-12 * next.abs()) {
            return Ok(next);
        }
        prev = change;
        h = next;
    }
    Err(Error::SingularHorizontal(format!("{what} did not settle at {b}")))
}

/// The part of a map needed by the renormalization links.
pub struct Links<'a> {
    pub map: &'a HenonMap,
}

impl<'a> Links<'a> {
    pub fn new(map: &'a HenonMap) -> Self {
        Self { map }
    }

    #[inline]
    fn e(&self, p: Point) -> f64 {
        self.map.eps.value(p)
    }

    #[inline]
    fn d(&self, p: Point) -> f64 {
        self.map.delta.as_ref().map_or(0.0, |d| d.value(p))
    }

    #[inline]
    fn de(&self, p: Point, h: Point) -> f64 {
        self.map.eps.delta(p, h)
    }

    #[inline]
    fn dd(&self, p: Point, h: Point) -> f64 {
        self.map.delta.as_ref().map_or(0.0, |d| d.delta(p, h))
    }

    /// `δ(y, f⁻¹(y), 0)`, the z-shift of `H`.
    pub fn zshift(&self, y: f64) -> Result<(f64, f64)> {
        if !self.map.is_spatial() {
            return Ok((0.0, 0.0));
        }
        let yinv = self.map.f.inverse(y)?;
        Ok((yinv, self.d([y, yinv, 0.0])))
    }

    pub fn path(&self, x: f64, y: f64, z: f64) -> Result<Path> {
        let f = &self.map.f;
        let v = f.inverse(x)?;
        let (yinv, shift_z) = self.zshift(y)?;
        let zeta = z + shift_z;
        let shift = if self.map.eps.base.is_zero() && self.map.eps.is_planar() {
            0.0
        } else {
            solve_step(f, v, |h| self.e([v + h, y, zeta]), "horizontal inverse")?
        };
        let u = v + shift;
        let d1 = self.d([u, y, zeta]);
        let a = f.value(x) - self.e([x, u, d1]);
        let d2 = self.d([x, u, d1]);
        let g1 = f.value(a) - self.e([a, x, d2]);
        let g3 = self.dd([x, v, 0.0], [0.0, shift, d1]);
        Ok(Path { x, y, z, v, yinv, zeta, shift, u, d1, a, d2, g1, g3 })
    }

    /// Differences of the path at `(X, Y + dy, Z + dz)` from `r`.
    pub fn delta(&self, r: &Path, dy: f64, dz: f64) -> Result<PathDelta> {
        let f = &self.map.f;
        let spatial = self.map.is_spatial();
        let mut dzeta = dz;
        if spatial && dy != 0.0 {
            let dyinv = solve_step(f, r.yinv, |_| dy, "z-shift preimage")?;
            dzeta += self.dd([r.y, r.yinv, 0.0], [dy, dyinv, 0.0]);
        }
        let du = if self.map.eps.is_planar() && dy == 0.0 {
            0.0
        } else {
            solve_step(f, r.u, |h| self.de([r.u, r.y, r.zeta], [h, dy, dzeta]), "horizontal increment")?
        };
        let dd1 = if spatial { self.dd([r.u, r.y, r.zeta], [du, dy, dzeta]) } else { 0.0 };
        let da = -self.de([r.x, r.u, r.d1], [0.0, du, dd1]);
        let dd2 = if spatial { self.dd([r.x, r.u, r.d1], [0.0, du, dd1]) } else { 0.0 };
        let dg1 = f.divided(r.a, da) * da - self.de([r.a, r.x, r.d2], [da, 0.0, dd2]);
        Ok(PathDelta { du, dzeta, dd1, da, dd2, dg1, dg3: dd2 })
    }
}

/// One renormalization step with its affine data and diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenormStep {
    pub output: HenonMap,
    pub s: f64,
    pub p: f64,
    pub defect: f64,
}

/// `Λ⁻¹(w) = (x/s + p, y/s + p, z/s)`.
#[inline]
pub fn lambda_inverse(p: f64, s: f64, w: Point) -> Point {
    [w[0] / s + p, w[1] / s + p, w[2] / s]
}

#[inline]
pub fn lambda(p: f64, s: f64, w: Point) -> Point {
    [s * (w[0] - p), s * (w[1] - p), s * w[2]]
}

/// `H(w) = (f(x) − ε(w), y, z − δ(y, f⁻¹(y), 0))`.
pub fn horizontal(map: &HenonMap, w: Point) -> Result<Point> {
    let l = Links::new(map);
    let (_, zs) = l.zshift(w[1])?;
    Ok([map.f.value(w[0]) - map.eps.value(w), w[1], w[2] - zs])
}

/// `H⁻¹(w)`: the first coordinate solves `f(u) − ε(u, y, ζ) = x`.
pub fn horizontal_inverse(map: &HenonMap, w: Point) -> Result<Point> {
    let l = Links::new(map);
    let (_, zs) = l.zshift(w[1])?;
    let zeta = w[2] + zs;
    let v = map.f.inverse(w[0])?;
    let shift = solve_step(&map.f, v, |h| map.eps.value([v + h, w[1], zeta]), "horizontal inverse")?;
    Ok([v + shift, w[1], zeta])
}

/// `ψ_v(w) = H⁻¹(Λ⁻¹(w))`, the change of coordinates from level k+1 to k.
pub fn psi_v(map: &HenonMap, p: f64, s: f64, w: Point) -> Result<Point> {
    horizontal_inverse(map, lambda_inverse(p, s, w))
}

fn fit_f(l: &Links, p: f64, s: f64, degree: usize) -> Result<Field> {
    let iv = default_box2()[0];
    let nodes = iv.nodes(degree + 1);
    let vals: Result<Vec<f64>> = nodes.iter().map(|&x| Ok(s * (l.path(x / s + p, p, 0.0)?.g1 - p))).collect();
    Field::from_values(vec![iv], vec![degree], vals?)
}

fn scale_for(l: &Links, p: f64) -> Result<f64> {
    let g = l.path(p, p, 0.0)?.g1;
    Ok(CRITICAL_VALUE / (g - p))
}

/// Renormalizes `map` once. `p0` seeds the translation (critical point of
/// `f` when `None`).
pub fn renormalize_with(map: &HenonMap, settings: &Settings, p0: Option<f64>) -> Result<RenormStep> {
    let l = Links::new(map);
    let mut p = p0.unwrap_or(map.f.critical());
    let mut s = scale_for(&l, p)?;
    let mut f1 = None;
    for _ in 0..settings.recenter_iters.max(1) {
        if !(s < -1.0) || !s.is_finite() {
            return Err(Error::NotRenormalizable(format!("scaling s = {s} is not < −1")));
        }
        let uf = Unimodal::new(fit_f(&l, p, s, settings.f_degree)?)
            .map_err(|e| Error::NotRenormalizable(format!("renormalized f: {e}")))?;
        let c = uf.critical();
        f1 = Some(uf);
        if c.abs() < 1e-15 {
            break;
        }
        p += c / s;
        s = scale_for(&l, p)?;
        f1 = None;
    }
    let f1 = match f1 {
        Some(f) => f,
        None => Unimodal::new(fit_f(&l, p, s, settings.f_degree)?)
            .map_err(|e| Error::NotRenormalizable(format!("renormalized f: {e}")))?,
    };
    if !(s < -1.0) {
        return Err(Error::NotRenormalizable(format!("scaling s = {s} is not < −1")));
    }

    let bx = default_box2();
    let [dx, dy] = settings.eps_degrees;
    let xs = bx[0].nodes(dx + 1);
    let ys = bx[1].nodes(dy + 1);
    let spatial = map.is_spatial();

    // ε base: s (G₁(X, p, 0) − G₁(X, Y, 0)); δ base: s G₃(X, Y, 0).
    let rows: Vec<Result<(Vec<f64>, Vec<f64>)>> = xs
        .par_iter()
        .map(|&x| {
            let xx = x / s + p;
            let r = l.path(xx, p, 0.0)?;
            let mut er = Vec::with_capacity(ys.len());
            let mut dr = Vec::with_capacity(ys.len());
            for &y in &ys {
                let d = l.delta(&r, y / s, 0.0)?;
                er.push(-s * d.dg1);
                if spatial {
                    let rp = l.path(xx, y / s + p, 0.0)?;
                    dr.push(s * rp.g3);
                }
            }
            Ok((er, dr))
        })
        .collect();
    let mut eps_vals = Vec::with_capacity(xs.len() * ys.len());
    let mut del_vals = Vec::with_capacity(xs.len() * ys.len());
    for row in rows {
        let (e, d) = row?;
        eps_vals.extend(e);
        del_vals.extend(d);
    }
    let eps_base = Field::from_values(bx.to_vec(), vec![dx, dy], eps_vals)?;

    let output = if !spatial {
        HenonMap::planar(f1, eps_base)?
    } else {
        let del_base = Field::from_values(bx.to_vec(), vec![dx, dy], del_vals)?;
        let want_eps = !map.eps.is_planar();
        let want_del = want_eps || map.delta.as_ref().is_some_and(|d| !d.is_planar());
        let (eps_slope, del_slope) = if want_eps || want_del {
            let (es, ds) = fit_slopes(&l, p, s, settings.slope_degrees, want_eps)?;
            (es, if want_del { Some(ds) } else { None })
        } else {
            (None, None)
        };
        HenonMap::spatial(f1, SplitField::new(eps_base, eps_slope)?, SplitField::new(del_base, del_slope)?)?
    };

    let e = output.eps_norm();
    if e > settings.budget {
        return Err(Error::NotRenormalizable(format!("|eps| = {e:e} exceeds budget")));
    }
    let d = output.delta_norm();
    if d > settings.budget {
        return Err(Error::NotRenormalizable(format!("|delta| = {d:e} exceeds budget")));
    }
    let defect = conjugacy_defect(map, &output, p, s, 200, 0x5eed)?;
    Ok(RenormStep { output, s, p, defect })
}

fn fit_slopes(l: &Links, p: f64, s: f64, degs: [usize; 3], want_eps: bool) -> Result<(Option<Field>, Field)> {
    let bx = default_box2();
    let zax = default_zaxis();
    let xs = bx[0].nodes(degs[0] + 1);
    let ys = bx[1].nodes(degs[1] + 1);
    let zs = zax.nodes(degs[2] + 1);
    let cells: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let vals: Vec<Result<Vec<(f64, f64)>>> = cells
        .par_iter()
        .map(|&(x, y)| {
            let r = l.path(x / s + p, y / s + p, 0.0)?;
            zs.iter()
                .map(|&z| {
                    let d = l.delta(&r, 0.0, z / s)?;
                    Ok((-s * d.dg1 / z, s * d.dg3 / z))
                })
                .collect()
        })
        .collect();
    let mut ev = Vec::with_capacity(cells.len() * zs.len());
    let mut dv = Vec::with_capacity(cells.len() * zs.len());
    for row in vals {
        for (e, d) in row? {
            ev.push(e);
            dv.push(d);
        }
    }
    let dom = vec![bx[0], bx[1], zax];
    let es = if want_eps { Some(Field::from_values(dom.clone(), degs.to_vec(), ev)?) } else { None };
    Ok((es, Field::from_values(dom, degs.to_vec(), dv)?))
}

pub fn renormalize(map: &HenonMap, settings: &Settings) -> Result<RenormStep> {
    renormalize_with(map, settings, None)
}

/// Deterministic sample points of the reference box.
pub fn sample_points(dims: usize, count: usize, seed: u64, shrink: f64) -> Vec<Point> {
    let bx = default_box2();
    let z = default_zaxis();
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..count)
        .map(|_| {
            let x = bx[0].from_unit(shrink * (2.0 * next() - 1.0));
            let y = bx[1].from_unit(shrink * (2.0 * next() - 1.0));
            let zz = if dims == 3 { z.from_unit(shrink * (2.0 * next() - 1.0)) } else { 0.0 };
            [x, y, zz]
        })
        .collect()
}

/// `sup |ψ(RF(w)) − F²(ψ(w))|` over sample points with `ψ = H⁻¹ ∘ Λ⁻¹`.
pub fn conjugacy_defect(
    map: &HenonMap,
    out: &HenonMap,
    p: f64,
    s: f64,
    count: usize,
    seed: u64,
) -> Result<f64> {
    let pts = sample_points(map.dims(), count, seed, 0.9);
    let mut worst = 0.0f64;
    for w in pts {
        let image = out.step(w);
        if !out.contains(image) {
            continue;
        }
        let (Ok(lhs), Ok(q)) = (psi_v(map, p, s, image), psi_v(map, p, s, w)) else {
            continue;
        };
        let rhs = map.step(map.step(q));
        for a in 0..map.dims() {
            worst = worst.max((lhs[a] - rhs[a]).abs());
        }
    }
    Ok(worst)
}

/// `|f(κ) − κλ|`-type indicator: distance of the critical orbit from the
/// doubling fixed point's, signed.
pub fn indicator(map: &HenonMap, lambda: f64) -> f64 {
    map.f.value(CRITICAL_VALUE) - CRITICAL_VALUE * lambda
}

/// Renormalization tower `F_0 … F_N`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenormTower {
    pub maps: Vec<HenonMap>,
    /// `steps[k]` carries `s_k`, `p_k` relating level k to level k+1.
    pub steps: Vec<StepData>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepData {
    pub s: f64,
    pub p: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    pub s: Option<f64>,
    pub p: Option<f64>,
    pub eps_norm: f64,
    pub delta_norm: f64,
    pub defect: Option<f64>,
}

impl RenormTower {
    pub fn depth(&self) -> usize {
        self.maps.len() - 1
    }

    pub fn map(&self, k: usize) -> &HenonMap {
        &self.maps[k]
    }

    pub fn summary(&self) -> Vec<LevelSummary> {
        self.maps
            .iter()
            .enumerate()
            .map(|(k, m)| LevelSummary {
                level: k,
                s: self.steps.get(k).map(|d| d.s),
                p: self.steps.get(k).map(|d| d.p),
                eps_norm: m.eps_norm(),
                delta_norm: m.delta_norm(),
                defect: self.steps.get(k).map(|d| d.defect),
            })
            .collect()
    }
}

/// Why a tower stopped before the requested depth.
#[derive(Debug, Clone)]
pub struct TowerReport {
    pub tower: RenormTower,
    pub stopped: Option<Error>,
}

/// Renormalizes up to `depth` times, stopping at the first failure.
pub fn build_tower(map: &HenonMap, depth: usize, settings: &Settings) -> TowerReport {
    let lambda = crate::universality::doubling::standard_lambda();
    let mut maps = vec![map.clone()];
    let mut steps = Vec::new();
    let mut stopped = None;
    let mut p_seed = None;
    for _ in 0..depth {
        let cur = maps.last().expect("nonempty");
        match renormalize_with(cur, settings, p_seed) {
            Ok(step) => {
                let ind = indicator(&step.output, lambda);
                if ind.abs() > settings.indicator_cap {
                    stopped = Some(Error::NotRenormalizable(format!(
                        "critical orbit indicator {ind:.3e} above cap"
                    )));
                    break;
                }
                p_seed = Some(step.p);
                steps.push(StepData { s: step.s, p: step.p, defect: step.defect });
                maps.push(step.output);
            }
            Err(e) => {
                stopped = Some(e);
                break;
            }
        }
    }
    TowerReport { tower: RenormTower { maps, steps }, stopped }
}

pub fn tower(map: &HenonMap, depth: usize, settings: &Settings) -> Result<RenormTower> {
    let rep = build_tower(map, depth, settings);
    match rep.stopped {
        Some(e) if rep.tower.depth() < depth => Err(e),
        _ => Ok(rep.tower),
    }
}

/// Largest `N ≤ cap` with levels `0..=N` all renormalizable.
pub fn renorm_depth(map: &HenonMap, cap: usize, settings: &Settings) -> usize {
    build_tower(map, cap, settings).tower.depth()
}

/// One-dimensional doubling operator `Rf(x) = s (f(f(x/s + p)) − p)`.
pub fn renormalize_unimodal(f: &Unimodal, degree: usize) -> Result<(Unimodal, f64, f64)> {
    let iv = f.domain();
    let mut p = f.critical();
    let mut s = CRITICAL_VALUE / (f.value(f.value(p)) - p);
    for _ in 0..4 {
        let g = Field::fit(|q| s * (f.value(f.value(q[0] / s + p)) - p), &[degree], &[iv])?;
        let u = Unimodal::new(g)?;
        if u.critical().abs() < 1e-15 {
            return Ok((u, s, p));
        }
        p += u.critical() / s;
        s = CRITICAL_VALUE / (f.value(f.value(p)) - p);
    }
    let g = Field::fit(|q| s * (f.value(f.value(q[0] / s + p)) - p), &[degree], &[iv])?;
    Ok((Unimodal::new(g)?, s, p))
}

/// A one-parameter family of maps indexed by `c`.
pub trait Family: Sync {
    fn build(&self, c: f64) -> Result<HenonMap>;
}

impl<F: Fn(f64) -> Result<HenonMap> + Sync> Family for F {
    fn build(&self, c: f64) -> Result<HenonMap> {
        self(c)
    }
}

/// Result of [`tune_parameter`].
#[derive(Debug, Clone)]
pub struct Tuned {
    pub c: f64,
    pub tower: RenormTower,
}

/// Finds `c` with `renorm_depth ≥ n` by driving the level-k indicator
/// `f_k(κ) − κλ` to zero level by level (secant with bisection fallback).
pub fn tune_parameter<F: Family>(family: &F, c0: f64, n: usize, settings: &Settings) -> Result<Tuned> {
    let lambda = crate::universality::doubling::standard_lambda();
    let delta: f64 = 4.669_201_609_102_99;
    let mut c = c0;
    let eval = |c: f64, k: usize| -> Result<(f64, RenormTower)> {
        let m = family.build(c)?;
        let rep = build_tower_unchecked(&m, k, settings);
        if rep.tower.depth() < k {
            return Err(rep.stopped.unwrap_or_else(|| Error::Tuning("short tower".into())));
        }
        Ok((indicator(rep.tower.maps.last().expect("nonempty"), lambda), rep.tower))
    };
    let mut last = None;
    for k in 1..=n {
        let h0 = 0.02 * delta.powi(-(k as i32));
        let (mut a, (mut fa, ta)) = (c, eval(c, k)?);
        let mut best = (fa.abs(), c, ta);
        let mut b = c + h0;
        let mut fb = match eval(b, k) {
            Ok((v, t)) => {
                if v.abs() < best.0 {
                    best = (v.abs(), b, t);
                }
                v
            }
            Err(_) => {
                b = c - h0;
                let (v, t) = eval(b, k)?;
                if v.abs() < best.0 {
                    best = (v.abs(), b, t);
                }
                v
            }
        };
        let tol = 1e-13 * delta.powi(k as i32).min(1e3);
        for _ in 0..40 {
            if best.0 < tol || fb == fa {
                break;
            }
            let reach = 4.0 * (b - a).abs().max(h0);
            let step = -fb * (b - a) / (fb - fa);
            let nc = if step.is_finite() { b + step.clamp(-reach, reach) } else { b + h0 };
            match eval(nc, k) {
                Ok((v, t)) => {
                    if v.abs() < best.0 {
                        best = (v.abs(), nc, t);
                    }
                    a = b;
                    fa = fb;
                    b = nc;
                    fb = v;
                }
                Err(_) => {
                    b = 0.5 * (b + nc);
                    let (v, t) = eval(b, k)?;
                    if v.abs() < best.0 {
                        best = (v.abs(), b, t);
                    }
                    fb = v;
                }
            }
            if (b - a).abs() < 1e-16 * c.abs() {
                break;
            }
        }
        c = best.1;
        last = Some(best.2);
    }
    let tower = match last {
        Some(t) => t,
        None => family.build(c).map(|m| RenormTower { maps: vec![m], steps: vec![] })?,
    };
    Ok(Tuned { c, tower })
}

/// Like [`build_tower`] but without the indicator cap, for tuning.
fn build_tower_unchecked(map: &HenonMap, depth: usize, settings: &Settings) -> TowerReport {
    let mut relaxed = settings.clone();
    relaxed.indicator_cap = f64::INFINITY;
    build_tower(map, depth, &relaxed)
}

/// Unimodal field on the default x-interval.
pub fn unimodal_on_box<G: Fn(f64) -> f64>(g: G, degree: usize) -> Result<Unimodal> {
    let iv: Interval = default_box2()[0];
    Unimodal::new(Field::fit(|p| g(p[0]), &[degree], &[iv])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{family_2d, toy_model};
    use crate::universality::doubling::DoublingFixedPoint;

    #[test]
    fn fixed_point_is_fixed() {
        let g = DoublingFixedPoint::standard().unwrap();
        let f = unimodal_on_box(|x| g.unimodal(CRITICAL_VALUE, x), 48).unwrap();
        let (rf, s, p) = renormalize_unimodal(&f, 48).unwrap();
        assert!((s - 1.0 / g.lambda()).abs() < 1e-9);
        assert!(p.abs() < 1e-12);
        let worst = default_box2()[0]
            .linspace(101)
            .iter()
            .map(|&x| (rf.value(x) - f.value(x)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn degenerate_map_stays_degenerate() {
        let m = family_2d(1.4, 0.0, DEFAULT_BUDGET).unwrap();
        let st = renormalize(&m, &Settings::default()).unwrap();
        assert!(st.output.eps.base.is_zero());
        let (rf, _, _) = renormalize_unimodal(&m.f, 48).unwrap();
        for x in [-1.0, 0.0, 0.7] {
            assert!((rf.value(x) - st.output.f.value(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn horizontal_round_trip() {
        let m = toy_model(1.4, 1e-2, 1e-3, 1e-3, DEFAULT_BUDGET).unwrap();
        for w in sample_points(3, 50, 7, 0.3) {
            let w = [w[0], w[1], w[2]];
            let q = horizontal_inverse(&m, w).unwrap();
            let back = horizontal(&m, q).unwrap();
            for a in 0..3 {
                assert!((back[a] - w[a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn planar_step_has_small_defect() {
        let m = family_2d(1.4, 1e-2, DEFAULT_BUDGET).unwrap();
        let st = renormalize(&m, &Settings::default()).unwrap();
        assert!(st.defect < 1e-8, "{}", st.defect);
        assert!(st.s < -1.0);
        let e = st.output.eps_norm();
        assert!(e > 1e-6 && e < 1e-2, "{e}");
    }
}
