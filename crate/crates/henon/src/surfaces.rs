//! The locally invariant surface `z = ξ(x, y)` of a three-dimensional map,
//! its rescalings to deeper levels and the planar map it carries.
//!
//! At level 0 the surface is stored in preimage coordinates: `Ξ(a, b)` is the
//! height over `F_xy(a, b, ·)`. The height over an arbitrary point is found by
//! solving for its y-preimage; past the box edge the preimage and the chart
//! continue to first order, so the graph is defined and C¹ on the whole box
//! and exact on the attracting strip `F_xy(box)`. Deeper
//! levels carry ordinary graphs obtained by pulling back through the scope
//! maps.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::cantor::{cantor_sample, measure_integrate, Hierarchy, Symbol, Word};
use crate::error::{Error, Result};
use crate::funcspace::{invert_monotone, Field, Interval};
use crate::maps::{default_box2, HenonMap, Point};
use crate::renorm::{horizontal_inverse, lambda_inverse, renormalize_with, sample_points, Settings};
use crate::universality::{affine_part, average_jacobian, UniversalProfile};

pub const CHART_DEGREES: [usize; 2] = [32, 16];
pub const GRAPH_DEGREES: [usize; 2] = [12, 12];
/// Smallest `∂_yε` for which the y-preimage counts as well conditioned.
pub const CONDITION_FLOOR: f64 = 1e-8;
/// Nesting depth of preimage solves when ε depends on z.
const PREIMAGE_DEPTH: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct SplittingReport {
    /// `sup ‖D‖ / m(A)`.
    pub dominance: f64,
    /// `sup ‖B‖‖C‖ / (m(A) m(D))`.
    pub coupling: f64,
    /// `sup ‖D‖ / m(A)^r`.
    pub margin: f64,
    pub r: f64,
    pub samples: usize,
    /// Samples where `A` is singular; they are left out of the suprema.
    pub singular: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Block norms of `DF = [[A, B], [C, D]]` at each sample.
pub fn splitting_diagnostic(map: &HenonMap, samples: &[Point], r: f64) -> Result<SplittingReport> {
    if !map.is_spatial() {
        return Err(Error::Invalid("splitting needs a three-dimensional map".into()));
    }
    if !(r >= 1.0) {
        return Err(Error::Invalid(format!("domination exponent r = {r} must be ≥ 1")));
    }
    let mut rep = SplittingReport { dominance: 0.0, coupling: 0.0, margin: 0.0, r, samples: 0, singular: 0 };
    for &p in samples {
        if !map.contains(p) {
            return Err(Error::Domain { axis: 0, point: p.to_vec() });
        }
        let m = map.derivative(p);
        let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
        let det = (a * d - b * c).abs();
        let fro = a * a + b * b + c * c + d * d;
        let smax = (0.5 * (fro + ((fro * fro - 4.0 * det * det).max(0.0)).sqrt())).sqrt();
        rep.samples += 1;
        if det == 0.0 || smax == 0.0 {
            rep.singular += 1;
            continue;
        }
        let m_a = det / smax;
        let nb = m[0][2].abs();
        let nc = m[2][0].hypot(m[2][1]);
        let nd = m[2][2].abs();
        rep.dominance = rep.dominance.max(nd / m_a);
        rep.coupling = rep.coupling.max(ratio(nb * nc, m_a * nd));
        rep.margin = rep.margin.max(nd / m_a.powf(r));
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub enum Height {
    /// `Ξ(a, b)`, the height over `F_xy(a, b)`, with the map it refers to.
    Chart { map: HenonMap, field: Field },
    /// `ξ(x, y)` directly.
    Graph(Field),
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceGraph {
    pub level: usize,
    pub height: Height,
    /// Invariance defect over attracting samples (0 for pulled-back graphs).
    pub defect: f64,
    /// Sup change of the chart per transform iteration.
    pub changes: Vec<f64>,
    /// Sup change of the chart's b-derivative per iteration.
    pub slope_changes: Vec<f64>,
}

fn chart_height(map: &HenonMap, chart: &Field, p: [f64; 2], depth: usize) -> Result<f64> {
    let a = p[1];
    let target = map.f.value(a) - p[0];
    let planar = map.eps.is_planar();
    let g = |yy: f64| {
        let z = if planar || depth == 0 {
            0.0
        } else {
            chart_height(map, chart, [a, yy], depth - 1).unwrap_or(0.0)
        };
        map.eps.value([a, yy, z])
    };
    let br = map.bbox[1].inflate(0.02);
    let (lo, hi) = (g(br.lo), g(br.hi));
    // Off the strip the preimage and the chart continue to first order from
    // the nearest edge, which keeps the height C¹.
    let edge = if target <= lo {
        Some((br.lo, lo))
    } else if target >= hi {
        Some((br.hi, hi))
    } else {
        None
    };
    if let Some((ye, ge)) = edge {
        let h = 1e-4 * br.width();
        let slope = (g(ye + h) - g(ye - h)) / (2.0 * h);
        let dy = (target - ge) / slope;
        if !dy.is_finite() {
            return Err(Error::Surface(format!("flat ε at y = {ye} over ({}, {})", p[0], p[1])));
        }
        return Ok(chart.value(&[a, ye]) + chart.partial(&[a, ye], 1) * dy);
    }
    let tol = 1e-15 * (lo.abs() + hi.abs()) + f64::MIN_POSITIVE;
    let y = invert_monotone(g, target, br, tol)
        .map_err(|e| Error::Surface(format!("y-preimage of ({}, {}): {e}", p[0], p[1])))?;
    Ok(chart.value(&[a, y]))
}

impl SurfaceGraph {
    pub fn graph(level: usize, field: Field) -> Self {
        Self { level, height: Height::Graph(field), defect: 0.0, changes: vec![], slope_changes: vec![] }
    }

    pub fn height_at(&self, x: f64, y: f64) -> Result<f64> {
        match &self.height {
            Height::Chart { map, field } => chart_height(map, field, [x, y], PREIMAGE_DEPTH),
            Height::Graph(f) => Ok(f.value(&[x, y])),
        }
    }

    /// Central-difference gradient of the height.
    pub fn gradient_at(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        if let Height::Graph(f) = &self.height {
            return Ok([f.partial(&[x, y], 0), f.partial(&[x, y], 1)]);
        }
        let h = 1e-6;
        let gx = (self.height_at(x + h, y)? - self.height_at(x - h, y)?) / (2.0 * h);
        let gy = (self.height_at(x, y + h)? - self.height_at(x, y - h)?) / (2.0 * h);
        Ok([gx, gy])
    }

    /// `ξ` refit as a field over `domain`.
    pub fn export(&self, domain: &[Interval], degrees: &[usize]) -> Result<Field> {
        Field::try_fit(|p| self.height_at(p[0], p[1]), degrees, domain)
    }
}

fn conditioning(map: &HenonMap) -> Result<()> {
    let bx = &map.bbox;
    for x in bx[0].linspace(9) {
        for y in bx[1].linspace(9) {
            let ey = map.eps.partial([x, y, 0.0], 1);
            if ey < CONDITION_FLOOR {
                return Err(Error::Surface(format!(
                    "ill-conditioned y-preimage: ∂_yε = {ey:e} at ({x}, {y})"
                )));
            }
        }
    }
    Ok(())
}

fn grid_changes(next: &Field, prev: &Field) -> (f64, f64) {
    let nodes = Field::grid(next.domain(), next.degrees());
    let mut c0 = 0.0f64;
    let mut c1 = 0.0f64;
    for p in &nodes {
        c0 = c0.max((next.value(p) - prev.value(p)).abs());
        c1 = c1.max((next.partial(p, 1) - prev.partial(p, 1)).abs());
    }
    (c0, c1)
}

/// Attracting-strip samples: second images of a grid, kept when the image
/// stays in the box.
fn attracting_samples(s: &SurfaceGraph, map: &HenonMap) -> Result<Vec<[f64; 2]>> {
    let bx = &map.bbox;
    let mut out = Vec::new();
    for x in bx[0].inflate(-0.05).linspace(15) {
        for y in bx[1].inflate(-0.05).linspace(15) {
            let mut p = [x, y];
            let mut ok = true;
            for _ in 0..2 {
                let z = s.height_at(p[0], p[1])?;
                let q = map.step([p[0], p[1], z]);
                if !(bx[0].contains(q[0]) && bx[1].contains(q[1])) {
                    ok = false;
                    break;
                }
                p = [q[0], q[1]];
            }
            if ok {
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// `max |δ(p, ξ(p)) − ξ(F_ξ(p))|` over attracting samples.
pub fn invariance_defect(s: &SurfaceGraph, map: &HenonMap) -> Result<f64> {
    let delta = map.delta.as_ref().ok_or_else(|| Error::Invalid("planar map has no surface".into()))?;
    let pts = attracting_samples(s, map)?;
    let vals: Result<Vec<f64>> = pts
        .par_iter()
        .map(|p| {
            let z = s.height_at(p[0], p[1])?;
            let q = map.step([p[0], p[1], z]);
            Ok((delta.value([p[0], p[1], z]) - s.height_at(q[0], q[1])?).abs())
        })
        .collect();
    Ok(vals?.into_iter().fold(0.0, f64::max))
}

/// Iterates `Ξ_{j+1}(a, b) = δ(a, b, ξ_j(a, b))` from `initial` (zero when
/// `None`) until the sup change drops below `tol`.
pub fn graph_transform(
    map: &HenonMap,
    initial: Option<&Field>,
    max_iters: usize,
    tol: f64,
) -> Result<SurfaceGraph> {
    let delta = map.delta.as_ref().ok_or_else(|| Error::Invalid("graph transform needs a 3D map".into()))?;
    if !(tol > 0.0) || max_iters == 0 {
        return Err(Error::Invalid("graph transform needs tol > 0 and at least one iteration".into()));
    }
    conditioning(map)?;
    let dom = vec![map.bbox[0], map.bbox[1]];
    let mut chart = match initial {
        Some(f) => f.clone(),
        None => Field::zero(dom.clone()),
    };
    let mut changes = Vec::new();
    let mut slope_changes = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        let next = Field::try_fit(
            |n| {
                let z = chart_height(map, &chart, [n[0], n[1]], PREIMAGE_DEPTH)?;
                Ok(delta.value([n[0], n[1], z]))
            },
            &CHART_DEGREES,
            &dom,
        )?;
        let (c0, c1) = grid_changes(&next, &chart);
        chart = next;
        changes.push(c0);
        slope_changes.push(c1);
        if !c0.is_finite() {
            break;
        }
        if c0 <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Surface(format!(
            "no contraction after {max_iters} iterations (last change {:e})",
            changes.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let mut s = SurfaceGraph {
        level: 0,
        height: Height::Chart { map: map.clone(), field: chart },
        defect: 0.0,
        changes,
        slope_changes,
    };
    let zmax = map.zmax();
    for p in attracting_samples(&s, map)? {
        let z = s.height_at(p[0], p[1])?;
        if z.abs() > zmax {
            return Err(Error::Surface(format!("graph leaves the z-interval at {p:?}: {z}")));
        }
    }
    s.defect = invariance_defect(&s, map)?;
    Ok(s)
}

impl SurfaceGraph {
    /// Ratio of the first two chart changes, the measured contraction.
    pub fn contraction(&self) -> Option<f64> {
        contraction_of(&self.changes)
    }

    pub fn slope_contraction(&self) -> Option<f64> {
        contraction_of(&self.slope_changes)
    }
}

fn contraction_of(v: &[f64]) -> Option<f64> {
    match v {
        [a, b, ..] if *a > 0.0 => Some(b / a),
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Rescaled {
    pub n: usize,
    #[serde(skip)]
    pub surface: SurfaceGraph,
    pub c0: f64,
    /// `‖ξ_n − c₀y‖ / ‖c₀y‖` in tip-centered coordinates.
    pub residual: f64,
    /// `‖ξ_n − c₀y‖`.
    pub abs_residual: f64,
    /// `sup |∂_xξ_n|`.
    pub dx_sup: f64,
    /// `(∂_xξ(τ)t + ∂_yξ(τ) − d)/(1 − u)` with the level-`n` affine factors.
    pub c0_formula: Option<f64>,
}

/// Pulls the level-0 surface back to level `n` by solving
/// `Ψ_z(x, y, z) = ξ(Ψ_x, Ψ_y)` for `z` at each node.
pub fn rescale_surface(h: &Hierarchy, surface: &SurfaceGraph, n: usize) -> Result<Rescaled> {
    if h.dims() != 3 {
        return Err(Error::Invalid("surfaces live in three-dimensional towers".into()));
    }
    if n > h.depth() {
        return Err(Error::Scope(format!("level {n} beyond depth {}", h.depth())));
    }
    let bx = default_box2();
    let word = Word::repeat(Symbol::V, n);
    let zax = h.reference_box()[2].inflate(2.0);
    let solve = |x: f64, y: f64| -> Result<f64> {
        let g = |z: f64| match h.scope(0, &word, [x, y, z]) {
            Ok(q) => match surface.height_at(q[0], q[1]) {
                Ok(v) => q[2] - v,
                Err(_) => f64::NAN,
            },
            Err(_) => f64::NAN,
        };
        invert_monotone(g, 0.0, zax, 1e-15)
            .map_err(|e| Error::Surface(format!("singular rescale at ({x}, {y}), level {n}: {e}")))
    };
    let field = Field::try_fit(|p| solve(p[0], p[1]), &GRAPH_DEGREES, &bx)?;
    let tip = h.tip(n)?;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut pairs = Vec::new();
    let mut dx_sup = 0.0f64;
    for x in bx[0].linspace(17) {
        for y in bx[1].linspace(17) {
            let zeta = field.value(&[x, y]) - tip[2];
            let yy = y - tip[1];
            num += zeta * yy;
            den += yy * yy;
            pairs.push((zeta, yy));
            dx_sup = dx_sup.max(field.partial(&[x, y], 0).abs());
        }
    }
    let c0 = num / den;
    let err = pairs.iter().map(|(z, y)| (z - c0 * y).abs()).fold(0.0, f64::max);
    let scale = pairs.iter().map(|(_, y)| (c0 * y).abs()).fold(0.0, f64::max);
    let residual = if scale > 0.0 { err / scale } else { err };
    let c0_formula = if n > 0 {
        let a = affine_part(h, 0, n)?;
        let t0 = h.tip(0)?;
        let g = surface.gradient_at(t0[0], t0[1])?;
        Some((g[0] * a.t + g[1] - a.d) / (1.0 - a.u))
    } else {
        None
    };
    Ok(Rescaled {
        n,
        surface: SurfaceGraph::graph(n, field),
        c0,
        residual,
        abs_residual: err,
        dx_sup,
        c0_formula,
    })
}

/// `F_{2d,ξ}(x, y) = (f(x) − ε(x, y, ξ(x, y)), x)`.
pub fn embed_2d(map: &HenonMap, surface: &SurfaceGraph, budget: f64) -> Result<HenonMap> {
    if !map.is_spatial() {
        return Err(Error::Invalid("embedding needs a three-dimensional map".into()));
    }
    let out = if map.eps.is_planar() {
        map.project_xy()?
    } else {
        let bx = default_box2();
        let eps = Field::try_fit(
            |p| Ok(map.eps.value([p[0], p[1], surface.height_at(p[0], p[1])?])),
            &Settings::default().eps_degrees,
            &bx,
        )?;
        HenonMap::planar(map.f.clone(), eps)?
    };
    out.validate(budget)?;
    Ok(out)
}

/// `∂_yε + ∂_zε ∂_yξ` at `p`.
pub fn embedded_jacobian(map: &HenonMap, surface: &SurfaceGraph, p: [f64; 2]) -> Result<f64> {
    let z = surface.height_at(p[0], p[1])?;
    let q = [p[0], p[1], z];
    let ey = map.eps.partial(q, 1);
    if map.eps.is_planar() {
        return Ok(ey);
    }
    Ok(ey + map.eps.partial(q, 2) * surface.gradient_at(p[0], p[1])?[1])
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugacyReport {
    pub k: usize,
    /// `sup |π_xy ψ_v(x, y, ξ_{k+1}) − H_{k,ξ}⁻¹Λ_k⁻¹(x, y)|`.
    pub defect: f64,
    /// `‖ε(R F_{k,ξ}) − ε(F_{k+1,ξ})‖` when the planar renormalization succeeds.
    pub consistency: Option<f64>,
    pub samples: usize,
}

fn level_surface(h: &Hierarchy, surface: &SurfaceGraph, k: usize) -> Result<SurfaceGraph> {
    if k == 0 {
        Ok(surface.clone())
    } else {
        Ok(rescale_surface(h, surface, k)?.surface)
    }
}

pub fn embedded_conjugacy_check(h: &Hierarchy, surface: &SurfaceGraph, k: usize) -> Result<ConjugacyReport> {
    if k + 1 > h.depth() {
        return Err(Error::Scope(format!("conjugacy at level {k} needs depth {}", k + 1)));
    }
    let here = level_surface(h, surface, k)?;
    let next = level_surface(h, surface, k + 1)?;
    let settings = Settings::default();
    let planar = embed_2d(h.map(k), &here, f64::INFINITY)?;
    let lv = &h.levels[k];
    let pts = sample_points(2, 200, 11 + k as u64, 0.8);
    let gaps: Result<Vec<f64>> = pts
        .par_iter()
        .map(|w| {
            let z = next.height_at(w[0], w[1])?;
            let lhs = h.psi(k, Symbol::V, [w[0], w[1], z])?;
            let rhs = horizontal_inverse(&planar, lambda_inverse(lv.p, lv.s, [w[0], w[1], 0.0]))?;
            Ok((lhs[0] - rhs[0]).hypot(lhs[1] - rhs[1]))
        })
        .collect();
    let defect = gaps?.into_iter().fold(0.0, f64::max);
    let consistency = match renormalize_with(&planar, &settings, Some(lv.p)) {
        Ok(step) => {
            let deeper = embed_2d(h.map(k + 1), &next, f64::INFINITY)?;
            let mut gap = 0.0f64;
            for x in default_box2()[0].inflate(-0.1).linspace(17) {
                for y in default_box2()[1].inflate(-0.1).linspace(17) {
                    let p = [x, y, 0.0];
                    gap = gap.max((step.output.eps.value(p) - deeper.eps.value(p)).abs());
                }
            }
            Some(gap)
        }
        Err(_) => None,
    };
    Ok(ConjugacyReport { k, defect, consistency, samples: pts.len() })
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddedUniversality {
    pub n: usize,
    /// Average Jacobian of the embedded planar map.
    pub b_2d: f64,
    /// Sup relative deviation of `(ε(x, y) − ε(x, 0)) / (b^{2^n} y)` from its
    /// x-profile.
    pub defect: f64,
    /// Sup relative gap to the universal profile on the middle 80%.
    pub oracle_gap: f64,
    /// Sup relative gap to the level-`n` Jacobian profile of the 3D tower,
    /// when that profile exists.
    pub jacobian_gap: Option<f64>,
    #[serde(skip)]
    pub profile: Field,
}

pub fn embedded_universality(
    h: &Hierarchy,
    surface: &SurfaceGraph,
    n: usize,
) -> Result<EmbeddedUniversality> {
    if n > h.depth() {
        return Err(Error::Scope(format!("level {n} beyond depth {}", h.depth())));
    }
    let map0 = h.map(0);
    let (cantor, birk) = measure_integrate(
        |p| embedded_jacobian(map0, surface, [p[0], p[1]]).map_or(f64::NAN, |j| j.abs().ln()),
        h,
        h.depth(),
    )?;
    if !cantor.is_finite() || !birk.is_finite() {
        return Err(Error::Measure("embedded Jacobian average is not finite".into()));
    }
    let log_b = cantor;
    let log_power = 2f64.powi(n as i32) * log_b;
    if log_power < f64::MIN_POSITIVE.ln() {
        return Err(Error::Underflow(n));
    }
    let scale = log_power.exp();
    let deep = level_surface(h, surface, n)?;
    let map = h.map(n);
    let eps = |x: f64, y: f64| -> Result<f64> { Ok(map.eps.value([x, y, deep.height_at(x, y)?])) };
    let ys: Vec<f64> = default_box2()[1].inflate(-0.1).linspace(10);
    let column = |x: f64| -> Result<(f64, f64)> {
        let e0 = eps(x, 0.0)?;
        let q: Result<Vec<f64>> = ys.iter().map(|&y| Ok((eps(x, y)? - e0) / (scale * y))).collect();
        let q = q?;
        let mean = q.iter().sum::<f64>() / q.len() as f64;
        let spread = q.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
        Ok((mean, spread))
    };
    let xdom = default_box2()[0];
    let profile = Field::try_fit(|p| Ok(column(p[0])?.0), &[crate::universality::PROFILE_DEGREE], &[xdom])?;
    let oracle = UniversalProfile::new()?;
    let reference = crate::universality::jacobian_universality(h, n).ok();
    let mut defect = 0.0f64;
    let mut oracle_gap = 0.0f64;
    let mut jacobian_gap = reference.as_ref().map(|_| 0.0f64);
    for x in xdom.inflate(-0.1).linspace(33) {
        let (a, spread) = column(x)?;
        defect = defect.max(spread);
        oracle_gap = oracle_gap.max((a / oracle.jacobian_profile(x)? - 1.0).abs());
        if let (Some(g), Some(r)) = (jacobian_gap.as_mut(), reference.as_ref()) {
            *g = g.max((a / r.profile.value(&[x]) - 1.0).abs());
        }
    }
    Ok(EmbeddedUniversality { n, b_2d: log_b.exp(), defect, oracle_gap, jacobian_gap, profile })
}

#[derive(Debug, Clone, Serialize)]
pub struct Scope2dReport {
    pub k: usize,
    pub n: usize,
    /// Coefficient of `y²` in `x + S(x, y) ≈ v(x) + q y²`.
    pub q: f64,
    /// `ε̄^{2^k}` with `ε̄` the level-0 sup norm of ε.
    pub bound: f64,
    pub residual: f64,
}

const SCOPE2D_DEGREE: usize = 12;

/// Nonlinear part of the embedded scope map `π_xy Ψ^n_k(x, y, ξ_n(x, y))`.
pub fn scope_2d_asymptote(
    h: &Hierarchy,
    surface: &SurfaceGraph,
    k: usize,
    n: usize,
) -> Result<Scope2dReport> {
    if k >= n || n > h.depth() {
        return Err(Error::Scope(format!("need k < n ≤ depth, got k = {k}, n = {n}")));
    }
    let deep = level_surface(h, surface, n)?;
    let tips = h.tips()?;
    let (tk, tn) = (tips[k], tips[n]);
    let word = Word::repeat(Symbol::V, n - k);
    let eval = |x: f64, y: f64| -> Result<[f64; 2]> {
        let (px, py) = (x + tn[0], y + tn[1]);
        let q = h.scope(k, &word, [px, py, deep.height_at(px, py)?])?;
        Ok([q[0] - tk[0], q[1] - tk[1]])
    };
    let e = 1e-6;
    let (xp, xm) = (eval(e, 0.0)?, eval(-e, 0.0)?);
    let (yp, ym) = (eval(0.0, e)?, eval(0.0, -e)?);
    let alpha = (xp[0] - xm[0]) / (2.0 * e);
    let sigma = (yp[1] - ym[1]) / (2.0 * e);
    let tilt = (yp[0] - ym[0]) / (2.0 * e) / sigma;
    let bx = default_box2();
    let xdom = Interval::new(bx[0].lo - tn[0], bx[0].hi - tn[0])?;
    let ydom = Interval::new(bx[1].lo - tn[1], bx[1].hi - tn[1])?;
    let xs = xdom.nodes(2 * SCOPE2D_DEGREE + 1);
    let ys = ydom.linspace(7);
    let pts: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let vals: Result<Vec<f64>> =
        pts.par_iter().map(|&(x, y)| Ok((eval(x, y)?[0] - tilt * sigma * y) / alpha)).collect();
    let vals = vals?;
    let cols = SCOPE2D_DEGREE + 2;
    let mut a = DMatrix::zeros(pts.len(), cols);
    for (i, &(x, y)) in pts.iter().enumerate() {
        let t = xdom.to_unit(x);
        let (mut t0, mut t1) = (1.0, t);
        a[(i, 0)] = 1.0;
        for j in 1..=SCOPE2D_DEGREE {
            a[(i, j)] = t1;
            let t2 = 2.0 * t * t1 - t0;
            t0 = t1;
            t1 = t2;
        }
        a[(i, cols - 1)] = y * y;
    }
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&DVector::from_vec(vals.clone()), 1e-14)
        .map_err(|e| Error::Convergence(format!("embedded scope least squares: {e}")))?;
    let fitted = &a * &sol;
    let residual = (0..pts.len()).map(|i| (vals[i] - fitted[i]).abs()).fold(0.0, f64::max);
    let bound = h.map(0).eps_norm().powf(2f64.powi(k as i32));
    Ok(Scope2dReport { k, n, q: sol[cols - 1], bound, residual })
}

/// `π_xy` of the level-`n` Cantor sample of `h`.
pub fn projected_cantor(h: &Hierarchy, n: usize) -> Result<Vec<Point>> {
    Ok(cantor_sample(h, n)?.points.into_iter().map(|p| [p[0], p[1], 0.0]).collect())
}

/// Average Jacobian of the 3D tower, for comparison with `b_2d`.
pub fn spatial_average(h: &Hierarchy) -> Result<f64> {
    Ok(average_jacobian(h, h.depth())?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{toy_model, SplitField, DEFAULT_BUDGET};

    fn toy(b2: f64, coupling: f64) -> HenonMap {
        toy_model(1.4, 1e-2, b2, coupling, DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn zero_vertical_map_gives_flat_surface() {
        let mut m = toy(1e-5, 0.0);
        m.delta = Some(SplitField::zero(default_box2()));
        let s = graph_transform(&m, None, 5, 1e-14).unwrap();
        assert_eq!(s.changes.len(), 1);
        assert!(s.height_at(0.3, -0.2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn z_independent_vertical_map() {
        let m = toy(0.0, 1e-3);
        let s = graph_transform(&m, None, 5, 1e-14).unwrap();
        assert!(s.changes.len() <= 2, "{:?}", s.changes);
        // ξ(F(p)) = γ p_y for δ = γ y.
        let p = [0.2, 0.1];
        let q = m.step([p[0], p[1], 0.0]);
        assert!((s.height_at(q[0], q[1]).unwrap() - 1e-3 * p[1]).abs() < 1e-13);
    }

    #[test]
    fn toy_surface_converges() {
        let m = toy(1e-5, 1e-3);
        let s = graph_transform(&m, None, 30, 1e-13).unwrap();
        assert!(s.defect <= 1e-9, "defect {}", s.defect);
        assert!(s.changes.len() <= 30);
    }

    #[test]
    fn splitting_blocks_of_toy_model() {
        let m = toy(1e-5, 1e-3);
        let pts = sample_points(3, 50, 3, 0.9);
        let r = splitting_diagnostic(&m, &pts, 2.0).unwrap();
        assert_eq!(r.coupling, 0.0);
        assert!(r.dominance < 0.5);
        assert_eq!(r.singular, 0);
    }

    #[test]
    fn embedded_toy_map_is_projection() {
        let m = toy(1e-5, 1e-3);
        let s = graph_transform(&m, None, 30, 1e-13).unwrap();
        assert_eq!(embed_2d(&m, &s, DEFAULT_BUDGET).unwrap(), m.project_xy().unwrap());
    }
}
