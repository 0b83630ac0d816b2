//! Gap and diameter estimates for sibling boxes deep in the Cantor set, the
//! window sweep over `b`, continuity in a one-parameter family and the
//! line-field probe near the tip.
//!
//! The boxes at the resonant depths are far below double resolution in level-0
//! coordinates, so point clouds are carried as offsets from a shared base
//! point. Once a cloud is smaller than [`JET_SWITCH`] each change of
//! coordinates is applied through its 2-jet at the base.

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::Serialize;

use crate::cantor::{
    cantor_points_from, cantor_sample, hausdorff, hull_grid, iterate_jet, Hierarchy, Symbol, Word,
};
use crate::error::{Error, Result};
use crate::maps::{family_2d, HenonMap, Point, DEFAULT_BUDGET};
use crate::renorm::{tune_parameter, Settings};
use crate::universality::{average_jacobian, doubling};

/// Largest cloud extent handled by exact differences.
pub const JET_SWITCH: f64 = 1e-5;
const HESSIAN_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Serialize)]
pub struct GeometryRecord {
    pub b: f64,
    pub k: usize,
    pub n: usize,
    pub word: String,
    pub dist_min: f64,
    pub diam: f64,
    pub ratio: f64,
    pub overlap: bool,
    /// `b^{2^k} / σ^{n−k}`.
    pub window: f64,
    /// `log(dist_min / (b^{2^k} σ^{2k} σ^{n−k}))`.
    pub log_dist_scaled: f64,
    /// `log(diam / (σ^{2(n−k)} σ^k))`.
    pub log_diam_scaled: f64,
}

/// `|λ|` of the doubling fixed point.
pub fn box_scaling() -> f64 {
    doubling::standard_lambda().abs()
}

pub fn log_window(log_b: f64, k: usize, n: usize) -> f64 {
    2f64.powi(k as i32) * log_b - (n as f64 - k as f64) * box_scaling().ln()
}

struct Cloud {
    base: Point,
    offsets: Vec<Point>,
}

fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

impl Cloud {
    fn new(points: &[Point]) -> Self {
        let base = points[0];
        Self { base, offsets: points.iter().map(|&p| sub(p, base)).collect() }
    }

    fn extent(&self) -> f64 {
        self.offsets.iter().map(|&o| norm(o)).fold(0.0, f64::max)
    }

    fn apply(&mut self, h: &Hierarchy, j: usize, sym: Symbol, switch: f64) -> Result<()> {
        let base = h.psi(j, sym, self.base)?;
        if self.extent() > switch {
            let moved: Result<Vec<Point>> =
                self.offsets.par_iter().map(|&o| Ok(sub(h.psi(j, sym, add(self.base, o))?, base))).collect();
            self.offsets = moved?;
        } else {
            let dims = h.dims();
            let (_, d) = h.psi_jet(j, sym, self.base)?;
            // hess[a][i][b] = ∂_a (Dψ)_{ib}
            let mut hess = [[[0.0; 3]; 3]; 3];
            for (a, slab) in hess.iter_mut().enumerate().take(dims) {
                let mut e = [0.0; 3];
                e[a] = HESSIAN_STEP;
                let (_, dp) = h.psi_jet(j, sym, add(self.base, e))?;
                let (_, dm) = h.psi_jet(j, sym, sub(self.base, e))?;
                for i in 0..3 {
                    for b in 0..3 {
                        slab[i][b] = (dp[i][b] - dm[i][b]) / (2.0 * HESSIAN_STEP);
                    }
                }
            }
            for o in self.offsets.iter_mut() {
                let mut out = [0.0; 3];
                for i in 0..dims {
                    let mut v = 0.0;
                    for b in 0..dims {
                        v += d[i][b] * o[b];
                        for a in 0..dims {
                            v += 0.5 * hess[a][i][b] * o[a] * o[b];
                        }
                    }
                    out[i] = v;
                }
                *o = out;
            }
        }
        self.base = base;
        Ok(())
    }
}

/// The word `v^k c v^{n−k−1}` of Lemma-type sibling estimates.
pub fn sibling_word(k: usize, n: usize) -> Result<Word> {
    if k + 1 > n {
        return Err(Error::Invalid(format!("sibling word needs k < n, got k = {k}, n = {n}")));
    }
    let mut w = Word::repeat(Symbol::V, k);
    w = w.push(Symbol::C);
    Ok(w.concat(&Word::repeat(Symbol::V, n - k - 1)))
}

/// Offsets of the two sibling boxes `B^{n+1}_{wv}`, `B^{n+1}_{wc}`: Cantor
/// points of each and hull samples of the first, in level-0 coordinates
/// relative to a common base.
struct Siblings {
    cantor_v: Vec<Point>,
    cantor_c: Vec<Point>,
    hull_v: Vec<Point>,
    hull_c: Vec<Point>,
}

const CANTOR_DEPTH: usize = 5;

fn siblings(h: &Hierarchy, word: &Word) -> Result<Siblings> {
    siblings_with(h, word, JET_SWITCH)
}

fn siblings_with(h: &Hierarchy, word: &Word, switch: f64) -> Result<Siblings> {
    let n = word.len();
    let ext = h.extended(n + 1 + CANTOR_DEPTH);
    let seed = ext.deepest_tip()?;
    let inner = cantor_points_from(&ext, n + 1, n + 1 + CANTOR_DEPTH, seed)?;
    let hull = hull_grid(&ext.reference_box());
    let mut pts = Vec::new();
    for sym in [Symbol::V, Symbol::C] {
        for src in [&inner, &hull] {
            for &p in src.iter() {
                pts.push(ext.psi(n, sym, p)?);
            }
        }
    }
    let mut cloud = Cloud::new(&pts);
    for j in (0..n).rev() {
        cloud.apply(&ext, j, word.0[j], switch)?;
    }
    let (ni, nh) = (inner.len(), hull.len());
    let o = cloud.offsets;
    Ok(Siblings {
        cantor_v: o[..ni].to_vec(),
        hull_v: o[ni..ni + nh].to_vec(),
        cantor_c: o[ni + nh..2 * ni + nh].to_vec(),
        hull_c: o[2 * ni + nh..].to_vec(),
    })
}

fn min_cross(a: &[Point], b: &[Point]) -> f64 {
    a.iter().flat_map(|&p| b.iter().map(move |&q| norm(sub(p, q)))).fold(f64::INFINITY, f64::min)
}

fn diam(a: &[Point]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            d = d.max(norm(sub(a[i], a[j])));
        }
    }
    d
}

fn x_range(a: &[Point]) -> (f64, f64) {
    let lo = a.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let hi = a.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// True iff the closed intervals meet in more than a point.
pub fn intervals_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0.max(b.0) < a.1.min(b.1)
}

fn overlap_of(s: &Siblings) -> bool {
    intervals_overlap(x_range(&s.hull_v), x_range(&s.hull_c))
}

/// x-axis overlap of the hulls of `B^{n+1}_{wv}` and `B^{n+1}_{wc}`.
pub fn overlap_check(h: &Hierarchy, k: usize, n: usize) -> Result<bool> {
    Ok(overlap_of(&siblings(h, &sibling_word(k, n)?)?))
}

/// Sibling metrics for `w = v^k c v^{n−k−1}`; `log_b` is the log average
/// Jacobian used for the scaled columns.
pub fn box_metrics_with(h: &Hierarchy, log_b: f64, k: usize, n: usize) -> Result<GeometryRecord> {
    let word = sibling_word(k, n)?;
    let s = siblings(h, &word)?;
    let dist_min = min_cross(&s.cantor_v, &s.cantor_c);
    let dm = diam(&s.hull_v);
    let ls = box_scaling().ln();
    let (kf, nf) = (k as f64, n as f64);
    let pk = 2f64.powi(k as i32) * log_b;
    Ok(GeometryRecord {
        b: log_b.exp(),
        k,
        n,
        word: word.to_string(),
        dist_min,
        diam: dm,
        ratio: dist_min / dm,
        overlap: overlap_of(&s),
        window: log_window(log_b, k, n).exp(),
        log_dist_scaled: dist_min.ln() - (pk + 2.0 * kf * ls + (nf - kf) * ls),
        log_diam_scaled: dm.ln() - (2.0 * (nf - kf) * ls + kf * ls),
    })
}

pub fn box_metrics(h: &Hierarchy, k: usize, n: usize) -> Result<GeometryRecord> {
    let avg = average_jacobian(h, h.depth())?;
    box_metrics_with(h, avg.log_value, k, n)
}

/// Depths `n > k` whose window value lies in `[a0, a1]`.
pub fn window_depths(log_b: f64, k: usize, a0: f64, a1: f64, n_max: usize) -> Vec<usize> {
    (k + 1..=n_max)
        .filter(|&n| {
            let w = log_window(log_b, k, n);
            w >= a0.ln() && w <= a1.ln()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSettings {
    pub ks: Vec<usize>,
    pub window: (f64, f64),
    pub tune_depth: usize,
    pub n_max: usize,
    pub budget: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { ks: vec![1, 2, 3, 4], window: (0.5, 2.0), tune_depth: 6, n_max: 200, budget: DEFAULT_BUDGET }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub b: f64,
    pub c: f64,
    pub records: Vec<GeometryRecord>,
    /// Smallest ratio at each scheduled `k` (`None` without a window hit).
    pub min_ratio: Vec<(usize, Option<f64>)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub failures: Vec<(f64, String)>,
    /// Fraction of grid values with a window hit at every scheduled `k`.
    pub hit_density: f64,
}

/// Rough location of the accumulation parameter of `c − x² − b y`.
pub fn accumulation_guess(b: f64) -> f64 {
    doubling::FEIGENBAUM_POINT + 1.6 * b
}

fn sweep_point(b: f64, cfg: &SweepSettings, settings: &Settings) -> Result<SweepPoint> {
    if !(b > 0.0) {
        return Err(Error::Invalid(format!("b = {b}: the degenerate family is excluded")));
    }
    let fam = |c: f64| family_2d(c, b, cfg.budget);
    let tuned = tune_parameter(&fam, accumulation_guess(b), cfg.tune_depth, settings)?;
    let h = Hierarchy::from_tower(&tuned.tower, settings)?;
    let log_b = b.ln();
    let mut records = Vec::new();
    let mut min_ratio = Vec::new();
    for &k in &cfg.ks {
        let mut best: Option<f64> = None;
        for n in window_depths(log_b, k, cfg.window.0, cfg.window.1, cfg.n_max) {
            let r = box_metrics_with(&h, log_b, k, n)?;
            best = Some(best.map_or(r.ratio, |m: f64| m.min(r.ratio)));
            records.push(r);
        }
        min_ratio.push((k, best));
    }
    Ok(SweepPoint { b, c: tuned.c, records, min_ratio })
}

/// Window sweep over `c − x² − b y` for each `b` in `grid`.
pub fn geometry_sweep(grid: &[f64], cfg: &SweepSettings, settings: &Settings) -> SweepReport {
    let results: Vec<(f64, Result<SweepPoint>)> =
        grid.par_iter().map(|&b| (b, sweep_point(b, cfg, settings))).collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (b, r) in results {
        match r {
            Ok(p) => points.push(p),
            Err(e) => failures.push((b, e.to_string())),
        }
    }
    points.sort_by(|a, b| a.b.total_cmp(&b.b));
    failures.sort_by(|a, b| a.0.total_cmp(&b.0));
    let hits = points.iter().filter(|p| p.min_ratio.iter().all(|(_, r)| r.is_some())).count();
    let hit_density = if grid.is_empty() { 0.0 } else { hits as f64 / grid.len() as f64 };
    SweepReport { points, failures, hit_density }
}

/// Log-spaced grid of `count` values in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || count < 2 {
        return Err(Error::Invalid("log grid needs 0 < lo < hi and at least two points".into()));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect())
}

/// Tuned Cantor sample and average Jacobian of one member of a family.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuityState {
    pub t: f64,
    pub c: f64,
    pub b: f64,
    #[serde(skip)]
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContinuityRow {
    pub t0: f64,
    pub t1: f64,
    pub hausdorff: f64,
    pub db: f64,
}

/// `family(c, t)` is tuned in `c` to depth `n` at fixed `t`.
pub fn continuity_state<F>(
    family: &F,
    t: f64,
    c0: f64,
    n: usize,
    settings: &Settings,
) -> Result<ContinuityState>
where
    F: Fn(f64, f64) -> Result<HenonMap> + Sync,
{
    let fam = |c: f64| family(c, t);
    let tuned = tune_parameter(&fam, c0, n, settings)?;
    let h = Hierarchy::from_tower(&tuned.tower, settings)?;
    let points = cantor_sample(&h, n)?.points;
    let b = average_jacobian(&h, n)?.value;
    Ok(ContinuityState { t, c: tuned.c, b, points })
}

pub fn compare_states(a: &ContinuityState, b: &ContinuityState) -> ContinuityRow {
    ContinuityRow { t0: a.t, t1: b.t, hausdorff: hausdorff(&a.points, &b.points), db: (a.b - b.b).abs() }
}

/// Rows for consecutive grid values.
pub fn cantor_continuity<F>(
    family: &F,
    grid: &[f64],
    c0: f64,
    n: usize,
    settings: &Settings,
) -> Result<Vec<ContinuityRow>>
where
    F: Fn(f64, f64) -> Result<HenonMap> + Sync,
{
    let states: Result<Vec<ContinuityState>> =
        grid.par_iter().map(|&t| continuity_state(family, t, c0, n, settings)).collect();
    let states = states?;
    Ok(states.windows(2).map(|w| compare_states(&w[0], &w[1])).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct LineFieldRow {
    /// Depth `j` of the tip neighborhood `B^j_{v^j}`.
    pub level: usize,
    pub points: usize,
    /// Largest angle between expanded lines within the neighborhood.
    pub oscillation: f64,
    pub flagged: usize,
}

/// Angle in `[0, π)` of the most expanded direction of `M`: the leading
/// left singular vector, the image line of the direction `M` stretches most.
pub fn expanded_direction(m: [[f64; 2]; 2]) -> Option<f64> {
    let a = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
    if !a.iter().all(|v| v.is_finite()) {
        return None;
    }
    let svd = a.svd(true, false);
    let u = svd.u?;
    let (i, smax) = svd.singular_values.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &s)| {
        if s > acc.1 {
            (i, s)
        } else {
            acc
        }
    });
    if !(smax > 0.0) {
        return None;
    }
    let th = u[(1, i)].atan2(u[(0, i)]);
    Some(th.rem_euclid(std::f64::consts::PI))
}

fn line_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % std::f64::consts::PI;
    d.min(std::f64::consts::PI - d)
}

fn nearest(points: &[Point], q: Point) -> (usize, f64) {
    points.iter().enumerate().map(|(i, &p)| (i, norm(sub(p, q)))).fold((0, f64::INFINITY), |a, b| {
        if b.1 < a.1 {
            b
        } else {
            a
        }
    })
}

/// Expanded lines of `DF^{2^m}` pushed onto a level-`depth` Cantor sample:
/// the line at `p` is the image direction of `DF^{2^m}` along the orbit
/// arriving at `p`. Oscillation is measured inside `B^j_{v^j}` for each `j`.
pub fn line_field_probe(
    h: &Hierarchy,
    depth: usize,
    levels: &[usize],
    m: usize,
) -> Result<Vec<LineFieldRow>> {
    if levels.iter().any(|&j| j > depth) || m >= depth {
        return Err(Error::Invalid("neighborhood level or orbit length beyond the sample depth".into()));
    }
    let ext = h.extended(depth);
    let sample = cantor_sample(&ext, depth)?;
    let map = ext.map(0);
    let steps = 1usize << m;
    // F^{2^m} permutes the sample; each image is matched to its nearest point.
    let pushed: Vec<(usize, Option<f64>)> = sample
        .points
        .par_iter()
        .map(|&p| {
            let (q, d) = iterate_jet(map, p, steps);
            let (i, _) = nearest(&sample.points, q);
            (i, expanded_direction([[d[0][0], d[0][1]], [d[1][0], d[1][1]]]))
        })
        .collect();
    let mut angles = vec![None; sample.points.len()];
    for (i, a) in pushed {
        angles[i] = a;
    }
    Ok(levels
        .iter()
        .map(|&j| {
            // Words starting with v^j occupy the lowest 2^{depth−j} indices.
            let count = 1usize << (depth - j);
            let ok: Vec<f64> = angles[..count].iter().flatten().copied().collect();
            let mut osc = 0.0f64;
            for a in 0..ok.len() {
                for b in a + 1..ok.len() {
                    osc = osc.max(line_gap(ok[a], ok[b]));
                }
            }
            LineFieldRow { level: j, points: count, oscillation: osc, flagged: count - ok.len() }
        })
        .collect())
}
