//! Words over `{v, c}`, scope maps `Ψ^n_{k,w}`, the box hierarchy, the tip,
//! Cantor-set samples, periodic points and the adding machine.

use std::fmt;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::Interval;
use crate::maps::{default_box2, default_zaxis, flip_fixed_point, HenonMap, Mat3, Point};
use crate::renorm::{horizontal_inverse, lambda_inverse, renormalize_with, RenormTower, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    V,
    C,
}

/// A word `w₁ w₂ … w_n`; `w₁` is applied last (outermost link).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn repeat(s: Symbol, n: usize) -> Self {
        Word(vec![s; n])
    }

    pub fn push(&self, s: Symbol) -> Self {
        let mut w = self.0.clone();
        w.push(s);
        Word(w)
    }

    pub fn concat(&self, other: &Word) -> Self {
        Word(self.0.iter().chain(&other.0).copied().collect())
    }

    /// Binary index with `v = 0`, `c = 1`, `w₁` most significant.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, s| 2 * acc + (*s == Symbol::C) as usize)
    }

    pub fn from_index(n: usize, mut i: usize) -> Self {
        let mut w = vec![Symbol::V; n];
        for k in (0..n).rev() {
            if i & 1 == 1 {
                w[k] = Symbol::C;
            }
            i >>= 1;
        }
        Word(w)
    }

    /// All words of length `n` ordered by [`Word::index`].
    pub fn all(n: usize) -> Vec<Word> {
        (0..1usize << n).map(|i| Word::from_index(n, i)).collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "-");
        }
        for s in &self.0 {
            write!(f, "{}", if *s == Symbol::V { 'v' } else { 'c' })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Word {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "-" {
            return Ok(Word::default());
        }
        s.chars()
            .map(|c| match c {
                'v' => Ok(Symbol::V),
                'c' => Ok(Symbol::C),
                _ => Err(Error::Invalid(format!("bad symbol {c:?} in word"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

/// One level of the hierarchy: the map `F_j` and the affine data `(p_j, s_j)`
/// of the link from level `j + 1` to level `j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Level {
    pub map: HenonMap,
    pub p: f64,
    pub s: f64,
}

/// Levels `F_0 … F_N` with every link data needed by the scope maps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hierarchy {
    pub levels: Vec<Level>,
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat_vec(a: &Mat3, v: Point) -> Point {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

impl Hierarchy {
    /// Uses the tower's steps; the last level's link data come from one more
    /// renormalization attempt, or repeat the previous link when it fails.
    pub fn from_tower(tower: &RenormTower, settings: &Settings) -> Result<Self> {
        let n = tower.depth();
        let mut levels: Vec<Level> = (0..n)
            .map(|k| Level { map: tower.maps[k].clone(), p: tower.steps[k].p, s: tower.steps[k].s })
            .collect();
        let last = tower.maps[n].clone();
        let seed = tower.steps.last().map(|d| d.p);
        let (p, s) = match renormalize_with(&last, settings, seed) {
            Ok(st) => (st.p, st.s),
            Err(_) => match tower.steps.last() {
                Some(d) => (d.p, d.s),
                None => {
                    return Err(Error::Scope("no link data for a depth-0 tower".into()));
                }
            },
        };
        levels.push(Level { map: last, p, s });
        Ok(Self { levels })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn dims(&self) -> usize {
        self.levels[0].map.dims()
    }

    pub fn map(&self, j: usize) -> &HenonMap {
        &self.levels[j].map
    }

    fn level(&self, j: usize) -> Result<&Level> {
        self.levels.get(j).ok_or_else(|| Error::Scope(format!("level {j} beyond depth {}", self.depth())))
    }

    /// `ψ^{j+1}_sym`: from level `j + 1` coordinates to level `j`.
    pub fn psi(&self, j: usize, sym: Symbol, w: Point) -> Result<Point> {
        let lv = self.level(j)?;
        let q = horizontal_inverse(&lv.map, lambda_inverse(lv.p, lv.s, w))
            .map_err(|e| Error::Scope(format!("ψ_v at level {j}: {e}")))?;
        Ok(match sym {
            Symbol::V => q,
            Symbol::C => lv.map.step(q),
        })
    }

    /// `ψ^{j+1}_sym(w)` and its derivative.
    pub fn psi_jet(&self, j: usize, sym: Symbol, w: Point) -> Result<(Point, Mat3)> {
        let lv = self.level(j)?;
        let m = &lv.map;
        let q = self.psi(j, Symbol::V, w)?;
        // D(H⁻¹) = (DH)⁻¹ evaluated at the preimage q.
        let mut dh = IDENTITY;
        dh[0][0] = m.f.slope(q[0]) - m.eps.partial(q, 0);
        dh[0][1] = -m.eps.partial(q, 1);
        let mut dims = 2;
        if let Some(d) = &m.delta {
            dims = 3;
            dh[0][2] = -m.eps.partial(q, 2);
            let yinv = m.f.inverse(q[1])?;
            let arg = [q[1], yinv, 0.0];
            dh[2][1] = -(d.partial(arg, 0) + d.partial(arg, 1) / m.f.slope(yinv));
        }
        let inv = if dims == 3 {
            Matrix3::from_fn(|i, k| dh[i][k])
                .try_inverse()
                .ok_or_else(|| Error::Scope("singular DH".into()))?
        } else {
            let mut a = Matrix3::from_fn(|i, k| dh[i][k]);
            a[(2, 2)] = 1.0;
            a.try_inverse().ok_or_else(|| Error::Scope("singular DH".into()))?
        };
        let mut jac = [[0.0; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                jac[i][k] = inv[(i, k)] / lv.s;
            }
        }
        if dims == 2 {
            jac[2] = [0.0; 3];
            for row in jac.iter_mut() {
                row[2] = 0.0;
            }
        }
        match sym {
            Symbol::V => Ok((q, jac)),
            Symbol::C => Ok((m.step(q), mat_mul(&m.derivative(q), &jac))),
        }
    }

    /// `Ψ^{k+|w|}_{k,w}(point)`.
    pub fn scope(&self, k: usize, word: &Word, point: Point) -> Result<Point> {
        let mut q = point;
        for (i, &sym) in word.0.iter().enumerate().rev() {
            q = self.psi(k + i, sym, q)?;
        }
        Ok(q)
    }

    /// `Ψ^{k+|w|}_{k,w}` with its derivative by the chain rule.
    pub fn scope_jet(&self, k: usize, word: &Word, point: Point) -> Result<(Point, Mat3)> {
        let mut q = point;
        let mut jac = IDENTITY;
        for (i, &sym) in word.0.iter().enumerate().rev() {
            let (nq, dj) = self.psi_jet(k + i, sym, q)?;
            q = nq;
            jac = mat_mul(&dj, &jac);
        }
        Ok((q, jac))
    }

    /// Fixed point of `ψ^{N+1}_v` at the deepest level `N`.
    pub fn deepest_tip(&self) -> Result<Point> {
        let n = self.depth();
        let mut w = [self.map(n).f.value(self.map(n).f.critical()), 0.0, 0.0];
        for _ in 0..200 {
            let next = self.psi(n, Symbol::V, w)?;
            let err = (0..3).map(|a| (next[a] - w[a]).abs()).fold(0.0, f64::max);
            w = next;
            if err < 1e-15 {
                break;
            }
        }
        Ok(w)
    }

    /// Tips `τ_0 … τ_N`, pushed up from the deepest level.
    pub fn tips(&self) -> Result<Vec<Point>> {
        let n = self.depth();
        let mut out = vec![[0.0; 3]; n + 1];
        out[n] = self.deepest_tip()?;
        for j in (0..n).rev() {
            out[j] = self.psi(j, Symbol::V, out[j + 1])?;
        }
        Ok(out)
    }

    pub fn tip(&self, k: usize) -> Result<Point> {
        Ok(self.tips()?[k])
    }

    /// Projection of every level to the xy-plane with the same link data;
    /// exact for toy models, whose ε does not depend on z.
    pub fn project_xy(&self) -> Result<Self> {
        let levels: Result<Vec<Level>> =
            self.levels.iter().map(|lv| Ok(Level { map: lv.map.project_xy()?, p: lv.p, s: lv.s })).collect();
        Ok(Self { levels: levels? })
    }

    /// The hierarchy continued to `depth` levels by repeating its deepest
    /// level, which past the computable depth is the degenerate fixed point
    /// to double precision.
    pub fn extended(&self, depth: usize) -> Self {
        let mut levels = self.levels.clone();
        let last = levels.last().cloned().expect("hierarchy has a level");
        while levels.len() < depth + 1 {
            levels.push(last.clone());
        }
        Self { levels }
    }

    /// The reference box of level `n` maps.
    pub fn reference_box(&self) -> Vec<Interval> {
        let mut b = default_box2().to_vec();
        if self.dims() == 3 {
            b.push(default_zaxis());
        }
        b
    }
}

/// Hull-sampled image of the reference box under `Ψ^n_{0,w}`.
#[derive(Debug, Clone, Serialize)]
pub struct BoxRegion {
    pub word: String,
    pub level: usize,
    #[serde(skip)]
    pub hull: Vec<Point>,
    pub center: Point,
    pub diameter: f64,
    pub bbox: Vec<Interval>,
}

/// Interior 8×8(×8) grid plus the corners of `bx`.
pub fn hull_grid(bx: &[Interval]) -> Vec<Point> {
    let g = 8;
    let ax = |iv: &Interval| -> Vec<f64> {
        (0..g).map(|i| iv.lo + iv.width() * (i as f64 + 0.5) / g as f64).collect()
    };
    let xs = ax(&bx[0]);
    let ys = ax(&bx[1]);
    let zs = if bx.len() == 3 { ax(&bx[2]) } else { vec![0.0] };
    let mut pts = Vec::new();
    for &x in &xs {
        for &y in &ys {
            for &z in &zs {
                pts.push([x, y, z]);
            }
        }
    }
    let zc: Vec<f64> = if bx.len() == 3 { vec![bx[2].lo, bx[2].hi] } else { vec![0.0] };
    for x in [bx[0].lo, bx[0].hi] {
        for y in [bx[1].lo, bx[1].hi] {
            for &z in &zc {
                pts.push([x, y, z]);
            }
        }
    }
    pts
}

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn diameter(pts: &[Point]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(dist(pts[i], pts[j]));
        }
    }
    d
}

pub fn bounding_box(pts: &[Point], dims: usize) -> Vec<Interval> {
    (0..dims)
        .map(|a| {
            let lo = pts.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max);
            Interval { lo, hi }
        })
        .collect()
}

pub fn region(h: &Hierarchy, word: &Word) -> Result<BoxRegion> {
    let n = word.len();
    if n > h.depth() {
        return Err(Error::Scope(format!("word length {n} beyond depth {}", h.depth())));
    }
    let hull: Vec<Point> =
        hull_grid(&h.reference_box()).into_iter().map(|p| h.scope(0, word, p)).collect::<Result<_>>()?;
    let dims = h.dims();
    let bbox = bounding_box(&hull, dims);
    let mut center = [0.0; 3];
    for (a, iv) in bbox.iter().enumerate() {
        center[a] = iv.mid();
    }
    Ok(BoxRegion { word: word.to_string(), level: n, diameter: diameter(&hull), center, bbox, hull })
}

/// One representative per word of length `N`, uniform weights.
#[derive(Debug, Clone, Serialize)]
pub struct CantorSample {
    pub level: usize,
    /// Indexed by [`Word::index`].
    pub points: Vec<Point>,
    pub weight: f64,
}

impl CantorSample {
    pub fn word(&self, i: usize) -> Word {
        Word::from_index(self.level, i)
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                d = d.min(dist(self.points[i], self.points[j]));
            }
        }
        d
    }
}

/// `Ψ^N_{k,w}(τ_N)` for every `w` of length `N − k`, indexed by word.
pub fn cantor_points_from(h: &Hierarchy, k: usize, n: usize, seed: Point) -> Result<Vec<Point>> {
    if n > h.depth() || k > n {
        return Err(Error::Scope(format!("cantor sample level {n} beyond depth {}", h.depth())));
    }
    // Layer j holds points for the suffix words acting from level j.
    let mut layer = vec![seed];
    for j in (k..n).rev() {
        let next: Result<Vec<Point>> = layer
            .par_iter()
            .flat_map_iter(|&w| [Symbol::V, Symbol::C].into_iter().map(move |s| (s, w)))
            .map(|(s, w)| h.psi(j, s, w))
            .collect();
        // Prepending a symbol doubles the index space: new index = sym·2^m + old.
        let next = next?;
        let m = layer.len();
        let mut ordered = vec![[0.0; 3]; 2 * m];
        for (i, p) in next.into_iter().enumerate() {
            let old = i / 2;
            let sym = i % 2;
            ordered[sym * m + old] = p;
        }
        layer = ordered;
    }
    Ok(layer)
}

pub fn cantor_sample(h: &Hierarchy, n: usize) -> Result<CantorSample> {
    let tips = h.tips()?;
    let points = cantor_points_from(h, 0, n, tips[n])?;
    Ok(CantorSample { level: n, weight: 1.0 / points.len() as f64, points })
}

/// `F^m(p)` and the product of Jacobians along the orbit.
pub fn iterate_jet(map: &HenonMap, p: Point, m: usize) -> (Point, Mat3) {
    let mut q = p;
    let mut jac = IDENTITY;
    for _ in 0..m {
        jac = mat_mul(&map.derivative(q), &jac);
        q = map.step(q);
    }
    (q, jac)
}

pub fn iterate(map: &HenonMap, p: Point, m: usize) -> Point {
    (0..m).fold(p, |q, _| map.step(q))
}

/// Period-`2^n` point `Ψ^n_{0,w}(β₁(F_n))`, Newton-polished on `F^{2^n}`.
pub fn periodic_point(h: &Hierarchy, word: &Word) -> Result<Point> {
    let n = word.len();
    if n > h.depth() {
        return Err(Error::Periodic(format!("word length {n} beyond depth {}", h.depth())));
    }
    let beta = flip_fixed_point(h.map(n)).map_err(|e| Error::Periodic(e.to_string()))?;
    let seed = h.scope(0, word, beta)?;
    polish_periodic(h.map(0), seed, 1usize << n)
}

pub fn polish_periodic(map: &HenonMap, seed: Point, period: usize) -> Result<Point> {
    let dims = map.dims();
    let mut p = seed;
    for _ in 0..30 {
        let (q, j) = iterate_jet(map, p, period);
        let r: Vec<f64> = (0..dims).map(|a| q[a] - p[a]).collect();
        let norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm < 1e-13 {
            return Ok(p);
        }
        let a = nalgebra::DMatrix::from_fn(dims, dims, |i, k| j[i][k] - if i == k { 1.0 } else { 0.0 });
        let rhs = nalgebra::DVector::from_vec(r.iter().map(|v| -v).collect());
        let step = a.lu().solve(&rhs).ok_or_else(|| Error::Periodic("singular DF^m − I".into()))?;
        for k in 0..dims {
            p[k] += step[k];
        }
        if !p.iter().all(|v| v.is_finite()) || !map.contains(p) {
            return Err(Error::Periodic("Newton left the box".into()));
        }
    }
    let q = iterate(map, p, period);
    let err = (0..dims).map(|a| (q[a] - p[a]).abs()).fold(0.0, f64::max);
    if err <= 1e-9 {
        Ok(p)
    } else {
        Err(Error::Periodic(format!("residual {err:e} after Newton")))
    }
}

/// Successor table of `F` acting on level-`N` boxes.
#[derive(Debug, Clone, Serialize)]
pub struct AddingMachineReport {
    pub level: usize,
    pub successor: Vec<usize>,
    pub cycle_lengths: Vec<usize>,
    pub single_cycle: bool,
    /// Largest landing distance relative to the nearest competing point.
    pub worst_margin: f64,
}

/// Tracks where `F` sends each representative: the level-`N` box whose
/// inflated bounding box contains the image, or else the nearest sample.
pub fn adding_machine_check(h: &Hierarchy, n: usize) -> Result<AddingMachineReport> {
    let sample = cantor_sample(h, n)?;
    let words = Word::all(n);
    let boxes: Vec<Vec<Interval>> = words
        .par_iter()
        .map(|w| region(h, w).map(|r| r.bbox.iter().map(|iv| iv.inflate(0.01)).collect()))
        .collect::<Result<_>>()?;
    let f = h.map(0);
    let dims = h.dims();
    let mut successor = Vec::with_capacity(sample.points.len());
    let mut worst = 0.0f64;
    for p in &sample.points {
        let q = f.step(*p);
        let hits: Vec<usize> =
            (0..boxes.len()).filter(|&i| (0..dims).all(|a| boxes[i][a].contains(q[a]))).collect();
        let mut d: Vec<(f64, usize)> =
            sample.points.iter().enumerate().map(|(i, s)| (dist(*s, q), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let margin = d[0].0 / d.get(1).map_or(f64::INFINITY, |x| x.0);
        let target = if hits.len() == 1 {
            hits[0]
        } else if margin < 0.5 {
            d[0].1
        } else {
            return Err(Error::Resolution(format!(
                "image of {} lands in {} boxes and is not clearly nearest to one sample",
                Word::from_index(n, successor.len()),
                hits.len()
            )));
        };
        worst = worst.max(margin);
        successor.push(target);
    }
    let mut seen = vec![false; successor.len()];
    let mut cycles = Vec::new();
    for start in 0..successor.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = successor[i];
            len += 1;
        }
        cycles.push(len);
    }
    let single = cycles.len() == 1 && cycles[0] == successor.len();
    Ok(AddingMachineReport {
        level: n,
        successor,
        cycle_lengths: cycles,
        single_cycle: single,
        worst_margin: worst,
    })
}

/// `(2^{−N} Σ_w g(p_w), 2^{−N} Σ_{j<2^N} g(F^j τ))`.
pub fn measure_integrate<G: Fn(Point) -> f64 + Sync>(g: G, h: &Hierarchy, n: usize) -> Result<(f64, f64)> {
    let sample = cantor_sample(h, n)?;
    let cantor = sample.points.iter().map(|&p| g(p)).sum::<f64>() * sample.weight;
    let tip = h.tip(0)?;
    let f = h.map(0);
    let m = 1usize << n;
    let mut q = tip;
    let mut acc = 0.0;
    for _ in 0..m {
        acc += g(q);
        q = f.step(q);
    }
    Ok((cantor, acc / m as f64))
}

/// Hausdorff distance between two point sets.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    let one = |x: &[Point], y: &[Point]| {
        x.iter().map(|p| y.iter().map(|q| dist(*p, *q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_indexing() {
        let w: Word = "vcc".parse().unwrap();
        assert_eq!(w.index(), 3);
        assert_eq!(Word::from_index(3, 3), w);
        assert_eq!(w.to_string(), "vcc");
        assert_eq!(Word::all(2).len(), 4);
        assert!("vx".parse::<Word>().is_err());
    }

    #[test]
    fn diameter_and_hausdorff() {
        let a = [[0.0, 0.0, 0.0], [3.0, 4.0, 0.0]];
        assert_eq!(diameter(&a), 5.0);
        assert_eq!(hausdorff(&a, &a), 0.0);
        let b = [[0.0, 0.0, 0.0]];
        assert_eq!(hausdorff(&a, &b), 5.0);
    }

    #[test]
    fn hull_grid_counts() {
        let b2 = default_box2();
        assert_eq!(hull_grid(&b2).len(), 68);
        let mut b3 = b2.to_vec();
        b3.push(default_zaxis());
        assert_eq!(hull_grid(&b3).len(), 520);
    }
}
