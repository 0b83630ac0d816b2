//! Hénon-like maps `F(x, y[, z]) = (f(x) − ε(x, y, z), x[, δ(x, y, z)])`.

use nalgebra::{Complex, Matrix2, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{divided_by, invert_monotone, newton_solve, Field, Interval, NEWTON_TOL};

pub type Point = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Default sup-norm budget for ε and δ.
pub const DEFAULT_BUDGET: f64 = 0.25;
/// Default half-width of the x and y axes of the reference box.
pub const HALF_WIDTH: f64 = 1.6;

pub fn default_box2() -> [Interval; 2] {
    let iv = Interval { lo: -HALF_WIDTH, hi: HALF_WIDTH };
    [iv, iv]
}

pub fn default_zaxis() -> Interval {
    Interval { lo: -1.0, hi: 1.0 }
}

/// A scalar on (x, y, z) stored as `base(x, y) + z · slope(x, y, z)`.
///
/// Keeping the z-dependent part separate lets it stay accurate relative to
/// its own size, which is typically many orders below the base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitField {
    pub base: Field,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<Field>,
}

impl SplitField {
    pub fn planar(base: Field) -> Self {
        Self { base, slope: None }
    }

    pub fn new(base: Field, slope: Option<Field>) -> Result<Self> {
        if base.dims() != 2 {
            return Err(Error::Invalid("split base must be two-dimensional".into()));
        }
        if let Some(s) = &slope {
            if s.dims() != 3 {
                return Err(Error::Invalid("split slope must be three-dimensional".into()));
            }
        }
        Ok(Self { base, slope })
    }

    pub fn zero(bx: [Interval; 2]) -> Self {
        Self::planar(Field::zero(bx.to_vec()))
    }

    pub fn is_planar(&self) -> bool {
        self.slope.is_none()
    }

    #[inline]
    pub fn value(&self, p: Point) -> f64 {
        let b = self.base.value(&p[..2]);
        match &self.slope {
            Some(s) if p[2] != 0.0 => b + p[2] * s.value(&p),
            _ => b,
        }
    }

    #[inline]
    pub fn partial(&self, p: Point, axis: usize) -> f64 {
        match (&self.slope, axis) {
            (None, 2) => 0.0,
            (None, _) => self.base.partial(&p[..2], axis),
            (Some(s), 2) => s.value(&p) + p[2] * s.partial(&p, 2),
            (Some(s), _) => self.base.partial(&p[..2], axis) + p[2] * s.partial(&p, axis),
        }
    }

    /// `q(p + h e_axis) − q(p)` with relative precision in `h`.
    pub fn increment_by(&self, p: Point, axis: usize, h: f64) -> f64 {
        if h == 0.0 {
            return 0.0;
        }
        if axis < 2 {
            let mut out = self.base.increment_by(&p[..2], axis, h);
            if let Some(s) = &self.slope {
                if p[2] != 0.0 {
                    out += p[2] * s.increment_by(&p, axis, h);
                }
            }
            out
        } else {
            match &self.slope {
                None => 0.0,
                Some(s) => {
                    let mut q = p;
                    q[2] = p[2] + h;
                    h * s.value(&q) + p[2] * s.increment_by(&p, 2, h)
                }
            }
        }
    }

    /// `q(p + d) − q(p)`, telescoped one axis at a time.
    pub fn delta(&self, p: Point, d: Point) -> f64 {
        let mut q = p;
        let mut out = 0.0;
        for axis in 0..3 {
            if d[axis] != 0.0 {
                out += self.increment_by(q, axis, d[axis]);
                q[axis] += d[axis];
            }
        }
        out
    }

    /// Upper bound of the sup norm over the box `bx × [−zmax, zmax]`.
    pub fn norm(&self, zmax: f64) -> f64 {
        self.base.sup_norm() + self.slope.as_ref().map_or(0.0, |s| zmax * s.sup_norm())
    }

    pub fn slope_norm(&self) -> f64 {
        self.slope.as_ref().map_or(0.0, |s| s.sup_norm())
    }
}

/// A unimodal map with its derivative and critical point.
#[derive(Debug, Clone, PartialEq)]
pub struct Unimodal {
    f: Field,
    df: Field,
    critical: f64,
}

impl Serialize for Unimodal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.f.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Unimodal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = Field::deserialize(d)?;
        Unimodal::new(f).map_err(serde::de::Error::custom)
    }
}

impl Unimodal {
    pub fn new(f: Field) -> Result<Self> {
        if f.dims() != 1 {
            return Err(Error::Invalid("unimodal part must be one-dimensional".into()));
        }
        let df = f.differentiate(0)?;
        let iv = f.domain()[0];
        let xs = iv.linspace(401);
        let signs: Vec<f64> = xs.iter().map(|&x| df.value(&[x])).collect();
        let changes: Vec<usize> = (1..signs.len())
            .filter(|&i| signs[i - 1] > 0.0 && signs[i] <= 0.0 || signs[i - 1] < 0.0 && signs[i] >= 0.0)
            .collect();
        if changes.len() != 1 {
            return Err(Error::NotHenonLike(format!("f' changes sign {} times on the box", changes.len())));
        }
        let i = changes[0];
        let bracket = Interval::new(xs[i - 1], xs[i])?;
        let critical = newton_solve(
            |x| (df.value(&[x]), df.partial(&[x], 0)),
            0.0,
            0.5 * (bracket.lo + bracket.hi),
            bracket,
            1e-15,
        )?;
        if df.value(&[critical]).abs() > 1e-8 {
            return Err(Error::NotHenonLike("critical point not resolved".into()));
        }
        Ok(Self { f, df, critical })
    }

    pub fn quadratic(c: f64) -> Result<Self> {
        let iv = Interval { lo: -HALF_WIDTH, hi: HALF_WIDTH };
        Self::new(Field::fit(|p| c - p[0] * p[0], &[2], &[iv])?)
    }

    pub fn field(&self) -> &Field {
        &self.f
    }

    pub fn critical(&self) -> f64 {
        self.critical
    }

    pub fn domain(&self) -> Interval {
        self.f.domain()[0]
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.f.value(&[x])
    }

    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        self.df.value(&[x])
    }

    /// `(f(a) − f(b)) / (a − b)` with `a = b + h`.
    #[inline]
    pub fn divided(&self, b: f64, h: f64) -> f64 {
        divided_by(&self.f, b, h)
    }

    /// Preimage of `target` on the branch right of the critical point.
    pub fn inverse(&self, target: f64) -> Result<f64> {
        let iv = self.domain().inflate(0.02);
        let lo = self.critical;
        let bracket = Interval::new(lo, iv.hi)?;
        let top = self.value(lo);
        let seed = lo + (top - target).max(0.0).sqrt();
        newton_solve(
            |x| (self.value(x), self.slope(x)),
            target,
            seed.clamp(lo, iv.hi),
            bracket,
            NEWTON_TOL * 1e-2,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    #[serde(rename = "2d")]
    Planar,
    #[serde(rename = "3d")]
    Spatial,
    Toy,
}

/// A two- or three-dimensional Hénon-like map on a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HenonMap {
    pub kind: MapKind,
    pub f: Unimodal,
    pub eps: SplitField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<SplitField>,
    #[serde(rename = "box")]
    pub bbox: Vec<Interval>,
}

impl HenonMap {
    pub fn planar(f: Unimodal, eps: Field) -> Result<Self> {
        if eps.dims() != 2 {
            return Err(Error::Invalid("planar ε must be two-dimensional".into()));
        }
        let bx = eps.domain().to_vec();
        Ok(Self { kind: MapKind::Planar, f, eps: SplitField::planar(eps), delta: None, bbox: bx })
    }

    pub fn spatial(f: Unimodal, eps: SplitField, delta: SplitField) -> Result<Self> {
        let kind = if eps.is_planar() { MapKind::Toy } else { MapKind::Spatial };
        let mut bx = eps.base.domain().to_vec();
        bx.push(default_zaxis());
        Ok(Self { kind, f, eps, delta: Some(delta), bbox: bx })
    }

    pub fn dims(&self) -> usize {
        if self.delta.is_some() {
            3
        } else {
            2
        }
    }

    pub fn is_spatial(&self) -> bool {
        self.delta.is_some()
    }

    pub fn zmax(&self) -> f64 {
        if self.is_spatial() {
            self.bbox[2].hi.abs().max(self.bbox[2].lo.abs())
        } else {
            0.0
        }
    }

    pub fn eps_norm(&self) -> f64 {
        self.eps.norm(self.zmax())
    }

    pub fn delta_norm(&self) -> f64 {
        self.delta.as_ref().map_or(0.0, |d| d.norm(self.zmax()))
    }

    /// Checks the ε/δ budget and the orientation of the planar block.
    pub fn validate(&self, budget: f64) -> Result<()> {
        let e = self.eps_norm();
        if e > budget {
            return Err(Error::Budget { what: "|eps|".into(), value: e, budget });
        }
        let d = self.delta_norm();
        if d > budget {
            return Err(Error::Budget { what: "|delta|".into(), value: d, budget });
        }
        let bx = &self.bbox;
        for x in bx[0].linspace(9) {
            for y in bx[1].linspace(9) {
                if self.eps.partial([x, y, 0.0], 1) < 0.0 {
                    return Err(Error::NotHenonLike(format!("∂_yε < 0 at ({x}, {y})")));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: Point) -> bool {
        (0..self.dims()).all(|a| self.bbox[a].admits(p[a]))
    }

    /// `F(p)` without the domain check.
    #[inline]
    pub fn step(&self, p: Point) -> Point {
        let x = self.f.value(p[0]) - self.eps.value(p);
        let z = self.delta.as_ref().map_or(0.0, |d| d.value(p));
        [x, p[0], z]
    }

    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        let q = self.point(p)?;
        Ok(self.step(q)[..self.dims()].to_vec())
    }

    pub(crate) fn point(&self, p: &[f64]) -> Result<Point> {
        if p.len() != self.dims() {
            return Err(Error::Invalid(format!("expected {} coordinates", self.dims())));
        }
        let mut q = [0.0; 3];
        q[..p.len()].copy_from_slice(p);
        if !self.contains(q) {
            let axis = (0..self.dims()).find(|&a| !self.bbox[a].admits(q[a])).unwrap_or(0);
            return Err(Error::Domain { axis, point: p.to_vec() });
        }
        Ok(q)
    }

    /// Full derivative; for planar maps the z row and column are zero.
    #[inline]
    pub fn derivative(&self, p: Point) -> Mat3 {
        let ex = self.eps.partial(p, 0);
        let ey = self.eps.partial(p, 1);
        let ez = if self.is_spatial() { self.eps.partial(p, 2) } else { 0.0 };
        let drow = match &self.delta {
            Some(d) => [d.partial(p, 0), d.partial(p, 1), d.partial(p, 2)],
            None => [0.0; 3],
        };
        [[self.f.slope(p[0]) - ex, -ey, -ez], [1.0, 0.0, 0.0], drow]
    }

    pub fn jacobian(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        let q = self.point(p)?;
        let m = self.derivative(q);
        let n = self.dims();
        Ok((0..n).map(|i| m[i][..n].to_vec()).collect())
    }

    /// Jacobian determinant, `∂_yε ∂_zδ − ∂_zε ∂_yδ` (or `∂_yε` in 2D).
    #[inline]
    pub fn jac_det(&self, p: Point) -> f64 {
        let ey = self.eps.partial(p, 1);
        match &self.delta {
            None => ey,
            Some(d) => {
                let ez = if self.eps.is_planar() { 0.0 } else { self.eps.partial(p, 2) };
                ey * d.partial(p, 2) - ez * d.partial(p, 1)
            }
        }
    }

    /// The xy-part of a toy model as a planar map.
    pub fn project_xy(&self) -> Result<Self> {
        if !self.eps.is_planar() {
            return Err(Error::Invalid("ε depends on z; no planar projection".into()));
        }
        Self::planar(self.f.clone(), self.eps.base.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("map serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Invalid(format!("map JSON: {e}")))
    }
}

/// `(c − x² − b y, x)` on the default box.
pub fn family_2d(c: f64, b: f64, budget: f64) -> Result<HenonMap> {
    family_2d_distorted(c, b, 0.0, budget)
}

/// `(c − x² − b y (1 + k x), x)`; `k ≠ 0` gives a non-constant Jacobian.
pub fn family_2d_distorted(c: f64, b: f64, k: f64, budget: f64) -> Result<HenonMap> {
    if b < 0.0 || !b.is_finite() {
        return Err(Error::Invalid(format!("b = {b} must be nonnegative")));
    }
    let bx = default_box2();
    let eps = Field::fit(|p| b * p[1] * (1.0 + k * p[0]), &[1, 1], &bx)?;
    let map = HenonMap::planar(Unimodal::quadratic(c)?, eps)?;
    map.validate(budget)?;
    Ok(map)
}

/// Toy model from a planar ε and a split δ; ε carries no z-dependence.
pub fn build_toy_model(f: Unimodal, eps2d: Field, delta: SplitField, budget: f64) -> Result<HenonMap> {
    let map = HenonMap::spatial(f, SplitField::new(eps2d, None)?, delta)?;
    map.validate(budget)?;
    Ok(map)
}

/// Toy model `(c − x² − b₁ y, x, b₂ z + γ y)`.
pub fn toy_model(c: f64, b1: f64, b2: f64, coupling: f64, budget: f64) -> Result<HenonMap> {
    let bx = default_box2();
    let mut bx3 = bx.to_vec();
    bx3.push(default_zaxis());
    let eps = Field::fit(|p| b1 * p[1], &[1, 1], &bx)?;
    let base = Field::fit(|p| coupling * p[1], &[1, 1], &bx)?;
    let slope = Field::constant(bx3, b2);
    build_toy_model(Unimodal::quadratic(c)?, eps, SplitField::new(base, Some(slope))?, budget)
}

/// Perturbation `(f − ε + t z, x, δ)` of a spatial map.
pub fn family_t(base: &HenonMap, t: f64, range: f64) -> Result<HenonMap> {
    if !base.is_spatial() {
        return Err(Error::Invalid("family_t needs a three-dimensional map".into()));
    }
    if t.abs() >= range {
        return Err(Error::Invalid(format!("|t| = {} outside range {range}", t.abs())));
    }
    if t == 0.0 {
        return Ok(base.clone());
    }
    let mut out = base.clone();
    let bx3 = out.bbox.clone();
    let slope = match &base.eps.slope {
        None => Field::constant(bx3.clone(), -t),
        Some(s) => {
            let s = s.clone();
            Field::fit(|p| s.value(p) - t, s.degrees(), &bx3)?
        }
    };
    out.eps.slope = Some(slope);
    out.kind = MapKind::Spatial;
    Ok(out)
}

/// Fixed points `β₀` (positive multiplier of the 1D part) and `β₁` (flip).
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointPair {
    /// `β₀` lies outside the box for maps near the doubling fixed point; it is
    /// searched on the polynomial continuation up to 20% beyond the box and
    /// omitted when that continuation has no such root.
    pub beta0: Option<Vec<f64>>,
    pub beta1: Vec<f64>,
    pub eigen0: Vec<(f64, f64)>,
    pub eigen1: Vec<(f64, f64)>,
    pub beta0_in_box: bool,
    pub dissipative: bool,
}

fn eigenvalues(m: &Mat3, dims: usize) -> Vec<(f64, f64)> {
    let conv = |c: Complex<f64>| (c.re, c.im);
    if dims == 2 {
        Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
            .complex_eigenvalues()
            .iter()
            .map(|c| conv(*c))
            .collect()
    } else {
        Matrix3::from_fn(|i, j| m[i][j]).complex_eigenvalues().iter().map(|c| conv(*c)).collect()
    }
}

/// Newton for a fixed point `(x, x, z)` seeded by `(x0, x0, 0)`.
pub fn diagonal_fixed_point(map: &HenonMap, x0: f64) -> Result<Point> {
    let (mut x, mut z) = (x0, 0.0);
    for _ in 0..60 {
        let p = [x, x, z];
        let q = map.step(p);
        let r1 = q[0] - x;
        let r2 = if map.is_spatial() { q[2] - z } else { 0.0 };
        if r1.abs() < 1e-15 && r2.abs() < 1e-15 {
            return Ok(p);
        }
        let m = map.derivative(p);
        // Residual derivatives along the diagonal (x = y) and in z.
        let a11 = m[0][0] + m[0][1] - 1.0;
        let a12 = m[0][2];
        let a21 = m[2][0] + m[2][1];
        let a22 = m[2][2] - 1.0;
        let (dx, dz) = if map.is_spatial() {
            let det = a11 * a22 - a12 * a21;
            ((-r1 * a22 + r2 * a12) / det, (-r2 * a11 + r1 * a21) / det)
        } else {
            (-r1 / a11, 0.0)
        };
        if !dx.is_finite() || !dz.is_finite() {
            break;
        }
        x += dx;
        z += dz;
        if dx.abs() < 1e-16 && dz.abs() < 1e-16 {
            return Ok([x, x, z]);
        }
    }
    Err(Error::NotHenonLike(format!("fixed point Newton from x = {x0} failed")))
}

/// The flip fixed point `β₁` right of the critical point.
pub fn flip_fixed_point(map: &HenonMap) -> Result<Point> {
    let f = &map.f;
    let hi = f.domain().inflate(0.02).hi;
    let seed = invert_monotone(|x| f.value(x) - x, 0.0, Interval::new(f.critical(), hi)?, 1e-14)
        .map_err(|e| Error::NotHenonLike(format!("β₁ seed: {e}")))?;
    diagonal_fixed_point(map, seed)
}

fn sectionally_dissipative(e: &[(f64, f64)]) -> bool {
    let mut m: Vec<f64> = e.iter().map(|(r, i)| r.hypot(*i)).collect();
    m.sort_by(|a, b| b.total_cmp(a));
    m[0] * m[1] < 1.0
}

pub fn fixed_points(map: &HenonMap) -> Result<FixedPointPair> {
    let f = &map.f;
    let n = map.dims();
    let b1 = flip_fixed_point(map)?;
    let e1 = eigenvalues(&map.derivative(b1), n);
    let lo = f.domain().inflate(0.2).lo;
    let b0 = invert_monotone(|x| f.value(x) - x, 0.0, Interval::new(lo, f.critical())?, 1e-14)
        .ok()
        .and_then(|x| diagonal_fixed_point(map, x).ok());
    let e0 = b0.map(|b| eigenvalues(&map.derivative(b), n)).unwrap_or_default();
    Ok(FixedPointPair {
        beta0_in_box: b0.is_some_and(|b| map.contains(b)),
        dissipative: sectionally_dissipative(&e1) && (e0.is_empty() || sectionally_dissipative(&e0)),
        beta0: b0.map(|b| b[..n].to_vec()),
        beta1: b1[..n].to_vec(),
        eigen0: e0,
        eigen1: e1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: f64 = 1.401155;

    #[test]
    fn degenerate_map_has_zero_jacobian() {
        let m = family_2d(C, 0.0, DEFAULT_BUDGET).unwrap();
        assert!(m.eps.base.is_zero());
        assert_eq!(m.jac_det([0.3, -0.2, 0.0]), 0.0);
    }

    #[test]
    fn constant_jacobian_family() {
        let m = family_2d(C, 1e-3, DEFAULT_BUDGET).unwrap();
        for p in [[0.1, 0.2, 0.0], [-1.2, 1.0, 0.0], [1.5, -1.5, 0.0]] {
            assert!((m.jac_det(p) - 1e-3).abs() < 1e-17);
        }
        let j = m.jacobian(&[0.4, 0.1]).unwrap();
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        assert!((det - 1e-3).abs() < 1e-17);
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(family_2d(C, 0.2, 0.1), Err(Error::Budget { .. })));
    }

    #[test]
    fn toy_model_block_structure() {
        let m = toy_model(C, 1e-2, 1e-3, 0.0, DEFAULT_BUDGET).unwrap();
        assert_eq!(m.kind, MapKind::Toy);
        let p = [0.3, -0.4, 0.2];
        assert!((m.jac_det(p) - 1e-5).abs() < 1e-19);
        assert_eq!(m.derivative(p)[0][2], 0.0);
        let z = toy_model(C, 1e-2, 0.0, 0.0, DEFAULT_BUDGET).unwrap();
        assert_eq!(z.jac_det(p), 0.0);
    }

    #[test]
    fn family_t_perturbs_the_z_slope() {
        let m = toy_model(C, 1e-2, 1e-3, 1e-3, DEFAULT_BUDGET).unwrap();
        assert_eq!(family_t(&m, 0.0, 1e-2).unwrap(), m);
        let mt = family_t(&m, 1e-6, 1e-2).unwrap();
        assert!((mt.eps.slope_norm() - 1e-6).abs() < 1e-18);
        assert!((mt.step([0.1, 0.2, 0.5])[0] - m.step([0.1, 0.2, 0.5])[0] - 0.5e-6).abs() < 1e-15);
        assert!(family_t(&m, 0.1, 1e-2).is_err());
    }

    #[test]
    fn fixed_points_of_quadratic_family() {
        let m = family_2d(1.4, 0.0, DEFAULT_BUDGET).unwrap();
        let fp = fixed_points(&m).unwrap();
        let x1 = (-1.0 + (1.0 + 4.0 * 1.4f64).sqrt()) / 2.0;
        let x0 = (-1.0 - (1.0 + 4.0 * 1.4f64).sqrt()) / 2.0;
        assert!((fp.beta1[0] - x1).abs() < 1e-13);
        assert!((fp.beta0.as_ref().unwrap()[0] - x0).abs() < 1e-12);
        assert!(!fp.beta0_in_box);
        let m = family_2d(1.4, 1e-3, DEFAULT_BUDGET).unwrap();
        let fp = fixed_points(&m).unwrap();
        assert!(fp.dissipative);
        let prod: f64 = fp.eigen1.iter().map(|(r, i)| r.hypot(*i)).product();
        assert!((prod - 1e-3).abs() < 1e-12);
        let q = m.apply(&fp.beta1).unwrap();
        assert!((q[0] - fp.beta1[0]).abs() < 1e-12 && (q[1] - fp.beta1[1]).abs() < 1e-12);
    }

    #[test]
    fn toy_third_eigenvalue_is_dz_delta() {
        let m = toy_model(1.4, 1e-2, 1e-4, 1e-3, DEFAULT_BUDGET).unwrap();
        let fp = fixed_points(&m).unwrap();
        let b = [fp.beta1[0], fp.beta1[1], fp.beta1[2]];
        let dz = m.delta.as_ref().unwrap().partial(b, 2);
        assert!(fp.eigen1.iter().any(|(r, i)| (r - dz).abs() < 1e-12 && i.abs() < 1e-12));
    }

    #[test]
    fn inverse_branch() {
        let f = Unimodal::quadratic(C).unwrap();
        let u = f.inverse(0.5).unwrap();
        assert!((u - (C - 0.5f64).sqrt()).abs() < 1e-13);
        assert!(f.critical().abs() < 1e-15);
    }

    #[test]
    fn map_json_round_trip() {
        let m = toy_model(C, 1e-2, 1e-3, 1e-3, DEFAULT_BUDGET).unwrap();
        let s = m.to_json();
        assert!(s.contains("\"kind\":\"toy\"") && s.contains("\"box\""));
        assert_eq!(HenonMap::from_json(&s).unwrap(), m);
    }

    #[test]
    fn split_increments_are_relative() {
        let bx = default_box2();
        let mut bx3 = bx.to_vec();
        bx3.push(default_zaxis());
        let slope = Field::fit(|p| 1e-40 * (1.0 + p[0] * p[2]), &[2, 1, 2], &bx3).unwrap();
        let q = SplitField::new(Field::fit(|p| p[1], &[1, 1], &bx).unwrap(), Some(slope)).unwrap();
        let p = [0.5, 0.1, 0.3];
        let h = 1e-3;
        let dz = q.increment_by(p, 2, h);
        let exact = 1e-40 * ((0.3 + h) * (1.0 + 0.5 * (0.3 + h)) - 0.3 * (1.0 + 0.5 * 0.3));
        assert!(((dz - exact) / exact).abs() < 1e-12);
    }
}
