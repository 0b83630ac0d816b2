//! Universal objects of the degenerate fixed point: the inverse branch
//! `φ(x) = f_*⁻¹(x/s)` that builds the one-dimensional scope maps, its
//! Koenigs linearizer `K` (the universal diffeomorphism, normalized by
//! `K(τ) = 0`, `K'(τ) = 1`) and the Jacobian profile `K'(x) / K'(f_*(x))`.

use crate::error::{Error, Result};
use crate::funcspace::{gauss_legendre, Field, Interval};
use crate::maps::Unimodal;
use crate::renorm::unimodal_on_box;

use super::doubling::{self, FEIGENBAUM_POINT};

#[derive(Debug, Clone)]
pub struct UniversalProfile {
    f: Unimodal,
    s: f64,
    tip: f64,
    multiplier: f64,
}

impl UniversalProfile {
    pub fn new() -> Result<Self> {
        let g = doubling::standard();
        let f = unimodal_on_box(|x| g.unimodal(FEIGENBAUM_POINT, x), 48)?;
        let s = 1.0 / g.lambda();
        let mut out = Self { f, s, tip: FEIGENBAUM_POINT, multiplier: 0.0 };
        let mut x = out.tip;
        for _ in 0..200 {
            let nx = out.phi(x)?;
            let done = (nx - x).abs() < 1e-15;
            x = nx;
            if done {
                break;
            }
        }
        out.tip = x;
        out.multiplier = out.phi_slope(x)?;
        Ok(out)
    }

    /// The degenerate fixed point `f_*` in the normalization `f_*(0) = κ`.
    pub fn fixed_map(&self) -> &Unimodal {
        &self.f
    }

    pub fn scaling(&self) -> f64 {
        self.s
    }

    /// x-coordinate of the degenerate tip, the fixed point of `φ`.
    pub fn tip(&self) -> f64 {
        self.tip
    }

    /// `φ'(τ)`, close to `λ²`.
    pub fn multiplier(&self) -> f64 {
        self.multiplier
    }

    pub fn phi(&self, x: f64) -> Result<f64> {
        self.f.inverse(x / self.s)
    }

    pub fn phi_slope(&self, x: f64) -> Result<f64> {
        let q = self.phi(x)?;
        Ok(1.0 / (self.s * self.f.slope(q)))
    }

    /// `K'(x) = lim_m Π_{j<m} φ'(φ^j x) / φ'(τ)`.
    pub fn linearizer_slope(&self, x: f64) -> Result<f64> {
        let mut q = x;
        let mut acc = 1.0;
        for _ in 0..80 {
            let d = self.phi_slope(q)?;
            acc *= d / self.multiplier;
            q = self.phi(q)?;
            if (q - self.tip).abs() < 1e-16 {
                break;
            }
        }
        if !acc.is_finite() || acc <= 0.0 {
            return Err(Error::Convergence(format!("linearizer slope at {x}")));
        }
        Ok(acc)
    }

    /// `K(x) = ∫_τ^x K'`, by 24-point Gauss–Legendre.
    pub fn linearizer(&self, x: f64) -> Result<f64> {
        let (ts, ws) = gauss_legendre(24);
        let h = x - self.tip;
        let mut acc = 0.0;
        for (t, w) in ts.iter().zip(ws) {
            acc += w * self.linearizer_slope(self.tip + t * h)?;
        }
        Ok(acc * h)
    }

    /// Limit profile of `Jac RⁿF / b^{2ⁿ}`.
    pub fn jacobian_profile(&self, x: f64) -> Result<f64> {
        Ok(self.linearizer_slope(x)? / self.linearizer_slope(self.f.value(x))?)
    }

    pub fn jacobian_profile_field(&self, domain: Interval, degree: usize) -> Result<Field> {
        Field::try_fit(|p| self.jacobian_profile(p[0]), &[degree], &[domain])
    }

    /// `v_*(ξ) = K(ξ + τ)` in tip-centered coordinates.
    pub fn diffeomorphism_field(&self, domain: Interval, degree: usize) -> Result<Field> {
        Field::try_fit(|p| self.linearizer(p[0] + self.tip), &[degree], &[domain])
    }
}
