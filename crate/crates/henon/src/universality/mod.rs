//! Average Jacobian, distortion along periodic orbits, the universal Jacobian
//! profile, the strong-stable rate of toy models and the scope-map
//! decomposition.

pub mod doubling;
pub mod oracle;
pub mod scope;

use rayon::prelude::*;
use serde::Serialize;

use crate::cantor::{cantor_sample, measure_integrate, Hierarchy};
use crate::error::{Error, Result};
use crate::funcspace::{Field, Interval};
use crate::maps::{default_box2, default_zaxis, Point};
use crate::stats::{geometric_fit, linear_fit, LinearFit};

pub use oracle::UniversalProfile;
pub use scope::{
    affine_part, nonlinear_asymptote, scope_decomposition, tilt_scaling, AffinePart, AsymptoteReport,
    ScopeDecomposition, TiltRow,
};

/// Both estimators of `log b_F` and their relative gap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JacobianAverage {
    pub level: usize,
    pub value: f64,
    pub log_value: f64,
    pub cantor: f64,
    pub birkhoff: f64,
    /// `|b_cantor / b_birkhoff − 1|`.
    pub gap: f64,
}

impl JacobianAverage {
    /// `log b^{2^n}`, rejected when `b^{2^n}` leaves the double range.
    pub fn log_power(&self, n: usize) -> Result<f64> {
        let e = self.log_value * (1u64 << n) as f64;
        if e < f64::MIN_POSITIVE.ln() {
            return Err(Error::Underflow(n));
        }
        Ok(e)
    }
}

const AGREE_FAIL: f64 = 0.05;

/// `b_F = exp ∫ log Jac F dμ` from the level-`n` Cantor sample and from the
/// Birkhoff average along the tip orbit.
pub fn average_jacobian(h: &Hierarchy, n: usize) -> Result<JacobianAverage> {
    if n > h.depth() {
        return Err(Error::Scope(format!("level {n} beyond depth {}", h.depth())));
    }
    let f = h.map(0);
    let (cantor, birkhoff) = measure_integrate(|p| f.jac_det(p).abs().ln(), h, n)?;
    if !cantor.is_finite() || !birkhoff.is_finite() {
        return Err(Error::Measure("vanishing Jacobian on the Cantor sample".into()));
    }
    let gap = ((cantor - birkhoff).exp() - 1.0).abs();
    if gap > AGREE_FAIL {
        return Err(Error::Measure(format!("relative gap {gap:.3e} between estimators")));
    }
    Ok(JacobianAverage { level: n, value: cantor.exp(), log_value: cantor, cantor, birkhoff, gap })
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionReport {
    pub level: usize,
    pub log_b: f64,
    pub samples: usize,
    /// `sup |Jac F^{2^n}(w) / b^{2^n} − 1|`.
    pub sup: f64,
}

/// Distortion of `Jac F^{2^n}` over Cantor points four per level-`n` box.
pub fn distortion_check(h: &Hierarchy, n: usize) -> Result<DistortionReport> {
    if n > h.depth() {
        return Err(Error::Scope(format!("level {n} beyond depth {}", h.depth())));
    }
    let avg = average_jacobian(h, h.depth())?;
    let target = avg.log_power(n)?;
    let pts = cantor_sample(h, (n + 2).min(h.depth()))?.points;
    let f = h.map(0);
    let period = 1usize << n;
    let sup = pts
        .par_iter()
        .map(|&p| {
            let mut q = p;
            let mut acc = 0.0;
            for _ in 0..period {
                acc += f.jac_det(q).abs().ln();
                q = f.step(q);
            }
            (acc - target).exp_m1().abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(DistortionReport { level: n, log_b: avg.log_value, samples: pts.len(), sup })
}

/// `a_n(x)`: mean over `(y, z)` of `Jac RⁿF / b^{2ⁿ}`.
#[derive(Debug, Clone, Serialize)]
pub struct JacobianProfile {
    pub level: usize,
    #[serde(skip)]
    pub profile: Field,
    /// Largest relative deviation from the mean over the `(y, z)` samples.
    pub spread: f64,
    /// `sup |a_n − a_{n+1}|` when level `n + 1` is available.
    pub step: Option<f64>,
    pub defect: f64,
}

pub const PROFILE_DEGREE: usize = 24;

/// Transverse sample coordinates `(y, z)` over the middle 80% of the box.
fn transverse_samples(dims: usize) -> Vec<(f64, f64)> {
    let ys = default_box2()[1].inflate(-0.1).linspace(9);
    let zs = if dims == 3 { default_zaxis().inflate(-0.1).linspace(5) } else { vec![0.0] };
    ys.iter().flat_map(|&y| zs.iter().map(move |&z| (y, z))).collect()
}

fn profile_at(h: &Hierarchy, n: usize, log_scale: f64) -> Result<(Field, f64)> {
    let map = h.map(n);
    let yz = transverse_samples(h.dims());
    let scale = log_scale.exp();
    let xdom = default_box2()[0];
    let column = |x: f64| -> (f64, f64) {
        let vals: Vec<f64> = yz.iter().map(|&(y, z)| map.jac_det([x, y, z]) / scale).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let spread = vals.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
        (mean, spread)
    };
    let profile = Field::try_fit(
        |p| {
            let (m, _) = column(p[0]);
            if m.is_finite() && m > 0.0 {
                Ok(m)
            } else {
                Err(Error::Underflow(n))
            }
        },
        &[PROFILE_DEGREE],
        &[xdom],
    )?;
    let spread = xdom.linspace(33).iter().map(|&x| column(x).1).fold(0.0, f64::max);
    Ok((profile, spread))
}

pub fn jacobian_universality(h: &Hierarchy, n: usize) -> Result<JacobianProfile> {
    if n > h.depth() {
        return Err(Error::Scope(format!("level {n} beyond depth {}", h.depth())));
    }
    let avg = average_jacobian(h, h.depth())?;
    let (profile, spread) = profile_at(h, n, avg.log_power(n)?)?;
    let step = if n < h.depth() {
        match avg.log_power(n + 1) {
            Ok(e) => {
                let (next, _) = profile_at(h, n + 1, e)?;
                Some(sup_gap(&profile, &next))
            }
            Err(_) => None,
        }
    } else {
        None
    };
    Ok(JacobianProfile { level: n, profile, spread, step, defect: spread + step.unwrap_or(0.0) })
}

fn sup_gap(a: &Field, b: &Field) -> f64 {
    a.domain()[0].linspace(101).iter().map(|&x| (a.value(&[x]) - b.value(&[x])).abs()).fold(0.0, f64::max)
}

/// Slope of `log ∂_zδ_n(τ_n)` against `2ⁿ`, an estimate of `log b₂`.
#[derive(Debug, Clone, Serialize)]
pub struct StrongStableFit {
    pub levels: Vec<usize>,
    pub log_rates: Vec<f64>,
    pub fit: LinearFit,
    pub b2: f64,
}

pub fn strong_stable_rate(h: &Hierarchy, levels: &[usize]) -> Result<StrongStableFit> {
    if h.dims() != 3 {
        return Err(Error::Invalid("strong-stable rate needs a three-dimensional tower".into()));
    }
    let tips = h.tips()?;
    let mut xs = Vec::new();
    let mut kept = Vec::new();
    let mut logs = Vec::new();
    for &n in levels {
        if n > h.depth() {
            return Err(Error::Scope(format!("level {n} beyond depth {}", h.depth())));
        }
        let d = h.map(n).delta.as_ref().map_or(0.0, |d| d.partial(tips[n], 2)).abs();
        if d > 0.0 && d.is_finite() {
            xs.push((1u64 << n) as f64);
            kept.push(n);
            logs.push(d.ln());
        }
    }
    let fit =
        linear_fit(&xs, &logs).ok_or_else(|| Error::Underflow(levels.iter().copied().max().unwrap_or(0)))?;
    Ok(StrongStableFit { levels: kept, log_rates: logs, b2: fit.slope.exp(), fit })
}

/// `b_F`, the planar factor `b₁` and `b₂ = b_F / b₁` of a toy model.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JacobianFactors {
    pub b_f: f64,
    pub b1: f64,
    pub b2: f64,
}

pub fn jacobian_factors(h: &Hierarchy, n: usize) -> Result<JacobianFactors> {
    let b_f = average_jacobian(h, n)?.value;
    let b1 = average_jacobian(&h.project_xy()?, n)?.value;
    Ok(JacobianFactors { b_f, b1, b2: b_f / b1 })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniversalData {
    pub b_f: f64,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
    #[serde(skip)]
    pub a: Field,
    #[serde(skip)]
    pub v_star: Field,
    /// Fitted ratio of successive `‖a_n − a_{n+1}‖`.
    pub rho_est: Option<f64>,
}

/// Universal data at level `n`, with `ρ` fitted from the profile steps of
/// levels `1..=n`.
pub fn universal_data(h: &Hierarchy, n: usize) -> Result<UniversalData> {
    let avg = average_jacobian(h, h.depth())?;
    let (b1, b2) = match (h.dims(), jacobian_factors(h, h.depth())) {
        (3, Ok(fac)) => (Some(fac.b1), Some(fac.b2)),
        _ => (None, None),
    };
    let prof = jacobian_universality(h, n)?;
    let mut idx = Vec::new();
    let mut steps = Vec::new();
    for m in 1..=n {
        if let Some(s) = jacobian_universality(h, m)?.step {
            idx.push(m as f64);
            steps.push(s);
        }
    }
    let rho_est = geometric_fit(&idx, &steps).map(|(r, _)| r);
    let oracle = UniversalProfile::new()?;
    let xdom: Interval = default_box2()[0];
    let shifted = Interval::new(xdom.lo - oracle.tip(), xdom.hi - oracle.tip())?;
    Ok(UniversalData {
        b_f: avg.value,
        b1,
        b2,
        a: prof.profile,
        v_star: oracle.diffeomorphism_field(shifted, PROFILE_DEGREE)?,
        rho_est,
    })
}

/// Log-Jacobian along an orbit, summed in log space.
pub fn log_jacobian_along(h: &Hierarchy, start: Point, steps: usize) -> f64 {
    let f = h.map(0);
    let mut q = start;
    let mut acc = 0.0;
    for _ in 0..steps {
        acc += f.jac_det(q).abs().ln();
        q = f.step(q);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{family_2d, toy_model};
    use crate::renorm::{tune_parameter, Settings};

    fn hierarchy(map: impl Fn(f64) -> Result<crate::maps::HenonMap> + Sync, n: usize) -> Hierarchy {
        let st = Settings::default();
        let tuned = tune_parameter(&map, doubling::FEIGENBAUM_POINT, n, &st).unwrap();
        Hierarchy::from_tower(&tuned.tower, &st).unwrap()
    }

    #[test]
    fn constant_jacobian_average() {
        let b = 1e-2;
        let h = hierarchy(|c| family_2d(c, b, 0.25), 4);
        let avg = average_jacobian(&h, 4).unwrap();
        assert!((avg.value / b - 1.0).abs() < 1e-12);
        assert!(distortion_check(&h, 3).unwrap().sup < 1e-10);
    }

    #[test]
    fn toy_model_factors() {
        let (b1, b2) = (1e-2, 1e-4);
        let h = hierarchy(|c| toy_model(c, b1, b2, 1e-3, 0.25), 3);
        let fac = jacobian_factors(&h, 3).unwrap();
        assert!((fac.b_f / (b1 * b2) - 1.0).abs() < 1e-10, "{fac:?}");
        assert!((fac.b1 / b1 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn underflow_is_reported() {
        let h = hierarchy(|c| family_2d(c, 1e-2, 0.25), 2);
        let avg = average_jacobian(&h, 2).unwrap();
        assert_eq!(avg.log_power(9), Err(Error::Underflow(9)));
    }
}
