//! Least-squares line fits used to read off decay rates.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 for a perfect fit.
    pub r2: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`. `None` with fewer than
/// two points or constant `x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs[..n].iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys[..n].iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept, r2 })
}

/// Fit `log v_i ≈ i·log ρ + c` over indices `xs`; returns `(ρ, fit)`.
/// Nonpositive values are skipped.
pub fn geometric_fit(xs: &[f64], values: &[f64]) -> Option<(f64, LinearFit)> {
    let (px, py): (Vec<f64>, Vec<f64>) =
        xs.iter().zip(values).filter(|(_, v)| **v > 0.0 && v.is_finite()).map(|(x, v)| (*x, v.ln())).unzip();
    let fit = linear_fit(&px, &py)?;
    Some((fit.slope.exp(), fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn geometric_rate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let vs: Vec<f64> = xs.iter().map(|x| 3.0 * 0.25f64.powf(*x)).collect();
        let (rho, fit) = geometric_fit(&xs, &vs).unwrap();
        assert!((rho - 0.25).abs() < 1e-12);
        assert!(fit.r2 > 0.999_999);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit(&[1.0], &[2.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }
}
