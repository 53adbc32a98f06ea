//! Least-squares power-law fits `value ≈ exp(intercept) h^slope`.

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Points that entered the fit.
    pub points: usize,
}

/// Sample of a swept quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub h: f64,
    pub value: f64,
    pub blowup: bool,
}

impl From<(f64, f64)> for FitPoint {
    fn from((h, value): (f64, f64)) -> Self {
        FitPoint { h, value, blowup: false }
    }
}

/// Ordinary least squares on `(ln h, ln value)`.
///
/// Points with a non-finite or non-positive coordinate are skipped, as are
/// blowup points when `drop_blowups` is set. At least three points with two
/// distinct `h` must remain.
pub fn fit_rate(points: &[FitPoint], drop_blowups: bool) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| !(drop_blowups && p.blowup))
        .filter(|p| p.h.is_finite() && p.h > 0.0 && p.value.is_finite() && p.value > 0.0)
        .map(|p| (p.h.ln(), p.value.ln()))
        .collect();
    let n = usable.len();
    if n < 3 {
        return Err(HarnessError::InsufficientData(format!("{n} usable point(s), need 3")));
    }
    let nf = n as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(HarnessError::InsufficientData("all h coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit { slope, intercept, r2, points: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[(f64, f64)]) -> Vec<FitPoint> {
        xs.iter().map(|&p| p.into()).collect()
    }

    #[test]
    fn exact_power_laws() {
        let f = fit_rate(&pts(&[(0.1, 0.3), (0.05, 0.15), (0.025, 0.075)]), true).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let f = fit_rate(&pts(&hs.map(|h: f64| (h, h.sqrt()))), true).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(fit_rate(&pts(&[(0.1, 1.0), (0.2, 2.0)]), true), Err(HarnessError::InsufficientData(_))));
        let mut p = pts(&[(0.1, 1.0), (0.2, 2.0), (0.4, 4.0)]);
        p[2].blowup = true;
        assert!(fit_rate(&p, true).is_err());
        assert_eq!(fit_rate(&p, false).unwrap().points, 3);
        assert!(fit_rate(&pts(&[(0.1, 1.0), (0.1, 2.0), (0.1, 4.0)]), true).is_err());
        assert!(fit_rate(&pts(&[(0.1, 1.0), (0.2, 0.0), (0.4, f64::NAN), (0.8, 3.0)]), true).is_err());
    }
}
