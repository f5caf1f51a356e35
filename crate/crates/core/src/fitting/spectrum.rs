//! Cavity (Lorentzian) plus zero-phonon line (Gaussian) on a linear baseline.

use serde::{Deserialize, Serialize};

use super::models::{half_widths, FitModel};
use super::{least_squares_fit, FitOptions, FitResult};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFit {
    pub fit: FitResult,
    pub cavity_center_nm: f64,
    pub cavity_fwhm_nm: f64,
    /// λ_c / FWHM_c.
    pub quality_factor: f64,
    /// Lorentzian height above the baseline.
    pub cavity_height: f64,
    pub zpl_center_nm: f64,
    pub zpl_fwhm_nm: f64,
    /// Gaussian height above the baseline.
    pub zpl_height: f64,
    pub warnings: Vec<String>,
}

/// Fits `points = (λ in nm, intensity)`. The broader of the two strongest
/// peaks is taken as the cavity.
pub fn fit_spectrum(points: &[(f64, f64)], opts: &FitOptions) -> Result<SpectrumFit> {
    if points.len() < 20 {
        return Err(Error::domain("spectrum fit needs at least 20 samples"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let lambda_ref = 0.5 * (x[0] + x[x.len() - 1]);
    let model = FitModel::LorentzianGaussian { lambda_ref };
    let opts = FitOptions { strict: false, ..*opts };
    let fit = least_squares_fit(&model, &x, &y, None, None, &opts)?;
    Ok(summarize(fit))
}

pub(crate) fn summarize(fit: FitResult) -> SpectrumFit {
    let v = fit.values();
    let mut warnings = fit.warnings.clone();
    if let Some(r) = fit.correlation("lorentz_center_nm", "gauss_center_nm") {
        if r.abs() > 0.99 {
            warnings.push(format!("peak centers are strongly correlated ({r:.4}); features may be unresolved"));
        }
    }
    SpectrumFit {
        cavity_center_nm: v[1],
        cavity_fwhm_nm: v[2],
        quality_factor: v[1] / v[2],
        cavity_height: v[0],
        zpl_center_nm: v[4],
        zpl_fwhm_nm: v[5],
        zpl_height: v[3],
        warnings,
        fit,
    }
}

struct Peak {
    index: usize,
    height: f64,
}

/// Baseline from the spectrum edges, then the two most prominent maxima of
/// the lightly smoothed, baseline-subtracted signal.
pub(crate) fn spectrum_guess(x: &[f64], y: &[f64], lambda_ref: f64) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 8 || x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("spectrum needs at least 8 samples with increasing wavelength"));
    }
    let edge = (n / 20).max(2);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (xl, yl) = (mean(&x[..edge]), mean(&y[..edge]));
    let (xr, yr) = (mean(&x[n - edge..]), mean(&y[n - edge..]));
    let slope = (yr - yl) / (xr - xl);
    let base = yl + slope * (lambda_ref - xl);
    let d: Vec<f64> = x.iter().zip(y).map(|(&xi, &yi)| yi - base - slope * (xi - lambda_ref)).collect();
    let s: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(2), (i + 3).min(n));
            mean(&d[a..b])
        })
        .collect();
    let mut resid: Vec<f64> = d.iter().zip(&s).map(|(a, b)| (a - b).abs()).collect();
    resid.sort_by(f64::total_cmp);
    let noise = 1.4826 * resid[n / 2];

    let mut peaks: Vec<Peak> = (1..n - 1)
        .filter(|&i| s[i] >= s[i - 1] && s[i] > s[i + 1])
        .map(|i| Peak { index: i, height: s[i] })
        .collect();
    peaks.sort_by(|a, b| b.height.total_cmp(&a.height).then(a.index.cmp(&b.index)));
    let Some(p1) = peaks.first() else {
        return Err(Error::domain("no peak found in spectrum"));
    };
    if !(p1.height > 0.0) {
        return Err(Error::domain("no peak above the baseline"));
    }
    let (l1, r1) = half_widths(x, &s, p1.index, 0.5 * p1.height);
    let fwhm1 = l1 + r1;
    let x1 = x[p1.index];
    let p2 = peaks
        .iter()
        .skip(1)
        .find(|p| (x[p.index] - x1).abs() > 0.6 * fwhm1 && p.height > 0.1 * p1.height && p.height > 4.0 * noise);

    let (lor, gau) = match p2 {
        None => ((p1.height, x1, fwhm1), (0.0, x1, 0.5 * fwhm1)),
        Some(p2) => {
            let x2 = x[p2.index];
            let (l2, r2) = half_widths(x, &s, p2.index, 0.5 * p2.height);
            // Use the side facing away from the other peak.
            let fwhm2 = 2.0 * if x2 > x1 { r2 } else { l2 };
            let fwhm1 = 2.0 * if x2 > x1 { l1 } else { r1 };
            let a = (p1.height, x1, fwhm1);
            let b = (p2.height, x2, fwhm2);
            if fwhm1 >= fwhm2 {
                (a, b)
            } else {
                (b, a)
            }
        }
    };
    Ok(vec![lor.0, lor.1, lor.2, gau.0, gau.1, gau.2, base, slope])
}
