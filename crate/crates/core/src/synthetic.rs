//! Synthetic datasets with known ground truth, for tests, benchmarks and
//! the `gen-synthetic` command. The defaults follow the reported device:
//! C = 0.14, κ/2π = 940 GHz, τ₁ = 15.9 ns, 1.28 ns bins.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::dynamics::{tau_of_detuning, DecayTrace, DEFAULT_BIN_WIDTH};
use crate::fitting::FitModel;
use crate::quantities::{Duration, OrdinaryFrequency};
use crate::{Error, Result};

pub const DEVICE_COOPERATIVITY: f64 = 0.14;
pub const DEVICE_KAPPA_HZ: f64 = 940e9;
pub const DEVICE_TAU1_S: f64 = 15.9e-9;
/// g₀/2π giving C ≈ 0.14 with the κ and τ₁ above.
pub const DEVICE_G0_HZ: f64 = 0.57e9;

/// Detunings 0, ±κ/4, ±κ/2, ±κ, ±2κ.
pub fn default_detunings(kappa_hz: f64) -> Vec<f64> {
    let mut v = vec![0.0];
    for f in [0.25, 0.5, 1.0, 2.0] {
        v.push(-f * kappa_hz);
        v.push(f * kappa_hz);
    }
    v.sort_by(f64::total_cmp);
    v
}

/// `(Δ, τ, σ_τ)` points on the τ(Δ) curve. With `rng`, Gaussian noise of
/// relative size `rel_sigma` is added; σ_τ is always `rel_sigma·τ`.
pub fn tau_detuning_points<R: Rng>(
    c: f64,
    kappa_hz: f64,
    tau1_s: f64,
    detunings: &[f64],
    rel_sigma: f64,
    rng: Option<&mut R>,
) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::with_capacity(detunings.len());
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = rng;
    for &d in detunings {
        let tau = tau_of_detuning(c, OrdinaryFrequency(kappa_hz), Duration(tau1_s), OrdinaryFrequency(d))?.0;
        let sigma = rel_sigma * tau;
        let noisy = match rng.as_deref_mut() {
            Some(r) => tau + sigma * normal.sample(r),
            None => tau,
        };
        out.push((d, noisy, sigma));
    }
    Ok(out)
}

/// Expected counts `A·exp(−t/τ) + B` at bin starts `t = i·bin_width`.
pub fn decay_expectation(amplitude: f64, tau_s: f64, background: f64, bin_width: Duration, n_bins: usize) -> (Vec<f64>, Vec<f64>) {
    let times: Vec<f64> = (0..n_bins).map(|i| i as f64 * bin_width.0).collect();
    let values = times.iter().map(|t| amplitude * (-t / tau_s).exp() + background).collect();
    (times, values)
}

/// Photon-counting histogram with Poisson noise around the expectation.
pub fn poisson_decay_trace<R: Rng>(
    amplitude: f64,
    tau_s: f64,
    background: f64,
    bin_width: Duration,
    n_bins: usize,
    rng: &mut R,
) -> Result<DecayTrace> {
    let (times, mean) = decay_expectation(amplitude, tau_s, background, bin_width, n_bins);
    let counts = poisson_sample(&mean, rng)?;
    DecayTrace::measured(times, counts, bin_width)
}

pub fn poisson_sample<R: Rng>(mean: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    mean.iter()
        .map(|&m| {
            if m <= 0.0 {
                return Ok(0.0);
            }
            Poisson::new(m)
                .map(|d| d.sample(rng))
                .map_err(|e| Error::Domain(format!("poisson mean {m}: {e}")))
        })
        .collect()
}

/// Default bin width and length used for synthetic traces (200 bins).
pub fn default_trace_shape() -> (Duration, usize) {
    (DEFAULT_BIN_WIDTH, 200)
}

/// A cavity Lorentzian and a ZPL Gaussian on a sloped baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpectrum {
    pub cavity_height: f64,
    pub cavity_center_nm: f64,
    pub cavity_fwhm_nm: f64,
    pub zpl_height: f64,
    pub zpl_center_nm: f64,
    pub zpl_fwhm_nm: f64,
    pub baseline: f64,
    pub slope_per_nm: f64,
    pub start_nm: f64,
    pub stop_nm: f64,
    pub n_samples: usize,
}

impl Default for SyntheticSpectrum {
    /// Cavity at Q ≈ 500 near 639 nm, ZPL at 637.2 nm.
    fn default() -> Self {
        Self {
            cavity_height: 1.0,
            cavity_center_nm: 639.0,
            cavity_fwhm_nm: 639.0 / 500.0,
            zpl_height: 0.6,
            zpl_center_nm: 637.2,
            zpl_fwhm_nm: 0.4,
            baseline: 0.1,
            slope_per_nm: 0.005,
            start_nm: 631.0,
            stop_nm: 647.0,
            n_samples: 641,
        }
    }
}

impl SyntheticSpectrum {
    pub fn lambda_ref(&self) -> f64 {
        0.5 * (self.start_nm + self.stop_nm)
    }

    pub fn model(&self) -> FitModel {
        FitModel::LorentzianGaussian { lambda_ref: self.lambda_ref() }
    }

    /// Parameter vector in [`FitModel::LorentzianGaussian`] order.
    pub fn params(&self) -> Vec<f64> {
        vec![
            self.cavity_height,
            self.cavity_center_nm,
            self.cavity_fwhm_nm,
            self.zpl_height,
            self.zpl_center_nm,
            self.zpl_fwhm_nm,
            self.baseline,
            self.slope_per_nm,
        ]
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        let n = self.n_samples.max(2);
        (0..n)
            .map(|i| self.start_nm + (self.stop_nm - self.start_nm) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Samples with Gaussian noise whose standard deviation is `noise` times
    /// the local intensity.
    pub fn sample<R: Rng>(&self, noise: f64, rng: Option<&mut R>) -> Vec<(f64, f64)> {
        let model = self.model();
        let p = self.params();
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut rng = rng;
        self.wavelengths()
            .into_iter()
            .map(|l| {
                let v = model.eval(l, &p);
                let e = match rng.as_deref_mut() {
                    Some(r) => noise * v * normal.sample(r),
                    None => 0.0,
                };
                (l, v + e)
            })
            .collect()
    }
}

/// Evaluates `model` at `x` and optionally adds Gaussian noise `sigma`.
pub fn sample_model<R: Rng>(model: &FitModel, params: &[f64], x: &[f64], sigma: f64, rng: Option<&mut R>) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = rng;
    x.iter()
        .map(|&xi| {
            let v = model.eval(xi, params);
            match rng.as_deref_mut() {
                Some(r) => v + sigma * normal.sample(r),
                None => v,
            }
        })
        .collect()
}

pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![start; n];
    }
    (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn detunings_symmetric() {
        let d = default_detunings(1.0);
        assert_eq!(d.len(), 9);
        assert_eq!(d[4], 0.0);
        assert_eq!(d[0], -d[8]);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let (bw, n) = default_trace_shape();
        let ta = poisson_decay_trace(1e4, DEVICE_TAU1_S, 0.0, bw, n, &mut a).unwrap();
        let tb = poisson_decay_trace(1e4, DEVICE_TAU1_S, 0.0, bw, n, &mut b).unwrap();
        assert_eq!(ta, tb);
    }

    #[test]
    fn spectrum_peaks_where_expected() {
        let s = SyntheticSpectrum::default();
        let pts = s.sample::<ChaCha8Rng>(0.0, None);
        let (l, _) = pts.iter().copied().fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        assert!((l - 639.0).abs() < 0.1);
    }
}
