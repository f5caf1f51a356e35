//! Time-binned decay data and log-linear rate extraction.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::quantities::Duration;
use crate::{Error, Result};

/// Time-correlated photon-counting bins are 1.28 ns wide on the reference setup.
pub const DEFAULT_BIN_WIDTH: Duration = Duration(1.28e-9);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    /// Excited-state population from a simulation, in [0, 1].
    Simulated,
    /// Photon counts per bin.
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub bin_width: Duration,
    pub kind: TraceKind,
}

/// Simulated values may exceed [0, 1] by integrator rounding up to this much.
const SIMULATED_SLACK: f64 = 1e-9;

impl DecayTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>, bin_width: Duration, kind: TraceKind) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::domain(format!(
                "trace has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::domain("trace is empty"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("trace times must be finite and strictly increasing"));
        }
        if !(bin_width.0 > 0.0) {
            return Err(Error::domain("bin width must be positive"));
        }
        let mut values = values;
        match kind {
            TraceKind::Measured => {
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::domain("measured trace values must be finite and non-negative"));
                }
            }
            TraceKind::Simulated => {
                if values
                    .iter()
                    .any(|v| !(v.is_finite() && *v >= -SIMULATED_SLACK && *v <= 1.0 + SIMULATED_SLACK))
                {
                    return Err(Error::domain("simulated populations must lie in [0, 1]"));
                }
                for v in &mut values {
                    *v = v.clamp(0.0, 1.0);
                }
            }
        }
        Ok(Self {
            times,
            values,
            bin_width,
            kind,
        })
    }

    /// Simulated trace; bin width is taken from the first grid spacing.
    pub fn simulated(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let bw = if times.len() >= 2 { times[1] - times[0] } else { 1.0 };
        Self::new(times, values, Duration(bw), TraceKind::Simulated)
    }

    pub fn measured(times: Vec<f64>, counts: Vec<f64>, bin_width: Duration) -> Result<Self> {
        Self::new(times, counts, bin_width, TraceKind::Measured)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Drops the first `k` bins (e.g. to skip the instrument response).
    pub fn skip_bins(&self, k: usize) -> Result<Self> {
        if k >= self.len() {
            return Err(Error::domain("cannot skip every bin of the trace"));
        }
        Self::new(self.times[k..].to_vec(), self.values[k..].to_vec(), self.bin_width, self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonPositivePolicy {
    /// Truncate the window before the first non-positive value, with a warning.
    Shrink,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateExtractionConfig {
    /// Absolute window in seconds; `None` uses `[0.5, 3]·τ_est` after the peak.
    pub window: Option<(f64, f64)>,
    pub non_positive: NonPositivePolicy,
    /// Curvature (log units across the half-window) above which the estimate
    /// is flagged as biased, e.g. by a flat background.
    pub curvature_threshold: f64,
}

impl Default for RateExtractionConfig {
    fn default() -> Self {
        Self {
            window: None,
            non_positive: NonPositivePolicy::Shrink,
            curvature_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRateEstimate {
    /// Decay rate in s⁻¹.
    pub rate: f64,
    pub std_error: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    /// Quadratic coefficient of the log trace times the squared half-span.
    pub curvature: f64,
    pub curved: bool,
    pub warnings: Vec<String>,
}

const MIN_WINDOW_POINTS: usize = 10;

/// Coarse lifetime: time for the trace to fall by 1/e from its peak.
fn coarse_lifetime(trace: &DecayTrace) -> Result<(f64, f64)> {
    let (peak_idx, &peak) = trace
        .values
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
    if !(peak > 0.0) {
        return Err(Error::domain("trace has no positive values"));
    }
    let t_peak = trace.times[peak_idx];
    let level = peak / std::f64::consts::E;
    for i in peak_idx + 1..trace.len() {
        let v = trace.values[i];
        if v <= level {
            let (t0, v0) = (trace.times[i - 1], trace.values[i - 1]);
            let t1 = trace.times[i];
            let tc = if v > 0.0 && v0 > 0.0 && v0 != v {
                t0 + (t1 - t0) * (v0.ln() - level.ln()) / (v0.ln() - v.ln())
            } else {
                t1
            };
            return Ok((t_peak, tc - t_peak));
        }
    }
    Err(Error::domain("trace never decays to 1/e of its peak; give an explicit window"))
}

fn weighted_quadratic_curvature(t: &[f64], l: &[f64], w: &[f64], t_mid: f64, half: f64) -> f64 {
    let mut m = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for i in 0..t.len() {
        let x = (t[i] - t_mid) / half;
        let basis = Vector3::new(1.0, x, x * x);
        m += basis * basis.transpose() * w[i];
        rhs += basis * (w[i] * l[i]);
    }
    match m.lu().solve(&rhs) {
        Some(coef) => coef[2].abs(),
        None => 0.0,
    }
}

/// Weighted log-linear regression over a window. Weights are the values
/// themselves for measured traces (Poisson variance of a log count) and
/// uniform for simulated ones.
pub fn extract_decay_rate(trace: &DecayTrace, cfg: &RateExtractionConfig) -> Result<DecayRateEstimate> {
    let mut warnings = Vec::new();
    let (start, end) = match cfg.window {
        Some((a, b)) => {
            if !(b > a) {
                return Err(Error::domain("window end must exceed its start"));
            }
            (a, b)
        }
        None => {
            let (t_peak, tau) = coarse_lifetime(trace)?;
            (t_peak + 0.5 * tau, t_peak + 3.0 * tau)
        }
    };

    let mut idx: Vec<usize> = (0..trace.len())
        .filter(|&i| trace.times[i] >= start && trace.times[i] <= end)
        .collect();
    if let Some(pos) = idx.iter().position(|&i| trace.values[i] <= 0.0) {
        match cfg.non_positive {
            NonPositivePolicy::Error => {
                return Err(Error::domain(format!(
                    "non-positive value at t = {:e} s inside the fit window",
                    trace.times[idx[pos]]
                )))
            }
            NonPositivePolicy::Shrink => {
                warnings.push(format!(
                    "window shrunk at t = {:e} s because of a non-positive value",
                    trace.times[idx[pos]]
                ));
                idx.truncate(pos);
            }
        }
    }
    if idx.len() < MIN_WINDOW_POINTS {
        return Err(Error::domain(format!(
            "fit window [{start:e}, {end:e}] s holds {} usable samples, need {MIN_WINDOW_POINTS}",
            idx.len()
        )));
    }

    let t: Vec<f64> = idx.iter().map(|&i| trace.times[i]).collect();
    let l: Vec<f64> = idx.iter().map(|&i| trace.values[i].ln()).collect();
    let w: Vec<f64> = match trace.kind {
        TraceKind::Measured => idx.iter().map(|&i| trace.values[i]).collect(),
        TraceKind::Simulated => vec![1.0; idx.len()],
    };
    let sw: f64 = w.iter().sum();
    let t_bar = t.iter().zip(&w).map(|(t, w)| t * w).sum::<f64>() / sw;
    let l_bar = l.iter().zip(&w).map(|(l, w)| l * w).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..t.len() {
        let dt = t[i] - t_bar;
        sxx += w[i] * dt * dt;
        sxy += w[i] * dt * (l[i] - l_bar);
    }
    let slope = sxy / sxx;
    let intercept = l_bar - slope * t_bar;
    let ssr: f64 = (0..t.len())
        .map(|i| {
            let r = l[i] - intercept - slope * t[i];
            w[i] * r * r
        })
        .sum();
    let dof = (t.len() - 2) as f64;
    let std_error = (ssr / dof / sxx).sqrt();

    let t_lo = t[0];
    let t_hi = t[t.len() - 1];
    let half = 0.5 * (t_hi - t_lo);
    let curvature = weighted_quadratic_curvature(&t, &l, &w, 0.5 * (t_lo + t_hi), half);
    let curved = curvature > cfg.curvature_threshold;
    if curved {
        warnings.push(format!(
            "log trace is curved ({curvature:.3e}); a background or multi-exponential decay biases the rate"
        ));
    }

    Ok(DecayRateEstimate {
        rate: -slope,
        std_error,
        window: (start, end),
        n_points: t.len(),
        curvature,
        curved,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp_trace(tau: f64, n: usize, kind: TraceKind, scale: f64, background: f64) -> DecayTrace {
        let times: Vec<f64> = (0..n).map(|i| i as f64 * DEFAULT_BIN_WIDTH.0).collect();
        let values = times.iter().map(|t| scale * (-t / tau).exp() + background).collect();
        DecayTrace::new(times, values, DEFAULT_BIN_WIDTH, kind).unwrap()
    }

    #[test]
    fn exact_exponential_rate() {
        for kind in [TraceKind::Simulated, TraceKind::Measured] {
            let tr = exp_trace(16e-9, 100, kind, 1.0, 0.0);
            let est = extract_decay_rate(&tr, &RateExtractionConfig::default()).unwrap();
            assert_relative_eq!(est.rate, 1.0 / 16e-9, max_relative = 1e-9);
            assert!(!est.curved);
            assert!(est.n_points >= 10);
        }
    }

    #[test]
    fn background_is_flagged() {
        let tr = exp_trace(16e-9, 100, TraceKind::Measured, 1e4, 500.0);
        let est = extract_decay_rate(&tr, &RateExtractionConfig::default()).unwrap();
        assert!(est.rate < 1.0 / 16e-9);
        assert!(est.curved);
        assert!(!est.warnings.is_empty());
    }

    #[test]
    fn non_positive_policy() {
        let mut tr = exp_trace(16e-9, 100, TraceKind::Measured, 1e4, 0.0);
        tr.values[30] = 0.0;
        let window = Some((5e-9, 60e-9));
        let err = extract_decay_rate(&tr, &RateExtractionConfig { window, non_positive: NonPositivePolicy::Error, ..Default::default() });
        assert!(err.is_err());
        let est = extract_decay_rate(&tr, &RateExtractionConfig { window, ..Default::default() }).unwrap();
        assert!(est.warnings.iter().any(|w| w.contains("shrunk")));
        assert_relative_eq!(est.rate, 1.0 / 16e-9, max_relative = 1e-9);
    }

    #[test]
    fn too_few_points() {
        let tr = exp_trace(16e-9, 100, TraceKind::Simulated, 1.0, 0.0);
        let cfg = RateExtractionConfig { window: Some((0.0, 5e-9)), ..Default::default() };
        assert!(extract_decay_rate(&tr, &cfg).is_err());
    }

    #[test]
    fn trace_validation() {
        let bw = DEFAULT_BIN_WIDTH;
        assert!(DecayTrace::new(vec![0.0, 0.0], vec![1.0, 1.0], bw, TraceKind::Measured).is_err());
        assert!(DecayTrace::new(vec![0.0, 1.0], vec![1.0, -1.0], bw, TraceKind::Measured).is_err());
        assert!(DecayTrace::new(vec![0.0, 1.0], vec![1.0, 1.5], bw, TraceKind::Simulated).is_err());
        assert!(DecayTrace::new(vec![0.0, 1.0], vec![1.0], bw, TraceKind::Simulated).is_err());
        let tr = DecayTrace::new(vec![0.0, 1.0], vec![1.0 + 1e-12, 0.5], bw, TraceKind::Simulated).unwrap();
        assert_eq!(tr.values[0], 1.0);
    }
}
