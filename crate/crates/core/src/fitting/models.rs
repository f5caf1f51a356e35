use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::dynamics::spectral_mismatch;
use crate::quantities::OrdinaryFrequency;
use crate::{Error, Result};

/// Which data axis sets a parameter's natural scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Scale {
    X,
    Y,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
    /// Lower bound is exclusive (the parameter must stay strictly above it).
    pub open_lower: bool,
    pub(crate) scale: Scale,
}

const fn free(name: &'static str, scale: Scale) -> ParamSpec {
    ParamSpec {
        name,
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        open_lower: false,
        scale,
    }
}

const fn non_negative(name: &'static str, scale: Scale) -> ParamSpec {
    ParamSpec {
        name,
        lower: 0.0,
        upper: f64::INFINITY,
        open_lower: false,
        scale,
    }
}

const fn positive(name: &'static str, scale: Scale) -> ParamSpec {
    ParamSpec {
        name,
        lower: 0.0,
        upper: f64::INFINITY,
        open_lower: true,
        scale,
    }
}

/// A parametric model `y = f(x; θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FitModel {
    /// `A·exp(−(t − t_ref)/τ) [+ B]`
    SingleExponential {
        background: bool,
        #[serde(default)]
        t_ref: f64,
    },
    /// `τ₁ / (1 + C/(1 + 4Δ²/κ²))` with Δ and κ in Hz.
    TauDetuning,
    /// Lorentzian + Gaussian + linear baseline, widths as FWHM.
    LorentzianGaussian {
        #[serde(default)]
        lambda_ref: f64,
    },
    /// Plateau with tanh roll-off, symmetric in x, equal to T₀ at x = 0.
    TanhTransmission,
    /// `T∞·(1 − exp(−L/L₀))`
    ExponentialSaturation,
    /// Lorentzian peak with different half widths on either side.
    AsymmetricLorentzian,
}

impl FitModel {
    pub fn params(&self) -> Vec<ParamSpec> {
        use Scale::*;
        match self {
            FitModel::SingleExponential { background, .. } => {
                let mut v = vec![non_negative("amplitude", Y), positive("tau", X)];
                if *background {
                    v.push(free("background", Y));
                }
                v
            }
            FitModel::TauDetuning => vec![non_negative("C", Unit), positive("kappa_hz", X), positive("tau1_s", Y)],
            FitModel::LorentzianGaussian { .. } => vec![
                non_negative("lorentz_amplitude", Y),
                free("lorentz_center_nm", X),
                positive("lorentz_fwhm_nm", X),
                non_negative("gauss_amplitude", Y),
                free("gauss_center_nm", X),
                positive("gauss_fwhm_nm", X),
                free("baseline", Y),
                free("slope", Unit),
            ],
            FitModel::TanhTransmission => vec![free("plateau", Y), free("half_width", X), positive("rolloff", X)],
            FitModel::ExponentialSaturation => vec![free("t_inf", Y), positive("l0", X)],
            FitModel::AsymmetricLorentzian => vec![
                free("amplitude", Y),
                free("center", X),
                positive("width_left", X),
                positive("width_right", X),
            ],
        }
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        self.params().iter().map(|p| p.name).collect()
    }

    pub fn n_params(&self) -> usize {
        self.params().len()
    }

    pub fn formula(&self) -> &'static str {
        match self {
            FitModel::SingleExponential { background: false, .. } => "amplitude*exp(-(x-t_ref)/tau)",
            FitModel::SingleExponential { background: true, .. } => "amplitude*exp(-(x-t_ref)/tau)+background",
            FitModel::TauDetuning => "tau1_s/(1+C/(1+4*x^2/kappa_hz^2))",
            FitModel::LorentzianGaussian { .. } => {
                "lorentz_amplitude/(1+(2*(x-lorentz_center_nm)/lorentz_fwhm_nm)^2)\
                 +gauss_amplitude*exp(-4*ln(2)*((x-gauss_center_nm)/gauss_fwhm_nm)^2)\
                 +baseline+slope*(x-lambda_ref)"
            }
            FitModel::TanhTransmission => {
                "plateau*(1-tanh((|x|-half_width)/rolloff))/(1-tanh(-half_width/rolloff))"
            }
            FitModel::ExponentialSaturation => "t_inf*(1-exp(-x/l0))",
            FitModel::AsymmetricLorentzian => {
                "amplitude/(1+((x-center)/w)^2), w=width_left for x<center else width_right"
            }
        }
    }

    pub fn eval(&self, x: f64, p: &[f64]) -> f64 {
        match *self {
            FitModel::SingleExponential { background, t_ref } => {
                let v = p[0] * (-(x - t_ref) / p[1]).exp();
                if background {
                    v + p[2]
                } else {
                    v
                }
            }
            FitModel::TauDetuning => p[2] / (p[0] * spectral_mismatch(OrdinaryFrequency(p[1]), OrdinaryFrequency(x)) + 1.0),
            FitModel::LorentzianGaussian { lambda_ref } => {
                lorentzian_fwhm(x, p[0], p[1], p[2]) + gaussian_fwhm(x, p[3], p[4], p[5]) + p[6] + p[7] * (x - lambda_ref)
            }
            FitModel::TanhTransmission => {
                let (t0, x0, s) = (p[0], p[1], p[2]);
                t0 * (1.0 - ((x.abs() - x0) / s).tanh()) / (1.0 - (-x0 / s).tanh())
            }
            FitModel::ExponentialSaturation => p[0] * -(-x / p[1]).exp_m1(),
            FitModel::AsymmetricLorentzian => {
                let w = if x < p[1] { p[2] } else { p[3] };
                let u = (x - p[1]) / w;
                p[0] / (1.0 + u * u)
            }
        }
    }

    pub(crate) fn has_analytic_gradient(&self) -> bool {
        matches!(self, FitModel::SingleExponential { .. } | FitModel::TauDetuning)
    }

    /// ∂f/∂θ for models with closed-form derivatives.
    pub(crate) fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        match *self {
            FitModel::SingleExponential { background, t_ref } => {
                let dt = x - t_ref;
                let e = (-dt / p[1]).exp();
                out[0] = e;
                out[1] = p[0] * e * dt / (p[1] * p[1]);
                if background {
                    out[2] = 1.0;
                }
            }
            FitModel::TauDetuning => {
                let (c, kappa, tau1) = (p[0], p[1], p[2]);
                let q = 4.0 * x * x / (kappa * kappa);
                let f = 1.0 / (1.0 + q);
                let den = 1.0 + c * f;
                out[0] = -tau1 * f / (den * den);
                let df_dkappa = f * f * 2.0 * q / kappa;
                out[1] = -tau1 * c * df_dkappa / (den * den);
                out[2] = 1.0 / den;
            }
            _ => unreachable!("no analytic gradient for {self:?}"),
        }
    }

    pub(crate) fn check_params(&self, p: &[f64]) -> Result<()> {
        let specs = self.params();
        if p.len() != specs.len() {
            return Err(Error::domain(format!("{} parameters expected, got {}", specs.len(), p.len())));
        }
        for (v, s) in p.iter().zip(&specs) {
            let below = if s.open_lower { *v <= s.lower } else { *v < s.lower };
            if !v.is_finite() || below || *v > s.upper {
                return Err(Error::domain(format!("parameter {} = {v} out of range", s.name)));
            }
        }
        Ok(())
    }

    /// Data-driven starting point.
    pub fn initial_guess(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        match *self {
            FitModel::SingleExponential { background, t_ref } => exponential_guess(x, y, background, t_ref),
            FitModel::TauDetuning => tau_detuning_guess(x, y),
            FitModel::LorentzianGaussian { lambda_ref } => super::spectrum::spectrum_guess(x, y, lambda_ref),
            FitModel::TanhTransmission => {
                let (t0, _) = peak(x, y);
                let x50 = abs_crossing(x, y, 0.5 * t0).unwrap_or_else(|| max_abs(x));
                let x88 = abs_crossing(x, y, 0.88 * t0).unwrap_or(0.0);
                let x12 = abs_crossing(x, y, 0.12 * t0).unwrap_or(x50 * 1.5);
                let s = ((x12 - x88) / 2.0).max(x50 * 0.02).max(f64::MIN_POSITIVE);
                Ok(vec![t0, x50, s])
            }
            FitModel::ExponentialSaturation => {
                let (t_inf, _) = peak(x, y);
                let l0 = abs_crossing_rising(x, y, (1.0 - (-1.0f64).exp()) * t_inf).unwrap_or_else(|| max_abs(x) / 3.0);
                Ok(vec![t_inf, l0.max(f64::MIN_POSITIVE)])
            }
            FitModel::AsymmetricLorentzian => {
                let (a, i) = peak(x, y);
                let (left, right) = half_widths(x, y, i, 0.5 * a);
                Ok(vec![a, x[i], left, right])
            }
        }
    }
}

pub(crate) fn lorentzian_fwhm(x: f64, a: f64, x0: f64, fwhm: f64) -> f64 {
    let u = 2.0 * (x - x0) / fwhm;
    a / (1.0 + u * u)
}

pub(crate) fn gaussian_fwhm(x: f64, a: f64, x0: f64, fwhm: f64) -> f64 {
    let u = (x - x0) / fwhm;
    a * (-4.0 * LN_2 * u * u).exp()
}

/// Largest y and its index (first on ties).
pub(crate) fn peak(x: &[f64], y: &[f64]) -> (f64, usize) {
    debug_assert_eq!(x.len(), y.len());
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, &v) in y.iter().enumerate() {
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Points sorted by |x|.
fn by_abs(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = x.iter().map(|v| v.abs()).zip(y.iter().copied()).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// First |x| where a curve falling with |x| drops below `level`.
fn abs_crossing(x: &[f64], y: &[f64], level: f64) -> Option<f64> {
    let v = by_abs(x, y);
    v.windows(2).find(|w| w[0].1 >= level && w[1].1 < level).map(|w| interp(w[0], w[1], level))
}

/// First |x| where a curve rising with |x| exceeds `level`.
fn abs_crossing_rising(x: &[f64], y: &[f64], level: f64) -> Option<f64> {
    let v = by_abs(x, y);
    v.windows(2).find(|w| w[0].1 < level && w[1].1 >= level).map(|w| interp(w[0], w[1], level))
}

fn interp(a: (f64, f64), b: (f64, f64), level: f64) -> f64 {
    if b.1 == a.1 {
        return a.0;
    }
    a.0 + (level - a.1) * (b.0 - a.0) / (b.1 - a.1)
}

/// Distances from `x[i]` to where y falls below `level` on each side, for x
/// sorted ascending. Falls back to the distance to the data edge.
pub(crate) fn half_widths(x: &[f64], y: &[f64], i: usize, level: f64) -> (f64, f64) {
    let mut left = (x[i] - x[0]).max(f64::MIN_POSITIVE);
    for k in (0..i).rev() {
        if y[k] < level {
            left = x[i] - interp((x[k], y[k]), (x[k + 1], y[k + 1]), level);
            break;
        }
    }
    let n = x.len();
    let mut right = (x[n - 1] - x[i]).max(f64::MIN_POSITIVE);
    for k in i + 1..n {
        if y[k] < level {
            right = interp((x[k - 1], y[k - 1]), (x[k], y[k]), level) - x[i];
            break;
        }
    }
    (left.max(f64::MIN_POSITIVE), right.max(f64::MIN_POSITIVE))
}

fn exponential_guess(x: &[f64], y: &[f64], background: bool, t_ref: f64) -> Result<Vec<f64>> {
    let n = x.len();
    let bg = if background {
        let tail = (n / 10).max(1);
        let mut t: Vec<f64> = y[n - tail..].to_vec();
        t.sort_by(f64::total_cmp);
        t[t.len() / 2].max(0.0)
    } else {
        0.0
    };
    let (top, imax) = peak(x, y);
    let floor = bg + 0.05 * (top - bg);
    // Weighted log-linear regression over the points well above background.
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &v) in x.iter().zip(y).skip(imax) {
        let s = v - bg;
        if v > floor && s > 0.0 {
            let w = s;
            let l = s.ln();
            sw += w;
            sx += w * t;
            sy += w * l;
            sxx += w * t * t;
            sxy += w * t * l;
        }
    }
    let det = sw * sxx - sx * sx;
    let slope = if det > 0.0 { (sw * sxy - sx * sy) / det } else { f64::NAN };
    let span = x[n - 1] - x[0];
    let tau = if slope < 0.0 && slope.is_finite() { -1.0 / slope } else { span / 3.0 };
    if !(tau > 0.0) {
        return Err(Error::domain("cannot estimate a decay time from this trace"));
    }
    let amp = if det > 0.0 {
        let intercept = (sy - slope * sx) / sw;
        (intercept + slope * t_ref).exp()
    } else {
        (top - bg).max(0.0) * ((x[imax] - t_ref) / tau).exp()
    };
    let mut p = vec![amp.max(0.0), tau];
    if background {
        p.push(bg);
    }
    Ok(p)
}

fn tau_detuning_guess(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let tau_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tau_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    if !(tau_min > 0.0) {
        return Err(Error::domain("lifetimes must be positive"));
    }
    let c = tau_max / tau_min - 1.0;
    let span = max_abs(x);
    let half = 0.5 * (tau_max + tau_min);
    let kappa = if c > 0.0 {
        abs_crossing_rising(x, y, half).map(|d| 2.0 * d).unwrap_or(2.0 * span)
    } else {
        span
    };
    Ok(vec![c, kappa.max(span * 1e-3).max(f64::MIN_POSITIVE), tau_max])
}
