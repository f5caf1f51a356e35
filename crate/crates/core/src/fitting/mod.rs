//! Weighted nonlinear least squares and the fit models used in the analysis:
//! exponential decays, lifetime versus detuning, cavity/ZPL spectra and the
//! transmission-tolerance curves.
//!
//! Every fit returns a [`FitResult`] that carries the model it used, so a
//! serialized result can be re-evaluated without extra context.

mod lm;
mod models;
mod spectrum;

pub use lm::FitOptions;
pub use models::{FitModel, ParamSpec};
pub use spectrum::{fit_spectrum, SpectrumFit};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dynamics::{DecayTrace, TraceKind};
use crate::{Error, Result};

use lm::Problem;
use models::Scale;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParam {
    pub name: String,
    pub value: f64,
    /// `None` when the parameter is not identifiable from the data.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub formula: String,
    pub params: Vec<FittedParam>,
    pub n_points: usize,
    /// Whether per-point uncertainties were supplied.
    pub weighted: bool,
    pub chi_square: f64,
    pub reduced_chi_square: Option<f64>,
    /// Euclidean norm of the weighted residual vector.
    pub residual_norm: f64,
    pub n_iterations: usize,
    pub converged: bool,
    /// Parameter covariance, in parameter order. Rows and columns of
    /// unidentifiable parameters are zero.
    pub covariance: Vec<Vec<f64>>,
    pub unidentifiable: Vec<String>,
    /// Parameters that finished pinned to a bound.
    pub at_bound: Vec<String>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.params[i].value)
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index(name).and_then(|i| self.params[i].std_error)
    }

    pub fn correlation(&self, a: &str, b: &str) -> Option<f64> {
        let (i, j) = (self.index(a)?, self.index(b)?);
        let d = (self.covariance[i][i] * self.covariance[j][j]).sqrt();
        (d > 0.0).then(|| self.covariance[i][j] / d)
    }

    /// Model prediction at `x` with the fitted parameters.
    pub fn predict(&self, x: f64) -> f64 {
        self.model.eval(x, &self.values())
    }
}

/// Minimizes Σ((yᵢ − f(xᵢ; θ))/σᵢ)². With `init = None` the model's own
/// data-driven guess is used.
pub fn least_squares_fit(
    model: &FitModel,
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    init: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<FitResult> {
    let specs = model.params();
    let m = specs.len();
    if x.len() != y.len() {
        return Err(Error::domain(format!("x has {} points but y has {}", x.len(), y.len())));
    }
    if x.len() < m {
        return Err(Error::domain(format!("{} points cannot determine {m} parameters", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::domain("data contain non-finite values"));
    }
    let w = match sigma {
        Some(s) => {
            if s.len() != x.len() {
                return Err(Error::domain("sigma length differs from data length"));
            }
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::domain("sigma values must be positive"));
            }
            s.iter().map(|v| 1.0 / v).collect()
        }
        None => vec![1.0; x.len()],
    };
    let init = match init {
        Some(p) => p.to_vec(),
        None => model.initial_guess(x, y)?,
    };
    model.check_params(&init)?;

    let x_scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let y_scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let scales = specs
        .iter()
        .map(|s| match s.scale {
            Scale::X => x_scale,
            Scale::Y => y_scale,
            Scale::Unit => 1.0,
        })
        .collect();
    let prob = Problem {
        model,
        specs: specs.clone(),
        x,
        y,
        w,
        scales,
    };
    let out = lm::minimize(&prob, &init, opts);

    let n = x.len();
    let chi_square = out.residuals.norm_squared();
    let dof = n - m;
    let reduced = (dof > 0).then(|| chi_square / dof as f64);
    let mut warnings = Vec::new();
    if !out.converged {
        warnings.push(format!("did not converge within {} iterations", opts.max_iterations));
    }
    if reduced.is_none() {
        warnings.push("no degrees of freedom; covariance is not scaled by reduced chi-square".into());
    }
    let (cov, unident) = covariance(&out.jacobian);
    let names: Vec<String> = specs.iter().map(|s| s.name.to_string()).collect();
    let unidentifiable: Vec<String> = unident.iter().map(|&j| names[j].clone()).collect();
    if !unidentifiable.is_empty() {
        if opts.strict {
            return Err(Error::DegenerateFit(format!(
                "normal matrix is singular; unidentifiable: {}",
                unidentifiable.join(", ")
            )));
        }
        warnings.push(format!("unidentifiable parameters: {}", unidentifiable.join(", ")));
    }
    let scale = reduced.unwrap_or(1.0);
    let covariance: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| cov[(i, j)] * scale).collect()).collect();
    let params = (0..m)
        .map(|j| FittedParam {
            name: names[j].clone(),
            value: out.params[j],
            std_error: (!unident.contains(&j)).then(|| covariance[j][j].max(0.0).sqrt()),
        })
        .collect();
    let at_bound = (0..m).filter(|&j| out.at_bound[j]).map(|j| names[j].clone()).collect();

    Ok(FitResult {
        model: *model,
        formula: model.formula().into(),
        params,
        n_points: n,
        weighted: sigma.is_some(),
        chi_square,
        reduced_chi_square: reduced,
        residual_norm: chi_square.sqrt(),
        n_iterations: out.n_iterations,
        converged: out.converged,
        covariance,
        unidentifiable,
        at_bound,
        warnings,
    })
}

/// (JᵀJ)⁻¹ via the eigen-decomposition of the column-normalized normal
/// matrix. Directions with eigenvalues below 1e-14 of the largest are
/// dropped (pseudo-inverse) and the parameters they involve reported.
fn covariance(jac: &DMatrix<f64>) -> (DMatrix<f64>, Vec<usize>) {
    let m = jac.ncols();
    let norms: Vec<f64> = (0..m).map(|j| jac.column(j).norm()).collect();
    let live: Vec<usize> = (0..m).filter(|&j| norms[j] > 0.0 && norms[j].is_finite()).collect();
    let mut unident: Vec<usize> = (0..m).filter(|j| !live.contains(j)).collect();
    let mut cov = DMatrix::zeros(m, m);
    if live.is_empty() {
        return (cov, unident);
    }
    let k = live.len();
    let mut a = DMatrix::zeros(k, k);
    for (ia, &ja) in live.iter().enumerate() {
        for (ib, &jb) in live.iter().enumerate() {
            a[(ia, ib)] = jac.column(ja).dot(&jac.column(jb)) / (norms[ja] * norms[jb]);
        }
    }
    let eig = SymmetricEigen::new(a);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v));
    let mut flagged = vec![false; k];
    let mut inv = DMatrix::zeros(k, k);
    for (e, &val) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(e);
        if val > 1e-14 * top {
            inv += v * v.transpose() / val;
        } else {
            for i in 0..k {
                if v[i].abs() > 0.1 {
                    flagged[i] = true;
                }
            }
        }
    }
    for (ia, &ja) in live.iter().enumerate() {
        if flagged[ia] {
            unident.push(ja);
            continue;
        }
        for (ib, &jb) in live.iter().enumerate() {
            if !flagged[ib] {
                cov[(ja, jb)] = inv[(ia, ib)] / (norms[ja] * norms[jb]);
            }
        }
    }
    unident.sort_unstable();
    (cov, unident)
}

/// Fits τ(Δ) = τ₁/(1 + C f(Δ)) to lifetimes measured at several detunings.
/// Points are `(Δ in Hz, τ in s, σ_τ in s)`; σ ≤ 0 or NaN on every point
/// means unweighted.
pub fn fit_tau_detuning(points: &[(f64, f64, f64)], opts: &FitOptions) -> Result<FitResult> {
    if points.len() < 4 {
        return Err(Error::domain("lifetime-versus-detuning fit needs at least 4 points"));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let first = x[0].abs();
    if x.iter().all(|d| d.abs() == first) {
        return Err(Error::DegenerateFit("all points share the same detuning".into()));
    }
    let weighted = points.iter().all(|p| p.2 > 0.0 && p.2.is_finite());
    let sigma: Option<Vec<f64>> = weighted.then(|| points.iter().map(|p| p.2).collect());
    let opts = FitOptions { strict: false, ..*opts };
    least_squares_fit(&FitModel::TauDetuning, &x, &y, sigma.as_deref(), None, &opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DecayFitConfig {
    pub with_background: bool,
    /// Bins dropped from the start (e.g. to step over the excitation pulse).
    pub skip_bins: usize,
}

/// Single-exponential fit from the trace maximum onward. Measured traces are
/// weighted with σᵢ = √max(yᵢ, 1); simulated ones are unweighted.
pub fn fit_decay_trace(trace: &DecayTrace, cfg: &DecayFitConfig, opts: &FitOptions) -> Result<FitResult> {
    let trace = trace.skip_bins(cfg.skip_bins)?;
    if trace.values.len() < 10 {
        return Err(Error::domain("decay fit needs at least 10 bins"));
    }
    if trace.values.iter().any(|v| *v < 0.0) {
        return Err(Error::domain("decay trace has negative values"));
    }
    if trace.values.iter().all(|v| *v == 0.0) {
        return Err(Error::domain("decay trace is all zero"));
    }
    let (_, imax) = models::peak(&trace.times, &trace.values);
    let x = &trace.times[imax..];
    let y = &trace.values[imax..];
    if x.len() < 10 {
        return Err(Error::domain("fewer than 10 bins after the trace maximum"));
    }
    let sigma: Option<Vec<f64>> = match trace.kind {
        TraceKind::Measured => Some(y.iter().map(|v| v.max(1.0).sqrt()).collect()),
        TraceKind::Simulated => None,
    };
    let model = FitModel::SingleExponential {
        background: cfg.with_background,
        t_ref: x[0],
    };
    least_squares_fit(&model, x, y, sigma.as_deref(), None, opts)
}

/// The three transmission-tolerance curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransmissionKind {
    Tanh,
    ExponentialSaturation,
    AsymmetricLorentzian,
}

impl TransmissionKind {
    pub fn model(self) -> FitModel {
        match self {
            TransmissionKind::Tanh => FitModel::TanhTransmission,
            TransmissionKind::ExponentialSaturation => FitModel::ExponentialSaturation,
            TransmissionKind::AsymmetricLorentzian => FitModel::AsymmetricLorentzian,
        }
    }
}

pub fn eval_transmission_model(kind: TransmissionKind, x: f64, params: &[f64]) -> Result<f64> {
    let model = kind.model();
    model.check_params(params)?;
    Ok(model.eval(x, params))
}

pub fn fit_transmission(kind: TransmissionKind, x: &[f64], y: &[f64], sigma: Option<&[f64]>, opts: &FitOptions) -> Result<FitResult> {
    least_squares_fit(&kind.model(), x, y, sigma, None, opts)
}

#[cfg(test)]
mod tests;
