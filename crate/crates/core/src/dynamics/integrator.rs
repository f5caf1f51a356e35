//! Dormand–Prince 5(4) integrator for small complex linear systems.
//!
//! The step controller is the PI scheme from Hairer & Wanner's DOPRI5. Steps
//! are clipped so that every requested output time is hit exactly, which
//! avoids dense-output interpolation error in the reported trace.

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    /// Absolute tolerance. Populations are O(1), so this mainly guards
    /// components that decay toward zero.
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Fixed-step RK4 size used when the adaptive pass fails, if set.
    pub fallback_step: Option<f64>,
}

impl IntegratorConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol: rel_tol * 1e-3,
            max_steps: 20_000_000,
            fallback_step: None,
        }
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::with_rel_tol(1e-8)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub used_fallback: bool,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn axpy_into(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for i in 0..out.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, k) in terms {
            if *a != 0.0 {
                acc += k[i] * *a;
            }
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates `dy/dt = f(y)` from `t0`, writing the state at each time in
/// `outputs` (which must be non-decreasing and ≥ `t0`) through `observe`.
pub fn integrate<F, O>(
    mut rhs: F,
    y0: &[Complex64],
    t0: f64,
    outputs: &[f64],
    cfg: &IntegratorConfig,
    mut observe: O,
) -> Result<IntegrationStats>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
    O: FnMut(usize, &[Complex64]),
{
    check_outputs(t0, outputs)?;
    match adaptive(&mut rhs, y0, t0, outputs, cfg, &mut observe) {
        Ok(stats) => Ok(stats),
        Err(e) => match cfg.fallback_step {
            Some(h) => {
                log::warn!("adaptive integration failed ({e}); retrying with fixed step {h:e}");
                fixed_rk4(&mut rhs, y0, t0, outputs, h, &mut observe)
            }
            None => Err(e),
        },
    }
}

fn check_outputs(t0: f64, outputs: &[f64]) -> Result<()> {
    let mut prev = t0;
    for &t in outputs {
        if !t.is_finite() || t < prev {
            return Err(Error::domain("output times must be finite, non-decreasing and start at or after t0"));
        }
        prev = t;
    }
    Ok(())
}

fn error_norm(y: &[Complex64], y_new: &[Complex64], err: &[Complex64], cfg: &IntegratorConfig) -> f64 {
    let mut acc = 0.0;
    for i in 0..y.len() {
        let sc = cfg.abs_tol + cfg.rel_tol * y[i].norm().max(y_new[i].norm());
        let r = err[i].norm() / sc;
        acc += r * r;
    }
    (acc / y.len() as f64).sqrt()
}

fn initial_step<F>(rhs: &mut F, y0: &[Complex64], f0: &[Complex64], cfg: &IntegratorConfig, span: f64) -> f64
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = y0.len();
    let scale = |i: usize| cfg.abs_tol + cfg.rel_tol * y0[i].norm();
    let d0 = (y0.iter().enumerate().map(|(i, v)| (v.norm() / scale(i)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d1 = (f0.iter().enumerate().map(|(i, v)| (v.norm() / scale(i)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<Complex64> = y0.iter().zip(f0).map(|(y, f)| y + f * h0).collect();
    let mut f1 = vec![Complex64::new(0.0, 0.0); n];
    rhs(&y1, &mut f1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .enumerate()
        .map(|(i, (a, b))| ((a - b).norm() / scale(i)).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6 * span)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

fn adaptive<F, O>(
    rhs: &mut F,
    y0: &[Complex64],
    t0: f64,
    outputs: &[f64],
    cfg: &IntegratorConfig,
    observe: &mut O,
) -> Result<IntegrationStats>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
    O: FnMut(usize, &[Complex64]),
{
    let n = y0.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut stats = IntegrationStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k1 = vec![zero; n];
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut ytmp = vec![zero; n];
    let mut ynew = vec![zero; n];
    let mut errv = vec![zero; n];

    rhs(&y, &mut k1);
    stats.rhs_evals += 1;

    let t_end = outputs.last().copied().unwrap_or(t0);
    let span = (t_end - t0).max(f64::MIN_POSITIVE);
    let mut h = initial_step(rhs, &y, &k1, cfg, span);
    stats.rhs_evals += 1;
    let mut fac_old: f64 = 1e-4;
    let mut next_out = 0;

    while next_out < outputs.len() && outputs[next_out] <= t {
        observe(next_out, &y);
        next_out += 1;
    }

    let mut steps = 0usize;
    while next_out < outputs.len() {
        if steps >= cfg.max_steps {
            return Err(Error::Integration {
                last_time: t,
                reason: format!("step budget of {} exhausted", cfg.max_steps),
            });
        }
        steps += 1;
        let target = outputs[next_out];
        let h_unclipped = h;
        let mut clipped = false;
        if t + h >= target {
            h = target - t;
            clipped = true;
        }
        if h <= 1e-14 * t.abs().max(span) {
            if clipped {
                // Already at the output time up to rounding.
                t = target;
                while next_out < outputs.len() && outputs[next_out] <= t {
                    observe(next_out, &y);
                    next_out += 1;
                }
                h = h_unclipped;
                continue;
            }
            return Err(Error::Integration {
                last_time: t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }

        axpy_into(&mut ytmp, &y, h, &[(A21, &k1)]);
        rhs(&ytmp, &mut k2);
        axpy_into(&mut ytmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        rhs(&ytmp, &mut k3);
        axpy_into(&mut ytmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        rhs(&ytmp, &mut k4);
        axpy_into(&mut ytmp, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        rhs(&ytmp, &mut k5);
        axpy_into(&mut ytmp, &y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        rhs(&ytmp, &mut k6);
        axpy_into(&mut ynew, &y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        rhs(&ynew, &mut k7);
        stats.rhs_evals += 6;

        for i in 0..n {
            errv[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let err = error_norm(&y, &ynew, &errv, cfg);
        if !err.is_finite() {
            return Err(Error::Integration {
                last_time: t,
                reason: "non-finite error estimate".into(),
            });
        }

        let fac11 = err.powf(0.2 - BETA * 0.75);
        if err <= 1.0 {
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            fac_old = err.max(1e-4);
            t = if clipped { target } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            stats.accepted += 1;
            while next_out < outputs.len() && outputs[next_out] <= t {
                observe(next_out, &y);
                next_out += 1;
            }
            // A clipped step says nothing about the achievable step size.
            h = if clipped { h_unclipped } else { h / fac };
        } else {
            let fac = (fac11 / SAFETY).min(1.0 / FAC_MIN);
            h /= fac;
            stats.rejected += 1;
        }
    }
    Ok(stats)
}

fn fixed_rk4<F, O>(
    rhs: &mut F,
    y0: &[Complex64],
    t0: f64,
    outputs: &[f64],
    h_max: f64,
    observe: &mut O,
) -> Result<IntegrationStats>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
    O: FnMut(usize, &[Complex64]),
{
    if !(h_max > 0.0) {
        return Err(Error::domain("fallback step must be positive"));
    }
    let n = y0.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut stats = IntegrationStats {
        used_fallback: true,
        ..Default::default()
    };
    let mut y = y0.to_vec();
    let mut t = t0;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    for (idx, &target) in outputs.iter().enumerate() {
        while t < target {
            let h = h_max.min(target - t);
            rhs(&y, &mut k1);
            axpy_into(&mut tmp, &y, 0.5 * h, &[(1.0, &k1)]);
            rhs(&tmp, &mut k2);
            axpy_into(&mut tmp, &y, 0.5 * h, &[(1.0, &k2)]);
            rhs(&tmp, &mut k3);
            axpy_into(&mut tmp, &y, h, &[(1.0, &k3)]);
            rhs(&tmp, &mut k4);
            for i in 0..n {
                y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
            stats.rhs_evals += 4;
            stats.accepted += 1;
            t = if h == target - t { target } else { t + h };
            if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::Integration {
                    last_time: t,
                    reason: "fixed-step integration diverged".into(),
                });
            }
        }
        observe(idx, &y);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(rate: f64) -> impl FnMut(&[Complex64], &mut [Complex64]) {
        move |y, dy| {
            for (d, v) in dy.iter_mut().zip(y) {
                *d = -rate * v;
            }
        }
    }

    #[test]
    fn exponential_decay_hits_tolerance() {
        let ts: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
        let mut max_err: f64 = 0.0;
        integrate(decay(1.3), &[Complex64::new(1.0, 0.0)], 0.0, &ts, &IntegratorConfig::with_rel_tol(1e-10), |i, y| {
            max_err = max_err.max((y[0].re - (-1.3 * ts[i]).exp()).abs());
        })
        .unwrap();
        assert!(max_err < 1e-9, "{max_err}");
    }

    #[test]
    fn rotation_preserves_modulus() {
        // dy/dt = i·ω·y
        let omega = 7.0;
        let rhs = move |y: &[Complex64], dy: &mut [Complex64]| dy[0] = Complex64::new(0.0, omega) * y[0];
        let ts = [0.5, 1.0, 3.0];
        let mut out = vec![];
        integrate(rhs, &[Complex64::new(1.0, 0.0)], 0.0, &ts, &IntegratorConfig::with_rel_tol(1e-10), |_, y| {
            out.push(y[0])
        })
        .unwrap();
        for (t, y) in ts.iter().zip(&out) {
            let exact = Complex64::from_polar(1.0, omega * t);
            assert!((y - exact).norm() < 1e-8);
        }
    }

    #[test]
    fn step_budget_reports_last_time() {
        let cfg = IntegratorConfig {
            max_steps: 3,
            ..IntegratorConfig::with_rel_tol(1e-12)
        };
        let err = integrate(decay(1e3), &[Complex64::new(1.0, 0.0)], 0.0, &[10.0], &cfg, |_, _| {}).unwrap_err();
        match err {
            Error::Integration { last_time, .. } => assert!(last_time > 0.0 && last_time < 10.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fallback_runs_after_failure() {
        let cfg = IntegratorConfig {
            max_steps: 3,
            fallback_step: Some(1e-3),
            ..IntegratorConfig::with_rel_tol(1e-12)
        };
        let mut last = Complex64::new(0.0, 0.0);
        let stats = integrate(decay(2.0), &[Complex64::new(1.0, 0.0)], 0.0, &[1.0], &cfg, |_, y| last = y[0]).unwrap();
        assert!(stats.used_fallback);
        assert!((last.re - (-2.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn rejects_decreasing_outputs() {
        assert!(integrate(decay(1.0), &[Complex64::new(1.0, 0.0)], 0.0, &[1.0, 0.5], &IntegratorConfig::default(), |_, _| {}).is_err());
    }
}
