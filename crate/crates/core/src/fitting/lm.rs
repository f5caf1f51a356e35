//! Levenberg–Marquardt with column scaling and simple bound handling.
//!
//! The normal equations are solved in variables scaled by the Jacobian column
//! norms, so the damping behaves the same whether a parameter is 1e-8 s or
//! 1e12 Hz. Closed bounds are enforced by projection plus freezing any
//! parameter sitting on its bound with the gradient pointing outward. Open
//! lower bounds use a fraction-to-boundary rule and are never reached.

use nalgebra::{DMatrix, DVector};

use super::models::{FitModel, ParamSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative parameter step below which the fit is converged.
    pub x_tol: f64,
    /// Largest cosine between the residual and a Jacobian column.
    pub g_tol: f64,
    /// Relative step for finite-difference Jacobians.
    pub fd_step: f64,
    /// Reject fits with unidentifiable parameters instead of flagging them.
    pub strict: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            x_tol: 1e-10,
            g_tol: 1e-12,
            fd_step: 1e-7,
            strict: true,
        }
    }
}

pub(crate) struct Problem<'a> {
    pub model: &'a FitModel,
    pub specs: Vec<ParamSpec>,
    pub x: &'a [f64],
    pub y: &'a [f64],
    /// 1/σ per point.
    pub w: Vec<f64>,
    pub scales: Vec<f64>,
}

pub(crate) struct LmOutput {
    pub params: Vec<f64>,
    pub n_iterations: usize,
    pub converged: bool,
    pub jacobian: DMatrix<f64>,
    pub residuals: DVector<f64>,
    pub at_bound: Vec<bool>,
}

impl Problem<'_> {
    pub fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .zip(self.y)
                .zip(&self.w)
                .map(|((&x, &y), &w)| (y - self.model.eval(x, p)) * w),
        )
    }

    /// Weighted model Jacobian, ∂f/∂p · w (note r = (y − f)·w).
    pub fn jacobian(&self, p: &[f64], fd_step: f64) -> DMatrix<f64> {
        let m = p.len();
        let mut jac = DMatrix::zeros(self.x.len(), m);
        let mut grad = vec![0.0; m];
        if self.model.has_analytic_gradient() {
            for (i, (&x, &w)) in self.x.iter().zip(&self.w).enumerate() {
                self.model.gradient(x, p, &mut grad);
                for j in 0..m {
                    jac[(i, j)] = grad[j] * w;
                }
            }
            return jac;
        }
        let mut q = p.to_vec();
        for j in 0..m {
            let h = fd_step * p[j].abs().max(self.scales[j]);
            let spec = &self.specs[j];
            let (lo, hi) = (p[j] - h, p[j] + h);
            let (a, b) = if lo < spec.lower || (spec.open_lower && lo <= spec.lower) {
                (p[j], hi)
            } else if hi > spec.upper {
                (lo, p[j])
            } else {
                (lo, hi)
            };
            for (i, (&x, &w)) in self.x.iter().zip(&self.w).enumerate() {
                q[j] = b;
                let fb = self.model.eval(x, &q);
                q[j] = a;
                let fa = self.model.eval(x, &q);
                jac[(i, j)] = (fb - fa) / (b - a) * w;
            }
            q[j] = p[j];
        }
        jac
    }

    fn project(&self, old: &[f64], trial: &[f64]) -> Vec<f64> {
        trial
            .iter()
            .zip(old)
            .zip(&self.specs)
            .map(|((&t, &o), s)| {
                let t = t.min(s.upper);
                if s.open_lower {
                    if t <= s.lower {
                        s.lower + 0.1 * (o - s.lower)
                    } else {
                        t
                    }
                } else {
                    t.max(s.lower)
                }
            })
            .collect()
    }

    fn relative_step(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.scales)
            .map(|((&a, &b), &s)| (a - b).abs() / a.abs().max(b.abs()).max(s * 1e-3).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn minimize(prob: &Problem, init: &[f64], opts: &FitOptions) -> LmOutput {
    let m = init.len();
    let mut p = prob.project(init, init);
    let mut r = prob.residuals(&p);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = prob.jacobian(&p, opts.fd_step);
    let mut at_bound = vec![false; m];

    'outer: while iterations < opts.max_iterations {
        if cost == 0.0 {
            converged = true;
            break;
        }
        iterations += 1;
        let g = jac.tr_mul(&r);
        let norms: Vec<f64> = (0..m).map(|j| jac.column(j).norm()).collect();
        let mut free = Vec::with_capacity(m);
        for j in 0..m {
            let s = &prob.specs[j];
            let blocked = (!s.open_lower && p[j] <= s.lower && g[j] <= 0.0) || (p[j] >= s.upper && g[j] >= 0.0);
            at_bound[j] = blocked;
            if norms[j] > 0.0 && !blocked {
                free.push(j);
            }
        }
        if free.is_empty() {
            converged = true;
            break;
        }
        let cos_max = free.iter().map(|&j| g[j].abs() / (norms[j] * cost.sqrt())).fold(0.0, f64::max);
        if cos_max < opts.g_tol {
            converged = true;
            break;
        }

        let k = free.len();
        let mut a = DMatrix::zeros(k, k);
        let mut gs = DVector::zeros(k);
        for (ia, &ja) in free.iter().enumerate() {
            gs[ia] = g[ja] / norms[ja];
            for (ib, &jb) in free.iter().enumerate() {
                a[(ia, ib)] = jac.column(ja).dot(&jac.column(jb)) / (norms[ja] * norms[jb]);
            }
        }

        loop {
            let mut damped = a.clone();
            for d in 0..k {
                damped[(d, d)] += lambda;
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= nu;
                nu *= 2.0;
                if lambda > 1e20 {
                    break 'outer;
                }
                continue;
            };
            let ds = chol.solve(&gs);
            let mut trial = p.clone();
            for (ia, &j) in free.iter().enumerate() {
                trial[j] += ds[ia] / norms[j];
            }
            let trial = prob.project(&p, &trial);
            let step = prob.relative_step(&trial, &p);
            let delta = DVector::from_iterator(m, trial.iter().zip(&p).map(|(t, q)| t - q));
            let predicted = cost - (&r - &jac * &delta).norm_squared();
            let r_new = prob.residuals(&trial);
            let cost_new = r_new.norm_squared();

            if cost_new.is_finite() && cost_new < cost && predicted > 0.0 {
                let rho = (cost - cost_new) / predicted;
                lambda *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                lambda = lambda.max(1e-15);
                nu = 2.0;
                p = trial;
                r = r_new;
                cost = cost_new;
                jac = prob.jacobian(&p, opts.fd_step);
                if step < opts.x_tol {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            if step < opts.x_tol {
                // No representable improvement left.
                converged = true;
                break 'outer;
            }
            lambda *= nu;
            nu *= 2.0;
            if lambda > 1e20 {
                break 'outer;
            }
        }
    }

    LmOutput {
        params: p,
        n_iterations: iterations,
        converged,
        jacobian: jac,
        residuals: r,
        at_bound,
    }
}
