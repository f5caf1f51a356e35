//! Lindblad master equation for a two-level emitter coupled to one cavity mode.
//!
//! In the frame rotating at the cavity frequency (ħ = 1, angular units):
//!
//! ```text
//! H  = −Δ σ⁺σ + g₀ (σ⁺c + σc†),      Δ = ω_c − ω_a
//! dρ/dt = −i[H, ρ] + γ₁ D[σ]ρ + 2γ_φ D[σ⁺σ]ρ + κ D[c]ρ
//! D[L]ρ = LρL† − ½{L†L, ρ}
//! ```
//!
//! The Hilbert space is (two-level atom) ⊗ (Fock space truncated at
//! `n_max` photons), with basis index `atom * (n_max + 1) + photons` where
//! atom 0 is the ground state.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::integrator::{integrate, IntegrationStats, IntegratorConfig};
use super::trace::DecayTrace;
use super::AtomCavityParams;
use crate::quantities::Duration;
use crate::{Error, Result};

pub const DEFAULT_N_MAX: usize = 1;
pub const MAX_N_MAX: usize = 4;
pub const DEFAULT_REL_TOL: f64 = 1e-8;

type CMatrix = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Density matrix over the truncated atom–cavity space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub matrix: CMatrix,
    pub n_max: usize,
}

impl DensityState {
    pub fn dim(n_max: usize) -> usize {
        2 * (n_max + 1)
    }

    fn index(n_max: usize, excited: bool, photons: usize) -> usize {
        usize::from(excited) * (n_max + 1) + photons
    }

    /// |e⟩ ⊗ |0⟩.
    pub fn excited_vacuum(n_max: usize) -> Self {
        let d = Self::dim(n_max);
        let mut m = CMatrix::zeros(d, d);
        let i = Self::index(n_max, true, 0);
        m[(i, i)] = c(1.0);
        Self { matrix: m, n_max }
    }

    fn from_row_major(v: &[Complex64], n_max: usize) -> Self {
        let d = Self::dim(n_max);
        Self {
            matrix: CMatrix::from_row_slice(d, d, v),
            n_max,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// max |ρ − ρ†| over entries.
    pub fn hermiticity_error(&self) -> f64 {
        let adj = self.matrix.adjoint();
        (&self.matrix - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * c(0.5);
        let eig = nalgebra::SymmetricEigen::new(herm);
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// ⟨σ⁺σ⟩.
    pub fn excited_population(&self) -> f64 {
        (0..=self.n_max)
            .map(|n| {
                let i = Self::index(self.n_max, true, n);
                self.matrix[(i, i)].re
            })
            .sum()
    }

    /// ⟨c†c⟩.
    pub fn photon_number(&self) -> f64 {
        let mut total = 0.0;
        for excited in [false, true] {
            for n in 0..=self.n_max {
                let i = Self::index(self.n_max, excited, n);
                total += n as f64 * self.matrix[(i, i)].re;
            }
        }
        total
    }
}

/// Lindblad generator stored as a sparse superoperator acting on row-major
/// vectorized density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    n_max: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

struct Operators {
    h: CMatrix,
    jumps: Vec<(f64, CMatrix)>,
}

fn operators(p: &AtomCavityParams, n_max: usize) -> Operators {
    let d = DensityState::dim(n_max);
    let mut sigma = CMatrix::zeros(d, d);
    let mut cav = CMatrix::zeros(d, d);
    for n in 0..=n_max {
        sigma[(DensityState::index(n_max, false, n), DensityState::index(n_max, true, n))] = c(1.0);
        if n >= 1 {
            for excited in [false, true] {
                cav[(DensityState::index(n_max, excited, n - 1), DensityState::index(n_max, excited, n))] =
                    c((n as f64).sqrt());
            }
        }
    }
    let sigma_ee = sigma.adjoint() * &sigma;
    let delta = p.detuning.to_angular().0;
    let g0 = p.g0.to_angular().0;
    let kappa = p.kappa.to_angular().0;
    let h = &sigma_ee * c(-delta) + (sigma.adjoint() * &cav + &sigma * cav.adjoint()) * c(g0);
    Operators {
        h,
        jumps: vec![(p.gamma1, sigma), (2.0 * p.gamma_phi, sigma_ee), (kappa, cav)],
    }
}

fn apply_dense(ops: &Operators, rho: &CMatrix) -> CMatrix {
    let i = Complex64::new(0.0, 1.0);
    let mut out = (&ops.h * rho - rho * &ops.h) * (-i);
    for (rate, l) in &ops.jumps {
        if *rate == 0.0 {
            continue;
        }
        let ldag = l.adjoint();
        let ldl = &ldag * l;
        out += (l * rho * &ldag - (&ldl * rho + rho * &ldl) * c(0.5)) * c(*rate);
    }
    out
}

impl Liouvillian {
    pub fn new(p: &AtomCavityParams, n_max: usize) -> Result<Self> {
        p.validate()?;
        if n_max == 0 || n_max > MAX_N_MAX {
            return Err(Error::domain(format!("n_max must be in 1..={MAX_N_MAX}, got {n_max}")));
        }
        let ops = operators(p, n_max);
        let d = DensityState::dim(n_max);
        let dd = d * d;
        // Column k of the superoperator is L applied to the k-th basis matrix.
        let mut columns: Vec<Vec<(usize, Complex64)>> = Vec::with_capacity(dd);
        for k in 0..dd {
            let mut basis = CMatrix::zeros(d, d);
            basis[(k / d, k % d)] = c(1.0);
            let img = apply_dense(&ops, &basis);
            let mut col = Vec::new();
            for r in 0..d {
                for s in 0..d {
                    let v = img[(r, s)];
                    if v.re != 0.0 || v.im != 0.0 {
                        col.push((r * d + s, v));
                    }
                }
            }
            columns.push(col);
        }
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dd];
        for (k, col) in columns.into_iter().enumerate() {
            for (r, v) in col {
                rows[r].push((k, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(dd + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (k, v) in row {
                cols.push(k);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            n_max,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn nonzeros(&self) -> usize {
        self.vals.len()
    }

    pub fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * rho[self.cols[idx]];
            }
            *o = acc;
        }
    }
}

/// States sampled along one master-equation run.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub states: Vec<DensityState>,
    pub stats: IntegrationStats,
}

impl Evolution {
    pub fn excited_population(&self) -> Vec<f64> {
        self.states.iter().map(DensityState::excited_population).collect()
    }

    pub fn into_trace(self) -> Result<DecayTrace> {
        let values = self.excited_population();
        DecayTrace::simulated(self.times, values)
    }
}

/// Evolves the excited-atom, empty-cavity state and records ρ at each time.
pub fn evolve_states(p: &AtomCavityParams, n_max: usize, times: &[f64], cfg: &IntegratorConfig) -> Result<Evolution> {
    if !(cfg.rel_tol > 0.0) {
        return Err(Error::domain("rel_tol must be positive"));
    }
    let lv = Liouvillian::new(p, n_max)?;
    let rho0 = DensityState::excited_vacuum(n_max);
    let y0: Vec<Complex64> = rho0.matrix.transpose().iter().copied().collect();
    let mut states = vec![None; times.len()];
    let stats = integrate(|y, dy| lv.apply(y, dy), &y0, 0.0, times, cfg, |i, y| {
        states[i] = Some(DensityState::from_row_major(y, n_max));
    })?;
    let states = states
        .into_iter()
        .map(|s| s.ok_or_else(|| Error::Integration { last_time: 0.0, reason: "missing output".into() }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Evolution {
        times: times.to_vec(),
        states,
        stats,
    })
}

/// ⟨σ⁺σ⟩(t) on `times` for the excited-atom, empty-cavity initial state.
pub fn evolve_master_equation(
    p: &AtomCavityParams,
    n_max: usize,
    times: &[f64],
    rel_tol: f64,
) -> Result<DecayTrace> {
    let mut cfg = IntegratorConfig::with_rel_tol(rel_tol);
    if p.kappa.0 > 0.0 {
        cfg.fallback_step = Some(0.1 / p.kappa.to_angular().0);
    }
    evolve_states(p, n_max, times, &cfg)?.into_trace()
}

/// Uniform time grid `0, dt, 2dt, …` with `n` points.
pub fn uniform_grid(dt: Duration, n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 * dt.0).collect()
}

/// Default simulation horizon (five lifetimes) sampled at `n` points.
pub fn default_grid(p: &AtomCavityParams, n: usize) -> Vec<f64> {
    let horizon = 5.0 / p.gamma1;
    let dt = horizon / (n.max(2) - 1) as f64;
    uniform_grid(Duration(dt), n.max(2))
}

/// Runs one simulation per detuning in parallel; the result is ordered like
/// `detunings` regardless of scheduling.
pub fn simulate_detuning_sweep(
    base: &AtomCavityParams,
    detunings: &[crate::quantities::OrdinaryFrequency],
    n_max: usize,
    times: &[f64],
    rel_tol: f64,
) -> Result<Vec<DecayTrace>> {
    detunings
        .par_iter()
        .map(|&delta| {
            let p = AtomCavityParams { detuning: delta, ..*base };
            evolve_master_equation(&p, n_max, times, rel_tol)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantities::OrdinaryFrequency;

    fn params(g0_ghz: f64, kappa_ghz: f64, tau_ns: f64, delta_ghz: f64) -> AtomCavityParams {
        AtomCavityParams {
            g0: OrdinaryFrequency::from_ghz(g0_ghz),
            kappa: OrdinaryFrequency::from_ghz(kappa_ghz),
            gamma1: 1.0 / (tau_ns * 1e-9),
            gamma_phi: 0.0,
            detuning: OrdinaryFrequency::from_ghz(delta_ghz),
        }
    }

    #[test]
    fn superoperator_matches_dense_application() {
        let p = AtomCavityParams {
            gamma_phi: 3e8,
            ..params(2.0, 10.0, 12.0, 4.0)
        };
        let n_max = 2;
        let lv = Liouvillian::new(&p, n_max).unwrap();
        let d = DensityState::dim(n_max);
        let rho = CMatrix::from_fn(d, d, |r, s| Complex64::new((r * 3 + s) as f64 * 0.1, r as f64 - s as f64));
        let dense = apply_dense(&operators(&p, n_max), &rho);
        let flat: Vec<Complex64> = rho.transpose().iter().copied().collect();
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        lv.apply(&flat, &mut out);
        let sparse = CMatrix::from_row_slice(d, d, &out);
        let scale = dense.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((sparse - dense).iter().all(|z| z.norm() <= 1e-14 * scale));
    }

    #[test]
    fn generator_is_trace_free() {
        // Tr(L(E_kl)) = 0 for every basis matrix.
        let p = AtomCavityParams {
            gamma_phi: 1e8,
            ..params(1.0, 5.0, 16.0, -2.0)
        };
        let lv = Liouvillian::new(&p, 3).unwrap();
        let d = DensityState::dim(3);
        for k in 0..d * d {
            let mut e = vec![Complex64::new(0.0, 0.0); d * d];
            e[k] = Complex64::new(1.0, 0.0);
            let mut out = vec![Complex64::new(0.0, 0.0); d * d];
            lv.apply(&e, &mut out);
            let tr: Complex64 = (0..d).map(|i| out[i * d + i]).sum();
            assert!(tr.norm() < 1e-3 * p.kappa.to_angular().0 * 1e-12);
        }
    }

    #[test]
    fn uncoupled_atom_decays_exponentially() {
        let p = params(0.0, 940.0, 15.9, 0.0);
        let times = default_grid(&p, 101);
        let trace = evolve_master_equation(&p, 1, &times, 1e-8).unwrap();
        for (t, v) in trace.times.iter().zip(&trace.values) {
            assert!((v - (-p.gamma1 * t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn vacuum_rabi_oscillation_in_strong_coupling() {
        // κ, γ₁ ≪ g₀: population oscillates as cos²(g₀t) at early times.
        let p = AtomCavityParams {
            g0: OrdinaryFrequency::from_ghz(1.0),
            kappa: OrdinaryFrequency::from_hz(1.0),
            gamma1: 1.0,
            gamma_phi: 0.0,
            detuning: OrdinaryFrequency(0.0),
        };
        let g = p.g0.to_angular().0;
        let times: Vec<f64> = (0..40).map(|i| i as f64 * 2e-11).collect();
        let trace = evolve_master_equation(&p, 2, &times, 1e-10).unwrap();
        for (t, v) in trace.times.iter().zip(&trace.values) {
            assert!((v - (g * t).cos().powi(2)).abs() < 1e-8, "t={t} v={v}");
        }
    }

    #[test]
    fn rejects_bad_truncation() {
        let p = params(0.5, 100.0, 16.0, 0.0);
        assert!(Liouvillian::new(&p, 0).is_err());
        assert!(Liouvillian::new(&p, MAX_N_MAX + 1).is_err());
    }

    #[test]
    fn sweep_is_order_independent() {
        let base = params(0.57, 200.0, 15.9, 0.0);
        let times = uniform_grid(Duration::from_ns(1.0), 6);
        let ds: Vec<OrdinaryFrequency> = [0.0, 100.0, -50.0].iter().map(|&g| OrdinaryFrequency::from_ghz(g)).collect();
        let sweep = simulate_detuning_sweep(&base, &ds, 1, &times, 1e-8).unwrap();
        for (d, tr) in ds.iter().zip(&sweep) {
            let single = evolve_master_equation(&AtomCavityParams { detuning: *d, ..base }, 1, &times, 1e-8).unwrap();
            assert_eq!(single.values, tr.values);
        }
    }
}
