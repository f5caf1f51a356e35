//! Vacuum coupling rate from cavity and emitter properties, plus the
//! spatial average over an ensemble of emitters spread across a field map.
//!
//! The single-emitter estimate chains three steps:
//!
//! ```text
//! V      = Σ ε|E|² dV / max(ε|E|²)
//! E_zpf  = sqrt(ħω / (2 ε_r ε₀ V))
//! d      = sqrt(3π ε₀ ħ c³ γ₁ / ω³),   d_ZPL = sqrt(η_DW) d
//! g₀/2π  = d_ZPL E_zpf / h
//! ```

mod ensemble;
mod grid;

pub use ensemble::{ensemble_weighting_factor, Region, WeightingConfig, WeightingResult};
pub use grid::{FieldGrid, GridBody, GridHeader, SyntheticCavity, GRID_FORMAT};

pub(crate) use grid::csv_error;

use std::f64::consts::PI;

use serde::Serialize;

use crate::numeric::compensated_sum;
use crate::quantities::{Duration, OrdinaryFrequency, PhysicalConstants};
use crate::{Error, Result};

/// Mode volume `Σ ε|E|² dV / max(ε|E|²)` in m³ (midpoint rule).
pub fn mode_volume(grid: &FieldGrid) -> Result<f64> {
    let peak = grid.energy_density(grid.energy_argmax());
    if !(peak > 0.0) {
        return Err(Error::domain("field is zero everywhere; mode volume undefined"));
    }
    let sum = compensated_sum((0..grid.len()).map(|i| grid.energy_density(i) / peak));
    Ok(sum * grid.cell_volume())
}

/// Mode volume in units of the cubic material wavelength, `V / (λ/n)³`.
pub fn normalized_mode_volume(volume: f64, wavelength_m: f64, index: f64) -> Result<f64> {
    if !(volume > 0.0 && wavelength_m > 0.0 && index > 0.0) {
        return Err(Error::domain("volume, wavelength and refractive index must be positive"));
    }
    Ok(volume / (wavelength_m / index).powi(3))
}

/// Zero-point field amplitude in V/m.
pub fn zero_point_field(nu_c: OrdinaryFrequency, eps_rel_at_max: f64, volume: f64) -> Result<f64> {
    if !(nu_c.0 > 0.0 && eps_rel_at_max > 0.0 && volume > 0.0) {
        return Err(Error::domain("zero-point field needs positive frequency, permittivity and volume"));
    }
    let k = PhysicalConstants::CODATA_2018;
    let omega = nu_c.to_angular().0;
    Ok((k.hbar * omega / (2.0 * eps_rel_at_max * k.epsilon0 * volume)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DipoleMoment {
    pub coulomb_meters: f64,
    pub debye: f64,
}

impl DipoleMoment {
    pub fn from_coulomb_meters(cm: f64) -> Self {
        Self {
            coulomb_meters: cm,
            debye: cm / PhysicalConstants::CODATA_2018.debye,
        }
    }
}

/// Transition dipole implied by a purely radiative lifetime τ₁ at frequency ν.
pub fn dipole_from_lifetime(tau1: Duration, nu: OrdinaryFrequency) -> Result<DipoleMoment> {
    if !(tau1.0 > 0.0 && nu.0 > 0.0) {
        return Err(Error::domain("dipole estimate needs positive lifetime and frequency"));
    }
    let k = PhysicalConstants::CODATA_2018;
    let omega = nu.to_angular().0;
    let d = (3.0 * PI * k.epsilon0 * k.hbar * k.c.powi(3) * tau1.rate() / omega.powi(3)).sqrt();
    Ok(DipoleMoment::from_coulomb_meters(d))
}

/// An emitter's transverse dipole and its zero-phonon-line share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmitterDipole {
    pub tau1: Duration,
    pub frequency: OrdinaryFrequency,
    pub debye_waller: f64,
    pub d_perp: DipoleMoment,
    pub d_zpl: DipoleMoment,
}

impl EmitterDipole {
    pub fn new(tau1: Duration, frequency: OrdinaryFrequency, debye_waller: f64) -> Result<Self> {
        if !(debye_waller > 0.0 && debye_waller <= 1.0) {
            return Err(Error::domain(format!("Debye-Waller factor {debye_waller} outside (0, 1]")));
        }
        let d_perp = dipole_from_lifetime(tau1, frequency)?;
        Ok(Self {
            tau1,
            frequency,
            debye_waller,
            d_perp,
            d_zpl: DipoleMoment::from_coulomb_meters(debye_waller.sqrt() * d_perp.coulomb_meters),
        })
    }
}

/// `g₀/2π = d_ZPL·E_zpf / h`.
pub fn g0_ideal(d_zpl: f64, e_zpf: f64) -> Result<OrdinaryFrequency> {
    if !(d_zpl >= 0.0 && e_zpf >= 0.0) || !(d_zpl * e_zpf).is_finite() {
        return Err(Error::domain("dipole and zero-point field must be finite and non-negative"));
    }
    Ok(OrdinaryFrequency(d_zpl * e_zpf / PhysicalConstants::CODATA_2018.h()))
}

/// Ensemble-averaged coupling `g₀ 𝓕`.
pub fn effective_g0(g0: OrdinaryFrequency, weighting: f64) -> Result<OrdinaryFrequency> {
    if !(0.0..=1.0).contains(&weighting) {
        return Err(Error::domain(format!("weighting factor {weighting} outside [0, 1]")));
    }
    Ok(OrdinaryFrequency(g0.0 * weighting))
}

/// Full single-emitter estimate for a cavity described by a field grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingEstimate {
    pub mode_volume_m3: f64,
    pub eps_rel_at_max: f64,
    pub e_zpf_v_per_m: f64,
    pub dipole: EmitterDipole,
    pub g0_hz: f64,
}

pub fn estimate_g0(grid: &FieldGrid, nu_c: OrdinaryFrequency, dipole: EmitterDipole) -> Result<CouplingEstimate> {
    let v = mode_volume(grid)?;
    let eps = grid.eps()[grid.energy_argmax()];
    let e_zpf = zero_point_field(nu_c, eps, v)?;
    let g0 = g0_ideal(dipole.d_zpl.coulomb_meters, e_zpf)?;
    Ok(CouplingEstimate {
        mode_volume_m3: v,
        eps_rel_at_max: eps,
        e_zpf_v_per_m: e_zpf,
        dipole,
        g0_hz: g0.0,
    })
}
