//! Physical quantities, unit conversions and constants.
//!
//! Frequencies come in two flavours. [`OrdinaryFrequency`] is the value in Hz
//! that experiments quote as "κ/2π" or "g₀/2π"; [`AngularFrequency`]
//! is the rad/s value that appears inside Hamiltonians. Converting between
//! them is exactly a factor of 2π.
//!
//! | constant | value | unit |
//! |----------|-------|------|
//! | ħ        | 1.054571817e-34 | J·s |
//! | ε₀       | 8.8541878128e-12 | F/m |
//! | c        | 299 792 458 | m/s |
//! | Debye    | 3.33564095198152e-30 | C·m |
//!
//! Values are CODATA 2018. Note that the NV zero-phonon line at 637 nm is
//! 470.6 THz by `c/λ`, while 475 THz is often quoted for the same transition;
//! both are accepted as independent inputs and never reconciled here.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Frequency in Hz (the "/2π" convention).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrdinaryFrequency(pub f64);

/// Angular frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngularFrequency(pub f64);

/// Time span in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Duration(pub f64);

/// Dimensionless linear power ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Efficiency(pub f64);

impl OrdinaryFrequency {
    pub fn from_hz(hz: f64) -> Self {
        Self(hz)
    }

    pub fn from_ghz(ghz: f64) -> Self {
        Self(ghz * 1e9)
    }

    pub fn from_thz(thz: f64) -> Self {
        Self(thz * 1e12)
    }

    pub fn hz(self) -> f64 {
        self.0
    }

    pub fn to_angular(self) -> AngularFrequency {
        AngularFrequency(2.0 * PI * self.0)
    }
}

impl AngularFrequency {
    pub fn rad_per_s(self) -> f64 {
        self.0
    }

    pub fn to_ordinary(self) -> OrdinaryFrequency {
        OrdinaryFrequency(self.0 / (2.0 * PI))
    }
}

impl From<OrdinaryFrequency> for AngularFrequency {
    fn from(f: OrdinaryFrequency) -> Self {
        f.to_angular()
    }
}

impl From<AngularFrequency> for OrdinaryFrequency {
    fn from(w: AngularFrequency) -> Self {
        w.to_ordinary()
    }
}

impl Duration {
    pub fn from_ns(ns: f64) -> Self {
        Self(ns * 1e-9)
    }

    pub fn seconds(self) -> f64 {
        self.0
    }

    pub fn ns(self) -> f64 {
        self.0 * 1e9
    }

    /// Inverse lifetime in s⁻¹.
    pub fn rate(self) -> f64 {
        1.0 / self.0
    }

    /// Lifetime of a process with the given rate (s⁻¹).
    pub fn from_rate(rate: f64) -> Self {
        Self(1.0 / rate)
    }
}

impl Efficiency {
    /// Checked constructor for channel efficiencies, which must lie in [0, 1].
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::domain(format!("efficiency {value} outside [0, 1]")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_db(self) -> Result<f64> {
        linear_to_db(self.0)
    }

    pub fn from_db(db: f64) -> Self {
        Self(db_to_linear(db))
    }
}

/// Fundamental constants used by the coupling estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Vacuum permittivity, F/m.
    pub epsilon0: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// One Debye in C·m.
    pub debye: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        hbar: 1.054_571_817e-34,
        epsilon0: 8.854_187_812_8e-12,
        c: 299_792_458.0,
        debye: 1e-21 / 299_792_458.0,
    };

    /// Planck constant h = 2πħ.
    pub fn h(&self) -> f64 {
        2.0 * PI * self.hbar
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

/// Power ratio to decibels, `10·log₁₀(x)`.
pub fn linear_to_db(linear: f64) -> Result<f64> {
    if !(linear > 0.0) || !linear.is_finite() {
        return Err(Error::domain(format!(
            "cannot convert non-positive linear value {linear} to dB"
        )));
    }
    Ok(10.0 * linear.log10())
}

/// Decibels to power ratio, `10^(dB/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Loaded quality factor `Q = ν_c / κ`, both as ordinary frequencies.
pub fn quality_factor(cavity: OrdinaryFrequency, kappa: OrdinaryFrequency) -> Result<f64> {
    if !(kappa.0 > 0.0) {
        return Err(Error::domain("quality factor needs kappa > 0"));
    }
    Ok(cavity.0 / kappa.0)
}

/// Vacuum wavelength (m) to frequency, `ν = c/λ`.
pub fn wavelength_to_frequency(wavelength_m: f64) -> Result<OrdinaryFrequency> {
    if !(wavelength_m > 0.0) {
        return Err(Error::domain(format!("wavelength must be positive, got {wavelength_m}")));
    }
    Ok(OrdinaryFrequency(PhysicalConstants::CODATA_2018.c / wavelength_m))
}

/// Frequency to vacuum wavelength in meters.
pub fn frequency_to_wavelength(nu: OrdinaryFrequency) -> Result<f64> {
    if !(nu.0 > 0.0) {
        return Err(Error::domain(format!("frequency must be positive, got {}", nu.0)));
    }
    Ok(PhysicalConstants::CODATA_2018.c / nu.0)
}
