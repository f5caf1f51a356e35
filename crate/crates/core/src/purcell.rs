//! Phenomenological rate algebra for a cavity-enhanced color center.
//!
//! An emitter decays through a zero-phonon line (ZPL), a phonon sideband
//! (PSB) and nonradiative channels. Only the ZPL is assumed to couple to the
//! cavity, so a measured lifetime shortening translates into a ZPL
//! cooperativity once the quantum efficiency and Debye–Waller factor are
//! divided out:
//!
//! ```text
//! C_ZPL = (τ_off / τ_on − 1) / (η_QE · η_DW)
//! F_P   = 1 + C
//! F_ZPL = 1 + C_ZPL
//! ```

use serde::{Deserialize, Serialize};

use crate::quantities::Duration;
use crate::{Error, Result};

/// Decay-channel decomposition, all rates in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateBudget {
    pub zpl: f64,
    pub psb: f64,
    pub nonrad: f64,
}

impl RateBudget {
    pub fn new(zpl: f64, psb: f64, nonrad: f64) -> Result<Self> {
        let b = Self { zpl, psb, nonrad };
        b.validate()?;
        Ok(b)
    }

    /// Budget of an emitter with total rate `gamma` and the given factors.
    pub fn from_total(gamma: f64, eta: EfficiencyFactors) -> Result<Self> {
        eta.validate()?;
        let rad = eta.quantum_efficiency * gamma;
        Self::new(
            eta.debye_waller * rad,
            (1.0 - eta.debye_waller) * rad,
            (1.0 - eta.quantum_efficiency) * gamma,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.zpl, self.psb, self.nonrad];
        if all.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::domain(format!("rates must be finite and non-negative: {self:?}")));
        }
        if all.iter().all(|r| *r == 0.0) {
            return Err(Error::domain("rate budget has no decay channel"));
        }
        Ok(())
    }

    pub fn radiative(&self) -> f64 {
        self.zpl + self.psb
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            zpl: alpha * self.zpl,
            psb: alpha * self.psb,
            nonrad: alpha * self.nonrad,
        }
    }
}

/// Quantum efficiency and Debye–Waller factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyFactors {
    #[serde(default = "unit_qe")]
    pub quantum_efficiency: f64,
    pub debye_waller: f64,
}

fn unit_qe() -> f64 {
    1.0
}

impl EfficiencyFactors {
    /// Common NV-center range for the Debye–Waller factor.
    pub const NV_DEBYE_WALLER_RANGE: (f64, f64) = (0.02, 0.03);

    pub fn new(quantum_efficiency: f64, debye_waller: f64) -> Result<Self> {
        let e = Self {
            quantum_efficiency,
            debye_waller,
        };
        e.validate()?;
        Ok(e)
    }

    /// Unit quantum efficiency, the usual approximation for NV centers.
    pub fn with_debye_waller(debye_waller: f64) -> Result<Self> {
        Self::new(1.0, debye_waller)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("quantum efficiency", self.quantum_efficiency), ("Debye-Waller factor", self.debye_waller)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// η_QE·η_DW, rejecting zero.
    pub fn product(&self) -> Result<f64> {
        self.validate()?;
        let p = self.quantum_efficiency * self.debye_waller;
        if p <= 0.0 {
            return Err(Error::domain("quantum efficiency x Debye-Waller factor is zero"));
        }
        Ok(p)
    }
}

/// Cooperativity and Purcell factors, total and ZPL-resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurcellResult {
    pub cooperativity: f64,
    pub purcell_factor: f64,
    pub zpl_cooperativity: f64,
    pub zpl_purcell_factor: f64,
}

/// A ZPL cooperativity estimate. `suppressed` is set when the on-resonance
/// lifetime is longer than the off-resonance one, which yields a negative
/// value (decay suppression rather than enhancement).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CzplEstimate {
    pub value: f64,
    pub suppressed: bool,
}

impl CzplEstimate {
    fn new(value: f64) -> Self {
        Self {
            value,
            suppressed: value < 0.0,
        }
    }
}

/// γ₁ = γ_ZPL + γ_PSB + γ_nonrad.
pub fn total_decay_rate(b: &RateBudget) -> f64 {
    b.zpl + b.psb + b.nonrad
}

pub fn efficiency_factors(b: &RateBudget) -> Result<EfficiencyFactors> {
    b.validate()?;
    let rad = b.radiative();
    if rad <= 0.0 {
        return Err(Error::domain("radiative rate is zero; Debye-Waller factor undefined"));
    }
    Ok(EfficiencyFactors {
        quantum_efficiency: rad / (rad + b.nonrad),
        debye_waller: b.zpl / rad,
    })
}

pub fn czpl_from_lifetimes(tau_on: Duration, tau_off: Duration, eta: &EfficiencyFactors) -> Result<CzplEstimate> {
    if !(tau_on.0 > 0.0 && tau_off.0 > 0.0) {
        return Err(Error::domain("lifetimes must be positive"));
    }
    let p = eta.product()?;
    Ok(CzplEstimate::new((tau_off.0 / tau_on.0 - 1.0) / p))
}

#[allow(non_snake_case)]
pub fn zpl_quantities_from_C(c: f64, eta: &EfficiencyFactors) -> Result<PurcellResult> {
    if !(c >= 0.0) {
        return Err(Error::domain(format!("cooperativity must be non-negative, got {c}")));
    }
    let p = eta.product()?;
    let czpl = c / p;
    Ok(PurcellResult {
        cooperativity: c,
        purcell_factor: c + 1.0,
        zpl_cooperativity: czpl,
        zpl_purcell_factor: czpl + 1.0,
    })
}

/// Evaluates [`zpl_quantities_from_C`] at both ends of a Debye–Waller range.
pub fn zpl_quantities_over_range(
    c: f64,
    quantum_efficiency: f64,
    debye_waller: (f64, f64),
) -> Result<[PurcellResult; 2]> {
    let lo = EfficiencyFactors::new(quantum_efficiency, debye_waller.0)?;
    let hi = EfficiencyFactors::new(quantum_efficiency, debye_waller.1)?;
    Ok([zpl_quantities_from_C(c, &lo)?, zpl_quantities_from_C(c, &hi)?])
}

/// ZPL cooperativity from a cavity-modified (far-detuned) budget and the
/// measured on-resonance total rate: `(γ_on − γ'_total) / γ'_ZPL`.
pub fn czpl_general(primed: &RateBudget, gamma_on: f64) -> Result<CzplEstimate> {
    primed.validate()?;
    if primed.zpl <= 0.0 {
        return Err(Error::domain("primed ZPL rate is zero"));
    }
    if !(gamma_on.is_finite() && gamma_on > 0.0) {
        return Err(Error::domain("on-resonance rate must be positive"));
    }
    Ok(CzplEstimate::new((gamma_on - total_decay_rate(primed)) / primed.zpl))
}

/// On-resonance total rate when only the ZPL of `primed` is enhanced by `f_zpl`.
pub fn enhanced_total_rate(primed: &RateBudget, f_zpl: f64) -> f64 {
    f_zpl * primed.zpl + primed.psb + primed.nonrad
}
