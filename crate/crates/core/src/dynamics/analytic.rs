//! Weak-excitation reduction of the emitter–cavity model.
//!
//! Eliminating the cavity field and setting ⟨σ_z⟩ = −1 leaves a single
//! population decay rate
//!
//! ```text
//! Γ(Δ) = γ₁ + g₀²κ / ((κ/2)² + Δ²)
//! ```
//!
//! which at Δ = 0 is γ₁(1 + C) with C = 4g₀²/(κγ₁). The lifetime versus
//! detuning is τ(Δ) = τ₁ / (1 + C·f(Δ)) with f(Δ) = 1/(1 + 4Δ²/κ²). Pure
//! dephasing does not enter either expression.

use super::AtomCavityParams;
use crate::quantities::{Duration, OrdinaryFrequency};
use crate::{Error, Result};

/// Total population decay rate in s⁻¹.
pub fn analytic_total_rate(p: &AtomCavityParams) -> Result<f64> {
    p.validate()?;
    if !(p.kappa.0 > 0.0) {
        return Err(Error::domain("analytic rate needs kappa > 0"));
    }
    let g = p.g0.to_angular().0;
    let k = p.kappa.to_angular().0;
    let d = p.detuning.to_angular().0;
    Ok(p.gamma1 + g * g * k / (0.25 * k * k + d * d))
}

/// C = 4g₀²/(κγ₁).
pub fn cooperativity(p: &AtomCavityParams) -> Result<f64> {
    p.validate()?;
    if !(p.kappa.0 > 0.0 && p.gamma1 > 0.0) {
        return Err(Error::domain("cooperativity needs kappa > 0 and gamma1 > 0"));
    }
    let g = p.g0.to_angular().0;
    Ok(4.0 * g * g / (p.kappa.to_angular().0 * p.gamma1))
}

/// f(Δ) = 1/(1 + 4Δ²/κ²). The 2π between conventions cancels in the ratio.
pub fn spectral_mismatch(kappa: OrdinaryFrequency, detuning: OrdinaryFrequency) -> f64 {
    let r = detuning.0 / kappa.0;
    1.0 / (1.0 + 4.0 * r * r)
}

pub fn tau_of_detuning(c: f64, kappa: OrdinaryFrequency, tau1: Duration, detuning: OrdinaryFrequency) -> Result<Duration> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::domain(format!("cooperativity must be non-negative, got {c}")));
    }
    if !(kappa.0 > 0.0) {
        return Err(Error::domain("kappa must be positive"));
    }
    if !(tau1.0 > 0.0) {
        return Err(Error::domain("tau1 must be positive"));
    }
    Ok(Duration(tau1.0 / (c * spectral_mismatch(kappa, detuning) + 1.0)))
}
