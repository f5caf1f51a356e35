//! Emitter–cavity relaxation dynamics.
//!
//! [`master`] integrates the full Lindblad master equation; [`analytic`]
//! holds the weak-excitation (adiabatically eliminated) decay rate and the
//! lifetime-versus-detuning curve; [`trace`] handles time-binned decay data.
//!
//! Frequencies (`g0`, `kappa`, `detuning`) are ordinary frequencies in Hz and
//! are converted to angular units internally. `gamma1` and `gamma_phi` are
//! inverse lifetimes in s⁻¹ and used as-is.

pub mod analytic;
pub mod integrator;
pub mod master;
pub mod trace;

use serde::{Deserialize, Serialize};

use crate::quantities::OrdinaryFrequency;
use crate::{Error, Result};

pub use analytic::{analytic_total_rate, cooperativity, spectral_mismatch, tau_of_detuning};
pub use integrator::IntegratorConfig;
pub use master::{evolve_master_equation, evolve_states, simulate_detuning_sweep, DensityState, Evolution, Liouvillian};
pub use trace::{DEFAULT_BIN_WIDTH, extract_decay_rate, DecayRateEstimate, DecayTrace, NonPositivePolicy, RateExtractionConfig, TraceKind};

/// Parameters of the open emitter–cavity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomCavityParams {
    /// Vacuum coupling g₀/2π.
    #[serde(rename = "g0_hz")]
    pub g0: OrdinaryFrequency,
    /// Total cavity loss κ/2π.
    #[serde(rename = "kappa_hz")]
    pub kappa: OrdinaryFrequency,
    /// Emitter population decay rate 1/τ₁.
    #[serde(rename = "gamma1_per_s")]
    pub gamma1: f64,
    /// Pure dephasing rate.
    #[serde(rename = "gamma_phi_per_s", default)]
    pub gamma_phi: f64,
    /// Cavity minus emitter frequency (Δ/2π), signed.
    #[serde(rename = "detuning_hz", default)]
    pub detuning: OrdinaryFrequency,
}

impl AtomCavityParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.g0.0, self.kappa.0, self.gamma1, self.gamma_phi, self.detuning.0]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("atom-cavity parameters must be finite"));
        }
        if self.g0.0 < 0.0 || self.kappa.0 < 0.0 || self.gamma1 < 0.0 || self.gamma_phi < 0.0 {
            return Err(Error::domain("g0, kappa, gamma1 and gamma_phi must be non-negative"));
        }
        Ok(())
    }

    /// γ₂ = γ₁/2 + γ_φ.
    pub fn gamma2(&self) -> f64 {
        0.5 * self.gamma1 + self.gamma_phi
    }
}
