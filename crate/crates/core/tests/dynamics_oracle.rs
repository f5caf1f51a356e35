//! Master-equation runs checked against the weak-excitation decay rate and
//! the structural properties of a density matrix.

use purcellkit::dynamics::integrator::IntegratorConfig;
use purcellkit::dynamics::master::{evolve_states, uniform_grid};
use purcellkit::dynamics::{
    analytic_total_rate, cooperativity, evolve_master_equation, extract_decay_rate, RateExtractionConfig,
};
use purcellkit::{AtomCavityParams, Duration, OrdinaryFrequency};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn device(delta_over_kappa: f64) -> AtomCavityParams {
    let kappa = OrdinaryFrequency::from_ghz(940.0);
    AtomCavityParams {
        g0: OrdinaryFrequency::from_ghz(0.57),
        kappa,
        gamma1: 1.0 / 15.9e-9,
        gamma_phi: 0.0,
        detuning: OrdinaryFrequency(delta_over_kappa * kappa.0),
    }
}

#[test]
fn device_regime_cooperativity() {
    let c = cooperativity(&device(0.0)).unwrap();
    assert!((c - 0.14).abs() < 0.005, "{c}");
}

#[test]
fn simulated_rate_matches_analytic_rate() {
    let times = uniform_grid(Duration(0.5e-9), 101);
    for dk in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let p = device(dk);
        let trace = evolve_master_equation(&p, 1, &times, 1e-8).unwrap();
        let est = extract_decay_rate(&trace, &RateExtractionConfig::default()).unwrap();
        let analytic = analytic_total_rate(&p).unwrap();
        let rel = (est.rate - analytic).abs() / analytic;
        assert!(rel < 0.02, "Δ/κ = {dk}: simulated {} vs analytic {analytic} ({rel:e})", est.rate);
    }
}

#[test]
fn single_excitation_closure() {
    let times = uniform_grid(Duration(0.5e-9), 61);
    for dk in [0.0, 1.0] {
        let p = AtomCavityParams { gamma_phi: 2e8, ..device(dk) };
        let a = evolve_master_equation(&p, 1, &times, 1e-8).unwrap();
        let b = evolve_master_equation(&p, 2, &times, 1e-8).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-8 * x.abs().max(1e-3), "{x} vs {y}");
        }
    }
}

#[test]
fn uncoupled_trace_is_exponential() {
    let p = AtomCavityParams { g0: OrdinaryFrequency(0.0), ..device(0.0) };
    let times = uniform_grid(Duration(0.8e-9), 100);
    let trace = evolve_master_equation(&p, 1, &times, 1e-8).unwrap();
    let worst = trace
        .times
        .iter()
        .zip(&trace.values)
        .map(|(t, v)| (v - (-p.gamma1 * t).exp()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn structural_invariants_on_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rel_tol = 1e-8;
    for _ in 0..20 {
        let p = AtomCavityParams {
            g0: OrdinaryFrequency::from_ghz(rng.random_range(0.0..5.0)),
            kappa: OrdinaryFrequency::from_ghz(rng.random_range(1.0..50.0)),
            gamma1: 1.0 / (rng.random_range(5.0..20.0) * 1e-9),
            gamma_phi: rng.random_range(0.0..1e9),
            detuning: OrdinaryFrequency::from_ghz(rng.random_range(-50.0..50.0)),
        };
        let n_max = rng.random_range(1..=3);
        let times = uniform_grid(Duration(0.1e-9), 50);
        let evo = evolve_states(&p, n_max, &times, &IntegratorConfig::with_rel_tol(rel_tol)).unwrap();
        for s in &evo.states {
            assert!((s.trace().re - 1.0).abs() < 10.0 * rel_tol);
            assert!(s.trace().im.abs() < 10.0 * rel_tol);
            assert!(s.hermiticity_error() < 10.0 * rel_tol);
            assert!(s.min_eigenvalue() > -100.0 * rel_tol, "{}", s.min_eigenvalue());
        }
    }
}
