//! Monte-Carlo calibration of the fitters against synthetic data with known
//! truth.

use purcellkit::fitting::{fit_decay_trace, fit_spectrum, fit_tau_detuning, least_squares_fit, DecayFitConfig};
use purcellkit::synthetic::{self, linspace, sample_model, SyntheticSpectrum};
use purcellkit::{FitModel, FitOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 100;

fn percentile(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let idx = ((v.len() as f64 - 1.0) * q).round() as usize;
    v[idx]
}

#[test]
fn poisson_decay_lifetime_recovery() {
    let (bw, n) = synthetic::default_trace_shape();
    let tau = synthetic::DEVICE_TAU1_S;
    let errs: Vec<f64> = (0..SEEDS)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let trace = synthetic::poisson_decay_trace(1e4, tau, 0.0, bw, n, &mut rng).unwrap();
            let fit = fit_decay_trace(&trace, &DecayFitConfig::default(), &FitOptions::default()).unwrap();
            assert!(fit.converged);
            (fit.value("tau").unwrap() / tau - 1.0).abs()
        })
        .collect();
    let p95 = percentile(errs, 0.95);
    assert!(p95 < 0.02, "95th percentile error {p95}");
}

#[test]
fn background_term_removes_bias() {
    let (bw, n) = synthetic::default_trace_shape();
    let tau = synthetic::DEVICE_TAU1_S;
    let (mut with, mut without) = (0.0, 0.0);
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = synthetic::poisson_decay_trace(1e4, tau, 500.0, bw, n, &mut rng).unwrap();
        let cfg = DecayFitConfig { with_background: true, skip_bins: 0 };
        with += fit_decay_trace(&trace, &cfg, &FitOptions::default()).unwrap().value("tau").unwrap() / 20.0;
        without += fit_decay_trace(&trace, &DecayFitConfig::default(), &FitOptions::default()).unwrap().value("tau").unwrap() / 20.0;
    }
    assert!(without > 1.05 * tau, "no-background fit should be biased high: {without}");
    assert!((with / tau - 1.0).abs() < 0.01, "background fit mean {with}");
}

fn reduced_chi_squares(model: &FitModel, truth: &[f64], x: &[f64], sigma: f64) -> Vec<f64> {
    let s = vec![sigma; x.len()];
    (0..SEEDS)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let y = sample_model(model, truth, x, sigma, Some(&mut rng));
            let fit = least_squares_fit(model, x, &y, Some(&s), Some(truth), &FitOptions::default()).unwrap();
            fit.reduced_chi_square.unwrap()
        })
        .collect()
}

#[test]
fn reduced_chi_square_is_calibrated() {
    let cases = [
        (FitModel::SingleExponential { background: true, t_ref: 0.0 }, vec![1e3, 15.9e-9, 20.0], linspace(0.0, 49.0 * 1.28e-9, 50), 10.0),
        (FitModel::TauDetuning, vec![0.14, 940e9, 15.9e-9], linspace(-2e12, 2e12, 50), 0.2e-9),
        (FitModel::TanhTransmission, vec![0.8, 1.5, 0.3], linspace(-3.0, 3.0, 50), 0.02),
    ];
    for (model, truth, x, sigma) in cases {
        let chi = reduced_chi_squares(&model, &truth, &x, sigma);
        let mean = chi.iter().sum::<f64>() / chi.len() as f64;
        let median = percentile(chi.clone(), 0.5);
        let inside = chi.iter().filter(|c| (0.5..=1.5).contains(*c)).count();
        assert!((0.5..=1.5).contains(&mean), "{}: mean {mean}", model.formula());
        assert!((0.5..=1.5).contains(&median), "{}: median {median}", model.formula());
        assert!(inside >= 95, "{}: only {inside} of 100 in range", model.formula());
    }
}

#[test]
fn standard_errors_shrink_as_inverse_sqrt_n() {
    let model = FitModel::TauDetuning;
    let truth = [0.14, 940e9, 15.9e-9];
    let mean_se = |n: usize| {
        let x = linspace(-2e12, 2e12, n);
        let s = vec![0.2e-9; n];
        let mut acc = 0.0;
        for seed in 0..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = sample_model(&model, &truth, &x, 0.2e-9, Some(&mut rng));
            let fit = least_squares_fit(&model, &x, &y, Some(&s), Some(&truth), &FitOptions::default()).unwrap();
            acc += fit.std_error("C").unwrap() / 40.0;
        }
        acc
    };
    let ratio = mean_se(25) / mean_se(100);
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn two_peak_spectrum_centers() {
    let spec = SyntheticSpectrum::default();
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fit = fit_spectrum(&spec.sample(0.1, Some(&mut rng)), &FitOptions::default()).unwrap();
        worst.0 = worst.0.max((fit.cavity_center_nm - spec.cavity_center_nm).abs());
        worst.1 = worst.1.max((fit.zpl_center_nm - spec.zpl_center_nm).abs());
    }
    assert!(worst.0 < 0.05 && worst.1 < 0.05, "worst center errors {worst:?}");
}

#[test]
fn detuning_sweep_with_quoted_error_bars() {
    // Nine detunings over ±2 THz with 0.2 ns error bars.
    let dets = linspace(-2e12, 2e12, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pts = synthetic::tau_detuning_points(0.14, 940e9, 15.9e-9, &dets, 0.2e-9 / 15.9e-9, Some(&mut rng)).unwrap();
    let fit = fit_tau_detuning(&pts, &FitOptions::default()).unwrap();
    let c = fit.value("C").unwrap();
    assert!((0.11..=0.17).contains(&c), "C = {c}");
    assert!(fit.std_error("C").unwrap() < 0.05);
}
