use super::*;
use crate::synthetic::{self, linspace, sample_model, SyntheticSpectrum};
use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type NoRng = ChaCha8Rng;

fn exact(model: &FitModel, p: &[f64], x: &[f64]) -> Vec<f64> {
    sample_model::<NoRng>(model, p, x, 0.0, None)
}

fn assert_params(fit: &FitResult, truth: &[f64], tol: f64) {
    for (f, t) in fit.values().iter().zip(truth) {
        let err = if *t == 0.0 { f.abs() } else { ((f - t) / t).abs() };
        assert!(err < tol, "{}: fitted {:?} truth {:?}", fit.model.formula(), fit.values(), truth);
    }
}

/// Every model with a representative truth and abscissa.
fn cases() -> Vec<(FitModel, Vec<f64>, Vec<f64>)> {
    let spec = SyntheticSpectrum::default();
    vec![
        (
            FitModel::SingleExponential { background: false, t_ref: 0.0 },
            vec![1e4, 15.9e-9],
            linspace(0.0, 199.0 * 1.28e-9, 200),
        ),
        (
            FitModel::SingleExponential { background: true, t_ref: 0.0 },
            vec![1e4, 15.9e-9, 50.0],
            linspace(0.0, 199.0 * 1.28e-9, 200),
        ),
        (FitModel::TauDetuning, vec![0.14, 940e9, 15.9e-9], synthetic::default_detunings(940e9)),
        (spec.model(), spec.params(), spec.wavelengths()),
        (FitModel::TanhTransmission, vec![0.85, 1.5, 0.25], linspace(-3.0, 3.0, 61)),
        (FitModel::ExponentialSaturation, vec![0.9, 12.0], linspace(0.0, 60.0, 31)),
        (FitModel::AsymmetricLorentzian, vec![0.7, 1.9, 0.15, 0.4], linspace(1.0, 3.0, 81)),
    ]
}

/// ±frac perturbation: peak positions move by frac of the peak width,
/// everything else by frac relative.
fn perturb(model: &FitModel, p: &[f64], signs: &[f64], frac: f64) -> Vec<f64> {
    let mut q: Vec<f64> = p.iter().zip(signs).map(|(v, s)| v * (1.0 + s * frac)).collect();
    match model {
        FitModel::LorentzianGaussian { .. } => {
            q[1] = p[1] + signs[1] * frac * p[2];
            q[4] = p[4] + signs[4] * frac * p[5];
            q[6] = p[6] * (1.0 + signs[6] * frac);
        }
        FitModel::AsymmetricLorentzian => q[1] = p[1] + signs[1] * frac * p[2].min(p[3]),
        _ => {}
    }
    q
}

#[test]
fn init_at_truth_converges_immediately() {
    for (model, truth, x) in cases() {
        let y = exact(&model, &truth, &x);
        let fit = least_squares_fit(&model, &x, &y, None, Some(&truth), &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.n_iterations <= 2, "{} took {}", model.formula(), fit.n_iterations);
        assert_params(&fit, &truth, 1e-10);
    }
}

#[test]
fn perturbed_round_trip_all_models() {
    let patterns = [[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0], [-1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0], [1.0; 8], [-1.0; 8]];
    for (model, truth, x) in cases() {
        let y = exact(&model, &truth, &x);
        for signs in &patterns {
            let init = perturb(&model, &truth, signs, 0.3);
            let fit = least_squares_fit(&model, &x, &y, None, Some(&init), &FitOptions::default()).unwrap();
            assert!(fit.converged, "{} from {init:?}", model.formula());
            assert_params(&fit, &truth, 1e-6);
        }
    }
}

#[test]
fn automatic_initial_guesses_recover_truth() {
    for (model, truth, x) in cases() {
        let y = exact(&model, &truth, &x);
        let fit = least_squares_fit(&model, &x, &y, None, None, &FitOptions::default()).unwrap();
        assert_params(&fit, &truth, 1e-6);
    }
}

#[test]
fn tau_detuning_noiseless_recovery() {
    let pts = synthetic::tau_detuning_points::<NoRng>(0.14, 940e9, 15.9e-9, &synthetic::default_detunings(940e9), 0.01, None).unwrap();
    assert_eq!(pts.len(), 9);
    let fit = fit_tau_detuning(&pts, &FitOptions::default()).unwrap();
    assert_params(&fit, &[0.14, 940e9, 15.9e-9], 1e-8);
    assert!(fit.std_error("C").unwrap() >= 0.0);
}

#[test]
fn tau_detuning_flat_data_flags_kappa() {
    let pts: Vec<(f64, f64, f64)> = synthetic::default_detunings(940e9).iter().map(|&d| (d, 15.9e-9, 0.2e-9)).collect();
    let fit = fit_tau_detuning(&pts, &FitOptions::default()).unwrap();
    assert!(fit.value("C").unwrap().abs() < 1e-9);
    assert!(fit.unidentifiable.contains(&"kappa_hz".to_string()), "{fit:?}");
    assert_eq!(fit.std_error("kappa_hz"), None);
    assert_relative_eq!(fit.value("tau1_s").unwrap(), 15.9e-9, max_relative = 1e-10);
}

#[test]
fn tau_detuning_same_detuning_is_degenerate() {
    let pts = vec![(1e11, 14e-9, 1e-10); 5];
    assert!(matches!(fit_tau_detuning(&pts, &FitOptions::default()), Err(Error::DegenerateFit(_))));
    assert!(fit_tau_detuning(&pts[..3], &FitOptions::default()).is_err());
}

#[test]
fn tau_detuning_reflection_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dets = [0.0, 0.1e12, 0.3e12, 0.5e12, -0.7e12, 1.0e12, -1.5e12, 2.0e12];
    let pts = synthetic::tau_detuning_points(0.14, 940e9, 15.9e-9, &dets, 0.01, Some(&mut rng)).unwrap();
    let mirrored: Vec<_> = pts.iter().map(|&(d, t, s)| (-d, t, s)).collect();
    let a = fit_tau_detuning(&pts, &FitOptions::default()).unwrap();
    let b = fit_tau_detuning(&mirrored, &FitOptions::default()).unwrap();
    for (u, v) in a.values().iter().zip(b.values()) {
        assert_relative_eq!(*u, v, max_relative = 1e-8);
    }
}

#[test]
fn strict_mode_rejects_singular_problems() {
    // Gaussian amplitude zero leaves its centre and width undetermined.
    let spec = SyntheticSpectrum { zpl_height: 0.0, ..Default::default() };
    let x = spec.wavelengths();
    let y = exact(&spec.model(), &spec.params(), &x);
    let r = least_squares_fit(&spec.model(), &x, &y, None, Some(&spec.params()), &FitOptions::default());
    assert!(matches!(r, Err(Error::DegenerateFit(_))));
}

#[test]
fn iteration_cap_is_flagged_not_thrown() {
    let (model, truth, x) = cases().swap_remove(4);
    let y = exact(&model, &truth, &x);
    let opts = FitOptions { max_iterations: 1, ..Default::default() };
    let init = perturb(&model, &truth, &[1.0; 3], 0.3);
    let fit = least_squares_fit(&model, &x, &y, None, Some(&init), &opts).unwrap();
    assert!(!fit.converged);
    assert!(!fit.warnings.is_empty());
}

#[test]
fn input_validation() {
    let m = FitModel::ExponentialSaturation;
    let o = FitOptions::default();
    assert!(least_squares_fit(&m, &[1.0], &[1.0], None, None, &o).is_err());
    assert!(least_squares_fit(&m, &[1.0, 2.0, 3.0], &[1.0, 2.0], None, None, &o).is_err());
    assert!(least_squares_fit(&m, &[1.0, 2.0, 3.0], &[1.0, 2.0, 2.5], Some(&[1.0, 0.0, 1.0]), None, &o).is_err());
    assert!(least_squares_fit(&m, &[1.0, 2.0, 3.0], &[1.0, 2.0, f64::NAN], None, None, &o).is_err());
}

#[test]
fn decay_trace_exact() {
    let (bw, n) = synthetic::default_trace_shape();
    let (t, v) = synthetic::decay_expectation(1.0, 15.9e-9, 0.0, bw, n);
    let trace = DecayTrace::simulated(t, v).unwrap();
    let fit = fit_decay_trace(&trace, &DecayFitConfig::default(), &FitOptions::default()).unwrap();
    assert_relative_eq!(fit.value("tau").unwrap(), 15.9e-9, max_relative = 1e-9);
}

#[test]
fn decay_trace_background_bias() {
    let (bw, n) = synthetic::default_trace_shape();
    let (t, v) = synthetic::decay_expectation(1e4, 15.9e-9, 500.0, bw, n);
    let trace = DecayTrace::measured(t, v, bw).unwrap();
    let without = fit_decay_trace(&trace, &DecayFitConfig::default(), &FitOptions::default()).unwrap();
    let with = fit_decay_trace(&trace, &DecayFitConfig { with_background: true, skip_bins: 0 }, &FitOptions::default()).unwrap();
    assert!(without.value("tau").unwrap() > 1.05 * 15.9e-9);
    assert_relative_eq!(with.value("tau").unwrap(), 15.9e-9, max_relative = 1e-6);
    assert_relative_eq!(with.value("background").unwrap(), 500.0, max_relative = 1e-6);
}

#[test]
fn decay_trace_rejections() {
    let (bw, _) = synthetic::default_trace_shape();
    let zero = DecayTrace::measured(linspace(0.0, 19.0 * bw.0, 20), vec![0.0; 20], bw).unwrap();
    assert!(fit_decay_trace(&zero, &DecayFitConfig::default(), &FitOptions::default()).is_err());
    let short = DecayTrace::measured(linspace(0.0, 8.0 * bw.0, 9), vec![5.0; 9], bw).unwrap();
    assert!(fit_decay_trace(&short, &DecayFitConfig::default(), &FitOptions::default()).is_err());
}

#[test]
fn decay_skip_bins_drops_rise() {
    let (bw, n) = synthetic::default_trace_shape();
    let (t, mut v) = synthetic::decay_expectation(1.0, 15.9e-9, 0.0, bw, n);
    v[0] = 0.3;
    v[1] = 0.2;
    let trace = DecayTrace::simulated(t, v).unwrap();
    let fit = fit_decay_trace(&trace, &DecayFitConfig { with_background: false, skip_bins: 2 }, &FitOptions::default()).unwrap();
    assert_relative_eq!(fit.value("tau").unwrap(), 15.9e-9, max_relative = 1e-9);
}

#[test]
fn pure_lorentzian_spectrum() {
    let spec = SyntheticSpectrum { zpl_height: 0.0, baseline: 0.0, slope_per_nm: 0.0, ..Default::default() };
    let fit = fit_spectrum(&spec.sample::<NoRng>(0.0, None), &FitOptions::default()).unwrap();
    assert!(fit.zpl_height.abs() < 1e-6, "{}", fit.zpl_height);
    assert_relative_eq!(fit.cavity_center_nm, 639.0, max_relative = 1e-12);
}

#[test]
fn spectrum_quality_factor() {
    let spec = SyntheticSpectrum { cavity_center_nm: 637.0, cavity_fwhm_nm: 637.0 / 500.0, zpl_center_nm: 635.0, ..Default::default() };
    let fit = fit_spectrum(&spec.sample::<NoRng>(0.0, None), &FitOptions::default()).unwrap();
    assert_relative_eq!(fit.quality_factor, 500.0, max_relative = 0.01);
    assert_relative_eq!(fit.zpl_center_nm, 635.0, max_relative = 1e-9);
}

#[test]
fn correlated_centers_warn() {
    let spec = SyntheticSpectrum::default();
    let fit = fit_spectrum(&spec.sample::<NoRng>(0.0, None), &FitOptions::default()).unwrap();
    assert!(!fit.warnings.iter().any(|w| w.contains("correlated")));
    let mut raw = fit.fit.clone();
    let (a, b) = (raw.covariance[1][1], raw.covariance[4][4]);
    let c = -0.995 * (a * b).sqrt();
    raw.covariance[1][4] = c;
    raw.covariance[4][1] = c;
    let s = spectrum::summarize(raw);
    assert!(s.warnings.iter().any(|w| w.contains("correlated")), "{:?}", s.warnings);
}

#[test]
fn transmission_examples() {
    assert_relative_eq!(eval_transmission_model(TransmissionKind::Tanh, 0.0, &[0.8, 2.0, 0.5]).unwrap(), 0.8, max_relative = 1e-15);
    assert_relative_eq!(eval_transmission_model(TransmissionKind::ExponentialSaturation, 1e9, &[0.7, 3.0]).unwrap(), 0.7, max_relative = 1e-15);
    assert!(eval_transmission_model(TransmissionKind::AsymmetricLorentzian, 0.0, &[1.0, 0.0, -0.1, 0.2]).is_err());
    assert!(eval_transmission_model(TransmissionKind::Tanh, 0.0, &[1.0, 0.0, -0.1]).is_err());
}

#[test]
fn result_json_round_trip() {
    let (model, truth, x) = cases().swap_remove(2);
    let y = exact(&model, &truth, &x);
    let fit = least_squares_fit(&model, &x, &y, None, None, &FitOptions::default()).unwrap();
    let json = serde_json::to_string(&fit).unwrap();
    let back: FitResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, fit);
    assert_relative_eq!(back.predict(1e11), model.eval(1e11, &truth), max_relative = 1e-8);
}

#[test]
fn amplitude_rescaling_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (model, truth, x) in cases() {
        if model == FitModel::TauDetuning {
            continue;
        }
        let y = sample_model(&model, &truth, &x, 0.01 * truth[0], Some(&mut rng));
        let sigma = vec![0.01 * truth[0]; x.len()];
        let k = 37.5;
        let ys: Vec<f64> = y.iter().map(|v| v * k).collect();
        let ss: Vec<f64> = sigma.iter().map(|v| v * k).collect();
        let a = least_squares_fit(&model, &x, &y, Some(&sigma), None, &FitOptions { strict: false, ..Default::default() }).unwrap();
        let b = least_squares_fit(&model, &x, &ys, Some(&ss), None, &FitOptions { strict: false, ..Default::default() }).unwrap();
        let names = model.param_names();
        for (i, (u, v)) in a.values().iter().zip(b.values()).enumerate() {
            let scaled = matches!(names[i], "amplitude" | "background" | "lorentz_amplitude" | "gauss_amplitude" | "baseline" | "slope" | "plateau" | "t_inf");
            let expect = if scaled { u * k } else { *u };
            assert_relative_eq!(v, expect, max_relative = 1e-9, epsilon = 1e-12 * k);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tau_detuning_round_trip(c in 0.02f64..2.0, kappa in 1e11f64..5e12, tau1 in 1e-9f64..1e-7, sx in prop::bool::ANY, sy in prop::bool::ANY) {
        let model = FitModel::TauDetuning;
        let truth = [c, kappa, tau1];
        let x = synthetic::default_detunings(kappa);
        let y = exact(&model, &truth, &x);
        let signs = [if sx { 1.0 } else { -1.0 }, if sy { 1.0 } else { -1.0 }, 1.0];
        let init = perturb(&model, &truth, &signs, 0.3);
        let fit = least_squares_fit(&model, &x, &y, None, Some(&init), &FitOptions::default()).unwrap();
        for (f, t) in fit.values().iter().zip(truth) {
            prop_assert!(((f - t) / t).abs() < 1e-6, "{:?} vs {:?}", fit.values(), truth);
        }
    }

    #[test]
    fn exponential_round_trip(a in 10.0f64..1e6, tau in 2e-9f64..60e-9, bg_frac in 0.0f64..0.1, s in prop::bool::ANY) {
        let model = FitModel::SingleExponential { background: true, t_ref: 0.0 };
        let truth = [a, tau, bg_frac * a];
        let x = linspace(0.0, 199.0 * 1.28e-9, 200);
        let y = exact(&model, &truth, &x);
        let sign = if s { 1.0 } else { -1.0 };
        let init = perturb(&model, &truth, &[sign, -sign, sign], 0.3);
        let fit = least_squares_fit(&model, &x, &y, None, Some(&init), &FitOptions::default()).unwrap();
        for (f, t) in fit.values().iter().zip(truth) {
            let err = if t == 0.0 { f.abs() / a } else { ((f - t) / t).abs() };
            prop_assert!(err < 1e-6, "{:?} vs {:?}", fit.values(), truth);
        }
    }

    #[test]
    fn transmission_round_trip(t0 in 0.2f64..1.0, x0 in 0.5f64..2.0, s in 0.1f64..0.6, l0 in 2.0f64..20.0, w1 in 0.1f64..0.5, w2 in 0.1f64..0.5) {
        let sets = [
            (FitModel::TanhTransmission, vec![t0, x0, s], linspace(-3.0, 3.0, 61)),
            (FitModel::ExponentialSaturation, vec![t0, l0], linspace(0.0, 60.0, 31)),
            (FitModel::AsymmetricLorentzian, vec![t0, 2.0, w1, w2], linspace(1.0, 3.0, 81)),
        ];
        for (model, truth, x) in sets {
            let y = exact(&model, &truth, &x);
            let init = perturb(&model, &truth, &[1.0, -1.0, 1.0, -1.0], 0.3);
            let fit = least_squares_fit(&model, &x, &y, None, Some(&init), &FitOptions::default()).unwrap();
            for (f, t) in fit.values().iter().zip(&truth) {
                prop_assert!(((f - t) / t).abs() < 1e-6, "{}: {:?} vs {:?}", model.formula(), fit.values(), truth);
            }
        }
    }
}
