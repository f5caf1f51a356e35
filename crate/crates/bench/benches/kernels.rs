use criterion::{black_box, criterion_group, criterion_main, Criterion};

use purcellkit::coupling::{ensemble_weighting_factor, SyntheticCavity};
use purcellkit::dynamics::evolve_master_equation;
use purcellkit::dynamics::master::uniform_grid;
use purcellkit::fitting::least_squares_fit;
use purcellkit::synthetic::{self, linspace, sample_model, SyntheticSpectrum};
use purcellkit::{AtomCavityParams, Duration, FitModel, FitOptions, OrdinaryFrequency, WeightingConfig};
use rand_chacha::ChaCha8Rng as NoRng;

fn master_equation(c: &mut Criterion) {
    let p = AtomCavityParams {
        g0: OrdinaryFrequency(synthetic::DEVICE_G0_HZ),
        kappa: OrdinaryFrequency(synthetic::DEVICE_KAPPA_HZ),
        gamma1: 1.0 / synthetic::DEVICE_TAU1_S,
        gamma_phi: 0.0,
        detuning: OrdinaryFrequency(0.0),
    };
    let times = uniform_grid(Duration(1.28e-9), 200);
    for n_max in [1, 2] {
        c.bench_function(&format!("master_equation_nmax{n_max}"), |b| {
            b.iter(|| evolve_master_equation(black_box(&p), n_max, &times, 1e-8).unwrap())
        });
    }
}

fn lm_fit(c: &mut Criterion) {
    let model = FitModel::TauDetuning;
    let truth = [0.14, 940e9, 15.9e-9];
    let x = linspace(-2e12, 2e12, 41);
    let y = sample_model::<NoRng>(&model, &truth, &x, 0.0, None);
    let init = [0.1, 1.2e12, 14e-9];
    c.bench_function("lm_tau_detuning", |b| {
        b.iter(|| least_squares_fit(&model, &x, black_box(&y), None, Some(&init), &FitOptions::default()).unwrap())
    });

    let spec = SyntheticSpectrum::default();
    let (sx, sy): (Vec<f64>, Vec<f64>) = spec.sample::<NoRng>(0.0, None).into_iter().unzip();
    let smodel = spec.model();
    c.bench_function("lm_spectrum", |b| {
        b.iter(|| least_squares_fit(&smodel, &sx, black_box(&sy), None, None, &FitOptions::default()).unwrap())
    });
}

fn ensemble(c: &mut Criterion) {
    let grid = SyntheticCavity::default().sample_default([121, 61, 41]).unwrap();
    let cfg = WeightingConfig::default();
    c.bench_function("ensemble_weighting_121x61x41", |b| {
        b.iter(|| ensemble_weighting_factor(black_box(&grid), &cfg).unwrap())
    });
}

criterion_group!(benches, master_equation, lm_fit, ensemble);
criterion_main!(benches);
