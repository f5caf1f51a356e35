use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{Map, Value};

use purcellkit::coupling::{
    self, ensemble_weighting_factor, DipoleMoment, GridBody, Region, SyntheticCavity,
    WeightingResult,
};
use purcellkit::dynamics::master::{default_grid, uniform_grid, DEFAULT_N_MAX, DEFAULT_REL_TOL};
use purcellkit::dynamics::{
    analytic_total_rate, cooperativity, evolve_master_equation, extract_decay_rate, simulate_detuning_sweep,
    RateExtractionConfig,
};
use purcellkit::fitting::{self, DecayFitConfig, SpectrumFit};
use purcellkit::linkbudget::{chain_efficiency, BudgetReport};
use purcellkit::purcell::{czpl_from_lifetimes, zpl_quantities_from_C, CzplEstimate};
use purcellkit::quantities::frequency_to_wavelength;
use purcellkit::synthetic::{self, linspace, SyntheticSpectrum};
use purcellkit::{
    io, AtomCavityParams, DecayTrace, Duration, EfficiencyFactors, EmitterDipole, FieldGrid, FitOptions, FitResult,
    LinkChain, LinkElement, OrdinaryFrequency, PurcellResult, WeightingConfig,
};

pub use crate::output::CliError;
use crate::output::{emit, write_atomic, write_atomic_with, CliResult};
use crate::Common;

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn fit_options(c: &Common) -> FitOptions {
    let mut o = FitOptions::default();
    if let Some(t) = c.tol {
        o.x_tol = t;
    }
    o
}

fn rel_tol(c: &Common) -> f64 {
    c.tol.unwrap_or(DEFAULT_REL_TOL)
}

fn parse_set(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// The reported device: g₀/2π = 0.57 GHz, κ/2π = 940 GHz, τ₁ = 15.9 ns.
fn device_params() -> AtomCavityParams {
    AtomCavityParams {
        g0: OrdinaryFrequency(synthetic::DEVICE_G0_HZ),
        kappa: OrdinaryFrequency(synthetic::DEVICE_KAPPA_HZ),
        gamma1: 1.0 / synthetic::DEVICE_TAU1_S,
        gamma_phi: 0.0,
        detuning: OrdinaryFrequency(0.0),
    }
}

/// Writes x, data, model and residual columns for plotting.
fn write_curve(path: &Path, x_name: &str, x: &[f64], y: &[f64], fit: &FitResult) -> CliResult {
    let model: Vec<f64> = x.iter().map(|&v| fit.predict(v)).collect();
    let resid: Vec<f64> = y.iter().zip(&model).map(|(a, b)| a - b).collect();
    write_atomic_with(path, |w| {
        io::write_columns(w, &[("model", fit.formula.clone())], &[x_name, "data", "model", "residual"], &[x, y, &model, &resid])
    })
}

#[derive(Debug, Args)]
pub struct SimulateDecay {
    /// JSON object with g0_hz, kappa_hz, gamma1_per_s, gamma_phi_per_s, detuning_hz.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Override one parameter, e.g. --set kappa_hz=5e11. Repeatable.
    #[arg(long = "set", value_parser = parse_set)]
    overrides: Vec<(String, f64)>,
    /// Detunings in Hz. Repeatable; defaults to the parameter set's detuning.
    #[arg(long = "detuning-hz", allow_hyphen_values = true)]
    detunings: Vec<f64>,
    /// Detunings as multiples of κ. Repeatable.
    #[arg(long = "detuning-over-kappa", allow_hyphen_values = true)]
    detunings_over_kappa: Vec<f64>,
    /// Fock-space truncation.
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: usize,
    /// Number of output times over five emitter lifetimes.
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Output time step in seconds; replaces the default horizon.
    #[arg(long)]
    dt_s: Option<f64>,
    /// CSV of the excited-state population (single detuning only).
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SweepPoint {
    detuning_hz: f64,
    simulated_rate_per_s: f64,
    simulated_rate_std_error: f64,
    analytic_rate_per_s: f64,
    relative_difference: f64,
    lifetime_s: f64,
    window_s: (f64, f64),
    curved: bool,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct SimulateOutput {
    params: AtomCavityParams,
    cooperativity: f64,
    n_max: usize,
    rel_tol: f64,
    n_times: usize,
    points: Vec<SweepPoint>,
}

pub fn simulate_decay(a: &SimulateDecay, c: &Common) -> CliResult {
    let mut obj: Map<String, Value> = match &a.params {
        Some(p) => serde_json::from_reader(open(p)?)?,
        None => match serde_json::to_value(device_params())? {
            Value::Object(m) => m,
            _ => unreachable!("params serialize to an object"),
        },
    };
    for (k, v) in &a.overrides {
        obj.insert(k.clone(), Value::from(*v));
    }
    let base: AtomCavityParams = serde_json::from_value(Value::Object(obj))?;
    base.validate()?;
    let mut dets: Vec<OrdinaryFrequency> = a.detunings.iter().map(|&d| OrdinaryFrequency(d)).collect();
    dets.extend(a.detunings_over_kappa.iter().map(|&r| OrdinaryFrequency(r * base.kappa.0)));
    if dets.is_empty() {
        dets.push(base.detuning);
    }
    if a.trace_out.is_some() && dets.len() != 1 {
        return Err(CliError::Usage("--trace-out needs exactly one detuning".into()));
    }
    let times = match a.dt_s {
        Some(dt) if dt > 0.0 => uniform_grid(Duration(dt), a.points.max(2)),
        Some(dt) => return Err(CliError::Usage(format!("--dt-s must be positive, got {dt}"))),
        None => default_grid(&base, a.points),
    };
    let tol = rel_tol(c);
    let traces = simulate_detuning_sweep(&base, &dets, a.n_max, &times, tol)?;
    let mut points = Vec::with_capacity(dets.len());
    for (d, tr) in dets.iter().zip(&traces) {
        let p = AtomCavityParams { detuning: *d, ..base };
        let est = extract_decay_rate(tr, &RateExtractionConfig::default())?;
        let analytic = analytic_total_rate(&p)?;
        points.push(SweepPoint {
            detuning_hz: d.0,
            simulated_rate_per_s: est.rate,
            simulated_rate_std_error: est.std_error,
            analytic_rate_per_s: analytic,
            relative_difference: (est.rate - analytic) / analytic,
            lifetime_s: 1.0 / est.rate,
            window_s: est.window,
            curved: est.curved,
            warnings: est.warnings,
        });
    }
    if let Some(path) = &a.trace_out {
        let extra = [("detuning_hz", format!("{:e}", dets[0].0))];
        write_atomic_with(path, |w| io::write_trace(w, &traces[0], &extra))?;
    }
    let out = SimulateOutput {
        params: base,
        cooperativity: cooperativity(&base)?,
        n_max: a.n_max,
        rel_tol: tol,
        n_times: times.len(),
        points,
    };
    emit("simulate-decay", &out, c.out.as_deref())
}

#[derive(Debug, Args)]
pub struct FitDecay {
    /// CSV with time_s,value columns; `# kind:` and `# bin_width_s:` metadata.
    input: PathBuf,
    /// Fit a constant background.
    #[arg(long)]
    background: bool,
    /// Bins to drop after the maximum.
    #[arg(long, default_value_t = 0)]
    skip_bins: usize,
    /// CSV of data, model and residuals.
    #[arg(long)]
    curve_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct DecayOutput {
    lifetime_s: f64,
    lifetime_std_error_s: Option<f64>,
    rate_per_s: f64,
    fit: FitResult,
}

pub fn fit_decay(a: &FitDecay, c: &Common) -> CliResult {
    let trace: DecayTrace = io::read_trace(open(&a.input)?)?;
    let cfg = DecayFitConfig {
        with_background: a.background,
        skip_bins: a.skip_bins,
    };
    let fit = fitting::fit_decay_trace(&trace, &cfg, &fit_options(c))?;
    if let Some(p) = &a.curve_out {
        write_curve(p, "time_s", &trace.times, &trace.values, &fit)?;
    }
    let tau = fit.value("tau").unwrap_or(f64::NAN);
    let out = DecayOutput {
        lifetime_s: tau,
        lifetime_std_error_s: fit.std_error("tau"),
        rate_per_s: 1.0 / tau,
        fit,
    };
    emit("fit-decay", &out, c.out.as_deref())
}

#[derive(Debug, Args)]
pub struct FitDetuning {
    /// CSV with detuning_hz,tau_s[,sigma_s] columns.
    input: PathBuf,
    /// Debye-Waller factor for the ZPL-resolved quantities.
    #[arg(long)]
    eta_dw: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    eta_qe: f64,
    /// CSV of data, model and residuals.
    #[arg(long)]
    curve_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct DetuningOutput {
    cooperativity: f64,
    purcell_factor: f64,
    zpl: Option<PurcellResult>,
    fit: FitResult,
}

pub fn fit_detuning(a: &FitDetuning, c: &Common) -> CliResult {
    let pts = io::read_tau_points(open(&a.input)?)?;
    let fit = fitting::fit_tau_detuning(&pts, &fit_options(c))?;
    if let Some(p) = &a.curve_out {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        write_curve(p, "detuning_hz", &x, &y, &fit)?;
    }
    let coop = fit.value("C").unwrap_or(f64::NAN);
    let zpl = match a.eta_dw {
        Some(dw) => Some(zpl_quantities_from_C(coop.max(0.0), &EfficiencyFactors::new(a.eta_qe, dw)?)?),
        None => None,
    };
    let out = DetuningOutput {
        cooperativity: coop,
        purcell_factor: 1.0 + coop,
        zpl,
        fit,
    };
    emit("fit-detuning", &out, c.out.as_deref())
}

#[derive(Debug, Args)]
pub struct FitSpectrum {
    /// CSV with wavelength_nm,intensity columns.
    input: PathBuf,
    /// CSV of data, model and residuals.
    #[arg(long)]
    curve_out: Option<PathBuf>,
}

pub fn fit_spectrum(a: &FitSpectrum, c: &Common) -> CliResult {
    let mut pts = io::read_spectrum(open(&a.input)?)?;
    let sf: SpectrumFit = fitting::fit_spectrum(&pts, &fit_options(c))?;
    if let Some(p) = &a.curve_out {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        write_curve(p, "wavelength_nm", &x, &y, &sf.fit)?;
    }
    emit("fit-spectrum", &sf, c.out.as_deref())
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["c", "tau_on_s"]))]
pub struct Purcell {
    /// Total cooperativity.
    #[arg(long = "C")]
    c: Option<f64>,
    /// On-resonance lifetime in seconds (with --tau-off-s).
    #[arg(long, requires = "tau_off_s")]
    tau_on_s: Option<f64>,
    /// Far-detuned lifetime in seconds.
    #[arg(long, requires = "tau_on_s")]
    tau_off_s: Option<f64>,
    /// Debye-Waller factor.
    #[arg(long)]
    eta_dw: f64,
    /// Quantum efficiency.
    #[arg(long, default_value_t = 1.0)]
    eta_qe: f64,
}

#[derive(Serialize)]
struct LifetimeOutput {
    czpl: CzplEstimate,
    zpl_purcell_factor: f64,
    quantum_efficiency: f64,
    debye_waller: f64,
}

pub fn purcell(a: &Purcell, c: &Common) -> CliResult {
    let eta = EfficiencyFactors::new(a.eta_qe, a.eta_dw)?;
    match (a.c, a.tau_on_s, a.tau_off_s) {
        (Some(coop), _, _) => emit("purcell", &zpl_quantities_from_C(coop, &eta)?, c.out.as_deref()),
        (None, Some(on), Some(off)) => {
            let czpl = czpl_from_lifetimes(Duration(on), Duration(off), &eta)?;
            let out = LifetimeOutput {
                czpl,
                zpl_purcell_factor: 1.0 + czpl.value,
                quantum_efficiency: a.eta_qe,
                debye_waller: a.eta_dw,
            };
            emit("purcell", &out, c.out.as_deref())
        }
        _ => Err(CliError::Usage("give --C or both --tau-on-s and --tau-off-s".into())),
    }
}

#[derive(Debug, Args)]
pub struct G0 {
    /// Emitter lifetime in seconds.
    #[arg(long, default_value_t = 16e-9)]
    tau1_s: f64,
    /// Emission and cavity frequency in Hz.
    #[arg(long, default_value_t = 475e12)]
    frequency_hz: f64,
    /// Debye-Waller factors. Repeatable.
    #[arg(long, default_values_t = [0.02, 0.03])]
    eta_dw: Vec<f64>,
    /// Field grid; overrides --eps-rel and --volume-norm.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Relative permittivity at the field maximum.
    #[arg(long, default_value_t = 5.7)]
    eps_rel: f64,
    /// Mode volume in units of (λ/n)³ with n = √ε.
    #[arg(long, default_value_t = 0.5)]
    volume_norm: f64,
    /// Ensemble weighting factor applied to g₀.
    #[arg(long)]
    weighting: Option<f64>,
}

#[derive(Serialize)]
struct G0Point {
    debye_waller: f64,
    d_zpl: DipoleMoment,
    g0_hz: f64,
    g0_effective_hz: Option<f64>,
}

#[derive(Serialize)]
struct G0Output {
    tau1_s: f64,
    frequency_hz: f64,
    d_perp: DipoleMoment,
    mode_volume_m3: f64,
    normalized_mode_volume: f64,
    eps_rel_at_max: f64,
    e_zpf_v_per_m: f64,
    weighting: Option<f64>,
    points: Vec<G0Point>,
}

pub fn g0(a: &G0, c: &Common) -> CliResult {
    let nu = OrdinaryFrequency(a.frequency_hz);
    let lambda = frequency_to_wavelength(nu)?;
    let (volume, eps) = match &a.grid {
        Some(p) => {
            let grid = FieldGrid::read(open(p)?)?;
            (coupling::mode_volume(&grid)?, grid.eps()[grid.energy_argmax()])
        }
        None => {
            if !(a.eps_rel >= 1.0 && a.volume_norm > 0.0) {
                return Err(purcellkit::Error::Domain("need eps_rel >= 1 and a positive volume".into()).into());
            }
            (a.volume_norm * (lambda / a.eps_rel.sqrt()).powi(3), a.eps_rel)
        }
    };
    let e_zpf = coupling::zero_point_field(nu, eps, volume)?;
    let d_perp = coupling::dipole_from_lifetime(Duration(a.tau1_s), nu)?;
    let mut points = Vec::with_capacity(a.eta_dw.len());
    for &dw in &a.eta_dw {
        let dip = EmitterDipole::new(Duration(a.tau1_s), nu, dw)?;
        let g = coupling::g0_ideal(dip.d_zpl.coulomb_meters, e_zpf)?;
        let eff = match a.weighting {
            Some(w) => Some(coupling::effective_g0(g, w)?.0),
            None => None,
        };
        points.push(G0Point {
            debye_waller: dw,
            d_zpl: dip.d_zpl,
            g0_hz: g.0,
            g0_effective_hz: eff,
        });
    }
    let out = G0Output {
        tau1_s: a.tau1_s,
        frequency_hz: a.frequency_hz,
        d_perp,
        mode_volume_m3: volume,
        normalized_mode_volume: coupling::normalized_mode_volume(volume, lambda, eps.sqrt())?,
        eps_rel_at_max: eps,
        e_zpf_v_per_m: e_zpf,
        weighting: a.weighting,
        points,
    };
    emit("g0", &out, c.out.as_deref())
}

#[derive(Debug, Args)]
pub struct EnsembleWeight {
    /// Field grid file.
    grid: PathBuf,
    /// Field threshold as a fraction of the maximum.
    #[arg(long, default_value_t = 0.2)]
    threshold: f64,
    /// Region in metres: xmin,xmax,ymin,ymax,zmin,zmax.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    region: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct WeightOutput {
    region: Region,
    #[serde(flatten)]
    result: WeightingResult,
}

pub fn ensemble_weight(a: &EnsembleWeight, c: &Common) -> CliResult {
    let grid = FieldGrid::read(open(&a.grid)?)?;
    let mut cfg = WeightingConfig::with_threshold(a.threshold);
    if let Some(r) = &a.region {
        if r.len() != 6 {
            return Err(CliError::Usage(format!("--region needs 6 values, got {}", r.len())));
        }
        cfg.region = Region::new([r[0], r[2], r[4]], [r[1], r[3], r[5]])?;
    }
    let result = ensemble_weighting_factor(&grid, &cfg)?;
    emit("ensemble-weight", &WeightOutput { region: cfg.region, result }, c.out.as_deref())
}

#[derive(Debug, Args)]
pub struct ModeVolume {
    /// Field grid file.
    grid: PathBuf,
    /// Cavity frequency in Hz, for the normalized volume.
    #[arg(long, default_value_t = 475e12)]
    frequency_hz: f64,
    /// Refractive index for the normalized volume; defaults to √ε at the maximum.
    #[arg(long)]
    index: Option<f64>,
}

#[derive(Serialize)]
struct ModeVolumeOutput {
    mode_volume_m3: f64,
    normalized_mode_volume: f64,
    index: f64,
    eps_rel_at_max: f64,
    max_position_m: [f64; 3],
    maxima_coincide: bool,
    n_points: usize,
}

pub fn mode_volume(a: &ModeVolume, c: &Common) -> CliResult {
    let grid = FieldGrid::read(open(&a.grid)?)?;
    let v = coupling::mode_volume(&grid)?;
    let imax = grid.energy_argmax();
    let eps = grid.eps()[imax];
    let n = a.index.unwrap_or(eps.sqrt());
    let lambda = frequency_to_wavelength(OrdinaryFrequency(a.frequency_hz))?;
    let out = ModeVolumeOutput {
        mode_volume_m3: v,
        normalized_mode_volume: coupling::normalized_mode_volume(v, lambda, n)?,
        index: n,
        eps_rel_at_max: eps,
        max_position_m: grid.position(imax),
        maxima_coincide: grid.maxima_coincide(),
        n_points: grid.len(),
    };
    emit("mode-volume", &out, c.out.as_deref())
}

#[derive(Debug, Args)]
pub struct LinkBudget {
    /// JSON array of elements: {name, efficiency | loss_db | loss_db_per_cm + length_cm}.
    #[arg(long)]
    chain: Option<PathBuf>,
    /// Propagation loss of an appended waveguide element.
    #[arg(long, requires = "length_cm")]
    db_per_cm: Option<f64>,
    #[arg(long, requires = "db_per_cm")]
    length_cm: Option<f64>,
    /// Measured end-to-end efficiency, for the unexplained-loss row.
    #[arg(long)]
    measured: Option<f64>,
}

#[derive(Serialize)]
struct LinkOutput {
    chain: LinkChain,
    #[serde(flatten)]
    report: BudgetReport,
}

pub fn link_budget(a: &LinkBudget, c: &Common) -> CliResult {
    let mut chain = match &a.chain {
        Some(p) => serde_json::from_reader(open(p)?)?,
        None => LinkChain::default(),
    };
    if let (Some(db), Some(len)) = (a.db_per_cm, a.length_cm) {
        chain.push(LinkElement::propagation("waveguide", db, len));
    }
    if chain.elements.is_empty() {
        return Err(CliError::Usage("give --chain or --db-per-cm with --length-cm".into()));
    }
    let report = chain_efficiency(&chain, a.measured)?;
    emit("link-budget", &LinkOutput { chain, report }, c.out.as_deref())
}

#[derive(Debug, Args)]
pub struct GenSynthetic {
    /// Field grid points per axis.
    #[arg(long, value_delimiter = ',', default_values_t = [61, 31, 21])]
    grid_points: Vec<usize>,
    /// Expected counts in the first bin of each decay histogram.
    #[arg(long, default_value_t = 1e4)]
    counts: f64,
}

#[derive(Serialize)]
struct FileEntry {
    file: String,
    description: String,
}

#[derive(Serialize)]
struct Manifest {
    schema_version: u32,
    seed: u64,
    params: AtomCavityParams,
    cooperativity: f64,
    decay_detunings_over_kappa: Vec<f64>,
    tau_detuning_sigma_s: f64,
    spectrum: SyntheticSpectrum,
    spectrum_relative_noise: f64,
    cavity: SyntheticCavity,
    files: Vec<FileEntry>,
}

const DECAY_DETUNINGS: [f64; 5] = [0.0, 0.25, 0.5, 1.0, 2.0];
const TAU_SIGMA_S: f64 = 0.2e-9;
const SPECTRUM_NOISE: f64 = 0.1;

pub fn gen_synthetic(a: &GenSynthetic, c: &Common) -> CliResult {
    let dir = c
        .out
        .as_deref()
        .ok_or_else(|| CliError::Usage("gen-synthetic needs --out DIR".into()))?;
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let p = device_params();
    let mut files = Vec::new();

    let (bw, n_bins) = synthetic::default_trace_shape();
    let times = uniform_grid(bw, n_bins);
    for dk in DECAY_DETUNINGS {
        let pd = AtomCavityParams { detuning: OrdinaryFrequency(dk * p.kappa.0), ..p };
        let pop = evolve_master_equation(&pd, DEFAULT_N_MAX, &times, rel_tol(c))?;
        let mean: Vec<f64> = pop.values.iter().map(|v| a.counts * v).collect();
        let counts = synthetic::poisson_sample(&mean, &mut rng)?;
        let trace = DecayTrace::measured(times.clone(), counts, bw)?;
        let name = format!("decay_{dk}kappa.csv");
        let extra = [("detuning_hz", format!("{:e}", pd.detuning.0))];
        write_atomic_with(&dir.join(&name), |w| io::write_trace(w, &trace, &extra))?;
        files.push(FileEntry {
            file: name,
            description: format!("photon-count histogram at detuning {dk} kappa"),
        });
    }

    let dets = linspace(-2e12, 2e12, 9);
    let tau1 = 1.0 / p.gamma1;
    let pts = synthetic::tau_detuning_points(
        cooperativity(&p)?,
        p.kappa.0,
        tau1,
        &dets,
        TAU_SIGMA_S / tau1,
        Some(&mut rng),
    )?;
    // Constant error bars, as quoted for the measured points.
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().map(|q| (q.0, q.1)).unzip();
    let s = vec![TAU_SIGMA_S; x.len()];
    write_atomic_with(&dir.join("tau_detuning.csv"), |w| {
        io::write_columns(w, &[], &["detuning_hz", "tau_s", "sigma_s"], &[&x, &y, &s])
    })?;
    files.push(FileEntry {
        file: "tau_detuning.csv".into(),
        description: "lifetime versus cavity detuning with 0.2 ns error bars".into(),
    });

    let spec = SyntheticSpectrum::default();
    let sp = spec.sample(SPECTRUM_NOISE, Some(&mut rng));
    let (wl, inten): (Vec<f64>, Vec<f64>) = sp.into_iter().unzip();
    write_atomic_with(&dir.join("spectrum.csv"), |w| {
        io::write_columns(w, &[], &["wavelength_nm", "intensity"], &[&wl, &inten])
    })?;
    files.push(FileEntry {
        file: "spectrum.csv".into(),
        description: "cavity Lorentzian plus ZPL Gaussian with 10% multiplicative noise".into(),
    });

    let cavity = SyntheticCavity::default();
    if a.grid_points.len() != 3 {
        return Err(CliError::Usage(format!("--grid-points needs 3 values, got {}", a.grid_points.len())));
    }
    let dims = [a.grid_points[0], a.grid_points[1], a.grid_points[2]];
    let grid = cavity.sample_default(dims)?;
    write_atomic_with(&dir.join("field_grid.csv"), |w| grid.write(w, GridBody::Csv))?;
    files.push(FileEntry {
        file: "field_grid.csv".into(),
        description: "standing-wave field map with a Gaussian envelope".into(),
    });

    let manifest = Manifest {
        schema_version: purcellkit::SCHEMA_VERSION,
        seed: c.seed,
        params: p,
        cooperativity: cooperativity(&p)?,
        decay_detunings_over_kappa: DECAY_DETUNINGS.to_vec(),
        tau_detuning_sigma_s: TAU_SIGMA_S,
        spectrum: spec,
        spectrum_relative_noise: SPECTRUM_NOISE,
        cavity,
        files,
    };
    let mut buf = serde_json::to_vec_pretty(&manifest)?;
    buf.push(b'\n');
    write_atomic(&dir.join("manifest.json"), &buf)?;
    emit("gen-synthetic", &manifest, None)
}

