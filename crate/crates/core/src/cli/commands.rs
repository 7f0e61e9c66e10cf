use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::options::{CompareCmd, CoolCmd, MarginalCmd, QuasiprobCmd, StateCmd, TomographyCmd};
use super::{CliError, OutputTarget};
use crate::conditioning::{cool_by_measurement, BathParams, GaussianState};
use crate::hilbert::{make_state, parity_expectation, DensityMatrix, StateKind};
use crate::io::{
    file_hash, num, read_dataset, read_grid_csv, write_dataset, write_density_matrix, write_grid_files, write_json,
    write_marginal_csv, write_table, GridSidecar, Provenance,
};
use crate::phasespace::{self, default_quadrature_grid, quasiprob_grid, suggested_half_extent, GridSpec};
use crate::probe::{linearisation_check, s_parameter, scaled_noise_width, scaled_outcome_pdf, LinearisationCheck, ProbeParams};
use crate::special::linspace;
use crate::tomography::{
    check_ordering, compare_grids, invert_marginals, run_protocol, uniform_angles, GridComparison, ReconstructionConfig,
};

const DEFAULT_GRID_N: usize = 256;
const DEFAULT_TOMOGRAPHY_GRID_N: usize = 128;
const DEFAULT_ANGLES: usize = 24;
const DEFAULT_PER_ANGLE: usize = 100_000;
const OUTCOME_POINTS: usize = 4001;
/// Phase-space radius assumed when reconstructing a dataset of unknown origin.
const UNKNOWN_STATE_RADIUS: f64 = 2.0;

/// `config.json`: the resolved configuration and its identity.
#[derive(Serialize)]
struct Recorded<'a, T> {
    config_hash: &'a str,
    seed: Option<u64>,
    config: &'a T,
}

fn record<T: Serialize>(dir: &Path, config: &T, seed: Option<u64>) -> Result<Provenance, CliError> {
    let prov = Provenance::new(config, seed)?;
    write_json(
        &dir.join("config.json"),
        &Recorded {
            config_hash: &prov.config_hash,
            seed,
            config,
        },
    )?;
    Ok(prov)
}

/// Echoes a report on stdout. A closed stdout is not an error: the files
/// are the real output.
fn echo<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(crate::QsrError::from)?;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn report<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    write_json(&dir.join(name), value)?;
    echo(value)
}

fn build_state(state: StateKind, dim: usize) -> Result<DensityMatrix, CliError> {
    Ok(make_state(state, dim)?)
}

#[derive(Serialize)]
struct StateRun {
    command: &'static str,
    state: StateKind,
    dim: usize,
}

#[derive(Serialize)]
struct StateSummary<'a> {
    config_hash: &'a str,
    seed: Option<u64>,
    label: String,
    dim: usize,
    truncation_deficit: f64,
    mean_occupation: f64,
    parity: f64,
    min_eigenvalue: f64,
}

pub fn state(opts: StateCmd, out: &OutputTarget) -> Result<(), CliError> {
    let (state, dim) = opts.state.resolve()?;
    let rho = build_state(state, dim)?;
    let dir = out.prepare()?;
    let run = StateRun {
        command: "state",
        state,
        dim,
    };
    let prov = record(dir, &run, None)?;
    write_density_matrix(&dir.join("state.json"), &rho, &prov)?;
    let summary = StateSummary {
        config_hash: &prov.config_hash,
        seed: None,
        label: state.label(),
        dim,
        truncation_deficit: rho.truncation_deficit(),
        mean_occupation: rho.mean_occupation(),
        parity: parity_expectation(&rho),
        min_eigenvalue: rho.min_eigenvalue(),
    };
    report(dir, "summary.json", &summary)
}

#[derive(Serialize)]
struct QuasiprobRun {
    command: &'static str,
    state: StateKind,
    dim: usize,
    s: f64,
    grid: GridSpec,
}

pub fn quasiprob(opts: QuasiprobCmd, out: &OutputTarget) -> Result<(), CliError> {
    let (state, dim) = opts.state.resolve()?;
    let s = opts.s.unwrap_or(0.0);
    let grid = GridSpec::new(
        opts.grid
            .half_extent
            .unwrap_or_else(|| suggested_half_extent(state.extent_hint(), s)),
        opts.grid.grid_n.unwrap_or(DEFAULT_GRID_N),
    )?;
    let rho = build_state(state, dim)?;
    let dir = out.prepare()?;
    let values = quasiprob_grid(&rho, s, grid)?;
    let run = QuasiprobRun {
        command: "quasiprob",
        state,
        dim,
        s,
        grid,
    };
    let prov = record(dir, &run, None)?;
    let sidecar = write_grid_files(dir, "quasiprob", &values, &prov)?;
    echo(&sidecar)
}

#[derive(Serialize)]
struct MarginalRun {
    command: &'static str,
    state: StateKind,
    dim: usize,
    theta: f64,
    probe: Option<ProbeParams>,
}

#[derive(Serialize)]
struct MarginalSummary<'a> {
    config_hash: &'a str,
    seed: Option<u64>,
    theta: f64,
    integral: f64,
    mean: f64,
    variance: f64,
    /// Natural ordering −(1 + 2σ_P²)/χ² of the probe, if one was given.
    s_natural: Option<f64>,
    outcome_mean: Option<f64>,
    outcome_variance: Option<f64>,
}

pub fn marginal(opts: MarginalCmd, out: &OutputTarget) -> Result<(), CliError> {
    let (state, dim) = opts.state.resolve()?;
    let theta = opts.theta.unwrap_or(0.0);
    let probe = if opts.probe.is_empty() {
        None
    } else {
        Some(opts.probe.resolve()?)
    };
    let rho = build_state(state, dim)?;
    let dir = out.prepare()?;
    let xs = default_quadrature_grid(&rho);
    let m = phasespace::marginal(&rho, theta, &xs)?;
    let run = MarginalRun {
        command: "marginal",
        state,
        dim,
        theta,
        probe,
    };
    let prov = record(dir, &run, None)?;
    write_marginal_csv(&dir.join("marginal.csv"), &m, &prov)?;
    let outcome = match &probe {
        Some(p) => {
            let half = xs[xs.len() - 1] + 10.0 * scaled_noise_width(p);
            let pdf = scaled_outcome_pdf(&m, p, &linspace(-half, half, OUTCOME_POINTS))?;
            write_marginal_csv(&dir.join("outcome.csv"), &pdf, &prov)?;
            Some(pdf)
        }
        None => None,
    };
    let summary = MarginalSummary {
        config_hash: &prov.config_hash,
        seed: None,
        theta,
        integral: m.integral(),
        mean: m.mean(),
        variance: m.variance(),
        s_natural: probe.as_ref().map(s_parameter),
        outcome_mean: outcome.as_ref().map(|o| o.mean()),
        outcome_variance: outcome.as_ref().map(|o| o.variance()),
    };
    report(dir, "summary.json", &summary)
}

#[derive(Serialize)]
struct TomographyRun {
    command: &'static str,
    state: Option<StateKind>,
    dim: Option<usize>,
    /// Config hash of the input dataset when reconstructing from a file.
    dataset_config_hash: Option<String>,
    probe: ProbeParams,
    angles: Vec<f64>,
    per_angle: Option<usize>,
    seed: u64,
    reconstruction: ReconstructionConfig,
}

#[derive(Serialize)]
struct TomographyReport<'a> {
    config_hash: &'a str,
    seed: Option<u64>,
    state_label: String,
    s_natural: f64,
    s_target: f64,
    total_samples: usize,
    low_pass_warning: Option<String>,
    linearisation: Option<LinearisationCheck>,
    reconstruction: GridSidecar,
    /// Against the directly computed grid at s_target, when the state is known.
    comparison: Option<GridComparison>,
}

pub fn tomography(opts: TomographyCmd, out: &OutputTarget) -> Result<(), CliError> {
    let known = if opts.state.is_empty() {
        None
    } else {
        Some(opts.state.resolve()?)
    };
    let (loaded, probe, dataset_hash) = match &opts.dataset {
        Some(path) => {
            if !opts.probe.is_empty() || opts.seed.is_some() || opts.angles.is_some() || opts.per_angle.is_some() {
                return Err(CliError::Usage(
                    "probe, seed, angles and per-angle are fixed by the dataset file".into(),
                ));
            }
            let (data, hash) = read_dataset(path)?;
            let probe = data.probe;
            (Some(data), probe, Some(hash))
        }
        None => {
            if known.is_none() {
                return Err(CliError::Usage("missing --kind (or --dataset)".into()));
            }
            (None, opts.probe.resolve()?, None)
        }
    };
    let seed = match &loaded {
        Some(data) => data.seed,
        None => opts
            .seed
            .ok_or_else(|| CliError::Usage("missing --seed; every simulated run needs one".into()))?,
    };
    let per_angle = loaded.is_none().then(|| opts.per_angle.unwrap_or(DEFAULT_PER_ANGLE));
    let angles = match &loaded {
        Some(data) => data.angles.clone(),
        None => uniform_angles(opts.angles.unwrap_or(DEFAULT_ANGLES)),
    };
    let s_natural = s_parameter(&probe);
    let s_target = opts.s_target.unwrap_or(s_natural);
    let radius = known.map_or(UNKNOWN_STATE_RADIUS, |(s, _)| s.extent_hint());
    let grid = GridSpec::new(
        opts.grid
            .half_extent
            .unwrap_or_else(|| suggested_half_extent(radius, s_target)),
        opts.grid.grid_n.unwrap_or(DEFAULT_TOMOGRAPHY_GRID_N),
    )?;
    let mut cfg = ReconstructionConfig::new(s_target, grid);
    cfg.eta_max = opts.eta_max.unwrap_or(cfg.eta_max);
    cfg.n_eta = opts.n_eta.unwrap_or(cfg.n_eta);
    cfg.estimator = opts.estimator.map_or(cfg.estimator, Into::into);
    cfg.validate()?;
    check_ordering(s_target, s_natural)?;
    let rho = known.map(|(s, d)| build_state(s, d)).transpose()?;

    let dir = out.prepare()?;
    let data = match (loaded, &rho) {
        (Some(data), _) => data,
        (None, Some(rho)) => {
            let label = known.map(|(s, _)| s.label()).unwrap_or_default();
            run_protocol(rho, &probe, &angles, per_angle.unwrap_or(DEFAULT_PER_ANGLE), seed, &label)?
        }
        (None, None) => unreachable!("simulation requires a state"),
    };

    let run = TomographyRun {
        command: "tomography",
        state: known.map(|(s, _)| s),
        dim: known.map(|(_, d)| d),
        dataset_config_hash: dataset_hash.clone(),
        probe: data.probe,
        angles: data.angles.clone(),
        per_angle,
        seed: data.seed,
        reconstruction: cfg,
    };
    let prov = record(dir, &run, Some(data.seed))?;
    if dataset_hash.is_none() {
        write_dataset(&dir.join("dataset.csv"), &data, &prov.config_hash)?;
    }
    let rec = invert_marginals(&data, &cfg)?;
    if let Some(w) = &rec.low_pass_warning {
        eprintln!("warning: {w}");
    }
    let sidecar = write_grid_files(dir, "reconstruction", &rec.grid, &prov)?;
    let comparison = match &rho {
        Some(rho) => {
            let direct = quasiprob_grid(rho, s_target, grid)?;
            write_grid_files(dir, "direct", &direct, &prov)?;
            Some(compare_grids(&rec.grid, &direct)?)
        }
        None => None,
    };
    let linearisation = match (opts.probe.pulse()?, &rho) {
        (Some(pulse), Some(rho)) => {
            let x = crate::conditioning::quadrature_moments(rho);
            Some(linearisation_check(&pulse, &data.probe, x.cov[0][0]))
        }
        _ => None,
    };
    let summary = TomographyReport {
        config_hash: &prov.config_hash,
        seed: Some(data.seed),
        state_label: data.state_label.clone(),
        s_natural,
        s_target,
        total_samples: data.total_samples(),
        low_pass_warning: rec.low_pass_warning,
        linearisation,
        reconstruction: sidecar,
        comparison,
    };
    report(dir, "report.json", &summary)
}

#[derive(Serialize)]
struct CoolRun {
    command: &'static str,
    nbar: f64,
    chi: Vec<f64>,
    sigma_p: Vec<f64>,
    sigma_x: Vec<f64>,
    omega: f64,
    bath: Option<BathParams>,
    outcomes: [f64; 2],
}

#[derive(Serialize)]
struct CoolHeader<'a> {
    config_hash: &'a str,
    seed: Option<u64>,
    steps: [&'static str; 4],
}

#[derive(Serialize)]
struct CoolRow {
    chi: f64,
    sigma_p: f64,
    sigma_x: f64,
    n_eff: f64,
    n_eff_closed_form: f64,
    relative_error: f64,
    state: GaussianState,
    compensated_mean: [f64; 2],
}

#[derive(Serialize)]
struct CoolReport<'a> {
    config_hash: &'a str,
    seed: Option<u64>,
    rows: Vec<CoolRow>,
}

const COOL_STEPS: [&str; 4] = ["thermal prior", "first pulse", "quarter-period evolution", "second pulse"];

pub fn cool(opts: CoolCmd, out: &OutputTarget) -> Result<(), CliError> {
    let nbar = opts.nbar.ok_or_else(|| CliError::Usage("missing --nbar".into()))?;
    let chis = opts.chi.ok_or_else(|| CliError::Usage("missing --chi".into()))?;
    let sigma_ps = opts.sigma_p.unwrap_or_else(|| vec![0.0]);
    let sigma_xs = opts.sigma_x.unwrap_or_else(|| vec![0.0]);
    if chis.is_empty() || sigma_ps.is_empty() || sigma_xs.is_empty() {
        return Err(CliError::Usage("sweep lists must not be empty".into()));
    }
    let outcomes = match opts.outcomes.as_deref() {
        None => [0.0, 0.0],
        Some(&[a, b]) => [a, b],
        Some(other) => {
            return Err(CliError::Usage(format!("--outcomes needs two values, got {}", other.len())));
        }
    };
    let bath = opts
        .quality
        .map(|q| BathParams::new(opts.bath_nbar.unwrap_or(nbar), q))
        .transpose()?;
    let omega = opts.omega.unwrap_or(0.0);
    let dir = out.prepare()?;
    let run = CoolRun {
        command: "cool",
        nbar,
        chi: chis.clone(),
        sigma_p: sigma_ps.clone(),
        sigma_x: sigma_xs.clone(),
        omega,
        bath,
        outcomes,
    };
    let prov = record(dir, &run, None)?;

    let bath = bath.unwrap_or_else(BathParams::off);
    let mut rows = Vec::new();
    let mut steps = Vec::new();
    for &chi in &chis {
        for &sigma_p in &sigma_ps {
            for &sigma_x in &sigma_xs {
                let probe = ProbeParams::new(chi, omega, sigma_x, sigma_p, 0.0)?;
                let r = cool_by_measurement(nbar, &probe, &bath, outcomes[0], outcomes[1])?;
                for (k, step) in r.steps.iter().enumerate() {
                    let g = &step.state;
                    steps.push(format!(
                        "{},{k},{},{},{},{},{},{}",
                        rows.len(),
                        num(g.mean[0]),
                        num(g.mean[1]),
                        num(g.cov[0][0]),
                        num(g.cov[0][1]),
                        num(g.cov[1][1]),
                        num(g.effective_occupation())
                    ));
                }
                rows.push(CoolRow {
                    chi,
                    sigma_p,
                    sigma_x,
                    n_eff: r.n_eff,
                    n_eff_closed_form: r.n_eff_closed_form,
                    relative_error: r.relative_error,
                    state: r.state,
                    compensated_mean: r.compensated_mean,
                });
            }
        }
    }
    let header = CoolHeader {
        config_hash: &prov.config_hash,
        seed: None,
        steps: COOL_STEPS,
    };
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                num(r.chi),
                num(r.sigma_p),
                num(r.sigma_x),
                num(r.n_eff),
                num(r.n_eff_closed_form),
                num(r.relative_error)
            )
        })
        .collect();
    write_table(
        &dir.join("cool.csv"),
        "cool",
        &header,
        &["chi", "sigma_p", "sigma_x", "n_eff", "n_eff_closed_form", "relative_error"],
        &lines,
    )?;
    write_table(
        &dir.join("steps.csv"),
        "cool-steps",
        &header,
        &["run", "step", "mean_x", "mean_p", "cov_xx", "cov_xp", "cov_pp", "n_eff"],
        &steps,
    )?;
    report(
        dir,
        "report.json",
        &CoolReport {
            config_hash: &prov.config_hash,
            seed: None,
            rows,
        },
    )
}

#[derive(Serialize)]
struct CompareRun {
    command: &'static str,
    a_sha256: String,
    b_sha256: String,
}

#[derive(Serialize)]
struct CompareReport<'a> {
    config_hash: &'a str,
    seed: Option<u64>,
    s_a: f64,
    s_b: f64,
    comparison: GridComparison,
}

pub fn compare(opts: CompareCmd, out: &OutputTarget) -> Result<(), CliError> {
    let a = opts.a.ok_or_else(|| CliError::Usage("missing --a".into()))?;
    let b = opts.b.ok_or_else(|| CliError::Usage("missing --b".into()))?;
    let (ga, _) = read_grid_csv(&a)?;
    let (gb, _) = read_grid_csv(&b)?;
    let comparison = compare_grids(&ga, &gb)?;
    let dir = out.prepare()?;
    let run = CompareRun {
        command: "compare",
        a_sha256: file_hash(&a)?,
        b_sha256: file_hash(&b)?,
    };
    let prov = record(dir, &run, None)?;
    report(
        dir,
        "report.json",
        &CompareReport {
            config_hash: &prov.config_hash,
            seed: None,
            s_a: ga.s,
            s_b: gb.s,
            comparison,
        },
    )
}
