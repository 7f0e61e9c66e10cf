//! Command-line options. Each option record doubles as the schema of the
//! JSON config file: a flag given on the command line replaces the config
//! value, and anything left unset falls back to the documented default.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::hilbert::StateKind;
use crate::probe::{derive_probe_params, PulseConfig, ProbeParams};
use crate::tomography::Estimator;

/// Parses `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("'{text}' is not a complex number (expected e.g. 0.5, 1.7i or 0+1.7i)");
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let split = body
        .char_indices()
        .rev()
        .find(|&(k, c)| k > 0 && (c == '+' || c == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k);
    let imag = |s: &str| match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => s.parse::<f64>().map_err(|_| bad()),
    };
    match split {
        Some(k) => Ok(Complex64::new(body[..k].parse().map_err(|_| bad())?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

/// Options shared by every subcommand. Not part of the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration; command-line flags override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory [default: <output-root>/<command>].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Fock,
    Coherent,
    Cat,
    Thermal,
    SqueezedVacuum,
}

/// Test state and Fock cutoff. Config key: `state`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateOpts {
    /// State family.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Fock number (fock).
    #[arg(long)]
    pub n: Option<usize>,
    /// Coherent amplitude, e.g. 0.8 or 1+0.5i (coherent).
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub alpha: Option<Complex64>,
    /// Cat amplitude, e.g. 0+1.7i (cat).
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub beta: Option<Complex64>,
    /// Mean occupation (thermal).
    #[arg(long)]
    pub nbar: Option<f64>,
    /// Squeezing parameter (squeezed-vacuum).
    #[arg(long)]
    pub r: Option<f64>,
    /// Fock-space cutoff; required.
    #[arg(long)]
    pub dim: Option<usize>,
}

impl StateOpts {
    pub fn merged(self, file: Self) -> Self {
        Self {
            kind: self.kind.or(file.kind),
            n: self.n.or(file.n),
            alpha: self.alpha.or(file.alpha),
            beta: self.beta.or(file.beta),
            nbar: self.nbar.or(file.nbar),
            r: self.r.or(file.r),
            dim: self.dim.or(file.dim),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.kind.is_none() && self.dim.is_none()
    }

    pub fn resolve(&self) -> Result<(StateKind, usize), CliError> {
        let need = |name: &str| CliError::Usage(format!("missing --{name} for the chosen --kind"));
        let kind = self.kind.ok_or_else(|| CliError::Usage("missing --kind".into()))?;
        let state = match kind {
            KindArg::Fock => StateKind::Fock {
                n: self.n.ok_or_else(|| need("n"))?,
            },
            KindArg::Coherent => StateKind::Coherent {
                alpha: self.alpha.ok_or_else(|| need("alpha"))?,
            },
            KindArg::Cat => StateKind::Cat {
                beta: self.beta.ok_or_else(|| need("beta"))?,
            },
            KindArg::Thermal => StateKind::Thermal {
                nbar: self.nbar.ok_or_else(|| need("nbar"))?,
            },
            KindArg::SqueezedVacuum => StateKind::SqueezedVacuum {
                r: self.r.ok_or_else(|| need("r"))?,
            },
        };
        let dim = self.dim.ok_or_else(|| CliError::Usage("missing --dim".into()))?;
        Ok((state, dim))
    }
}

/// Probe description, either directly by χ or through the pulse parameters
/// N and g₀/κ. Config key: `probe`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeOpts {
    /// Measurement strength χ.
    #[arg(long)]
    pub chi: Option<f64>,
    /// Momentum kick Ω [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Amplitude-noise width σ_X [default: 0].
    #[arg(long)]
    pub sigma_x: Option<f64>,
    /// Phase-noise width σ_P [default: 0].
    #[arg(long)]
    pub sigma_p: Option<f64>,
    /// Mean probe amplitude X̄_L [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub xbar_l: Option<f64>,
    /// Photons per pulse N; derives χ and Ω instead of --chi/--omega.
    #[arg(long)]
    pub photon_number: Option<f64>,
    /// Coupling ratio g₀/κ (with --photon-number).
    #[arg(long)]
    pub g0_over_kappa: Option<f64>,
    /// Pulse coupling λ (with --photon-number) [default: 0].
    #[arg(long)]
    pub lambda: Option<f64>,
}

impl ProbeOpts {
    pub fn merged(self, file: Self) -> Self {
        Self {
            chi: self.chi.or(file.chi),
            omega: self.omega.or(file.omega),
            sigma_x: self.sigma_x.or(file.sigma_x),
            sigma_p: self.sigma_p.or(file.sigma_p),
            xbar_l: self.xbar_l.or(file.xbar_l),
            photon_number: self.photon_number.or(file.photon_number),
            g0_over_kappa: self.g0_over_kappa.or(file.g0_over_kappa),
            lambda: self.lambda.or(file.lambda),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_none() && self.photon_number.is_none()
    }

    pub fn pulse(&self) -> Result<Option<PulseConfig>, CliError> {
        match (self.photon_number, self.g0_over_kappa) {
            (None, None) => Ok(None),
            (Some(photon_number), Some(g0_over_kappa)) => Ok(Some(PulseConfig {
                photon_number,
                g0_over_kappa,
                lambda: self.lambda.unwrap_or(0.0),
            })),
            _ => Err(CliError::Usage(
                "--photon-number and --g0-over-kappa must be given together".into(),
            )),
        }
    }

    pub fn resolve(&self) -> Result<ProbeParams, CliError> {
        let sigma_x = self.sigma_x.unwrap_or(0.0);
        let sigma_p = self.sigma_p.unwrap_or(0.0);
        let xbar_l = self.xbar_l.unwrap_or(0.0);
        match (self.pulse()?, self.chi) {
            (Some(_), Some(_)) => Err(CliError::Usage(
                "give either --chi or the pulse parameters, not both".into(),
            )),
            (Some(pulse), None) => {
                if self.omega.is_some() {
                    return Err(CliError::Usage("--omega is derived from the pulse parameters".into()));
                }
                Ok(derive_probe_params(&pulse, sigma_x, sigma_p, xbar_l)?)
            }
            (None, Some(chi)) => Ok(ProbeParams::new(
                chi,
                self.omega.unwrap_or(0.0),
                sigma_x,
                sigma_p,
                xbar_l,
            )?),
            (None, None) => Err(CliError::Usage("missing --chi (or --photon-number and --g0-over-kappa)".into())),
        }
    }
}

/// Grid geometry. Config key: `grid`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridOpts {
    /// Grid half-width in α [default: max(4, r + 4√(1 − s)) for state radius r].
    #[arg(long)]
    pub half_extent: Option<f64>,
    /// Points per axis, a power of two.
    #[arg(long = "grid-n")]
    #[serde(rename = "n")]
    pub grid_n: Option<usize>,
}

impl GridOpts {
    pub fn merged(self, file: Self) -> Self {
        Self {
            half_extent: self.half_extent.or(file.half_extent),
            grid_n: self.grid_n.or(file.grid_n),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateCmd {
    #[command(flatten)]
    pub state: StateOpts,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasiprobCmd {
    #[command(flatten)]
    pub state: StateOpts,
    /// Ordering parameter s (1: P, 0: Wigner, −1: Q) [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    #[command(flatten)]
    pub grid: GridOpts,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarginalCmd {
    #[command(flatten)]
    pub state: StateOpts,
    /// Quadrature angle θ in [0, π) [default: 0].
    #[arg(long)]
    pub theta: Option<f64>,
    /// When given, also writes the scaled-outcome density P_L/χ.
    #[command(flatten)]
    pub probe: ProbeOpts,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyCmd {
    /// Synthetic state; optional with --dataset, where it enables the
    /// comparison against the directly computed grid.
    #[command(flatten)]
    pub state: StateOpts,
    #[command(flatten)]
    pub probe: ProbeOpts,
    /// Reconstruct from an existing dataset file instead of simulating.
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,
    /// Number of uniformly spaced angles in [0, π) [default: 24].
    #[arg(long)]
    pub angles: Option<usize>,
    /// Pulses per angle [default: 100000].
    #[arg(long)]
    pub per_angle: Option<usize>,
    /// RNG seed; required when simulating.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Target ordering s [default: the natural s of the probe].
    #[arg(long, allow_hyphen_values = true)]
    pub s_target: Option<f64>,
    /// Radial frequency cutoff [default: 8].
    #[arg(long)]
    pub eta_max: Option<f64>,
    /// Radial quadrature nodes [default: 256].
    #[arg(long)]
    pub n_eta: Option<usize>,
    /// Marginal density estimator [default: histogram].
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    #[command(flatten)]
    pub grid: GridOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorArg {
    Histogram,
    Kde,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Histogram => Estimator::Histogram,
            EstimatorArg::Kde => Estimator::Kde,
        }
    }
}

/// Two-pulse cooling. List-valued fields span a sweep over every
/// combination.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoolCmd {
    /// Initial thermal occupation n̄; required.
    #[arg(long)]
    pub nbar: Option<f64>,
    /// Measurement strengths χ, comma separated; required.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub chi: Option<Vec<f64>>,
    /// Phase-noise widths σ_P [default: 0].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub sigma_p: Option<Vec<f64>>,
    /// Amplitude-noise widths σ_X [default: 0].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub sigma_x: Option<Vec<f64>>,
    /// Momentum kick Ω [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Mechanical quality factor; omit to switch the bath off.
    #[arg(long)]
    pub quality: Option<f64>,
    /// Bath occupation [default: --nbar].
    #[arg(long)]
    pub bath_nbar: Option<f64>,
    /// Outcomes of the two pulses, comma separated [default: 0,0].
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub outcomes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareCmd {
    /// First grid CSV.
    #[arg(long, value_name = "FILE")]
    pub a: Option<PathBuf>,
    /// Second grid CSV.
    #[arg(long, value_name = "FILE")]
    pub b: Option<PathBuf>,
}

/// Flag values win over config-file values, field by field.
pub trait Merge: Sized {
    fn merge(self, file: Self) -> Self;
}

impl Merge for StateCmd {
    fn merge(self, file: Self) -> Self {
        Self {
            state: self.state.merged(file.state),
        }
    }
}

impl Merge for QuasiprobCmd {
    fn merge(self, file: Self) -> Self {
        Self {
            state: self.state.merged(file.state),
            s: self.s.or(file.s),
            grid: self.grid.merged(file.grid),
        }
    }
}

impl Merge for MarginalCmd {
    fn merge(self, file: Self) -> Self {
        Self {
            state: self.state.merged(file.state),
            theta: self.theta.or(file.theta),
            probe: self.probe.merged(file.probe),
        }
    }
}

impl Merge for TomographyCmd {
    fn merge(self, file: Self) -> Self {
        Self {
            state: self.state.merged(file.state),
            probe: self.probe.merged(file.probe),
            dataset: self.dataset.or(file.dataset),
            angles: self.angles.or(file.angles),
            per_angle: self.per_angle.or(file.per_angle),
            seed: self.seed.or(file.seed),
            s_target: self.s_target.or(file.s_target),
            eta_max: self.eta_max.or(file.eta_max),
            n_eta: self.n_eta.or(file.n_eta),
            estimator: self.estimator.or(file.estimator),
            grid: self.grid.merged(file.grid),
        }
    }
}

impl Merge for CoolCmd {
    fn merge(self, file: Self) -> Self {
        Self {
            nbar: self.nbar.or(file.nbar),
            chi: self.chi.or(file.chi),
            sigma_p: self.sigma_p.or(file.sigma_p),
            sigma_x: self.sigma_x.or(file.sigma_x),
            omega: self.omega.or(file.omega),
            quality: self.quality.or(file.quality),
            bath_nbar: self.bath_nbar.or(file.bath_nbar),
            outcomes: self.outcomes.or(file.outcomes),
        }
    }
}

impl Merge for CompareCmd {
    fn merge(self, file: Self) -> Self {
        Self {
            a: self.a.or(file.a),
            b: self.b.or(file.b),
        }
    }
}
