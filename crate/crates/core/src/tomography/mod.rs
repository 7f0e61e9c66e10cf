//! Synthetic pulsed tomography and s-parameterized reconstruction.
//!
//! Each angle θ is measured on a freshly prepared state rotated by e^{−iθn̂}.
//! The scaled outcomes P_L/χ sample the quadrature marginal smeared by the
//! readout noise, so their characteristic function is C_m(η, θ)e^{s₀η²/4}
//! with s₀ = −(1 + 2σ_P²)/χ². Inverting with the extra damping
//! e^{(s − s₀)η²/4} yields 𝒫(s, α) for any s ≤ s₀:
//!
//! 𝒫(s, α) = π⁻² ∫₀^π dθ ∫₀^∞ η dη Re[C̃(η, θ) e^{−iηu}],
//! u = √2(α_r cosθ + α_i sinθ).

mod estimate;

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QsrError, Result};
use crate::hilbert::DensityMatrix;
use crate::phasespace::{default_quadrature_grid, marginal, GridKind, GridSpec, Marginal, QuasiProbGrid};
use crate::probe::{s_parameter, sample_homodyne_with, scaled_noise_width, scaled_outcome_pdf, ProbeParams};
use crate::special::linspace;

pub use estimate::{estimate_scaled_marginal, Estimator, MIN_SAMPLES};

/// Spectral level regarded as negligible by the low-pass check.
pub const LOW_PASS_LEVEL: f64 = 1e-3;
/// Slack allowed when comparing s_target with the natural s.
pub const ORDERING_SLACK: f64 = 1e-12;

/// Homodyne record of a synthetic tomography run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomogramDataset {
    pub probe: ProbeParams,
    pub angles: Vec<f64>,
    /// Outcomes P_L, one list per angle.
    pub samples: Vec<Vec<f64>>,
    pub seed: u64,
    pub state_label: String,
}

impl TomogramDataset {
    pub fn validate(&self) -> Result<()> {
        self.probe.validate()?;
        validate_angles(&self.angles)?;
        if self.samples.len() != self.angles.len() {
            return Err(QsrError::arg(format!(
                "{} angles but {} sample blocks",
                self.angles.len(),
                self.samples.len()
            )));
        }
        if let Some(k) = self.samples.iter().position(|s| s.is_empty()) {
            return Err(QsrError::arg(format!("angle index {k} has no samples")));
        }
        Ok(())
    }

    pub fn total_samples(&self) -> usize {
        self.samples.iter().map(Vec::len).sum()
    }
}

fn validate_angles(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return Err(QsrError::arg("at least one angle is required"));
    }
    if angles.iter().any(|a| !(0.0..PI).contains(a)) {
        return Err(QsrError::arg("angles must lie in [0, π)"));
    }
    if angles.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(QsrError::arg("angles must be strictly increasing"));
    }
    Ok(())
}

/// `count` angles kπ/count.
pub fn uniform_angles(count: usize) -> Vec<f64> {
    (0..count).map(|k| k as f64 * PI / count as f64).collect()
}

/// Prepares, rotates and measures the state `per_angle` times at each angle.
/// Angle k draws from ChaCha8 stream k of `seed`.
pub fn run_protocol(
    rho: &DensityMatrix,
    probe: &ProbeParams,
    angles: &[f64],
    per_angle: usize,
    seed: u64,
    state_label: &str,
) -> Result<TomogramDataset> {
    if per_angle < MIN_SAMPLES {
        return Err(QsrError::arg(format!(
            "per_angle must be at least {MIN_SAMPLES}, got {per_angle}"
        )));
    }
    probe.validate()?;
    validate_angles(angles)?;
    let xs = default_quadrature_grid(rho);
    let samples = angles
        .par_iter()
        .enumerate()
        .map(|(k, &theta)| {
            let m = marginal(rho, theta, &xs)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            sample_homodyne_with(&m, probe, per_angle, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TomogramDataset {
        probe: *probe,
        angles: angles.to_vec(),
        samples,
        seed,
        state_label: state_label.to_string(),
    })
}

/// Noise-free scaled-outcome densities: the exact marginal of ρ at each
/// angle convolved with the readout Gaussian.
pub fn analytic_scaled_marginals(rho: &DensityMatrix, probe: &ProbeParams, angles: &[f64]) -> Result<Vec<Marginal>> {
    validate_angles(angles)?;
    let xs = default_quadrature_grid(rho);
    let half = xs[xs.len() - 1] + 10.0 * scaled_noise_width(probe);
    let ys = linspace(-half, half, 4001);
    angles
        .par_iter()
        .map(|&theta| {
            let m = marginal(rho, theta, &xs)?;
            scaled_outcome_pdf(&m, probe, &ys)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    pub s_target: f64,
    /// Radial frequency cutoff η_max.
    pub eta_max: f64,
    pub n_eta: usize,
    pub grid: GridSpec,
    pub estimator: Estimator,
}

impl ReconstructionConfig {
    /// η_max = 8 with 256 radial nodes.
    pub fn new(s_target: f64, grid: GridSpec) -> Self {
        Self {
            s_target,
            eta_max: 8.0,
            n_eta: 256,
            grid,
            estimator: Estimator::Histogram,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_max > 0.0) || !self.eta_max.is_finite() {
            return Err(QsrError::arg(format!("eta_max must be positive, got {}", self.eta_max)));
        }
        if self.n_eta < 2 {
            return Err(QsrError::arg("n_eta must be at least 2"));
        }
        if !self.s_target.is_finite() {
            return Err(QsrError::arg("s_target must be finite"));
        }
        GridSpec::new(self.grid.half_extent, self.grid.n)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub grid: QuasiProbGrid,
    pub s_natural: f64,
    /// Set when the damped spectrum is still significant at η_max.
    pub low_pass_warning: Option<String>,
}

/// Reconstructs 𝒫(s_target, α) from a homodyne dataset.
pub fn invert_marginals(dataset: &TomogramDataset, cfg: &ReconstructionConfig) -> Result<Reconstruction> {
    dataset.validate()?;
    let s_natural = s_parameter(&dataset.probe);
    check_ordering(cfg.s_target, s_natural)?;
    let marginals = dataset
        .angles
        .par_iter()
        .zip(&dataset.samples)
        .map(|(&theta, samples)| estimate_scaled_marginal(samples, theta, &dataset.probe, cfg.estimator))
        .collect::<Result<Vec<_>>>()?;
    reconstruct(&marginals, s_natural, cfg)
}

/// Reconstruction can only lower s: fails when `s_target` exceeds `s_natural`.
pub fn check_ordering(s_target: f64, s_natural: f64) -> Result<()> {
    if s_target > s_natural + ORDERING_SLACK {
        return Err(QsrError::Ordering(format!(
            "s_target = {s_target} exceeds the natural s = {s_natural}; raising s would need deconvolution"
        )));
    }
    Ok(())
}

/// Filtered back-projection of scaled-outcome densities measured at
/// ordering `s_natural`.
pub fn reconstruct(marginals: &[Marginal], s_natural: f64, cfg: &ReconstructionConfig) -> Result<Reconstruction> {
    cfg.validate()?;
    check_ordering(cfg.s_target, s_natural)?;
    let angles: Vec<f64> = marginals.iter().map(|m| m.theta).collect();
    validate_angles(&angles)?;

    let d_eta = cfg.eta_max / (cfg.n_eta - 1) as f64;
    let etas: Vec<f64> = (0..cfg.n_eta).map(|j| j as f64 * d_eta).collect();
    let damping: Vec<f64> = etas
        .iter()
        .map(|e| ((cfg.s_target - s_natural) * e * e / 4.0).exp())
        .collect();
    // η·F(η) times trapezoid weights
    let radial: Vec<f64> = etas
        .iter()
        .zip(&damping)
        .enumerate()
        .map(|(j, (e, f))| {
            let w = if j == 0 || j == cfg.n_eta - 1 { 0.5 * d_eta } else { d_eta };
            w * e * f
        })
        .collect();

    let u_max = 2.0 * cfg.grid.half_extent + 0.1;
    let du = (0.1 / cfg.eta_max).min(0.02);
    let n_u = (2.0 * u_max / du).ceil() as usize + 1;
    let du = 2.0 * u_max / (n_u - 1) as f64;

    let per_angle: Vec<(Vec<f64>, f64)> = marginals
        .par_iter()
        .map(|m| {
            let spectrum = m.char_on_grid(d_eta, cfg.n_eta);
            let filtered: Vec<_> = spectrum.iter().zip(&radial).map(|(c, r)| c * r).collect();
            // Euler–Maclaurin end correction at η = 0, where (η Re C)' = Re C(0)
            let offset = d_eta * d_eta / 12.0 * spectrum[0].re;
            let q: Vec<f64> = (0..n_u)
                .map(|i| {
                    let u = -u_max + i as f64 * du;
                    let step = Complex64::from_polar(1.0, -d_eta * u);
                    let mut phase = Complex64::new(1.0, 0.0);
                    let mut acc = offset;
                    for c in &filtered {
                        acc += (c * phase).re;
                        phase *= step;
                    }
                    acc
                })
                .collect();
            let tail = spectrum[cfg.n_eta - 1].norm() * damping[cfg.n_eta - 1];
            (q, tail)
        })
        .collect();

    let weights = angle_weights(&angles);
    let spec = cfg.grid;
    let n = spec.n;
    let coords = spec.coords();
    let trig: Vec<(f64, f64)> = angles.iter().map(|t| t.sin_cos()).collect();
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(row, out)| {
        let ai = coords[row];
        for (col, slot) in out.iter_mut().enumerate() {
            let ar = coords[col];
            let mut acc = 0.0;
            for (((q, _), &(s, c)), w) in per_angle.iter().zip(&trig).zip(&weights) {
                let u = SQRT_2 * (ar * c + ai * s);
                acc += w * catmull_rom(q, (u + u_max) / du);
            }
            *slot = acc / (PI * PI);
        }
    });

    let mut grid = QuasiProbGrid::new(cfg.s_target, spec, GridKind::Reconstructed, values)?;
    let total = grid.riemann_sum();
    if !(total > 0.0) {
        return Err(QsrError::Normalization {
            integral: total,
            context: "reconstructed grid".into(),
        });
    }
    grid.values.iter_mut().for_each(|v| *v /= total);

    let tail = per_angle.iter().map(|(_, t)| *t).fold(0.0, f64::max);
    let cutoff_damping = damping[cfg.n_eta - 1];
    let low_pass_warning = (cutoff_damping > LOW_PASS_LEVEL && tail > LOW_PASS_LEVEL).then(|| {
        format!(
            "spectrum not negligible at eta_max = {}: damped magnitude {tail:.3e}; increase eta_max",
            cfg.eta_max
        )
    });
    Ok(Reconstruction {
        grid,
        s_natural,
        low_pass_warning,
    })
}

/// Periodic trapezoid weights on [0, π).
fn angle_weights(angles: &[f64]) -> Vec<f64> {
    let k = angles.len();
    if k == 1 {
        return vec![PI];
    }
    (0..k)
        .map(|i| {
            let next = if i + 1 < k { angles[i + 1] } else { angles[0] + PI };
            let prev = if i > 0 { angles[i - 1] } else { angles[k - 1] - PI };
            0.5 * (next - prev)
        })
        .collect()
}

/// Cubic (Catmull–Rom) interpolation at fractional index `f`, zero outside.
fn catmull_rom(q: &[f64], f: f64) -> f64 {
    if f < 0.0 || f > (q.len() - 1) as f64 {
        return 0.0;
    }
    let i = (f.floor() as usize).min(q.len() - 2);
    let t = f - i as f64;
    let p1 = q[i];
    let p2 = q[i + 1];
    let p0 = if i > 0 { q[i - 1] } else { 2.0 * p1 - p2 };
    let p3 = if i + 2 < q.len() { q[i + 2] } else { 2.0 * p2 - p1 };
    0.5 * (2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t * t * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridComparison {
    /// Root-mean-square difference over grid points.
    pub l2: f64,
    pub max_abs: f64,
    pub min_a: f64,
    pub min_b: f64,
}

/// Pointwise comparison of two grids with the same geometry. The ordering
/// parameters may differ; comparing across s is how smoothing is measured.
pub fn compare_grids(a: &QuasiProbGrid, b: &QuasiProbGrid) -> Result<GridComparison> {
    if !a.spec.matches(&b.spec) {
        return Err(QsrError::GridMismatch(format!(
            "grids differ: (h={}, n={}) vs (h={}, n={})",
            a.spec.half_extent, a.spec.n, b.spec.half_extent, b.spec.n
        )));
    }
    let mut sum = 0.0;
    let mut max_abs: f64 = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        let d = x - y;
        sum += d * d;
        max_abs = max_abs.max(d.abs());
    }
    Ok(GridComparison {
        l2: (sum / a.values.len() as f64).sqrt(),
        max_abs,
        min_a: a.min(),
        min_b: b.min(),
    })
}
