use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::marginal::Marginal;
use crate::error::{QsrError, Result};
use crate::hilbert::{displacement_expectation, DensityMatrix};

/// Largest tolerated magnitude on the outermost grid ring before a grid is
/// considered aliased.
pub const ALIASING_THRESHOLD: f64 = 1e-4;

/// Square phase-space grid: α_r, α_i ∈ [−half_extent, half_extent) with
/// `n` points per axis and spacing 2·half_extent/n. The origin is a grid
/// point (index n/2 on both axes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_extent: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(half_extent: f64, n: usize) -> Result<Self> {
        if !(half_extent > 0.0) || !half_extent.is_finite() {
            return Err(QsrError::arg(format!("half_extent must be positive, got {half_extent}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(QsrError::arg(format!("grid size must be a power of two >= 4, got {n}")));
        }
        Ok(Self { half_extent, n })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_extent + self.spacing() * i as f64
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Spacing of the conjugate ξ grid: the phase e^{−2i(ξ_i α_r − ξ_r α_i)}
    /// becomes an n-point DFT kernel when 2 Δξ Δα = 2π/n.
    pub fn xi_spacing(&self) -> f64 {
        PI / (2.0 * self.half_extent)
    }

    /// Same size and extent.
    pub fn matches(&self, other: &GridSpec) -> bool {
        self.n == other.n && (self.half_extent - other.half_extent).abs() <= 1e-12 * self.half_extent
    }
}

/// max(4, r + 4√(1 − s)): four standard deviations of the s-smoothed vacuum
/// beyond the state's own radius `r`.
pub fn suggested_half_extent(radius: f64, s: f64) -> f64 {
    (radius + 4.0 * (1.0 - s.min(0.0)).sqrt()).max(4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Direct,
    Convolved,
    Reconstructed,
}

/// Quasi-probability distribution 𝒫(s, α) tabulated on a [`GridSpec`].
///
/// `values[row * n + col]` holds the value at α_r = coord(col), α_i = coord(row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiProbGrid {
    pub s: f64,
    pub spec: GridSpec,
    pub kind: GridKind,
    pub values: Vec<f64>,
}

impl QuasiProbGrid {
    pub fn new(s: f64, spec: GridSpec, kind: GridKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.n * spec.n {
            return Err(QsrError::arg(format!(
                "expected {} grid values, got {}",
                spec.n * spec.n,
                values.len()
            )));
        }
        Ok(Self { s, spec, kind, values })
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.spec.n + col]
    }

    /// Σ values · Δα_r Δα_i.
    pub fn riemann_sum(&self) -> f64 {
        let h = self.spec.spacing();
        self.values.iter().sum::<f64>() * h * h
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest magnitude on the outermost ring of grid points.
    pub fn boundary_magnitude(&self) -> f64 {
        let n = self.spec.n;
        (0..n)
            .flat_map(|i| [(0, i), (n - 1, i), (i, 0), (i, n - 1)])
            .map(|(r, c)| self.at(r, c).abs())
            .fold(0.0, f64::max)
    }

    /// Bilinear interpolation at (α_r, α_i); zero outside the grid.
    pub fn interpolate(&self, alpha_r: f64, alpha_i: f64) -> f64 {
        let h = self.spec.spacing();
        let n = self.spec.n;
        let fc = (alpha_r + self.spec.half_extent) / h;
        let fr = (alpha_i + self.spec.half_extent) / h;
        if fc < 0.0 || fr < 0.0 || fc > (n - 1) as f64 || fr > (n - 1) as f64 {
            return 0.0;
        }
        let c0 = (fc.floor() as usize).min(n - 2);
        let r0 = (fr.floor() as usize).min(n - 2);
        let tc = fc - c0 as f64;
        let tr = fr - r0 as f64;
        self.at(r0, c0) * (1.0 - tc) * (1.0 - tr)
            + self.at(r0, c0 + 1) * tc * (1.0 - tr)
            + self.at(r0 + 1, c0) * (1.0 - tc) * tr
            + self.at(r0 + 1, c0 + 1) * tc * tr
    }

    /// Values along the imaginary axis (α_r = 0), indexed by α_i.
    pub fn imaginary_axis(&self) -> Vec<f64> {
        let mid = self.spec.n / 2;
        (0..self.spec.n).map(|row| self.at(row, mid)).collect()
    }

    /// Values along the real axis (α_i = 0), indexed by α_r.
    pub fn real_axis(&self) -> Vec<f64> {
        let mid = self.spec.n / 2;
        (0..self.spec.n).map(|col| self.at(mid, col)).collect()
    }

    /// Azimuthally averaged profile about the origin in bins of one grid spacing,
    /// out to the inscribed circle.
    pub fn radial_profile(&self) -> Vec<f64> {
        let n = self.spec.n;
        let h = self.spec.spacing();
        let bins = n / 2;
        let mut sum = vec![0.0; bins];
        let mut count = vec![0usize; bins];
        for row in 0..n {
            for col in 0..n {
                let r = (self.spec.coord(row).powi(2) + self.spec.coord(col).powi(2)).sqrt();
                let b = (r / h + 0.5) as usize;
                if b < bins {
                    sum[b] += self.at(row, col);
                    count[b] += 1;
                }
            }
        }
        sum.iter().zip(&count).map(|(s, &c)| s / c.max(1) as f64).collect()
    }

    /// Whether the radial profile peaks at the origin and falls off
    /// monotonically (a single central blob rather than a ring).
    pub fn is_radially_unimodal(&self) -> bool {
        let profile = self.radial_profile();
        let scale = profile.iter().copied().fold(0.0, f64::max).max(1e-300);
        profile.windows(2).all(|w| w[1] <= w[0] + 1e-9 * scale)
    }

    /// α_i positions of the strict local maxima along the imaginary axis,
    /// ignoring values below 1e−6 of the axis maximum.
    pub fn imaginary_axis_maxima(&self) -> Vec<f64> {
        local_maxima(&self.imaginary_axis())
            .into_iter()
            .map(|i| self.spec.coord(i))
            .collect()
    }

    /// ∫ W dα_i mapped to a density in X = √2 α_r (θ = 0).
    pub fn project_onto_x(&self) -> Marginal {
        let n = self.spec.n;
        let h = self.spec.spacing();
        let xs: Vec<f64> = (0..n).map(|col| SQRT_2 * self.spec.coord(col)).collect();
        let density: Vec<f64> = (0..n)
            .map(|col| (0..n).map(|row| self.at(row, col)).sum::<f64>() * h / SQRT_2)
            .collect();
        Marginal {
            theta: 0.0,
            xs,
            density,
        }
    }

    /// ∫ 𝒫(s, α) α*^q α^p d²α by Riemann sum.
    pub fn moment(&self, p: usize, q: usize) -> Complex64 {
        let n = self.spec.n;
        let h = self.spec.spacing();
        let mut acc = Complex64::new(0.0, 0.0);
        for row in 0..n {
            for col in 0..n {
                let a = Complex64::new(self.spec.coord(col), self.spec.coord(row));
                acc += a.conj().powu(q as u32) * a.powu(p as u32) * self.at(row, col);
            }
        }
        acc * h * h
    }

    fn check_aliasing(&self, what: &str) -> Result<()> {
        let edge = self.boundary_magnitude();
        if edge > ALIASING_THRESHOLD {
            return Err(QsrError::Resolution(format!(
                "{what}: boundary magnitude {edge:.3e} exceeds {ALIASING_THRESHOLD:.0e}; \
                 increase half_extent (currently {})",
                self.spec.half_extent
            )));
        }
        Ok(())
    }
}

/// Indices i with v[i−1] < v[i] ≥ v[i+1], skipping values below 1e−6 of the
/// maximum so that round-off in the tails does not count.
pub fn local_maxima(v: &[f64]) -> Vec<usize> {
    let top = v.iter().copied().fold(0.0, f64::max);
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > 1e-6 * top && v[i] > v[i - 1] && v[i] >= v[i + 1])
        .collect()
}

/// 𝒫(s, α) = π⁻² ∫ d²ξ C(s, ξ) e^{αξ* − α*ξ} on `spec`, by sampling C on the
/// conjugate grid and applying a 2D DFT.
///
/// With α_r = (j − n/2)Δα, α_i = (q − n/2)Δα, ξ_r = (l − n/2)Δξ and
/// ξ_i = (m − n/2)Δξ, the kernel e^{−2iξ_iα_r} e^{2iξ_rα_i} factors into a
/// forward transform m → j and an inverse transform l → q, with the centring
/// shifts turning into (−1)^{j+q+l+m}.
pub fn quasiprob_grid(rho: &DensityMatrix, s: f64, spec: GridSpec) -> Result<QuasiProbGrid> {
    if s > 0.0 {
        return Err(QsrError::arg(format!(
            "s = {s} > 0: the distribution exists only as a generalized function"
        )));
    }
    let spec = GridSpec::new(spec.half_extent, spec.n)?;
    let n = spec.n;
    let dxi = spec.xi_spacing();
    let half = (n / 2) as f64;

    // rows indexed by m (ξ_i), columns by l (ξ_r)
    let mut samples: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n * n];
    samples.par_chunks_mut(n).enumerate().for_each(|(m, row)| {
        let xi_i = (m as f64 - half) * dxi;
        for (l, slot) in row.iter_mut().enumerate() {
            let xi_r = (l as f64 - half) * dxi;
            let xi = Complex64::new(xi_r, xi_i);
            let sign = if (l + m) % 2 == 0 { 1.0 } else { -1.0 };
            let damping = (0.5 * s * xi.norm_sqr()).exp();
            *slot = if damping == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                displacement_expectation(rho, xi) * damping * sign
            };
        }
    });

    let mut planner = FftPlanner::<f64>::new();
    let inverse = planner.plan_fft_inverse(n);
    let forward = planner.plan_fft_forward(n);
    transform_rows(&mut samples, n, inverse.as_ref());
    let mut transposed = transpose(&samples, n);
    transform_rows(&mut transposed, n, forward.as_ref());

    // transposed[q][j]: row q ↔ α_i, column j ↔ α_r
    let scale = dxi * dxi / (PI * PI);
    let values: Vec<f64> = transposed
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            let (q, j) = (idx / n, idx % n);
            let sign = if (q + j) % 2 == 0 { 1.0 } else { -1.0 };
            z.re * sign * scale
        })
        .collect();
    let grid = QuasiProbGrid::new(s, spec, GridKind::Direct, values)?;
    grid.check_aliasing("quasi-probability grid")?;
    Ok(grid)
}

/// Lowers the ordering parameter by Gaussian convolution,
/// 𝒫(s', α) = 2/(π(s − s')) ∫ d²β 𝒫(s, β) e^{−2|α−β|²/(s−s')}.
///
/// Applied in the Fourier domain, where the kernel is e^{−(s−s')|ξ|²/2}.
pub fn convolve_to_s(grid: &QuasiProbGrid, s_target: f64) -> Result<QuasiProbGrid> {
    if !(s_target < grid.s) {
        return Err(QsrError::Ordering(format!(
            "convolution can only lower s (grid s = {}, requested {s_target})",
            grid.s
        )));
    }
    let ds = grid.s - s_target;
    let spec = grid.spec;
    let kernel_sigma = (ds / 4.0).sqrt();
    if 4.0 * kernel_sigma > spec.half_extent {
        return Err(QsrError::Resolution(format!(
            "convolution kernel (σ = {kernel_sigma:.3}) wider than grid half extent {}",
            spec.half_extent
        )));
    }
    let n = spec.n;
    let dxi = spec.xi_spacing();
    let mut data: Vec<Complex64> = grid.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    fft2(&mut data, n, forward.as_ref());
    let wrapped = |k: usize| -> f64 {
        if k < n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        }
    };
    data.par_chunks_mut(n).enumerate().for_each(|(r, row)| {
        let kr = wrapped(r) * dxi;
        for (c, z) in row.iter_mut().enumerate() {
            let kc = wrapped(c) * dxi;
            *z *= (-0.5 * ds * (kr * kr + kc * kc)).exp();
        }
    });
    fft2(&mut data, n, inverse.as_ref());
    let norm = (n * n) as f64;
    let values: Vec<f64> = data.iter().map(|z| z.re / norm).collect();
    let mut out = QuasiProbGrid::new(s_target, spec, GridKind::Convolved, values)?;
    let total = out.riemann_sum();
    out.values.iter_mut().for_each(|v| *v /= total);
    out.check_aliasing("convolved grid")?;
    Ok(out)
}

fn transform_rows(data: &mut [Complex64], n: usize, fft: &dyn Fft<f64>) {
    data.par_chunks_mut(n).for_each(|row| fft.process(row));
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for r in 0..n {
        for c in 0..n {
            out[c * n + r] = data[r * n + c];
        }
    }
    out
}

fn fft2(data: &mut Vec<Complex64>, n: usize, fft: &dyn Fft<f64>) {
    transform_rows(data, n, fft);
    let mut t = transpose(data, n);
    transform_rows(&mut t, n, fft);
    *data = transpose(&t, n);
}
