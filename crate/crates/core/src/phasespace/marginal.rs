use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QsrError, Result};
use crate::hilbert::{ordered_moment, DensityMatrix, Ordering};
use crate::special::{hermite_functions_into, linspace, trapezoid};

const NORM_TOL: f64 = 1e-3;

/// Tabulated quadrature distribution M(x, θ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub theta: f64,
    pub xs: Vec<f64>,
    pub density: Vec<f64>,
}

impl Marginal {
    /// Validates sorting, non-negativity and normalization.
    pub fn new(theta: f64, xs: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if !(0.0..std::f64::consts::PI).contains(&theta) {
            return Err(QsrError::arg(format!("marginal angle {theta} outside [0, π)")));
        }
        if xs.len() < 2 || xs.len() != density.len() {
            return Err(QsrError::arg("marginal needs matching xs/density of length >= 2"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(QsrError::arg("marginal abscissae must be strictly increasing"));
        }
        if density.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(QsrError::arg("marginal density must be finite and non-negative"));
        }
        let m = Self { theta, xs, density };
        let integral = m.integral();
        if (integral - 1.0).abs() > NORM_TOL {
            return Err(QsrError::Normalization {
                integral,
                context: format!("marginal at theta={theta}"),
            });
        }
        Ok(m)
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.xs, &self.density)
    }

    pub fn mean(&self) -> f64 {
        let ys: Vec<f64> = self.xs.iter().zip(&self.density).map(|(x, d)| x * d).collect();
        trapezoid(&self.xs, &ys) / self.integral()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let ys: Vec<f64> = self
            .xs
            .iter()
            .zip(&self.density)
            .map(|(x, d)| (x - mu).powi(2) * d)
            .collect();
        trapezoid(&self.xs, &ys) / self.integral()
    }

    /// ∫ M(x) e^{iηx} dx by the trapezoid rule.
    pub fn char_at(&self, eta: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.xs.len() - 1 {
            let h = 0.5 * (self.xs[i + 1] - self.xs[i]);
            acc += Complex64::from_polar(h * self.density[i], eta * self.xs[i]);
            acc += Complex64::from_polar(h * self.density[i + 1], eta * self.xs[i + 1]);
        }
        acc
    }

    /// ∫ M(x) e^{iηx} dx at η = 0, Δη, …, (count − 1)Δη by the trapezoid rule,
    /// stepping the phase e^{iΔη x} by multiplication.
    pub fn char_on_grid(&self, d_eta: f64, count: usize) -> Vec<Complex64> {
        let n = self.xs.len();
        let mut out = vec![Complex64::new(0.0, 0.0); count];
        for i in 0..n {
            let left = if i > 0 { self.xs[i] - self.xs[i - 1] } else { 0.0 };
            let right = if i + 1 < n { self.xs[i + 1] - self.xs[i] } else { 0.0 };
            let weight = 0.5 * (left + right) * self.density[i];
            if weight == 0.0 {
                continue;
            }
            let step = Complex64::from_polar(1.0, d_eta * self.xs[i]);
            let mut phase = Complex64::new(weight, 0.0);
            for slot in out.iter_mut() {
                *slot += phase;
                phase *= step;
            }
        }
        out
    }

    /// Linear interpolation, zero outside the tabulated range.
    pub fn density_at(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return 0.0;
        }
        let k = self.xs.partition_point(|&v| v <= x).clamp(1, n - 1);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let t = (x - x0) / (x1 - x0);
        self.density[k - 1] * (1.0 - t) + self.density[k] * t
    }

    /// Largest absolute density difference on the union of both abscissae.
    pub fn max_abs_difference(&self, other: &Marginal) -> f64 {
        self.xs
            .iter()
            .chain(&other.xs)
            .map(|&x| (self.density_at(x) - other.density_at(x)).abs())
            .fold(0.0, f64::max)
    }

    /// ∫ |M − M'| dx on a fine common grid.
    pub fn l1_distance(&self, other: &Marginal) -> f64 {
        let lo = self.xs[0].min(other.xs[0]);
        let hi = self.xs[self.xs.len() - 1].max(other.xs[other.xs.len() - 1]);
        let count = 4 * (self.xs.len() + other.xs.len());
        let xs = linspace(lo, hi, count);
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| (self.density_at(x) - other.density_at(x)).abs())
            .collect();
        trapezoid(&xs, &ys)
    }
}

/// 1001 points over ±6 standard deviations of the widest quadrature.
pub fn default_quadrature_grid(rho: &DensityMatrix) -> Vec<f64> {
    // max_θ ⟨X_θ²⟩ = ⟨n⟩ + 1/2 + |⟨a²⟩|, plus the squared mean amplitude
    let n = rho.mean_occupation();
    let a2 = if rho.dim() >= 8 {
        ordered_moment(rho, 2, 0, Ordering::Normal)
            .map(|z| z.norm())
            .unwrap_or(n)
    } else {
        n
    };
    let second = n + 0.5 + a2;
    let sigma = second.max(0.5).sqrt();
    let half = 6.0 * sigma;
    linspace(-half, half, 1001)
}

/// M(x, θ) = ⟨x|U ρ U†|x⟩ with U = e^{−iθn̂}, from Hermite-function overlaps.
pub fn marginal(rho: &DensityMatrix, theta: f64, xs: &[f64]) -> Result<Marginal> {
    let rotated = rho.rotated(theta);
    let dim = rho.dim();
    let mut psi = Vec::with_capacity(dim);
    let mut density = Vec::with_capacity(xs.len());
    for &x in xs {
        hermite_functions_into(x, &mut psi, dim);
        let mut value = 0.0;
        for m in 0..dim {
            let mut row = Complex64::new(0.0, 0.0);
            for n in 0..dim {
                row += rotated[(m, n)] * psi[n];
            }
            value += (row * psi[m]).re;
        }
        if value < -1e-12 {
            return Err(QsrError::Accuracy(format!("negative marginal density {value:.3e} at x={x}")));
        }
        density.push(value.max(0.0));
    }
    Marginal::new(theta, xs.to_vec(), density)
}
