//! Pulsed back-action-evading optical probe with classical amplitude and
//! phase noise.
//!
//! A probe pulse reads out the mechanical position in its phase quadrature:
//! P_L = χ X_M + g, g ~ N(0, (1 + 2σ_P²)/2). The amplitude noise σ_X and the
//! deterministic kick Ω act only on mechanical momentum and therefore do not
//! enter the outcome statistics; they are consumed by [`crate::conditioning`].

mod sampling;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{QsrError, Result};
use crate::phasespace::Marginal;
use crate::special::linspace;

pub use sampling::{sample_homodyne, sample_homodyne_with, InverseCdf};

/// Ratio treated as "≪ 1" by [`linearisation_check`].
pub const LINEARISATION_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    /// Measurement strength χ.
    pub chi: f64,
    /// Deterministic momentum kick Ω.
    pub omega: f64,
    /// Classical amplitude-noise width σ_X.
    pub sigma_x: f64,
    /// Classical phase-noise width σ_P.
    pub sigma_p: f64,
    /// Mean probe amplitude X̄_L.
    pub xbar_l: f64,
}

impl ProbeParams {
    pub fn new(chi: f64, omega: f64, sigma_x: f64, sigma_p: f64, xbar_l: f64) -> Result<Self> {
        let p = Self {
            chi,
            omega,
            sigma_x,
            sigma_p,
            xbar_l,
        };
        p.validate()?;
        Ok(p)
    }

    /// Noiseless probe of strength χ with no kick.
    pub fn ideal(chi: f64) -> Result<Self> {
        Self::new(chi, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi > 0.0) || !self.chi.is_finite() {
            return Err(QsrError::arg(format!("chi must be positive, got {}", self.chi)));
        }
        if !(self.sigma_x >= 0.0) || !(self.sigma_p >= 0.0) {
            return Err(QsrError::arg("noise widths must be non-negative"));
        }
        if !self.omega.is_finite() || !self.xbar_l.is_finite() {
            return Err(QsrError::arg("omega and xbar_L must be finite"));
        }
        Ok(())
    }

    /// Variance of the phase-quadrature readout noise, (1 + 2σ_P²)/2.
    pub fn readout_variance(&self) -> f64 {
        0.5 + self.sigma_p * self.sigma_p
    }

    /// Momentum variance added per pulse, χ²(1 + 2σ_X²)/2.
    pub fn back_action_variance(&self) -> f64 {
        self.chi * self.chi * (0.5 + self.sigma_x * self.sigma_x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    /// Mean photon number per pulse N.
    pub photon_number: f64,
    /// Single-photon coupling over cavity decay rate, g₀/κ.
    pub g0_over_kappa: f64,
    /// Raw pulse coupling λ of e^{iλ a†a X_M}.
    pub lambda: f64,
}

/// χ = √(20N)·g₀/κ and Ω = (3/√2)(g₀/κ)N.
pub fn derive_probe_params(cfg: &PulseConfig, sigma_x: f64, sigma_p: f64, xbar_l: f64) -> Result<ProbeParams> {
    if !(cfg.photon_number > 0.0) || !(cfg.g0_over_kappa > 0.0) {
        return Err(QsrError::arg("photon number and g0/kappa must be positive"));
    }
    if !(cfg.lambda >= 0.0) {
        return Err(QsrError::arg("lambda must be non-negative"));
    }
    let chi = (20.0 * cfg.photon_number).sqrt() * cfg.g0_over_kappa;
    let omega = 3.0 / std::f64::consts::SQRT_2 * cfg.g0_over_kappa * cfg.photon_number;
    ProbeParams::new(chi, omega, sigma_x, sigma_p, xbar_l)
}

/// s = −(1 + 2σ_P²)/χ².
pub fn s_parameter(p: &ProbeParams) -> f64 {
    -(1.0 + 2.0 * p.sigma_p * p.sigma_p) / (p.chi * p.chi)
}

/// χ² > 1 + 2σ_P², i.e. s > −1.
pub fn negativity_possible(p: &ProbeParams) -> bool {
    p.chi * p.chi > 1.0 + 2.0 * p.sigma_p * p.sigma_p
}

/// Standard deviation of the readout noise referred to the scaled outcome P_L/χ.
pub fn scaled_noise_width(p: &ProbeParams) -> f64 {
    p.readout_variance().sqrt() / p.chi
}

/// Pr(P_L) = ∫ dX m(X) N(P_L; χX, (1 + 2σ_P²)/2) on the grid `p_l`.
///
/// The marginal is taken piecewise linear between its nodes and each piece
/// is integrated against the Gaussian in closed form. The result must
/// integrate to 1 ± 1e−3 over `p_l`.
pub fn homodyne_pdf(m: &Marginal, p: &ProbeParams, p_l: &[f64]) -> Result<Marginal> {
    p.validate()?;
    let ys: Vec<f64> = p_l.iter().map(|v| v / p.chi).collect();
    let density = smear(m, scaled_noise_width(p), &ys)
        .into_iter()
        .map(|d| d / p.chi)
        .collect();
    Marginal::new(m.theta, p_l.to_vec(), density)
}

/// Density of the scaled outcome P_L/χ: the marginal convolved with a
/// Gaussian of variance (1 + 2σ_P²)/(2χ²).
pub fn scaled_outcome_pdf(m: &Marginal, p: &ProbeParams, ys: &[f64]) -> Result<Marginal> {
    p.validate()?;
    let density = smear(m, scaled_noise_width(p), ys);
    Marginal::new(m.theta, ys.to_vec(), density)
}

/// Outcome grid covering the marginal's support plus eight noise widths.
pub fn default_outcome_grid(m: &Marginal, p: &ProbeParams, count: usize) -> Vec<f64> {
    let lo = m.xs[0] * p.chi - 8.0 * p.readout_variance().sqrt();
    let hi = m.xs[m.xs.len() - 1] * p.chi + 8.0 * p.readout_variance().sqrt();
    linspace(lo, hi, count)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// ∫ m(x) N(y; x, τ²) dx for each y, with m linear between nodes and zero
/// outside them. Segments beyond ten widths are skipped.
fn smear(m: &Marginal, tau: f64, ys: &[f64]) -> Vec<f64> {
    let xs = &m.xs;
    let n = xs.len();
    ys.iter()
        .map(|&mu| {
            let lo = xs.partition_point(|&x| x < mu - 10.0 * tau).saturating_sub(1);
            let hi = xs.partition_point(|&x| x <= mu + 10.0 * tau).min(n - 1);
            let mut acc = 0.0;
            for i in lo..hi {
                let (x0, x1) = (xs[i], xs[i + 1]);
                let (m0, m1) = (m.density[i], m.density[i + 1]);
                if m0 == 0.0 && m1 == 0.0 {
                    continue;
                }
                let (z0, z1) = ((x0 - mu) / tau, (x1 - mu) / tau);
                let mass = std_normal_cdf(z1) - std_normal_cdf(z0);
                // ∫ (x − x0) N(x; μ, τ²) dx over the segment
                let first = (mu - x0) * mass - tau * (std_normal_pdf(z1) - std_normal_pdf(z0));
                acc += m0 * mass + (m1 - m0) / (x1 - x0) * first;
            }
            acc.max(0.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearisationCheck {
    pub valid: bool,
    /// λ² σ²_{X_M}.
    pub position_margin: f64,
    /// 2λ² σ_X² σ²_{X_M} / (1 + 2σ_P²).
    pub amplitude_margin: f64,
}

/// Validity of the linearised Gaussian measurement operator for a state
/// with position variance `state_xvar`; both margins must be ≤ 0.1.
pub fn linearisation_check(cfg: &PulseConfig, p: &ProbeParams, state_xvar: f64) -> LinearisationCheck {
    let l2 = cfg.lambda * cfg.lambda;
    let position_margin = l2 * state_xvar;
    let amplitude_margin = 2.0 * l2 * p.sigma_x * p.sigma_x * state_xvar / (1.0 + 2.0 * p.sigma_p * p.sigma_p);
    LinearisationCheck {
        valid: position_margin <= LINEARISATION_THRESHOLD && amplitude_margin <= LINEARISATION_THRESHOLD,
        position_margin,
        amplitude_margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{make_state, StateKind};
    use crate::phasespace::{default_quadrature_grid, marginal};
    use std::f64::consts::{PI, SQRT_2};

    fn gaussian_marginal(mean: f64, var: f64, xs: Vec<f64>) -> Marginal {
        let d = xs
            .iter()
            .map(|x| (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt())
            .collect();
        Marginal::new(0.0, xs, d).unwrap()
    }

    #[test]
    fn derived_params_follow_pulse_formulas() {
        let cfg = PulseConfig {
            photon_number: 0.05,
            g0_over_kappa: 1.0,
            lambda: 0.0,
        };
        let p = derive_probe_params(&cfg, 0.0, 0.0, 0.0).unwrap();
        assert!((p.chi - 1.0).abs() < 1e-14);
        assert!((p.omega - 3.0 / SQRT_2 * 0.05).abs() < 1e-14);
        assert!((p.chi * p.chi - 20.0 * 0.05).abs() < 1e-14);

        let p = derive_probe_params(
            &PulseConfig {
                photon_number: 5.0,
                g0_over_kappa: 0.1,
                lambda: 0.0,
            },
            0.0,
            0.0,
            0.0,
        )
        .unwrap();
        assert!((p.chi - 1.0).abs() < 1e-14);

        let tiny = derive_probe_params(
            &PulseConfig {
                photon_number: 1e-12,
                g0_over_kappa: 1.0,
                lambda: 0.0,
            },
            0.0,
            0.0,
            0.0,
        )
        .unwrap();
        assert!(tiny.chi < 1e-5 && tiny.omega < 1e-11);

        let bad = PulseConfig {
            photon_number: 0.0,
            g0_over_kappa: 1.0,
            lambda: 0.0,
        };
        assert!(matches!(derive_probe_params(&bad, 0.0, 0.0, 0.0), Err(QsrError::Argument(_))));
    }

    #[test]
    fn s_parameter_examples() {
        assert_eq!(s_parameter(&ProbeParams::ideal(1.0).unwrap()), -1.0);
        let strong = ProbeParams::new(1e4, 0.0, 0.0, 0.3, 0.0).unwrap();
        assert!(s_parameter(&strong) < 0.0 && s_parameter(&strong) > -1e-7);
        let fig = ProbeParams::ideal((1.0f64 / 5.7).sqrt()).unwrap();
        assert!((s_parameter(&fig) + 5.7).abs() < 1e-12);
    }

    #[test]
    fn negativity_gate_examples() {
        assert!(negativity_possible(&ProbeParams::ideal(2.0).unwrap()));
        assert!(!negativity_possible(&ProbeParams::ideal(1.0).unwrap()));
        assert!(!negativity_possible(&ProbeParams::new(2.0, 0.0, 0.0, 1.3, 0.0).unwrap()));
        for &(chi, sp) in &[(0.5, 0.0), (1.5, 0.2), (3.0, 2.0), (1.01, 0.0)] {
            let p = ProbeParams::new(chi, 0.0, 0.0, sp, 0.0).unwrap();
            assert_eq!(negativity_possible(&p), s_parameter(&p) > -1.0);
        }
    }

    #[test]
    fn narrow_marginal_gives_readout_gaussian() {
        let x0 = 0.7;
        let m = gaussian_marginal(x0, 1e-6, linspace(x0 - 0.02, x0 + 0.02, 401));
        let p = ProbeParams::new(2.0, 0.0, 0.0, 0.4, 0.0).unwrap();
        let pl = linspace(-8.0, 10.0, 3601);
        let pdf = homodyne_pdf(&m, &p, &pl).unwrap();
        let var = p.readout_variance();
        for (x, d) in pdf.xs.iter().zip(&pdf.density) {
            let oracle = (-(x - 2.0 * x0).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
            assert!((d - oracle).abs() < 1e-5);
        }
    }

    #[test]
    fn vacuum_outcome_variance_is_one_at_unit_strength() {
        let rho = make_state(StateKind::Fock { n: 0 }, 8).unwrap();
        // linear interpolation of the marginal adds ~h²/6 to its variance
        let m = marginal(&rho, 0.0, &linspace(-6.0, 6.0, 4001)).unwrap();
        let p = ProbeParams::ideal(1.0).unwrap();
        let pdf = homodyne_pdf(&m, &p, &linspace(-8.0, 8.0, 3201)).unwrap();
        assert!(pdf.mean().abs() < 1e-10);
        assert!((pdf.variance() - 1.0).abs() < 1e-5);
        for (x, d) in pdf.xs.iter().zip(&pdf.density) {
            assert!((d - (-x * x / 2.0).exp() / (2.0 * PI).sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn pdf_moments_follow_marginal_moments() {
        let rho = make_state(StateKind::Fock { n: 1 }, 12).unwrap();
        let m = marginal(&rho, 0.3, &linspace(-7.0, 7.0, 2801)).unwrap();
        for &(chi, sp) in &[(0.7, 0.0), (2.0, 0.5), (4.0, 1.0)] {
            let p = ProbeParams::new(chi, 0.2, 0.3, sp, 0.0).unwrap();
            let pdf = homodyne_pdf(&m, &p, &default_outcome_grid(&m, &p, 4001)).unwrap();
            assert!((pdf.mean() - chi * m.mean()).abs() < 1e-8);
            let expected = chi * chi * m.variance() + p.readout_variance();
            assert!((pdf.variance() - expected).abs() < 1e-5 * expected);
        }
    }

    #[test]
    fn pdf_ignores_amplitude_noise_and_kick() {
        let rho = make_state(StateKind::Fock { n: 1 }, 12).unwrap();
        let m = marginal(&rho, 0.0, &default_quadrature_grid(&rho)).unwrap();
        let grid = linspace(-12.0, 12.0, 801);
        let a = homodyne_pdf(&m, &ProbeParams::new(2.0, 0.0, 0.0, 0.3, 0.0).unwrap(), &grid).unwrap();
        let b = homodyne_pdf(&m, &ProbeParams::new(2.0, 5.0, 1.0, 0.3, 2.0).unwrap(), &grid).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn strong_probe_recovers_marginal_in_scaled_outcome() {
        let rho = make_state(StateKind::Fock { n: 1 }, 12).unwrap();
        let m = marginal(&rho, 0.0, &linspace(-6.0, 6.0, 2401)).unwrap();
        let p = ProbeParams::ideal(100.0).unwrap();
        let scaled = scaled_outcome_pdf(&m, &p, &linspace(-6.0, 6.0, 2401)).unwrap();
        assert!(scaled.l1_distance(&m) < 1e-2);
        let pdf = homodyne_pdf(&m, &p, &linspace(-600.0, 600.0, 24001)).unwrap();
        assert!((pdf.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn narrow_outcome_grid_is_a_normalization_error() {
        let rho = make_state(StateKind::Fock { n: 0 }, 8).unwrap();
        let m = marginal(&rho, 0.0, &default_quadrature_grid(&rho)).unwrap();
        let err = homodyne_pdf(&m, &ProbeParams::ideal(1.0).unwrap(), &linspace(-0.5, 0.5, 11)).unwrap_err();
        assert!(matches!(err, QsrError::Normalization { .. }));
    }

    #[test]
    fn linearisation_examples() {
        let p = ProbeParams::new(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let off = PulseConfig {
            photon_number: 1.0,
            g0_over_kappa: 1.0,
            lambda: 0.0,
        };
        let r = linearisation_check(&off, &p, 3.0);
        assert!(r.valid && r.position_margin == 0.0 && r.amplitude_margin == 0.0);

        let cfg = PulseConfig { lambda: 1.0, ..off };
        assert!(!linearisation_check(&cfg, &p, 0.5).valid);

        // λ²σ² = 0.05 and 2λ²σ_X²σ²/(1 + 2σ_P²) = 0.02
        let p = ProbeParams::new(1.0, 0.0, (0.2f64).sqrt(), 0.0, 0.0).unwrap();
        let r = linearisation_check(&cfg, &p, 0.05);
        assert!((r.position_margin - 0.05).abs() < 1e-15);
        assert!((r.amplitude_margin - 0.02).abs() < 1e-15);
        assert!(r.valid);
    }
}
