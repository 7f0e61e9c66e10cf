//! s-parameterized phase-space representations.
//!
//! Conventions: α = α_r + iα_i with X = √2 α_r and P = √2 α_i, and
//! C(s, ξ) = Tr[ρ D(ξ)] e^{s|ξ|²/2}. Grids are normalized with respect to
//! d²α = dα_r dα_i, so the vacuum Wigner function is (2/π) e^{−2|α|²}.

mod grid;
mod marginal;

use std::f64::consts::{FRAC_2_PI, FRAC_1_PI, SQRT_2};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{QsrError, Result};
use crate::hilbert::{coherent_amplitudes, displacement_expectation, DensityMatrix, FockOperator};
use crate::special::{hermite_functions_into, GaussHermite};

pub use grid::{
    convolve_to_s, local_maxima, quasiprob_grid, suggested_half_extent, GridKind, GridSpec, QuasiProbGrid,
};
pub use marginal::{default_quadrature_grid, marginal, Marginal};

/// Characteristic-function sample, flagged when |ξ|² exceeds a quarter of
/// the Fock cutoff and truncation may dominate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharValue {
    pub value: Complex64,
    pub truncation_limited: bool,
}

/// C(s, ξ) = Tr[ρ D(ξ)] e^{s|ξ|²/2}.
pub fn char_function(rho: &DensityMatrix, s: f64, xi: Complex64) -> CharValue {
    let x = xi.norm_sqr();
    let value = displacement_expectation(rho, xi) * (0.5 * s * x).exp();
    CharValue {
        value,
        truncation_limited: 4.0 * x > rho.dim() as f64,
    }
}

/// W(α) = (2/π) Tr[D†(α) ρ D(α) (−1)^n̂], evaluated literally in a Fock space
/// padded far enough that the displaced state does not leak past the cutoff.
pub fn wigner_point(rho: &DensityMatrix, alpha: Complex64) -> f64 {
    let r = alpha.norm();
    let dim = rho.dim();
    let spread = r * (2.0 * dim as f64 + 1.0).sqrt();
    let big = dim + (r * r + 7.0 * spread + 10.0).ceil() as usize;
    let d = FockOperator::displacement(alpha, big).into_matrix();
    let state = rho.padded(big);
    let displaced = d.adjoint() * state * d;
    let parity: f64 = (0..big)
        .map(|n| {
            let p = displaced[(n, n)].re;
            if n % 2 == 0 {
                p
            } else {
                -p
            }
        })
        .sum();
    FRAC_2_PI * parity
}

/// Q(α) = ⟨α|ρ|α⟩/π.
pub fn qfunction_point(rho: &DensityMatrix, alpha: Complex64) -> f64 {
    let amps = coherent_amplitudes(alpha, rho.dim());
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, am) in amps.iter().enumerate() {
        for (n, an) in amps.iter().enumerate() {
            acc += am.conj() * rho.get(m, n) * an;
        }
    }
    (acc.re * FRAC_1_PI).max(0.0)
}

fn gauss_hermite(n: usize) -> &'static GaussHermite {
    static RULE_128: OnceLock<GaussHermite> = OnceLock::new();
    static RULE_96: OnceLock<GaussHermite> = OnceLock::new();
    match n {
        128 => RULE_128.get_or_init(|| GaussHermite::new(128)),
        96 => RULE_96.get_or_init(|| GaussHermite::new(96)),
        _ => unreachable!("only the 96 and 128 node rules are cached"),
    }
}

/// Wigner's formula
/// W(α_r, α_i) = (2/π) ∫ dx e^{−2√2 i α_i x} ⟨√2α_r + x|ρ|√2α_r − x⟩
/// by 128-node Gauss–Hermite quadrature on Hermite-function wavefunctions.
/// A 96-node evaluation guards against non-convergence.
pub fn wigner_quadrature_point(rho: &DensityMatrix, alpha_r: f64, alpha_i: f64) -> Result<f64> {
    let fine = wigner_formula(rho, alpha_r, alpha_i, gauss_hermite(128));
    let coarse = wigner_formula(rho, alpha_r, alpha_i, gauss_hermite(96));
    if (fine - coarse).abs() > 1e-8 * fine.abs().max(1.0) {
        return Err(QsrError::Accuracy(format!(
            "Wigner quadrature not converged at ({alpha_r}, {alpha_i}): {fine} vs {coarse}"
        )));
    }
    Ok(fine)
}

fn wigner_formula(rho: &DensityMatrix, alpha_r: f64, alpha_i: f64, rule: &GaussHermite) -> f64 {
    let dim = rho.dim();
    let centre = SQRT_2 * alpha_r;
    let mut plus = Vec::with_capacity(dim);
    let mut minus = Vec::with_capacity(dim);
    let mut acc = Complex64::new(0.0, 0.0);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        hermite_functions_into(centre + x, &mut plus, dim);
        hermite_functions_into(centre - x, &mut minus, dim);
        let mut kernel = Complex64::new(0.0, 0.0);
        for (m, pm) in plus.iter().enumerate() {
            if *pm == 0.0 {
                continue;
            }
            let mut row = Complex64::new(0.0, 0.0);
            for (n, qn) in minus.iter().enumerate() {
                row += rho.get(m, n) * *qn;
            }
            kernel += row * *pm;
        }
        acc += kernel * Complex64::from_polar(w, -2.0 * SQRT_2 * alpha_i * x);
    }
    FRAC_2_PI * acc.re
}

/// C_m(η, θ) = Tr[ρ e^{iηX_θ}] = ∫ dx M(x, θ) e^{iηx}, evaluated by
/// Gauss–Hermite quadrature over the rotated position density.
pub fn marginal_char(rho: &DensityMatrix, eta: f64, theta: f64) -> Complex64 {
    let rotated = rho.rotated(theta);
    let dim = rho.dim();
    let rule = gauss_hermite(128);
    let mut psi = Vec::with_capacity(dim);
    let mut acc = Complex64::new(0.0, 0.0);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        hermite_functions_into(x, &mut psi, dim);
        let mut density = 0.0;
        for m in 0..dim {
            let mut row = Complex64::new(0.0, 0.0);
            for n in 0..dim {
                row += rotated[(m, n)] * psi[n];
            }
            density += (row * psi[m]).re;
        }
        acc += Complex64::from_polar(w * density, eta * x);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{make_state, StateKind};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn vacuum() -> DensityMatrix {
        make_state(StateKind::Fock { n: 0 }, 16).unwrap()
    }

    fn fock1() -> DensityMatrix {
        make_state(StateKind::Fock { n: 1 }, 16).unwrap()
    }

    fn cat() -> DensityMatrix {
        make_state(StateKind::Cat { beta: c(0.0, 1.7) }, 32).unwrap()
    }

    #[test]
    fn char_function_examples() {
        for &xi in &[c(0.3, -0.2), c(1.0, 1.0), c(-2.0, 0.5)] {
            let v = char_function(&vacuum(), 0.0, xi).value;
            assert!((v - c((-0.5 * xi.norm_sqr()).exp(), 0.0)).norm() < 1e-14);
        }
        for &s in &[0.0, -1.0, -3.2] {
            assert!((char_function(&cat(), s, c(0.0, 0.0)).value - c(1.0, 0.0)).norm() < 1e-12);
        }
        // Fock |1⟩: ⟨1|D(ξ)|1⟩ = (1 − |ξ|²) e^{−|ξ|²/2}
        let xi = c(0.6, 0.8);
        let v = char_function(&fock1(), 0.0, xi).value;
        assert!(v.norm() < 1e-14);
        let xi = c(0.3, 0.4);
        let oracle = (1.0 - xi.norm_sqr()) * (-0.5 * xi.norm_sqr()).exp();
        assert!((char_function(&fock1(), 0.0, xi).value - c(oracle, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn char_function_hermitian_symmetry() {
        let rho = make_state(StateKind::Coherent { alpha: c(0.5, -0.9) }, 30).unwrap();
        for &xi in &[c(0.7, 0.1), c(-1.3, 2.0)] {
            let a = char_function(&rho, -0.4, xi).value;
            let b = char_function(&rho, -0.4, -xi).value;
            assert!((a - b.conj()).norm() < 1e-13);
        }
        assert!(char_function(&rho, 0.0, c(4.0, 0.0)).truncation_limited);
        assert!(!char_function(&rho, 0.0, c(1.0, 0.0)).truncation_limited);
    }

    #[test]
    fn wigner_point_examples() {
        assert_relative_eq!(wigner_point(&vacuum(), c(0.0, 0.0)), FRAC_2_PI, max_relative = 1e-12);
        assert_relative_eq!(wigner_point(&fock1(), c(0.0, 0.0)), -FRAC_2_PI, max_relative = 1e-12);
        let coh = make_state(StateKind::Coherent { alpha: c(0.8, 0.0) }, 24).unwrap();
        assert_relative_eq!(wigner_point(&coh, c(0.8, 0.0)), FRAC_2_PI, max_relative = 1e-8);
        // vacuum Gaussian away from the origin
        let a = c(0.7, -0.4);
        assert_relative_eq!(
            wigner_point(&vacuum(), a),
            FRAC_2_PI * (-2.0 * a.norm_sqr()).exp(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn qfunction_examples() {
        assert_relative_eq!(qfunction_point(&vacuum(), c(0.0, 0.0)), FRAC_1_PI, max_relative = 1e-14);
        assert_relative_eq!(
            qfunction_point(&vacuum(), c(1.0, 0.0)),
            (-1.0f64).exp() * FRAC_1_PI,
            max_relative = 1e-14
        );
        assert!(qfunction_point(&fock1(), c(0.0, 0.0)).abs() < 1e-16);
    }

    #[test]
    fn wigner_formula_examples() {
        assert!((wigner_quadrature_point(&vacuum(), 0.0, 0.0).unwrap() - FRAC_2_PI).abs() < 1e-10);
        assert!((wigner_quadrature_point(&fock1(), 0.0, 0.0).unwrap() + FRAC_2_PI).abs() < 1e-10);
        let rho = cat();
        for &(ar, ai) in &[(0.0, 0.0), (0.3, 1.2), (-0.8, -0.5)] {
            let a = wigner_quadrature_point(&rho, ar, ai).unwrap();
            let b = wigner_point(&rho, c(ar, ai));
            assert!((a - b).abs() < 1e-6, "({ar},{ai}): {a} vs {b}");
        }
    }

    #[test]
    fn marginal_char_examples() {
        let cat = cat();
        assert!((marginal_char(&cat, 0.0, 0.4) - c(1.0, 0.0)).norm() < 1e-12);
        for &eta in &[0.5, 1.7, 3.0] {
            let v = marginal_char(&vacuum(), eta, 1.1);
            assert!((v - c((-eta * eta / 4.0).exp(), 0.0)).norm() < 1e-12);
        }
        // C(s, ξ = iη e^{iθ}/√2) = C_m(η, θ) e^{sη²/4}
        let (eta, theta) = (1.3, 0.7);
        let xi = c(0.0, 1.0) * Complex64::from_polar(eta / SQRT_2, theta);
        for &s in &[0.0, -0.6] {
            let lhs = char_function(&cat, s, xi).value;
            let rhs = marginal_char(&cat, eta, theta) * (s * eta * eta / 4.0).exp();
            assert!((lhs - rhs).norm() < 1e-8, "s={s}: {lhs} vs {rhs}");
        }
    }
}
