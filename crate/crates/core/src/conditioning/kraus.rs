//! Fock-basis measurement operators, used as an independent check on the
//! Gaussian update.
//!
//! For probe amplitude α with phase offset P_α and amplitude offset δX_α,
//! Υ_α = π^{−1/4} exp[−(P_L − P_α − χX)²/2] exp[iΩX + iχ δX_α X].
//! Classical probe noise is averaged with Gauss–Hermite quadrature over
//! P_α ~ N(0, σ_P²) and δX_α ~ N(0, σ_X²).

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::GaussianState;
use crate::error::Result;
use crate::hilbert::{DensityMatrix, FockOperator};
use crate::probe::ProbeParams;
use crate::special::{hermite_functions_into, linspace, GaussHermite};

const NOISE_NODES: usize = 12;

/// Position samples and trapezoid weights covering the support of the
/// first `dim` Hermite functions.
fn position_table(dim: usize) -> (Vec<f64>, DMatrix<f64>) {
    let half = (2.0 * dim as f64 + 1.0).sqrt() + 7.0;
    let count = ((2.0 * half) / 0.01).ceil() as usize + 1;
    let xs = linspace(-half, half, count);
    let mut psi = Vec::with_capacity(dim);
    let mut table = DMatrix::zeros(count, dim);
    for (i, &x) in xs.iter().enumerate() {
        hermite_functions_into(x, &mut psi, dim);
        for (n, v) in psi.iter().enumerate() {
            table[(i, n)] = *v;
        }
    }
    (xs, table)
}

/// ⟨m|Υ|n⟩ for outcome `p_l` and probe offsets (P_α, δX_α).
pub fn kraus_operator(p: &ProbeParams, p_l: f64, p_alpha: f64, delta_x: f64, dim: usize) -> DMatrix<Complex64> {
    let (xs, table) = position_table(dim);
    kraus_from_table(p, p_l, p_alpha, delta_x, &xs, &table)
}

fn kraus_from_table(
    p: &ProbeParams,
    p_l: f64,
    p_alpha: f64,
    delta_x: f64,
    xs: &[f64],
    table: &DMatrix<f64>,
) -> DMatrix<Complex64> {
    let dx = xs[1] - xs[0];
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let factor: Vec<Complex64> = xs
        .iter()
        .map(|&x| {
            let amp = pim4 * (-0.5 * (p_l - p_alpha - p.chi * x).powi(2)).exp();
            Complex64::from_polar(amp * dx, (p.omega + p.chi * delta_x) * x)
        })
        .collect();
    let weighted = DMatrix::from_fn(table.nrows(), table.ncols(), |i, n| factor[i] * table[(i, n)]);
    table.map(|v| Complex64::new(v, 0.0)).transpose() * weighted
}

/// Conditional state Σ_α w_α Υ_α ρ Υ_α† / Pr(P_L), with the classical
/// probe noise integrated out.
pub fn kraus_condition(rho: &DensityMatrix, p: &ProbeParams, p_l: f64) -> Result<DensityMatrix> {
    let dim = rho.dim();
    let (xs, table) = position_table(dim);
    let rule = GaussHermite::new(NOISE_NODES);
    // standard Gauss–Hermite weights for ∫ e^{−t²} f(t) dt, rescaled to N(0, σ²)
    let noise = |sigma: f64| -> Vec<(f64, f64)> {
        if sigma == 0.0 {
            return vec![(0.0, 1.0)];
        }
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| {
                let w_std = w * (-t * t).exp() / std::f64::consts::PI.sqrt();
                (std::f64::consts::SQRT_2 * sigma * t, w_std)
            })
            .collect()
    };
    let state = rho.elements();
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for (pa, wa) in noise(p.sigma_p) {
        for (dxa, wx) in noise(p.sigma_x) {
            let k = kraus_from_table(p, p_l, pa, dxa, &xs, &table);
            out += (&k * state * k.adjoint()).scale(wa * wx);
        }
    }
    let herm = (&out + out.adjoint()).scale(0.5);
    DensityMatrix::from_matrix(herm, rho.truncation_deficit())
}

/// Means and symmetrized covariance of (X, P) in a Fock-basis state.
pub fn quadrature_moments(rho: &DensityMatrix) -> GaussianState {
    let dim = rho.dim();
    let x = FockOperator::quadrature(0.0, dim).into_matrix();
    let p = FockOperator::quadrature(std::f64::consts::FRAC_PI_2, dim).into_matrix();
    let e = |op: &DMatrix<Complex64>| (rho.elements() * op).trace().re;
    let mx = e(&x);
    let mp = e(&p);
    let xx = e(&(&x * &x)) - mx * mx;
    let pp = e(&(&p * &p)) - mp * mp;
    let xp = 0.5 * e(&(&x * &p + &p * &x)) - mx * mp;
    GaussianState {
        mean: [mx, mp],
        cov: [[xx, xp], [xp, pp]],
    }
}
