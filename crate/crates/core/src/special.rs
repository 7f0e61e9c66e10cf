//! Hermite functions and Gauss–Hermite quadrature.
//!
//! Position wavefunctions use the convention X = (a + a†)/√2, so the
//! ground state is ψ₀(x) = π^{-1/4} e^{-x²/2} with variance 1/2.

use std::f64::consts::PI;

/// Values ψ₀(x) … ψ_{count-1}(x) of the normalized Hermite functions.
pub fn hermite_functions(x: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    hermite_functions_into(x, &mut out, count);
    out
}

/// Like [`hermite_functions`] but reuses `out`.
pub fn hermite_functions_into(x: f64, out: &mut Vec<f64>, count: usize) {
    out.clear();
    if count == 0 {
        return;
    }
    let psi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if count == 1 {
        return;
    }
    out.push(std::f64::consts::SQRT_2 * x * psi0);
    for n in 1..count - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
}

/// Gauss–Hermite rule stored with weights pre-multiplied by e^{x²}, so that
/// `Σ wᵢ f(xᵢ)` approximates `∫ f(x) dx` for integrands with Gaussian decay.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Newton iteration on the orthonormal Hermite recurrence with the usual
    /// asymptotic starting guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Hermite rule needs at least two nodes");
        let pim4 = PI.powf(-0.25);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let m = n.div_ceil(2);
        let mut z = 0.0;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            for _ in 0..100 {
                let (p1, p2) = orthonormal_pair(z, n, pim4);
                let pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            // weight times e^{z²}, from ψ_{n-1}(z) including its Gaussian factor
            let psi = hermite_functions(z, n);
            let d = (2.0 * nf).sqrt() * psi[n - 1];
            let w = 2.0 / (d * d);
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

// (p_n(z), p_{n-1}(z)) for the orthonormal polynomials without the Gaussian factor
fn orthonormal_pair(z: f64, n: usize, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

/// ln(k!) for k = 0..count-1.
pub fn ln_factorials(count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut acc = 0.0;
    for k in 0..count {
        if k > 0 {
            acc += (k as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// Trapezoid rule on a (possibly non-uniform) tabulation.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `count` evenly spaced points covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count).map(|i| lo + step * i as f64).collect()
        }
    }
}
