//! Truncated Fock-space states and operators of a single oscillator mode.
//!
//! Units follow ℏ = 1 with X = (a + a†)/√2, P = i(a† − a)/√2 and vacuum
//! quadrature variance 1/2.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QsrError, Result};
use crate::special::ln_factorials;

/// Largest tolerated probability mass lost to the Fock cutoff.
pub const TRUNCATION_THRESHOLD: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Suggested cutoff for coherent and cat states of amplitude `|alpha|`.
pub fn suggested_dim(alpha_abs: f64) -> usize {
    (alpha_abs * alpha_abs + 6.0 * alpha_abs + 10.0).ceil() as usize
}

/// Recipe for one of the standard test states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateKind {
    Fock { n: usize },
    Coherent { alpha: Complex64 },
    /// Even cat (|β⟩ + |−β⟩), normalized.
    Cat { beta: Complex64 },
    Thermal { nbar: f64 },
    SqueezedVacuum { r: f64 },
}

impl StateKind {
    /// Rough phase-space radius of the state, used to size grids.
    pub fn extent_hint(&self) -> f64 {
        match *self {
            StateKind::Fock { n } => (n as f64 + 0.5).sqrt(),
            StateKind::Coherent { alpha } => alpha.norm(),
            StateKind::Cat { beta } => beta.norm(),
            StateKind::Thermal { nbar } => (nbar + 0.5).sqrt(),
            StateKind::SqueezedVacuum { r } => 0.5 * r.exp(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            StateKind::Fock { n } => format!("fock(n={n})"),
            StateKind::Coherent { alpha } => format!("coherent(alpha={}{:+}i)", alpha.re, alpha.im),
            StateKind::Cat { beta } => format!("cat(beta={}{:+}i)", beta.re, beta.im),
            StateKind::Thermal { nbar } => format!("thermal(nbar={nbar})"),
            StateKind::SqueezedVacuum { r } => format!("squeezed-vacuum(r={r})"),
        }
    }
}

/// Density operator of the mechanical mode in the Fock basis |0⟩ … |dim−1⟩.
///
/// The stored matrix always has unit trace; `truncation_deficit` records the
/// population the ideal state had above the cutoff before renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<Complex64>,
    truncation_deficit: f64,
}

impl DensityMatrix {
    /// Wraps and validates a matrix. The matrix is normalized to unit trace.
    pub fn from_matrix(elements: DMatrix<Complex64>, truncation_deficit: f64) -> Result<Self> {
        if elements.nrows() == 0 || elements.nrows() != elements.ncols() {
            return Err(QsrError::InvalidState(format!(
                "expected a non-empty square matrix, got {}x{}",
                elements.nrows(),
                elements.ncols()
            )));
        }
        let tr = elements.trace();
        if !(tr.re > 0.0) || tr.im.abs() > HERMITIAN_TOL {
            return Err(QsrError::InvalidState(format!("trace {tr} is not positive")));
        }
        let rho = Self {
            elements: elements.unscale(tr.re),
            truncation_deficit,
        };
        rho.validate()?;
        Ok(rho)
    }

    /// Pure state from Fock amplitudes. `deficit` is the analytically known
    /// norm missing from `amps`.
    fn from_amplitudes(amps: &[Complex64], deficit: f64) -> Result<Self> {
        let dim = amps.len();
        let norm2: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        let elements = DMatrix::from_fn(dim, dim, |m, n| amps[m] * amps[n].conj() / norm2);
        let rho = Self {
            elements,
            truncation_deficit: deficit.max(0.0),
        };
        rho.validate()?;
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn truncation_deficit(&self) -> f64 {
        self.truncation_deficit
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.elements[(m, n)]
    }

    /// Checks Hermiticity, unit trace and positive semidefiniteness.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        for m in 0..dim {
            for n in 0..=m {
                let d = self.elements[(m, n)] - self.elements[(n, m)].conj();
                if d.norm() > HERMITIAN_TOL {
                    return Err(QsrError::InvalidState(format!(
                        "not Hermitian at ({m},{n}): deviation {:.3e}",
                        d.norm()
                    )));
                }
            }
        }
        let tr = self.elements.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > HERMITIAN_TOL {
            return Err(QsrError::InvalidState(format!("trace {tr} != 1")));
        }
        let lowest = self.min_eigenvalue();
        if lowest < -PSD_TOL {
            return Err(QsrError::InvalidState(format!(
                "not positive semidefinite: eigenvalue {lowest:.3e}"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // symmetrize away round-off before the Hermitian solver
        let herm = (&self.elements + self.elements.adjoint()).scale(0.5);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// ⟨n̂⟩.
    pub fn mean_occupation(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.elements[(n, n)].re).sum()
    }

    /// Tr(ρ A).
    pub fn expectation(&self, op: &FockOperator) -> Result<Complex64> {
        if op.dim() != self.dim() {
            return Err(QsrError::arg(format!(
                "operator dimension {} does not match state dimension {}",
                op.dim(),
                self.dim()
            )));
        }
        Ok((&self.elements * op.matrix()).trace())
    }

    /// ρ embedded in a larger Fock space (zero padded).
    pub fn padded(&self, dim: usize) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(dim.max(self.dim()), dim.max(self.dim()));
        out.view_mut((0, 0), (self.dim(), self.dim()))
            .copy_from(&self.elements);
        out
    }

    /// Free rotation U ρ U† with U = e^{−iθ n̂}, i.e. ρ_mn → ρ_mn e^{−i(m−n)θ}.
    /// Position statistics of the result are the statistics of X_θ in ρ.
    pub fn rotated(&self, theta: f64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim(), self.dim(), |m, n| {
            self.elements[(m, n)] * Complex64::from_polar(1.0, -(m as f64 - n as f64) * theta)
        })
    }
}

/// Builds one of the standard states, checking the truncation deficit.
pub fn make_state(kind: StateKind, dim: usize) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(QsrError::arg("Fock dimension must be positive"));
    }
    let truncation = |deficit: f64| QsrError::Truncation {
        dim,
        deficit,
        threshold: TRUNCATION_THRESHOLD,
    };
    match kind {
        StateKind::Fock { n } => {
            if n >= dim {
                return Err(truncation(1.0));
            }
            let mut amps = vec![Complex64::new(0.0, 0.0); dim];
            amps[n] = Complex64::new(1.0, 0.0);
            DensityMatrix::from_amplitudes(&amps, 0.0)
        }
        StateKind::Coherent { alpha } => {
            let amps = coherent_amplitudes(alpha, dim);
            let deficit = 1.0 - amps.iter().map(|c| c.norm_sqr()).sum::<f64>();
            if deficit > TRUNCATION_THRESHOLD {
                return Err(truncation(deficit));
            }
            DensityMatrix::from_amplitudes(&amps, deficit)
        }
        StateKind::Cat { beta } => {
            let x = beta.norm_sqr();
            if x == 0.0 {
                return make_state(StateKind::Fock { n: 0 }, dim);
            }
            // ‖|β⟩ + |−β⟩‖² = 2(1 + e^{−2|β|²})
            let norm = (2.0 * (1.0 + (-2.0 * x).exp())).sqrt();
            let amps: Vec<Complex64> = coherent_amplitudes(beta, dim)
                .into_iter()
                .enumerate()
                .map(|(n, c)| if n % 2 == 0 { c * 2.0 / norm } else { Complex64::new(0.0, 0.0) })
                .collect();
            let deficit = 1.0 - amps.iter().map(|c| c.norm_sqr()).sum::<f64>();
            if deficit > TRUNCATION_THRESHOLD {
                return Err(truncation(deficit));
            }
            DensityMatrix::from_amplitudes(&amps, deficit)
        }
        StateKind::Thermal { nbar } => {
            if !(nbar >= 0.0) || !nbar.is_finite() {
                return Err(QsrError::arg(format!("thermal occupation must be >= 0, got {nbar}")));
            }
            let ratio = nbar / (1.0 + nbar);
            let deficit = ratio.powi(dim as i32);
            if deficit > TRUNCATION_THRESHOLD {
                return Err(truncation(deficit));
            }
            let mut elements = DMatrix::zeros(dim, dim);
            let mut p = 1.0 / (1.0 + nbar);
            for n in 0..dim {
                elements[(n, n)] = Complex64::new(p / (1.0 - deficit), 0.0);
                p *= ratio;
            }
            let rho = DensityMatrix {
                elements,
                truncation_deficit: deficit,
            };
            rho.validate()?;
            Ok(rho)
        }
        StateKind::SqueezedVacuum { r } => {
            if !r.is_finite() {
                return Err(QsrError::arg("squeezing parameter must be finite"));
            }
            // S(r)|0⟩ with S(r) = exp[r(a² − a†²)/2]; X variance e^{−2r}/2
            let t = r.tanh();
            let mut amps = vec![Complex64::new(0.0, 0.0); dim];
            let mut c = 1.0 / r.cosh().sqrt();
            for k in 0..dim.div_ceil(2) {
                if 2 * k < dim {
                    amps[2 * k] = Complex64::new(c, 0.0);
                }
                let kf = k as f64;
                c *= -t * ((2.0 * kf + 1.0) * (2.0 * kf + 2.0)).sqrt() / (2.0 * (kf + 1.0));
            }
            let deficit = 1.0 - amps.iter().map(|c| c.norm_sqr()).sum::<f64>();
            if deficit > TRUNCATION_THRESHOLD {
                return Err(truncation(deficit));
            }
            DensityMatrix::from_amplitudes(&amps, deficit)
        }
    }
}

/// Fock amplitudes e^{−|α|²/2} αⁿ/√n! of the coherent state |α⟩.
pub fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(dim);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        out.push(c);
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    out
}

/// Operator on the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator(DMatrix<Complex64>);

impl FockOperator {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "Fock operators are square");
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn annihilation(dim: usize) -> Self {
        Self(DMatrix::from_fn(dim, dim, |m, n| {
            if n == m + 1 {
                Complex64::new((n as f64).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn creation(dim: usize) -> Self {
        Self(Self::annihilation(dim).0.adjoint())
    }

    pub fn number(dim: usize) -> Self {
        Self(DMatrix::from_fn(dim, dim, |m, n| {
            if m == n {
                Complex64::new(m as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// (−1)^n̂.
    pub fn parity(dim: usize) -> Self {
        Self(DMatrix::from_fn(dim, dim, |m, n| {
            if m != n {
                Complex64::new(0.0, 0.0)
            } else if m % 2 == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            }
        }))
    }

    /// X_θ = (a e^{−iθ} + a† e^{iθ})/√2.
    pub fn quadrature(theta: f64, dim: usize) -> Self {
        let a = Self::annihilation(dim).0;
        let phase = Complex64::from_polar(1.0, -theta);
        let m = (&a * phase + a.adjoint() * phase.conj()).unscale(std::f64::consts::SQRT_2);
        Self(m)
    }

    /// D(α) = exp(α a† − α* a), from closed-form matrix elements.
    pub fn displacement(alpha: Complex64, dim: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for_each_displacement_element(alpha, dim, |row, col, value| m[(row, col)] = value);
        Self(m)
    }
}

/// Fock-basis matrix of the displacement operator D(α).
pub fn displacement_matrix(alpha: Complex64, dim: usize) -> Result<FockOperator> {
    if dim == 0 {
        return Err(QsrError::arg("Fock dimension must be positive"));
    }
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(QsrError::arg("displacement amplitude must be finite"));
    }
    Ok(FockOperator::displacement(alpha, dim))
}

/// Visits every element ⟨m|D(α)|n⟩ with m, n < dim.
///
/// For m = n + k the element is √(n!/m!) α^k e^{−|α|²/2} L_n^{(k)}(|α|²); the
/// scaled quantity h_n = √(n!/(n+k)!) |α|^k e^{−|α|²/2} L_n^{(k)}(|α|²) obeys
///
/// h_{n+1} = [(2n + 1 + k − |α|²) h_n − √(n(n+k)) h_{n−1}] / √((n+1)(n+1+k)),
///
/// which stays bounded (|h_n| ≤ 1) and never forms factorials explicitly.
/// Elements above the diagonal follow from ⟨n|D(α)|n+k⟩ = (−α*/|α|)^k h_n.
pub fn for_each_displacement_element<F: FnMut(usize, usize, Complex64)>(
    alpha: Complex64,
    dim: usize,
    mut visit: F,
) {
    let x = alpha.norm_sqr();
    let r = alpha.norm();
    let phase = if r > 0.0 { alpha / r } else { Complex64::new(1.0, 0.0) };
    let minus_conj_phase = -phase.conj();
    let ln_fact = ln_factorials(dim);
    let mut h = vec![0.0f64; dim];
    let mut lower_phase = Complex64::new(1.0, 0.0);
    let mut upper_phase = Complex64::new(1.0, 0.0);
    for k in 0..dim {
        let len = dim - k;
        let kf = k as f64;
        h[0] = if r == 0.0 {
            if k == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (-0.5 * x + kf * r.ln() - 0.5 * ln_fact[k]).exp()
        };
        if len > 1 {
            h[1] = (1.0 + kf - x) * h[0] / (1.0 + kf).sqrt();
        }
        for n in 1..len.saturating_sub(1) {
            let nf = n as f64;
            h[n + 1] = ((2.0 * nf + 1.0 + kf - x) * h[n] - (nf * (nf + kf)).sqrt() * h[n - 1])
                / ((nf + 1.0) * (nf + 1.0 + kf)).sqrt();
        }
        for (n, &hn) in h.iter().enumerate().take(len) {
            visit(n + k, n, lower_phase * hn);
            if k > 0 {
                visit(n, n + k, upper_phase * hn);
            }
        }
        lower_phase *= phase;
        upper_phase *= minus_conj_phase;
    }
}

/// Tr(ρ D(ξ)) without materializing D(ξ).
pub fn displacement_expectation(rho: &DensityMatrix, xi: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    // Tr(ρ D) = Σ_{m,n} ρ_{nm} D_{mn}
    for_each_displacement_element(xi, rho.dim(), |m, n, d| acc += rho.get(n, m) * d);
    acc
}

/// Σ_n (−1)^n ρ_nn.
pub fn parity_expectation(rho: &DensityMatrix) -> f64 {
    (0..rho.dim())
        .map(|n| {
            let p = rho.get(n, n).re;
            if n % 2 == 0 {
                p
            } else {
                -p
            }
        })
        .sum()
}

/// Operator ordering for [`ordered_moment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    /// a†^q a^p
    Normal,
    /// a^p a†^q
    Antinormal,
    /// average over all orderings of p annihilators and q creators
    Symmetric,
}

/// ⟨(a†^q a^p)⟩ in the requested ordering.
pub fn ordered_moment(rho: &DensityMatrix, p: usize, q: usize, ordering: Ordering) -> Result<Complex64> {
    let order = p + q;
    if 4 * order > rho.dim() {
        return Err(QsrError::Truncation {
            dim: rho.dim(),
            deficit: f64::NAN,
            threshold: TRUNCATION_THRESHOLD,
        });
    }
    // pad so that raising operators never leave the space
    let dim = rho.dim() + order + 1;
    let state = rho.padded(dim);
    let a = FockOperator::annihilation(dim).into_matrix();
    let ad = a.adjoint();
    let product = |word: &[bool]| -> DMatrix<Complex64> {
        // true = creation
        word.iter().fold(DMatrix::identity(dim, dim), |acc, &create| {
            if create {
                acc * &ad
            } else {
                acc * &a
            }
        })
    };
    let op = match ordering {
        Ordering::Normal => {
            let word: Vec<bool> = std::iter::repeat_n(true, q).chain(std::iter::repeat_n(false, p)).collect();
            product(&word)
        }
        Ordering::Antinormal => {
            let word: Vec<bool> = std::iter::repeat_n(false, p).chain(std::iter::repeat_n(true, q)).collect();
            product(&word)
        }
        Ordering::Symmetric => {
            let mut total = DMatrix::zeros(dim, dim);
            let mut count = 0usize;
            for mask in 0u64..(1u64 << order) {
                if mask.count_ones() as usize != q {
                    continue;
                }
                let word: Vec<bool> = (0..order).map(|i| mask >> i & 1 == 1).collect();
                total += product(&word);
                count += 1;
            }
            total.unscale(count as f64)
        }
    };
    Ok((state * op).trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn coherent_zero_is_vacuum() {
        let rho = make_state(StateKind::Coherent { alpha: c(0.0, 0.0) }, 8).unwrap();
        assert_eq!(rho.get(0, 0), c(1.0, 0.0));
        assert!(rho.elements().iter().skip(1).all(|z| z.norm() == 0.0));
        assert_eq!(rho.truncation_deficit(), 0.0);
    }

    #[test]
    fn figure_cat_state_occupation() {
        let beta = c(0.0, 1.7);
        let rho = make_state(StateKind::Cat { beta }, 32).unwrap();
        // even cat: ⟨n⟩ = |β|² tanh|β|²
        let x = beta.norm_sqr();
        assert_relative_eq!(rho.mean_occupation(), x * x.tanh(), max_relative = 1e-8);
        assert!(rho.truncation_deficit() < TRUNCATION_THRESHOLD);
        assert!((parity_expectation(&rho) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_diagonal_matches_geometric_series() {
        let nbar: f64 = 0.5;
        let rho = make_state(StateKind::Thermal { nbar }, 40).unwrap();
        let mut total = 0.0;
        for n in 0..40 {
            let expected = nbar.powi(n as i32) / (1.0 + nbar).powi(n as i32 + 1);
            total += expected;
            assert!((rho.get(n, n).re - expected).abs() < 1e-8);
        }
        assert!(1.0 - total < 1e-8);
        assert!(rho.truncation_deficit() < 1e-8);
        assert!((rho.truncation_deficit() - (1.0 - total)).abs() < 1e-15);
    }

    #[test]
    fn too_small_cutoff_is_a_truncation_error() {
        let err = make_state(StateKind::Coherent { alpha: c(3.0, 0.0) }, 10).unwrap_err();
        assert!(matches!(err, QsrError::Truncation { .. }));
        assert!(matches!(
            make_state(StateKind::Fock { n: 4 }, 4),
            Err(QsrError::Truncation { .. })
        ));
        assert!(matches!(
            make_state(StateKind::Fock { n: 0 }, 0),
            Err(QsrError::Argument(_))
        ));
        assert!(matches!(
            make_state(StateKind::Thermal { nbar: 5.0 }, 20),
            Err(QsrError::Truncation { .. })
        ));
    }

    #[test]
    fn squeezed_vacuum_quadrature_variance() {
        let r = 0.6;
        let rho = make_state(StateKind::SqueezedVacuum { r }, 60).unwrap();
        let x = FockOperator::quadrature(0.0, 60).into_matrix();
        let p = FockOperator::quadrature(std::f64::consts::FRAC_PI_2, 60).into_matrix();
        let vx = (rho.elements() * &x * &x).trace().re;
        let vp = (rho.elements() * &p * &p).trace().re;
        assert_relative_eq!(vx, 0.5 * (-2.0 * r).exp(), max_relative = 1e-8);
        assert_relative_eq!(vp, 0.5 * (2.0 * r).exp(), max_relative = 1e-8);
    }

    #[test]
    fn displacement_at_zero_is_identity() {
        let d = displacement_matrix(c(0.0, 0.0), 12).unwrap();
        assert!(max_abs_diff(d.matrix(), &DMatrix::identity(12, 12)) < 1e-15);
    }

    #[test]
    fn displacement_first_column_is_coherent_state() {
        let alpha = c(0.7, -1.1);
        let d = displacement_matrix(alpha, 30).unwrap();
        for (n, amp) in coherent_amplitudes(alpha, 30).iter().enumerate() {
            assert!((d.matrix()[(n, 0)] - amp).norm() < 1e-14);
        }
    }

    #[test]
    fn displacement_inverse_product() {
        // elements of a 40-dim block; the inner index is summed far enough
        // past the block that the product has converged
        let keep = 40;
        let inner = 160;
        for &alpha in &[c(2.0, 0.0), c(0.3, -1.9), c(-1.2, 1.2)] {
            let d = displacement_matrix(alpha, inner).unwrap().into_matrix();
            let dm = displacement_matrix(-alpha, inner).unwrap().into_matrix();
            let prod = d.view((0, 0), (keep, inner)) * dm.view((0, 0), (inner, keep));
            assert!(max_abs_diff(&prod, &DMatrix::identity(keep, keep)) < 1e-8, "alpha={alpha}");
        }
    }

    #[test]
    fn displacement_matches_recurrence_from_commutator() {
        // ⟨m+1|D|n⟩ = (√n ⟨m|D|n−1⟩ + α ⟨m|D|n⟩)/√(m+1), from D†aD = a + α
        let alpha = c(1.3, 0.4);
        let dim = 25;
        let d = displacement_matrix(alpha, dim).unwrap().into_matrix();
        for m in 0..dim - 1 {
            for n in 0..dim {
                let prev = if n > 0 { d[(m, n - 1)] * (n as f64).sqrt() } else { c(0.0, 0.0) };
                let expected = (prev + alpha * d[(m, n)]) / ((m + 1) as f64).sqrt();
                assert!((d[(m + 1, n)] - expected).norm() < 1e-12, "({m},{n})");
            }
        }
    }

    #[test]
    fn displacement_group_law() {
        let keep = 40;
        let inner = 120;
        let a = c(0.6, -0.8);
        let b = c(-0.3, 0.9);
        let da = displacement_matrix(a, inner).unwrap().into_matrix();
        let db = displacement_matrix(b, inner).unwrap().into_matrix();
        let dab = displacement_matrix(a + b, keep).unwrap().into_matrix();
        let phase = ((a * b.conj() - a.conj() * b) / 2.0).exp();
        let lhs = da.view((0, 0), (keep, inner)) * db.view((0, 0), (inner, keep));
        let err = max_abs_diff(&lhs, &(dab * phase));
        assert!(err < 1e-6, "group law violated by {err:.2e}");
    }

    #[test]
    fn displacement_large_amplitude_stays_finite() {
        let d = displacement_matrix(c(30.0, 10.0), 64).unwrap();
        assert!(d.matrix().iter().all(|z| z.re.is_finite() && z.im.is_finite() && z.norm() <= 1.0 + 1e-9));
    }

    #[test]
    fn parity_values() {
        let vac = make_state(StateKind::Fock { n: 0 }, 4).unwrap();
        let one = make_state(StateKind::Fock { n: 1 }, 4).unwrap();
        assert_eq!(parity_expectation(&vac), 1.0);
        assert_eq!(parity_expectation(&one), -1.0);
        // oracle: Poisson weights with alternating sign
        let coh = make_state(StateKind::Coherent { alpha: c(1.0, 0.0) }, 40).unwrap();
        let mut oracle = 0.0;
        let mut w = (-1.0f64).exp();
        for n in 0..60 {
            oracle += if n % 2 == 0 { w } else { -w };
            w /= (n + 1) as f64;
        }
        assert!((parity_expectation(&coh) - oracle).abs() < 1e-12);
        assert_relative_eq!(parity_expectation(&coh), (-2.0f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn parity_is_trace_with_parity_operator() {
        let rho = make_state(StateKind::Cat { beta: c(1.0, 0.5) }, 24).unwrap();
        let via_trace = rho.expectation(&FockOperator::parity(24)).unwrap();
        assert!((via_trace.re - parity_expectation(&rho)).abs() < 1e-12);
        assert!(via_trace.im.abs() < 1e-12);
    }

    #[test]
    fn quadrature_operators_match_definitions() {
        let dim = 10;
        let a = FockOperator::annihilation(dim).into_matrix();
        let ad = FockOperator::creation(dim).into_matrix();
        let x0 = FockOperator::quadrature(0.0, dim).into_matrix();
        let xp = FockOperator::quadrature(std::f64::consts::FRAC_PI_2, dim).into_matrix();
        let x_def = (&a + &ad).unscale(std::f64::consts::SQRT_2);
        let p_def = ((&ad - &a) * c(0.0, 1.0)).unscale(std::f64::consts::SQRT_2);
        assert!(max_abs_diff(&x0, &x_def) < 1e-15);
        assert!(max_abs_diff(&xp, &p_def) < 1e-15);
    }

    #[test]
    fn ordered_moments() {
        let vac = make_state(StateKind::Fock { n: 0 }, 8).unwrap();
        let m = ordered_moment(&vac, 1, 1, Ordering::Antinormal).unwrap();
        assert!((m - c(1.0, 0.0)).norm() < 1e-14);

        let alpha = c(0.4, -0.3);
        let coh = make_state(StateKind::Coherent { alpha }, 24).unwrap();
        let m = ordered_moment(&coh, 1, 0, Ordering::Normal).unwrap();
        assert!((m - alpha).norm() < 1e-9);

        // oracle: explicit Fock-basis trace of (a†a + a a†)/2 for thermal n̄ = 1
        let th = make_state(StateKind::Thermal { nbar: 1.0 }, 40).unwrap();
        let oracle: f64 = (0..40).map(|n| th.get(n, n).re * (n as f64 + 0.5)).sum();
        let m = ordered_moment(&th, 1, 1, Ordering::Symmetric).unwrap();
        assert!((m.re - oracle).abs() < 1e-12);
        assert!((m.re - 1.5).abs() < 1e-6);

        assert!(matches!(
            ordered_moment(&vac, 2, 1, Ordering::Normal),
            Err(QsrError::Truncation { .. })
        ));
    }

    #[test]
    fn rotation_moves_coherent_amplitude() {
        // rotating by θ maps |α⟩ to |α e^{−iθ}⟩
        let alpha = c(0.0, 1.0);
        let rho = make_state(StateKind::Coherent { alpha }, 30).unwrap();
        let rot = DensityMatrix::from_matrix(rho.rotated(std::f64::consts::FRAC_PI_2), 0.0).unwrap();
        let mean = ordered_moment(&rot, 1, 0, Ordering::Normal).unwrap();
        assert!((mean - c(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn from_matrix_rejects_non_hermitian() {
        let mut m = DMatrix::from_element(2, 2, c(0.0, 0.0));
        m[(0, 0)] = c(0.5, 0.0);
        m[(1, 1)] = c(0.5, 0.0);
        m[(0, 1)] = c(0.2, 0.0);
        assert!(DensityMatrix::from_matrix(m.clone(), 0.0).is_err());
        m[(1, 0)] = c(0.2, 0.0);
        assert!(DensityMatrix::from_matrix(m.clone(), 0.0).is_ok());
        m[(0, 1)] = c(0.9, 0.0);
        m[(1, 0)] = c(0.9, 0.0);
        assert!(matches!(
            DensityMatrix::from_matrix(m, 0.0),
            Err(QsrError::InvalidState(_))
        ));
    }
}
