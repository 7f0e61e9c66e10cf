//! Gaussian conditional-state pipeline: pulsed position measurements, free
//! evolution with thermal diffusion, and two-pulse cooling by measurement.

mod kraus;

use serde::{Deserialize, Serialize};

use crate::error::{QsrError, Result};
use crate::probe::ProbeParams;

pub use kraus::{kraus_condition, kraus_operator, quadrature_moments};

/// Heisenberg bound det(cov) ≥ 1/4, with this much round-off slack.
pub const HEISENBERG_SLACK: f64 = 1e-9;

/// Gaussian state of (X, P): means and symmetric covariance, vacuum =
/// diag(1/2, 1/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl GaussianState {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        let g = Self { mean, cov };
        g.validate()?;
        Ok(g)
    }

    pub fn vacuum() -> Self {
        Self {
            mean: [0.0, 0.0],
            cov: [[0.5, 0.0], [0.0, 0.5]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [[a, b], [c, d]] = self.cov;
        if !(a.is_finite() && b.is_finite() && d.is_finite()) || !self.mean.iter().all(|m| m.is_finite()) {
            return Err(QsrError::InvalidState("non-finite Gaussian moments".into()));
        }
        if (b - c).abs() > 1e-12 * (a.abs() + d.abs()).max(1.0) {
            return Err(QsrError::InvalidState(format!("covariance not symmetric: {b} vs {c}")));
        }
        if !(a > 0.0 && d > 0.0) {
            return Err(QsrError::InvalidState("covariance not positive definite".into()));
        }
        if self.det() < 0.25 - HEISENBERG_SLACK {
            return Err(QsrError::InvalidState(format!(
                "covariance violates the uncertainty bound: det = {}",
                self.det()
            )));
        }
        Ok(())
    }

    pub fn det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    /// Occupation of the thermal state with the same purity: 1 + 2n = 2√det.
    pub fn effective_occupation(&self) -> f64 {
        (2.0 * self.det().sqrt() - 1.0) / 2.0
    }

    pub fn purity(&self) -> f64 {
        0.5 / self.det().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    /// Mean thermal occupation n̄ of the bath.
    pub nbar: f64,
    /// Mechanical quality factor Q.
    pub quality: f64,
}

impl BathParams {
    pub fn new(nbar: f64, quality: f64) -> Result<Self> {
        if !(nbar >= 0.0) || !(quality > 0.0) {
            return Err(QsrError::arg(format!("bath needs nbar >= 0 and Q > 0, got {nbar}, {quality}")));
        }
        Ok(Self { nbar, quality })
    }

    /// No bath coupling.
    pub fn off() -> Self {
        Self {
            nbar: 0.0,
            quality: 1.0,
        }
    }

    /// Variance added to each quadrature per radian of free evolution, n̄/Q.
    pub fn diffusion_rate(&self) -> f64 {
        self.nbar / self.quality
    }
}

/// Thermal state, cov = diag(n̄ + 1/2, n̄ + 1/2).
pub fn thermal_gaussian(nbar: f64) -> Result<GaussianState> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(QsrError::arg(format!("thermal occupation must be non-negative, got {nbar}")));
    }
    GaussianState::new([0.0, 0.0], [[nbar + 0.5, 0.0], [0.0, nbar + 0.5]])
}

/// State after one probe pulse with outcome `p_l`.
///
/// Position is conditioned on P_L = χX + g, g ~ N(0, (1 + 2σ_P²)/2), by the
/// conditional-Gaussian (Kalman) update; the momentum then receives the kick
/// Ω and the back-action variance χ²(1 + 2σ_X²)/2.
pub fn condition_on_outcome(g: &GaussianState, p: &ProbeParams, p_l: f64) -> GaussianState {
    let chi = p.chi;
    let [[sxx, sxp], [_, spp]] = g.cov;
    let innovation_var = chi * chi * sxx + p.readout_variance();
    let innovation = p_l - chi * g.mean[0];
    let kx = chi * sxx / innovation_var;
    let kp = chi * sxp / innovation_var;
    let c2 = chi * chi / innovation_var;
    let new_sxx = sxx - c2 * sxx * sxx;
    let new_sxp = sxp - c2 * sxx * sxp;
    let new_spp = spp - c2 * sxp * sxp + p.back_action_variance();
    GaussianState {
        mean: [g.mean[0] + kx * innovation, g.mean[1] + kp * innovation + p.omega],
        cov: [[new_sxx, new_sxp], [new_sxp, new_spp]],
    }
}

/// Free harmonic evolution through phase angle θ (x' = x cosθ + p sinθ,
/// p' = −x sinθ + p cosθ), then isotropic bath diffusion θ·n̄/Q per
/// quadrature, so a quarter period adds πn̄/(2Q).
pub fn free_evolution(g: &GaussianState, theta: f64, bath: &BathParams) -> Result<GaussianState> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(QsrError::arg(format!("evolution angle must be non-negative, got {theta}")));
    }
    let (s, c) = theta.sin_cos();
    let r = [[c, s], [-s, c]];
    let mean = [
        r[0][0] * g.mean[0] + r[0][1] * g.mean[1],
        r[1][0] * g.mean[0] + r[1][1] * g.mean[1],
    ];
    let mut cov = [[0.0; 2]; 2];
    for (i, row) in cov.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = (0..2)
                .flat_map(|k| (0..2).map(move |l| (k, l)))
                .map(|(k, l)| r[i][k] * g.cov[k][l] * r[j][l])
                .sum();
        }
    }
    cov[0][1] = 0.5 * (cov[0][1] + cov[1][0]);
    cov[1][0] = cov[0][1];
    let added = theta * bath.diffusion_rate();
    cov[0][0] += added;
    cov[1][1] += added;
    Ok(GaussianState { mean, cov })
}

/// 1 + 2n_eff = √(A(A + n̄π/Q + χ²(1 + 2σ_X²))), A = (1 + 2σ_P²)/χ².
pub fn n_eff_closed_form(chi: f64, sigma_p: f64, sigma_x: f64, nbar: f64, quality: f64) -> f64 {
    let a = (1.0 + 2.0 * sigma_p * sigma_p) / (chi * chi);
    let bath = if nbar == 0.0 { 0.0 } else { nbar * std::f64::consts::PI / quality };
    let rhs = (a * (a + bath + chi * chi * (1.0 + 2.0 * sigma_x * sigma_x))).sqrt();
    (rhs - 1.0) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStep {
    pub label: String,
    pub state: GaussianState,
}

/// Record of a two-pulse cooling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolingResult {
    pub steps: Vec<ProtocolStep>,
    pub state: GaussianState,
    /// Final means with the known kicks Ω removed.
    pub compensated_mean: [f64; 2],
    pub n_eff: f64,
    pub n_eff_closed_form: f64,
    pub relative_error: f64,
}

/// Thermal prior → pulse → quarter-period evolution → pulse. The occupation
/// comes from the final purity, which does not depend on the outcomes.
pub fn cool_by_measurement(
    nbar: f64,
    p: &ProbeParams,
    bath: &BathParams,
    p_l1: f64,
    p_l2: f64,
) -> Result<CoolingResult> {
    p.validate()?;
    let run = |probe: &ProbeParams| -> Result<Vec<ProtocolStep>> {
        let prior = thermal_gaussian(nbar)?;
        let first = condition_on_outcome(&prior, probe, p_l1);
        let evolved = free_evolution(&first, std::f64::consts::FRAC_PI_2, bath)?;
        let second = condition_on_outcome(&evolved, probe, p_l2);
        second.validate()?;
        Ok(vec![
            ProtocolStep {
                label: "thermal prior".into(),
                state: prior,
            },
            ProtocolStep {
                label: "first pulse".into(),
                state: first,
            },
            ProtocolStep {
                label: "quarter-period evolution".into(),
                state: evolved,
            },
            ProtocolStep {
                label: "second pulse".into(),
                state: second,
            },
        ])
    };
    let steps = run(p)?;
    let unkicked = run(&ProbeParams { omega: 0.0, ..*p })?;
    let state = steps[3].state;
    let n_eff = state.effective_occupation();
    let closed = n_eff_closed_form(p.chi, p.sigma_p, p.sigma_x, bath.nbar, bath.quality);
    Ok(CoolingResult {
        compensated_mean: unkicked[3].state.mean,
        steps,
        state,
        n_eff,
        n_eff_closed_form: closed,
        relative_error: relative_occupation_error(n_eff, closed),
    })
}

/// |simulated − closed form| / closed form.
pub fn relative_occupation_error(simulated: f64, closed_form: f64) -> f64 {
    (simulated - closed_form).abs() / closed_form.abs()
}
