use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ProbeParams;
use crate::error::{QsrError, Result};
use crate::phasespace::Marginal;

const BISECTION_STEPS: usize = 52;

/// Inverse of a tabulated CDF, interpolated by a monotone (Fritsch–Carlson)
/// piecewise cubic through the trapezoid-integrated density.
#[derive(Debug, Clone)]
pub struct InverseCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
}

impl InverseCdf {
    pub fn new(xs: &[f64], density: &[f64]) -> Result<Self> {
        if xs.len() < 2 || xs.len() != density.len() {
            return Err(QsrError::arg("inverse CDF needs matching xs/density of length >= 2"));
        }
        let mut cdf = Vec::with_capacity(xs.len());
        cdf.push(0.0);
        for i in 1..xs.len() {
            let step = 0.5 * (density[i] + density[i - 1]) * (xs[i] - xs[i - 1]);
            cdf.push(cdf[i - 1] + step);
        }
        let total = cdf[cdf.len() - 1];
        if !(total > 0.0) || !total.is_finite() {
            return Err(QsrError::arg(format!("density cannot be normalized (integral {total})")));
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        let slopes = pchip_slopes(xs, &cdf);
        Ok(Self {
            xs: xs.to_vec(),
            cdf,
            slopes,
        })
    }

    pub fn from_marginal(m: &Marginal) -> Result<Self> {
        Self::new(&m.xs, &m.density)
    }

    /// Interpolated CDF value.
    pub fn cdf_at(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return 1.0;
        }
        let k = self.xs.partition_point(|&v| v <= x) - 1;
        self.hermite(k, x)
    }

    /// x with CDF(x) = u; flat stretches resolve to their midpoint.
    pub fn quantile(&self, u: f64) -> f64 {
        let lo = self.cdf.partition_point(|&c| c < u);
        let hi = self.cdf.partition_point(|&c| c <= u);
        if hi > lo {
            return 0.5 * (self.xs[lo] + self.xs[hi - 1]);
        }
        // cdf[lo - 1] < u < cdf[lo]
        let k = lo - 1;
        let (mut a, mut b) = (self.xs[k], self.xs[k + 1]);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (a + b);
            if self.hermite(k, mid) < u {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }

    fn hermite(&self, k: usize, x: f64) -> f64 {
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.cdf[k]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
            + (-2.0 * t3 + 3.0 * t2) * self.cdf[k + 1]
            + (t3 - t2) * h * self.slopes[k + 1]
    }
}

fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        if delta[k - 1] <= 0.0 || delta[k] <= 0.0 {
            continue;
        }
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
    d
}

/// `count` homodyne outcomes P_L = χX + g with X drawn from `m` and
/// g ~ N(0, (1 + 2σ_P²)/2), from a ChaCha8 stream seeded with `seed`.
pub fn sample_homodyne(m: &Marginal, p: &ProbeParams, count: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_homodyne_with(m, p, count, &mut rng)
}

/// As [`sample_homodyne`], drawing from a caller-supplied generator.
pub fn sample_homodyne_with<R: Rng>(m: &Marginal, p: &ProbeParams, count: usize, rng: &mut R) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(QsrError::arg("sample count must be at least 1"));
    }
    p.validate()?;
    let inverse = InverseCdf::from_marginal(m)?;
    let noise = p.readout_variance().sqrt();
    Ok((0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let g: f64 = rng.sample(StandardNormal);
            p.chi * inverse.quantile(u) + noise * g
        })
        .collect())
}
