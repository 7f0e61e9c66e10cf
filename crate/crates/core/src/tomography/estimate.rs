use serde::{Deserialize, Serialize};

use crate::error::{QsrError, Result};
use crate::phasespace::Marginal;
use crate::probe::ProbeParams;

pub const MIN_SAMPLES: usize = 100;
const MAX_BINS: usize = 8192;

/// Density estimator for scaled homodyne outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Histogram with Freedman–Diaconis bin width 2·IQR·n^{−1/3}.
    #[default]
    Histogram,
    /// Gaussian kernel density with Silverman bandwidth
    /// 0.9·min(σ, IQR/1.34)·n^{−1/5}.
    Kde,
}

/// Density of P_L/χ at angle θ. This is the true marginal smeared by the
/// readout noise; the smearing is kept, not removed.
pub fn estimate_scaled_marginal(
    samples: &[f64],
    theta: f64,
    probe: &ProbeParams,
    estimator: Estimator,
) -> Result<Marginal> {
    if samples.len() < MIN_SAMPLES {
        return Err(QsrError::arg(format!(
            "need at least {MIN_SAMPLES} samples per angle, got {}",
            samples.len()
        )));
    }
    probe.validate()?;
    let mut ys: Vec<f64> = samples.iter().map(|v| v / probe.chi).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(QsrError::arg("samples must be finite"));
    }
    ys.sort_by(f64::total_cmp);
    let (xs, density) = match estimator {
        Estimator::Histogram => histogram(&ys),
        Estimator::Kde => kde(&ys),
    };
    Marginal::new(theta, xs, density)
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn spread(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = (sorted.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    (sd, iqr)
}

/// Width used when every sample is identical.
fn degenerate_width(y: f64) -> f64 {
    1e-3 * y.abs().max(1.0)
}

/// Bin densities tabulated at bin centres, padded with a zero node on each
/// side so the trapezoid integral equals the histogram mass.
fn histogram(sorted: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = sorted.len();
    let lo = sorted[0];
    let range = sorted[n - 1] - lo;
    let (_, iqr) = spread(sorted);
    let cube = (n as f64).cbrt();
    let mut width = if iqr > 0.0 { 2.0 * iqr / cube } else { range / cube };
    let (start, bins) = if range == 0.0 || width == 0.0 {
        width = degenerate_width(lo);
        (lo - 0.5 * width, 1)
    } else {
        let mut bins = (range / width).ceil() as usize;
        if bins > MAX_BINS {
            bins = MAX_BINS;
            width = range / bins as f64;
        }
        (lo, bins.max(1))
    };
    let mut counts = vec![0usize; bins];
    for &y in sorted {
        let k = (((y - start) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let norm = n as f64 * width;
    let mut xs = Vec::with_capacity(bins + 2);
    let mut density = Vec::with_capacity(bins + 2);
    xs.push(start - 0.5 * width);
    density.push(0.0);
    for (k, &c) in counts.iter().enumerate() {
        xs.push(start + (k as f64 + 0.5) * width);
        density.push(c as f64 / norm);
    }
    xs.push(start + (bins as f64 + 0.5) * width);
    density.push(0.0);
    (xs, density)
}

/// Gaussian KDE evaluated by linear binning onto a grid of spacing h/4 and
/// a discrete kernel sum truncated at five bandwidths.
fn kde(sorted: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = sorted.len();
    let (sd, iqr) = spread(sorted);
    let scale = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(scale > 0.0) {
        return histogram(sorted);
    }
    let h = 0.9 * scale * (n as f64).powf(-0.2);
    let lo = sorted[0] - 5.0 * h;
    let hi = sorted[n - 1] + 5.0 * h;
    let mut dx = h / 4.0;
    let mut count = ((hi - lo) / dx).ceil() as usize + 1;
    if count > MAX_BINS {
        count = MAX_BINS;
        dx = (hi - lo) / (count - 1) as f64;
    }
    let mut mass = vec![0.0; count];
    for &y in sorted {
        let f = (y - lo) / dx;
        let k = (f.floor() as usize).min(count - 2);
        let t = f - k as f64;
        mass[k] += 1.0 - t;
        mass[k + 1] += t;
    }
    let reach = (5.0 * h / dx).ceil() as isize;
    let kernel: Vec<f64> = (-reach..=reach)
        .map(|j| {
            let z = j as f64 * dx / h;
            (-0.5 * z * z).exp()
        })
        .collect();
    let mut density = vec![0.0; count];
    for (i, slot) in density.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (kj, w) in kernel.iter().enumerate() {
            let src = i as isize + kj as isize - reach;
            if src >= 0 && (src as usize) < count {
                acc += w * mass[src as usize];
            }
        }
        *slot = acc;
    }
    let xs: Vec<f64> = (0..count).map(|i| lo + i as f64 * dx).collect();
    let total = crate::special::trapezoid(&xs, &density);
    density.iter_mut().for_each(|d| *d /= total);
    (xs, density)
}
