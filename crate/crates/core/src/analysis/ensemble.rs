use serde::Serialize;

use crate::quad::pairwise_sum;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Per-time-point Monte Carlo means and 95% half-widths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub count: usize,
    pub mean: Vec<f64>,
    pub half_width: Vec<f64>,
}

impl EnsembleStats {
    /// `samples[s][j]` is the value of path `s` at time point `j`; rows
    /// must have equal length.
    pub fn from_samples(samples: &[Vec<f64>]) -> Self {
        let count = samples.len();
        let points = samples.first().map_or(0, Vec::len);
        let mut mean = Vec::with_capacity(points);
        let mut half_width = Vec::with_capacity(points);
        for j in 0..points {
            let column: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            let (m, hw) = mean_and_half_width(&column);
            mean.push(m);
            half_width.push(hw);
        }
        EnsembleStats {
            count,
            mean,
            half_width,
        }
    }

    pub fn upper(&self, j: usize) -> f64 {
        self.mean[j] + self.half_width[j]
    }

    pub fn lower(&self, j: usize) -> f64 {
        self.mean[j] - self.half_width[j]
    }
}

/// Sample mean and `Z95 * s / sqrt(n)`; the half-width is 0 for `n < 2`.
pub fn mean_and_half_width(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, Z95 * (var / n as f64).sqrt())
}

/// Order-preserving map over seeds, in parallel when the feature is on.
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Trapezoid rule over possibly uneven abscissae.
pub fn trapezoid(t: &[f64], v: &[f64]) -> f64 {
    let parts: Vec<f64> = t
        .windows(2)
        .zip(v.windows(2))
        .map(|(tw, vw)| 0.5 * (tw[1] - tw[0]) * (vw[0] + vw[1]))
        .collect();
    pairwise_sum(&parts)
}
