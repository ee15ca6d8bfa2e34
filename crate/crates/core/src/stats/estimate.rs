//! Point estimates with batch-means error bars and log-log scaling fits.

use serde::{Deserialize, Serialize};

/// Mean of replica-level samples with a batch-means standard error.
///
/// Replicas are exactly independent, so batching is over replicas; the
/// batch structure keeps the estimator honest when samples are fed in any
/// deterministic order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub estimate: f64,
    pub std_error: f64,
    pub replicas: usize,
    pub batches: usize,
}

impl EstimateWithError {
    pub fn from_samples(samples: &[f64]) -> Self {
        Self::with_batches(samples, 16)
    }

    pub fn with_batches(samples: &[f64], max_batches: usize) -> Self {
        let n = samples.len();
        assert!(n >= 2, "need at least two samples");
        let batches = max_batches.min(n).max(2);
        let mean: f64 = samples.iter().sum::<f64>() / n as f64;
        // Contiguous batches of (nearly) equal size.
        let mut batch_means = Vec::with_capacity(batches);
        let base = n / batches;
        let extra = n % batches;
        let mut idx = 0usize;
        for b in 0..batches {
            let len = base + usize::from(b < extra);
            let sum: f64 = samples[idx..idx + len].iter().sum();
            batch_means.push(sum / len as f64);
            idx += len;
        }
        let bvar = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>()
            / (batches as f64 - 1.0);
        EstimateWithError {
            estimate: mean,
            std_error: (bvar / batches as f64).sqrt(),
            replicas: n,
            batches,
        }
    }

    /// |estimate - target| measured in standard errors.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        if self.std_error == 0.0 {
            if (self.estimate - target).abs() == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.estimate - target).abs() / self.std_error
        }
    }
}

/// Mean and variance helpers.
pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

pub fn variance(samples: &[f64]) -> f64 {
    let m = mean(samples);
    samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (samples.len() as f64 - 1.0)
}

/// Least-squares fit of `log y` against `log x`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFit {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl ScalingFit {
    pub fn log_log(xs: &[f64], ys: &[f64]) -> Self {
        assert_eq!(xs.len(), ys.len());
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(ys)
            .filter(|(&x, &y)| x > 0.0 && y > 0.0)
            .map(|(&x, &y)| (x.ln(), y.ln()))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        let ss_tot: f64 = pts.iter().map(|p| (p.1 - sy / n).powi(2)).sum();
        let ss_res: f64 =
            pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
        let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
        ScalingFit { xs: xs.to_vec(), ys: ys.to_vec(), slope, intercept, r_squared }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn error_bar_shrinks_like_inverse_sqrt_replicas() {
        let mut rng = crate::engine::replica_rng(77, 0);
        let draw = |rng: &mut rand_chacha::ChaCha12Rng, n: usize| -> f64 {
            let samples: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            EstimateWithError::from_samples(&samples).std_error
        };
        let trials = 40;
        let mut small = 0.0;
        let mut large = 0.0;
        for _ in 0..trials {
            small += draw(&mut rng, 250);
            large += draw(&mut rng, 4000);
        }
        let ratio = small / large;
        assert!((ratio - 4.0).abs() < 1.0, "SE ratio {ratio}, expected 4");
    }

    #[test]
    fn exact_slope_on_noiseless_power_law() {
        let xs: Vec<f64> = vec![4.0, 8.0, 16.0, 32.0, 64.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.7 * x.powf(-1.5)).collect();
        let fit = ScalingFit::log_log(&xs, &ys);
        assert!((fit.slope + 1.5).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 3.7f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn sigmas_from_handles_zero_error() {
        let e = EstimateWithError { estimate: 1.0, std_error: 0.0, replicas: 8, batches: 2 };
        assert_eq!(e.sigmas_from(1.0), 0.0);
        assert!(e.sigmas_from(1.1).is_infinite());
    }
}
