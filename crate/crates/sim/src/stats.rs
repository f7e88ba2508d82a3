use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Mean of paired differences `treatment - baseline` with a two-sided 95%
/// Student-t interval. The interval is absent below two pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedDifference {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub ci95: Option<(f64, f64)>,
}

impl PairedDifference {
    pub fn new(treatment: &[f64], baseline: &[f64]) -> PairedDifference {
        assert_eq!(treatment.len(), baseline.len(), "paired samples");
        let diffs: Vec<f64> = treatment.iter().zip(baseline).map(|(a, b)| a - b).collect();
        let n = diffs.len();
        let mean = mean(&diffs);
        if n < 2 {
            return PairedDifference {
                n,
                mean,
                std_dev: 0.0,
                ci95: None,
            };
        }
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std_dev = var.sqrt();
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        let half = t * std_dev / (n as f64).sqrt();
        PairedDifference {
            n,
            mean,
            std_dev,
            ci95: Some((mean - half, mean + half)),
        }
    }

    /// Whether the interval covers zero. Without an interval nothing is excluded.
    pub fn includes_zero(&self) -> bool {
        self.ci95.is_none_or(|(lo, hi)| lo <= 0.0 && 0.0 <= hi)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
