//! Sample statistics for rate curves.

/// Mean and normal-approximation 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// `None` when fewer than two samples exist.
    pub ci95: Option<f64>,
    pub samples: usize,
}

/// Two-pass mean and `1.96 s / sqrt(n)`; summation order is the sample
/// order, so results are reproducible bit for bit.
pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary {
            mean: f64::NAN,
            ci95: None,
            samples: 0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ci95 = (n > 1).then(|| {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        1.96 * (var / n as f64).sqrt()
    });
    Summary { mean, ci95, samples: n }
}

/// Standard error of the mean implied by a summary.
pub fn standard_error(s: &Summary) -> Option<f64> {
    s.ci95.map(|c| c / 1.96)
}
