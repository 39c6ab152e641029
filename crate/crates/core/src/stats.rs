//! Order-stable reductions and jackknife standard errors.

use serde::Serialize;

/// Pairwise (cascade) summation. The result depends only on the order of
/// `xs`, never on how the values were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }

    /// `std_error / |value|`, zero when both vanish.
    pub fn relative_se(&self) -> f64 {
        if self.std_error == 0.0 {
            0.0
        } else {
            self.std_error / self.value.abs()
        }
    }
}

/// Sample mean with its jackknife standard error. For the mean the jackknife
/// coincides with `s/√n`.
pub fn mean_with_se(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate::exact(0.0);
    }
    let m = mean(xs);
    if n == 1 {
        return Estimate::exact(m);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&dev) / (n as f64 - 1.0);
    Estimate { value: m, std_error: (var / n as f64).sqrt() }
}

/// Jackknife estimate of `(Σnum / Σden)^{1/p}` from per-sample pairs.
///
/// Returns `None` when the denominator sum is zero.
pub fn jackknife_root_ratio(num: &[f64], den: &[f64], p: f64) -> Option<Estimate> {
    assert_eq!(num.len(), den.len());
    let n = num.len();
    let sn = pairwise_sum(num);
    let sd = pairwise_sum(den);
    if sd <= 0.0 {
        return None;
    }
    let full = (sn / sd).powf(1.0 / p);
    if n < 2 {
        return Some(Estimate::exact(full));
    }
    let loo: Vec<f64> = num
        .iter()
        .zip(den)
        .map(|(a, b)| {
            let d = sd - b;
            if d <= 0.0 {
                full
            } else {
                ((sn - a).max(0.0) / d).powf(1.0 / p)
            }
        })
        .collect();
    let lm = mean(&loo);
    let dev: Vec<f64> = loo.iter().map(|x| (x - lm) * (x - lm)).collect();
    let var = (n as f64 - 1.0) / n as f64 * pairwise_sum(&dev);
    Some(Estimate { value: full, std_error: var.sqrt() })
}
