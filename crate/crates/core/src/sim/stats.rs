//! Batch-means statistics.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn new(value: f64, std_err: f64) -> Self {
        Estimate { value, std_err }
    }

    /// Distance to `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if self.std_err > 0.0 {
            d / self.std_err
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Accumulates fixed-length sample vectors into consecutive batches.
#[derive(Debug, Clone)]
pub struct BatchAccumulator {
    width: usize,
    batch_len: usize,
    current: Vec<f64>,
    filled: usize,
    batches: Vec<Vec<f64>>,
}

impl BatchAccumulator {
    pub fn new(width: usize, batch_len: usize) -> Self {
        BatchAccumulator {
            width,
            batch_len: batch_len.max(1),
            current: vec![0.0; width],
            filled: 0,
            batches: Vec::new(),
        }
    }

    pub fn push(&mut self, sample: &[f64]) {
        debug_assert_eq!(sample.len(), self.width);
        for (c, s) in self.current.iter_mut().zip(sample) {
            *c += s;
        }
        self.filled += 1;
        if self.filled == self.batch_len {
            let k = self.batch_len as f64;
            let mean = self.current.iter().map(|c| c / k).collect();
            self.batches.push(mean);
            self.current.iter_mut().for_each(|c| *c = 0.0);
            self.filled = 0;
        }
    }

    /// Completed batch means; a trailing partial batch is discarded.
    pub fn into_batches(self) -> Vec<Vec<f64>> {
        self.batches
    }
}

/// Mean and standard error of the mean over rows of `batches`.
pub fn batch_estimates(batches: &[Vec<f64>], width: usize) -> Vec<Estimate> {
    let b = batches.len();
    if b == 0 {
        return vec![Estimate::new(f64::NAN, f64::NAN); width];
    }
    let mut out = Vec::with_capacity(width);
    for k in 0..width {
        let mean = batches.iter().map(|row| row[k]).sum::<f64>() / b as f64;
        let se = if b > 1 {
            let var = batches
                .iter()
                .map(|row| (row[k] - mean).powi(2))
                .sum::<f64>()
                / (b - 1) as f64;
            (var / b as f64).sqrt()
        } else {
            0.0
        };
        out.push(Estimate::new(mean, se));
    }
    out
}
