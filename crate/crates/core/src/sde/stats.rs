//! One-pass moment accumulators with exact pairwise merging.

use nalgebra::{DMatrix, DVector};

/// Welford accumulator for a scalar.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScalarMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl ScalarMoments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. combination of two disjoint samples.
    pub fn merge(&mut self, other: &ScalarMoments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * w;
        self.mean += delta * w;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; 0 with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Multivariate Welford accumulator for mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorMoments {
    count: u64,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl VectorMoments {
    pub fn new(dim: usize) -> Self {
        Self { count: 0, mean: DVector::zeros(dim), m2: DMatrix::zeros(dim, dim) }
    }

    pub fn push(&mut self, x: &DVector<f64>) {
        self.count += 1;
        let delta = x - &self.mean;
        self.mean.axpy(1.0 / self.count as f64, &delta, 1.0);
        let delta_after = x - &self.mean;
        self.m2.ger(1.0, &delta, &delta_after, 1.0);
    }

    pub fn merge(&mut self, other: &VectorMoments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = &other.mean - &self.mean;
        let w = other.count as f64 / n;
        self.m2 += &other.m2;
        self.m2.ger(self.count as f64 * w, &delta, &delta, 1.0);
        self.mean.axpy(w, &delta, 1.0);
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Unbiased sample covariance, symmetrized.
    pub fn covariance(&self) -> DMatrix<f64> {
        if self.count < 2 {
            return DMatrix::zeros(self.mean.len(), self.mean.len());
        }
        let c = &self.m2 / (self.count - 1) as f64;
        (&c + c.transpose()) * 0.5
    }
}
