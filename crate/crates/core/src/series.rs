use serde::{Deserialize, Serialize};

use crate::hilbert::C64;

/// A sampled complex observable.
#[derive(Debug, Clone)]
pub struct ComplexSeries {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
}

impl ComplexSeries {
    pub fn new(times: Vec<f64>, values: Vec<C64>) -> Self {
        assert_eq!(times.len(), values.len());
        Self { times, values }
    }

    pub fn magnitudes(&self) -> TimeSeries {
        TimeSeries::new(
            self.times.clone(),
            self.values.iter().map(|v| v.norm()).collect(),
        )
    }
}

/// A sampled scalar observable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(times.len(), values.len());
        Self { times, values }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Value at the sample closest to `t`.
    pub fn value_near(&self, t: f64) -> Option<f64> {
        self.times
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - t).abs().partial_cmp(&(*b - t).abs()).unwrap())
            .map(|(i, _)| self.values[i])
    }
}
