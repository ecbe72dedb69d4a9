use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::system::TimeGrid;

/// Complex samples on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries {
    pub grid: TimeGrid,
    pub values: Vec<Complex64>,
}

impl ComplexSeries {
    pub fn new(grid: TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_steps {
            return Err(Error::param(
                "values",
                format!("{} samples for a grid of {} points", values.len(), grid.n_steps),
            ));
        }
        Ok(ComplexSeries { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        ComplexSeries { grid, values: vec![Complex64::new(0.0, 0.0); grid.n_steps] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times().collect()
    }

    pub fn abs2(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// max_i |a_i - b_i| / max_i |b_i|
    pub fn rel_linf(&self, reference: &ComplexSeries) -> f64 {
        let scale = reference.max_abs();
        let diff = self
            .values
            .iter()
            .zip(&reference.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}
