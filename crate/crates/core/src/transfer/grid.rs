use serde::{Deserialize, Serialize};

/// Node values of a piecewise-linear function on a uniform grid over
/// [lo, hi], extended by constants outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Self {
        assert!(hi > lo && values.len() >= 2, "grid needs two nodes on a proper interval");
        GridFunction { lo, hi, values }
    }

    pub fn zeros(lo: f64, hi: f64, cells: usize) -> Self {
        Self::new(lo, hi, vec![0.0; cells + 1])
    }

    pub fn from_fn(lo: f64, hi: f64, cells: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = (hi - lo) / cells as f64;
        Self::new(lo, hi, (0..=cells).map(|i| f(lo + i as f64 * h)).collect())
    }

    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / self.cells() as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.cells() {
            self.hi
        } else {
            self.lo + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.cells()).map(|i| self.node(i)).collect()
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.values.len() == other.values.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.lo {
            return self.values[0];
        }
        if x >= self.hi {
            return self.values[self.cells()];
        }
        let s = (x - self.lo) / self.h();
        let i = (s.floor() as usize).min(self.cells() - 1);
        let t = s - i as f64;
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    pub fn variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_adjacent_gap(&self) -> f64 {
        self.values
            .windows(2)
            .fold(0.0, |m, w| m.max((w[1] - w[0]).abs()))
    }

    /// Exact integral of the interpolant over [lo, hi].
    pub fn integral(&self) -> f64 {
        let s: f64 = self.values.windows(2).map(|w| w[0] + w[1]).sum();
        0.5 * s * self.h()
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.node(i), v))
            .collect();
        GridFunction::new(self.lo, self.hi, values)
    }

    /// Finite-difference derivative: centered inside, one-sided at the ends.
    pub fn derivative(&self) -> GridFunction {
        let n = self.cells();
        let h = self.h();
        let v = &self.values;
        let values = (0..=n)
            .map(|i| {
                if i == 0 {
                    (v[1] - v[0]) / h
                } else if i == n {
                    (v[n] - v[n - 1]) / h
                } else {
                    (v[i + 1] - v[i - 1]) / (2.0 * h)
                }
            })
            .collect();
        GridFunction::new(self.lo, self.hi, values)
    }

    /// Resamples onto another uniform grid by interpolation.
    pub fn resample(&self, lo: f64, hi: f64, cells: usize) -> GridFunction {
        GridFunction::from_fn(lo, hi, cells, |x| self.eval(x))
    }
}
