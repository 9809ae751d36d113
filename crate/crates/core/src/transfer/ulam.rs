use crate::error::{Error, Result};
use crate::smooth::SmoothFn;
use crate::unimodal::UnimodalMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Sub-pieces per bin for maps that are not piecewise linear.
pub const GENERIC_PIECES: usize = 64;

/// Row-stochastic bin transition matrix in CSR form: row i holds the
/// fractions of bin i's mass landing in each bin.
#[derive(Debug, Clone)]
pub struct UlamOperator {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl UlamOperator {
    pub fn new(f: &UnimodalMap, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::UnsupportedInput("Ulam needs at least two bins".into()));
        }
        let (lo, hi) = (f.a0(), f.b());
        let h = (hi - lo) / bins as f64;
        let pieces = if f.is_piecewise_linear() { 1 } else { GENERIC_PIECES };
        let rows: Vec<Vec<(usize, f64)>> = (0..bins)
            .into_par_iter()
            .map(|i| {
                let x0 = lo + i as f64 * h;
                let x1 = if i + 1 == bins { hi } else { lo + (i + 1) as f64 * h };
                row(f, x0, x1, pieces, lo, h, bins)
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(bins + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in rows {
            for (j, v) in r {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(UlamOperator { lo, hi, bins, row_ptr, cols, vals })
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Push-forward of bin densities.
    pub fn apply(&self, rho: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.bins];
        for (i, &r) in rho.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.cols[k]] += r * self.vals[k];
            }
        }
        out
    }
}

/// Distributes the mass of [x0, x1] over the bins hit by its image, treating
/// each sub-piece as mapped linearly onto its image interval.
fn row(
    f: &UnimodalMap,
    x0: f64,
    x1: f64,
    pieces: usize,
    lo: f64,
    h: f64,
    bins: usize,
) -> Vec<(usize, f64)> {
    let c = f.c();
    let len = x1 - x0;
    let mut segs = Vec::with_capacity(2);
    if x0 < c && c < x1 {
        segs.push((x0, c));
        segs.push((c, x1));
    } else {
        segs.push((x0, x1));
    }
    let mut acc: Vec<(usize, f64)> = Vec::new();
    for (s0, s1) in segs {
        let step = (s1 - s0) / pieces as f64;
        for p in 0..pieces {
            let a = s0 + p as f64 * step;
            let b = if p + 1 == pieces { s1 } else { s0 + (p + 1) as f64 * step };
            let mass = (b - a) / len;
            let (ya, yb) = (f.eval(a), f.eval(b));
            let (y0, y1) = if ya <= yb { (ya, yb) } else { (yb, ya) };
            spread(&mut acc, y0, y1, mass, lo, h, bins);
        }
    }
    acc.sort_by_key(|p| p.0);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(acc.len());
    for (j, v) in acc {
        match merged.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => merged.push((j, v)),
        }
    }
    merged
}

fn spread(acc: &mut Vec<(usize, f64)>, y0: f64, y1: f64, mass: f64, lo: f64, h: f64, bins: usize) {
    let clamp = |y: f64| (((y - lo) / h).floor().max(0.0) as usize).min(bins - 1);
    let (j0, j1) = (clamp(y0), clamp(y1));
    let width = y1 - y0;
    if j0 == j1 || width <= 0.0 {
        acc.push((j0, mass));
        return;
    }
    for j in j0..=j1 {
        let b0 = lo + j as f64 * h;
        let b1 = b0 + h;
        let lo_ = if j == j0 { y0 } else { b0 };
        let hi_ = if j == j1 { y1 } else { b1 };
        let frac = (hi_ - lo_).max(0.0) / width;
        if frac > 0.0 {
            acc.push((j, mass * frac));
        }
    }
}

/// Piecewise-constant invariant density on equal bins over [a0, b].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UlamDensity {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Geometric mean of the last residual ratios, an estimate of the
    /// contraction on the complement of the fixed density.
    pub contraction: f64,
}

impl UlamDensity {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn bin_of(&self, x: f64) -> usize {
        (((x - self.lo) / self.bin_width()).floor().max(0.0) as usize).min(self.bins - 1)
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.bin_width()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            self.values[self.bin_of(x)]
        }
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.bin_width()
    }

    /// ∫ρφ dx, exact per bin for the smooth observable.
    pub fn integrate(&self, phi: &SmoothFn) -> f64 {
        let h = self.bin_width();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let a = self.lo + i as f64 * h;
                v * phi.integral(a, a + h)
            })
            .sum()
    }

    /// Mean value over [x0, x1] (bins fully inside).
    pub fn mean_over(&self, x0: f64, x1: f64) -> Option<f64> {
        let h = self.bin_width();
        let i0 = ((x0 - self.lo) / h).ceil().max(0.0) as usize;
        let i1 = (((x1 - self.lo) / h).floor().max(0.0) as usize).min(self.bins);
        if i1 <= i0 {
            return None;
        }
        Some(self.values[i0..i1].iter().sum::<f64>() / (i1 - i0) as f64)
    }

    pub fn l1_distance(&self, other: &UlamDensity) -> f64 {
        assert_eq!(self.bins, other.bins);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.bin_width()
    }
}

/// Invariant density by lazy power iteration ρ ← (ρ + Pρ)/2 from the uniform
/// density, stopping when |Pρ − ρ|_1 ≤ tol.
pub fn invariant_density_ulam(
    f: &UnimodalMap,
    bins: usize,
    max_iters: usize,
    tol: f64,
) -> Result<UlamDensity> {
    let op = UlamOperator::new(f, bins)?;
    ulam_power_iteration(&op, max_iters, tol)
}

pub fn ulam_power_iteration(op: &UlamOperator, max_iters: usize, tol: f64) -> Result<UlamDensity> {
    let h = op.bin_width();
    let n = op.bins;
    let mut rho = vec![1.0 / (op.hi - op.lo); n];
    let mut history: Vec<f64> = Vec::new();
    for it in 1..=max_iters {
        let p = op.apply(&rho);
        let res: f64 = p.iter().zip(&rho).map(|(a, b)| (a - b).abs()).sum::<f64>() * h;
        history.push(res);
        if res <= tol {
            let mass = rho.iter().sum::<f64>() * h;
            let values = rho.iter().map(|v| (v / mass).max(0.0)).collect();
            return Ok(UlamDensity {
                lo: op.lo,
                hi: op.hi,
                bins: n,
                values,
                iterations: it,
                residual: res,
                contraction: contraction(&history),
            });
        }
        for (r, q) in rho.iter_mut().zip(&p) {
            *r = 0.5 * (*r + q);
        }
    }
    Err(Error::NoConvergence(format!(
        "Ulam power iteration residual {:e} after {max_iters} iterations (tol {tol:e})",
        history.last().copied().unwrap_or(f64::NAN)
    )))
}

fn contraction(history: &[f64]) -> f64 {
    let pos: Vec<f64> = history.iter().copied().filter(|&r| r > 0.0).collect();
    if pos.len() < 2 {
        return 0.0;
    }
    let k = pos.len().min(11);
    let tail = &pos[pos.len() - k..];
    (tail[k - 1] / tail[0]).powf(1.0 / (k - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_stochastic() {
        let f = UnimodalMap::tent(1.7).unwrap();
        let op = UlamOperator::new(&f, 97).unwrap();
        let ones = op.apply(&[1.0; 97]);
        assert!((ones.iter().sum::<f64>() - 97.0).abs() < 1e-10);
    }
}
