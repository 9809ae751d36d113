//! Saltus (jump) decomposition ρ = ρ_s + ρ_r of invariant densities.

mod jumps;

pub use jumps::{
    jump_propagation, jump_sums_markov, twisted_alpha, weighted_jump, PropagationCheck,
    TwistedAlpha, WeightedJump,
};

use crate::error::{Error, Result};
use crate::transfer::{
    GridFunction, HybridBvFunction, Jump, PiecewiseConstantDensity, UlamDensity,
};
use crate::unimodal::CriticalOrbitInfo;
use serde::{Deserialize, Serialize};

/// Jump of ρ at orbit point c_k: right limit minus left limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitJump {
    pub k: usize,
    pub location: f64,
    pub amplitude: f64,
}

/// Geometric bound Σ_{k>j}|s_k| ≤ C ξ^j fitted on the computed jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub c: f64,
    pub xi: f64,
}

impl TailFit {
    pub fn bound(&self, j: usize) -> f64 {
        self.c * self.xi.powi(j as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaltusDecomposition {
    pub jumps: Vec<OrbitJump>,
    pub regular: GridFunction,
    pub preperiodic: Option<(usize, usize)>,
    /// Present for truncated (non-Markov) orbits.
    pub tail: Option<TailFit>,
    /// Ulam path: first orbit index whose jump fell below the noise floor.
    pub truncated_at: Option<usize>,
}

/// What to do when an Ulam jump estimate is under the noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoisePolicy {
    Error,
    Truncate,
}

/// Ulam one-sided windows: bins [c − 5h, c − h) and (c + h, c + 5h].
pub const WINDOW_NEAR: usize = 1;
pub const WINDOW_FAR: usize = 5;

impl SaltusDecomposition {
    pub fn amplitudes(&self) -> Vec<f64> {
        self.jumps.iter().map(|j| j.amplitude).collect()
    }

    pub fn amplitude(&self, k: usize) -> f64 {
        self.jumps
            .iter()
            .find(|j| j.k == k)
            .map(|j| j.amplitude)
            .unwrap_or(0.0)
    }

    pub fn sum_abs(&self) -> f64 {
        self.jumps.iter().map(|j| j.amplitude.abs()).sum()
    }

    /// ρ_s = Σ s_k H_{c_k} on the grid of the regular part.
    pub fn singular_part(&self) -> HybridBvFunction {
        HybridBvFunction::from_jumps(
            self.regular.lo,
            self.regular.hi,
            self.regular.cells(),
            self.jumps
                .iter()
                .map(|j| Jump { location: j.location, amplitude: j.amplitude })
                .collect(),
        )
    }

    /// ρ_s + ρ_r.
    pub fn reconstruct(&self) -> HybridBvFunction {
        HybridBvFunction::new(
            self.regular.clone(),
            self.singular_part().jumps().to_vec(),
        )
    }

    /// ρ_r on a uniform grid over [lo, hi], resampled if needed.
    pub fn regular_on(&self, lo: f64, hi: f64, cells: usize) -> GridFunction {
        let same = self.regular.lo == lo && self.regular.hi == hi && self.regular.cells() == cells;
        if same {
            self.regular.clone()
        } else {
            self.regular.resample(lo, hi, cells)
        }
    }

    /// ρ_s + ρ_r on a uniform grid over [lo, hi].
    pub fn density_on(&self, lo: f64, hi: f64, cells: usize) -> HybridBvFunction {
        HybridBvFunction::new(
            self.regular_on(lo, hi, cells),
            self.jumps
                .iter()
                .map(|j| Jump { location: j.location, amplitude: j.amplitude })
                .collect(),
        )
    }

    pub fn regular_value(&self, x: f64) -> f64 {
        self.regular.eval(x)
    }

    /// Largest jump between neighbouring samples of ρ_r, ignoring samples
    /// within `skip` cells of an orbit jump.
    pub fn regular_max_gap(&self, skip: usize) -> f64 {
        let h = self.regular.h();
        let v = &self.regular.values;
        (0..v.len() - 1)
            .filter(|&i| {
                let (a, b) = (self.regular.node(i), self.regular.node(i + 1));
                !self.jumps.iter().any(|j| {
                    j.location > a - skip as f64 * h && j.location < b + skip as f64 * h
                })
            })
            .map(|i| (v[i + 1] - v[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Fits log Σ_{k>j}|s_k| ≈ log C + j log ξ by least squares over the
/// computed jumps; C is then raised so the bound holds at every j.
pub fn fit_tail(amplitudes: &[f64]) -> Option<TailFit> {
    let n = amplitudes.len();
    let mut tails = vec![0.0; n + 1];
    for j in (0..n).rev() {
        tails[j] = tails[j + 1] + amplitudes[j].abs();
    }
    let pts: Vec<(f64, f64)> = (1..n)
        .filter(|&j| tails[j] > 0.0)
        .map(|j| (j as f64, tails[j].ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let xi = slope.exp().min(1.0 - 1e-12);
    let c = pts
        .iter()
        .map(|&(j, ly)| (ly - j * xi.ln()).exp())
        .fold(tails[0], f64::max);
    Some(TailFit { c, xi })
}

/// Decomposition of an exact step density: every orbit point is a breakpoint
/// and ρ_r ≡ 0.
pub fn saltus_from_exact(
    d: &PiecewiseConstantDensity,
    orbit: &CriticalOrbitInfo,
    lo: f64,
    hi: f64,
    cells: usize,
) -> Result<SaltusDecomposition> {
    let Some(pp) = orbit.preperiodic else {
        return Err(Error::NotMarkov);
    };
    let by_k = d.jumps();
    let jumps = (1..=orbit.n_points())
        .map(|k| {
            let (_, x, s) = by_k
                .iter()
                .copied()
                .find(|&(kk, _, _)| kk == k)
                .ok_or_else(|| {
                    Error::UnsupportedInput(format!("c_{k} is not a breakpoint of the density"))
                })?;
            Ok(OrbitJump { k, location: x, amplitude: s })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SaltusDecomposition {
        jumps,
        regular: GridFunction::zeros(lo, hi, cells),
        preperiodic: Some(pp),
        tail: None,
        truncated_at: None,
    })
}

/// Decomposition of a hybrid density: jumps sitting on c_1..c_depth are the
/// saltus, everything else stays in the regular part.
pub fn saltus_from_hybrid(
    rho: &HybridBvFunction,
    orbit: &CriticalOrbitInfo,
    depth: usize,
) -> Result<SaltusDecomposition> {
    let n = if orbit.is_markov() { orbit.n_points() } else { depth.min(orbit.orbit.len()) };
    let tol = 1e-10;
    let mut used = vec![false; rho.jumps().len()];
    let mut jumps = Vec::with_capacity(n);
    for k in 1..=n {
        let x = orbit.point(k);
        let mut s = 0.0;
        for (i, j) in rho.jumps().iter().enumerate() {
            if !used[i] && (j.location - x).abs() <= tol {
                s += j.amplitude;
                used[i] = true;
            }
        }
        jumps.push(OrbitJump { k, location: x, amplitude: s });
    }
    // Off-orbit jumps would break continuity of ρ_r; only round-off is allowed.
    let stray: f64 = rho
        .jumps()
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(j, _)| j.amplitude.abs())
        .sum();
    if stray > 1e-8 {
        return Err(Error::UnsupportedInput(format!(
            "density has jumps of total size {stray:e} away from c_1..c_{n}"
        )));
    }
    let tail = if orbit.is_markov() {
        None
    } else {
        fit_tail(&jumps.iter().map(|j| j.amplitude).collect::<Vec<_>>())
    };
    Ok(SaltusDecomposition {
        jumps,
        regular: rho.regular.clone(),
        preperiodic: orbit.preperiodic,
        tail,
        truncated_at: None,
    })
}

/// Decomposition of an Ulam density with one-sided window means.
pub fn saltus_from_ulam(
    d: &UlamDensity,
    orbit: &CriticalOrbitInfo,
    depth: usize,
    policy: NoisePolicy,
) -> Result<SaltusDecomposition> {
    let n = if orbit.is_markov() { orbit.n_points() } else { depth.min(orbit.orbit.len()) };
    let h = d.bin_width();
    let value = |i: isize| -> f64 {
        if i < 0 || i >= d.bins as isize {
            0.0
        } else {
            d.values[i as usize]
        }
    };
    let stats = |idx: &[isize]| -> (f64, f64) {
        let v: Vec<f64> = idx.iter().map(|&i| value(i)).collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
        (m, var.sqrt())
    };
    let mut jumps = Vec::with_capacity(n);
    let mut truncated_at = None;
    for k in 1..=n {
        let x = orbit.point(k);
        let b = ((x - d.lo) / h).floor() as isize;
        let (near, far) = (WINDOW_NEAR as isize, WINDOW_FAR as isize);
        let left: Vec<isize> = (b - far..b - near).collect();
        let right: Vec<isize> = (b + near + 1..=b + far).collect();
        let (ml, sl) = stats(&left);
        let (mr, sr) = stats(&right);
        let s = mr - ml;
        let floor = sl + sr + 1e-12;
        if s.abs() < floor {
            match policy {
                NoisePolicy::Error => {
                    return Err(Error::JumpBelowNoise { k, estimate: s, floor });
                }
                NoisePolicy::Truncate => {
                    truncated_at = Some(k);
                    break;
                }
            }
        }
        jumps.push(OrbitJump { k, location: x, amplitude: s });
    }
    // ρ_r sampled at bin centres.
    let lo = d.lo + 0.5 * h;
    let hi = d.hi - 0.5 * h;
    let values = (0..d.bins)
        .map(|i| {
            let x = d.center(i);
            let sing: f64 = jumps
                .iter()
                .map(|j| j.amplitude * crate::transfer::heaviside(j.location, x))
                .sum();
            d.values[i] - sing
        })
        .collect();
    let tail = if orbit.is_markov() {
        None
    } else {
        fit_tail(&jumps.iter().map(|j| j.amplitude).collect::<Vec<_>>())
    };
    Ok(SaltusDecomposition {
        jumps,
        regular: GridFunction::new(lo, hi, values),
        preperiodic: orbit.preperiodic,
        tail,
        truncated_at,
    })
}
