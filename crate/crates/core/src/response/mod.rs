//! Response function R(t) = ∫φρ_t dx, modulus-of-continuity scans, the two
//! non-Lipschitz counterexample families and the finite-difference experiment.

mod tables;

pub use tables::{
    counterexample_one, counterexample_one_observable, counterexample_two,
    counterexample_two_observable, lambda_k_plateaus, nu_ell, nu_ell_plateaus,
    CounterexampleRow, CounterexampleTable, LambdaKPlateaus, NuEllPlateaus,
};

use crate::error::{Error, Result};
use crate::saltus::saltus_from_exact;
use crate::smooth::SmoothFn;
use crate::susceptibility::{coefficients_split, markov_extension, richardson, RESIDUE_NODES};
use crate::transfer::{
    exact_from_orbit, invariant_density_ulam, PiecewiseConstantDensity, UlamDensity,
    DEFAULT_MAX_ITERS,
};
use crate::unimodal::{critical_orbit, MapKind, Perturbation, UnimodalMap, REVISIT_TOL};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Residual target for Ulam power iterations used by the response routines.
pub const ULAM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    /// Exact step density when f_t is a preperiodic tent map, Ulam otherwise.
    Auto,
    Ulam,
}

/// An invariant density from either solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Exact(PiecewiseConstantDensity),
    Ulam(UlamDensity),
}

impl Density {
    pub fn integrate(&self, phi: &SmoothFn) -> f64 {
        match self {
            Density::Exact(d) => d.integrate(phi),
            Density::Ulam(d) => d.integrate(phi),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Density::Exact(_))
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Density::Exact(d) => d.total_mass(),
            Density::Ulam(d) => d.integral(),
        }
    }

    /// Mean over [x0, x1].
    fn mean_over(&self, x0: f64, x1: f64) -> f64 {
        match self {
            Density::Exact(d) => {
                let b = &d.breakpoints;
                let mut acc = 0.0;
                for (i, v) in d.plateaus.iter().enumerate() {
                    let lo = b[i].max(x0);
                    let hi = b[i + 1].min(x1);
                    if hi > lo {
                        acc += v * (hi - lo);
                    }
                }
                acc / (x1 - x0)
            }
            Density::Ulam(d) => {
                let h = d.bin_width();
                let mut acc = 0.0;
                let i0 = d.bin_of(x0);
                let i1 = d.bin_of(x1);
                for i in i0..=i1 {
                    let a = d.lo + i as f64 * h;
                    let lo = a.max(x0);
                    let hi = (a + h).min(x1);
                    if hi > lo {
                        acc += d.values[i] * (hi - lo);
                    }
                }
                acc / (x1 - x0)
            }
        }
    }

    /// ∫|ρ − σ| dx. Exact for two step densities and for two Ulam densities
    /// on the same bins; otherwise both are averaged over the finer set of bins.
    pub fn l1_distance(&self, other: &Density) -> f64 {
        match (self, other) {
            (Density::Exact(a), Density::Exact(b)) => a.l1_distance(b),
            (Density::Ulam(a), Density::Ulam(b)) if a.bins == b.bins => a.l1_distance(b),
            _ => {
                let bins = [self, other]
                    .iter()
                    .filter_map(|d| match d {
                        Density::Ulam(u) => Some(u.bins),
                        Density::Exact(_) => None,
                    })
                    .max()
                    .unwrap_or(1 << 14);
                let h = 1.0 / bins as f64;
                (0..bins)
                    .map(|i| {
                        let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
                        (self.mean_over(x0, x1) - other.mean_over(x0, x1)).abs()
                    })
                    .sum::<f64>()
                    * h
            }
        }
    }
}

/// f_t = g_λ + tX∘g_λ for the tent map f = g_λ.
pub fn perturbed_map(f: &UnimodalMap, x: &Perturbation, t: f64) -> Result<UnimodalMap> {
    let MapKind::Tent { slope } = f.kind() else {
        return Err(Error::UnsupportedInput(
            "response routines perturb a tent map".into(),
        ));
    };
    if t == 0.0 || x.is_zero() {
        return Ok(f.clone());
    }
    UnimodalMap::perturbed(*slope, x.clone(), t)
}

/// Invariant density of f_t.
pub fn response_density(
    f: &UnimodalMap,
    x: &Perturbation,
    t: f64,
    bins: usize,
    method: DensityMethod,
) -> Result<Density> {
    let ft = perturbed_map(f, x, t)?;
    if method == DensityMethod::Auto {
        if let Some(slope) = ft.tent_slope() {
            let g = UnimodalMap::tent(slope)?;
            if let Ok(o) = critical_orbit(&g, 4096, REVISIT_TOL) {
                if o.is_markov() {
                    if let Ok(d) = exact_from_orbit(&g, &o) {
                        return Ok(Density::Exact(d));
                    }
                }
            }
        }
    }
    invariant_density_ulam(&ft, bins, DEFAULT_MAX_ITERS, ULAM_TOL).map(Density::Ulam)
}

/// R(t) = ∫φρ_t dx.
pub fn response_value(
    f: &UnimodalMap,
    x: &Perturbation,
    t: f64,
    phi: &SmoothFn,
    bins: usize,
) -> Result<f64> {
    response_value_with(f, x, t, phi, bins, DensityMethod::Auto)
}

pub fn response_value_with(
    f: &UnimodalMap,
    x: &Perturbation,
    t: f64,
    phi: &SmoothFn,
    bins: usize,
    method: DensityMethod,
) -> Result<f64> {
    Ok(response_density(f, x, t, bins, method)?.integrate(phi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseScan {
    pub t: Vec<f64>,
    pub response: Vec<f64>,
    pub reference: f64,
    pub l1_distance: Vec<f64>,
    pub exact: Vec<bool>,
    /// Least-squares slope of log|ρ_t − ρ_0|_1 against log|t|.
    pub l1_exponent: Option<f64>,
    /// Least-squares slope of log|R(t) − R(0)| against log|t|.
    pub response_exponent: Option<f64>,
    /// |ρ_t − ρ_0|_1 / (|t| ln(1/|t|)).
    /// Undefined at t = 0 and for |t| ≥ 1.
    pub tlogt_ratio: Vec<Option<f64>>,
}

fn log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(t, v)| *t != 0.0 && *v > 0.0)
        .map(|(t, v)| (t.abs().ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let den = m * sxx - sx * sx;
    (den.abs() > 0.0).then(|| (m * sxy - sx * sy) / den)
}

/// R(t) and |ρ_t − ρ_0|_1 over a list of parameters, rows in parallel.
pub fn response_scan(
    f: &UnimodalMap,
    x: &Perturbation,
    phi: &SmoothFn,
    ts: &[f64],
    bins: usize,
    method: DensityMethod,
) -> Result<ResponseScan> {
    let rho0 = response_density(f, x, 0.0, bins, method)?;
    let reference = rho0.integrate(phi);
    let rows: Vec<(f64, f64, bool)> = ts
        .par_iter()
        .map(|&t| {
            let d = response_density(f, x, t, bins, method)?;
            Ok((d.integrate(phi), d.l1_distance(&rho0), d.is_exact()))
        })
        .collect::<Result<_>>()?;
    let response: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let l1_distance: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let tlogt_ratio = ts
        .iter()
        .zip(&l1_distance)
        .map(|(&t, &d)| {
            let a = t.abs();
            (a > 0.0 && a < 1.0).then(|| d / (a * (1.0 / a).ln()))
        })
        .collect();
    let l1_pts: Vec<(f64, f64)> = ts.iter().copied().zip(l1_distance.iter().copied()).collect();
    let r_pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(&response)
        .map(|(&t, &r)| (t, (r - reference).abs()))
        .collect();
    Ok(ResponseScan {
        t: ts.to_vec(),
        response,
        reference,
        l1_distance,
        exact: rows.iter().map(|r| r.2).collect(),
        l1_exponent: log_slope(&l1_pts),
        response_exponent: log_slope(&r_pts),
        tlogt_ratio,
    })
}

/// Default schedule t = ±2^{−m}, m = 6..14.
pub fn default_t_schedule() -> Vec<f64> {
    (6..=14)
        .flat_map(|m| {
            let t = 2f64.powi(-m);
            [t, -t]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub t: Vec<f64>,
    pub reference: f64,
    /// (R(t) − R(0))/t at the requested resolution.
    pub quotient: Vec<f64>,
    /// The same at half the resolution.
    pub quotient_coarse: Vec<f64>,
    pub psi_partial_sum: f64,
    /// Partial sum at half the number of terms.
    pub psi_partial_half: f64,
    /// Abel/Richardson value of lim_{z↑1} Ψ(z).
    pub psi_abel: f64,
    /// quotient − psi_abel per row; reported, not asserted.
    pub difference: Vec<f64>,
    pub residue_at_1: f64,
}

/// Finite differences of R against Ψ(1) on a preperiodic tent map with no
/// pole of Ψ at 1.
#[allow(clippy::too_many_arguments)]
pub fn fd_experiment(
    f: &UnimodalMap,
    x: &Perturbation,
    phi: &SmoothFn,
    ts: &[f64],
    bins: usize,
    n_terms: usize,
    cells: usize,
    tol: f64,
) -> Result<FdReport> {
    let o = critical_orbit(f, 4096, REVISIT_TOL)?;
    let d = exact_from_orbit(f, &o)?;
    let dec = saltus_from_exact(&d, &o, f.a0(), f.b(), cells)?;
    let sys = markov_extension(&o, &dec, x, phi, d.integrate(phi), tol)?;
    if !sys.holomorphic_at_1 {
        return Err(Error::ResidueNonzero(sys.residue_at_1));
    }
    let series = coefficients_split(f, &o, &dec, x, phi, n_terms, cells)?;
    let sums = series.partial_sums();
    let psi_partial_sum = sums.last().copied().unwrap_or(0.0);
    let psi_partial_half = if sums.is_empty() { 0.0 } else { sums[(sums.len() - 1) / 2] };
    let abel: Vec<f64> = RESIDUE_NODES
        .map(|m| {
            let z = 1.0 - 2f64.powi(-m);
            series.coefficients.iter().rev().fold(0.0, |acc, a| acc * z + a)
        })
        .collect();
    let psi_abel = richardson(&abel).last().copied().unwrap_or(0.0);

    let column = |b: usize| -> Result<(f64, Vec<f64>)> {
        let r0 = response_value_with(f, x, 0.0, phi, b, DensityMethod::Ulam)?;
        let q = ts
            .par_iter()
            .map(|&t| {
                let r = response_value_with(f, x, t, phi, b, DensityMethod::Ulam)?;
                Ok((r - r0) / t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((r0, q))
    };
    let (reference, quotient) = column(bins)?;
    let (_, quotient_coarse) = column((bins / 2).max(1))?;
    let difference = quotient.iter().map(|q| q - psi_abel).collect();
    Ok(FdReport {
        t: ts.to_vec(),
        reference,
        quotient,
        quotient_coarse,
        psi_partial_sum,
        psi_partial_half,
        psi_abel,
        difference,
        residue_at_1: sys.residue_at_1,
    })
}
