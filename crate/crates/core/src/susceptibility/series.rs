use crate::error::{Error, Result};
use crate::saltus::SaltusDecomposition;
use crate::smooth::SmoothFn;
use crate::transfer::{apply_l0, apply_l1, HybridBvFunction, Pairing};
use crate::unimodal::{CriticalOrbitInfo, Perturbation, UnimodalMap};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Coefficients a_n = ∫L0ⁿ(ρ_0X)φ' dx with their orbit and BV parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilitySeries {
    pub coefficients: Vec<f64>,
    pub orbit_terms: Vec<f64>,
    pub bv_terms: Vec<f64>,
    /// Period of the eventually periodic orbit terms (Markov maps).
    pub tail_period: Option<usize>,
    /// Bound on the orbit-term error from truncating the jump list.
    pub tail_estimate: f64,
}

impl SusceptibilitySeries {
    pub fn from_coefficients(coefficients: Vec<f64>, tail_period: Option<usize>) -> Self {
        let n = coefficients.len();
        SusceptibilitySeries {
            orbit_terms: vec![0.0; n],
            bv_terms: coefficients.clone(),
            coefficients,
            tail_period,
            tail_estimate: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// sup_{n ∈ [from, N)} |a_n|^{1/n}.
    pub fn growth_rate(&self, from: usize) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(from.max(1))
            .map(|(n, a)| a.abs().powf(1.0 / n as f64))
            .fold(0.0, f64::max)
    }

    /// Partial sums S_N for every N.
    pub fn partial_sums(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .scan(0.0, |s, a| {
                *s += a;
                Some(*s)
            })
            .collect()
    }
}

/// Σ_{n≤N} zⁿ a_n.
pub fn psi_partial(series: &SusceptibilitySeries, z: Complex64) -> Complex64 {
    series
        .coefficients
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

pub(crate) fn check_c1(phi: &SmoothFn, lo: f64, hi: f64) -> Result<()> {
    let bad = (0..=256)
        .map(|i| lo + (hi - lo) * i as f64 / 256.0)
        .find(|&x| !phi.deriv(x).is_finite() || !phi.eval(x).is_finite());
    match bad {
        Some(x) => Err(Error::ObservableNotC1(format!("φ' is not finite at {x}"))),
        None => Ok(()),
    }
}

/// c_1, …, c_len along the orbit (periodic wrap for Markov maps).
pub(crate) fn orbit_points(f: &UnimodalMap, orbit: &CriticalOrbitInfo, len: usize) -> Vec<f64> {
    orbit.extended(f, len)
}

/// G = X'ρ_s + (Xρ_r)' on a uniform grid over [a0, b].
pub fn resolvent_argument(
    f: &UnimodalMap,
    dec: &SaltusDecomposition,
    x: &Perturbation,
    cells: usize,
) -> HybridBvFunction {
    let (lo, hi) = (f.a0(), f.b());
    let rho_s = dec.density_on(lo, hi, cells);
    let rho_s = HybridBvFunction::new(
        crate::transfer::GridFunction::zeros(lo, hi, cells),
        rho_s.jumps().to_vec(),
    );
    let xs = rho_s.mul_smooth(|y| x.deriv(y));
    let xr = dec.regular_on(lo, hi, cells).map(|y, r| x.eval(y) * r);
    xs.add(&HybridBvFunction::from_regular(xr.derivative()))
}

/// a_n for n = 0..n_terms by the split into orbit and BV parts.
pub fn coefficients_split(
    f: &UnimodalMap,
    orbit: &CriticalOrbitInfo,
    dec: &SaltusDecomposition,
    x: &Perturbation,
    phi: &SmoothFn,
    n_terms: usize,
    cells: usize,
) -> Result<SusceptibilitySeries> {
    let (lo, hi) = (f.a0(), f.b());
    check_c1(phi, lo, hi)?;
    let depth = dec.jumps.iter().map(|j| j.k).max().unwrap_or(0);
    let pts = orbit_points(f, orbit, depth + n_terms);
    let weights: Vec<(usize, f64)> = dec
        .jumps
        .iter()
        .map(|j| (j.k, j.amplitude * x.eval(j.location)))
        .filter(|p| p.1 != 0.0)
        .collect();
    let orbit_terms: Vec<f64> = (0..n_terms)
        .map(|n| -weights.iter().map(|&(k, w)| w * phi.eval(pts[k + n - 1])).sum::<f64>())
        .collect();

    let pairing = Pairing::new(&crate::transfer::GridFunction::zeros(lo, hi, cells), phi);
    let mut g = resolvent_argument(f, dec, x, cells);
    let mut bv_terms = Vec::with_capacity(n_terms);
    for n in 0..n_terms {
        if n > 0 {
            g = apply_l1(f, &g)?;
        }
        bv_terms.push(-pairing.apply(&g));
    }
    let coefficients = orbit_terms
        .iter()
        .zip(&bv_terms)
        .map(|(a, b)| a + b)
        .collect();
    let tail_estimate = match (&dec.preperiodic, &dec.tail) {
        (None, Some(t)) => {
            t.bound(depth) * x.function().sup_abs(lo, hi) * phi.sup_abs(lo, hi)
        }
        _ => 0.0,
    };
    Ok(SusceptibilitySeries {
        coefficients,
        orbit_terms,
        bv_terms,
        tail_period: orbit.preperiodic.map(|p| p.1),
        tail_estimate,
    })
}

/// a_n = ∫L0ⁿ(ρ_0X)φ' dx by direct iteration of L0, for cross-checks at small n.
pub fn coefficients_naive(
    f: &UnimodalMap,
    rho: &HybridBvFunction,
    x: &Perturbation,
    phi: &SmoothFn,
    n_terms: usize,
) -> Result<Vec<f64>> {
    let dphi = phi.derivative();
    let brk = phi.breakpoints();
    let mut g = rho.mul_smooth(|y| x.eval(y));
    let mut out = Vec::with_capacity(n_terms);
    for n in 0..n_terms {
        if n > 0 {
            g = apply_l0(f, &g)?;
        }
        out.push(g.integrate_with(|y| dphi.eval(y), &brk));
    }
    Ok(out)
}
