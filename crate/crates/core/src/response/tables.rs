use super::ULAM_TOL;
use crate::error::{Error, Result};
use crate::smooth::SmoothFn;
use crate::transfer::{exact_from_orbit, invariant_density_ulam, DEFAULT_MAX_ITERS};
use crate::unimodal::{
    critical_orbit, lambda_k_family, solve_code_parameter, KneadingCode, UnimodalMap, REVISIT_TOL,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    /// k for the λ_k family, ℓ for the ν_ℓ family.
    pub index: usize,
    pub parameter: f64,
    pub plateaus: Vec<f64>,
    pub gap: f64,
    pub bound: f64,
    pub ratio: f64,
    /// Largest residual of the fixed-point relations checked for this row.
    pub recursion_residual: f64,
    /// |Σ plateau · cell length − 1|.
    pub normalization_error: f64,
    /// Largest difference to the generic exact solver on the same cells.
    pub solver_mismatch: f64,
    /// Monotone plateaus (λ_k) or the alternating jump signs (ν_ℓ).
    pub shape_ok: bool,
    /// R from an Ulam density when requested.
    pub ulam_response: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleTable {
    pub rows: Vec<CounterexampleRow>,
    /// exp of the mean of log(ratio): least squares of log gap = log C + log bound.
    pub fitted_constant: f64,
    pub min_ratio: f64,
    /// (max ratio − min ratio) / fitted constant.
    pub relative_spread: f64,
}

impl CounterexampleTable {
    fn from_rows(rows: Vec<CounterexampleRow>) -> Self {
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let fitted_constant = if ratios.iter().all(|&r| r > 0.0) && !ratios.is_empty() {
            (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp()
        } else {
            f64::NAN
        };
        CounterexampleTable {
            rows,
            fitted_constant,
            min_ratio,
            relative_spread: (max_ratio - min_ratio) / fitted_constant,
        }
    }
}

fn tent_orbit(lambda: f64, n: usize) -> Vec<f64> {
    let g = |x: f64| if x <= 0.5 { lambda * x } else { lambda * (1.0 - x) };
    let mut out = Vec::with_capacity(n);
    let mut x = 0.5;
    for _ in 0..n {
        x = g(x);
        out.push(x);
    }
    out
}

/// Plateaus of γ_{λ_k}: v_j on (c_{j+1}, c_{j+2}) for j ≤ k and v_{k+1} on
/// (c_{k+2}, c_1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaKPlateaus {
    pub k: usize,
    pub lambda: f64,
    /// c_1, …, c_{k+2}.
    pub orbit: Vec<f64>,
    pub values: Vec<f64>,
    /// |2v_k − λ_k v_{k+1}|, the relation not used by the solve.
    pub closing_residual: f64,
    pub normalization_error: f64,
}

impl LambdaKPlateaus {
    pub fn c(&self, j: usize) -> f64 {
        self.orbit[j - 1]
    }

    /// (lo, hi) of the cell carrying v_j.
    pub fn cell(&self, j: usize) -> (f64, f64) {
        if j <= self.k {
            (self.c(j + 1), self.c(j + 2))
        } else {
            (self.c(self.k + 2), self.c(1))
        }
    }
}

/// Solves v_{k+1} = λv_1, v_j + v_{k+1} = λv_{j+1} (1 ≤ j ≤ k−1) with ∫γ = 1.
pub fn lambda_k_plateaus(k: usize) -> Result<LambdaKPlateaus> {
    let lambda = lambda_k_family(k)?;
    let orbit = tent_orbit(lambda, k + 2);
    let c = |j: usize| orbit[j - 1];
    // v_j = α_j v_{k+1}.
    let mut alpha = vec![0.0; k + 1];
    alpha[k] = 1.0;
    alpha[0] = 1.0 / lambda;
    for j in 1..k {
        alpha[j] = (alpha[j - 1] + 1.0) / lambda;
    }
    let lengths: Vec<f64> = (1..=k + 1)
        .map(|j| if j <= k { c(j + 2) - c(j + 1) } else { c(1) - c(k + 2) })
        .collect();
    let mass: f64 = alpha.iter().zip(&lengths).map(|(a, l)| a * l).sum();
    let values: Vec<f64> = alpha.iter().map(|a| a / mass).collect();
    let closing_residual = if k >= 1 {
        (2.0 * values[k - 1] - lambda * values[k]).abs()
    } else {
        0.0
    };
    let normalization_error = (values.iter().zip(&lengths).map(|(v, l)| v * l).sum::<f64>() - 1.0).abs();
    Ok(LambdaKPlateaus { k, lambda, orbit, values, closing_residual, normalization_error })
}

fn counterexample_one_row(k: usize, phi: &SmoothFn, bins: Option<usize>) -> Result<CounterexampleRow> {
    let p = lambda_k_plateaus(k)?;
    let f = UnimodalMap::tent(p.lambda)?;
    let o = critical_orbit(&f, 4096, REVISIT_TOL)?;
    let d = exact_from_orbit(&f, &o)?;
    let solver_mismatch = (1..=k + 1)
        .map(|j| {
            let (a, b) = p.cell(j);
            (d.eval(0.5 * (a + b)) - p.values[j - 1]).abs()
        })
        .fold(0.0, f64::max);
    // γ_2 ≡ 1, so R(2) = ∫φ.
    let r_ref = phi.integral(0.0, 1.0);
    let gap = d.integrate(phi) - r_ref;
    let bound = k as f64 * (2.0 - p.lambda);
    let ulam_response = match bins {
        Some(b) => Some(invariant_density_ulam(&f, b, DEFAULT_MAX_ITERS, ULAM_TOL)?.integrate(phi)),
        None => None,
    };
    Ok(CounterexampleRow {
        index: k,
        parameter: p.lambda,
        shape_ok: p.values.windows(2).all(|w| w[0] < w[1]),
        recursion_residual: p.closing_residual,
        normalization_error: p.normalization_error,
        solver_mismatch,
        plateaus: p.values,
        gap,
        bound,
        ratio: gap / bound,
        ulam_response,
    })
}

/// φ for the λ_k family: the unit-mass bump supported in (2/3, 3/4).
pub fn counterexample_one_observable() -> SmoothFn {
    SmoothFn::bump(2.0 / 3.0, 0.75)
}

/// Rows k ∈ k_range of ∫φγ_{λ_k} − ∫φγ_2 against k(2 − λ_k).
pub fn counterexample_one(
    k_range: std::ops::RangeInclusive<usize>,
    bins: Option<usize>,
) -> Result<CounterexampleTable> {
    if *k_range.start() < 1 || *k_range.end() > 20 {
        return Err(Error::UnsupportedInput(format!(
            "k range {k_range:?} must lie in 1..=20"
        )));
    }
    let phi = counterexample_one_observable();
    let rows = k_range
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| counterexample_one_row(k, &phi, bins))
        .collect::<Result<Vec<_>>>()?;
    Ok(CounterexampleTable::from_rows(rows))
}

/// ν_ℓ, the slope with kneading code R L R^{ℓ−4} L R^∞.
pub fn nu_ell(ell: usize) -> Result<f64> {
    if ell < 6 || ell % 2 != 0 {
        return Err(Error::UnsupportedInput(format!("ℓ = {ell} must be even and ≥ 6")));
    }
    solve_code_parameter(&KneadingCode::parse(&format!("RLR^{}LR*", ell - 4))?)
}

/// Plateaus u_1, …, u_{ℓ−1} of γ_{ν_ℓ} in the order of the orbit partition
/// c_2 < c_{ℓ−1} < c_0 < c_{ℓ−3} < … < c_3 < c_ℓ < c_4 < … < c_{ℓ−2} < c_1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuEllPlateaus {
    pub ell: usize,
    pub nu: f64,
    /// c_1, …, c_ℓ.
    pub orbit: Vec<f64>,
    pub values: Vec<f64>,
    /// Jump amplitudes s_1, …, s_{ℓ−1} (s_ℓ at the fixed point c_ℓ last).
    pub jumps: Vec<f64>,
    pub ordering_ok: bool,
    pub normalization_error: f64,
}

impl NuEllPlateaus {
    pub fn c(&self, j: usize) -> f64 {
        if j == 0 {
            0.5
        } else {
            self.orbit[j - 1]
        }
    }

    /// Orbit indices (lo, hi) of the cell carrying u_j.
    pub fn cell_indices(&self, j: usize) -> (usize, usize) {
        let l = self.ell;
        match j {
            1 => (2, l - 1),
            _ if j < l / 2 => (l + 3 - 2 * j, l + 1 - 2 * j),
            _ if j == l / 2 => (3, l),
            _ if j == l / 2 + 1 => (l, 4),
            _ if j < l - 1 => (2 * j - l, 2 * j + 2 - l),
            _ => (l - 2, 1),
        }
    }

    pub fn cell(&self, j: usize) -> (f64, f64) {
        let (a, b) = self.cell_indices(j);
        (self.c(a), self.c(b))
    }

    pub fn u(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    /// Largest residual of u_{ℓ−1} = νu_1, u_{ℓ−2} = νu_2, 2u_2 = νu_{ℓ−1}.
    pub fn recursion_residual(&self) -> f64 {
        let (l, nu) = (self.ell, self.nu);
        [
            self.u(l - 1) - nu * self.u(1),
            self.u(l - 2) - nu * self.u(2),
            2.0 * self.u(2) - nu * self.u(l - 1),
        ]
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// s_{ℓ−2} < 0, s_{ℓ−1} > 0, s_{2j} < 0 for 4 ≤ 2j ≤ ℓ−2 and
    /// s_{2j+1} > 0 for 3 ≤ 2j+1 ≤ ℓ−3.
    pub fn sign_pattern_ok(&self) -> bool {
        let s = |k: usize| self.jumps[k - 1];
        let l = self.ell;
        s(l - 2) < 0.0
            && s(l - 1) > 0.0
            && (4..=l - 2).step_by(2).all(|k| s(k) < 0.0)
            && (3..=l - 3).step_by(2).all(|k| s(k) > 0.0)
    }
}

/// Reads the plateaus of the exact density of g_{ν_ℓ} on the cells of the
/// orbit partition and checks the ordering of the orbit.
pub fn nu_ell_plateaus(ell: usize) -> Result<NuEllPlateaus> {
    let nu = nu_ell(ell)?;
    let f = UnimodalMap::tent(nu)?;
    let o = critical_orbit(&f, 4096, REVISIT_TOL)?;
    let d = exact_from_orbit(&f, &o)?;
    let orbit: Vec<f64> = (1..=ell).map(|k| o.point(k)).collect();
    let mut p = NuEllPlateaus {
        ell,
        nu,
        orbit,
        values: vec![],
        jumps: vec![],
        ordering_ok: false,
        normalization_error: 0.0,
    };
    let mut order = vec![2, ell - 1, 0];
    order.extend((3..=ell - 3).rev().step_by(2));
    order.push(ell);
    order.extend((4..=ell - 2).step_by(2));
    order.push(1);
    p.ordering_ok = order.windows(2).all(|w| p.c(w[0]) < p.c(w[1]));
    p.values = (1..ell)
        .map(|j| {
            let (a, b) = p.cell(j);
            d.eval(0.5 * (a + b))
        })
        .collect();
    let by_k = d.jumps();
    p.jumps = (1..=ell)
        .map(|k| by_k.iter().find(|e| e.0 == k).map(|e| e.2).unwrap_or(0.0))
        .collect();
    let mass: f64 = (1..ell)
        .map(|j| {
            let (a, b) = p.cell(j);
            p.u(j) * (b - a).abs()
        })
        .sum();
    p.normalization_error = (mass - 1.0).abs();
    Ok(p)
}

/// φ for the ν_ℓ family: the unit-mass bump supported in (0.42, 0.49).
pub fn counterexample_two_observable() -> SmoothFn {
    SmoothFn::bump(0.42, 0.49)
}

fn counterexample_two_row(ell: usize, phi: &SmoothFn, bins: Option<usize>) -> Result<CounterexampleRow> {
    let p = nu_ell_plateaus(ell)?;
    let (lo, hi) = phi.support().unwrap_or((0.0, 1.0));
    if !(p.c(ell - 1) < lo && hi < 0.5) {
        return Err(Error::UnsupportedInput(format!(
            "bump support ({lo}, {hi}) is not inside (c_{{ℓ−1}}, 1/2) for ℓ = {ell}"
        )));
    }
    let f = UnimodalMap::tent(p.nu)?;
    let o = critical_orbit(&f, 4096, REVISIT_TOL)?;
    let d = exact_from_orbit(&f, &o)?;
    let u = 1.0 / (6.0 - 4.0 * std::f64::consts::SQRT_2);
    let r_ref = u * phi.integral(0.0, 1.0);
    let r = d.integrate(phi);
    let gap = r_ref - r;
    let bound = ell as f64 * (p.nu - std::f64::consts::SQRT_2).abs();
    let ulam_response = match bins {
        Some(b) => Some(invariant_density_ulam(&f, b, DEFAULT_MAX_ITERS, ULAM_TOL)?.integrate(phi)),
        None => None,
    };
    Ok(CounterexampleRow {
        index: ell,
        parameter: p.nu,
        gap,
        bound,
        ratio: gap / bound,
        recursion_residual: p.recursion_residual(),
        normalization_error: p.normalization_error,
        solver_mismatch: (r - p.u(2) * phi.integral(0.0, 1.0)).abs(),
        shape_ok: p.ordering_ok && p.sign_pattern_ok(),
        plateaus: p.values,
        ulam_response,
    })
}

/// Rows ℓ ∈ ells of u − ∫φγ_{ν_ℓ} against ℓ|ν_ℓ − √2|.
pub fn counterexample_two(ells: &[usize], bins: Option<usize>) -> Result<CounterexampleTable> {
    if let Some(&bad) = ells.iter().find(|&&l| l < 6 || l > 24 || l % 2 != 0) {
        return Err(Error::UnsupportedInput(format!("ℓ = {bad} must be even in 6..=24")));
    }
    let phi = counterexample_two_observable();
    let rows = ells
        .par_iter()
        .map(|&l| counterexample_two_row(l, &phi, bins))
        .collect::<Result<Vec<_>>>()?;
    Ok(CounterexampleTable::from_rows(rows))
}
