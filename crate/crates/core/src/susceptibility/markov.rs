use super::series::{psi_partial, SusceptibilitySeries};
use crate::error::{Error, Result};
use crate::saltus::{jump_sums_markov, weighted_jump, SaltusDecomposition};
use crate::smooth::SmoothFn;
use crate::unimodal::{CriticalOrbitInfo, Perturbation};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub z: Complex64,
    /// Coefficient of 1/(1 − z/ω) in Ψ near ω.
    pub residue: Complex64,
}

/// L0 acting on span{H_{c_1}, …, H_{c_N}} and the resulting poles of Ψ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovJumpSystem {
    pub n0: usize,
    pub n1: usize,
    pub dimension: usize,
    /// matrix[i][j]: coefficient of H_{c_{i+1}} in L0 H_{c_{j+1}}.
    pub matrix: Vec<Vec<i64>>,
    pub jump_sums: Vec<f64>,
    pub weighted_jump: f64,
    pub residue_at_1: f64,
    pub poles: Vec<Pole>,
    pub holomorphic_at_1: bool,
    pub fully_holomorphic: bool,
}

impl MarkovJumpSystem {
    pub fn matrix_power(&self, p: usize) -> Vec<Vec<i64>> {
        let n = self.dimension;
        let mut acc: Vec<Vec<i64>> = (0..n)
            .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
            .collect();
        for _ in 0..p {
            acc = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (0..n).map(|k| self.matrix[i][k] * acc[k][j]).sum())
                        .collect()
                })
                .collect();
        }
        acc
    }
}

/// Jump matrix: H_{c_j} ↦ H_{c_{j+1}} for j < N and H_{c_N} ↦ H_{c_{n0}}.
pub fn jump_matrix(n0: usize, n1: usize) -> Vec<Vec<i64>> {
    let n = n0 + n1 - 1;
    let mut m = vec![vec![0i64; n]; n];
    for j in 0..n - 1 {
        m[j + 1][j] = 1;
    }
    m[n0 - 1][n - 1] += 1;
    m
}

/// Poles and residues of Ψ on the unit circle for a preperiodic map.
/// The residue at 1 is J(f,X)(∫φρ_0 − (1/n1)Σ_{j=n0}^{N} φ(c_j)); at the
/// other n1-th roots of unity ω it is (1/n1)Σ over one period of the
/// orbit terms times ωⁿ.
pub fn markov_extension(
    orbit: &CriticalOrbitInfo,
    dec: &SaltusDecomposition,
    x: &Perturbation,
    phi: &SmoothFn,
    phi_rho0: f64,
    tol: f64,
) -> Result<MarkovJumpSystem> {
    let Some((n0, n1)) = orbit.preperiodic else {
        return Err(Error::NotMarkov);
    };
    let n = n0 + n1 - 1;
    let jump_sums = jump_sums_markov(dec, x, n0, n1)?;
    let jw = weighted_jump(dec, x).value;
    let cycle_mean = (n0..=n).map(|j| phi.eval(orbit.point(j))).sum::<f64>() / n1 as f64;
    let residue_at_1 = jw * (phi_rho0 - cycle_mean);

    let weights: Vec<(usize, f64)> = dec
        .jumps
        .iter()
        .map(|j| (j.k, j.amplitude * x.eval(j.location)))
        .collect();
    // Orbit terms are n1-periodic once every c_{k+n} is on the cycle.
    let start = n0;
    let orbit_term = |m: usize| -> f64 {
        -weights.iter().map(|&(k, w)| w * phi.eval(orbit.point(k + m))).sum::<f64>()
    };
    let mut poles = vec![Pole { z: Complex64::new(1.0, 0.0), residue: Complex64::new(residue_at_1, 0.0) }];
    for r in 1..n1 {
        let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / n1 as f64);
        let res: Complex64 = (start..start + n1)
            .map(|m| omega.powu(m as u32) * orbit_term(m))
            .sum::<Complex64>()
            / n1 as f64;
        poles.push(Pole { z: omega, residue: res });
    }
    let fully_holomorphic = jump_sums.iter().all(|v| v.abs() <= tol);
    Ok(MarkovJumpSystem {
        n0,
        n1,
        dimension: n,
        matrix: jump_matrix(n0, n1),
        jump_sums,
        weighted_jump: jw,
        residue_at_1,
        poles,
        holomorphic_at_1: jw.abs() <= tol,
        fully_holomorphic,
    })
}

/// Abel/Richardson estimate of lim_{z↑1}(1 − z)Ψ(z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueFit {
    pub value: f64,
    pub nodes: Vec<f64>,
    pub abel_values: Vec<f64>,
    pub diagonal: Vec<f64>,
}

/// Node exponents m of z = 1 − 2^{−m}.
pub const RESIDUE_NODES: std::ops::RangeInclusive<i32> = 4..=10;

/// Richardson table on values sampled at steps h, h/2, h/4, … for an
/// expansion in powers of h; returns the diagonal.
pub fn richardson(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut table = vec![vec![0.0; n]; n];
    for i in 0..n {
        table[i][0] = values[i];
        for j in 1..=i {
            let p = 2f64.powi(j as i32) - 1.0;
            table[i][j] = table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / p;
        }
    }
    (0..n).map(|i| table[i][i]).collect()
}

/// Σ_{n>N} zⁿ a_n with the last `period` coefficients continued periodically.
fn periodic_tail(series: &SusceptibilitySeries, z: f64) -> f64 {
    let Some(p) = series.tail_period else { return 0.0 };
    let n = series.len();
    if n < p || p == 0 {
        return 0.0;
    }
    let block: f64 = (0..p)
        .map(|r| series.coefficients[n - p + r] * z.powi(r as i32))
        .sum();
    z.powi(n as i32) * block / (1.0 - z.powi(p as i32))
}

/// (1 − z)Ψ(z) at z = 1 − 2^{−m}, m = 4..10, extrapolated to z = 1.
pub fn residue_fit(series: &SusceptibilitySeries) -> Result<ResidueFit> {
    let nodes: Vec<f64> = RESIDUE_NODES.map(|m| 1.0 - 2f64.powi(-m)).collect();
    let abel_values: Vec<f64> = nodes
        .iter()
        .map(|&z| {
            let head = psi_partial(series, Complex64::new(z, 0.0)).re;
            (1.0 - z) * (head + periodic_tail(series, z))
        })
        .collect();
    let diagonal = richardson(&abel_values);
    let k = diagonal.len();
    let (last, prev) = (diagonal[k - 1], diagonal[k - 2]);
    let scale = series.coefficients.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let floor = 1e-6 * scale.max(1e-300);
    if (last - prev).abs() > 0.05 * last.abs().max(floor) {
        return Err(Error::FitUnstable(format!(
            "Richardson extrapolants {prev:e} and {last:e} differ by more than 5%"
        )));
    }
    Ok(ResidueFit { value: last, nodes, abel_values, diagonal })
}
