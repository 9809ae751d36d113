use super::hybrid::HybridBvFunction;
use super::operators::apply_l1;
use crate::error::Result;
use crate::unimodal::UnimodalMap;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LasotaYorkeRow {
    pub input: usize,
    pub m: usize,
    pub var_iterate: f64,
    pub var_input: f64,
    pub l1_input: f64,
}

/// Fitted constant D' in var(L1^m φ) ≤ λ^m var(φ) + D'|φ|_1, λ = 1/inf|f'|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LasotaYorkeFit {
    pub contraction: f64,
    pub d_prime: f64,
    pub rows: Vec<LasotaYorkeRow>,
}

impl LasotaYorkeFit {
    /// Largest violation of the inequality with the given D'.
    pub fn worst_excess(&self, d_prime: f64) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                r.var_iterate
                    - self.contraction.powi(r.m as i32) * r.var_input
                    - d_prime * r.l1_input
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn lasota_yorke_fit(
    f: &UnimodalMap,
    inputs: &[HybridBvFunction],
    m_max: usize,
) -> Result<LasotaYorkeFit> {
    let lambda = 1.0 / f.inf_abs_deriv();
    let mut rows = Vec::new();
    for (i, phi) in inputs.iter().enumerate() {
        let var0 = phi.variation();
        let l1 = phi.l1_norm();
        let mut cur = phi.clone();
        for m in 1..=m_max {
            cur = apply_l1(f, &cur)?;
            rows.push(LasotaYorkeRow {
                input: i,
                m,
                var_iterate: cur.variation(),
                var_input: var0,
                l1_input: l1,
            });
        }
    }
    let d_prime = rows
        .iter()
        .filter(|r| r.l1_input > 0.0)
        .map(|r| (r.var_iterate - lambda.powi(r.m as i32) * r.var_input) / r.l1_input)
        .fold(0.0, f64::max);
    Ok(LasotaYorkeFit { contraction: lambda, d_prime, rows })
}
