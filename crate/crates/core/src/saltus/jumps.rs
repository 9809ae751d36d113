use super::SaltusDecomposition;
use crate::error::{Error, Result};
use crate::unimodal::{CriticalOrbitInfo, Perturbation, UnimodalMap, NEAR_CRITICAL_GUARD};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedJump {
    pub value: f64,
    /// Bound on the omitted Σ_{k>N} s_k X(c_k); zero for Markov maps.
    pub tail_bound: f64,
}

/// J(f, X) = Σ_k s_k X(c_k).
pub fn weighted_jump(dec: &SaltusDecomposition, x: &Perturbation) -> WeightedJump {
    let value = dec
        .jumps
        .iter()
        .map(|j| j.amplitude * x.eval(j.location))
        .sum();
    let tail_bound = match (&dec.preperiodic, &dec.tail) {
        (None, Some(t)) => {
            let sup = x.function().sup_abs(dec.regular.lo, dec.regular.hi);
            t.bound(dec.jumps.len()) * sup
        }
        _ => 0.0,
    };
    WeightedJump { value, tail_bound }
}

/// J^{n1,n0}_m for m = n0..n0+n1−1: sums of s_k X(c_k) over the k with
/// k + n0 − 1 − m a nonnegative multiple of n1.
pub fn jump_sums_markov(
    dec: &SaltusDecomposition,
    x: &Perturbation,
    n0: usize,
    n1: usize,
) -> Result<Vec<f64>> {
    if dec.preperiodic != Some((n0, n1)) {
        return Err(Error::NotMarkov);
    }
    Ok((n0..n0 + n1)
        .map(|m| {
            dec.jumps
                .iter()
                .filter(|j| {
                    let lhs = j.k + n0 - 1;
                    lhs >= m && (lhs - m) % n1 == 0
                })
                .map(|j| j.amplitude * x.eval(j.location))
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistedAlpha {
    /// α(c_1), …, α(c_depth).
    pub alpha: Vec<f64>,
    /// X(c_1) − α(c_1).
    pub defect: f64,
    /// Largest |X(c_{k+1}) − α(c_{k+1}) + f'(c_k)α(c_k)| over k < depth.
    pub identity_residual: f64,
}

/// α(c_k) = −Σ_{j≥0} X(c_{k+1+j}) / (f^{j+1})'(c_k), truncated once
/// sup|X|·(inf|f'|)^{−(j+1)} < 1e−14.
pub fn twisted_alpha(
    orbit: &CriticalOrbitInfo,
    f: &UnimodalMap,
    x: &Perturbation,
    depth: usize,
) -> Result<TwistedAlpha> {
    let sup = x.function().sup_abs(f.a0(), f.b0()).max(1e-300);
    let rate = 1.0 / f.inf_abs_deriv();
    let terms = if sup <= 1e-300 {
        1
    } else {
        let mut j = 0usize;
        while sup * rate.powi(j as i32 + 1) >= 1e-14 {
            j += 1;
        }
        j + 1
    };
    let pts = orbit.extended(f, depth + terms + 1);
    if let Some((i, _)) = pts
        .iter()
        .enumerate()
        .find(|(_, &p)| (p - f.c()).abs() < NEAR_CRITICAL_GUARD)
    {
        return Err(Error::NearCriticalOrbit { step: i + 1, tol: NEAR_CRITICAL_GUARD });
    }
    let c = |k: usize| pts[k - 1];
    let alpha: Vec<f64> = (1..=depth)
        .map(|k| {
            let mut d = 1.0;
            let mut acc = 0.0;
            for j in 0..terms {
                d *= f.deriv(c(k + j));
                acc += x.eval(c(k + 1 + j)) / d;
            }
            -acc
        })
        .collect();
    let identity_residual = (1..depth)
        .map(|k| (x.eval(c(k + 1)) - alpha[k] + f.deriv(c(k)) * alpha[k - 1]).abs())
        .fold(0.0, f64::max);
    let defect = x.eval(c(1)) - alpha.first().copied().unwrap_or(0.0);
    Ok(TwistedAlpha { alpha, defect, identity_residual })
}

/// Check of s(y) = Σ_{orbit x: f(x) = y} s(x)/f'(x) at an orbit point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationCheck {
    pub k: usize,
    pub predecessors: Vec<usize>,
    pub amplitude: f64,
    pub predicted: f64,
    pub relative_error: f64,
}

/// Propagation law at c_2..c_N of a Markov decomposition. c_{n0} has the two
/// orbit preimages c_{n0−1} and c_N; every other point has one.
pub fn jump_propagation(dec: &SaltusDecomposition, f: &UnimodalMap) -> Result<Vec<PropagationCheck>> {
    let Some((n0, n1)) = dec.preperiodic else {
        return Err(Error::NotMarkov);
    };
    let n = n0 + n1 - 1;
    let s = |k: usize| dec.amplitude(k);
    let loc = |k: usize| dec.jumps.iter().find(|j| j.k == k).map(|j| j.location).unwrap_or(f64::NAN);
    Ok((2..=n)
        .map(|k| {
            let mut preds = vec![k - 1];
            if k == n0 && n >= 1 {
                preds.push(n);
            }
            let predicted: f64 = preds.iter().map(|&p| s(p) / f.deriv(loc(p))).sum();
            let amplitude = s(k);
            let relative_error = (amplitude - predicted).abs() / amplitude.abs().max(1e-300);
            PropagationCheck { k, predecessors: preds, amplitude, predicted, relative_error }
        })
        .collect())
}
