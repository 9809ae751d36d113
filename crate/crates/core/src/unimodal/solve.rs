use super::code::{kneading_cmp, KneadingCode, Symbol};
use super::TentMap;
use crate::error::{Error, Result};
use std::cmp::Ordering;

const MAX_BISECTIONS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-12;

fn tent_orbit(lambda: f64, n: usize) -> Vec<f64> {
    let g = TentMap { slope: lambda };
    let mut x = 0.5;
    (0..n)
        .map(|_| {
            x = g.eval(x);
            x
        })
        .collect()
}

fn inverse(lambda: f64, s: Symbol, y: f64) -> f64 {
    match s {
        Symbol::R => 1.0 - y / lambda,
        _ => y / lambda,
    }
}

/// Periodic point of g_λ whose itinerary is `period` repeated. The composed
/// inverse branches form an affine contraction y ↦ αy + β.
fn periodic_point(lambda: f64, period: &[Symbol]) -> f64 {
    let comp = |y: f64| period.iter().rev().fold(y, |y, &s| inverse(lambda, s, y));
    let beta = comp(0.0);
    let alpha = comp(1.0) - beta;
    beta / (1.0 - alpha)
}

/// Closure residual c_{m−1}(λ) − ψ_{Θ_{m−1}}(P_λ), where m − 1 is the prefix
/// length and P_λ the periodic point carrying the tail itinerary.
pub fn closure_residual(code: &KneadingCode, lambda: f64) -> f64 {
    let m1 = code.prefix.len();
    let p = periodic_point(lambda, &code.period);
    let target = inverse(lambda, code.prefix[m1 - 1], p);
    tent_orbit(lambda, m1)[m1 - 1] - target
}

/// Position of the code of g_λ relative to the target code in kneading order.
fn compare(code: &KneadingCode, lambda: f64) -> Ordering {
    let m1 = code.prefix.len();
    let syms: Vec<Symbol> = tent_orbit(lambda, m1)
        .into_iter()
        .map(|x| Symbol::of(x, 0.5))
        .collect();
    let ord = kneading_cmp(&syms, &code.prefix);
    if ord != Ordering::Equal {
        return ord;
    }
    let r = closure_residual(code, lambda);
    if r == 0.0 {
        return Ordering::Equal;
    }
    // The tail order follows sign(c_m − P) up to the parity of R in Θ_1..Θ_{m−1},
    // and c_m − P has the sign of the residual times the branch orientation.
    let flips = code.prefix[..m1 - 1]
        .iter()
        .filter(|&&s| s == Symbol::R)
        .count();
    let positive = (r > 0.0) == (flips % 2 == 0);
    if positive {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// Slope λ ∈ (1, 2] whose kneading sequence is `code`.
pub fn solve_code_parameter(code: &KneadingCode) -> Result<f64> {
    let not_realizable = |why: &str| Error::CodeNotRealizable(format!("{code}: {why}"));
    if code.symbol(1) != Symbol::R {
        return Err(not_realizable("codes of tent maps start with R"));
    }
    let (mut lo, mut hi) = (1.0 + 1e-9, 2.0);
    match compare(code, hi) {
        Ordering::Equal => return Ok(hi),
        Ordering::Less => return Err(not_realizable("above every slope in (1,2]")),
        Ordering::Greater => {}
    }
    if compare(code, lo) != Ordering::Less {
        return Err(not_realizable("below every slope in (1,2]"));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match compare(code, mid) {
            Ordering::Less => lo = mid,
            Ordering::Greater => hi = mid,
            Ordering::Equal => {
                lo = mid;
                hi = mid;
                break;
            }
        }
    }
    let best = polish(lo, hi, |l| closure_residual(code, l));
    let r = closure_residual(code, best);
    if r.abs() > RESIDUAL_TOL {
        return Err(not_realizable(&format!(
            "closure residual {r:e} at λ = {best} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    Ok(best)
}

/// Scans a few ulps around the final bracket for the smallest |residual|.
fn polish(lo: f64, hi: f64, residual: impl Fn(f64) -> f64) -> f64 {
    let mut cands = vec![lo, hi];
    let (mut a, mut b) = (lo, hi);
    for _ in 0..8 {
        a = a.next_down();
        b = b.next_up();
        cands.push(a);
        cands.push(b);
    }
    let mut x = lo;
    while x < hi && cands.len() < 64 {
        x = x.next_up();
        cands.push(x);
    }
    cands
        .into_iter()
        .filter(|&l| l > 1.0 && l <= 2.0)
        .map(|l| (residual(l).abs(), l))
        .min_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)))
        .map(|p| p.1)
        .unwrap_or(lo)
}

/// c_{k+1}(λ) − y_λ computed by iterating g_λ.
pub fn lambda_k_residual(k: usize, lambda: f64) -> f64 {
    tent_orbit(lambda, k + 1)[k] - 1.0 / (1.0 + lambda)
}

/// λ_k with c_{k+1}(λ_k) = y_{λ_k}, i.e. λ^k(2 − λ)/2 = 1/(1 + λ).
pub fn lambda_k_family(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::UnsupportedInput("k must be at least 1".into()));
    }
    let kk = k as i32;
    let gfun = |l: f64| l.powi(kk) * (2.0 - l) / 2.0 - 1.0 / (1.0 + l);
    let fixed = |l: f64| 2.0 - 2.0 / ((1.0 + l) * l.powi(kk));
    let (mut lo, mut hi) = (1.2_f64, 2.0_f64);
    let mut x = fixed(hi);
    let mut converged = false;
    for it in 0..MAX_BISECTIONS {
        // Alternate a fixed-point proposal with a plain bisection step.
        let cand = if it % 2 == 0 { x } else { 0.5 * (lo + hi) };
        let split = if cand > lo && cand < hi {
            cand
        } else {
            0.5 * (lo + hi)
        };
        let v = gfun(split);
        if v == 0.0 {
            lo = split;
            hi = split;
        } else if v > 0.0 {
            lo = split;
        } else {
            hi = split;
        }
        x = fixed(split);
        if hi - lo <= 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!(
            "λ_{k} bracket [{lo}, {hi}] after {MAX_BISECTIONS} iterations"
        )));
    }
    let best = polish(lo, hi, |l| lambda_k_residual(k, l));
    let lhs = 2.0 - best;
    let rhs = 2.0 / (1.0 + best) * best.powi(-kk);
    if ((lhs - rhs) / lhs).abs() > 1e-10 {
        return Err(Error::NoConvergence(format!(
            "λ_{k} = {best} fails 2 − λ = 2λ^(−k)/(1+λ): {lhs} vs {rhs}"
        )));
    }
    Ok(best)
}

/// Preperiodic tent slope within `radius` of `slope`, if one is found among
/// the near-revisits c_k ≈ c_j (j < k ≤ max_n) of the critical orbit of
/// g_slope. Each candidate pair is turned into the code
/// Θ_1…Θ_{j−1}(Θ_j…Θ_{k−1})^∞ and solved; the first solution inside the
/// radius is returned.
pub fn snap_tent_slope(slope: f64, radius: f64, max_n: usize) -> Option<f64> {
    let orbit = tent_orbit(slope, max_n);
    let sym = |x: f64| Symbol::of(x, 0.5);
    for k in 2..=orbit.len() {
        // |dc_k/dλ| ≤ k λ^(k−1), so a parameter within `radius` moves c_k by at most this.
        let tol = (4.0 * radius * k as f64 * slope.powi(k as i32)).min(1e-3);
        for j in 1..k {
            if (orbit[k - 1] - orbit[j - 1]).abs() > tol {
                continue;
            }
            let prefix: Vec<Symbol> = orbit[..j - 1].iter().map(|&x| sym(x)).collect();
            let period: Vec<Symbol> = orbit[j - 1..k - 1].iter().map(|&x| sym(x)).collect();
            let Ok(code) = KneadingCode::new(prefix, period) else {
                continue;
            };
            if let Ok(l) = solve_code_parameter(&code) {
                if (l - slope).abs() <= radius {
                    return Some(l);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snaps_truncated_sqrt2() {
        let l = snap_tent_slope(1.41421356, 5e-9, 24).unwrap();
        assert!((l - std::f64::consts::SQRT_2).abs() < 1e-14);
        assert!(snap_tent_slope(1.41421, 5e-6, 24).is_some());
        assert_eq!(snap_tent_slope(1.9, 5e-9, 24), None);
    }

    #[test]
    fn periodic_point_of_fixed_tail() {
        let l = 1.7;
        let p = periodic_point(l, &[Symbol::R]);
        assert!((p - l / (1.0 + l)).abs() < 1e-15);
        let q = periodic_point(l, &[Symbol::L]);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn closure_for_lambda_k_is_spec_residual() {
        let code = KneadingCode::parse("RL^3R*").unwrap();
        for &l in &[1.85, 1.9, 1.95] {
            assert!((closure_residual(&code, l) - lambda_k_residual(3, l)).abs() < 1e-15);
        }
    }
}
