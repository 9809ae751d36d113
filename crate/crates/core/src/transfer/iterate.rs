use super::hybrid::HybridBvFunction;
use super::operators::apply_l1;
use crate::error::{Error, Result};
use crate::unimodal::UnimodalMap;

/// Invariant density as a hybrid function, from lazy iteration
/// φ ← (φ + L1φ/∫L1φ)/2 started at the normalized indicator of [c_2, c_1].
#[derive(Debug, Clone)]
pub struct HybridDensity {
    pub density: HybridBvFunction,
    pub iterations: usize,
    pub residual: f64,
}

pub fn invariant_density_hybrid(
    f: &UnimodalMap,
    cells: usize,
    max_iters: usize,
    tol: f64,
) -> Result<HybridDensity> {
    let c1 = f.critical_value();
    let c2 = f.eval(c1);
    let (lo, hi) = (f.a0(), f.b());
    let mut phi = HybridBvFunction::indicator(lo, hi, cells, c2, c1, 1.0 / (c1 - c2));
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        let next = apply_l1(f, &phi)?;
        // The grid operator loses O(h²) mass per step, so iterates are
        // renormalized as in a power iteration.
        let next = next.scale(1.0 / next.integral());
        residual = next.sub(&phi).l1_norm();
        if residual <= tol {
            return Ok(HybridDensity {
                density: next,
                iterations: it,
                residual,
            });
        }
        phi = phi.combine(0.5, &next, 0.5);
    }
    Err(Error::NoConvergence(format!(
        "hybrid density iteration residual {residual:e} after {max_iters} iterations (tol {tol:e})"
    )))
}
