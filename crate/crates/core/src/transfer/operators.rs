use super::grid::GridFunction;
use super::hybrid::{HybridBvFunction, Jump};
use crate::error::{Error, Result};
use crate::unimodal::UnimodalMap;
use rayon::prelude::*;

const SUPPORT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    L1,
    L0,
}

/// Perron–Frobenius operator χ(ψ_+'φ∘ψ_+ + |ψ_−'|φ∘ψ_−).
pub fn apply_l1(f: &UnimodalMap, phi: &HybridBvFunction) -> Result<HybridBvFunction> {
    apply(f, phi, Kind::L1)
}

/// Signed operator χ(φ∘ψ_+ − φ∘ψ_−).
pub fn apply_l0(f: &UnimodalMap, phi: &HybridBvFunction) -> Result<HybridBvFunction> {
    apply(f, phi, Kind::L0)
}

/// n-fold application.
pub fn apply_l1_n(f: &UnimodalMap, phi: &HybridBvFunction, n: usize) -> Result<HybridBvFunction> {
    (0..n).try_fold(phi.clone(), |acc, _| apply_l1(f, &acc))
}

pub fn apply_l0_n(f: &UnimodalMap, phi: &HybridBvFunction, n: usize) -> Result<HybridBvFunction> {
    (0..n).try_fold(phi.clone(), |acc, _| apply_l0(f, &acc))
}

/// Suffix sums over jumps sorted by image location.
struct ImageJumps {
    loc: Vec<f64>,
    s: Vec<f64>,
    sw: Vec<f64>,
}

impl ImageJumps {
    fn new(mut items: Vec<(f64, f64, f64)>) -> Self {
        items.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = items.len();
        let mut s = vec![0.0; n + 1];
        let mut sw = vec![0.0; n + 1];
        for i in (0..n).rev() {
            s[i] = s[i + 1] + items[i].1;
            sw[i] = sw[i + 1] + items[i].1 * items[i].2;
        }
        ImageJumps { loc: items.iter().map(|p| p.0).collect(), s, sw }
    }

    /// (Σ s, Σ s·w) over images strictly right of x.
    fn above(&self, x: f64) -> (f64, f64) {
        let i = self.loc.partition_point(|&u| u <= x);
        (self.s[i], self.sw[i])
    }
}

fn apply(f: &UnimodalMap, phi: &HybridBvFunction, kind: Kind) -> Result<HybridBvFunction> {
    let (a0, b) = (f.a0(), f.b());
    if let Some(j) = phi
        .jumps()
        .iter()
        .find(|j| j.location < a0 - SUPPORT_SLACK || j.location > b + SUPPORT_SLACK)
    {
        return Err(Error::UnsupportedInput(format!(
            "jump at {} outside [{a0}, {b}]",
            j.location
        )));
    }
    let c = f.c();
    let c1 = f.critical_value();
    let weights = |y: f64| -> (f64, f64, f64, f64) {
        let d = f.inverse_data(y);
        match kind {
            Kind::L1 => (d.plus, d.minus, d.weight, d.weight),
            Kind::L0 => (d.plus, d.minus, 1.0, -1.0),
        }
    };
    let linear = kind == Kind::L0 || f.is_piecewise_linear();

    let mut out_jumps = Vec::with_capacity(phi.jumps().len() + 1);
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut s_right = 0.0;
    for j in phi.jumps() {
        let fu = f.eval(j.location);
        let (_, _, wp, wm) = weights(fu);
        if j.location <= c {
            out_jumps.push(Jump { location: fu, amplitude: j.amplitude * wp });
            left.push((fu, j.amplitude, wp));
        } else {
            out_jumps.push(Jump { location: fu, amplitude: -j.amplitude * wm });
            right.push((fu, j.amplitude, wm));
            s_right += j.amplitude;
        }
    }
    let left = ImageJumps::new(left);
    let right = ImageJumps::new(right);

    let cont = |x: f64| -> f64 {
        let (p, m, wp, wm) = weights(x);
        let mut v = wp * phi.regular.eval(p) + wm * phi.regular.eval(m) - (wp + wm) * s_right;
        if !linear {
            let (a1, b1) = left.above(x);
            let (a2, b2) = right.above(x);
            v += -wp * a1 + b1 + wm * a2 - b2;
        }
        v
    };

    let grid = &phi.regular;
    let cut = cont(c1);
    let values: Vec<f64> = (0..=grid.cells())
        .into_par_iter()
        .map(|i| {
            let x = grid.node(i);
            if x <= c1 {
                cont(x) - cut
            } else {
                0.0
            }
        })
        .collect();
    out_jumps.push(Jump { location: c1, amplitude: -cut });
    Ok(HybridBvFunction::new(
        GridFunction::new(grid.lo, grid.hi, values),
        out_jumps,
    ))
}
