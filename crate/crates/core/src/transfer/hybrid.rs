use super::grid::GridFunction;
use crate::quad::gauss5;
use crate::smooth::SmoothFn;
use serde::{Deserialize, Serialize};

/// Amplitudes below this are dropped.
pub const PRUNE: f64 = 1e-13;
/// Jump locations closer than this are merged.
pub const MERGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub location: f64,
    pub amplitude: f64,
}

/// H_u(x) = −1 for x < u, 0 for x > u, −1/2 at u.
pub fn heaviside(u: f64, x: f64) -> f64 {
    if x < u {
        -1.0
    } else if x > u {
        0.0
    } else {
        -0.5
    }
}

/// φ = Σ s_u H_u + r with r a grid function. Point values at a jump location
/// are the midpoint of the one-sided limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridBvFunction {
    pub regular: GridFunction,
    jumps: Vec<Jump>,
    #[serde(skip)]
    suffix: Vec<f64>,
}

impl PartialEq for HybridBvFunction {
    fn eq(&self, other: &Self) -> bool {
        self.regular == other.regular && self.jumps == other.jumps
    }
}

impl HybridBvFunction {
    /// Sorts, merges coincident locations and prunes tiny amplitudes.
    pub fn new(regular: GridFunction, jumps: Vec<Jump>) -> Self {
        let mut js: Vec<Jump> = jumps
            .into_iter()
            .filter(|j| j.amplitude != 0.0 && j.location.is_finite())
            .collect();
        js.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut merged: Vec<Jump> = Vec::with_capacity(js.len());
        for j in js {
            match merged.last_mut() {
                Some(last) if (j.location - last.location).abs() <= MERGE => {
                    last.amplitude += j.amplitude;
                }
                _ => merged.push(j),
            }
        }
        merged.retain(|j| j.amplitude.abs() >= PRUNE);
        let mut out = HybridBvFunction {
            regular,
            jumps: merged,
            suffix: Vec::new(),
        };
        out.rebuild();
        out
    }

    fn rebuild(&mut self) {
        let mut suffix = vec![0.0; self.jumps.len() + 1];
        for i in (0..self.jumps.len()).rev() {
            suffix[i] = suffix[i + 1] + self.jumps[i].amplitude;
        }
        self.suffix = suffix;
    }

    /// Restores cached sums after deserialization.
    pub fn restored(mut self) -> Self {
        self.rebuild();
        self
    }

    pub fn zero(lo: f64, hi: f64, cells: usize) -> Self {
        Self::new(GridFunction::zeros(lo, hi, cells), Vec::new())
    }

    pub fn from_regular(regular: GridFunction) -> Self {
        Self::new(regular, Vec::new())
    }

    pub fn from_fn(lo: f64, hi: f64, cells: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::from_regular(GridFunction::from_fn(lo, hi, cells, f))
    }

    /// Pure jump function Σ s H_u on the given grid.
    pub fn from_jumps(lo: f64, hi: f64, cells: usize, jumps: Vec<Jump>) -> Self {
        Self::new(GridFunction::zeros(lo, hi, cells), jumps)
    }

    /// a·1_{[p, q]} as the jump pair (p, +a), (q, −a).
    pub fn indicator(lo: f64, hi: f64, cells: usize, p: f64, q: f64, a: f64) -> Self {
        Self::from_jumps(
            lo,
            hi,
            cells,
            vec![
                Jump { location: p, amplitude: a },
                Jump { location: q, amplitude: -a },
            ],
        )
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn lo(&self) -> f64 {
        self.regular.lo
    }

    pub fn hi(&self) -> f64 {
        self.regular.hi
    }

    pub fn cells(&self) -> usize {
        self.regular.cells()
    }

    /// Σ s H_u(x).
    pub fn singular_at(&self, x: f64) -> f64 {
        let gt = self.jumps.partition_point(|j| j.location <= x);
        let ge = self.jumps.partition_point(|j| j.location < x);
        -self.suffix[gt] - 0.5 * (self.suffix[ge] - self.suffix[gt])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.regular.eval(x) + self.singular_at(x)
    }

    pub fn left_limit(&self, x: f64) -> f64 {
        let ge = self.jumps.partition_point(|j| j.location < x);
        self.regular.eval(x) - self.suffix[ge]
    }

    pub fn right_limit(&self, x: f64) -> f64 {
        let gt = self.jumps.partition_point(|j| j.location <= x);
        self.regular.eval(x) - self.suffix[gt]
    }

    pub fn total_jump(&self) -> f64 {
        self.suffix[0]
    }

    /// Σ|s| plus the sampled variation of the regular part.
    pub fn variation(&self) -> f64 {
        self.jumps.iter().map(|j| j.amplitude.abs()).sum::<f64>() + self.regular.variation()
    }

    /// Breakpoints of the piecewise-linear representation inside [lo, hi].
    fn pieces(&self, extra: &[f64]) -> Vec<f64> {
        let mut pts = self.regular.nodes();
        pts.extend(
            self.jumps
                .iter()
                .map(|j| j.location)
                .chain(extra.iter().copied())
                .filter(|&u| u > self.lo() && u < self.hi()),
        );
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// ∫_{lo}^{hi} φ dx, exact for the representation.
    pub fn integral(&self) -> f64 {
        let (lo, hi) = (self.lo(), self.hi());
        let sing: f64 = self
            .jumps
            .iter()
            .map(|j| -j.amplitude * (j.location.clamp(lo, hi) - lo))
            .sum();
        self.regular.integral() + sing
    }

    /// ∫_{lo}^{hi} |φ| dx, exact for the representation.
    pub fn l1_norm(&self) -> f64 {
        let pts = self.pieces(&[]);
        pts.windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let m = 0.5 * (a + b);
                let s = self.singular_at(m);
                let ya = self.regular.eval(a) + s;
                let yb = self.regular.eval(b) + s;
                abs_linear_integral(ya, yb, b - a)
            })
            .sum()
    }

    /// ∫_{lo}^{hi} φ·g dx by Gauss rules on the linear pieces.
    pub fn integrate_with(&self, g: impl Fn(f64) -> f64, extra_breaks: &[f64]) -> f64 {
        let pts = self.pieces(extra_breaks);
        pts.windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let s = self.singular_at(0.5 * (a + b));
                let (ra, rb) = (self.regular.eval(a), self.regular.eval(b));
                gauss5(
                    |x| (ra + (rb - ra) * (x - a) / (b - a) + s) * g(x),
                    a,
                    b,
                )
            })
            .sum()
    }

    /// ∫_{lo}^{hi} φ·ψ dx for a smooth ψ.
    pub fn integrate_smooth(&self, psi: &SmoothFn) -> f64 {
        Pairing::new(&self.regular, psi).apply(self)
    }

    pub fn scale(&self, c: f64) -> Self {
        let regular = self.regular.map(|_, v| c * v);
        let jumps = self
            .jumps
            .iter()
            .map(|j| Jump { location: j.location, amplitude: c * j.amplitude })
            .collect();
        Self::new(regular, jumps)
    }

    /// Linear combination a·self + b·other on a shared grid.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert!(self.regular.same_grid(&other.regular), "grids differ");
        let values = self
            .regular
            .values
            .iter()
            .zip(&other.regular.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        let regular = GridFunction::new(self.lo(), self.hi(), values);
        let jumps = self
            .jumps
            .iter()
            .map(|j| Jump { location: j.location, amplitude: a * j.amplitude })
            .chain(
                other
                    .jumps
                    .iter()
                    .map(|j| Jump { location: j.location, amplitude: b * j.amplitude }),
            )
            .collect();
        Self::new(regular, jumps)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(1.0, other, -1.0)
    }

    /// g·φ for a smooth g: jumps (u, g(u)s) and regular part
    /// g·r + Σ s (g − g(u)) H_u, which is continuous.
    pub fn mul_smooth(&self, g: impl Fn(f64) -> f64) -> Self {
        let gu: Vec<f64> = self.jumps.iter().map(|j| g(j.location)).collect();
        let regular = self.regular.map(|x, r| {
            let gx = g(x);
            let rem: f64 = self
                .jumps
                .iter()
                .zip(&gu)
                .filter(|(j, _)| x <= j.location)
                .map(|(j, &g0)| j.amplitude * (gx - g0) * heaviside(j.location, x))
                .sum();
            gx * r + rem
        });
        let jumps = self
            .jumps
            .iter()
            .zip(&gu)
            .map(|(j, &g0)| Jump { location: j.location, amplitude: j.amplitude * g0 })
            .collect();
        Self::new(regular, jumps)
    }

    /// Derivative of the regular part, as a jump-free function.
    pub fn regular_derivative(&self) -> Self {
        Self::from_regular(self.regular.derivative())
    }

    /// Point values Σ-free: the sampled total function at the grid nodes.
    pub fn node_values(&self) -> Vec<f64> {
        self.regular
            .nodes()
            .into_iter()
            .map(|x| self.eval(x))
            .collect()
    }
}

fn abs_linear_integral(ya: f64, yb: f64, len: f64) -> f64 {
    if ya * yb >= 0.0 {
        0.5 * (ya.abs() + yb.abs()) * len
    } else {
        let t = ya.abs() / (ya.abs() + yb.abs());
        0.5 * (ya.abs() * t + yb.abs() * (1.0 - t)) * len
    }
}

/// Precomputed pairing φ ↦ ∫_{lo}^{hi} φ ψ dx for a fixed grid and smooth ψ:
/// hat-function moments for the regular part, exact primitives for jumps.
#[derive(Debug, Clone)]
pub struct Pairing {
    lo: f64,
    hi: f64,
    weights: Vec<f64>,
    psi: SmoothFn,
}

impl Pairing {
    pub fn new(grid: &GridFunction, psi: &SmoothFn) -> Self {
        let n = grid.cells();
        let h = grid.h();
        let brk = psi.breakpoints();
        let mut weights = vec![0.0; n + 1];
        for i in 0..n {
            let (a, b) = (grid.node(i), grid.node(i + 1));
            let mut pts = vec![a, b];
            pts.extend(brk.iter().copied().filter(|&u| u > a && u < b));
            pts.sort_by(f64::total_cmp);
            for w in pts.windows(2) {
                weights[i] += gauss5(|x| psi.eval(x) * (b - x) / h, w[0], w[1]);
                weights[i + 1] += gauss5(|x| psi.eval(x) * (x - a) / h, w[0], w[1]);
            }
        }
        Pairing { lo: grid.lo, hi: grid.hi, weights, psi: psi.clone() }
    }

    pub fn apply(&self, phi: &HybridBvFunction) -> f64 {
        assert!(
            phi.lo() == self.lo && phi.hi() == self.hi && phi.regular.values.len() == self.weights.len(),
            "pairing built for another grid"
        );
        let reg: f64 = self
            .weights
            .iter()
            .zip(&phi.regular.values)
            .map(|(w, v)| w * v)
            .sum();
        let sing: f64 = phi
            .jumps
            .iter()
            .map(|j| -j.amplitude * self.psi.integral(self.lo, j.location.clamp(self.lo, self.hi)))
            .sum();
        reg + sing
    }
}
