use super::hybrid::{HybridBvFunction, Jump};
use crate::error::{Error, Result};
use crate::smooth::SmoothFn;
use crate::unimodal::{critical_orbit, CriticalOrbitInfo, UnimodalMap, REVISIT_TOL};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Step density: `plateaus[i]` on (breakpoints[i], breakpoints[i+1]), zero
/// outside the first and last breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantDensity {
    pub breakpoints: Vec<f64>,
    pub plateaus: Vec<f64>,
    /// Orbit index k of each breakpoint c_k.
    #[serde(skip)]
    pub orbit_indices: Vec<usize>,
}

impl PiecewiseConstantDensity {
    pub fn cell_lengths(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn total_mass(&self) -> f64 {
        self.plateaus
            .iter()
            .zip(self.cell_lengths())
            .map(|(v, l)| v * l)
            .sum()
    }

    fn left_value(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.plateaus[i - 1]
        }
    }

    fn right_value(&self, i: usize) -> f64 {
        self.plateaus.get(i).copied().unwrap_or(0.0)
    }

    /// Value with the midpoint convention at breakpoints.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&p| p < x);
        if i < self.breakpoints.len() && self.breakpoints[i] == x {
            return 0.5 * (self.left_value(i) + self.right_value(i));
        }
        if i == 0 || i == self.breakpoints.len() {
            0.0
        } else {
            self.plateaus[i - 1]
        }
    }

    /// Right limit minus left limit at each breakpoint.
    pub fn jumps(&self) -> Vec<(usize, f64, f64)> {
        (0..self.breakpoints.len())
            .map(|i| {
                let k = self.orbit_indices.get(i).copied().unwrap_or(0);
                (k, self.breakpoints[i], self.right_value(i) - self.left_value(i))
            })
            .collect()
    }

    /// Plateau value on the cell whose orbit endpoints are c_i and c_j.
    pub fn plateau_between(&self, i: usize, j: usize) -> Option<f64> {
        let pos = |k: usize| self.orbit_indices.iter().position(|&e| e == k);
        let (p, q) = (pos(i)?, pos(j)?);
        let (p, q) = if p < q { (p, q) } else { (q, p) };
        (q == p + 1).then(|| self.plateaus[p])
    }

    /// ∫ρφ dx, exact per cell.
    pub fn integrate(&self, phi: &SmoothFn) -> f64 {
        self.plateaus
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(v, w)| v * phi.integral(w[0], w[1]))
            .sum()
    }

    /// ∫|ρ − σ| dx for two step densities.
    pub fn l1_distance(&self, other: &PiecewiseConstantDensity) -> f64 {
        let mut pts: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .copied()
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts.windows(2)
            .map(|w| {
                let m = 0.5 * (w[0] + w[1]);
                (self.eval(m) - other.eval(m)).abs() * (w[1] - w[0])
            })
            .sum()
    }

    /// Pure-jump hybrid representation on a grid over [lo, hi].
    pub fn to_hybrid(&self, lo: f64, hi: f64, cells: usize) -> HybridBvFunction {
        let jumps = self
            .jumps()
            .into_iter()
            .map(|(_, x, s)| Jump { location: x, amplitude: s })
            .collect();
        HybridBvFunction::from_jumps(lo, hi, cells, jumps)
    }
}

/// Exact invariant density of a tent map whose critical orbit is
/// preperiodic: constant on the cells cut out by c_1, …, c_N.
pub fn invariant_density_exact_tent(f: &UnimodalMap) -> Result<PiecewiseConstantDensity> {
    let orbit = critical_orbit(f, 4096, REVISIT_TOL)?;
    exact_from_orbit(f, &orbit)
}

pub fn exact_from_orbit(f: &UnimodalMap, orbit: &CriticalOrbitInfo) -> Result<PiecewiseConstantDensity> {
    let lambda = f.tent_slope().ok_or_else(|| {
        Error::UnsupportedInput("exact densities need a tent map".into())
    })?;
    let Some((n0, n1)) = orbit.preperiodic else {
        return Err(Error::NotMarkov);
    };
    let n = n0 + n1 - 1;
    let c = f.c();
    let mut idx: Vec<usize> = (1..=n).collect();
    idx.sort_by(|&i, &j| orbit.point(i).total_cmp(&orbit.point(j)));
    let pts: Vec<f64> = idx.iter().map(|&k| orbit.point(k)).collect();
    let cells = n - 1;
    if cells == 0 {
        return Err(Error::SingularSystem("orbit has a single point".into()));
    }
    let mut rank = vec![usize::MAX; n + 1];
    for (r, &k) in idx.iter().enumerate() {
        rank[k] = r;
    }
    let image = |k: usize| rank[orbit.reduce(k + 1)];
    let rank_c1 = rank[1];
    let mut a = DMatrix::<f64>::zeros(cells, cells);
    for cell in 0..cells {
        let (l, r) = (idx[cell], idx[cell + 1]);
        let mut pieces = Vec::with_capacity(2);
        if pts[cell] < c && c < pts[cell + 1] {
            pieces.push((image(l), rank_c1));
            pieces.push((image(r), rank_c1));
        } else {
            pieces.push((image(l), image(r)));
        }
        for (p, q) in pieces {
            let (p, q) = if p <= q { (p, q) } else { (q, p) };
            for target in p..q {
                a[(target, cell)] += 1.0 / lambda;
            }
        }
    }
    let lengths: Vec<f64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
    let mut m = a.clone() - DMatrix::<f64>::identity(cells, cells);
    let mut rhs = DVector::<f64>::zeros(cells);
    for j in 0..cells {
        m[(cells - 1, j)] = lengths[j];
    }
    rhs[cells - 1] = 1.0;
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-12 * smax.max(1.0) {
        return Err(Error::SingularSystem(format!(
            "plateau system has condition {:e} (smallest singular value {smin:e})",
            smax / smin
        )));
    }
    let v = svd
        .solve(&rhs, 1e-300)
        .map_err(|e| Error::SingularSystem(e.to_string()))?;
    let resid = (&a * &v - &v).amax();
    let vmax = v.amax();
    if resid > 1e-12 * vmax.max(1.0) {
        return Err(Error::SingularSystem(format!(
            "fixed-point residual {resid:e} of the plateau system"
        )));
    }
    Ok(PiecewiseConstantDensity {
        breakpoints: pts,
        plateaus: v.iter().copied().collect(),
        orbit_indices: idx,
    })
}
