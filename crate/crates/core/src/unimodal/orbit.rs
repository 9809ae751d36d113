use super::code::Symbol;
use super::UnimodalMap;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Absolute tolerance for detecting an orbit revisit.
pub const REVISIT_TOL: f64 = 1e-10;
/// Orbits passing this close to c are rejected.
pub const NEAR_CRITICAL_GUARD: f64 = 1e-9;

/// Postcritical orbit c_k = f^k(c), k ≥ 1, with its itinerary and, when found,
/// the preperiod n0 and period n1 of c_{n0}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalOrbitInfo {
    /// c_1, c_2, …, stored from index 0.
    pub orbit: Vec<f64>,
    pub code: Vec<char>,
    pub preperiodic: Option<(usize, usize)>,
}

impl CriticalOrbitInfo {
    /// Builds the record from a precomputed orbit, with optional (n0, n1).
    pub fn from_parts(orbit: Vec<f64>, c: f64, preperiodic: Option<(usize, usize)>) -> Self {
        let code = orbit
            .iter()
            .map(|&x| Symbol::of(x, c).to_string().chars().next().unwrap())
            .collect();
        CriticalOrbitInfo {
            orbit,
            code,
            preperiodic,
        }
    }

    /// N = n0 + n1 − 1 when preperiodic, the stored depth otherwise.
    pub fn n_points(&self) -> usize {
        match self.preperiodic {
            Some((n0, n1)) => n0 + n1 - 1,
            None => self.orbit.len(),
        }
    }

    pub fn is_markov(&self) -> bool {
        self.preperiodic.is_some()
    }

    /// Orbit index after wrapping the periodic tail: for preperiodic orbits
    /// every k ≥ 1 is mapped into 1..=N.
    pub fn reduce(&self, k: usize) -> usize {
        assert!(k >= 1);
        match self.preperiodic {
            Some((n0, n1)) if k >= n0 => n0 + (k - n0) % n1,
            _ => k,
        }
    }

    /// c_k for k ≥ 1. Preperiodic orbits wrap periodically; others must be
    /// stored to depth k.
    pub fn point(&self, k: usize) -> f64 {
        let j = self.reduce(k);
        self.orbit[j - 1]
    }

    /// c_k for any k, extending a non-preperiodic orbit by iterating f.
    pub fn extended(&self, f: &UnimodalMap, len: usize) -> Vec<f64> {
        if self.is_markov() {
            return (1..=len).map(|k| self.point(k)).collect();
        }
        let mut out = self.orbit.clone();
        out.truncate(len);
        while out.len() < len {
            let last = *out.last().unwrap();
            out.push(f.eval(last));
        }
        out
    }

    /// Orbit points c_1..c_N with their indices.
    pub fn points(&self) -> Vec<(usize, f64)> {
        (1..=self.n_points()).map(|k| (k, self.point(k))).collect()
    }

    pub fn symbol(&self, k: usize) -> Symbol {
        match self.code[self.reduce(k) - 1] {
            'L' => Symbol::L,
            'R' => Symbol::R,
            _ => Symbol::C,
        }
    }
}

/// Iterates the critical point, detecting the first revisit within `tol`.
pub fn critical_orbit(f: &UnimodalMap, n_max: usize, tol: f64) -> Result<CriticalOrbitInfo> {
    assert!(n_max >= 2 && tol > 0.0);
    let c = f.c();
    let guard = NEAR_CRITICAL_GUARD.max(tol);
    let mut orbit: Vec<f64> = Vec::with_capacity(n_max);
    let mut x = c;
    for k in 1..=n_max {
        x = f.eval(x);
        if (x - c).abs() < guard {
            return Err(Error::NearCriticalOrbit { step: k, tol: guard });
        }
        // The first revisit c_k ≈ c_j yields the minimal pair (n0, n1) = (j, k − j).
        if let Some(j) = orbit.iter().position(|&y| (y - x).abs() <= tol) {
            let (n0, n1) = (j + 1, k - (j + 1));
            let big_n = n0 + n1 - 1;
            let len = n_max.min(big_n + n1);
            while orbit.len() < len {
                let i = orbit.len();
                orbit.push(orbit[i - n1]);
            }
            orbit.truncate(len.max(big_n));
            return Ok(CriticalOrbitInfo::from_parts(orbit, c, Some((n0, n1))));
        }
        orbit.push(x);
    }
    Ok(CriticalOrbitInfo::from_parts(orbit, c, None))
}

/// First n symbols of the itinerary of c_1, c_2, ….
pub fn kneading_code(f: &UnimodalMap, n: usize) -> Result<Vec<Symbol>> {
    let info = critical_orbit(f, n.max(2), REVISIT_TOL)?;
    let pts = if info.is_markov() {
        (1..=n).map(|k| info.point(k)).collect()
    } else {
        info.orbit[..n].to_vec()
    };
    Ok(pts.into_iter().map(|x| Symbol::of(x, f.c())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g2_orbit() {
        let f = UnimodalMap::tent(2.0).unwrap();
        let info = critical_orbit(&f, 64, REVISIT_TOL).unwrap();
        assert_eq!(info.preperiodic, Some((2, 1)));
        assert_eq!(info.orbit, vec![1.0, 0.0, 0.0]);
        assert_eq!(info.n_points(), 2);
        assert_eq!(info.point(10), 0.0);
    }

    #[test]
    fn respects_n_max() {
        let f = UnimodalMap::tent(1.9).unwrap();
        let info = critical_orbit(&f, 40, REVISIT_TOL).unwrap();
        assert!(info.preperiodic.is_none());
        assert_eq!(info.orbit.len(), 40);
    }
}
