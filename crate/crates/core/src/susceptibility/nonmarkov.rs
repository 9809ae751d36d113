use super::markov::{richardson, RESIDUE_NODES};
use super::series::{check_c1, orbit_points, resolvent_argument};
use crate::error::{Error, Result};
use crate::saltus::{weighted_jump, SaltusDecomposition};
use crate::smooth::SmoothFn;
use crate::transfer::{apply_l0, apply_l1, GridFunction, HybridBvFunction, Jump, Pairing};
use crate::unimodal::{CriticalOrbitInfo, Perturbation, UnimodalMap};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psi1 {
    pub value: f64,
    /// −Σ_j φ(c_j) Σ_{k≤j} s_k X(c_k).
    pub outer: f64,
    /// ∫(id − L1)⁻¹(X'ρ_s + (Xρ_r)')φ dx.
    pub resolvent: f64,
    pub outer_terms: usize,
    pub neumann_terms: usize,
    /// Bound on what the truncations leave out.
    pub truncation: f64,
}

/// Cumulative sums S_j = Σ_{k≤j} s_k X(c_k), j = 1..depth.
fn cumulative(dec: &SaltusDecomposition, x: &Perturbation) -> Vec<f64> {
    let depth = dec.jumps.iter().map(|j| j.k).max().unwrap_or(0);
    let mut s = vec![0.0; depth];
    for j in &dec.jumps {
        s[j.k - 1] += j.amplitude * x.eval(j.location);
    }
    s.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Ψ₁ for maps with J(f, X) = 0.
#[allow(clippy::too_many_arguments)]
pub fn psi1_nonmarkov(
    f: &UnimodalMap,
    orbit: &CriticalOrbitInfo,
    dec: &SaltusDecomposition,
    rho0: &HybridBvFunction,
    x: &Perturbation,
    phi: &SmoothFn,
    tol: f64,
    max_terms: usize,
) -> Result<Psi1> {
    let (lo, hi) = (f.a0(), f.b());
    check_c1(phi, lo, hi)?;
    let jw = weighted_jump(dec, x);
    if jw.value.abs() > tol {
        return Err(Error::NonzeroJump(jw.value));
    }
    let sums = cumulative(dec, x);
    let pts = orbit_points(f, orbit, sums.len());
    let sup_phi = phi.sup_abs(lo, hi);
    let sup_x = x.function().sup_abs(lo, hi);
    // With J = 0, |S_j| ≤ sup|X| Σ_{k>j}|s_k| ≤ sup|X| C ξ^j.
    let bound = |j: usize| match dec.tail {
        Some(t) => sup_x * t.bound(j) * sup_phi / (1.0 - t.xi),
        None => 0.0,
    };
    let mut outer = 0.0;
    let mut outer_terms = sums.len();
    for (j, s) in sums.iter().enumerate() {
        outer -= phi.eval(pts[j]) * s;
        if dec.tail.is_some() && bound(j + 1) < tol / 10.0 {
            outer_terms = j + 1;
            break;
        }
    }
    let outer_trunc = if dec.preperiodic.is_some() { 0.0 } else { bound(outer_terms) };

    let cells = rho0.cells();
    let mut g = resolvent_argument(f, dec, x, cells);
    let mass = g.integral();
    if mass.abs() > tol {
        return Err(Error::NonZeroMean(mass));
    }
    let rho_mass = rho0.integral();
    let project = |h: HybridBvFunction| {
        let m = h.integral();
        h.combine(1.0, rho0, -m / rho_mass)
    };
    g = project(g);
    let pairing = Pairing::new(&GridFunction::zeros(lo, hi, cells), phi);
    let mut resolvent = 0.0;
    let mut neumann_terms = 0;
    let mut last_inc = f64::INFINITY;
    for m in 0..max_terms {
        let inc = pairing.apply(&g);
        resolvent += inc;
        neumann_terms = m + 1;
        let size = g.l1_norm();
        last_inc = size * sup_phi;
        if last_inc < tol / 10.0 {
            break;
        }
        g = project(apply_l1(f, &g)?);
    }
    if last_inc >= tol / 10.0 {
        return Err(Error::NoConvergence(format!(
            "Neumann series increment {last_inc:e} after {max_terms} terms"
        )));
    }
    Ok(Psi1 {
        value: outer - resolvent,
        outer,
        resolvent,
        outer_terms,
        neumann_terms,
        truncation: outer_trunc + last_inc,
    })
}

/// Ψ̃(z) for X ≡ 1, with ρ_s(z) = Σ z^k s_k H_{c_k}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedPsi {
    pub z: Complex64,
    pub value: Complex64,
    pub singular: Complex64,
    pub regular: Complex64,
    pub terms: usize,
}

/// ∫L0ⁿ(ρ_r)φ' dx for n = 0..n_terms.
fn regular_moments(
    f: &UnimodalMap,
    dec: &SaltusDecomposition,
    phi: &SmoothFn,
    n_terms: usize,
    cells: usize,
) -> Result<Vec<f64>> {
    let (lo, hi) = (f.a0(), f.b());
    let r = dec.regular_on(lo, hi, cells);
    if r.max_abs() == 0.0 {
        return Ok(vec![0.0; n_terms]);
    }
    let dphi = phi.derivative();
    let brk = phi.breakpoints();
    let mut g = HybridBvFunction::from_regular(r);
    let mut out = Vec::with_capacity(n_terms);
    for n in 0..n_terms {
        if n > 0 {
            g = apply_l0(f, &g)?;
        }
        out.push(g.integrate_with(|y| dphi.eval(y), &brk));
    }
    Ok(out)
}

/// Closed form Σ_j z^j S_j (φ(a0) − φ(c_j)) plus Σ_n zⁿ∫L0ⁿ(ρ_r)φ'.
pub fn regularized_psi(
    f: &UnimodalMap,
    orbit: &CriticalOrbitInfo,
    dec: &SaltusDecomposition,
    phi: &SmoothFn,
    z: Complex64,
    n_terms: usize,
    cells: usize,
) -> Result<RegularizedPsi> {
    check_c1(phi, f.a0(), f.b())?;
    let sums = cumulative(dec, &Perturbation::one());
    let depth = sums.len();
    let pts = orbit_points(f, orbit, depth.max(n_terms));
    let pa = phi.eval(f.a0());
    let s_last = sums.last().copied().unwrap_or(0.0);
    let mut singular = Complex64::new(0.0, 0.0);
    let mut zj = Complex64::new(1.0, 0.0);
    for (j, &c) in pts.iter().enumerate() {
        zj *= z;
        let s = if j < depth { sums[j] } else { s_last };
        singular += zj * s * (pa - phi.eval(c));
    }
    let moments = regular_moments(f, dec, phi, n_terms, cells)?;
    let regular = moments
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &m| acc * z + m);
    Ok(RegularizedPsi {
        z,
        value: singular + regular,
        singular,
        regular,
        terms: pts.len(),
    })
}

/// Ψ̃(1) for X ≡ 1 through the double series Σ_n Σ_k z^{n+k} s_k ∫H_{c_{k+n}}φ'
/// at z = 1 − 2^{−m}, extrapolated to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedAtOne {
    pub value: f64,
    pub closed_form: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub diagonal: Vec<f64>,
}

pub fn regularized_at_one(
    f: &UnimodalMap,
    orbit: &CriticalOrbitInfo,
    dec: &SaltusDecomposition,
    phi: &SmoothFn,
    n_terms: usize,
    cells: usize,
) -> Result<RegularizedAtOne> {
    let depth = dec.jumps.iter().map(|j| j.k).max().unwrap_or(0);
    let pts = orbit_points(f, orbit, depth + n_terms);
    let pa = phi.eval(f.a0());
    let moments = regular_moments(f, dec, phi, n_terms, cells)?;
    let nodes: Vec<f64> = RESIDUE_NODES.map(|m| 1.0 - 2f64.powi(-m)).collect();
    let values: Vec<f64> = nodes
        .iter()
        .map(|&z| {
            let mut total = 0.0;
            for j in &dec.jumps {
                let zk = z.powi(j.k as i32);
                let mut inner = 0.0;
                let mut zn = 1.0;
                for n in 0..n_terms {
                    inner += zn * (pa - phi.eval(pts[j.k + n - 1]));
                    zn *= z;
                }
                total += zk * j.amplitude * inner;
            }
            total + moments.iter().rev().fold(0.0, |acc, &m| acc * z + m)
        })
        .collect();
    let diagonal = richardson(&values);
    let closed_form = regularized_psi(f, orbit, dec, phi, Complex64::new(1.0, 0.0), n_terms, cells)?
        .value
        .re;
    Ok(RegularizedAtOne {
        value: *diagonal.last().unwrap(),
        closed_form,
        nodes,
        values,
        diagonal,
    })
}

/// Values of Σ_j z^j φ(c_j) at z = 1 − 2^{−m} and their extrapolation. The
/// limit is reported only; `settled` says whether the last two
/// extrapolants agree to 5%.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbelDiagnostic {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub extrapolated: f64,
    pub settled: bool,
}

pub fn abel_diagnostic(
    f: &UnimodalMap,
    orbit: &CriticalOrbitInfo,
    phi: &SmoothFn,
    n_terms: usize,
) -> AbelDiagnostic {
    let pts = orbit_points(f, orbit, n_terms);
    let nodes: Vec<f64> = RESIDUE_NODES.map(|m| 1.0 - 2f64.powi(-m)).collect();
    let values: Vec<f64> = nodes
        .iter()
        .map(|&z| {
            pts.iter()
                .rev()
                .fold(0.0, |acc, &c| (acc + phi.eval(c)) * z)
        })
        .collect();
    let diag = richardson(&values);
    let k = diag.len();
    let settled = (diag[k - 1] - diag[k - 2]).abs() <= 0.05 * diag[k - 1].abs().max(1e-12);
    AbelDiagnostic { nodes, values, extrapolated: diag[k - 1], settled }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub location: f64,
    pub weight: f64,
}

/// Checks of (id − L0)ρ̃_s = ρ_s and (id − f_*)μ_s = Xρ_s'.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub depth: usize,
    /// sup over grid nodes of |(id − L0)ρ̃_s − ρ_s|.
    pub grid_residual: f64,
    /// |Σ_{k≤depth} s_k|, the size of the truncation remainder.
    pub tail_bound: f64,
    /// Largest coefficient mismatch of the point-mass identity off c_{depth+1}.
    pub point_residual: f64,
    pub point_tail: f64,
    /// Coefficient of δ_{c_1} on the left and right side.
    pub c1_lhs: f64,
    pub c1_rhs: f64,
    pub rho_tilde: Vec<Jump>,
    pub mu: Vec<PointMass>,
}

pub fn candidate_check(
    f: &UnimodalMap,
    dec: &SaltusDecomposition,
    x: &Perturbation,
    cells: usize,
    tol: f64,
) -> Result<CandidateReport> {
    let j1 = weighted_jump(dec, &Perturbation::one());
    if j1.value.abs() > tol + j1.tail_bound {
        return Err(Error::NonzeroJump(j1.value));
    }
    let jx = weighted_jump(dec, x);
    if jx.value.abs() > tol + jx.tail_bound {
        return Err(Error::NonzeroJump(jx.value));
    }
    let (lo, hi) = (f.a0(), f.b());
    let depth = dec.jumps.len();
    let mut acc = 0.0;
    let mut accx = 0.0;
    let mut rho_tilde = Vec::with_capacity(depth);
    let mut mu = Vec::with_capacity(depth);
    for j in &dec.jumps {
        acc += j.amplitude;
        accx += j.amplitude * x.eval(j.location);
        rho_tilde.push(Jump { location: j.location, amplitude: acc });
        mu.push(PointMass { location: j.location, weight: accx });
    }
    let rt = HybridBvFunction::from_jumps(lo, hi, cells, rho_tilde.clone());
    let rho_s = HybridBvFunction::from_jumps(
        lo,
        hi,
        cells,
        dec.jumps
            .iter()
            .map(|j| Jump { location: j.location, amplitude: j.amplitude })
            .collect(),
    );
    let lhs = rt.sub(&apply_l0(f, &rt)?);
    let diff = lhs.sub(&rho_s);
    let grid_residual = diff
        .regular
        .nodes()
        .into_iter()
        .map(|y| diff.eval(y).abs())
        .fold(0.0, f64::max);

    // (id − f_*)μ as merged point masses.
    let mut pts: Vec<PointMass> = mu.clone();
    pts.extend(mu.iter().map(|p| PointMass { location: f.eval(p.location), weight: -p.weight }));
    pts.sort_by(|a, b| a.location.total_cmp(&b.location));
    let mut merged: Vec<PointMass> = Vec::new();
    for p in pts {
        match merged.last_mut() {
            Some(q) if (q.location - p.location).abs() <= 1e-12 => q.weight += p.weight,
            _ => merged.push(p),
        }
    }
    let target = |loc: f64| -> f64 {
        dec.jumps
            .iter()
            .filter(|j| (j.location - loc).abs() <= 1e-12)
            .map(|j| j.amplitude * x.eval(j.location))
            .sum()
    };
    let tail_loc = dec.jumps.last().map(|j| f.eval(j.location));
    let mut point_residual: f64 = 0.0;
    let mut point_tail: f64 = 0.0;
    for p in &merged {
        let d = (p.weight - target(p.location)).abs();
        match tail_loc {
            Some(t) if (p.location - t).abs() <= 1e-12 => point_tail = point_tail.max(d),
            _ => point_residual = point_residual.max(d),
        }
    }
    let c1 = f.critical_value();
    let c1_lhs = merged
        .iter()
        .filter(|p| (p.location - c1).abs() <= 1e-12)
        .map(|p| p.weight)
        .sum();
    Ok(CandidateReport {
        depth,
        grid_residual,
        tail_bound: acc.abs(),
        point_residual,
        point_tail,
        c1_lhs,
        c1_rhs: target(c1),
        rho_tilde,
        mu,
    })
}
