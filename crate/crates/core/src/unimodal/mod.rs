//! Piecewise expanding unimodal maps: tent maps and additive perturbations.

mod code;
mod orbit;
mod solve;
mod spec;

pub use code::{KneadingCode, Symbol};
pub use orbit::{critical_orbit, kneading_code, CriticalOrbitInfo, NEAR_CRITICAL_GUARD, REVISIT_TOL};
pub use solve::{
    closure_residual, lambda_k_family, lambda_k_residual, snap_tent_slope, solve_code_parameter,
};
pub use spec::{parse_pairs, MapSpec};

use crate::error::{Error, Result};
use crate::smooth::{Derivative, SmoothFn};
use serde::{Deserialize, Serialize};

/// Smooth perturbation direction X with sup|X| ≤ 1 on [a, b].
#[derive(Debug, Clone)]
pub struct Perturbation {
    x: SmoothFn,
    d1: Derivative,
    d2: Derivative,
}

impl Perturbation {
    /// Checks the normalization sup|X| ≤ 1 and a finite sampled variation of X'.
    pub fn new(x: SmoothFn) -> Result<Self> {
        let sup = x.sup_abs(0.0, 1.0);
        if sup > 1.0 + 1e-12 {
            return Err(Error::UnsupportedInput(format!(
                "perturbation has sup|X| = {sup} > 1 on [0,1]"
            )));
        }
        let var = x.derivative_variation(0.0, 1.0);
        if !var.is_finite() {
            return Err(Error::UnsupportedInput("X' has no finite variation".into()));
        }
        Ok(Self::unchecked(x))
    }

    /// Skips the sup-norm check (for observables reused as weights).
    pub fn unchecked(x: SmoothFn) -> Self {
        let d1 = x.derivative();
        let d2 = x.second_derivative();
        Perturbation { x, d1, d2 }
    }

    pub fn zero() -> Self {
        Self::unchecked(SmoothFn::zero())
    }

    pub fn one() -> Self {
        Self::unchecked(SmoothFn::one())
    }

    pub fn identity() -> Self {
        Self::unchecked(SmoothFn::identity())
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.x.eval(y)
    }

    pub fn deriv(&self, y: f64) -> f64 {
        self.d1.eval(y)
    }

    pub fn deriv2(&self, y: f64) -> f64 {
        self.d2.eval(y)
    }

    pub fn function(&self) -> &SmoothFn {
        &self.x
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero()
    }
}

/// Which branch of the map a point is pushed through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MapKind {
    Tent { slope: f64 },
    Perturbed { base_slope: f64, x: SmoothFn, t: f64 },
}

/// A map on [a, b] = [0, 1] with critical point c = 1/2, increasing left branch
/// and decreasing right branch, extended to the real line by the branch formulas.
#[derive(Debug, Clone)]
pub struct UnimodalMap {
    kind: MapKind,
    slope: f64,
    t: f64,
    x: Option<Perturbation>,
    a0: f64,
    b0: f64,
    inf_deriv: f64,
}

impl UnimodalMap {
    pub fn tent(slope: f64) -> Result<Self> {
        TentMap::new(slope).map(|g| g.to_map())
    }

    /// f_t = g_λ + t X∘g_λ on [0, 1].
    pub fn perturbed(base_slope: f64, x: Perturbation, t: f64) -> Result<Self> {
        TentMap::new(base_slope)?;
        let kind = MapKind::Perturbed {
            base_slope,
            x: x.function().clone(),
            t,
        };
        let mut map = UnimodalMap {
            kind,
            slope: base_slope,
            t,
            x: Some(x),
            a0: 0.0,
            b0: 1.0,
            inf_deriv: 0.0,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn from_kind(kind: &MapKind) -> Result<Self> {
        match kind {
            MapKind::Tent { slope } => Self::tent(*slope),
            MapKind::Perturbed { base_slope, x, t } => {
                Self::perturbed(*base_slope, Perturbation::new(x.clone())?, *t)
            }
        }
    }

    fn validate(&mut self) -> Result<()> {
        let n = 4096;
        // h must be increasing on the range of the base tent.
        let top = self.slope / 2.0;
        for i in 0..=n {
            let y = top * i as f64 / n as f64;
            if self.h_deriv(y) <= 0.0 {
                return Err(Error::InvalidMap(format!(
                    "1 + tX'(y) vanishes near y = {y}; branches are not monotone"
                )));
            }
        }
        let fc = self.eval(self.c());
        let (fa, fb) = (self.eval(self.a()), self.eval(self.b()));
        if fc > self.b() + 1e-15 || fa.min(fb) < self.a() - 1e-15 {
            return Err(Error::DomainEscape(format!(
                "f(c) = {fc}, f(a) = {fa}, f(b) = {fb}"
            )));
        }
        let mut inf = f64::INFINITY;
        for i in 0..=n {
            let x = self.c() * i as f64 / n as f64;
            inf = inf.min(self.deriv_branch(x, Branch::Plus).abs());
            inf = inf.min(self.deriv_branch(x + self.c(), Branch::Minus).abs());
        }
        if inf <= 1.0 {
            return Err(Error::InvalidMap(format!("inf |f'| = {inf} is not > 1")));
        }
        self.inf_deriv = inf;
        // a0: attracting fixed point of the contraction ψ_+.
        let mut a0 = self.a();
        for _ in 0..10_000 {
            let next = self.inv_plus(a0);
            if (next - a0).abs() <= 1e-16 * (1.0 + a0.abs()) {
                a0 = next;
                break;
            }
            a0 = next;
        }
        self.a0 = a0;
        self.b0 = self.inv_minus(a0);
        Ok(())
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn a(&self) -> f64 {
        0.0
    }

    pub fn b(&self) -> f64 {
        1.0
    }

    pub fn c(&self) -> f64 {
        0.5
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    /// Slope of the underlying tent map.
    pub fn base_slope(&self) -> f64 {
        self.slope
    }

    /// The slope when the map is exactly a tent map on [0, 1]. A perturbation
    /// X(y) = βy turns g_λ into the tent map of slope λ(1 + tβ).
    pub fn tent_slope(&self) -> Option<f64> {
        match &self.kind {
            MapKind::Tent { slope } => Some(*slope),
            MapKind::Perturbed { base_slope, x, t } => match x {
                SmoothFn::Poly(p) if p.degree() <= 1 && p.coeffs[0] == 0.0 => {
                    let beta = p.coeffs.get(1).copied().unwrap_or(0.0);
                    Some(base_slope * (1.0 + t * beta))
                }
                _ => None,
            },
        }
    }

    pub fn is_piecewise_linear(&self) -> bool {
        self.x.is_none() || self.tent_slope().is_some()
    }

    pub fn inf_abs_deriv(&self) -> f64 {
        self.inf_deriv
    }

    fn g(&self, x: f64) -> f64 {
        if x <= 0.5 {
            self.slope * x
        } else {
            self.slope * (1.0 - x)
        }
    }

    fn h(&self, y: f64) -> f64 {
        match &self.x {
            None => y,
            Some(x) => y + self.t * x.eval(y),
        }
    }

    fn h_deriv(&self, y: f64) -> f64 {
        match &self.x {
            None => 1.0,
            Some(x) => 1.0 + self.t * x.deriv(y),
        }
    }

    fn h_deriv2(&self, y: f64) -> f64 {
        match &self.x {
            None => 0.0,
            Some(x) => self.t * x.deriv2(y),
        }
    }

    fn h_inv(&self, y: f64) -> f64 {
        let Some(x) = &self.x else { return y };
        let mut u = y;
        for _ in 0..100 {
            let r = u + self.t * x.eval(u) - y;
            let step = r / (1.0 + self.t * x.deriv(u));
            u -= step;
            if step.abs() <= 1e-17 * (1.0 + u.abs()) {
                break;
            }
        }
        u
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.h(self.g(x))
    }

    pub fn branch(&self, x: f64) -> Branch {
        if x <= self.c() {
            Branch::Plus
        } else {
            Branch::Minus
        }
    }

    /// f' using the branch formula of `branch`, valid on the whole line.
    pub fn deriv_branch(&self, x: f64, branch: Branch) -> f64 {
        let (y, gp) = match branch {
            Branch::Plus => (self.slope * x, self.slope),
            Branch::Minus => (self.slope * (1.0 - x), -self.slope),
        };
        self.h_deriv(y) * gp
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.deriv_branch(x, self.branch(x))
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        let y = self.g(x);
        self.h_deriv2(y) * self.slope * self.slope
    }

    pub fn inv_plus(&self, y: f64) -> f64 {
        self.h_inv(y) / self.slope
    }

    pub fn inv_minus(&self, y: f64) -> f64 {
        1.0 - self.h_inv(y) / self.slope
    }

    pub fn inv(&self, y: f64, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.inv_plus(y),
            Branch::Minus => self.inv_minus(y),
        }
    }

    /// ψ_+'(y) = 1 / f'(ψ_+(y)) (positive).
    pub fn inv_plus_deriv(&self, y: f64) -> f64 {
        1.0 / (self.slope * self.h_deriv(self.h_inv(y)))
    }

    /// ψ_−'(y) = 1 / f'(ψ_−(y)) (negative).
    pub fn inv_minus_deriv(&self, y: f64) -> f64 {
        -self.inv_plus_deriv(y)
    }

    /// Evaluates both inverse branches and |ψ'| at once (shared h⁻¹ solve).
    pub fn inverse_data(&self, y: f64) -> InverseData {
        let u = self.h_inv(y);
        let w = 1.0 / (self.slope * self.h_deriv(u));
        InverseData {
            plus: u / self.slope,
            minus: 1.0 - u / self.slope,
            weight: w,
        }
    }

    pub fn critical_value(&self) -> f64 {
        self.eval(self.c())
    }
}

/// Both inverse images of a point, with the common |ψ'| weight.
#[derive(Debug, Clone, Copy)]
pub struct InverseData {
    pub plus: f64,
    pub minus: f64,
    pub weight: f64,
}

/// Tent map g_λ(x) = λx on [0,1/2], λ(1−x) on [1/2,1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TentMap {
    pub slope: f64,
}

impl TentMap {
    pub fn new(slope: f64) -> Result<Self> {
        if !(slope > 1.0 && slope <= 2.0) {
            return Err(Error::InvalidMap(format!(
                "tent slope {slope} outside (1, 2]"
            )));
        }
        Ok(TentMap { slope })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.5 {
            self.slope * x
        } else {
            self.slope * (1.0 - x)
        }
    }

    /// x_λ = λ/(1+λ).
    pub fn fixed_point(&self) -> f64 {
        self.slope / (1.0 + self.slope)
    }

    /// y_λ = 1/(1+λ), the left preimage of x_λ.
    pub fn left_preimage(&self) -> f64 {
        1.0 / (1.0 + self.slope)
    }

    /// z_λ = y_λ/λ.
    pub fn z(&self) -> f64 {
        self.left_preimage() / self.slope
    }

    pub fn to_map(&self) -> UnimodalMap {
        UnimodalMap {
            kind: MapKind::Tent { slope: self.slope },
            slope: self.slope,
            t: 0.0,
            x: None,
            a0: 0.0,
            b0: 1.0,
            inf_deriv: self.slope,
        }
    }
}

/// f(x) + t X(f(x)), refusing parameters for which f_t leaves [a, b].
pub fn eval_perturbed(f: &UnimodalMap, x_dir: &Perturbation, t: f64, x: f64) -> Result<f64> {
    if !(f.a()..=f.b()).contains(&x) {
        return Err(Error::UnsupportedInput(format!("x = {x} outside [a, b]")));
    }
    let ft = |p: f64| {
        let y = f.eval(p);
        y + t * x_dir.eval(y)
    };
    let fc = ft(f.c());
    let lo = ft(f.a()).min(ft(f.b()));
    if fc > f.b() || lo < f.a() {
        return Err(Error::DomainEscape(format!(
            "t = {t}: f_t(c) = {fc}, min(f_t(a), f_t(b)) = {lo}"
        )));
    }
    Ok(ft(x))
}
