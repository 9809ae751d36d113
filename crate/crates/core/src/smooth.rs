//! Smooth real functions used as perturbations and observables.

use serde::{Deserialize, Serialize};

/// Polynomial with coefficients stored constant term first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![0.0]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn antiderivative(&self) -> Polynomial {
        let mut out = vec![0.0];
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c / (i + 1) as f64),
        );
        Polynomial::new(out)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

/// C¹ bump with unit integral supported on `[lo, hi]`, scaled by `scale`.
///
/// The profile is `30 t² (1−t)²` on `t ∈ [0,1]`, the derivative of the quintic
/// smoothstep, so its antiderivative is the smoothstep itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub lo: f64,
    pub hi: f64,
    pub scale: f64,
}

impl Bump {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(hi > lo, "bump support must be a nondegenerate interval");
        Bump { lo, hi, scale: 1.0 }
    }

    pub fn scaled(lo: f64, hi: f64, scale: f64) -> Self {
        Bump { scale, ..Bump::new(lo, hi) }
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        let t = (x - self.lo) / self.width();
        self.scale * 30.0 * t * t * (1.0 - t) * (1.0 - t) / self.width()
    }

    pub fn deriv(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        let w = self.width();
        let t = (x - self.lo) / w;
        // d/dt [t²(1−t)²] = 2t(1−t)(1−2t)
        self.scale * 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (w * w)
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        let w = self.width();
        let t = (x - self.lo) / w;
        self.scale * 60.0 * (1.0 - 6.0 * t + 6.0 * t * t) / (w * w * w)
    }

    /// ∫_{−∞}^{x} of the bump.
    pub fn primitive(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return self.scale;
        }
        let t = (x - self.lo) / self.width();
        self.scale * t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothFn {
    Poly(Polynomial),
    Bump(Bump),
}

impl SmoothFn {
    pub fn poly(coeffs: &[f64]) -> Self {
        SmoothFn::Poly(Polynomial::new(coeffs.to_vec()))
    }

    pub fn zero() -> Self {
        SmoothFn::poly(&[0.0])
    }

    pub fn one() -> Self {
        SmoothFn::poly(&[1.0])
    }

    pub fn identity() -> Self {
        SmoothFn::poly(&[0.0, 1.0])
    }

    /// The observable `6x(1−x)`, unit integral on [0,1].
    pub fn bump6() -> Self {
        SmoothFn::poly(&[0.0, 6.0, -6.0])
    }

    pub fn bump(lo: f64, hi: f64) -> Self {
        SmoothFn::Bump(Bump::new(lo, hi))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SmoothFn::Poly(p) => p.eval(x),
            SmoothFn::Bump(b) => b.eval(x),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            SmoothFn::Poly(p) => p.derivative().eval(x),
            SmoothFn::Bump(b) => b.deriv(x),
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match self {
            SmoothFn::Poly(p) => p.derivative().derivative().eval(x),
            SmoothFn::Bump(b) => b.deriv2(x),
        }
    }

    /// The derivative as a closure-friendly object.
    pub fn derivative(&self) -> Derivative {
        match self {
            SmoothFn::Poly(p) => Derivative::Poly(p.derivative()),
            SmoothFn::Bump(b) => Derivative::Bump(b.clone()),
        }
    }

    pub fn second_derivative(&self) -> Derivative {
        match self {
            SmoothFn::Poly(p) => Derivative::Poly(p.derivative().derivative()),
            SmoothFn::Bump(b) => Derivative::Bump2(b.clone()),
        }
    }

    /// Exact ∫_a^b.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            SmoothFn::Poly(p) => {
                let q = p.antiderivative();
                q.eval(b) - q.eval(a)
            }
            SmoothFn::Bump(bp) => bp.primitive(b) - bp.primitive(a),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SmoothFn::Poly(p) => p.is_zero(),
            SmoothFn::Bump(b) => b.scale == 0.0,
        }
    }

    /// Closed support for bumps; `None` for polynomials.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            SmoothFn::Poly(_) => None,
            SmoothFn::Bump(b) => Some((b.lo, b.hi)),
        }
    }

    /// Points where the function fails to be a single polynomial.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            SmoothFn::Poly(_) => Vec::new(),
            SmoothFn::Bump(b) => vec![b.lo, b.hi],
        }
    }

    /// Sampled sup norm on [a, b].
    pub fn sup_abs(&self, a: f64, b: f64) -> f64 {
        sample(a, b, 2048)
            .map(|x| self.eval(x).abs())
            .fold(0.0, f64::max)
    }

    /// Sampled total variation of the derivative on [a, b].
    pub fn derivative_variation(&self, a: f64, b: f64) -> f64 {
        let vals: Vec<f64> = sample(a, b, 2048).map(|x| self.deriv(x)).collect();
        vals.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }
}

#[derive(Debug, Clone)]
pub enum Derivative {
    Poly(Polynomial),
    Bump(Bump),
    Bump2(Bump),
}

impl Derivative {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Derivative::Poly(p) => p.eval(x),
            Derivative::Bump(b) => b.deriv(x),
            Derivative::Bump2(b) => b.deriv2(x),
        }
    }
}

fn sample(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_calculus() {
        let p = Polynomial::new(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 9.0);
        assert_eq!(p.derivative().coeffs, vec![-2.0, 6.0]);
        let q = p.antiderivative();
        assert!((q.eval(1.0) - (1.0 - 1.0 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn bump_has_unit_mass_and_matches_primitive() {
        let b = SmoothFn::bump(2.0 / 3.0, 0.75);
        assert!((b.integral(0.0, 1.0) - 1.0).abs() < 1e-14);
        let n = 20000;
        let (lo, hi) = (2.0 / 3.0, 0.75);
        let h = (hi - lo) / n as f64;
        let mid: f64 = (0..n).map(|i| b.eval(lo + (i as f64 + 0.5) * h) * h).sum();
        assert!((mid - 1.0).abs() < 1e-8);
        let x = 0.7;
        let fd = (b.eval(x + 1e-7) - b.eval(x - 1e-7)) / 2e-7;
        assert!((fd - b.deriv(x)).abs() < 1e-4 * b.deriv(x).abs().max(1.0));
    }

    #[test]
    fn bump6_is_normalized() {
        let p = SmoothFn::bump6();
        assert!((p.integral(0.0, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(p.eval(0.0), 0.0);
    }
}
