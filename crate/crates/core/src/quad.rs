//! Gauss–Legendre quadrature on subintervals.

const NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point rule on [a, b], exact for polynomials of degree ≤ 9.
pub fn gauss5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    NODES
        .iter()
        .zip(WEIGHTS.iter())
        .map(|(&t, &w)| w * f(m + r * t))
        .sum::<f64>()
        * r
}

/// Composite rule over consecutive sorted breakpoints.
pub fn gauss5_over<F: Fn(f64) -> f64>(f: F, breaks: &[f64]) -> f64 {
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss5(&f, w[0], w[1]))
        .sum()
}

/// Composite rule with `pieces` equal subintervals of [a, b].
pub fn gauss5_uniform<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| gauss5(&f, a + i as f64 * h, a + (i + 1) as f64 * h))
        .sum()
}
