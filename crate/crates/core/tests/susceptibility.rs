use num_complex::Complex64;
use saltus_core::saltus::*;
use saltus_core::smooth::SmoothFn;
use saltus_core::susceptibility::*;
use saltus_core::transfer::*;
use saltus_core::unimodal::*;
use saltus_core::Error;

const SQRT2: f64 = std::f64::consts::SQRT_2;
const PERIOD_TWO: f64 = 1.695620769559862;

struct Markov {
    f: UnimodalMap,
    o: CriticalOrbitInfo,
    d: PiecewiseConstantDensity,
    dec: SaltusDecomposition,
}

fn markov(l: f64, cells: usize) -> Markov {
    let f = UnimodalMap::tent(l).unwrap();
    let o = critical_orbit(&f, 4096, REVISIT_TOL).unwrap();
    let d = exact_from_orbit(&f, &o).unwrap();
    let dec = saltus_from_exact(&d, &o, f.a0(), f.b(), cells).unwrap();
    Markov { f, o, d, dec }
}

fn poly(c: &[f64]) -> Perturbation {
    Perturbation::new(SmoothFn::poly(c)).unwrap()
}

fn logistic_x() -> Perturbation {
    poly(&[0.0, 1.0, -1.0])
}

fn non_markov(depth: usize, cells: usize) -> (UnimodalMap, CriticalOrbitInfo, HybridBvFunction, SaltusDecomposition) {
    let f = UnimodalMap::tent(1.9).unwrap();
    let o = critical_orbit(&f, depth, REVISIT_TOL).unwrap();
    assert!(o.preperiodic.is_none());
    let hd = invariant_density_hybrid(&f, cells, 5000, 1e-12).unwrap();
    let dec = saltus_from_hybrid(&hd.density, &o, depth).unwrap();
    (f, o, hd.density, dec)
}

/// X = x(1−x) − κx with κ chosen so that J(f, X) = 0 on the computed jumps.
fn zero_jump_x(dec: &SaltusDecomposition) -> Perturbation {
    let a = weighted_jump(dec, &logistic_x()).value;
    let b = weighted_jump(dec, &Perturbation::identity()).value;
    poly(&[0.0, 1.0 - a / b, -1.0])
}

#[test]
fn first_coefficient_is_a_plain_integral() {
    let m = markov(2.0, 1024);
    let phi = SmoothFn::poly(&[0.0, 1.0, -1.0]);
    let s = coefficients_split(&m.f, &m.o, &m.dec, &Perturbation::identity(), &phi, 4, 1024).unwrap();
    assert!((s.coefficients[0] + 1.0 / 6.0).abs() < 1e-10, "{}", s.coefficients[0]);
    for n in 0..4 {
        assert!((s.coefficients[n] - s.orbit_terms[n] - s.bv_terms[n]).abs() < 1e-15);
    }
}

#[test]
fn zero_perturbation_gives_zero_series() {
    for l in [2.0, SQRT2] {
        let m = markov(l, 512);
        let s = coefficients_split(&m.f, &m.o, &m.dec, &Perturbation::zero(), &SmoothFn::bump6(), 32, 512)
            .unwrap();
        assert!(s.coefficients.iter().all(|&a| a == 0.0));
    }
}

#[test]
fn non_c1_observable_is_rejected() {
    let m = markov(2.0, 256);
    let phi = SmoothFn::poly(&[0.0, f64::NAN]);
    let r = coefficients_split(&m.f, &m.o, &m.dec, &Perturbation::identity(), &phi, 4, 256);
    assert!(matches!(r, Err(Error::ObservableNotC1(_))));
}

#[test]
fn partial_sums_converge_when_x_vanishes_on_the_orbit() {
    let m = markov(2.0, 1024);
    let s = coefficients_split(&m.f, &m.o, &m.dec, &logistic_x(), &SmoothFn::bump6(), 256, 1024).unwrap();
    let ps = s.partial_sums();
    for n in [8, 16, 32, 64, 128] {
        assert!((ps[n - 1] - ps[2 * n - 1]).abs() < 1e-12);
    }

    // λ_3 with X = Π_k (x − c_k) over the five orbit points.
    let m = markov(lambda_k_family(3).unwrap(), 8192);
    assert_eq!(m.o.preperiodic, Some((5, 1)));
    let mut coeffs = vec![1.0];
    for k in 1..=5 {
        let c = m.o.point(k);
        let mut next = vec![0.0; coeffs.len() + 1];
        for (i, a) in coeffs.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= c * a;
        }
        coeffs = next;
    }
    let x = poly(&coeffs);
    assert!(jump_sums_markov(&m.dec, &x, 5, 1).unwrap()[0].abs() < 1e-14);
    let s = coefficients_split(&m.f, &m.o, &m.dec, &x, &SmoothFn::bump6(), 128, 8192).unwrap();
    let ps = s.partial_sums();
    let gaps: Vec<f64> = [2, 4, 8, 16, 32].iter().map(|&n| (ps[n - 1] - ps[2 * n - 1]).abs()).collect();
    // Geometric decay down to the O(h²) grid floor.
    let floor = 1e-7;
    for w in gaps.windows(2) {
        assert!(w[1] < 0.5 * w[0] || w[1] < floor, "{gaps:?}");
    }
    assert!(gaps[4] < floor, "{gaps:?}");
    assert!(residue_fit(&s).unwrap().value.abs() < 1e-6);
}

#[test]
fn psi_partial_examples() {
    let s = SusceptibilitySeries::from_coefficients(vec![1.0; 200], None);
    let v = psi_partial(&s, Complex64::new(0.5, 0.0));
    assert!((v.re - 2.0).abs() < 1e-15 && v.im == 0.0);
    let s = SusceptibilitySeries::from_coefficients(vec![0.25, 3.0, -1.0], None);
    assert_eq!(psi_partial(&s, Complex64::new(0.0, 0.0)).re, 0.25);

    let m = markov(2.0, 1024);
    let s = coefficients_split(&m.f, &m.o, &m.dec, &Perturbation::identity(), &SmoothFn::bump6(), 4096, 1024)
        .unwrap();
    let r = residue_fit(&s).unwrap().value;
    let v = psi_partial(&s, Complex64::new(0.99, 0.0));
    assert!((v.norm() - 100.0 * r.abs()).abs() < 0.05 * 100.0 * r.abs(), "{v}");
}

#[test]
fn markov_residue_for_g2() {
    let m = markov(2.0, 1024);
    let phi = SmoothFn::bump6();
    let x = Perturbation::identity();
    let sys = markov_extension(&m.o, &m.dec, &x, &phi, m.d.integrate(&phi), 1e-10).unwrap();
    assert_eq!((sys.n0, sys.n1, sys.dimension), (2, 1, 2));
    assert!((sys.residue_at_1 + 1.0).abs() < 1e-12);
    assert!(!sys.holomorphic_at_1 && !sys.fully_holomorphic);
    assert_eq!(sys.poles.len(), 1);

    let s = coefficients_split(&m.f, &m.o, &m.dec, &x, &phi, 4096, 1024).unwrap();
    let fit = residue_fit(&s).unwrap();
    assert!((fit.value - sys.residue_at_1).abs() < 0.05);

    let sys = markov_extension(&m.o, &m.dec, &logistic_x(), &phi, 1.0, 1e-10).unwrap();
    assert!(sys.holomorphic_at_1 && sys.fully_holomorphic);
    assert!(sys.jump_sums.iter().all(|v| *v == 0.0));
}

#[test]
fn markov_residue_for_g_sqrt2() {
    let m = markov(SQRT2, 2048);
    let c3 = m.o.point(3);
    assert!((c3 - (2.0 - SQRT2)).abs() < 1e-14);
    // φ = κ(x − c_3)² with ∫φγ = 1.
    let raw = SmoothFn::poly(&[c3 * c3, -2.0 * c3, 1.0]);
    let k = 1.0 / m.d.integrate(&raw);
    let phi = SmoothFn::poly(&[k * c3 * c3, -2.0 * k * c3, k]);
    assert!((m.d.integrate(&phi) - 1.0).abs() < 1e-12);
    let x = Perturbation::identity();
    let sys = markov_extension(&m.o, &m.dec, &x, &phi, m.d.integrate(&phi), 1e-10).unwrap();
    assert!((sys.residue_at_1 + 1.0).abs() < 1e-10, "{}", sys.residue_at_1);
    let s = coefficients_split(&m.f, &m.o, &m.dec, &x, &phi, 2048, 2048).unwrap();
    let fit = residue_fit(&s).unwrap();
    assert!((fit.value + 1.0).abs() < 0.05, "{}", fit.value);
}

#[test]
fn residue_fit_matches_closed_formula_on_markov_cases() {
    let cases = [
        (2.0, Perturbation::identity()),
        (SQRT2, Perturbation::identity()),
        (PERIOD_TWO, Perturbation::identity()),
        (PERIOD_TWO, logistic_x()),
        (lambda_k_family(3).unwrap(), logistic_x()),
        (lambda_k_family(3).unwrap(), Perturbation::identity()),
    ];
    let phi = SmoothFn::bump6();
    for (l, x) in cases {
        let m = markov(l, 2048);
        let sys = markov_extension(&m.o, &m.dec, &x, &phi, m.d.integrate(&phi), 1e-10).unwrap();
        let s = coefficients_split(&m.f, &m.o, &m.dec, &x, &phi, 2048, 2048).unwrap();
        let fit = residue_fit(&s).unwrap();
        let tol = 0.05 * sys.residue_at_1.abs().max(1e-6);
        assert!((fit.value - sys.residue_at_1).abs() < tol, "λ = {l}: {} vs {}", fit.value, sys.residue_at_1);
    }
}

#[test]
fn residue_at_minus_one_for_period_two() {
    let m = markov(PERIOD_TWO, 2048);
    assert_eq!(m.o.preperiodic, Some((3, 2)));
    let phi = SmoothFn::bump6();
    let x = Perturbation::identity();
    let sys = markov_extension(&m.o, &m.dec, &x, &phi, m.d.integrate(&phi), 1e-10).unwrap();
    assert_eq!(sys.poles.len(), 2);
    let pole = sys.poles[1];
    assert!((pole.z.re + 1.0).abs() < 1e-15 && pole.z.im.abs() < 1e-15);
    assert!(pole.residue.im.abs() < 1e-12);
    assert!(pole.residue.re.abs() > 1e-3);

    // Ψ(−z) has the pole at −1 moved to 1.
    let s = coefficients_split(&m.f, &m.o, &m.dec, &x, &phi, 2048, 2048).unwrap();
    let flipped: Vec<f64> = s
        .coefficients
        .iter()
        .enumerate()
        .map(|(n, a)| if n % 2 == 0 { *a } else { -a })
        .collect();
    let fit = residue_fit(&SusceptibilitySeries::from_coefficients(flipped, Some(2))).unwrap();
    assert!((fit.value - pole.residue.re).abs() < 0.05 * pole.residue.re.abs(), "{} vs {:?}", fit.value, pole);
}

#[test]
fn jump_matrix_power_structure() {
    for (n0, n1) in [(2, 1), (3, 1), (3, 2), (4, 3), (5, 4), (2, 5)] {
        let sys = MarkovJumpSystem {
            n0,
            n1,
            dimension: n0 + n1 - 1,
            matrix: jump_matrix(n0, n1),
            jump_sums: vec![],
            weighted_jump: 0.0,
            residue_at_1: 0.0,
            poles: vec![],
            holomorphic_at_1: true,
            fully_holomorphic: true,
        };
        let n = sys.dimension;
        let lead = n0 - 1;
        let p = sys.matrix_power(n1);
        for i in lead..n {
            for j in lead..n {
                assert_eq!(p[i][j], i64::from(i == j), "({n0},{n1})");
            }
        }
        for i in 0..lead {
            for j in lead..n {
                assert_eq!(p[i][j], 0);
            }
        }
        // Leading block is nilpotent.
        let q = sys.matrix_power(n1 * lead.max(1));
        for i in 0..lead {
            for j in 0..lead {
                assert_eq!(q[i][j], 0);
            }
        }
        for j in 0..n - 1 {
            assert_eq!(sys.matrix[j + 1][j], 1);
        }
        assert_eq!(sys.matrix[n0 - 1][n - 1], 1);
    }
}

#[test]
fn markov_extension_needs_a_preperiodic_orbit() {
    let (_, o, _, dec) = non_markov(64, 256);
    let r = markov_extension(&o, &dec, &Perturbation::one(), &SmoothFn::bump6(), 0.0, 1e-10);
    assert!(matches!(r, Err(Error::NotMarkov)));
}

#[test]
fn residue_fit_trivial_series() {
    let s = SusceptibilitySeries::from_coefficients(vec![0.0; 512], Some(1));
    assert_eq!(residue_fit(&s).unwrap().value, 0.0);
    let s = SusceptibilitySeries::from_coefficients(vec![3.5; 512], Some(1));
    assert!((residue_fit(&s).unwrap().value - 3.5).abs() < 1e-12);
    // Partial sums of (−1)^n n² blow up at z → −1 but the fit at 1 is
    // unaffected; a pure 1/(1−z)² growth is not a simple pole.
    let s = SusceptibilitySeries::from_coefficients((0..512).map(|n| n as f64).collect(), None);
    assert!(matches!(residue_fit(&s), Err(Error::FitUnstable(_))));
}

#[test]
fn split_agrees_with_naive_iteration() {
    let phi = SmoothFn::bump6();
    for (l, x) in [
        (SQRT2, Perturbation::identity()),
        (SQRT2, logistic_x()),
        (PERIOD_TWO, poly(&[0.3, 1.0, -1.0])),
        (2.0, poly(&[0.1, 0.0, 0.8])),
    ] {
        let cells = 4096;
        let m = markov(l, cells);
        let s = coefficients_split(&m.f, &m.o, &m.dec, &x, &phi, 12, cells).unwrap();
        let rho = m.d.to_hybrid(m.f.a0(), m.f.b(), cells);
        let naive = coefficients_naive(&m.f, &rho, &x, &phi, 12).unwrap();
        for n in 0..12 {
            assert!((s.coefficients[n] - naive[n]).abs() < 5e-7 * l.powi(n as i32), "λ = {l}, n = {n}: {} vs {}", s.coefficients[n], naive[n]);
        }
    }
}

#[test]
fn coefficients_stay_bounded() {
    let phi = SmoothFn::bump6();
    for l in [2.0, SQRT2, PERIOD_TWO, lambda_k_family(4).unwrap()] {
        let m = markov(l, 1024);
        let s = coefficients_split(&m.f, &m.o, &m.dec, &Perturbation::identity(), &phi, 512, 1024).unwrap();
        assert!(s.growth_rate(8) <= 1.05, "λ = {l}: {}", s.growth_rate(8));
    }
}

#[test]
fn psi1_of_zero_perturbation_vanishes() {
    let (f, o, rho, dec) = non_markov(64, 1024);
    let p = psi1_nonmarkov(&f, &o, &dec, &rho, &Perturbation::zero(), &SmoothFn::bump6(), 1e-10, 500).unwrap();
    assert_eq!(p.value, 0.0);
}

#[test]
fn psi1_refuses_a_nonzero_jump() {
    let (f, o, rho, dec) = non_markov(64, 1024);
    let r = psi1_nonmarkov(&f, &o, &dec, &rho, &Perturbation::identity(), &SmoothFn::bump6(), 1e-10, 500);
    assert!(matches!(r, Err(Error::NonzeroJump(_))));
}

#[test]
fn psi1_is_stable_under_truncation_depth() {
    let tol = 1e-8;
    let phi = SmoothFn::bump6();
    let values: Vec<f64> = [48, 64]
        .iter()
        .map(|&depth| {
            let (f, o, rho, dec) = non_markov(depth, 4096);
            let x = zero_jump_x(&dec);
            let p = psi1_nonmarkov(&f, &o, &dec, &rho, &x, &phi, tol, 2000).unwrap();
            assert!(p.resolvent != 0.0);
            p.value
        })
        .collect();
    assert!((values[0] - values[1]).abs() < 2.0 * tol, "{values:?}");
}

#[test]
fn psi1_resolvent_is_the_sum_of_the_bv_terms() {
    let tol = 1e-8;
    let (f, o, rho, dec) = non_markov(64, 4096);
    let x = zero_jump_x(&dec);
    // φ with ∫φρ_0 = 0 so the bv terms are summable.
    let mean = rho.integrate_smooth(&SmoothFn::bump6()) / rho.integral();
    let phi = SmoothFn::poly(&[-mean, 6.0, -6.0]);
    assert!(rho.integrate_smooth(&phi).abs() < 1e-12);
    let p = psi1_nonmarkov(&f, &o, &dec, &rho, &x, &phi, tol, 2000).unwrap();
    let s = coefficients_split(&f, &o, &dec, &x, &phi, 400, 4096).unwrap();
    let bv: f64 = s.bv_terms.iter().sum();
    assert!((bv + p.resolvent).abs() < 10.0 * tol, "{bv} vs {}", -p.resolvent);
    let outer: f64 = -(0..64)
        .map(|j| {
            let t: f64 = dec.jumps[..=j].iter().map(|q| q.amplitude * x.eval(q.location)).sum();
            phi.eval(o.point(j + 1)) * t
        })
        .sum::<f64>();
    assert!((outer - p.outer).abs() < tol);
}

#[test]
fn regularized_psi_at_zero_for_a_tent_map() {
    let (f, o, _, dec) = non_markov(64, 1024);
    let v = regularized_psi(&f, &o, &dec, &SmoothFn::bump6(), Complex64::new(0.0, 0.0), 64, 1024).unwrap();
    assert!(v.value.norm() < 1e-10);
    assert!(dec.regular.max_abs() < 1e-10);
}

#[test]
fn regularized_psi_at_one_matches_psi1() {
    let tol = 1e-10;
    let phi = SmoothFn::bump6();
    let (f, o, rho, dec) = non_markov(64, 1024);
    let p = psi1_nonmarkov(&f, &o, &dec, &rho, &Perturbation::one(), &phi, tol, 500).unwrap();
    let r = regularized_at_one(&f, &o, &dec, &phi, 40_000, 1024).unwrap();
    let k = r.diagonal.len();
    let fit_err = (r.diagonal[k - 1] - r.diagonal[k - 2]).abs();
    let combined = p.truncation + fit_err + tol;
    assert!((r.value - p.value).abs() <= 2.0 * combined, "{} vs {}", r.value, p.value);
    assert!((r.closed_form - p.value).abs() <= 2.0 * combined);
}

#[test]
fn regularized_psi_carries_a_boundary_term() {
    // φ(a0) ≠ 0: the two values differ by φ(a0) Σ_j S_j.
    let tol = 1e-10;
    let phi = SmoothFn::poly(&[1.0, 1.0, -1.0]);
    let (f, o, rho, dec) = non_markov(64, 1024);
    let p = psi1_nonmarkov(&f, &o, &dec, &rho, &Perturbation::one(), &phi, tol, 500).unwrap();
    let r = regularized_at_one(&f, &o, &dec, &phi, 40_000, 1024).unwrap();
    let mut acc = 0.0;
    let total: f64 = dec
        .jumps
        .iter()
        .map(|j| {
            acc += j.amplitude;
            acc
        })
        .sum();
    let shift = phi.eval(f.a0()) * total;
    assert!(shift.abs() > 0.1);
    assert!((r.value - p.value - shift).abs() < 1e-8, "{} {} {shift}", r.value, p.value);
}

#[test]
fn abel_diagnostic_reports_values() {
    let (f, o, _, _) = non_markov(4096, 256);
    let d = abel_diagnostic(&f, &o, &SmoothFn::bump6(), 40_000);
    assert_eq!(d.nodes.len(), 7);
    assert_eq!(d.values.len(), 7);
    assert!(d.values.iter().all(|v| v.is_finite()));
}

#[test]
fn candidate_solution_for_a_tent_map() {
    let (f, _, _, dec) = non_markov(64, 1024);
    let rep = candidate_check(&f, &dec, &Perturbation::one(), 1024, 1e-10).unwrap();
    assert_eq!(rep.depth, 64);
    assert!(rep.grid_residual <= rep.tail_bound + 1e-14, "{} > {}", rep.grid_residual, rep.tail_bound);
    assert!(rep.point_residual < 1e-14);
    assert!(rep.point_tail <= rep.tail_bound + 1e-14);
    let s1 = dec.jumps[0].amplitude;
    assert!((rep.c1_lhs - s1).abs() < 1e-15 && (rep.c1_rhs - s1).abs() < 1e-15);

    let x = zero_jump_x(&dec);
    let rep = candidate_check(&f, &dec, &x, 1024, 1e-10).unwrap();
    let s1x = dec.jumps[0].amplitude * x.eval(dec.jumps[0].location);
    assert!((rep.c1_lhs - s1x).abs() < 1e-15 && (rep.c1_rhs - s1x).abs() < 1e-15);
    assert!(rep.point_residual < 1e-14);
}

#[test]
fn candidate_solution_telescopes() {
    let f = UnimodalMap::tent(1.9).unwrap();
    let o = critical_orbit(&f, 8, REVISIT_TOL).unwrap();
    let dec = SaltusDecomposition {
        jumps: vec![
            OrbitJump { k: 1, location: o.point(1), amplitude: 1.0 },
            OrbitJump { k: 2, location: o.point(2), amplitude: -1.0 },
        ],
        regular: GridFunction::zeros(0.0, 1.0, 256),
        preperiodic: None,
        tail: None,
        truncated_at: None,
    };
    let rep = candidate_check(&f, &dec, &Perturbation::one(), 256, 1e-12).unwrap();
    assert_eq!(rep.rho_tilde.len(), 2);
    assert_eq!(rep.rho_tilde[0].amplitude, 1.0);
    assert_eq!(rep.rho_tilde[1].amplitude, 0.0);
    assert_eq!(rep.tail_bound, 0.0);
    assert!(rep.grid_residual < 1e-14);
    assert_eq!(rep.c1_lhs, 1.0);
    assert_eq!(rep.c1_rhs, 1.0);

    let mut bad = dec.clone();
    bad.jumps[1].amplitude = -0.5;
    assert!(matches!(
        candidate_check(&f, &bad, &Perturbation::one(), 256, 1e-12),
        Err(Error::NonzeroJump(_))
    ));
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn richardson_is_exact_on_low_degree_expansions(
            c in prop::collection::vec(-5.0f64..5.0, 4),
        ) {
            let hs: Vec<f64> = (4..=10).map(|m| 2f64.powi(-m)).collect();
            let vals: Vec<f64> = hs.iter().map(|h| c[0] + c[1] * h + c[2] * h * h + c[3] * h * h * h).collect();
            let d = richardson(&vals);
            prop_assert!((d.last().unwrap() - c[0]).abs() < 1e-9);
        }

        #[test]
        fn jump_matrix_has_one_entry_per_column(n0 in 1usize..8, n1 in 1usize..8) {
            prop_assume!(n0 + n1 >= 2);
            let m = jump_matrix(n0, n1);
            let n = n0 + n1 - 1;
            for j in 0..n {
                let col: i64 = (0..n).map(|i| m[i][j]).sum();
                prop_assert_eq!(col, 1);
            }
        }

        #[test]
        fn psi_partial_is_linear(
            a in prop::collection::vec(-1.0f64..1.0, 1..40),
            z in -0.99f64..0.99,
            k in -3.0f64..3.0,
        ) {
            let s = SusceptibilitySeries::from_coefficients(a.clone(), None);
            let t = SusceptibilitySeries::from_coefficients(a.iter().map(|v| k * v).collect(), None);
            let z = Complex64::new(z, 0.0);
            prop_assert!((psi_partial(&t, z) - psi_partial(&s, z) * k).norm() < 1e-12);
        }
    }
}
