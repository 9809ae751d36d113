use saltus_core::saltus::*;
use saltus_core::smooth::SmoothFn;
use saltus_core::transfer::*;
use saltus_core::unimodal::*;
use saltus_core::Error;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn exact_dec(l: f64) -> (UnimodalMap, CriticalOrbitInfo, SaltusDecomposition) {
    let f = UnimodalMap::tent(l).unwrap();
    let o = critical_orbit(&f, 4096, REVISIT_TOL).unwrap();
    let d = exact_from_orbit(&f, &o).unwrap();
    let dec = saltus_from_exact(&d, &o, 0.0, 1.0, 256).unwrap();
    (f, o, dec)
}

fn preperiodic_slopes() -> Vec<f64> {
    let mut v = vec![2.0, SQRT2, 1.695620769559862];
    v.extend((2..=6).map(|k| lambda_k_family(k).unwrap()));
    for code in ["RLR^2LR*", "RLR^4LR*"] {
        v.push(solve_code_parameter(&KneadingCode::parse(code).unwrap()).unwrap());
    }
    v
}

#[test]
fn exact_jumps_of_g_sqrt2() {
    let (_, _, dec) = exact_dec(SQRT2);
    let u = 1.0 / (6.0 - 4.0 * SQRT2);
    let want = [-SQRT2 * u, u, (SQRT2 - 1.0) * u];
    for (k, w) in want.iter().enumerate() {
        assert!((dec.amplitude(k + 1) - w).abs() < 1e-12);
    }
    assert!((dec.amplitude(1) + 4.1213203).abs() < 1e-7);
    assert!((dec.amplitude(3) - 1.2071068).abs() < 1e-7);
    assert_eq!(dec.regular.max_abs(), 0.0);
}

#[test]
fn exact_jumps_of_g2() {
    let (_, _, dec) = exact_dec(2.0);
    assert_eq!(dec.jumps.len(), 2);
    assert!((dec.amplitude(1) + 1.0).abs() < 1e-14);
    assert!((dec.amplitude(2) - 1.0).abs() < 1e-14);
}

#[test]
fn weighted_jump_examples() {
    let id = Perturbation::identity();
    let (_, _, dec) = exact_dec(SQRT2);
    assert!((weighted_jump(&dec, &id).value + 1.0).abs() < 1e-10);
    let (_, _, dec) = exact_dec(2.0);
    assert!((weighted_jump(&dec, &id).value + 1.0).abs() < 1e-10);
    for l in preperiodic_slopes() {
        let (_, _, dec) = exact_dec(l);
        let j = weighted_jump(&dec, &Perturbation::one());
        assert!(j.value.abs() < 1e-10, "λ = {l}: {}", j.value);
        assert_eq!(j.tail_bound, 0.0);
    }
}

#[test]
fn jump_sums_examples() {
    let id = Perturbation::identity();
    let (_, _, dec) = exact_dec(SQRT2);
    let js = jump_sums_markov(&dec, &id, 3, 1).unwrap();
    assert_eq!(js.len(), 1);
    assert!((js[0] + 1.0).abs() < 1e-10);
    let js = jump_sums_markov(&dec, &Perturbation::zero(), 3, 1).unwrap();
    assert_eq!(js, vec![0.0]);
    let (_, _, dec) = exact_dec(2.0);
    let x = Perturbation::new(SmoothFn::poly(&[0.0, 1.0, -1.0])).unwrap();
    assert_eq!(jump_sums_markov(&dec, &x, 2, 1).unwrap(), vec![0.0]);
    assert!(matches!(jump_sums_markov(&dec, &x, 3, 1), Err(Error::NotMarkov)));
}

#[test]
fn jump_sums_with_period_two() {
    let (_, o, dec) = exact_dec(1.695620769559862);
    assert_eq!(o.preperiodic, Some((3, 2)));
    let id = Perturbation::identity();
    let js = jump_sums_markov(&dec, &id, 3, 2).unwrap();
    // m = 3 collects k = 1, 3; m = 4 collects k = 2, 4.
    let s = |k: usize| dec.amplitude(k) * o.point(k);
    assert!((js[0] - (s(1) + s(3))).abs() < 1e-14);
    assert!((js[1] - (s(2) + s(4))).abs() < 1e-14);
    assert!((js[0] + js[1] - weighted_jump(&dec, &id).value).abs() < 1e-12);
}

#[test]
fn jump_propagation_on_exact_densities() {
    for l in preperiodic_slopes() {
        let (f, _, dec) = exact_dec(l);
        for chk in jump_propagation(&dec, &f).unwrap() {
            assert!(chk.relative_error <= 1e-10, "λ = {l}: {chk:?}");
        }
    }
    let (f, _, dec) = exact_dec(SQRT2);
    let s = |k| dec.amplitude(k);
    let lhs = s(3) * (1.0 - 1.0 / f.deriv(2.0 - SQRT2));
    let rhs = s(2) / f.deriv(SQRT2 - 1.0);
    assert!((lhs - rhs).abs() < 1e-12);
}

#[test]
fn twisted_alpha_examples() {
    let (f, o, _) = exact_dec(SQRT2);
    let a = twisted_alpha(&o, &f, &Perturbation::zero(), 10).unwrap();
    assert!(a.alpha.iter().all(|&v| v == 0.0));
    let a = twisted_alpha(&o, &f, &Perturbation::identity(), 20).unwrap();
    assert!(a.defect.abs() > 1e-3);
    assert!(a.identity_residual <= 1e-10);

    let g = UnimodalMap::tent(1.9).unwrap();
    let o = critical_orbit(&g, 64, REVISIT_TOL).unwrap();
    let a = twisted_alpha(&o, &g, &Perturbation::identity(), 40).unwrap();
    assert!(a.identity_residual <= 1e-10);
}

#[test]
fn ulam_jumps_match_exact_on_tents() {
    for l in [SQRT2, 2.0] {
        let (f, o, dec) = exact_dec(l);
        let d = invariant_density_ulam(&f, 1 << 16, DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
        let u = saltus_from_ulam(&d, &o, 64, NoisePolicy::Error).unwrap();
        for j in &dec.jumps {
            assert!((u.amplitude(j.k) - j.amplitude).abs() < 1e-2, "λ = {l}, k = {}", j.k);
        }
        let jid = weighted_jump(&u, &Perturbation::identity()).value;
        assert!((jid + 1.0).abs() < 1e-2, "λ = {l}: {jid}");
    }
}

#[test]
fn ulam_reports_jumps_below_noise() {
    let f = UnimodalMap::tent(1.9).unwrap();
    let o = critical_orbit(&f, 64, REVISIT_TOL).unwrap();
    let d = invariant_density_ulam(&f, 1 << 12, DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
    assert!(matches!(
        saltus_from_ulam(&d, &o, 64, NoisePolicy::Error),
        Err(Error::JumpBelowNoise { .. })
    ));
    let dec = saltus_from_ulam(&d, &o, 64, NoisePolicy::Truncate).unwrap();
    assert!(dec.truncated_at.is_some());
}

fn perturbed_markov() -> UnimodalMap {
    // X(0) = X(1) = 0 keeps the orbit 1 ↦ 0 ↦ 0 of g_2.
    let x = Perturbation::new(SmoothFn::poly(&[0.0, 1.0, -1.0])).unwrap();
    UnimodalMap::perturbed(2.0, x, 0.2).unwrap()
}

#[test]
fn perturbed_density_has_continuous_regular_part() {
    let f = perturbed_markov();
    let o = critical_orbit(&f, 64, REVISIT_TOL).unwrap();
    assert_eq!(o.preperiodic, Some((2, 1)));
    let hd = invariant_density_hybrid(&f, 1 << 12, 5000, 1e-11).unwrap();
    let dec = saltus_from_hybrid(&hd.density, &o, 64).unwrap();
    let h = dec.regular.h();
    let bound = 10.0 * hd.density.variation() * h;
    assert!(dec.regular_max_gap(0) <= bound, "{} > {bound}", dec.regular_max_gap(0));
    assert!(dec.sum_abs() <= hd.density.variation() + 1e-12);
    // J(f, 1) = ρ_r(a0).
    let j1 = weighted_jump(&dec, &Perturbation::one()).value;
    assert!((j1 - dec.regular_value(f.a0())).abs() < 1e-6, "{j1} vs {}", dec.regular_value(f.a0()));
    assert!(j1.abs() > 1e-3);
    let rec = dec.reconstruct();
    assert!(rec.sub(&hd.density).l1_norm() < 1e-12);
}

#[test]
fn perturbed_ulam_jumps_sit_on_the_orbit() {
    let f = perturbed_markov();
    let o = critical_orbit(&f, 64, REVISIT_TOL).unwrap();
    let hd = invariant_density_hybrid(&f, 1 << 12, 5000, 1e-11).unwrap();
    let hdec = saltus_from_hybrid(&hd.density, &o, 64).unwrap();
    for bins in [1 << 13, 1 << 14] {
        let d = invariant_density_ulam(&f, bins, DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
        let dec = saltus_from_ulam(&d, &o, 64, NoisePolicy::Error).unwrap();
        for j in &hdec.jumps {
            assert!((dec.amplitude(j.k) - j.amplitude).abs() < 2e-2, "bins {bins}, k {}", j.k);
        }
        let bound = 10.0 * hd.density.variation() * d.bin_width();
        assert!(dec.regular_max_gap(WINDOW_FAR) <= bound, "bins {bins}: {}", dec.regular_max_gap(WINDOW_FAR));
    }
}

#[test]
fn non_markov_tent_tail_decays() {
    let f = UnimodalMap::tent(1.9).unwrap();
    let o = critical_orbit(&f, 64, REVISIT_TOL).unwrap();
    assert!(o.preperiodic.is_none());
    let hd = invariant_density_hybrid(&f, 256, 5000, 1e-12).unwrap();
    let dec = saltus_from_hybrid(&hd.density, &o, 64).unwrap();
    let tail = dec.tail.unwrap();
    assert!(tail.xi < 1.0 && tail.xi > 0.4, "{tail:?}");
    let j1 = weighted_jump(&dec, &Perturbation::one());
    assert!(j1.value.abs() < 1e-10 + j1.tail_bound);
    assert!(dec.regular.max_abs() < 1e-10);
}
