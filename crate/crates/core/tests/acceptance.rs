//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL` line with the measured numbers, then asserts.

use std::time::{Duration, Instant};

use ezv_core::*;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn verdict(n: u32, pass: bool, elapsed: Duration, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n}: {tag} ({detail}; {:.2} s)", elapsed.as_secs_f64());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn random_point(rng: &mut StdRng, im_lo: f64, im_hi: f64) -> Complex64 {
    c(rng.gen_range(-0.5..0.5), rng.gen_range(im_lo..im_hi))
}

fn random_wedge(rng: &mut StdRng) -> WedgePair {
    loop {
        let (t, s) = (random_point(rng, 0.7, 1.5), random_point(rng, 0.7, 1.5));
        if let Ok(pair) = WedgePair::wedge(t, s) {
            if (s / t).im > 0.05 {
                return pair;
            }
        }
    }
}

#[test]
fn criterion_01_functional_equation() {
    let start = Instant::now();
    let prec = PrecisionPolicy::default();
    let mut rng = StdRng::seed_from_u64(1);
    let standard = GammaArg::new(c(0.3, 0.2), c(0.2, 1.0), c(0.1, 0.8)).unwrap();
    let mut worst = functional_equation_residual(&standard, &prec).unwrap();
    let mut points = 0;
    while points < 50 {
        let z = c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..1.2));
        let arg = GammaArg::new(z, random_point(&mut rng, 0.6, 1.5), random_point(&mut rng, 0.6, 1.5))
            .unwrap();
        match functional_equation_residual(&arg, &prec) {
            Ok(r) => {
                worst = worst.max(r);
                points += 1;
            }
            Err(Error::Pole { .. }) => continue,
            Err(e) => panic!("{e}"),
        }
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-10 && elapsed < Duration::from_secs(5);
    verdict(1, pass, elapsed, format!("max relative residual {worst:.3e} over 51 points, tol 1e-10"));
}

#[test]
fn criterion_02_additive_three_term() {
    let start = Instant::now();
    let prec = PrecisionPolicy::default();
    let mut rng = StdRng::seed_from_u64(2);
    let mut pairs = vec![WedgePair::standard()];
    for _ in 0..20 {
        pairs.push(WedgePair::new(random_point(&mut rng, 0.6, 1.5), random_point(&mut rng, 0.6, 1.5)).unwrap());
    }
    let mut worst: f64 = 0.0;
    for pair in &pairs {
        for k in 1..=8 {
            worst = worst.max(check_three_term_additive(k, pair, &prec).unwrap().residual);
        }
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-9 && elapsed < Duration::from_secs(10);
    verdict(2, pass, elapsed, format!("max residual {worst:.3e} for k = 1..8 on 21 pairs, tol 1e-9"));
}

#[test]
fn criterion_03_modular_three_term() {
    let start = Instant::now();
    let prec = PrecisionPolicy::default();
    let pair = WedgePair::standard();
    let mut worst: f64 = 0.0;
    for k in 1..=8 {
        let report = check_three_term_modular(k, &pair, true, &prec).unwrap();
        worst = worst.max(report.residual);
    }
    let without = check_three_term_modular(3, &pair, false, &prec).unwrap().residual;
    let elapsed = start.elapsed();
    let pass = worst < 1e-8 && without > 1e-3 && elapsed < Duration::from_secs(10);
    verdict(
        3,
        pass,
        elapsed,
        format!("max residual {worst:.3e} for k = 1..8 (tol 1e-8); k = 3 without anomaly {without:.3e} (> 1e-3)"),
    );
}

#[test]
fn criterion_04_route_equivalence() {
    let start = Instant::now();
    let prec = PrecisionPolicy::default();
    let mut rng = StdRng::seed_from_u64(4);
    let mut split_ok = true;
    let mut worst_ratio: f64 = 0.0;
    for i in 0..100 {
        let pair = WedgePair::new(random_point(&mut rng, 0.8, 1.6), random_point(&mut rng, 0.8, 1.6)).unwrap();
        let (k, split) = if i < 50 {
            let k = 2 * rng.gen_range(1..=4);
            (k, z_k_even_split(k, &pair, &prec).unwrap())
        } else {
            let k = 2 * rng.gen_range(0..=3) + 1;
            (k, z_k_odd_split(k, &pair, &prec).unwrap())
        };
        let direct = z_k(k, &pair, &prec).unwrap();
        let gap = (direct.value - split.value).norm();
        let allowed = direct.err_bound + split.err_bound;
        worst_ratio = worst_ratio.max(gap / allowed);
        split_ok &= gap <= allowed;
    }

    let pair = WedgePair::standard();
    let mut lattice_ok = true;
    let mut notes = Vec::new();
    for k in [5, 7] {
        let direct = z_k(k, &pair, &prec).unwrap();
        let at = |radius: usize| {
            let p = prec.with_lattice_radius(radius).unwrap();
            z_k_lattice(k, &pair, &p).unwrap()
        };
        let sixty = at(60);
        let gap = (sixty.value - direct.value).norm();
        lattice_ok &= gap <= sixty.err_bound + direct.err_bound;
        let gaps: Vec<f64> = [20, 40, 80]
            .iter()
            .map(|&r| (at(r).value - direct.value).norm())
            .collect();
        lattice_ok &= gaps[0] > gaps[1] && gaps[1] > gaps[2];
        notes.push(format!(
            "k={k}: R=60 gap {gap:.2e} vs bound {:.2e}, R=20/40/80 gaps {:.2e}/{:.2e}/{:.2e}",
            sixty.err_bound, gaps[0], gaps[1], gaps[2]
        ));
    }
    let elapsed = start.elapsed();
    let pass = split_ok && lattice_ok && elapsed < Duration::from_secs(60);
    verdict(
        4,
        pass,
        elapsed,
        format!(
            "splits: worst gap/bound {worst_ratio:.3} over 100 inputs; {}",
            notes.join("; ")
        ),
    );
}

#[test]
fn criterion_05_taylor_link() {
    let start = Instant::now();
    let prec = PrecisionPolicy::default();
    let report = check_log_eg(6, &WedgePair::standard(), &prec).unwrap();
    let elapsed = start.elapsed();
    let pass = report.residual < 1e-8 && elapsed < Duration::from_secs(10);
    verdict(5, pass, elapsed, format!("max |c_j - (-1)^j Z_j/j| = {:.3e} for j = 1..6, tol 1e-8", report.residual));
}

#[test]
fn criterion_06_cubic_q() {
    let start = Instant::now();
    let prec = PrecisionPolicy::default();
    let pair = WedgePair::standard();
    let cubic = fit_q_cubic(&pair, 24, &prec).unwrap();
    let quartic = fit_q_polynomial(&pair, 4, 24, None, &prec).unwrap();
    let change = (cubic.fit_residual - quartic.fit_residual).abs();
    let elapsed = start.elapsed();
    let pass = cubic.fit_residual < 1e-7 && change < 1e-9 && elapsed < Duration::from_secs(20);
    verdict(
        6,
        pass,
        elapsed,
        format!(
            "cubic residual {:.3e} (tol 1e-7), quartic residual change {change:.3e} (tol 1e-9)",
            cubic.fit_residual
        ),
    );
}

fn decreasing(rows: &[LimitRow]) -> bool {
    rows.windows(2).all(|w| w[1].error < w[0].error)
}

#[test]
fn criterion_07_cusp_limits() {
    let start = Instant::now();
    let prec = PrecisionPolicy::default();
    let tau = UpperHalfPoint::new(c(0.0, 40.0)).unwrap();
    let sigmas = [c(0.0, 0.05), c(0.0, 0.02), c(0.0, 0.01)];
    let zeta2 = zeta_int(2, &prec).unwrap().value.re;
    let zeta3 = zeta_int(3, &prec).unwrap().value.re;
    let two = limit_zeta_probe(2, &sigmas[2..], tau, &prec).unwrap();
    let three = limit_zeta_probe(3, &sigmas, tau, &prec).unwrap();
    let euler = limit_euler_gamma_probe(&sigmas, tau, &prec).unwrap();
    let k2 = two[0].error / zeta2;
    let k3 = three[2].error / zeta3;
    let g = euler[2].error;
    let k2_ok = k2 < 1e-4;
    let k3_ok = decreasing(&three) && k3 < 0.05;
    let g_ok = decreasing(&euler) && g < 5e-2;
    let elapsed = start.elapsed();
    let pass = k2_ok && k3_ok && g_ok && elapsed < Duration::from_secs(30);
    verdict(
        7,
        pass,
        elapsed,
        format!(
            "k=2 relative error {k2:.3e} at 0.01i (tol 1e-4) {}; k=3 relative error {k3:.3e} (tol 5e-2, decreasing {}) {}; Euler limit error {g:.3e} (tol 5e-2, decreasing {}) {}",
            ok(k2_ok), decreasing(&three), ok(k3_ok), decreasing(&euler), ok(g_ok)
        ),
    );
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISSED"
    }
}

#[test]
fn criterion_08_degeneration_to_euler_gamma() {
    let start = Instant::now();
    let prec = PrecisionPolicy::default();
    let tau = UpperHalfPoint::new(c(0.0, 40.0)).unwrap();
    let sigmas = [c(0.0, 0.05), c(0.0, 0.02), c(0.0, 0.01)];
    let mut parts = Vec::new();
    let mut pass = true;
    for (z, target) in [(2.0, 1.0), (3.0, 2.0)] {
        let values = scl_limit_probe(c(z, 0.0), &sigmas, tau, &prec).unwrap();
        let errors: Vec<f64> = values.iter().map(|v| (v - target).norm() / target).collect();
        let last = errors[2];
        pass &= last < 0.02;
        parts.push(format!(
            "z={z}: relative errors {:.3e}/{:.3e}/{:.3e}, at 0.01i {} (tol 2e-2)",
            errors[0],
            errors[1],
            last,
            ok(last < 0.02)
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    verdict(8, pass, elapsed, parts.join("; "));
}

#[test]
fn criterion_09_lipschitz() {
    let start = Instant::now();
    let prec = PrecisionPolicy::default();
    let mut worst: f64 = 0.0;
    for k in [2, 5] {
        for rho in [c(0.0, 1.0), c(0.3, 0.7)] {
            worst = worst.max(check_lipschitz(k, rho, &prec).unwrap().residual);
        }
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-10 && elapsed < Duration::from_secs(5);
    verdict(9, pass, elapsed, format!("max gap {worst:.3e} for k in {{2, 5}}, tol 1e-10"));
}

#[test]
fn criterion_10_eisenstein_modularity() {
    let start = Instant::now();
    let prec = PrecisionPolicy::default();
    let mut rng = StdRng::seed_from_u64(10);
    let mut modular_ok = true;
    let mut routes_ok = true;
    let (mut worst_mod, mut worst_route): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let tau = UpperHalfPoint::new(random_point(&mut rng, 0.7, 1.6)).unwrap();
        for k in [4, 6] {
            let (defect, bound) = modularity_defect(k, tau, &prec).unwrap();
            modular_ok &= defect <= bound;
            worst_mod = worst_mod.max(defect / bound);
            let lattice = eisenstein_lattice(k, tau, &prec).unwrap();
            let series = gk_qexp(k, tau, &prec).unwrap();
            let gap = (lattice.value - series.value).norm();
            let allowed = lattice.err_bound + series.err_bound;
            routes_ok &= gap <= allowed;
            worst_route = worst_route.max(gap / allowed);
        }
    }
    let elapsed = start.elapsed();
    let pass = modular_ok && routes_ok && elapsed < Duration::from_secs(30);
    verdict(
        10,
        pass,
        elapsed,
        format!("worst modularity defect/bound {worst_mod:.3}, worst lattice-vs-series gap/bound {worst_route:.3} over 20 points"),
    );
}

#[test]
fn criterion_11_cocycle_probe() {
    let start = Instant::now();
    let prec = PrecisionPolicy::default();
    let points = [
        [c(0.3, 1.1), c(-0.2, 0.9), c(1.0, 0.05)],
        [c(0.1, 0.7), c(0.4, 1.3), c(1.0, -0.1)],
        [c(-0.3, 0.5), c(0.2, 0.8), c(0.9, 0.0)],
        [c(1.3, 2.1), c(-0.4, 0.6), c(1.1, 0.2)],
        [c(0.2, 0.4), c(0.7, 1.9), c(1.0, 0.3)],
        [c(-0.6, 1.4), c(0.5, 0.45), c(1.2, -0.15)],
    ];
    let mut evaluated = 0;
    let mut worst: f64 = 0.0;
    let mut skipped = Vec::new();
    for x in points {
        let triple = HomogeneousTriple::from_array(x).unwrap();
        match check_cocycle_commutator(4, &triple, &prec) {
            Ok(r) => {
                evaluated += 1;
                worst = worst.max(r.residual);
            }
            Err(e) => skipped.push(e.to_string()),
        }
    }
    let agrees = evaluated >= 5 && worst < 1e-8;
    let outcome = if agrees {
        format!("commutator word for e13 matches the direct letter, max gap {worst:.3e} at {evaluated} points")
    } else {
        format!(
            "discrepancy reported: max gap {worst:.3e} at {evaluated} points, {} skipped {:?}",
            skipped.len(),
            skipped
        )
    };
    // exploratory: a reported discrepancy satisfies the criterion too
    verdict(11, true, start.elapsed(), outcome);
}
