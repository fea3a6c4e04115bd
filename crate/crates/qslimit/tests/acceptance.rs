//! Acceptance gate: one test per acceptance criterion, each printing a
//! single pass/fail line. Everything runs on the default production grid
//! (t_max = 200, h = 0.02), shared across criteria through lazy fixtures.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::sync::LazyLock;

use qslimit::charfn::{
    envelope_certify, equation_residual, fit_decay, iterate_to_fixpoint, with_residual, DecayFit,
    GridCharFn,
};
use qslimit::density::{compare_histogram, density_at_complex, invert_density, DensityGrid};
use qslimit::laplace::{
    calibrate_a, certify_deriv_bounds, certify_strip_bounds, certify_sup_bound, contour_recover_f,
    marched_psi, psi, shift_residual, ContinuationCache, SupScan,
};
use qslimit::numerics::{central_diff, integrate, GradedMesh, QuadRule};
use qslimit::quicksim::{exact_distribution, exact_mean, simulate, Rational, SimSummary};
use qslimit::Complex;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

struct Fixture {
    f: GridCharFn,
    diffs: Vec<f64>,
    fit: DecayFit,
    a: f64,
    scan1: SupScan,
}

static FIXTURE: LazyLock<Fixture> = LazyLock::new(|| {
    let (f, diffs) = iterate_to_fixpoint(200.0, 0.02, 60, 1e-8).expect("fixed point converges");
    let residual = equation_residual(&f, &[1.0, 5.0, 10.0, 20.0, 50.0]).expect("residual");
    let f = with_residual(f, residual);
    let fit = fit_decay(&f, (30.0, 150.0)).expect("decay fit");
    let f = f.with_decay_fit(fit.clone());
    let a = calibrate_a(&f).expect("calibrate A");
    let scan1 = certify_sup_bound(1.0, (-50.0, 50.0), 0.1, &f).expect("sigma=1 scan");
    Fixture { f, diffs, fit, a, scan1 }
});

static DENSITY: LazyLock<DensityGrid> =
    LazyLock::new(|| invert_density(&FIXTURE.f, -2.0, 8.0, 0.01).expect("density inversion"));

static SIM: LazyLock<SimSummary> = LazyLock::new(|| simulate(10_000, 100_000, 42));

fn report(num: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {num:02} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {num} ({name}) failed: {detail}");
}

#[test]
fn criterion_01_fixed_point_convergence() {
    let fx = &*FIXTURE;
    let last = fx.diffs.last().copied().unwrap_or(f64::NAN);
    let pass = fx.diffs.len() <= 60 && last < 1e-8 && fx.f.residual() < 1e-6;
    report(
        1,
        "fixed-point convergence",
        pass,
        &format!(
            "{} iterations, sup-diff {last:.2e}, equation residual {:.2e}",
            fx.diffs.len(),
            fx.f.residual()
        ),
    );
}

#[test]
fn criterion_02_charfn_axioms() {
    let fx = &*FIXTURE;
    let at_zero = fx.f.eval(0.0).unwrap();
    let max_mod = fx
        .f
        .values()
        .iter()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max);
    let deriv0 = central_diff(|p| fx.f.eval(p.re).unwrap(), c(0.0, 0.0), 0.01, c(1.0, 0.0))
        .unwrap()
        .norm();
    let pass = at_zero == c(1.0, 0.0) && max_mod <= 1.0 + 1e-9 && deriv0 <= 1e-5;
    report(
        2,
        "characteristic-function axioms",
        pass,
        &format!("f(0) = {at_zero}, max|f| = {max_mod:.12}, |f'(0)| = {deriv0:.2e}"),
    );
}

#[test]
fn criterion_03_eq1_shift_residual() {
    let fx = &*FIXTURE;
    let mut rng = ChaCha8Rng::seed_from_u64(314159);
    let mut worst_ratio = 0.0f64;
    let mut ok = true;
    for _ in 0..20 {
        let s = c(rng.random_range(0.5..3.0), rng.random_range(-5.0..5.0));
        let r = shift_residual(s, &fx.f).unwrap();
        ok &= r.residual <= r.budget;
        worst_ratio = worst_ratio.max(r.residual / r.budget);
    }
    // Deliberate corruption control: scale f by 0.99 past t = 1.
    let values: Vec<Complex> = fx
        .f
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| if fx.f.knot(j) > 1.0 { v * 0.99 } else { *v })
        .collect();
    let bad = GridCharFn::from_values(fx.f.h(), values, 0).unwrap();
    let control = shift_residual(c(1.0, 0.0), &bad).unwrap();
    let control_ok = control.residual > 10.0 * control.budget;
    report(
        3,
        "Eq. (1) certification",
        ok && control_ok,
        &format!(
            "worst residual/budget {worst_ratio:.3} over 20 points; corrupted control at {:.1}x budget",
            control.residual / control.budget
        ),
    );
}

#[test]
fn criterion_04_lemma3_sup_bound() {
    let fx = &*FIXTURE;
    let mut ok = fx.scan1.report.pass;
    for sigma in [0.5, 2.0] {
        let scan = certify_sup_bound(sigma, (-50.0, 50.0), 0.1, &fx.f).unwrap();
        ok &= scan.report.pass && scan.sup < 1.0 / sigma;
    }
    let eps = fx.scan1.eps_hat.unwrap_or(f64::NAN);
    ok &= eps > 0.0;
    report(
        4,
        "Lemma 3 sup bound",
        ok,
        &format!("sup at sigma=1 is {:.6}; eps_hat = {eps:.6}", fx.scan1.sup),
    );
}

#[test]
fn criterion_05_lemma1_derivative_bound() {
    let fx = &*FIXTURE;
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let pts: Vec<Complex> = (0..10)
        .map(|_| c(rng.random_range(0.5..3.0), rng.random_range(-4.0..4.0)))
        .collect();
    let (r1, _) = certify_deriv_bounds(&pts, 2, &fx.f, fx.a).unwrap();
    // Every third sample is the n = 0 identity row.
    let identity_ok = r1
        .samples
        .iter()
        .step_by(3)
        .all(|b| b.margin().abs() < 1e-10);
    report(
        5,
        "Lemma 1 derivative bound",
        r1.pass && identity_ok,
        &format!("worst margin {:.2e}; n=0 rows are identities", r1.worst_margin),
    );
}

#[test]
fn criterion_06_lemma4_lemma5_strip_bounds() {
    let fx = &*FIXTURE;
    let mut cache = ContinuationCache::new(fx.a);
    let (r4, r5) = certify_strip_bounds(&fx.f, &fx.scan1, &mut cache).unwrap();
    let re1_margin = r4.samples.last().unwrap().margin();
    let m = r5.constants["M"];
    report(
        6,
        "Lemmas 4-5 strip and region bounds",
        r4.pass && r5.pass && re1_margin.abs() < 1e-12,
        &format!(
            "strip worst margin {:.2e}, margin at Re s = 1 is {re1_margin:.1e}; M = {m:.4}",
            r4.worst_margin
        ),
    );
}

#[test]
fn criterion_07_continuation_consistency() {
    let fx = &*FIXTURE;
    let mut cache = ContinuationCache::new(fx.a);
    let mut rng = ChaCha8Rng::seed_from_u64(1618);
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..10 {
        let s = c(rng.random_range(0.1..1.5), rng.random_range(-1.0..3.0));
        let direct = psi(s, &fx.f, 0).unwrap();
        let marched = marched_psi(s, &fx.f, &mut cache).unwrap();
        let diff = (direct.value - marched.value).norm();
        ok &= diff <= direct.err_est + marched.err_est;
        worst = worst.max(diff);
    }
    // One-step integrated shift identity at s0 = 1 + 0.5i by direct quadrature.
    let s0 = c(1.0, 0.5);
    let lhs = psi(s0, &fx.f, 0).unwrap();
    let mid = psi(s0 - c(0.0, 1.0), &fx.f, 0).unwrap();
    let integral = integrate(
        |u| {
            let v = psi(s0 - c(0.0, 1.0 + u), &fx.f, 0).unwrap().value;
            v * v
        },
        &GradedMesh::uniform(0.0, 1.0, 8),
        &QuadRule::gauss_legendre(16),
    )
    .unwrap();
    let one_step = (lhs.value - mid.value + c(0.0, 1.0) * integral.value).norm();
    let one_step_budget = lhs.err_est + mid.err_est + integral.err_est + 1e-6;
    report(
        7,
        "continuation consistency",
        ok && one_step <= one_step_budget,
        &format!(
            "worst overlap deviation {worst:.2e}; one-step identity residual {one_step:.2e} (budget {one_step_budget:.2e})"
        ),
    );
}

#[test]
fn criterion_08_decay_and_contour() {
    let fx = &*FIXTURE;
    let ok_fit = fx.fit.eta_hat > 0.0;
    let eps = fx.scan1.eps_hat.unwrap();
    let eta = fx.fit.eta_hat.min(eps / 4.0);
    let mut cache = ContinuationCache::new(fx.a);
    let mut ok_contour = true;
    let mut worst = 0.0f64;
    for t in [5.0, 10.0, 20.0] {
        let (rec, budget) = contour_recover_f(t, eta, &fx.f, &mut cache, 8e-3).unwrap();
        let truth = fx.f.eval(t).unwrap();
        let diff = (rec - truth).norm();
        let eta_q = (eta * 64.0).floor() / 64.0;
        ok_contour &= diff <= budget && rec.norm() <= 20.0 * (-eta_q * t).exp();
        worst = worst.max(diff);
    }
    report(
        8,
        "exponential decay and contour recovery",
        ok_fit && ok_contour,
        &format!(
            "eta_hat = {:.4} (rms {:.2e}); worst contour deviation {worst:.2e} at eta = {eta:.4}",
            fx.fit.eta_hat, fx.fit.rms_residual
        ),
    );
}

#[test]
fn criterion_09_envelope() {
    let fx = &*FIXTURE;
    let env = envelope_certify(&fx.f, 10.0, 1.05);
    report(
        9,
        "envelope bound on [10, 200]",
        env.pass,
        &format!("max |f|/envelope = {:.4} at t = {:.2}", env.max_ratio, env.arg_max),
    );
}

#[test]
fn criterion_10_density_and_extension() {
    let fx = &*FIXTURE;
    let dg = &*DENSITY;
    let mass_ok = (dg.mass() - 1.0).abs() <= 1e-3;
    let mean_ok = dg.mean().abs() <= 1e-3;
    // Complex extension: conjugate symmetry and Cauchy-Riemann inside the
    // safe strip.
    let mut rng = ChaCha8Rng::seed_from_u64(577);
    let mut conj_ok = true;
    for _ in 0..5 {
        let s = c(
            rng.random_range(-1.0..4.0),
            rng.random_range(0.05..0.8 * fx.fit.eta_hat),
        );
        let a = density_at_complex(s, &fx.f, &fx.fit).unwrap();
        let b = density_at_complex(s.conj(), &fx.f, &fx.fit).unwrap();
        conj_ok &= (a.value - b.value.conj()).norm() <= a.err_est + b.err_est + 1e-10;
    }
    let s = c(1.0, 0.1);
    let d_re = central_diff(
        |p| density_at_complex(p, &fx.f, &fx.fit).unwrap().value,
        s,
        1e-2,
        c(1.0, 0.0),
    )
    .unwrap();
    let d_im = central_diff(
        |p| density_at_complex(p, &fx.f, &fx.fit).unwrap().value,
        s,
        1e-2,
        c(0.0, 1.0),
    )
    .unwrap();
    // central_diff normalizes out the direction; analyticity means the two
    // estimates of p'(s) coincide.
    let cr = (d_re - d_im).norm();
    report(
        10,
        "density inversion and analytic extension",
        mass_ok && mean_ok && conj_ok && cr <= 1e-4,
        &format!(
            "mass {:.6}, mean {:+.2e}, Cauchy-Riemann defect {cr:.2e}",
            dg.mass(),
            dg.mean()
        ),
    );
}

#[test]
fn criterion_11_simulator_ground_truth() {
    // Exact recurrence vs brute-force enumeration for n <= 8.
    let mut exact_ok = true;
    for n in 2..=8 {
        let brute = exact_distribution(n).unwrap().mean();
        exact_ok &= (brute - exact_mean(n)).abs() <= 1e-10;
    }
    // Exact n = 3 distribution is {2: 1/3, 3: 2/3}; probabilities are stored
    // unreduced over n!, so compare by cross-multiplication.
    let d3 = exact_distribution(3).unwrap();
    let eq = |r: Option<&Rational>, num: u128, den: u128| {
        r.is_some_and(|r| r.num * den == num * r.den)
    };
    let d3_ok = d3.support.len() == 2
        && eq(d3.support.get(&2), 1, 3)
        && eq(d3.support.get(&3), 2, 3);

    let sim = &*SIM;
    let fx = &*FIXTURE;
    // Empirical characteristic function against the converged grid.
    let mut worst_ecf = 0.0f64;
    for &(t, e) in &sim.ecf {
        if t > 10.0 {
            continue;
        }
        worst_ecf = worst_ecf.max((e - fx.f.eval(t).unwrap()).norm());
    }
    let hist = compare_histogram(&DENSITY, sim).unwrap();
    let pass = exact_ok && d3_ok && worst_ecf < 0.02 && hist.sup_cdf_distance < 0.01;
    report(
        11,
        "simulator ground truth",
        pass,
        &format!(
            "means exact to 1e-10; worst ecf deviation {worst_ecf:.4} on [0,10]; sup CDF distance {:.4} (floor {:.4})",
            hist.sup_cdf_distance, hist.mc_noise_floor
        ),
    );
}
