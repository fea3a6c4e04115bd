//! Complex-valued numerical kernels: composite Gauss–Legendre quadrature over
//! graded meshes, natural cubic splines for complex grid functions, and
//! Richardson-style central differences.
//!
//! Everything here is double precision and pure; all types are immutable after
//! construction and safe to share across threads.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use thiserror::Error;

pub type Complex = Complex64;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("integrand returned a non-finite value at t = {0}")]
    NonFinite(f64),
    #[error("quadrature error estimate {err:.3e} exceeds tolerance {tol:.3e} after maximum refinement")]
    ToleranceNotMet { err: f64, tol: f64 },
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("evaluation point {point} outside spline domain [{lo}, {hi}]")]
    OutOfDomain { point: f64, lo: f64, hi: f64 },
}

/// Gauss–Legendre rule on (-1, 1). Nodes strictly increasing, weights sum to 2.
#[derive(Debug, Clone)]
pub struct QuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadRule {
    /// Rule of the given order (node count), exact on polynomials of degree
    /// 2·order − 1. Nodes are found by Newton iteration on P_n with the usual
    /// Chebyshev-like initial guesses; rules are memoized process-wide.
    pub fn gauss_legendre(order: usize) -> QuadRule {
        assert!(order >= 2, "quadrature order must be at least 2");
        static CACHE: OnceLock<Mutex<HashMap<usize, QuadRule>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().unwrap().get(&order) {
            return rule.clone();
        }
        let rule = Self::compute_gauss_legendre(order);
        cache.lock().unwrap().insert(order, rule.clone());
        rule
    }

    fn compute_gauss_legendre(n: usize) -> QuadRule {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess for the i-th root (descending).
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Evaluate P_n and P_n' by the three-term recurrence.
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
            nodes[i] = -x;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        QuadRule { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Apply the rule to `f` on [a, b].
    pub fn apply<F: FnMut(f64) -> Complex>(&self, a: f64, b: f64, mut f: F) -> Complex {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Complex::new(0.0, 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Partition of [a, b] into quadrature panels, optionally graded toward one or
/// both endpoints so that integrands like x·log x are resolved without special
/// weights.
#[derive(Debug, Clone)]
pub struct GradedMesh {
    breakpoints: Vec<f64>,
}

impl GradedMesh {
    pub fn from_breakpoints(breakpoints: Vec<f64>) -> Result<GradedMesh, NumericsError> {
        if breakpoints.len() < 2 {
            return Err(NumericsError::DegenerateGrid(
                "mesh needs at least two breakpoints".into(),
            ));
        }
        if !breakpoints.windows(2).all(|w| w[1] > w[0]) {
            return Err(NumericsError::DegenerateGrid(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(GradedMesh { breakpoints })
    }

    pub fn uniform(a: f64, b: f64, panels: usize) -> GradedMesh {
        assert!(b > a && panels >= 1);
        let breakpoints = (0..=panels)
            .map(|k| a + (b - a) * k as f64 / panels as f64)
            .collect();
        GradedMesh { breakpoints }
    }

    /// Panels shrinking toward `a` as (k/n)^exponent.
    pub fn graded_left(a: f64, b: f64, panels: usize, exponent: f64) -> GradedMesh {
        assert!(b > a && panels >= 1 && exponent >= 1.0);
        let breakpoints = (0..=panels)
            .map(|k| a + (b - a) * (k as f64 / panels as f64).powf(exponent))
            .collect();
        GradedMesh { breakpoints }
    }

    /// Panels shrinking toward both endpoints; `panels_per_side` on each half.
    pub fn graded_both(a: f64, b: f64, panels_per_side: usize, exponent: f64) -> GradedMesh {
        assert!(b > a && panels_per_side >= 1 && exponent >= 1.0);
        let mid = 0.5 * (a + b);
        let mut breakpoints = Vec::with_capacity(2 * panels_per_side + 1);
        for k in 0..=panels_per_side {
            breakpoints.push(a + (mid - a) * (k as f64 / panels_per_side as f64).powf(exponent));
        }
        for k in (0..panels_per_side).rev() {
            breakpoints.push(b - (b - mid) * (k as f64 / panels_per_side as f64).powf(exponent));
        }
        GradedMesh { breakpoints }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn a(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn b(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Every panel split in half.
    pub fn refined(&self) -> GradedMesh {
        let mut breakpoints = Vec::with_capacity(2 * self.breakpoints.len() - 1);
        for w in self.breakpoints.windows(2) {
            breakpoints.push(w[0]);
            breakpoints.push(0.5 * (w[0] + w[1]));
        }
        breakpoints.push(self.b());
        GradedMesh { breakpoints }
    }
}

/// Quadrature value with an error estimate (difference between the order-n and
/// order-2n results; conservative for the returned order-2n value).
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: Complex,
    pub err_est: f64,
}

/// Panel-summed Gauss–Legendre integral of `f` over the mesh.
pub fn integrate<F: Fn(f64) -> Complex>(
    f: F,
    mesh: &GradedMesh,
    rule: &QuadRule,
) -> Result<Quadrature, NumericsError> {
    let fine = QuadRule::gauss_legendre(2 * rule.order());
    let mut value = Complex::new(0.0, 0.0);
    let mut err_est = 0.0;
    for w in mesh.breakpoints().windows(2) {
        let (coarse_v, fine_v) = panel_pair(&f, w[0], w[1], rule, &fine)?;
        value += fine_v;
        err_est += (fine_v - coarse_v).norm();
    }
    Ok(Quadrature { value, err_est })
}

/// Like [`integrate`], but panels whose error estimate exceeds their share of
/// `tol` are halved, up to 8 times. Fails with `ToleranceNotMet` if the total
/// estimate still exceeds `tol`.
pub fn integrate_to_tol<F: Fn(f64) -> Complex>(
    f: F,
    mesh: &GradedMesh,
    rule: &QuadRule,
    tol: f64,
) -> Result<Quadrature, NumericsError> {
    const MAX_DEPTH: u32 = 8;
    let fine = QuadRule::gauss_legendre(2 * rule.order());
    let span = mesh.b() - mesh.a();
    let mut value = Complex::new(0.0, 0.0);
    let mut err_est = 0.0;
    // Work stack of (a, b, depth).
    let mut stack: Vec<(f64, f64, u32)> = mesh
        .breakpoints()
        .windows(2)
        .map(|w| (w[0], w[1], 0))
        .collect();
    while let Some((a, b, depth)) = stack.pop() {
        let (coarse_v, fine_v) = panel_pair(&f, a, b, rule, &fine)?;
        let panel_err = (fine_v - coarse_v).norm();
        if panel_err > tol * (b - a) / span && depth < MAX_DEPTH {
            let mid = 0.5 * (a + b);
            stack.push((a, mid, depth + 1));
            stack.push((mid, b, depth + 1));
        } else {
            value += fine_v;
            err_est += panel_err;
        }
    }
    if err_est > tol {
        return Err(NumericsError::ToleranceNotMet { err: err_est, tol });
    }
    Ok(Quadrature { value, err_est })
}

fn panel_pair<F: Fn(f64) -> Complex>(
    f: &F,
    a: f64,
    b: f64,
    coarse: &QuadRule,
    fine: &QuadRule,
) -> Result<(Complex, Complex), NumericsError> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut coarse_v = Complex::new(0.0, 0.0);
    for (&x, &w) in coarse.nodes().iter().zip(coarse.weights()) {
        let t = mid + half * x;
        let v = f(t);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(NumericsError::NonFinite(t));
        }
        coarse_v += w * v;
    }
    let mut fine_v = Complex::new(0.0, 0.0);
    for (&x, &w) in fine.nodes().iter().zip(fine.weights()) {
        let t = mid + half * x;
        let v = f(t);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(NumericsError::NonFinite(t));
        }
        fine_v += w * v;
    }
    Ok((coarse_v * half, fine_v * half))
}

/// Natural cubic spline through complex values on a uniform grid.
///
/// Evaluation outside the knot range is an error, never extrapolation.
#[derive(Debug, Clone)]
pub struct ComplexSpline {
    t0: f64,
    h: f64,
    values: Vec<Complex>,
    /// Second derivatives at the knots (natural: zero at both ends).
    second: Vec<Complex>,
}

impl ComplexSpline {
    /// Fit from knot locations and values. Knots must be uniform to 1e-12
    /// relative and number at least 4.
    pub fn fit(knots: &[f64], values: &[Complex]) -> Result<ComplexSpline, NumericsError> {
        if knots.len() < 4 {
            return Err(NumericsError::DegenerateGrid(format!(
                "spline needs at least 4 knots, got {}",
                knots.len()
            )));
        }
        if knots.len() != values.len() {
            return Err(NumericsError::DegenerateGrid(
                "knot and value counts differ".into(),
            ));
        }
        let h = knots[1] - knots[0];
        if h <= 0.0 {
            return Err(NumericsError::DegenerateGrid(
                "knots must be increasing".into(),
            ));
        }
        for w in knots.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-12 * h.abs().max(1.0) {
                return Err(NumericsError::DegenerateGrid(
                    "knots are not uniformly spaced".into(),
                ));
            }
        }
        Ok(Self::fit_uniform(knots[0], h, values.to_vec()))
    }

    /// Fit on a uniform grid given origin and spacing.
    pub fn fit_uniform(t0: f64, h: f64, values: Vec<Complex>) -> ComplexSpline {
        let n = values.len();
        assert!(n >= 4 && h > 0.0);
        // Tridiagonal system for the second derivatives, natural ends.
        // Interior rows: m[i-1]/6 + 2*m[i]/3 + m[i+1]/6 = (v[i+1]-2v[i]+v[i-1])/h^2.
        let mut second = vec![Complex::new(0.0, 0.0); n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![Complex::new(0.0, 0.0); n];
        diag[0] = 1.0;
        for i in 1..n - 1 {
            rhs[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h);
        }
        diag[n - 1] = 1.0;
        // Thomas sweep (off-diagonals are 1/6 on interior rows only).
        let mut c = vec![0.0; n]; // upper diagonal after elimination
        diag[0] = 1.0;
        c[0] = 0.0;
        for i in 1..n - 1 {
            let m = 1.0 / (2.0 / 3.0 - c[i - 1] / 6.0);
            c[i] = m / 6.0;
            rhs[i] = (rhs[i] - rhs[i - 1] / 6.0) * m;
        }
        // Natural end: second[n-1] = 0 already.
        second[n - 1] = Complex::new(0.0, 0.0);
        for i in (1..n - 1).rev() {
            second[i] = rhs[i] - c[i] * second[i + 1];
        }
        second[0] = Complex::new(0.0, 0.0);
        ComplexSpline {
            t0,
            h,
            values,
            second,
        }
    }

    pub fn t_min(&self) -> f64 {
        self.t0
    }

    pub fn t_max(&self) -> f64 {
        self.t0 + self.h * (self.values.len() - 1) as f64
    }

    pub fn eval(&self, t: f64) -> Result<Complex, NumericsError> {
        let (lo, hi) = (self.t_min(), self.t_max());
        if t < lo || t > hi {
            return Err(NumericsError::OutOfDomain { point: t, lo, hi });
        }
        Ok(self.eval_clamped(t))
    }

    /// Evaluation with the interval index clamped into range; callers must
    /// have checked the domain. Exact at knots.
    pub(crate) fn eval_clamped(&self, t: f64) -> Complex {
        let n = self.values.len();
        let mut i = ((t - self.t0) / self.h).floor() as isize;
        i = i.clamp(0, n as isize - 2);
        let i = i as usize;
        let a = self.t0 + self.h * i as f64;
        let u = (t - a) / self.h;
        if u == 0.0 {
            return self.values[i];
        }
        let w = 1.0 - u;
        let h2 = self.h * self.h / 6.0;
        w * self.values[i]
            + u * self.values[i + 1]
            + h2 * ((w * w * w - w) * self.second[i] + (u * u * u - u) * self.second[i + 1])
    }
}

/// Fourth-order central difference of `f` at `s` along a unit direction:
/// (−f(s+2h) + 8f(s+h) − 8f(s−h) + f(s−2h)) / (12h).
pub fn central_diff<F: Fn(Complex) -> Complex>(
    f: F,
    s: Complex,
    h: f64,
    direction: Complex,
) -> Result<Complex, NumericsError> {
    assert!(h > 0.0, "step must be positive");
    let d = direction * h;
    let mut vals = [Complex::new(0.0, 0.0); 4];
    for (k, m) in [(0usize, 2.0), (1, 1.0), (2, -1.0), (3, -2.0)] {
        let p = s + m * d;
        let v = f(p);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(NumericsError::NonFinite(m * h));
        }
        vals[k] = v;
    }
    Ok((-vals[0] + 8.0 * vals[1] - 8.0 * vals[2] + vals[3]) / (12.0 * h) / direction * 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn rule_weights_sum_to_two() {
        for order in [2, 4, 8, 16, 32] {
            let rule = QuadRule::gauss_legendre(order);
            let sum: f64 = rule.weights().iter().sum();
            assert_abs_diff_eq!(sum, 2.0, epsilon = 1e-14);
            assert!(rule.nodes().windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn rule_exact_on_monomials() {
        // order n integrates x^k exactly for k <= 2n-1 on [-1,1].
        let rule = QuadRule::gauss_legendre(8);
        for k in 0..=15u32 {
            let exact = if k % 2 == 0 {
                2.0 / (k as f64 + 1.0)
            } else {
                0.0
            };
            let got = rule.apply(-1.0, 1.0, |x| c(x.powi(k as i32), 0.0));
            assert_abs_diff_eq!(got.re, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn integrate_constant_is_one() {
        let mesh = GradedMesh::uniform(0.0, 1.0, 4);
        let rule = QuadRule::gauss_legendre(16);
        let q = integrate(|_| c(1.0, 0.0), &mesh, &rule).unwrap();
        assert_abs_diff_eq!(q.value.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.value.im, 0.0, epsilon = 1e-14);
        assert!(q.err_est < 1e-13);
    }

    #[test]
    fn integrate_x_log_x() {
        // Oracle: integration by parts gives -1/4 exactly.
        let mesh = GradedMesh::graded_left(0.0, 1.0, 16, 2.0);
        let rule = QuadRule::gauss_legendre(16);
        let q = integrate(|x| c(if x > 0.0 { x * x.ln() } else { 0.0 }, 0.0), &mesh, &rule).unwrap();
        assert_abs_diff_eq!(q.value.re, -0.25, epsilon = 1e-10);
    }

    #[test]
    fn integrate_entropy_kernel() {
        // By symmetry, twice the x log x oracle: -1/2.
        let mesh = GradedMesh::graded_both(0.0, 1.0, 8, 2.0);
        let rule = QuadRule::gauss_legendre(16);
        let f = |x: f64| {
            let mut v = 0.0;
            if x > 0.0 {
                v += x * x.ln();
            }
            if x < 1.0 {
                v += (1.0 - x) * (1.0 - x).ln();
            }
            c(v, 0.0)
        };
        let q = integrate(f, &mesh, &rule).unwrap();
        assert_abs_diff_eq!(q.value.re, -0.5, epsilon = 1e-10);
    }

    #[test]
    fn integrate_rejects_non_finite() {
        let mesh = GradedMesh::uniform(0.0, 1.0, 2);
        let rule = QuadRule::gauss_legendre(4);
        let err = integrate(|x| c(f64::INFINITY / (x - 0.5), 0.0), &mesh, &rule);
        assert!(matches!(err, Err(NumericsError::NonFinite(_))));
    }

    #[test]
    fn tolerance_not_met_reported() {
        // An interior square-root kink: each halving only shrinks the
        // singular panel's error polynomially, so 8 levels cannot reach 1e-16.
        let mesh = GradedMesh::uniform(0.0, 1.0, 1);
        let rule = QuadRule::gauss_legendre(2);
        let f = |x: f64| c((x - 1.0 / 3.0).abs().sqrt(), 0.0);
        let err = integrate_to_tol(f, &mesh, &rule, 1e-16);
        assert!(matches!(err, Err(NumericsError::ToleranceNotMet { .. })));
    }

    #[test]
    fn refinement_does_not_inflate_error() {
        // Halving every panel never increases the estimate by more than 2x
        // on smooth integrands.
        let rule = QuadRule::gauss_legendre(8);
        let f = |x: f64| c((3.0 * x).sin() * (x * x).exp(), (2.0 * x).cos());
        let mesh = GradedMesh::uniform(0.0, 2.0, 3);
        let coarse = integrate(&f, &mesh, &rule).unwrap();
        let fine = integrate(&f, &mesh.refined(), &rule).unwrap();
        assert!(fine.err_est <= 2.0 * coarse.err_est + 1e-15);
    }

    #[test]
    fn quadrature_linearity_on_random_polynomials() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mesh = GradedMesh::uniform(-1.0, 2.0, 3);
        let rule = QuadRule::gauss_legendre(16);
        for _ in 0..20 {
            let cf: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let cg: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let alpha = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let beta = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let poly = |cs: &[f64], x: f64| cs.iter().rev().fold(0.0, |acc, &a| acc * x + a);
            let qf = integrate(|x| c(poly(&cf, x), 0.0), &mesh, &rule).unwrap().value;
            let qg = integrate(|x| c(poly(&cg, x), 0.0), &mesh, &rule).unwrap().value;
            let qc = integrate(
                |x| alpha * c(poly(&cf, x), 0.0) + beta * c(poly(&cg, x), 0.0),
                &mesh,
                &rule,
            )
            .unwrap()
            .value;
            let expect = alpha * qf + beta * qg;
            assert!((qc - expect).norm() <= 1e-12 * expect.norm().max(1.0));
        }
    }

    #[test]
    fn spline_reproduces_linear() {
        let knots: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let values: Vec<Complex> = knots.iter().map(|&t| c(t, 0.0)).collect();
        let s = ComplexSpline::fit(&knots, &values).unwrap();
        assert_abs_diff_eq!(s.eval(2.5).unwrap().re, 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eval(0.25).unwrap().re, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn spline_exact_at_knots_and_near_cubic_inside() {
        let knots: Vec<f64> = (0..11).map(|k| k as f64 / 10.0).collect();
        let values: Vec<Complex> = knots.iter().map(|&t| c(t * t * t, 0.0)).collect();
        let s = ComplexSpline::fit(&knots, &values).unwrap();
        for (&t, &v) in knots.iter().zip(&values) {
            assert_abs_diff_eq!(s.eval(t).unwrap().re, v.re, epsilon = 1e-14);
        }
        // Natural BC is wrong for t^3 at the ends, but interior midpoints stay
        // within 5e-3.
        let err = (s.eval(0.55).unwrap().re - 0.55f64.powi(3)).abs();
        assert!(err < 5e-3, "midpoint error {err}");
    }

    #[test]
    fn spline_constant_stays_constant() {
        let knots: Vec<f64> = (0..6).map(|k| k as f64).collect();
        let values = vec![c(3.0, -1.0); 6];
        let s = ComplexSpline::fit(&knots, &values).unwrap();
        for t in [0.1, 1.7, 4.99] {
            let v = s.eval(t).unwrap();
            assert_abs_diff_eq!(v.re, 3.0, epsilon = 1e-13);
            assert_abs_diff_eq!(v.im, -1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn spline_rejects_bad_grids() {
        let values = vec![c(0.0, 0.0); 3];
        assert!(matches!(
            ComplexSpline::fit(&[0.0, 1.0, 2.0], &values),
            Err(NumericsError::DegenerateGrid(_))
        ));
        let values = vec![c(0.0, 0.0); 4];
        assert!(matches!(
            ComplexSpline::fit(&[0.0, 1.0, 2.0, 3.5], &values),
            Err(NumericsError::DegenerateGrid(_))
        ));
    }

    #[test]
    fn spline_refuses_extrapolation() {
        let knots: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let values = vec![c(1.0, 0.0); 5];
        let s = ComplexSpline::fit(&knots, &values).unwrap();
        assert!(matches!(
            s.eval(-0.001),
            Err(NumericsError::OutOfDomain { .. })
        ));
        assert!(matches!(
            s.eval(4.001),
            Err(NumericsError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn spline_fourth_order_convergence() {
        // Error on a C^4 function should drop ~256x when knots quadruple
        // (measured exponent in [3.5, 4.5]). Periodic test function keeps the
        // natural-BC end effect out of the interior sample.
        let f = |t: f64| c((2.0 * t).sin(), (3.0 * t).cos());
        let max_err = |n: usize| -> f64 {
            let knots: Vec<f64> = (0..n).map(|k| k as f64 * 10.0 / (n - 1) as f64).collect();
            let values: Vec<Complex> = knots.iter().map(|&t| f(t)).collect();
            let s = ComplexSpline::fit(&knots, &values).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..400 {
                let t = 2.5 + 5.0 * i as f64 / 399.0; // interior window
                worst = worst.max((s.eval(t).unwrap() - f(t)).norm());
            }
            worst
        };
        let e1 = max_err(101);
        let e2 = max_err(401);
        let rate = (e1 / e2).ln() / 4.0f64.ln();
        assert!(
            (3.5..=4.5).contains(&rate),
            "measured convergence exponent {rate}"
        );
    }

    #[test]
    fn central_diff_polynomial_exact() {
        let f = |s: Complex| s * s;
        let d = central_diff(f, c(1.0, 1.0), 1e-3, c(1.0, 0.0)).unwrap();
        assert!((d - c(2.0, 2.0)).norm() < 1e-10);
        // degree-4 polynomial, still exact to rounding for the 4th-order stencil
        let g = |s: Complex| s * s * s * s;
        let d4 = central_diff(g, c(0.5, -0.25), 1e-2, c(1.0, 0.0)).unwrap();
        let expect = 4.0 * c(0.5, -0.25).powi(3);
        assert!((d4 - expect).norm() < 1e-10 * expect.norm().max(1.0));
    }

    #[test]
    fn central_diff_reciprocal() {
        // d/ds (1/s) at s=2 is -1/4. Truncation is h⁴f⁽⁵⁾/30 ≈ 6e-10 at
        // h=1e-2 and 4e-11 at h=5e-3.
        let f = |s: Complex| 1.0 / s;
        let d = central_diff(f, c(2.0, 0.0), 1e-2, c(1.0, 0.0)).unwrap();
        assert!((d - c(-0.25, 0.0)).norm() < 1e-9);
        let d = central_diff(f, c(2.0, 0.0), 5e-3, c(1.0, 0.0)).unwrap();
        assert!((d - c(-0.25, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn central_diff_constant_is_zero() {
        let d = central_diff(|_| c(4.0, 2.0), c(0.0, 0.0), 1e-3, c(1.0, 0.0)).unwrap();
        assert!(d.norm() < 1e-12);
    }

    #[test]
    fn central_diff_along_imaginary_direction() {
        // f(s) = s^2 differentiated along i still gives f'(s) = 2s.
        let f = |s: Complex| s * s;
        let d = central_diff(f, c(1.0, 2.0), 1e-3, c(0.0, 1.0)).unwrap();
        assert!((d - c(2.0, 4.0)).norm() < 1e-10);
    }
}
