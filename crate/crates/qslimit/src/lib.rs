//! Numerical study of the limiting quicksort distribution.
//!
//! Let X_n be the number of comparisons classic quicksort (first-element
//! pivot) performs on a uniform random permutation of {1..n}. The normalized
//! cost (X_n − E X_n)/n converges in distribution to a limit law Y. This crate
//! computes and cross-validates the main analytic objects attached to Y:
//!
//! * [`charfn`] — the characteristic function f(t) = E e^{itY}, obtained as the
//!   fixed point of Rösler's functional equation by iterated quadrature; plus
//!   the super-polynomial envelope certificate and an empirical exponential
//!   decay rate η̂.
//! * [`laplace`] — the transform ψ(s) = ∫₀^∞ f(t) e^{2it log t} e^{−st} dt,
//!   its derivatives, the shift-differential equation −ψ′(s) = ψ²(s−i), the
//!   classical sup/strip/derivative bounds, analytic continuation of ψ to the
//!   left half-plane, and a Bromwich-contour recovery of f.
//! * [`density`] — the density p(x) by Fourier inversion and its analytic
//!   extension to a strip around the real axis.
//! * [`quicksim`] — exact small-n cost distributions, the exact mean
//!   recurrence, and seeded Monte Carlo simulation providing the independent
//!   ground truth.
//! * [`numerics`] — the shared quadrature/spline/finite-difference kernels.
//!
//! All numerics are double precision. Error budgets attached to results are
//! estimates (order-n vs order-2n quadrature differences plus modeled tail
//! terms), not rigorous interval bounds.

pub mod charfn;
pub mod density;
pub mod laplace;
pub mod numerics;
pub mod quicksim;

pub use numerics::{Complex, NumericsError};
