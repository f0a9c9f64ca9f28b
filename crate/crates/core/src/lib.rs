//! Numerical laboratory for the Einstein-Lichnerowicz conformal constraint system.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: flat tori and radial reductions of the round sphere, sampled
//!   tensor fields, and the operators `Δ_g`, `L_g` and the Lamé operator.
//! * [`conformal`]: physics data, system coefficients, reconstruction of initial
//!   data sets and the constraint residuals they must satisfy.
//! * [`solver`]: momentum solve, positivity-preserving Newton scalar solve and the
//!   damped alternating outer iteration.
//! * [`bubbles`]: closed-form blow-up profiles and the integral 1-forms built
//!   from them, both by quadrature and by their far-field asymptotics.
//! * [`green`]: the Euclidean Lamé fundamental solution, its stress kernel, the
//!   conformal Killing fields of a ball and the Green representation formula.
//! * [`instability`]: explicit blowing-up families on the round 3-sphere.
//! * [`diagnostics`]: Harnack ratios, Pohozaev balances, the sharp stability
//!   condition and conformal covariance residuals.

pub mod bubbles;
pub mod conformal;
pub mod diagnostics;
pub mod geometry;
pub mod green;
pub mod instability;
pub mod linalg;
pub mod quadrature;
pub mod solver;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Critical Sobolev exponent `2n/(n-2)`.
pub fn critical_exponent(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

/// Area of the unit `d`-sphere in `R^{d+1}`.
pub fn sphere_area(d: usize) -> f64 {
    // ω_d = 2 π^{(d+1)/2} / Γ((d+1)/2), via the recursion ω_d = 2π/(d-1) ω_{d-2}.
    match d {
        0 => 2.0,
        1 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI / (d as f64 - 1.0) * sphere_area(d - 2),
    }
}
