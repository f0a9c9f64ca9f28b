//! Momentum solve, Newton scalar solve and the damped alternating iteration.

use thiserror::Error;

use crate::conformal::{ConformalError, SystemCoefficients};
use crate::critical_exponent;
use crate::geometry::{lame, lame_invert, Geometry, GeometryError, OneFormField, ScalarField, Spectral};
use crate::linalg::{bracketed_root, gmres, lanczos_min_ritz};

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Conformal(#[from] ConformalError),
    #[error("Δ + h is not coercive: smallest Ritz value {0:e}")]
    NonCoercive(f64),
    #[error("Newton iteration did not converge in {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("line search could not keep the iterate above the floor (min {0:e})")]
    PositivityLost(f64),
    #[error("outer iteration diverged at step {iterations} (residual {residual:e})")]
    OuterDiverged { iterations: usize, residual: f64 },
    #[error("degenerate data: the only nonnegative solution is zero (residual {residual_at_floor:e} at the floor)")]
    DegenerateData { residual_at_floor: f64 },
    #[error("manufactured solution falls below the floor (min {0:e})")]
    BelowFloor(f64),
    #[error("invalid options: {0}")]
    Options(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// Constant-coefficient root of the spatial means of `(h, f, b)`.
    Auto,
    Constant(f64),
    Field(ScalarField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_outer: usize,
    pub max_newton: usize,
    pub tol_residual: f64,
    pub damping: f64,
    pub u_floor: f64,
    pub initial_guess: InitialGuess,
    /// Check coercivity of `Δ + h` before the scalar solve.
    pub require_coercive: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_outer: 60,
            max_newton: 50,
            tol_residual: 1e-10,
            damping: 0.7,
            u_floor: 1e-8,
            initial_guess: InitialGuess::Auto,
            require_coercive: true,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<(), SolverError> {
        if !(self.tol_residual > 0.0 && self.u_floor > 0.0) {
            return Err(SolverError::Options("tolerances must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SolverError::Options("damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: ScalarField,
    pub w: OneFormField,
    /// L∞ residual of the scalar equation.
    pub scalar_residual: f64,
    /// L∞ residual of the momentum equation after kernel projection.
    pub momentum_residual: f64,
    pub kernel_defect: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn torus_only(g: &Geometry) -> Result<(), SolverError> {
    if g.is_torus() {
        Ok(())
    } else {
        Err(GeometryError::Unsupported("the system solver works on the torus").into())
    }
}

/// Right-hand side `u^{2*} X + Y` of the momentum equation.
fn momentum_rhs(u: &ScalarField, c: &SystemCoefficients) -> Result<OneFormField, SolverError> {
    let n = c.geometry().dim();
    let ts = critical_exponent(n);
    let up = u.map(|v| v.powf(ts));
    Ok(c.x.mul_scalar(&up)?.add(&c.y)?)
}

/// Solves `Δ⃗W = u^{2*} X + Y` modulo constant forms.
pub fn solve_momentum(u: &ScalarField, c: &SystemCoefficients) -> Result<(OneFormField, f64), SolverError> {
    let g = *c.geometry();
    torus_only(&g)?;
    g.check(u.geometry())?;
    Ok(lame_invert(&momentum_rhs(u, c)?, &g)?)
}

/// Pointwise residual `Δu + hu - f u^{2*-1} - a(W) u^{-2*-1}`.
pub fn scalar_residual(u: &ScalarField, w: &OneFormField, c: &SystemCoefficients) -> Result<ScalarField, SolverError> {
    let a = c.a_of(w)?;
    scalar_residual_with(u, &a, c, &Spectral::new(c.geometry())?)
}

fn scalar_residual_with(
    u: &ScalarField,
    a: &ScalarField,
    c: &SystemCoefficients,
    sp: &Spectral,
) -> Result<ScalarField, SolverError> {
    let ts = critical_exponent(c.geometry().dim());
    let lap = sp.laplacian(u.values());
    let vals = (0..lap.len())
        .map(|k| {
            let v = u.values()[k];
            lap[k] + c.h.values()[k] * v - c.f.values()[k] * v.powf(ts - 1.0) - a.values()[k] * v.powf(-ts - 1.0)
        })
        .collect();
    Ok(ScalarField::new(*c.geometry(), vals)?)
}

/// `(scalar, momentum)` L∞ residuals of a candidate pair, with the kernel part
/// of the momentum right-hand side removed.
pub fn system_residuals(u: &ScalarField, w: &OneFormField, c: &SystemCoefficients) -> Result<(f64, f64), SolverError> {
    let g = *c.geometry();
    torus_only(&g)?;
    let s = scalar_residual(u, w, c)?.sup_norm();
    let rhs = momentum_rhs(u, c)?;
    let means = rhs.means();
    let proj = OneFormField::constant(g, &means)?;
    let m = lame(w, &g)?.sub(&rhs.sub(&proj)?)?.max_abs();
    Ok((s, m))
}

/// Positive root of `h t = f t^{2*-1} + b t^{-2*-1}` on the branch where the
/// linearisation is positive. `None` if no positive root exists.
pub fn constant_root(n: usize, h: f64, f: f64, b: f64) -> Option<f64> {
    let ts = critical_exponent(n);
    let g = |t: f64| h * t - f * t.powf(ts - 1.0) - b * t.powf(-ts - 1.0);
    let dg = |t: f64| h - (ts - 1.0) * f * t.powf(ts - 2.0) + (ts + 1.0) * b * t.powf(-ts - 2.0);
    if b <= 0.0 {
        // t = (h/f)^{1/(2*-2)} when both are positive
        return if h > 0.0 && f > 0.0 { Some((h / f).powf(1.0 / (ts - 2.0))) } else { None };
    }
    let (lo, hi) = (1e-12_f64, 1e12_f64);
    if f <= 0.0 {
        return if h > 0.0 || f < 0.0 { bracketed_root(g, lo, hi, 1e-15) } else { None };
    }
    // g rises from -∞, peaks where g' = 0, then falls: take the rising root
    let peak = bracketed_root(dg, lo, hi, 1e-15)?;
    if g(peak) < 0.0 {
        return None;
    }
    bracketed_root(g, lo, peak, 1e-15)
}

/// Smallest Ritz value of the discrete `Δ + h` after 20 Lanczos steps.
pub fn coercivity_margin(h: &ScalarField, sp: &Spectral) -> f64 {
    let hv = h.values().to_vec();
    lanczos_min_ritz(
        |x| {
            let mut y = sp.laplacian(x);
            for k in 0..y.len() {
                y[k] += hv[k] * x[k];
            }
            y
        },
        hv.len(),
        20,
    )
}

fn initial_field(g: Geometry, c: &SystemCoefficients, guess: &InitialGuess) -> Result<ScalarField, SolverError> {
    Ok(match guess {
        InitialGuess::Field(f) => {
            g.check(f.geometry())?;
            f.clone()
        }
        InitialGuess::Constant(v) => ScalarField::constant(g, *v),
        InitialGuess::Auto => {
            let t = constant_root(g.dim(), c.h.mean(), c.f.mean(), c.b.mean()).unwrap_or(1.0);
            ScalarField::constant(g, t)
        }
    })
}

/// Newton solve of the scalar equation for fixed `W`.
pub fn solve_scalar(w: &OneFormField, c: &SystemCoefficients, opts: &SolveOptions) -> Result<ScalarField, SolverError> {
    opts.validate()?;
    let g = *c.geometry();
    torus_only(&g)?;
    g.check(w.geometry())?;
    let sp = Spectral::new(&g)?;
    let a = c.a_of(w)?;
    solve_scalar_inner(&a, c, opts, &sp, initial_field(g, c, &opts.initial_guess)?)
}

fn solve_scalar_inner(
    a: &ScalarField,
    c: &SystemCoefficients,
    opts: &SolveOptions,
    sp: &Spectral,
    mut u: ScalarField,
) -> Result<ScalarField, SolverError> {
    let g = *c.geometry();
    if a.max() <= 0.0 && c.f.max() <= 0.0 {
        let floor = ScalarField::constant(g, opts.u_floor);
        let r = scalar_residual_with(&floor, a, c, sp)?.sup_norm();
        return Err(SolverError::DegenerateData { residual_at_floor: r });
    }
    if opts.require_coercive {
        let m = coercivity_margin(&c.h, sp);
        if !(m > 1e-12) {
            return Err(SolverError::NonCoercive(m));
        }
    }
    if u.min() <= opts.u_floor {
        return Err(SolverError::PositivityLost(u.min()));
    }
    let ts = critical_exponent(g.dim());
    let mut res = scalar_residual_with(&u, a, c, sp)?;
    let mut rnorm = res.l2_norm();
    for it in 0..opts.max_newton {
        if res.sup_norm() < opts.tol_residual {
            return Ok(u);
        }
        // J δ = Δδ + cδ, c = h - (2*-1) f u^{2*-2} + (2*+1) a u^{-2*-2}
        let coef: Vec<f64> = (0..u.values().len())
            .map(|k| {
                let v = u.values()[k];
                c.h.values()[k] - (ts - 1.0) * c.f.values()[k] * v.powf(ts - 2.0)
                    + (ts + 1.0) * a.values()[k] * v.powf(-ts - 2.0)
            })
            .collect();
        let mean_c = coef.iter().sum::<f64>() / coef.len() as f64;
        let shift = if mean_c.abs() > 1e-8 { mean_c.abs() } else { 1.0 };
        let rhs: Vec<f64> = res.values().iter().map(|r| -r).collect();
        let mut delta = vec![0.0; rhs.len()];
        let rtol = (1e-3 * res.sup_norm()).clamp(1e-13, 1e-6);
        gmres(
            |x| {
                let mut y = sp.laplacian(x);
                for k in 0..y.len() {
                    y[k] += coef[k] * x[k];
                }
                y
            },
            |x| sp.shifted_laplacian_solve(x, shift),
            &rhs,
            &mut delta,
            rtol,
            60,
            600,
        );
        let mut t = 1.0;
        let mut accepted = false;
        let mut lowest = f64::INFINITY;
        for _ in 0..40 {
            let trial: Vec<f64> = u.values().iter().zip(&delta).map(|(v, d)| v + t * d).collect();
            let tmin = trial.iter().cloned().fold(f64::INFINITY, f64::min);
            lowest = lowest.min(tmin);
            if tmin > opts.u_floor {
                let cand = ScalarField::new(g, trial)?;
                let cres = scalar_residual_with(&cand, a, c, sp)?;
                let cn = cres.l2_norm();
                if cn.is_finite() && (cn < (1.0 - 1e-4 * t) * rnorm || cres.sup_norm() < opts.tol_residual) {
                    u = cand;
                    res = cres;
                    rnorm = cn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            if lowest <= opts.u_floor {
                return Err(SolverError::PositivityLost(lowest));
            }
            return Err(SolverError::NewtonDiverged { iterations: it + 1, residual: res.sup_norm() });
        }
    }
    if res.sup_norm() < opts.tol_residual {
        return Ok(u);
    }
    Err(SolverError::NewtonDiverged { iterations: opts.max_newton, residual: res.sup_norm() })
}

/// Alternates the momentum and scalar solves with damped `u` updates.
pub fn solve_system(c: &SystemCoefficients, opts: &SolveOptions) -> Result<Solution, SolverError> {
    opts.validate()?;
    let g = *c.geometry();
    torus_only(&g)?;
    let sp = Spectral::new(&g)?;
    let mut u = initial_field(g, c, &opts.initial_guess)?;
    let mut best = f64::INFINITY;
    for outer in 0..=opts.max_outer {
        let (w, kernel_defect) = solve_momentum(&u, c)?;
        let (sres, mres) = system_residuals(&u, &w, c)?;
        let worst = sres.max(mres);
        if worst < opts.tol_residual || outer == opts.max_outer {
            return Ok(Solution {
                u,
                w,
                scalar_residual: sres,
                momentum_residual: mres,
                kernel_defect,
                iterations: outer,
                converged: worst < opts.tol_residual,
            });
        }
        if !worst.is_finite() || worst > 1e8 * best.max(1.0) {
            return Err(SolverError::OuterDiverged { iterations: outer, residual: worst });
        }
        best = best.min(worst);
        let a = c.a_of(&w)?;
        let mut inner = opts.clone();
        inner.initial_guess = InitialGuess::Field(u.clone());
        // coercivity only depends on h
        inner.require_coercive = opts.require_coercive && outer == 0;
        let u_new = solve_scalar_inner(&a, c, &inner, &sp, u.clone())?;
        let d = opts.damping;
        u = u.zip_map(&u_new, |old, new| old + d * (new - old))?;
    }
    unreachable!("loop returns on the last iteration")
}

/// Coefficients for which `(u*, W*)` solves the discrete system exactly.
pub fn manufactured_forcing(
    u_star: &ScalarField,
    w_star: &OneFormField,
    c: &SystemCoefficients,
    u_floor: f64,
) -> Result<SystemCoefficients, SolverError> {
    let g = *c.geometry();
    torus_only(&g)?;
    g.check(u_star.geometry())?;
    g.check(w_star.geometry())?;
    if u_star.min() < u_floor {
        return Err(SolverError::BelowFloor(u_star.min()));
    }
    let ts = critical_exponent(g.dim());
    let sp = Spectral::new(&g)?;
    let lap = sp.laplacian(u_star.values());
    let a = c.a_of(w_star)?;
    let h: Vec<f64> = (0..lap.len())
        .map(|k| {
            let v = u_star.values()[k];
            (c.f.values()[k] * v.powf(ts - 1.0) + a.values()[k] * v.powf(-ts - 1.0) - lap[k]) / v
        })
        .collect();
    let up = u_star.map(|v| v.powf(ts));
    let y = lame(w_star, &g)?.sub(&c.x.mul_scalar(&up)?)?;
    let mut out = c.clone();
    out.h = ScalarField::new(g, h)?;
    out.y = y;
    Ok(out)
}
