//! Explicit blow-up family on the round 3-sphere: an exploding conformal
//! factor paired with bounded coupling data, verified by residuals.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::geometry::{conformal_killing_deriv, lame, laplace_beltrami};
use crate::geometry::{Geometry, GeometryError, OneFormField, ScalarField, SymTensorField};

#[derive(Debug, Error, PartialEq)]
pub enum InstabilityError {
    #[error("lambda must exceed 1, got {0}")]
    Lambda(f64),
    #[error("radius {0} outside [0, π]")]
    Radius(f64),
    #[error("cutoff parameters rejected: {0}")]
    Cutoff(&'static str),
    #[error("grid node {0} too close to a pole for the ODE integration")]
    StepUnderflow(f64),
    #[error("ODE solution lost finiteness at r = {0}")]
    NonFinite(f64),
    #[error("the construction needs a radial 3-sphere grid")]
    Grid,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `(λ² - 1)^{(n-2)/4} (λ - cos r)^{1-n/2}`, `r` the distance to the pole.
pub fn phi_bubble_sphere(n: usize, lambda: f64, r_dist: f64) -> Result<f64, InstabilityError> {
    if !(lambda > 1.0) {
        return Err(InstabilityError::Lambda(lambda));
    }
    if !(0.0..=PI).contains(&r_dist) {
        return Err(InstabilityError::Radius(r_dist));
    }
    let nf = n as f64;
    Ok((lambda * lambda - 1.0).powf((nf - 2.0) / 4.0) * (lambda - r_dist.cos()).powf(1.0 - nf / 2.0))
}

/// Pole value `(λ + 1)^{(n-2)/4} (λ - 1)^{-(n-2)/4}`, the maximum over the sphere.
pub fn phi_sup(n: usize, lambda: f64) -> Result<f64, InstabilityError> {
    phi_bubble_sphere(n, lambda, 0.0)
}

/// Smooth step `S(t)`: 0 for `t ≤ 0`, 1 for `t ≥ 1`, with `S'` and `S''`.
fn smooth_step(t: f64) -> [f64; 3] {
    if t <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    // S = 1/(1 + e^g), g = 1/t - 1/(1-t)
    let g = 1.0 / t - 1.0 / (1.0 - t);
    let dg = -1.0 / (t * t) - 1.0 / ((1.0 - t) * (1.0 - t));
    let ddg = 2.0 / (t * t * t) - 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t));
    let s = if g > 0.0 {
        let e = (-g).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + g.exp())
    };
    let q = s * (1.0 - s);
    let ds = -q * dg;
    let dds = -ds * (1.0 - 2.0 * s) * dg - q * ddg;
    [s, ds, dds]
}

/// Cutoff `η(r) = S((r - δ)/w) S((π - δ - r)/w)`, zero on `[0, δ] ∪ [π - δ, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub delta: f64,
    pub width: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff { delta: 1.0, width: FRAC_PI_2 - 1.0 }
    }
}

impl Cutoff {
    pub fn new(delta: f64, width: f64) -> Result<Self, InstabilityError> {
        if !(delta > 0.0) {
            return Err(InstabilityError::Cutoff("delta must be positive"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(InstabilityError::Cutoff("width must be positive"));
        }
        if delta >= FRAC_PI_2 {
            return Err(InstabilityError::Cutoff("support is empty: eta vanishes identically"));
        }
        Ok(Cutoff { delta, width })
    }

    /// `[η, η', η'']` at `r`.
    pub fn eval(&self, r: f64) -> [f64; 3] {
        let [a, da, dda] = smooth_step((r - self.delta) / self.width);
        let [b, db, ddb] = smooth_step((PI - self.delta - r) / self.width);
        let w = self.width;
        [a * b, (da * b - a * db) / w, (dda * b - 2.0 * da * db + a * ddb) / (w * w)]
    }
}

/// Samples of a radial function and its derivative on grid radii.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub value: Vec<f64>,
    pub deriv: Vec<f64>,
}

fn rk4_step(f: &dyn Fn(f64, [f64; 2]) -> [f64; 2], r: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let add = |y: [f64; 2], k: [f64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
    let k1 = f(r, y);
    let k2 = f(r + h / 2.0, add(y, k1, h / 2.0));
    let k3 = f(r + h / 2.0, add(y, k2, h / 2.0));
    let k4 = f(r + h, add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Solves `Z'' + 2 cot r Z' + (1 - 2cot² r) Z = -source(r)` with
/// `Z(π/2) = 1`, `Z'(π/2) = 0`, integrating outward from `π/2` with RK4 and
/// `substeps` steps per grid interval. `radii` must be increasing.
pub fn solve_z_with(
    source: &dyn Fn(f64) -> f64,
    radii: &[f64],
    substeps: usize,
) -> Result<RadialProfile, InstabilityError> {
    let floor = 1e-6;
    for &r in radii {
        if !(r >= floor && r <= PI - floor) {
            return Err(InstabilityError::StepUnderflow(r));
        }
    }
    let rhs = |r: f64, y: [f64; 2]| {
        let c = r.cos() / r.sin();
        [y[1], -source(r) - 2.0 * c * y[1] - (1.0 - 2.0 * c * c) * y[0]]
    };
    let m = radii.len();
    let mut value = vec![0.0; m];
    let mut deriv = vec![0.0; m];
    let split = radii.partition_point(|&r| r < FRAC_PI_2);
    let sub = substeps.max(1);
    let mut sweep = |order: &mut dyn Iterator<Item = usize>| -> Result<(), InstabilityError> {
        let (mut r, mut y) = (FRAC_PI_2, [1.0, 0.0]);
        for j in order {
            let target = radii[j];
            let h = (target - r) / sub as f64;
            for _ in 0..sub {
                y = rk4_step(&rhs, r, y, h);
                r += h;
            }
            r = target;
            if !(y[0].is_finite() && y[1].is_finite()) {
                return Err(InstabilityError::NonFinite(target));
            }
            value[j] = y[0];
            deriv[j] = y[1];
        }
        Ok(())
    };
    sweep(&mut (split..m))?;
    sweep(&mut (0..split).rev())?;
    Ok(RadialProfile { r: radii.to_vec(), value, deriv })
}

fn check_grid(geom: &Geometry) -> Result<Vec<f64>, InstabilityError> {
    if geom.dim() != 3 || geom.is_torus() {
        return Err(InstabilityError::Grid);
    }
    Ok(geom.radii()?)
}

/// `Z_λ`: source `(3/4) φ_λ⁶` on the grid radii.
pub fn solve_z(lambda: f64, geom: &Geometry, substeps: usize) -> Result<RadialProfile, InstabilityError> {
    if !(lambda > 1.0) {
        return Err(InstabilityError::Lambda(lambda));
    }
    let radii = check_grid(geom)?;
    let src = |r: f64| 0.75 * phi_bubble_sphere(3, lambda, r).map(|p| p.powi(6)).unwrap_or(f64::NAN);
    solve_z_with(&src, &radii, substeps)
}

#[derive(Debug, Clone)]
pub struct InstabilityAssembly {
    pub lambda: f64,
    pub eta: Cutoff,
    pub phi: ScalarField,
    pub z: RadialProfile,
    /// `W = η Z ∂_r`
    pub w: OneFormField,
    /// `U = -L_h W`
    pub u: SymTensorField,
    /// `X_0 = η ∂_r`
    pub x0: OneFormField,
    pub y: OneFormField,
}

pub fn assemble(
    lambda: f64,
    geom: &Geometry,
    eta: Cutoff,
    substeps: usize,
) -> Result<InstabilityAssembly, InstabilityError> {
    let eta = Cutoff::new(eta.delta, eta.width)?;
    let radii = check_grid(geom)?;
    let z = solve_z(lambda, geom, substeps)?;
    let phi = ScalarField::new(
        *geom,
        radii.iter().map(|&r| phi_bubble_sphere(3, lambda, r)).collect::<Result<_, _>>()?,
    )?;
    let e: Vec<[f64; 3]> = radii.iter().map(|&r| eta.eval(r)).collect();
    let w = OneFormField::radial(*geom, (0..radii.len()).map(|j| e[j][0] * z.value[j]).collect())?;
    let x0 = OneFormField::radial(*geom, e.iter().map(|v| v[0]).collect())?;
    let y = OneFormField::radial(
        *geom,
        (0..radii.len())
            .map(|j| {
                let [_, de, dde] = e[j];
                let c = radii[j].cos() / radii[j].sin();
                -4.0 / 3.0 * (2.0 * de * z.deriv[j] + dde * z.value[j] + 2.0 * c * de * z.value[j])
            })
            .collect(),
    )?;
    let u = conformal_killing_deriv(&w, geom)?.scale(-1.0);
    Ok(InstabilityAssembly { lambda, eta, phi, z, w, u, x0, y })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub lambda: f64,
    /// `‖Δφ + 3/4 φ - 3/4 φ⁵ - |U + L W|²/φ⁷‖_∞`, relative to the largest term.
    pub scalar_residual: f64,
    /// `‖Δ⃗W - φ⁶X_0 - Y‖_∞`, relative to the largest term.
    pub vector_residual: f64,
    /// Maximum of `φ` over the grid and the pole.
    pub sup_phi: f64,
    pub sup_u: f64,
    pub sup_y: f64,
}

pub fn verify(a: &InstabilityAssembly) -> Result<Verification, InstabilityError> {
    let g = *a.phi.geometry();
    let lap = laplace_beltrami(&a.phi, &g)?;
    let sum = a.u.add(&conformal_killing_deriv(&a.w, &g)?)?.norm_sq();
    let p = a.phi.values();
    let mut res = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..p.len() {
        let terms = [lap.values()[j], 0.75 * p[j], 0.75 * p[j].powi(5), sum.values()[j] / p[j].powi(7)];
        res = res.max((terms[0] + terms[1] - terms[2] - terms[3]).abs());
        scale = terms.iter().fold(scale, |s, t| s.max(t.abs()));
    }
    let scalar_residual = res / scale;

    let lw = lame(&a.w, &g)?;
    let (lw, x0, y) = (lw.comp(0), a.x0.comp(0), a.y.comp(0));
    let mut res = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..p.len() {
        let src = p[j].powi(6) * x0[j];
        res = res.max((lw[j] - src - y[j]).abs());
        scale = scale.max(lw[j].abs()).max(src.abs()).max(y[j].abs());
    }
    let vector_residual = if scale == 0.0 { 0.0 } else { res / scale };

    let sup_phi = a.phi.max().max(phi_sup(3, a.lambda)?);
    Ok(Verification {
        lambda: a.lambda,
        scalar_residual,
        vector_residual,
        sup_phi,
        sup_u: a.u.sup_norm(),
        sup_y: a.y.sup_norm(),
    })
}

/// Default sweep values of `λ`.
pub const DEFAULT_LAMBDAS: [f64; 5] = [1.5, 1.25, 1.1, 1.05, 1.01];

/// Assembles and verifies each `λ` on a common grid.
pub fn sweep(
    lambdas: &[f64],
    geom: &Geometry,
    eta: Cutoff,
    substeps: usize,
) -> Result<Vec<Verification>, InstabilityError> {
    lambdas.iter().map(|&l| verify(&assemble(l, geom, eta, substeps)?)).collect()
}
