//! Physics data, system coefficients, initial data reconstruction and the
//! original constraint residuals.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::critical_exponent;
use crate::geometry::{
    conformal_killing_deriv, divergence_sym, gradient, laplace_beltrami, Geometry, GeometryError,
    OneFormField, ScalarField, SymTensorField,
};

#[derive(Debug, Error, PartialEq)]
pub enum ConformalError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("conformal factor must be positive (min {0})")]
    NonPositive(f64),
    #[error("coefficient b must be nonnegative (min {0})")]
    NegativeB(f64),
    #[error("quadratic weight must be positive")]
    Gamma,
    #[error("unsupported geometry: {0}")]
    Unsupported(&'static str),
}

/// Potential evaluator `s ↦ (V(s), V'(s), V''(s))`.
#[derive(Clone)]
pub struct Potential(Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>);

impl Potential {
    pub fn new(f: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        Potential(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| [c, 0.0, 0.0])
    }

    /// `Σ c_k s^k`.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::new(move |s| {
            let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
            // Horner with derivatives
            for c in coeffs.iter().rev() {
                d2 = d2 * s + 2.0 * d1;
                d1 = d1 * s + v;
                v = v * s + c;
            }
            [v, d1, d2]
        })
    }

    pub fn eval(&self, s: f64) -> [f64; 3] {
        (self.0)(s)
    }

    pub fn value(&self, s: f64) -> f64 {
        self.eval(s)[0]
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential(V(0) = {})", self.value(0.0))
    }
}

/// Physics data `(ψ, π, τ, σ)` and potential `V`.
#[derive(Debug, Clone)]
pub struct PhysicsData {
    pub psi: ScalarField,
    pub pi: ScalarField,
    pub tau: ScalarField,
    pub sigma: SymTensorField,
    pub potential: Potential,
}

impl PhysicsData {
    pub fn new(
        psi: ScalarField,
        pi: ScalarField,
        tau: ScalarField,
        sigma: SymTensorField,
        potential: Potential,
    ) -> Result<Self, ConformalError> {
        let g = *psi.geometry();
        g.check(pi.geometry())?;
        g.check(tau.geometry())?;
        g.check(sigma.geometry())?;
        Ok(PhysicsData { psi, pi, tau, sigma, potential })
    }

    pub fn geometry(&self) -> &Geometry {
        self.psi.geometry()
    }

    /// Measured `(sup |tr σ|, ‖div σ‖_{L²})`. Nonzero values are tolerated; the
    /// general system only needs a symmetric tensor.
    pub fn sigma_defects(&self) -> Result<(f64, f64), ConformalError> {
        let g = *self.geometry();
        let tr = self.sigma.trace().sup_norm();
        let div = if g.is_torus() { divergence_sym(&self.sigma, &g)?.l2_norm() } else { 0.0 };
        Ok((tr, div))
    }
}

/// Coefficients of the normalised system
/// `Δu + hu = f u^{2*-1} + (b + γ|U + L W|²) u^{-2*-1}`, `Δ⃗W = u^{2*} X + Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemCoefficients {
    pub h: ScalarField,
    pub f: ScalarField,
    pub b: ScalarField,
    pub u_tensor: SymTensorField,
    pub x: OneFormField,
    pub y: OneFormField,
    pub gamma: f64,
}

impl SystemCoefficients {
    pub fn new(
        h: ScalarField,
        f: ScalarField,
        b: ScalarField,
        u_tensor: SymTensorField,
        x: OneFormField,
        y: OneFormField,
        gamma: f64,
    ) -> Result<Self, ConformalError> {
        let g = *h.geometry();
        for other in [f.geometry(), b.geometry(), u_tensor.geometry(), x.geometry(), y.geometry()] {
            g.check(other)?;
        }
        if b.min() < 0.0 {
            return Err(ConformalError::NegativeB(b.min()));
        }
        if !(gamma > 0.0) {
            return Err(ConformalError::Gamma);
        }
        Ok(SystemCoefficients { h, f, b, u_tensor, x, y, gamma })
    }

    /// Constant scalar coefficients with `U = X = Y = 0`.
    pub fn constant(g: Geometry, h: f64, f: f64, b: f64, gamma: f64) -> Result<Self, ConformalError> {
        Self::new(
            ScalarField::constant(g, h),
            ScalarField::constant(g, f),
            ScalarField::constant(g, b),
            SymTensorField::zeros(g),
            OneFormField::zeros(g),
            OneFormField::zeros(g),
            gamma,
        )
    }

    pub fn geometry(&self) -> &Geometry {
        self.h.geometry()
    }

    /// `a(W) = b + γ|U + L_g W|²`.
    pub fn a_of(&self, w: &OneFormField) -> Result<ScalarField, ConformalError> {
        let g = *self.geometry();
        let lw = conformal_killing_deriv(w, &g)?;
        let t = self.u_tensor.add(&lw)?;
        let gamma = self.gamma;
        Ok(self.b.zip_map(&t.norm_sq(), |b, s| b + gamma * s)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Focusing,
    Defocusing,
    Mixed,
}

/// `(R_ψ, B)` with `R_ψ = R(g) - |∇ψ|²` and `B = 2V(ψ) - ((n-1)/n) τ²`.
pub fn coefficients(d: &PhysicsData) -> Result<(ScalarField, ScalarField), ConformalError> {
    let g = *d.geometry();
    let n = g.dim() as f64;
    let grad = gradient(&d.psi, &g)?;
    let r = g.scalar_curvature();
    let r_psi = grad.pointwise_norm().map(|s| r - s * s);
    let v = d.psi.map(|s| 2.0 * d.potential.value(s));
    let bb = v.zip_map(&d.tau, |v, t| v - (n - 1.0) / n * t * t)?;
    Ok((r_psi, bb))
}

pub fn classify(b: &ScalarField) -> Regime {
    if b.min() > 0.0 {
        Regime::Focusing
    } else if b.max() <= 0.0 {
        Regime::Defocusing
    } else {
        Regime::Mixed
    }
}

/// Divides the Hamiltonian equation through by `4(n-1)/(n-2)`.
pub fn normalize(d: &PhysicsData) -> Result<SystemCoefficients, ConformalError> {
    let g = *d.geometry();
    let n = g.dim() as f64;
    let c = (n - 2.0) / (4.0 * (n - 1.0));
    let (r_psi, bb) = coefficients(d)?;
    let x = gradient(&d.tau, &g)?.scale(-(n - 1.0) / n);
    let y = gradient(&d.psi, &g)?.mul_scalar(&d.pi.map(|p| -p))?;
    SystemCoefficients::new(
        r_psi.map(|v| c * v),
        bb.map(|v| c * v),
        d.pi.map(|p| c * p * p),
        d.sigma.clone(),
        x,
        y,
        c,
    )
}

/// Initial data set; the metric is `g̃ = metric_factor · g`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataSet {
    pub metric_factor: ScalarField,
    pub k: SymTensorField,
    pub psi: ScalarField,
    pub pi: ScalarField,
}

impl InitialDataSet {
    /// Conformal factor `φ` with `g̃ = φ^{4/(n-2)} g`.
    pub fn phi(&self) -> ScalarField {
        let n = self.metric_factor.geometry().dim() as f64;
        self.metric_factor.map(|m| m.powf((n - 2.0) / 4.0))
    }
}

pub fn reconstruct(
    u: &ScalarField,
    w: &OneFormField,
    d: &PhysicsData,
) -> Result<InitialDataSet, ConformalError> {
    let g = *d.geometry();
    g.check(u.geometry())?;
    g.check(w.geometry())?;
    if u.min() <= 0.0 {
        return Err(ConformalError::NonPositive(u.min()));
    }
    let n = g.dim();
    let q = 4.0 / (n as f64 - 2.0);
    let two_star = critical_exponent(n);
    let factor = u.map(|p| p.powf(q));
    let lw = conformal_killing_deriv(w, &g)?;
    let mut k = d.sigma.add(&lw)?.mul_scalar(&u.map(|p| p.powi(-2)))?;
    let trace_part = factor.zip_map(&d.tau, |m, t| t / n as f64 * m)?;
    for i in 0..n {
        let kk = k.get_mut(i, i);
        for (v, t) in kk.iter_mut().zip(trace_part.values()) {
            *v += t;
        }
    }
    let pi = d.pi.zip_map(u, |p, phi| p * phi.powf(-two_star))?;
    Ok(InitialDataSet { metric_factor: factor, k, psi: d.psi.clone(), pi })
}

/// Pointwise defects of both constraint equations, on the torus.
pub fn constraint_defects(
    ids: &InitialDataSet,
    v: &Potential,
) -> Result<(ScalarField, OneFormField), ConformalError> {
    let g = *ids.metric_factor.geometry();
    if !g.is_torus() {
        return Err(ConformalError::Unsupported("constraint residuals are evaluated on the torus"));
    }
    if ids.metric_factor.min() <= 0.0 {
        return Err(ConformalError::NonPositive(ids.metric_factor.min()));
    }
    let n = g.dim();
    let nf = n as f64;
    let two_star = critical_exponent(n);
    let phi = ids.phi();
    let m = g.node_count();
    let inv = ids.metric_factor.map(|a| 1.0 / a);

    // R(g̃) = φ^{1-2*} (4(n-1)/(n-2) Δφ + R(g) φ)
    let lap = laplace_beltrami(&phi, &g)?;
    let r_g = g.scalar_curvature();
    let r_tilde: Vec<f64> = (0..m)
        .map(|k| {
            let p = phi.values()[k];
            p.powf(1.0 - two_star) * (4.0 * (nf - 1.0) / (nf - 2.0) * lap.values()[k] + r_g * p)
        })
        .collect();

    let tr_k: Vec<f64> = (0..m).map(|k| inv.values()[k] * (0..n).map(|i| ids.k.get(i, i)[k]).sum::<f64>()).collect();
    let k_sq = ids.k.norm_sq();
    let dpsi = gradient(&ids.psi, &g)?.pointwise_norm();
    let ham: Vec<f64> = (0..m)
        .map(|k| {
            let a = inv.values()[k];
            let lhs = r_tilde[k] + tr_k[k] * tr_k[k] - a * a * k_sq.values()[k];
            let s = ids.psi.values()[k];
            let rhs = ids.pi.values()[k].powi(2) + a * dpsi.values()[k].powi(2) + 2.0 * v.value(s);
            lhs - rhs
        })
        .collect();

    // div_g̃ K = e^{-2w}[div_g K + (n-2) K(∇w) - tr_g K ∇w], e^{2w} = metric factor
    let div = divergence_sym(&ids.k, &g)?;
    let ln_factor = ScalarField::new(g, ids.metric_factor.values().iter().map(|a| 0.5 * a.ln()).collect())?;
    let dw = gradient(&ln_factor, &g)?;
    let dtr = gradient(&ScalarField::new(g, tr_k)?, &g)?;
    let dpsi_v = gradient(&ids.psi, &g)?;
    let mut mom = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..m {
            let mut kw = 0.0;
            let mut trg = 0.0;
            for j in 0..n {
                kw += ids.k.get(i, j)[k] * dw.comp(j)[k];
                trg += ids.k.get(j, j)[k];
            }
            let divt = inv.values()[k] * (div.comp(i)[k] + (nf - 2.0) * kw - trg * dw.comp(i)[k]);
            mom[i][k] = divt - dtr.comp(i)[k] - ids.pi.values()[k] * dpsi_v.comp(i)[k];
        }
    }
    Ok((ScalarField::new(g, ham)?, OneFormField::new(g, mom)?))
}

/// `(‖Hamiltonian defect‖_{L²}, ‖momentum defect‖_{L²})`.
pub fn constraint_residuals(ids: &InitialDataSet, v: &Potential) -> Result<(f64, f64), ConformalError> {
    let (h, m) = constraint_defects(ids, v)?;
    Ok((h.l2_norm(), m.l2_norm()))
}
