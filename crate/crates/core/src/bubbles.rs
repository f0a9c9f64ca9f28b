//! Blow-up profiles of the critical equation and the integral 1-forms built
//! from them, with leading-order asymptotics and quadrature oracles.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::green::{stress_apply, GreenError};
use crate::quadrature::{align_to, gauss_legendre_on, polar_sphere_rule};
use crate::sphere_area;

#[derive(Debug, Error, PartialEq)]
pub enum BubbleError {
    #[error("dimension must be at least 3, got {0}")]
    Dimension(usize),
    #[error("invalid bubble parameter: {0}")]
    Parameter(&'static str),
    #[error("point has {got} coordinates, expected {expected}")]
    PointLength { expected: usize, got: usize },
    #[error("direction {0} is not a unit vector")]
    NotUnit(usize),
    #[error("evaluation point coincides with the bubble centre")]
    AtCentre,
    #[error("axis index {0} out of range")]
    Axis(usize),
    #[error("evaluation point lies beyond half the truncation radius")]
    Truncation,
    #[error("tail bound {bound:e} exceeds tolerance {tol:e}")]
    TailBudget { bound: f64, tol: f64 },
    #[error(transparent)]
    Green(#[from] GreenError),
}

/// Bubble `μ^{(n-2)/2} (μ² + f|x - c|²/(n(n-2)))^{1-n/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleParams {
    pub n: usize,
    pub mu: f64,
    pub f_center: f64,
    pub center: Vec<f64>,
}

impl BubbleParams {
    pub fn new(n: usize, mu: f64, f_center: f64, center: Vec<f64>) -> Result<Self, BubbleError> {
        if n < 3 {
            return Err(BubbleError::Dimension(n));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(BubbleError::Parameter("mu must be positive"));
        }
        if !(f_center > 0.0 && f_center.is_finite()) {
            return Err(BubbleError::Parameter("f_center must be positive"));
        }
        if center.len() != n {
            return Err(BubbleError::PointLength { expected: n, got: center.len() });
        }
        Ok(BubbleParams { n, mu, f_center, center })
    }

    pub fn centred(n: usize, mu: f64, f_center: f64) -> Result<Self, BubbleError> {
        Self::new(n, mu, f_center, vec![0.0; n])
    }

    fn c(&self) -> f64 {
        self.f_center / (self.n as f64 * (self.n as f64 - 2.0))
    }

    fn rel(&self, x: &[f64]) -> Result<Vec<f64>, BubbleError> {
        if x.len() != self.n {
            return Err(BubbleError::PointLength { expected: self.n, got: x.len() });
        }
        Ok(x.iter().zip(&self.center).map(|(a, b)| a - b).collect())
    }

    /// `D = μ² + c|x - x_0|²`
    fn d_of(&self, y: &[f64]) -> f64 {
        self.mu * self.mu + self.c() * y.iter().map(|t| t * t).sum::<f64>()
    }
}

/// Direction data of the 1-forms: `ε ζ_0` and `β_k ζ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionData {
    pub eps: f64,
    pub beta_k: Vec<f64>,
    pub zeta0: Vec<f64>,
    pub zeta_k: Vec<Vec<f64>>,
}

impl DirectionData {
    pub fn new(eps: f64, beta_k: Vec<f64>, zeta0: Vec<f64>, zeta_k: Vec<Vec<f64>>) -> Result<Self, BubbleError> {
        let n = zeta0.len();
        if beta_k.len() != n || zeta_k.len() != n || zeta_k.iter().any(|z| z.len() != n) {
            return Err(BubbleError::PointLength { expected: n, got: beta_k.len().min(zeta_k.len()) });
        }
        let unit = |v: &[f64]| (v.iter().map(|t| t * t).sum::<f64>().sqrt() - 1.0).abs() < 1e-10;
        if !unit(&zeta0) {
            return Err(BubbleError::NotUnit(0));
        }
        for (k, z) in zeta_k.iter().enumerate() {
            if !unit(z) {
                return Err(BubbleError::NotUnit(k + 1));
            }
        }
        Ok(DirectionData { eps, beta_k, zeta0, zeta_k })
    }
}

pub fn bubble(p: &BubbleParams, x: &[f64]) -> Result<f64, BubbleError> {
    let y = p.rel(x)?;
    let n = p.n as f64;
    Ok(p.mu.powf((n - 2.0) / 2.0) * p.d_of(&y).powf(1.0 - n / 2.0))
}

/// Gradient of the bubble.
pub fn bubble_gradient(p: &BubbleParams, x: &[f64]) -> Result<Vec<f64>, BubbleError> {
    let y = p.rel(x)?;
    let n = p.n as f64;
    let s = p.mu.powf((n - 2.0) / 2.0) * (2.0 - n) * p.c() * p.d_of(&y).powf(-n / 2.0);
    Ok(y.iter().map(|t| s * t).collect())
}

/// Hessian of the bubble.
pub fn bubble_hessian(p: &BubbleParams, x: &[f64]) -> Result<DMatrix<f64>, BubbleError> {
    let y = p.rel(x)?;
    let n = p.n as f64;
    let c = p.c();
    let d = p.d_of(&y);
    let m = p.mu.powf((n - 2.0) / 2.0) * (2.0 - n) * c;
    // ∂_j (m D^{-n/2} y_i) = m D^{-n/2} δ_ij - m n c D^{-n/2-1} y_i y_j
    let a = m * d.powf(-n / 2.0);
    let b = -m * n * c * d.powf(-n / 2.0 - 1.0);
    Ok(DMatrix::from_fn(p.n, p.n, |i, j| if i == j { a } else { 0.0 } + b * y[i] * y[j]))
}

/// `Δ_ξ B = -tr ∇²B` from the closed-form Hessian.
pub fn bubble_laplacian(p: &BubbleParams, x: &[f64]) -> Result<f64, BubbleError> {
    Ok(-bubble_hessian(p, x)?.trace())
}

/// Relative residual `|Δ_ξ B - f B^{2*-1}| / (f B^{2*-1})`.
pub fn bubble_pde_residual(p: &BubbleParams, x: &[f64]) -> Result<f64, BubbleError> {
    let b = bubble(p, x)?;
    let rhs = p.f_center * b.powf(crate::critical_exponent(p.n) - 1.0);
    Ok((bubble_laplacian(p, x)? - rhs).abs() / rhs)
}

/// Profile `(1 + f_0|x|²/(n(n-2)))^{1-n/2}`, the bubble with `μ = 1`.
pub fn standard_profile(n: usize, f0: f64, x: &[f64]) -> Result<f64, BubbleError> {
    bubble(&BubbleParams::centred(n, 1.0, f0)?, x)
}

/// `θ(z) = (μ² + |z|²)^{1/2}`.
pub fn theta(mu: f64, z: &[f64]) -> f64 {
    (mu * mu + z.iter().map(|t| t * t).sum::<f64>()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupConstants {
    pub c1: f64,
    pub c2: f64,
    pub kn_inv_n: f64,
    pub cn: f64,
}

pub fn blowup_constants(n: usize) -> Result<BlowupConstants, BubbleError> {
    if n < 3 {
        return Err(BubbleError::Dimension(n));
    }
    let nf = n as f64;
    let on = sphere_area(n);
    let on1 = sphere_area(n - 1);
    let c1 = nf.powf((nf + 2.0) / 2.0) * (nf - 2.0).powf(nf / 2.0) * on
        / (2f64.powi(n as i32 + 1) * (nf - 1.0) * on1);
    Ok(BlowupConstants {
        c1,
        c2: nf * c1,
        kn_inv_n: 2f64.powi(-(n as i32)) * (nf * (nf - 2.0)).powf(nf / 2.0) * on,
        cn: (nf - 2.0) * (nf - 4.0) / (8.0 * (nf - 1.0)),
    })
}

/// `∫_{R^n} (1 + |x|²/(n(n-2)))^{2-n} dx` by Gauss-Legendre after `r = √a tan θ`
/// (finite for `n ≥ 5`).
pub fn profile_integral(n: usize, order: usize) -> Result<f64, BubbleError> {
    if n < 5 {
        return Err(BubbleError::Dimension(n));
    }
    let a = n as f64 * (n as f64 - 2.0);
    let s: f64 = gauss_legendre_on(order, 0.0, std::f64::consts::FRAC_PI_2)
        .iter()
        .map(|(t, w)| w * t.sin().powi(n as i32 - 1) * t.cos().powi(n as i32 - 5))
        .sum();
    Ok(sphere_area(n - 1) * a.powf(n as f64 / 2.0) * s)
}

/// `C(n)` through the integral form `(n-2)/2 · K_n^{-n} / ∫(1 + |x|²/(n(n-2)))^{2-n}`.
pub fn cn_from_integral(n: usize, order: usize) -> Result<f64, BubbleError> {
    let k = blowup_constants(n)?.kn_inv_n;
    Ok((n as f64 - 2.0) / 2.0 * k / profile_integral(n, order)?)
}

/// Unit vector and norm of `z - centre`.
fn direction(p: &BubbleParams, z: &[f64]) -> Result<(Vec<f64>, f64), BubbleError> {
    let y = p.rel(z)?;
    let r = y.iter().map(|t| t * t).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(BubbleError::AtCentre);
    }
    Ok((y.iter().map(|t| t / r).collect(), r))
}

fn check_dirs(d: &DirectionData, p: &BubbleParams) -> Result<(), BubbleError> {
    if d.zeta0.len() != p.n {
        return Err(BubbleError::PointLength { expected: p.n, got: d.zeta0.len() });
    }
    Ok(())
}

/// Leading-order `L_ξ V(z)`.
pub fn asympt_lv(d: &DirectionData, p: &BubbleParams, z: &[f64]) -> Result<DMatrix<f64>, BubbleError> {
    check_dirs(d, p)?;
    let (zc, r) = direction(p, z)?;
    let n = p.n;
    let nf = n as f64;
    let zeta = &d.zeta0;
    let s: f64 = zeta.iter().zip(&zc).map(|(a, b)| a * b).sum();
    let pref = d.eps * blowup_constants(n)?.c1 * p.f_center.powf(-nf / 2.0) * r.powf(1.0 - nf);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let dl = if i == j { s } else { 0.0 };
        pref * (dl - zeta[i] * zc[j] - zeta[j] * zc[i] - (nf - 2.0) * s * zc[i] * zc[j])
    }))
}

/// Leading-order `L_ξ P_k(z)`.
pub fn asympt_lp(d: &DirectionData, p: &BubbleParams, z: &[f64], k: usize) -> Result<DMatrix<f64>, BubbleError> {
    check_dirs(d, p)?;
    let n = p.n;
    if k >= n {
        return Err(BubbleError::Axis(k));
    }
    let (zc, r) = direction(p, z)?;
    let nf = n as f64;
    let zeta = &d.zeta_k[k];
    let s: f64 = zeta.iter().zip(&zc).map(|(a, b)| a * b).sum();
    let pref = d.beta_k[k] * p.mu * p.mu * r.powf(-nf) * blowup_constants(n)?.c2
        * p.f_center.powf(-(nf + 2.0) / 2.0);
    let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let q = -zeta[i] * (nf * zc[j] * zc[k] - dl(j, k)) - zeta[j] * (nf * zc[i] * zc[k] - dl(i, k))
            + s * (nf * dl(i, j) * zc[k] + (nf - 2.0) * (dl(i, k) * zc[j] + dl(j, k) * zc[i])
                - (nf + 2.0) * (nf - 2.0) * zc[i] * zc[j] * zc[k])
            + zeta[k] * ((nf - 2.0) * zc[i] * zc[j] - dl(i, j));
        pref * q
    }))
}

/// Quadrature controls for [`quad_lv`] and [`quad_lp`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadSpec {
    /// Truncation radius in units of `μ`.
    pub truncation: f64,
    /// Gauss-Legendre points per radial panel.
    pub radial_order: usize,
    /// Polar-angle panels about the axis through the centre and `z`.
    pub angular_panels: usize,
    /// Gauss-Legendre points per polar panel.
    pub angular_order: usize,
    /// Order of the product rule on the orthogonal sphere.
    pub azimuthal_order: usize,
    /// Ratio of consecutive geometric radial panels.
    pub panel_ratio: f64,
    /// Largest accepted tail bound relative to the result.
    pub tail_tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            truncation: 1000.0,
            radial_order: 12,
            angular_panels: 16,
            angular_order: 8,
            azimuthal_order: 6,
            panel_ratio: 1.3,
            tail_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadResult {
    pub value: DMatrix<f64>,
    /// Bound on the Frobenius norm of the discarded far field.
    pub tail_bound: f64,
}

/// C^∞ cutoff: 1 on `[0, ρ/2]`, 0 beyond `ρ`.
fn cutoff(t: f64, rho: f64) -> f64 {
    let s = (t - 0.5 * rho) / (0.5 * rho);
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    b / (a + b)
}

fn panels(breaks: &mut Vec<f64>, order: usize) -> Vec<(f64, f64)> {
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * b.abs().max(1e-300));
    breaks.windows(2).flat_map(|w| gauss_legendre_on(order, w[0], w[1])).collect()
}

/// `∫ w(y) L_x[G(x - y) v]|_{x=z} dy` over `|y - c| < T`, split by a smooth
/// partition of unity into a `z`-centred polar part (where the kernel's
/// `|z - y|^{1-n}` cancels the Jacobian) and a centre-based polar part.
fn integrate_lame_column(
    p: &BubbleParams,
    z: &[f64],
    v: &[f64],
    weight: &dyn Fn(&[f64]) -> f64,
    spec: &QuadSpec,
) -> Result<(DMatrix<f64>, f64), BubbleError> {
    let n = p.n;
    let (zc, zr) = direction(p, z).unwrap_or((
        {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        },
        0.0,
    ));
    let t = spec.truncation * p.mu;
    let rho = (0.5 * zr).max(p.mu);
    let scale = p.mu / p.c().sqrt();
    let mut acc = DMatrix::<f64>::zeros(n, n);

    // z-centred ball: H(z, z + ρω) ρ^{n-1} = H(-ω) for the unit-distance kernel
    let mut sph = polar_sphere_rule(n, spec.angular_panels, spec.angular_order, spec.azimuthal_order);
    align_to(&mut sph, &zc);
    let mut br = vec![0.0, rho / 2.0, rho];
    let mut g = rho / 2.0;
    while g > 0.02 * rho && g > scale / 8.0 {
        g /= 2.0;
        br.push(g);
    }
    let rad = panels(&mut br, spec.radial_order);
    let mut y = vec![0.0; n];
    for (om, wo) in &sph {
        let minus: Vec<f64> = om.iter().map(|t| -t).collect();
        let h = stress_apply(&minus, v)?;
        let mut s = 0.0;
        for &(r, wr) in &rad {
            for a in 0..n {
                y[a] = z[a] + r * om[a];
            }
            s += wr * cutoff(r, rho) * weight(&y);
        }
        acc += h * (wo * s);
    }

    // centre-based remainder, weighted by 1 - cutoff(|y - z|)
    let mut br = vec![0.0, scale.min(t), t];
    let mut r = scale;
    while r < t {
        br.push(r);
        r *= spec.panel_ratio;
    }
    for f in [-1.0, -0.75, -0.5, 0.5, 0.75, 1.0] {
        let b = zr + f * rho;
        if b > 0.0 && b < t {
            br.push(b);
        }
    }
    if zr > 0.0 && zr < t {
        br.push(zr);
    }
    let rad = panels(&mut br, spec.radial_order);
    let mut d = vec![0.0; n];
    let mut abs_mass = 0.0;
    for &(r, wr) in &rad {
        let jac = wr * r.powi(n as i32 - 1);
        for (om, wo) in &sph {
            let mut dist2 = 0.0;
            for a in 0..n {
                y[a] = p.center[a] + r * om[a];
                d[a] = z[a] - y[a];
                dist2 += d[a] * d[a];
            }
            let w = weight(&y);
            abs_mass += jac * wo * w.abs();
            let chi = 1.0 - cutoff(dist2.sqrt(), rho);
            if chi == 0.0 || w == 0.0 {
                continue;
            }
            acc += stress_apply(&d, v)? * (jac * wo * chi * w);
        }
    }
    Ok((acc, abs_mass))
}

/// `sup_{|d| = 1} |L_x[G(x - y) v]|_F`, sampled on a fine sphere rule.
fn stress_sup(n: usize, v: &[f64]) -> Result<f64, BubbleError> {
    let mut m = 0.0f64;
    for (om, _) in polar_sphere_rule(n, 24, 4, 4) {
        m = m.max(stress_apply(&om, v)?.norm());
    }
    // sampling slack
    Ok(1.1 * m)
}

fn quad_common(
    p: &BubbleParams,
    z: &[f64],
    v: &[f64],
    weight: &dyn Fn(&[f64]) -> f64,
    decay: i32,
    spec: &QuadSpec,
) -> Result<QuadResult, BubbleError> {
    let n = p.n;
    let y = p.rel(z)?;
    if v.len() != n {
        return Err(BubbleError::PointLength { expected: n, got: v.len() });
    }
    let t = spec.truncation * p.mu;
    if y.iter().map(|a| a * a).sum::<f64>().sqrt() >= 0.5 * t {
        return Err(BubbleError::Truncation);
    }
    let vnorm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if vnorm == 0.0 {
        return Ok(QuadResult { value: DMatrix::zeros(n, n), tail_bound: 0.0 });
    }
    let (value, abs_mass) = integrate_lame_column(p, z, v, weight, spec)?;
    // |w| ≤ μ^n c^{-n} |y|^{-decay} and |z - y| ≥ |y|(1 - |z|/T) beyond T
    let env = p.mu.powi(n as i32) * p.c().powi(-(n as i32));
    let expo = decay as f64 - 1.0;
    let zr = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    let sup = stress_sup(n, v)?;
    let tail = sup * (1.0 - zr / t).powi(1 - n as i32) * env * sphere_area(n - 1) * t.powf(-expo) / expo;
    // values vanishing by symmetry are measured against the envelope instead
    let envelope = sup * abs_mass * theta(p.mu, &y).powf(1.0 - n as f64);
    let reference = value.norm().max(1e-8 * envelope);
    if tail > spec.tail_tol * reference {
        return Err(BubbleError::TailBudget { bound: tail, tol: spec.tail_tol * reference });
    }
    Ok(QuadResult { value, tail_bound: tail })
}

/// `L_ξ V(z)` with `V_i(x) = X_0^j ∫ B^{2*}(y) G_ij(x - y) dy`.
pub fn quad_lv(x0: &[f64], p: &BubbleParams, z: &[f64], spec: &QuadSpec) -> Result<QuadResult, BubbleError> {
    let ex = crate::critical_exponent(p.n);
    let w = |y: &[f64]| bubble(p, y).map(|b| b.powf(ex)).unwrap_or(0.0);
    quad_common(p, z, x0, &w, 2 * p.n as i32, spec)
}

/// `L_ξ P_k(z)` with `P_k(x)_i = ∂_k X^j ∫ (y - c)_k B^{2*}(y) G_ij(x - y) dy`.
pub fn quad_lp(
    dx_k: &[f64],
    p: &BubbleParams,
    z: &[f64],
    k: usize,
    spec: &QuadSpec,
) -> Result<QuadResult, BubbleError> {
    if k >= p.n {
        return Err(BubbleError::Axis(k));
    }
    let ex = crate::critical_exponent(p.n);
    let w = |y: &[f64]| bubble(p, y).map(|b| (y[k] - p.center[k]) * b.powf(ex)).unwrap_or(0.0);
    quad_common(p, z, dx_k, &w, 2 * p.n as i32 - 1, spec)
}

/// `∫ B^{2*}` for a bubble, closed form.
pub fn bubble_mass(p: &BubbleParams) -> f64 {
    let n = p.n as f64;
    (n * (n - 2.0) / p.f_center).powf(n / 2.0) * sphere_area(p.n) * 2f64.powi(-(p.n as i32))
}

#[cfg(test)]
mod tests;
