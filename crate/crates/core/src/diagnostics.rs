//! Identity and inequality checks: Harnack ratios, Pohozaev balances, the
//! stability condition and conformal covariance of the operators.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::bubbles::blowup_constants;
use crate::conformal::{ConformalError, SystemCoefficients};
use crate::geometry::{GeometryError, OneFormField, RadialStencil, ScalarField};
use crate::quadrature::{ball_rule, sphere_rule};

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("field is not positive at {0:?}")]
    NonPositive(Vec<f64>),
    #[error("region contains no grid nodes")]
    EmptyRegion,
    #[error("ball exceeds the chart")]
    BallOutsideChart,
    #[error("f0 must be positive")]
    NonPositiveF,
    #[error("chart needs at least 6 nodes per axis and a positive spacing")]
    Chart,
    #[error("sample count {got} does not match the chart ({expected})")]
    Samples { expected: usize, got: usize },
    #[error("dimension mismatch")]
    Dimension,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Conformal(#[from] ConformalError),
}

/// `sup u / inf u` over the nodes accepted by `inner`, after checking `u > 0`
/// on the nodes accepted by `outer`.
pub fn harnack_ratio_samples<'a>(
    samples: impl Iterator<Item = (Vec<f64>, f64)> + Clone + 'a,
    inner: &dyn Fn(&[f64]) -> bool,
    outer: &dyn Fn(&[f64]) -> bool,
) -> Result<f64, DiagnosticsError> {
    for (x, u) in samples.clone() {
        if outer(&x) && !(u > 0.0) {
            return Err(DiagnosticsError::NonPositive(x));
        }
    }
    let (mut lo, mut hi, mut any) = (f64::INFINITY, 0.0f64, false);
    for (x, u) in samples {
        if inner(&x) {
            if !(u > 0.0) {
                return Err(DiagnosticsError::NonPositive(x));
            }
            any = true;
            lo = lo.min(u);
            hi = hi.max(u);
        }
    }
    if !any {
        return Err(DiagnosticsError::EmptyRegion);
    }
    Ok(hi / lo)
}

pub fn harnack_ratio(
    u: &ScalarField,
    inner: &dyn Fn(&[f64]) -> bool,
    outer: &dyn Fn(&[f64]) -> bool,
) -> Result<f64, DiagnosticsError> {
    let g = *u.geometry();
    harnack_ratio_samples(u.values().iter().enumerate().map(move |(i, &v)| (g.coords(i), v)), inner, outer)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityMargin {
    pub satisfied: bool,
    pub margin: f64,
}

/// Margin `(n-2)/(4(n-1)) R_g - C(n) Δ_g f_0 / f_0 - h_0`; satisfied iff positive.
pub fn stability_condition(
    h0: f64,
    f0: f64,
    lap_f0: f64,
    rg: f64,
    n: usize,
) -> Result<StabilityMargin, DiagnosticsError> {
    if !(f0 > 0.0) {
        return Err(DiagnosticsError::NonPositiveF);
    }
    let cn = blowup_constants(n).map_err(|_| DiagnosticsError::Dimension)?.cn;
    let nf = n as f64;
    let margin = (nf - 2.0) / (4.0 * (nf - 1.0)) * rg - cn * lap_f0 / f0 - h0;
    Ok(StabilityMargin { satisfied: margin > 0.0, margin })
}

/// Uniform Cartesian grid on the box `lower + [0, (m-1)h]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub lower: Vec<f64>,
    pub spacing: f64,
    pub nodes: usize,
}

impl Chart {
    pub fn new(lower: Vec<f64>, spacing: f64, nodes: usize) -> Result<Self, DiagnosticsError> {
        if nodes < 6 || !(spacing > 0.0) || lower.is_empty() {
            return Err(DiagnosticsError::Chart);
        }
        Ok(Chart { lower, spacing, nodes })
    }

    /// Box `[c - a, c + a]^n` with `nodes` nodes per axis.
    pub fn centred(center: &[f64], half_width: f64, nodes: usize) -> Result<Self, DiagnosticsError> {
        if nodes < 2 {
            return Err(DiagnosticsError::Chart);
        }
        Self::new(center.iter().map(|c| c - half_width).collect(), 2.0 * half_width / (nodes - 1) as f64, nodes)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let n = self.dim();
        let mut x = vec![0.0; n];
        for a in (0..n).rev() {
            x[a] = self.lower[a] + (idx % self.nodes) as f64 * self.spacing;
            idx /= self.nodes;
        }
        x
    }

    fn stride(&self, axis: usize) -> usize {
        self.nodes.pow((self.dim() - 1 - axis) as u32)
    }

    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.point(i))).collect()
    }

    fn check(&self, v: &[f64]) -> Result<(), DiagnosticsError> {
        if v.len() != self.len() {
            return Err(DiagnosticsError::Samples { expected: self.len(), got: v.len() });
        }
        Ok(())
    }

    fn along(&self, v: &[f64], axis: usize, op: impl Fn(&RadialStencil, &[f64]) -> Vec<f64>) -> Vec<f64> {
        let st = RadialStencil::new(self.nodes, self.spacing);
        let s = self.stride(axis);
        let m = self.nodes;
        let mut out = vec![0.0; v.len()];
        let mut line = vec![0.0; m];
        for base in 0..v.len() {
            if (base / s) % m != 0 {
                continue;
            }
            // offset by the first value so constants differentiate to exactly 0
            let v0 = v[base];
            for (k, l) in line.iter_mut().enumerate() {
                *l = v[base + k * s] - v0;
            }
            for (k, d) in op(&st, &line).into_iter().enumerate() {
                out[base + k * s] = d;
            }
        }
        out
    }

    /// 4th-order `∂_axis v`.
    pub fn d1(&self, v: &[f64], axis: usize) -> Vec<f64> {
        self.along(v, axis, |st, l| st.d1(l))
    }

    /// 4th-order `∂²_axis v`.
    pub fn d2(&self, v: &[f64], axis: usize) -> Vec<f64> {
        self.along(v, axis, |st, l| st.d2(l))
    }

    pub fn gradient(&self, v: &[f64]) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|a| self.d1(v, a)).collect()
    }

    /// Hessian components `[a][b] = ∂_a ∂_b v`.
    pub fn hessian(&self, v: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let n = self.dim();
        let grad = self.gradient(v);
        (0..n)
            .map(|a| (0..n).map(|b| if a == b { self.d2(v, a) } else { self.d1(&grad[b], a) }).collect())
            .collect()
    }

    /// Positive flat Laplacian `-Σ ∂²_a v`.
    pub fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for a in 0..self.dim() {
            for (o, d) in out.iter_mut().zip(self.d2(v, a)) {
                *o -= d;
            }
        }
        out
    }

    /// Whether the closed ball lies inside the box.
    pub fn contains_ball(&self, center: &[f64], radius: f64) -> bool {
        let top = (self.nodes - 1) as f64 * self.spacing;
        center.len() == self.dim()
            && center.iter().zip(&self.lower).all(|(c, l)| c - radius >= *l && c + radius <= l + top)
    }

    /// Tensor-product cubic Lagrange interpolation (4th order).
    pub fn interpolate(&self, v: &[f64], x: &[f64]) -> f64 {
        let n = self.dim();
        let m = self.nodes;
        let mut starts = vec![0usize; n];
        let mut weights = vec![[0.0; 4]; n];
        for a in 0..n {
            let t = (x[a] - self.lower[a]) / self.spacing;
            let s = (t.floor() as i64 - 1).clamp(0, m as i64 - 4) as usize;
            starts[a] = s;
            for k in 0..4 {
                let mut w = 1.0;
                for l in 0..4 {
                    if l != k {
                        w *= (t - (s + l) as f64) / (k as f64 - l as f64);
                    }
                }
                weights[a][k] = w;
            }
        }
        let mut acc = 0.0;
        let total = 4usize.pow(n as u32);
        for c in 0..total {
            let mut idx = 0;
            let mut w = 1.0;
            let mut r = c;
            for a in 0..n {
                let k = r % 4;
                r /= 4;
                idx += (starts[a] + k) * self.stride(a);
                w *= weights[a][k];
            }
            acc += w * v[idx];
        }
        acc
    }
}

/// Coefficients of `Δ_ξ v + h v = f v^{2*-1} + a v^{-2*-1}` sampled on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartCoefficients {
    pub h: Vec<f64>,
    pub f: Vec<f64>,
    pub a: Vec<f64>,
}

impl ChartCoefficients {
    pub fn constant(chart: &Chart, h: f64, f: f64, a: f64) -> Self {
        let m = chart.len();
        ChartCoefficients { h: vec![h; m], f: vec![f; m], a: vec![a; m] }
    }

    /// Coefficients of a torus system read on the torus lattice, with `a`
    /// evaluated at `w`.
    pub fn from_system(c: &SystemCoefficients, w: &OneFormField) -> Result<Self, DiagnosticsError> {
        Ok(ChartCoefficients { h: c.h.values().to_vec(), f: c.f.values().to_vec(), a: c.a_of(w)?.into_values() })
    }
}

/// Chart spanned by the nodes of a torus grid (periodicity ignored).
pub fn torus_chart(u: &ScalarField) -> Result<Chart, DiagnosticsError> {
    let g = u.geometry();
    if !g.is_torus() {
        return Err(DiagnosticsError::Geometry(GeometryError::Unsupported("torus lattice expected")));
    }
    Chart::new(vec![0.0; g.dim()], g.spacing(), g.resolution())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PohozaevReport {
    pub interior: f64,
    pub boundary: f64,
    pub defect: f64,
    /// `-∫ D h v`, `∫ D f v^{2*-1}`, `∫ D a v^{-2*-1}` with `D` the dilation
    /// (or translation) multiplier; present when coefficients were supplied.
    pub terms: Option<[f64; 3]>,
}

/// Quadrature orders for the Pohozaev integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PohozaevQuad {
    pub radial: usize,
    pub angular: usize,
}

impl Default for PohozaevQuad {
    fn default() -> Self {
        PohozaevQuad { radial: 24, angular: 16 }
    }
}

enum Multiplier<'a> {
    Dilation,
    Translation(&'a [f64]),
}

fn pohozaev_common(
    chart: &Chart,
    v: &[f64],
    coeffs: Option<&ChartCoefficients>,
    center: &[f64],
    radius: f64,
    mult: Multiplier,
    quad: PohozaevQuad,
) -> Result<PohozaevReport, DiagnosticsError> {
    let n = chart.dim();
    chart.check(v)?;
    if center.len() != n {
        return Err(DiagnosticsError::Dimension);
    }
    if let Multiplier::Translation(y) = mult {
        if y.len() != n {
            return Err(DiagnosticsError::Dimension);
        }
    }
    if !chart.contains_ball(center, radius) {
        return Err(DiagnosticsError::BallOutsideChart);
    }
    if let Some(c) = coeffs {
        chart.check(&c.h)?;
        chart.check(&c.f)?;
        chart.check(&c.a)?;
    }
    let nf = n as f64;
    let crit = crate::critical_exponent(n);
    let grad = chart.gradient(v);
    let lap = if coeffs.is_none() { Some(chart.laplacian(v)) } else { None };
    let multiplier = |x: &[f64], val: f64, g: &[f64]| match mult {
        Multiplier::Dilation => (0..n).map(|a| (x[a] - center[a]) * g[a]).sum::<f64>() + (nf - 2.0) / 2.0 * val,
        Multiplier::Translation(y) => (0..n).map(|a| y[a] * g[a]).sum::<f64>(),
    };

    let mut interior = 0.0;
    let mut terms = [0.0; 3];
    let mut g = vec![0.0; n];
    for (p, w) in ball_rule(n, radius, quad.radial, quad.angular) {
        let x: Vec<f64> = p.iter().zip(center).map(|(a, b)| a + b).collect();
        let val = chart.interpolate(v, &x);
        for a in 0..n {
            g[a] = chart.interpolate(&grad[a], &x);
        }
        let d = multiplier(&x, val, &g);
        match (coeffs, &lap) {
            (Some(c), _) => {
                let k = [
                    -chart.interpolate(&c.h, &x) * val,
                    chart.interpolate(&c.f, &x) * val.powf(crit - 1.0),
                    chart.interpolate(&c.a, &x) * val.powf(-crit - 1.0),
                ];
                for (t, kk) in terms.iter_mut().zip(k) {
                    *t += w * d * kk;
                }
                interior += w * d * (k[0] + k[1] + k[2]);
            }
            (None, Some(l)) => interior += w * d * chart.interpolate(l, &x),
            (None, None) => unreachable!(),
        }
    }

    let mut boundary = 0.0;
    for (nu, w) in sphere_rule(n, quad.angular) {
        let x: Vec<f64> = nu.iter().zip(center).map(|(a, b)| b + radius * a).collect();
        let val = chart.interpolate(v, &x);
        for a in 0..n {
            g[a] = chart.interpolate(&grad[a], &x);
        }
        let g2: f64 = g.iter().map(|t| t * t).sum();
        let dn: f64 = g.iter().zip(&nu).map(|(a, b)| a * b).sum();
        let integrand = match mult {
            Multiplier::Dilation => 0.5 * radius * g2 - (nf - 2.0) / 2.0 * val * dn - radius * dn * dn,
            Multiplier::Translation(y) => {
                let yn: f64 = y.iter().zip(&nu).map(|(a, b)| a * b).sum();
                let yg: f64 = y.iter().zip(&g).map(|(a, b)| a * b).sum();
                0.5 * yn * g2 - yg * dn
            }
        };
        boundary += w * radius.powi(n as i32 - 1) * integrand;
    }
    Ok(PohozaevReport {
        interior,
        boundary,
        defect: (interior - boundary).abs(),
        terms: coeffs.map(|_| terms),
    })
}

/// Dilation identity
/// `∫_B (x·∇v + (n-2)/2 v) Δ_ξ v = ∫_∂B (R|∇v|²/2 - (n-2)/2 v ∂_ν v - R(∂_ν v)²)`
/// on `B = B(center, R)`. With coefficients, `Δ_ξ v` is taken from the equation.
pub fn pohozaev_defect(
    chart: &Chart,
    v: &[f64],
    coeffs: Option<&ChartCoefficients>,
    center: &[f64],
    radius: f64,
    quad: PohozaevQuad,
) -> Result<PohozaevReport, DiagnosticsError> {
    pohozaev_common(chart, v, coeffs, center, radius, Multiplier::Dilation, quad)
}

/// Translation identity `∫_B (Y·∇v) Δ_ξ v = ∫_∂B (Y·ν|∇v|²/2 - (Y·∇v) ∂_ν v)`.
pub fn pohozaev_translation(
    chart: &Chart,
    v: &[f64],
    coeffs: Option<&ChartCoefficients>,
    center: &[f64],
    radius: f64,
    direction: &[f64],
    quad: PohozaevQuad,
) -> Result<PohozaevReport, DiagnosticsError> {
    pohozaev_common(chart, v, coeffs, center, radius, Multiplier::Translation(direction), quad)
}

/// Defects of the three conformal covariance identities for
/// `g = φ^{4/(n-2)} ξ` on a chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceResiduals {
    /// `Δ_ξ(φ v) - φ^{2*-1}(Δ_g v + (n-2)/(4(n-1)) R_g v)`
    pub scalar: f64,
    /// `φ^{4/(n-2)} L_ξ(φ^{-4/(n-2)} X) - L_g X`
    pub killing: f64,
    /// `Δ⃗_ξ Z - 2* (L_ξ Z)(∇ ln φ) - Δ⃗_g X`, `Z = φ^{-4/(n-2)} X`
    pub lame: f64,
}

/// Christoffel symbols `Γ^k_ij` of a metric given by its components `g[i][j]`
/// on the chart, via finite differences of the components.
fn christoffel(chart: &Chart, g: &[Vec<Vec<f64>>], ginv: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<Vec<f64>>>> {
    let n = chart.dim();
    let m = chart.len();
    // dg[k][i][j] = ∂_k g_ij
    let dg: Vec<Vec<Vec<Vec<f64>>>> =
        (0..n).map(|k| (0..n).map(|i| (0..n).map(|j| chart.d1(&g[i][j], k)).collect()).collect()).collect();
    let mut gam = vec![vec![vec![vec![0.0; m]; n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                for p in 0..m {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ginv[k][l][p] * (dg[i][j][l][p] + dg[j][i][l][p] - dg[l][i][j][p]);
                    }
                    gam[k][i][j][p] = 0.5 * s;
                }
            }
        }
    }
    gam
}

/// Covariant `L_g X`, given `∂_a X_b` and Christoffels.
fn killing_g(
    n: usize,
    p: usize,
    x: &[Vec<f64>],
    dx: &[Vec<Vec<f64>>],
    gam: &[Vec<Vec<Vec<f64>>>],
    g: &[Vec<Vec<f64>>],
    ginv: &[Vec<Vec<f64>>],
) -> DMatrix<f64> {
    // ∇_i X_j = ∂_i X_j - Γ^k_ij X_k
    let nab = DMatrix::from_fn(n, n, |i, j| dx[i][j][p] - (0..n).map(|k| gam[k][i][j][p] * x[k][p]).sum::<f64>());
    let div: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| ginv[i][j][p] * nab[(i, j)]).sum();
    DMatrix::from_fn(n, n, |i, j| nab[(i, j)] + nab[(j, i)] - 2.0 / n as f64 * div * g[i][j][p])
}

pub fn conformal_covariance_residuals(
    chart: &Chart,
    v: &[f64],
    x: &[Vec<f64>],
    phi: &[f64],
    margin: usize,
) -> Result<CovarianceResiduals, DiagnosticsError> {
    let n = chart.dim();
    let m = chart.len();
    chart.check(v)?;
    chart.check(phi)?;
    if x.len() != n {
        return Err(DiagnosticsError::Dimension);
    }
    for c in x {
        chart.check(c)?;
    }
    if let Some(i) = phi.iter().position(|p| !(*p > 0.0)) {
        return Err(DiagnosticsError::NonPositive(chart.point(i)));
    }
    let nf = n as f64;
    let crit = crate::critical_exponent(n);
    let cf: Vec<f64> = phi.iter().map(|p| p.powf(4.0 / (nf - 2.0))).collect();
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let g: Vec<Vec<Vec<f64>>> = (0..n).map(|i| (0..n).map(|j| cf.iter().map(|c| c * delta(i, j)).collect()).collect()).collect();
    let ginv: Vec<Vec<Vec<f64>>> =
        (0..n).map(|i| (0..n).map(|j| cf.iter().map(|c| delta(i, j) / c).collect()).collect()).collect();
    let gam = christoffel(chart, &g, &ginv);
    // Γ derivatives for the Ricci tensor: dgam[l][k][i][j] = ∂_l Γ^k_ij
    let dgam: Vec<Vec<Vec<Vec<Vec<f64>>>>> = (0..n)
        .map(|l| (0..n).map(|k| (0..n).map(|i| (0..n).map(|j| chart.d1(&gam[k][i][j], l)).collect()).collect()).collect())
        .collect();
    let interior = |p: usize| {
        let mut q = p;
        for _ in 0..n {
            let c = q % chart.nodes;
            q /= chart.nodes;
            if c < margin || c + margin >= chart.nodes {
                return false;
            }
        }
        true
    };

    // scalar identity
    let pv: Vec<f64> = phi.iter().zip(v).map(|(a, b)| a * b).collect();
    let lhs = chart.laplacian(&pv);
    let dv = chart.gradient(v);
    let hv = chart.hessian(v);
    let mut scalar = 0.0f64;
    for p in (0..m).filter(|&p| interior(p)) {
        let mut lap_g = 0.0;
        let mut ric = 0.0;
        for i in 0..n {
            for j in 0..n {
                let gij = ginv[i][j][p];
                if gij == 0.0 {
                    continue;
                }
                let cd: f64 = (0..n).map(|k| gam[k][i][j][p] * dv[k][p]).sum();
                lap_g -= gij * (hv[i][j][p] - cd);
                // R_ij = ∂_k Γ^k_ij - ∂_j Γ^k_ik + Γ^k_kl Γ^l_ij - Γ^k_jl Γ^l_ik
                let mut r = 0.0;
                for k in 0..n {
                    r += dgam[k][k][i][j][p] - dgam[j][k][i][k][p];
                    for l in 0..n {
                        r += gam[k][k][l][p] * gam[l][i][j][p] - gam[k][j][l][p] * gam[l][i][k][p];
                    }
                }
                ric += gij * r;
            }
        }
        let rhs = phi[p].powf(crit - 1.0) * (lap_g + (nf - 2.0) / (4.0 * (nf - 1.0)) * ric * v[p]);
        scalar = scalar.max((lhs[p] - rhs).abs());
    }

    // Killing identity: Z = φ^{-4/(n-2)} X
    let z: Vec<Vec<f64>> = x.iter().map(|c| c.iter().zip(&cf).map(|(a, b)| a / b).collect()).collect();
    let dz: Vec<Vec<Vec<f64>>> = (0..n).map(|a| (0..n).map(|b| chart.d1(&z[b], a)).collect()).collect();
    let dxx: Vec<Vec<Vec<f64>>> = (0..n).map(|a| (0..n).map(|b| chart.d1(&x[b], a)).collect()).collect();
    let mut lz = vec![vec![vec![0.0; m]; n]; n];
    let mut lg = vec![vec![vec![0.0; m]; n]; n];
    let mut killing = 0.0f64;
    for p in 0..m {
        let divz: f64 = (0..n).map(|a| dz[a][a][p]).sum();
        let lgx = killing_g(n, p, x, &dxx, &gam, &g, &ginv);
        for i in 0..n {
            for j in 0..n {
                lz[i][j][p] = dz[i][j][p] + dz[j][i][p] - if i == j { 2.0 / nf * divz } else { 0.0 };
                lg[i][j][p] = lgx[(i, j)];
                if interior(p) {
                    killing = killing.max((cf[p] * lz[i][j][p] - lgx[(i, j)]).abs());
                }
            }
        }
    }

    // Lamé identity: Δ⃗_ξ Z - 2* L_ξZ ∇ln φ versus -div_g L_g X
    let dlz: Vec<Vec<Vec<Vec<f64>>>> =
        (0..n).map(|k| (0..n).map(|i| (0..n).map(|j| chart.d1(&lz[i][j], k)).collect()).collect()).collect();
    let dlg: Vec<Vec<Vec<Vec<f64>>>> =
        (0..n).map(|k| (0..n).map(|i| (0..n).map(|j| chart.d1(&lg[i][j], k)).collect()).collect()).collect();
    let lnphi: Vec<f64> = phi.iter().map(|p| p.ln()).collect();
    let dln = chart.gradient(&lnphi);
    let mut lame = 0.0f64;
    for p in (0..m).filter(|&p| interior(p)) {
        for i in 0..n {
            let lhs = -(0..n).map(|k| dlz[k][k][i][p]).sum::<f64>()
                - crit * (0..n).map(|k| dln[k][p] * lz[k][i][p]).sum::<f64>();
            // (div_g T)_i = g^{jk}(∂_j T_ki - Γ^l_jk T_li - Γ^l_ji T_kl)
            let mut div = 0.0;
            for j in 0..n {
                for k in 0..n {
                    let gjk = ginv[j][k][p];
                    if gjk == 0.0 {
                        continue;
                    }
                    let mut t = dlg[j][k][i][p];
                    for l in 0..n {
                        t -= gam[l][j][k][p] * lg[l][i][p] + gam[l][j][i][p] * lg[k][l][p];
                    }
                    div += gjk * t;
                }
            }
            lame = lame.max((lhs + div).abs());
        }
    }
    Ok(CovarianceResiduals { scalar, killing, lame })
}
