//! Euclidean Lamé fundamental solution, stress kernel, conformal Killing
//! fields of a ball and the Green representation formula.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::quadrature::ball_rule;
use crate::sphere_area;

#[derive(Debug, Error, PartialEq)]
pub enum GreenError {
    #[error("kernel evaluated at its singularity")]
    Singular,
    #[error("dimension must be at least 3, got {0}")]
    Dimension(usize),
    #[error("point has {got} coordinates, expected {expected}")]
    PointLength { expected: usize, got: usize },
    #[error("radius must be positive")]
    Radius,
    #[error("Gram-Schmidt breakdown: generators are numerically dependent")]
    Degenerate,
    #[error("sample grid does not match the basis quadrature")]
    GridMismatch,
    #[error("form is not supported inside the ball (support radius {support} > {radius})")]
    NotCompact { support: f64, radius: f64 },
    #[error("evaluation point must lie inside the ball")]
    Outside,
}

fn check_point(y: &[f64], n: usize) -> Result<(), GreenError> {
    if n < 3 {
        return Err(GreenError::Dimension(n));
    }
    if y.len() != n {
        return Err(GreenError::PointLength { expected: n, got: y.len() });
    }
    Ok(())
}

fn norm(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `G(y) = A |y|^{2-n} ((3n-2) δ + (n-2)² ŷŷ)`, `A = 1/(4(n-1)(n-2)ω_{n-1})`.
struct Kernel {
    amp: f64,
    a: f64,
    b: f64,
}

impl Kernel {
    fn new(n: usize) -> Self {
        let nf = n as f64;
        Kernel {
            amp: 1.0 / (4.0 * (nf - 1.0) * (nf - 2.0) * sphere_area(n - 1)),
            a: 3.0 * nf - 2.0,
            b: (nf - 2.0) * (nf - 2.0),
        }
    }
}

/// Fundamental solution of `Δ⃗_ξ = -div L_ξ` in `R^n`, i.e. `Δ⃗ G_{·j} = δ_0 e_j`.
pub fn fundamental(y: &[f64], n: usize) -> Result<DMatrix<f64>, GreenError> {
    check_point(y, n)?;
    let r = norm(y);
    if r == 0.0 {
        return Err(GreenError::Singular);
    }
    let k = Kernel::new(n);
    let p = r.powi(2 - n as i32);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        k.amp * p * (k.a * d + k.b * y[i] * y[j] / (r * r))
    }))
}

/// First derivatives: entry `[k][(i, j)] = ∂_k G_ij(y)`.
pub fn fundamental_grad(y: &[f64], n: usize) -> Result<Vec<DMatrix<f64>>, GreenError> {
    check_point(y, n)?;
    let r = norm(y);
    if r == 0.0 {
        return Err(GreenError::Singular);
    }
    let kr = Kernel::new(n);
    let nf = n as f64;
    let rn = r.powi(-(n as i32));
    let rn2 = rn / (r * r);
    let dl = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    Ok((0..n)
        .map(|k| {
            DMatrix::from_fn(n, n, |i, j| {
                kr.amp
                    * (kr.a * (2.0 - nf) * dl(i, j) * y[k] * rn
                        + kr.b * (dl(i, k) * y[j] + dl(j, k) * y[i]) * rn
                        - nf * kr.b * y[i] * y[j] * y[k] * rn2)
            })
        })
        .collect())
}

/// Second derivatives `∂_l ∂_k G_ij(y)`, indexed `[l][k][(i, j)]`.
pub fn fundamental_hessian(y: &[f64], n: usize) -> Result<Vec<Vec<DMatrix<f64>>>, GreenError> {
    check_point(y, n)?;
    let r = norm(y);
    if r == 0.0 {
        return Err(GreenError::Singular);
    }
    let kr = Kernel::new(n);
    let nf = n as f64;
    let r2 = r * r;
    let rn = r.powi(-(n as i32));
    let rn2 = rn / r2;
    let rn4 = rn2 / r2;
    let dl = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    Ok((0..n)
        .map(|l| {
            (0..n)
                .map(|k| {
                    DMatrix::from_fn(n, n, |i, j| {
                        let t1 = kr.a * (2.0 - nf) * dl(i, j) * (dl(k, l) * rn - nf * y[k] * y[l] * rn2);
                        let t2 = kr.b * (dl(i, k) * dl(j, l) + dl(j, k) * dl(i, l)) * rn
                            - nf * kr.b * (dl(i, k) * y[j] + dl(j, k) * y[i]) * y[l] * rn2;
                        let t3 = -nf * kr.b * (dl(i, l) * y[j] * y[k] + dl(j, l) * y[i] * y[k] + dl(k, l) * y[i] * y[j]) * rn2
                            + nf * (nf + 2.0) * kr.b * y[i] * y[j] * y[k] * y[l] * rn4;
                        kr.amp * (t1 + t2 + t3)
                    })
                })
                .collect()
        })
        .collect())
}

/// `Δ⃗` applied to each column `G_{·p}` at `y ≠ 0`; column `p` of the result.
pub fn lame_of_fundamental(y: &[f64], n: usize) -> Result<DMatrix<f64>, GreenError> {
    let hess = fundamental_hessian(y, n)?;
    let nf = n as f64;
    // (Δ⃗W)_i = -[Σ_k ∂_k∂_k W_i + (1 - 2/n) ∂_i Σ_k ∂_k W_k]
    Ok(DMatrix::from_fn(n, n, |i, p| {
        let lap: f64 = (0..n).map(|k| hess[k][k][(i, p)]).sum();
        let grad_div: f64 = (0..n).map(|k| hess[i][k][(k, p)]).sum();
        -(lap + (1.0 - 2.0 / nf) * grad_div)
    }))
}

/// Stress kernel `H_{ij}(x, y)_p`: the conformal Killing derivative in `x` of
/// the column `x ↦ G_{·p}(x - y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StressKernel {
    n: usize,
    data: Vec<f64>,
}

impl StressKernel {
    pub fn get(&self, i: usize, j: usize, p: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + p]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Σ_p H_{ij,p} v_p` as an `n×n` matrix.
    pub fn contract(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| (0..n).map(|p| self.get(i, j, p) * v[p]).sum())
    }
}

pub fn stress_kernel(x: &[f64], y: &[f64], n: usize) -> Result<StressKernel, GreenError> {
    check_point(x, n)?;
    check_point(y, n)?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let grad = fundamental_grad(&d, n)?;
    let nf = n as f64;
    let mut data = vec![0.0; n * n * n];
    for p in 0..n {
        let div: f64 = (0..n).map(|k| grad[k][(k, p)]).sum();
        for i in 0..n {
            for j in 0..n {
                let mut v = grad[i][(j, p)] + grad[j][(i, p)];
                if i == j {
                    v -= 2.0 / nf * div;
                }
                data[(i * n + j) * n + p] = v;
            }
        }
    }
    Ok(StressKernel { n, data })
}

/// `Σ_p H_{ij}(x, y)_p v_p` with `d = x - y`, without forming the full kernel.
pub fn stress_apply(d: &[f64], v: &[f64]) -> Result<DMatrix<f64>, GreenError> {
    let n = d.len();
    check_point(v, n)?;
    let r2: f64 = d.iter().map(|t| t * t).sum();
    if r2 == 0.0 {
        return Err(GreenError::Singular);
    }
    let kr = Kernel::new(n);
    let nf = n as f64;
    let rn = r2.sqrt().powi(-(n as i32));
    let dv: f64 = d.iter().zip(v).map(|(a, b)| a * b).sum();
    // J_ik = ∂_k (G v)_i
    let mut jac = DMatrix::from_fn(n, n, |i, k| {
        kr.a * (2.0 - nf) * v[i] * d[k] + kr.b * d[i] * v[k] - nf * kr.b * d[i] * dv * d[k] / r2
    });
    for i in 0..n {
        jac[(i, i)] += kr.b * dv;
    }
    jac *= kr.amp * rn;
    Ok(killing_derivative_from_jacobian(&jac))
}

/// Analytic conformal Killing generator of `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Translation(usize),
    Rotation(usize, usize),
    Dilation,
    SpecialConformal(usize),
}

impl Generator {
    pub fn all(n: usize) -> Vec<Generator> {
        let mut out: Vec<Generator> = (0..n).map(Generator::Translation).collect();
        for a in 0..n {
            for b in a + 1..n {
                out.push(Generator::Rotation(a, b));
            }
        }
        out.push(Generator::Dilation);
        out.extend((0..n).map(Generator::SpecialConformal));
        out
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut v = vec![0.0; n];
        match *self {
            Generator::Translation(a) => v[a] = 1.0,
            Generator::Rotation(a, b) => {
                v[a] = -x[b];
                v[b] = x[a];
            }
            Generator::Dilation => v.copy_from_slice(x),
            Generator::SpecialConformal(i) => {
                let r2: f64 = x.iter().map(|t| t * t).sum();
                for j in 0..n {
                    v[j] = -2.0 * x[i] * x[j];
                }
                v[i] += r2;
            }
        }
        v
    }

    /// Jacobian `J[(j, l)] = ∂_l X_j`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let mut jac = DMatrix::zeros(n, n);
        match *self {
            Generator::Translation(_) => {}
            Generator::Rotation(a, b) => {
                jac[(a, b)] = -1.0;
                jac[(b, a)] = 1.0;
            }
            Generator::Dilation => jac.fill_with_identity(),
            Generator::SpecialConformal(i) => {
                for j in 0..n {
                    for l in 0..n {
                        let dij = if i == j { 2.0 * x[l] } else { 0.0 };
                        let dil = if i == l { 2.0 * x[j] } else { 0.0 };
                        let djl = if j == l { 2.0 * x[i] } else { 0.0 };
                        jac[(j, l)] = dij - dil - djl;
                    }
                }
            }
        }
        jac
    }
}

/// `L_ξ` of a form with Jacobian `J[(j, l)] = ∂_l X_j`.
pub fn killing_derivative_from_jacobian(jac: &DMatrix<f64>) -> DMatrix<f64> {
    let n = jac.nrows();
    let tr = jac.trace();
    let mut l = jac + jac.transpose();
    for i in 0..n {
        l[(i, i)] -= 2.0 / n as f64 * tr;
    }
    l
}

/// 1-form samples on the quadrature nodes of a [`KillingBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct BallSamples {
    pub values: Vec<Vec<f64>>,
}

/// L²-orthonormal basis of the conformal Killing fields of `B(0, R)`.
#[derive(Debug, Clone)]
pub struct KillingBasis {
    n: usize,
    radius: f64,
    generators: Vec<Generator>,
    /// element k = Σ_j coeffs[(k, j)] generator_j
    coeffs: DMatrix<f64>,
    nodes: Vec<(Vec<f64>, f64)>,
}

impl KillingBasis {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> &[(Vec<f64>, f64)] {
        &self.nodes
    }

    pub fn eval(&self, k: usize, x: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for (j, g) in self.generators.iter().enumerate() {
            let c = self.coeffs[(k, j)];
            if c != 0.0 {
                for (vi, gi) in v.iter_mut().zip(g.eval(x)) {
                    *vi += c * gi;
                }
            }
        }
        v
    }

    /// `L_ξ` of basis element `k` at `x`.
    pub fn killing_derivative(&self, k: usize, x: &[f64]) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.n, self.n);
        for (j, g) in self.generators.iter().enumerate() {
            jac += g.jacobian(x) * self.coeffs[(k, j)];
        }
        killing_derivative_from_jacobian(&jac)
    }

    /// Samples `f` on the basis quadrature nodes.
    pub fn sample(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> BallSamples {
        BallSamples { values: self.nodes.iter().map(|(x, _)| f(x)).collect() }
    }

    pub fn inner(&self, a: &BallSamples, b: &BallSamples) -> Result<f64, GreenError> {
        if a.values.len() != self.nodes.len() || b.values.len() != self.nodes.len() {
            return Err(GreenError::GridMismatch);
        }
        Ok(self
            .nodes
            .iter()
            .zip(a.values.iter().zip(&b.values))
            .map(|((_, w), (u, v))| w * u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>())
            .sum())
    }
}

pub fn killing_basis(n: usize, radius: f64) -> Result<KillingBasis, GreenError> {
    if n < 3 {
        return Err(GreenError::Dimension(n));
    }
    if !(radius > 0.0) {
        return Err(GreenError::Radius);
    }
    let generators = Generator::all(n);
    // inner products are polynomials of degree ≤ 4 times r^{n-1}: exact rule
    let nodes = ball_rule(n, radius, 8, 6);
    let m = generators.len();
    let samples: Vec<Vec<Vec<f64>>> =
        generators.iter().map(|g| nodes.iter().map(|(x, _)| g.eval(x)).collect()).collect();
    let gram = DMatrix::from_fn(m, m, |a, b| {
        nodes
            .iter()
            .enumerate()
            .map(|(q, (_, w))| w * samples[a][q].iter().zip(&samples[b][q]).map(|(s, t)| s * t).sum::<f64>())
            .sum()
    });
    // Gram-Schmidt in coefficient space, repeated once for stability
    let mut coeffs = DMatrix::<f64>::identity(m, m);
    let ip = |c: &DMatrix<f64>, a: usize, b: usize| (c.row(a) * &gram * c.row(b).transpose())[(0, 0)];
    for k in 0..m {
        for _ in 0..2 {
            for j in 0..k {
                let proj = ip(&coeffs, k, j);
                let rj = coeffs.row(j).clone_owned();
                let mut rk = coeffs.row_mut(k);
                rk -= rj * proj;
            }
        }
        let nk = ip(&coeffs, k, k);
        if !(nk > 1e-20 * gram[(k, k)].max(1e-300)) {
            return Err(GreenError::Degenerate);
        }
        let s = 1.0 / nk.sqrt();
        coeffs.row_mut(k).scale_mut(s);
    }
    Ok(KillingBasis { n, radius, generators, coeffs, nodes })
}

/// L² projection onto the span of the basis.
pub fn project_killing(x: &BallSamples, basis: &KillingBasis) -> Result<BallSamples, GreenError> {
    let nq = basis.nodes.len();
    if x.values.len() != nq || x.values.iter().any(|v| v.len() != basis.n) {
        return Err(GreenError::GridMismatch);
    }
    let mut out = vec![vec![0.0; basis.n]; nq];
    for k in 0..basis.len() {
        let kk = basis.sample(|p| basis.eval(k, p));
        let c = basis.inner(&kk, x)?;
        for (o, v) in out.iter_mut().zip(&kk.values) {
            for (a, b) in o.iter_mut().zip(v) {
                *a += c * b;
            }
        }
    }
    Ok(BallSamples { values: out })
}

/// A compactly supported 1-form with a closed-form Lamé image.
pub trait CompactForm {
    fn dim(&self) -> usize;
    /// Radius of a centred ball containing the support.
    fn support_radius(&self) -> f64;
    fn value(&self, y: &[f64]) -> Vec<f64>;
    fn lame(&self, y: &[f64]) -> Vec<f64>;
}

/// `X(y) = (1 - |y|²/ρ²)^m v` inside `B(0, ρ)`, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpForm {
    pub radius: f64,
    pub power: i32,
    pub direction: Vec<f64>,
}

impl CompactForm for BumpForm {
    fn dim(&self) -> usize {
        self.direction.len()
    }

    fn support_radius(&self) -> f64 {
        self.radius
    }

    fn value(&self, y: &[f64]) -> Vec<f64> {
        let s = 1.0 - y.iter().map(|t| t * t).sum::<f64>() / (self.radius * self.radius);
        let phi = if s > 0.0 { s.powi(self.power) } else { 0.0 };
        self.direction.iter().map(|v| phi * v).collect()
    }

    fn lame(&self, y: &[f64]) -> Vec<f64> {
        // φ = s^m, g = φ'/r = -2m s^{m-1}/ρ², g'/r = 4m(m-1) s^{m-2}/ρ⁴
        let n = self.dim() as f64;
        let rho2 = self.radius * self.radius;
        let r2: f64 = y.iter().map(|t| t * t).sum();
        let s = 1.0 - r2 / rho2;
        if s <= 0.0 {
            return vec![0.0; self.dim()];
        }
        let m = self.power as f64;
        let g = -2.0 * m * s.powi(self.power - 1) / rho2;
        let gr = 4.0 * m * (m - 1.0) * s.powi(self.power - 2) / (rho2 * rho2);
        let yv: f64 = y.iter().zip(&self.direction).map(|(a, b)| a * b).sum();
        // Δ⃗X = -[(n g + r² g'/r) v + (1 - 2/n)(g v + (g'/r)(y·v) y)]
        let c = 1.0 - 2.0 / n;
        (0..self.dim())
            .map(|i| -((n * g + r2 * gr) * self.direction[i] + c * (g * self.direction[i] + gr * yv * y[i])))
            .collect()
    }
}

/// Even cell count of refinement level `level`: the spacing shrinks by `√2`
/// per level, so a second-order residual halves.
pub fn refinement_cells(base: usize, level: u32) -> usize {
    2 * ((base as f64 / 2.0) * 2f64.powf(level as f64 / 2.0)).round() as usize
}

/// `max_i |X_i(x) - ∫ G_i(x - y)·Δ⃗X(y) dy|` over `B(0, R)`.
///
/// Midpoint rule on a cubic lattice of spacing `h = 2R/cells` with a corner at
/// `x`; inside `B(x, h)` the leading part `G(x - y) Δ⃗X(x)` is integrated in
/// closed form. The scheme is second order in `h`.
pub fn representation_residual(
    form: &dyn CompactForm,
    x: &[f64],
    radius: f64,
    cells: usize,
) -> Result<f64, GreenError> {
    let n = form.dim();
    check_point(x, n)?;
    if form.support_radius() > radius {
        return Err(GreenError::NotCompact { support: form.support_radius(), radius });
    }
    if norm(x) >= radius {
        return Err(GreenError::Outside);
    }
    let h = 2.0 * radius / cells as f64;
    let rho = h;
    let fx = form.lame(x);
    let kr = Kernel::new(n);
    // ∫_{B_ρ} G = A (a + b/n) ω_{n-1} ρ²/2 · I
    let ball = kr.amp * (kr.a + kr.b / n as f64) * sphere_area(n - 1) * rho * rho / 2.0;
    let mut integral: Vec<f64> = fx.iter().map(|f| ball * f).collect();
    // lattice offsets covering [-R, R]^n
    let lo: Vec<i64> = x.iter().map(|xi| ((-radius - xi) / h).floor() as i64).collect();
    let hi: Vec<i64> = x.iter().map(|xi| ((radius - xi) / h).ceil() as i64).collect();
    let vol = h.powi(n as i32);
    let supp2 = form.support_radius().powi(2);
    let mut idx = lo.clone();
    let mut y = vec![0.0; n];
    let mut d = vec![0.0; n];
    'cells: loop {
        for a in 0..n {
            y[a] = x[a] + (idx[a] as f64 + 0.5) * h;
            d[a] = x[a] - y[a];
        }
        if y.iter().map(|t| t * t).sum::<f64>() < supp2 {
            let mut f = form.lame(&y);
            if norm(&d) < rho {
                for (fi, fxi) in f.iter_mut().zip(&fx) {
                    *fi -= fxi;
                }
            }
            let g = fundamental(&d, n)?;
            for i in 0..n {
                integral[i] += vol * (0..n).map(|j| g[(i, j)] * f[j]).sum::<f64>();
            }
        }
        // odometer increment
        for a in (0..n).rev() {
            idx[a] += 1;
            if idx[a] < hi[a] {
                continue 'cells;
            }
            idx[a] = lo[a];
        }
        break;
    }
    let xv = form.value(x);
    Ok(xv.iter().zip(&integral).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}
