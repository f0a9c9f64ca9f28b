//! Gauss-Legendre, hypersphere product rules and ball rules.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..m {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = m as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(m: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(m);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(&w).map(|(xi, wi)| (c + h * xi, h * wi)).collect()
}

/// Gauss rule for the weight `(1 - t²)^a` on `[-1, 1]`, `a` a nonnegative
/// multiple of 1/2 (Golub-Welsch on the Gegenbauer recurrence).
pub fn gauss_gegenbauer(m: usize, a: f64) -> Vec<(f64, f64)> {
    if a == 0.0 {
        let (x, w) = gauss_legendre(m);
        return x.into_iter().zip(w).collect();
    }
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for k in 1..m {
        let kf = k as f64;
        let b = (kf * (kf + 2.0 * a) / ((2.0 * kf + 2.0 * a + 1.0) * (2.0 * kf + 2.0 * a - 1.0))).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    // μ0 = ∫ (1-t²)^a dt via μ0(a+1) = μ0(a)(2a+2)/(2a+3)
    let mut mu0 = if (a.fract()).abs() < 1e-12 { 2.0 } else { PI / 2.0 };
    let mut aa = a.fract();
    while aa + 0.5 < a {
        mu0 *= (2.0 * aa + 2.0) / (2.0 * aa + 3.0);
        aa += 1.0;
    }
    let eig = SymmetricEigen::new(jac);
    let mut out: Vec<(f64, f64)> =
        (0..m).map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// Product rule on the unit sphere `S^{n-1} ⊂ R^n` (`n ≥ 2`): the first
/// coordinate `t` on Gauss nodes for the weight `(1-t²)^{(n-3)/2}`, recursing
/// down to an equispaced circle of `2m` points.
pub fn sphere_rule(n: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    assert!(n >= 2);
    if n == 2 {
        let k = 2 * m;
        return (0..k)
            .map(|j| {
                let t = 2.0 * PI * (j as f64 + 0.5) / k as f64;
                (vec![t.cos(), t.sin()], 2.0 * PI / k as f64)
            })
            .collect();
    }
    let lower = sphere_rule(n - 1, m);
    let mut out = Vec::with_capacity(m * lower.len());
    for (c, wt) in gauss_gegenbauer(m, (n as f64 - 3.0) / 2.0) {
        let s = (1.0 - c * c).sqrt();
        for (p, wp) in &lower {
            let mut x = Vec::with_capacity(n);
            x.push(c);
            x.extend(p.iter().map(|v| s * v));
            out.push((x, wt * wp));
        }
    }
    out
}

/// Sphere rule resolved in the polar angle `θ` from the first axis:
/// `panels` Gauss-Legendre panels of `order` points on `[0, π]` with weight
/// `sin^{n-2} θ`, times a product rule of order `m` on the orthogonal
/// `S^{n-2}`. Suited to integrands sharply varying in `θ` only.
pub fn polar_sphere_rule(n: usize, panels: usize, order: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    assert!(n >= 3 && panels >= 1);
    let lower = sphere_rule(n - 1, m);
    let mut out = Vec::with_capacity(panels * order * lower.len());
    let dt = PI / panels as f64;
    for k in 0..panels {
        for (t, wt) in gauss_legendre_on(order, k as f64 * dt, (k + 1) as f64 * dt) {
            let (s, c) = t.sin_cos();
            let w = wt * s.powi(n as i32 - 2);
            for (p, wp) in &lower {
                let mut x = Vec::with_capacity(n);
                x.push(c);
                x.extend(p.iter().map(|v| s * v));
                out.push((x, w * wp));
            }
        }
    }
    out
}

/// Rotates sphere-rule points so that the first axis maps to the unit vector
/// `axis`. Uses a Householder reflection, which is orthogonal.
pub fn align_to(points: &mut [(Vec<f64>, f64)], axis: &[f64]) {
    let n = axis.len();
    let mut v: Vec<f64> = axis.to_vec();
    v[0] -= 1.0;
    let vv: f64 = v.iter().map(|a| a * a).sum();
    if vv < 1e-28 {
        return;
    }
    for (p, _) in points.iter_mut() {
        let pv: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
        for i in 0..n {
            p[i] -= 2.0 * pv / vv * v[i];
        }
    }
}

/// Ball rule on `B(0, R) ⊂ R^n`: `mr` Gauss-Legendre radii times a sphere rule
/// of order `ma`.
pub fn ball_rule(n: usize, radius: f64, mr: usize, ma: usize) -> Vec<(Vec<f64>, f64)> {
    let sphere = sphere_rule(n, ma);
    let mut out = Vec::with_capacity(mr * sphere.len());
    for (r, wr) in gauss_legendre_on(mr, 0.0, radius) {
        let jac = r.powi(n as i32 - 1);
        for (p, wp) in &sphere {
            out.push((p.iter().map(|v| r * v).collect(), wr * jac * wp));
        }
    }
    out
}
