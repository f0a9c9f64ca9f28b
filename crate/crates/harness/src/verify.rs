//! Invariant suites across the core modules, as a pass/fail table.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use lichnerowicz_core::bubbles::{
    blowup_constants, bubble, bubble_pde_residual, cn_from_integral, BubbleParams,
};
use lichnerowicz_core::diagnostics::{
    conformal_covariance_residuals, pohozaev_defect, Chart, ChartCoefficients, PohozaevQuad,
};
use lichnerowicz_core::geometry::{conformal_killing_deriv, h1_norm_sq, lame, Geometry, OneFormField};
use lichnerowicz_core::green::{fundamental, fundamental_hessian, killing_basis, lame_of_fundamental};
use lichnerowicz_core::sphere_area;

use crate::{worker_pool, HarnessError};

/// Knobs of the suite; `cn` is the `C(n)` under test.
#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub energy_resolution: usize,
    pub energy_samples: usize,
    pub seed: u64,
    pub cn: fn(usize) -> f64,
}

fn library_cn(n: usize) -> f64 {
    blowup_constants(n).map(|c| c.cn).unwrap_or(f64::NAN)
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { energy_resolution: 32, energy_samples: 50, seed: 2024, cn: library_cn }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub group: &'static str,
    pub name: &'static str,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub selector: String,
    pub rows: Vec<CheckRow>,
    pub pass: bool,
}

type Check = fn(&SuiteOptions) -> Result<f64, HarnessError>;

const CHECKS: [(&str, &str, f64, Check); 10] = [
    ("geometry", "energy", 1e-10, energy),
    ("bubbles", "bubble_residual", 1e-8, bubble_residual),
    ("constants", "constants", 1e-6, constants),
    ("green", "kernel_symmetry", 1e-14, kernel_symmetry),
    ("green", "kernel_homogeneity", 1e-13, kernel_homogeneity),
    ("green", "kernel_harmonic", 1e-12, kernel_harmonic),
    ("green", "killing_dimension", 1e-10, killing_dimension),
    ("diagnostics", "pohozaev", 1e-4, pohozaev),
    ("diagnostics", "covariance", 1e-4, covariance),
    ("bubbles", "bubble_mass_scaling", 1e-12, bubble_mass_scaling),
];

/// Names accepted by the selector: `all`, a group or a single check.
pub fn selectors() -> Vec<&'static str> {
    let mut v = vec!["all"];
    for (g, n, _, _) in CHECKS {
        if !v.contains(&g) {
            v.push(g);
        }
        v.push(n);
    }
    v
}

pub fn run_verification_suite(selector: &str) -> Result<SuiteReport, HarnessError> {
    run_verification_suite_with(selector, &SuiteOptions::default())
}

pub fn run_verification_suite_with(selector: &str, opts: &SuiteOptions) -> Result<SuiteReport, HarnessError> {
    let chosen: Vec<_> =
        CHECKS.iter().filter(|(g, n, _, _)| selector == "all" || selector == *g || selector == *n).collect();
    let pool = worker_pool()?;
    let rows: Vec<CheckRow> = pool.install(|| {
        chosen
            .par_iter()
            .map(|(group, name, tol, f)| {
                // an error inside a check is a failed row, not a failed suite
                let defect = f(opts).unwrap_or(f64::NAN);
                CheckRow { group, name, defect, tolerance: *tol, pass: defect <= *tol }
            })
            .collect()
    });
    let pass = !rows.is_empty() && rows.iter().all(|r| r.pass);
    Ok(SuiteReport { selector: selector.to_string(), rows, pass })
}

/// Random band-limited 1-form with integer wavevectors `|k_i| ≤ 4`.
pub fn random_band_limited(g: &Geometry, rng: &mut ChaCha8Rng, modes: usize) -> OneFormField {
    let n = g.dim();
    let terms: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..modes)
        .map(|_| {
            let k = (0..n).map(|_| rng.gen_range(-4i32..=4) as f64).collect();
            let amp = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (k, amp, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    OneFormField::from_fn(*g, |x| {
        let mut v = vec![0.0; n];
        for (k, amp, ph) in &terms {
            let arg = k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + ph;
            for (vi, ai) in v.iter_mut().zip(amp) {
                *vi += ai * arg.cos();
            }
        }
        v
    })
}

/// `max |∫⟨Δ⃗W, W⟩ - ½∫|LW|²| / ‖W‖²_{H¹}` over random fields.
fn energy(o: &SuiteOptions) -> Result<f64, HarnessError> {
    let g = Geometry::torus_2pi(3, o.energy_resolution)?;
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut worst = 0.0f64;
    for _ in 0..o.energy_samples {
        let w = random_band_limited(&g, &mut rng, 6);
        let lhs = lame(&w, &g)?.inner(&w)?;
        let lw = conformal_killing_deriv(&w, &g)?;
        let rhs = 0.5 * lw.inner(&lw)?;
        worst = worst.max((lhs - rhs).abs() / h1_norm_sq(&w, &g)?);
    }
    Ok(worst)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..r)).collect()
}

fn bubble_residual(o: &SuiteOptions) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut worst = 0.0f64;
    for n in 3..=6 {
        let p = BubbleParams::new(n, rng.gen_range(0.5..2.0), rng.gen_range(0.5..3.0), random_point(&mut rng, n, 1.0))
            .map_err(HarnessError::check)?;
        for _ in 0..100 {
            let x = random_point(&mut rng, n, 3.0);
            worst = worst.max(bubble_pde_residual(&p, &x).map_err(HarnessError::check)?);
        }
    }
    Ok(worst)
}

/// `C(6) = 0.2`, the integral form of `C(n)` for `n = 5, 6, 7` and the closed
/// form of `K_3^{-3}`.
fn constants(o: &SuiteOptions) -> Result<f64, HarnessError> {
    let cn = o.cn;
    let mut d = (cn(6) - 0.2).abs();
    for n in 5..=7 {
        d = d.max((cn(n) - cn_from_integral(n, 60).map_err(HarnessError::check)?).abs());
    }
    let k3 = blowup_constants(3).map_err(HarnessError::check)?.kn_inv_n;
    let closed = 0.125 * 3f64.powf(1.5) * sphere_area(3);
    Ok(d.max((k3 - closed).abs()))
}

fn kernel_symmetry(o: &SuiteOptions) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut worst = 0.0f64;
    for n in 3..=6 {
        for _ in 0..50 {
            let y = random_point(&mut rng, n, 2.0);
            let g = fundamental(&y, n).map_err(HarnessError::check)?;
            let neg: Vec<f64> = y.iter().map(|t| -t).collect();
            let gn = fundamental(&neg, n).map_err(HarnessError::check)?;
            let scale = g.amax();
            worst = worst.max((&g - g.transpose()).amax() / scale).max((&g - gn).amax() / scale);
        }
    }
    Ok(worst)
}

fn kernel_homogeneity(o: &SuiteOptions) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut worst = 0.0f64;
    for n in 3..=6 {
        for _ in 0..50 {
            let y = random_point(&mut rng, n, 2.0);
            let t: f64 = rng.gen_range(0.1..10.0);
            let ty: Vec<f64> = y.iter().map(|v| t * v).collect();
            let a = fundamental(&ty, n).map_err(HarnessError::check)?;
            let b = fundamental(&y, n).map_err(HarnessError::check)? * t.powi(2 - n as i32);
            worst = worst.max((&a - &b).amax() / b.amax());
        }
    }
    Ok(worst)
}

/// `Δ⃗G = 0` away from the origin, relative to the size of the Hessian.
fn kernel_harmonic(o: &SuiteOptions) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut worst = 0.0f64;
    for n in 3..=6 {
        for _ in 0..50 {
            let y = random_point(&mut rng, n, 2.0);
            let h = fundamental_hessian(&y, n).map_err(HarnessError::check)?;
            let scale = h.iter().flatten().fold(0.0f64, |m, a| m.max(a.amax()));
            worst = worst.max(lame_of_fundamental(&y, n).map_err(HarnessError::check)?.amax() / scale);
        }
    }
    Ok(worst)
}

/// `|dim - 10|`, the orthonormality defect and `max ‖L_ξ K‖_∞` for `n = 3`.
fn killing_dimension(_: &SuiteOptions) -> Result<f64, HarnessError> {
    let b = killing_basis(3, 1.0).map_err(HarnessError::check)?;
    let mut d = (b.len() as f64 - 10.0).abs();
    let samples: Vec<_> = (0..b.len()).map(|k| b.sample(|x| b.eval(k, x))).collect();
    for i in 0..b.len() {
        for j in 0..b.len() {
            let ip = b.inner(&samples[i], &samples[j]).map_err(HarnessError::check)?;
            d = d.max((ip - if i == j { 1.0 } else { 0.0 }).abs());
        }
        for (x, _) in b.nodes() {
            d = d.max(b.killing_derivative(i, x).amax());
        }
    }
    Ok(d)
}

/// Relative Pohozaev defect of an exact bubble on a 49³ chart.
fn pohozaev(_: &SuiteOptions) -> Result<f64, HarnessError> {
    let f0 = 2.0;
    let p = BubbleParams::centred(3, 0.7, f0).map_err(HarnessError::check)?;
    let chart = Chart::centred(&[0.0; 3], 1.5, 49).map_err(HarnessError::check)?;
    let v = chart.sample(|x| bubble(&p, x).unwrap_or(f64::NAN));
    let c = ChartCoefficients::constant(&chart, 0.0, f0, 0.0);
    let r = pohozaev_defect(&chart, &v, Some(&c), &[0.0; 3], 1.0, PohozaevQuad::default())
        .map_err(HarnessError::check)?;
    Ok(r.defect / r.interior.abs())
}

/// Largest of the three covariance defects for `φ = 1 + 0.1|x|²` on 25³ nodes.
fn covariance(o: &SuiteOptions) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let chart = Chart::centred(&[0.0; 3], 0.5, 25).map_err(HarnessError::check)?;
    let mut field = || {
        let k: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let s: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        chart.sample(|x| 1.5 + 0.2 * (k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + s).sin())
    };
    let v = field();
    let x: Vec<Vec<f64>> = (0..3).map(|_| field()).collect();
    let phi = chart.sample(|p| 1.0 + 0.1 * p.iter().map(|t| t * t).sum::<f64>());
    let r = conformal_covariance_residuals(&chart, &v, &x, &phi, 6).map_err(HarnessError::check)?;
    Ok(r.scalar.max(r.killing).max(r.lame))
}

/// `B_μ(μ x) = μ^{1-n/2} B_1(x)` at random points.
fn bubble_mass_scaling(o: &SuiteOptions) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut worst = 0.0f64;
    for n in 3..=6 {
        let mu: f64 = rng.gen_range(0.2..5.0);
        let f: f64 = rng.gen_range(0.5..3.0);
        let p1 = BubbleParams::centred(n, 1.0, f).map_err(HarnessError::check)?;
        let pm = BubbleParams::centred(n, mu, f).map_err(HarnessError::check)?;
        for _ in 0..20 {
            let x = random_point(&mut rng, n, 3.0);
            let mx: Vec<f64> = x.iter().map(|t| mu * t).collect();
            let a = bubble(&pm, &mx).map_err(HarnessError::check)?;
            let b = mu.powf(1.0 - n as f64 / 2.0) * bubble(&p1, &x).map_err(HarnessError::check)?;
            worst = worst.max((a - b).abs() / b);
        }
    }
    Ok(worst)
}
