//! The eleven acceptance criteria, one test each, each printing a PASS/FAIL line.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lichnerowicz_core::bubbles::{
    asympt_lp, asympt_lv, blowup_constants, bubble, bubble_pde_residual, cn_from_integral, quad_lp, quad_lv,
    BubbleParams, DirectionData, QuadSpec,
};
use lichnerowicz_core::conformal::{constraint_residuals, normalize, reconstruct, SystemCoefficients};
use lichnerowicz_core::diagnostics::{pohozaev_defect, Chart, ChartCoefficients, PohozaevQuad};
use lichnerowicz_core::geometry::{
    conformal_killing_deriv, h1_norm_sq, lame, Geometry, OneFormField, ScalarField, Spectral, SymTensorField,
};
use lichnerowicz_core::green::{killing_basis, refinement_cells, representation_residual, BumpForm};
use lichnerowicz_core::solver::{manufactured_forcing, solve_system, SolveOptions};
use lichnerowicz_core::sphere_area;
use lichnerowicz_harness::config::{DataSpec, ScheduleSpec, SolverSpec, SweepConfig, GeometrySpec, OutputSpec};
use lichnerowicz_harness::recipe::{PotentialRecipe, ScalarRecipe, TensorRecipe};
use lichnerowicz_harness::sweep::perturbed_data;
use lichnerowicz_harness::verify::random_band_limited;
use lichnerowicz_harness::{run_instability_demo, run_sweep, DemoOptions, Verdict};

fn sci(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", s.join(", "))
}

fn report(id: u32, title: &str, pass: bool, elapsed: Duration, limit: Duration, detail: String) {
    let timely = elapsed <= limit;
    let verdict = if pass && timely { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {verdict}: {title} [{:.2?} of {:.0?}] {detail}", elapsed, limit);
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(timely, "criterion {id} exceeded its time budget: {elapsed:.2?}");
}

#[test]
fn c01_lame_energy_identity() {
    let t = Instant::now();
    let g = Geometry::torus_2pi(3, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let w = random_band_limited(&g, &mut rng, 6);
        let lhs = lame(&w, &g).unwrap().inner(&w).unwrap();
        let lw = conformal_killing_deriv(&w, &g).unwrap();
        let rhs = 0.5 * lw.inner(&lw).unwrap();
        worst = worst.max((lhs - rhs).abs() / h1_norm_sq(&w, &g).unwrap());
    }
    report(
        1,
        "Lamé energy identity, 50 fields on 32³",
        worst < 1e-10,
        t.elapsed(),
        Duration::from_secs(10),
        format!("max defect / ‖W‖²_H1 = {worst:.3e}"),
    );
}

#[test]
fn c02_bubble_pde_residual() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for n in 3..=6 {
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = BubbleParams::new(n, rng.gen_range(0.3..3.0), rng.gen_range(0.5..4.0), c).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            worst = worst.max(bubble_pde_residual(&p, &x).unwrap());
        }
    }
    report(
        2,
        "bubble PDE residual, n = 3..6, 100 points each",
        worst < 1e-8,
        t.elapsed(),
        Duration::from_secs(1),
        format!("max relative residual = {worst:.3e}"),
    );
}

#[test]
fn c03_constants_consistency() {
    let t = Instant::now();
    let c6 = blowup_constants(6).unwrap().cn;
    let mut gap = 0.0f64;
    for n in 5..=7 {
        gap = gap.max((blowup_constants(n).unwrap().cn - cn_from_integral(n, 60).unwrap()).abs());
    }
    let k3 = blowup_constants(3).unwrap().kn_inv_n;
    let closed = 0.125 * 3f64.powf(1.5) * sphere_area(3);
    let pass = (c6 - 0.2).abs() < 1e-15 && gap < 1e-6 && (k3 - closed).abs() < 1e-9 && (k3 - 12.821).abs() < 1e-3;
    report(
        3,
        "C(6) = 0.2, two forms of C(n), K_3^-3",
        pass,
        t.elapsed(),
        Duration::from_secs(1),
        format!("C(6) = {c6}, form gap = {gap:.2e}, K_3^-3 = {k3:.9}"),
    );
}

fn unit(v: &[f64]) -> Vec<f64> {
    let r = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    v.iter().map(|t| t / r).collect()
}

#[test]
fn c04_asymptotics_against_quadrature() {
    let t = Instant::now();
    let p = BubbleParams::centred(3, 1.0, 1.0).unwrap();
    let d = DirectionData::new(
        0.3,
        vec![0.5, 1.0, 2.0],
        unit(&[1.0, 2.0, -0.5]),
        vec![unit(&[0.0, 1.0, 1.0]), unit(&[1.0, 0.0, 0.0]), unit(&[0.3, -0.4, 1.0])],
    )
    .unwrap();
    let x0: Vec<f64> = d.zeta0.iter().map(|v| d.eps * v).collect();
    let (mut lv, mut lp) = (0.0f64, 0.0f64);
    for s in [50.0, 100.0, 200.0] {
        let z: Vec<f64> = unit(&[0.3, -0.5, 0.8]).iter().map(|v| s * v).collect();
        let q = quad_lv(&x0, &p, &z, &QuadSpec::default()).unwrap().value;
        let a = asympt_lv(&d, &p, &z).unwrap();
        lv = lv.max((&q - &a).norm() / a.norm());
        for k in 0..3 {
            let dk: Vec<f64> = d.zeta_k[k].iter().map(|v| d.beta_k[k] * v).collect();
            let q = quad_lp(&dk, &p, &z, k, &QuadSpec::default()).unwrap().value;
            let a = asympt_lp(&d, &p, &z, k).unwrap();
            lp = lp.max((&q - &a).norm() / a.norm());
        }
    }
    report(
        4,
        "far-field asymptotics vs quadrature, n = 3, |z|/μ = 50, 100, 200",
        lv < 0.05 && lp < 0.10,
        t.elapsed(),
        Duration::from_secs(300),
        format!("max rel. error LV = {lv:.3e}, LP = {lp:.3e}"),
    );
}

#[test]
fn c05_green_representation() {
    let t = Instant::now();
    let f = BumpForm { radius: 1.0, power: 8, direction: vec![1.0, 0.0, 0.0] };
    let r: Vec<f64> =
        (0..4).map(|l| representation_residual(&f, &[0.0; 3], 1.0, refinement_cells(64, l)).unwrap()).collect();
    let ratios: Vec<f64> = r.windows(2).map(|w| w[0] / w[1]).collect();
    // |X(0)| = 1, so the residual is already relative
    let pass = ratios.iter().all(|q| (q - 2.0).abs() <= 0.4) && r[3] < 1e-2;
    report(
        5,
        "Green representation residual halves per level",
        pass,
        t.elapsed(),
        Duration::from_secs(120),
        format!("residuals {}, ratios {ratios:.3?}", sci(&r)),
    );
}

#[test]
fn c06_killing_dimension() {
    let t = Instant::now();
    let b = killing_basis(3, 1.0).unwrap();
    let samples: Vec<_> = (0..b.len()).map(|k| b.sample(|x| b.eval(k, x))).collect();
    let (mut ortho, mut lk) = (0.0f64, 0.0f64);
    for i in 0..b.len() {
        for j in 0..b.len() {
            let ip = b.inner(&samples[i], &samples[j]).unwrap();
            ortho = ortho.max((ip - if i == j { 1.0 } else { 0.0 }).abs());
        }
        for (x, _) in b.nodes() {
            lk = lk.max(b.killing_derivative(i, x).amax());
        }
    }
    report(
        6,
        "conformal Killing basis of the 3-ball",
        b.len() == 10 && ortho < 1e-10 && lk < 1e-10,
        t.elapsed(),
        Duration::from_secs(10),
        format!("dimension {}, orthonormality defect {ortho:.2e}, max |L K| {lk:.2e}", b.len()),
    );
}

#[test]
fn c07_instability_demo() {
    let t = Instant::now();
    let r = run_instability_demo(&[1.5, 1.1, 1.01], &DemoOptions::default()).unwrap();
    let worst_res = r.rows.iter().map(|x| x.scalar_residual.max(x.vector_residual)).fold(0.0, f64::max);
    let worst_sup = r.rows.iter().map(|x| x.sup_error).fold(0.0, f64::max);
    report(
        7,
        "blow-up family on S³, λ = 1.5, 1.1, 1.01, 4096 nodes",
        r.pass,
        t.elapsed(),
        Duration::from_secs(30),
        format!(
            "max residual {worst_res:.2e}, max sup error {worst_sup:.2e}, monotone {}, source spread {:.2}%",
            r.monotone,
            100.0 * r.source_spread
        ),
    );
}

#[test]
fn c08_manufactured_coupled_solve() {
    let t = Instant::now();
    let g = Geometry::torus_2pi(3, 32).unwrap();
    let u_star = ScalarField::from_fn(g, |x| 1.0 + 0.1 * x[0].cos() * x[1].cos() + 0.05 * x[2].cos());
    let w_star = OneFormField::from_fn(g, |x| vec![0.1 * x[0].sin(), 0.05 * x[1].sin() * x[2].cos(), 0.0]);
    let mut base = SystemCoefficients::constant(g, 0.0, 1.0, 2.0, 0.125).unwrap();
    base.x = OneFormField::from_fn(g, |x| vec![0.1 * x[0].sin(), 0.0, 0.05 * (2.0 * x[2]).sin()]);
    base.u_tensor = SymTensorField::from_fn(g, |x| {
        let s = 0.1 * x[0].cos();
        vec![s, 0.0, 0.0, 0.0, -s, 0.0, 0.0, 0.0, 0.0]
    });
    let c = manufactured_forcing(&u_star, &w_star, &base, 1e-8).unwrap();
    let opts = SolveOptions { max_outer: 15, damping: 1.0, ..Default::default() };
    let sol = solve_system(&c, &opts).unwrap();
    let eu = sol.u.zip_map(&u_star, |a, b| a - b).unwrap().sup_norm();
    let ew = sol.w.sub(&w_star).unwrap().max_abs();
    report(
        8,
        "manufactured coupled solve on 32³",
        sol.converged && sol.iterations <= 15 && eu < 1e-6 && ew < 1e-6,
        t.elapsed(),
        Duration::from_secs(120),
        format!("{} outer iterations, |u - u*| = {eu:.2e}, |W - W*| = {ew:.2e}", sol.iterations),
    );
}

fn round_trip_data() -> DataSpec {
    // all fields share a reflection centre, so the momentum source has zero mean
    let s = |t: &str| ScalarRecipe::parse(t).unwrap();
    DataSpec::unperturbed(
        s("bump(amp=0.3, radius=2.5, c1=3.141592653589793, c2=3.141592653589793, c3=3.141592653589793)"),
        s("constant(c=1) + bump(amp=0.5, radius=2, c1=3.141592653589793, c2=3.141592653589793, c3=3.141592653589793)"),
        s("constant(c=1) + bump(amp=0.3, radius=1.5, c1=3.141592653589793, c2=3.141592653589793, c3=3.141592653589793)"),
        TensorRecipe::zero(),
        PotentialRecipe::parse("constant(c=-0.5)").unwrap(),
    )
}

#[test]
fn c09_constraint_round_trip() {
    let t = Instant::now();
    let spec = round_trip_data();
    let mut res = Vec::new();
    for n in [16, 32, 64] {
        let g = Geometry::torus_2pi(3, n).unwrap();
        let c = normalize(&perturbed_data(&spec, &g, 0.0).unwrap()).unwrap();
        let sol = solve_system(&c, &SolveOptions { require_coercive: false, ..Default::default() }).unwrap();
        assert!(sol.converged);
        // measure on 2N so truncation error is visible
        let fine = Geometry::torus_2pi(3, 2 * n).unwrap();
        let sp = Spectral::new(&g).unwrap();
        let u = ScalarField::new(fine, sp.interpolate_to(sol.u.values(), &fine).unwrap()).unwrap();
        let w = OneFormField::new(fine, sol.w.comps().iter().map(|c| sp.interpolate_to(c, &fine).unwrap()).collect())
            .unwrap();
        let d = perturbed_data(&spec, &fine, 0.0).unwrap();
        res.push(constraint_residuals(&reconstruct(&u, &w, &d).unwrap(), &d.potential).unwrap());
    }
    let ratios: Vec<(f64, f64)> = res.windows(2).map(|w| (w[0].0 / w[1].0, w[0].1 / w[1].1)).collect();
    report(
        9,
        "constraint residuals of reconstructed data, 16³ → 32³ → 64³",
        ratios.iter().all(|(h, m)| *h >= 3.0 && *m >= 3.0),
        t.elapsed(),
        Duration::from_secs(600),
        format!("(H, M) residuals {res:.3?}, ratios {ratios:.2?}"),
    );
}

#[test]
fn c10_focusing_stability_sweep() {
    let t = Instant::now();
    let s = |t: &str| ScalarRecipe::parse(t).unwrap();
    let cfg = SweepConfig {
        geometry: GeometrySpec { dim: 3, resolution: 16, period: 2.0 * PI },
        data: DataSpec {
            d_pi: s("cos(k1=1) + cos(k2=1)"),
            d_tau: s("cos(k3=1)"),
            ..DataSpec::unperturbed(
                ScalarRecipe::zero(),
                s("constant(c=1) + cos(k1=1, amp=0.2) + cos(k2=1, amp=0.2)"),
                ScalarRecipe::zero(),
                TensorRecipe::zero(),
                // B = 2V - (2/3)τ² ≡ 2 with τ ≡ 0
                PotentialRecipe::parse("constant(c=1)").unwrap(),
            )
        },
        schedule: ScheduleSpec::geometric(1.0, 0.5, 9).unwrap(),
        solver: SolverSpec::default(),
        output: OutputSpec::default(),
    };
    let (pass, detail) = match run_sweep(&cfg) {
        Ok(r) => (
            r.summary.verdict == Verdict::StableBand && r.summary.all_converged && r.summary.sup_spread < 0.10,
            format!("verdict {}, spread {:.3}", r.summary.verdict, r.summary.sup_spread),
        ),
        Err(e) => (false, format!("{e}; on a flat torus h ≤ 0 < f admits no positive solution")),
    };
    report(10, "focusing stability sweep on T³, ε = 2^-α, α ≤ 8", pass, t.elapsed(), Duration::from_secs(600), detail);
}

#[test]
fn c11_pohozaev_exactness() {
    let t = Instant::now();
    let f0 = 2.0;
    let p = BubbleParams::centred(3, 0.7, f0).unwrap();
    let mut rel = Vec::new();
    for m in [17, 33, 65] {
        let chart = Chart::centred(&[0.0; 3], 1.5, m).unwrap();
        let v = chart.sample(|x| bubble(&p, x).unwrap());
        let c = ChartCoefficients::constant(&chart, 0.0, f0, 0.0);
        let r = pohozaev_defect(&chart, &v, Some(&c), &[0.0; 3], 1.0, PohozaevQuad::default()).unwrap();
        rel.push(r.defect / r.interior.abs());
    }
    // spacing halves per level; the interpolant is fourth order
    let orders: Vec<f64> = rel.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    report(
        11,
        "Pohozaev defect of the exact bubble",
        orders.iter().all(|o| (3.5..=4.5).contains(o)) && rel[2] < 1e-4,
        t.elapsed(),
        Duration::from_secs(60),
        format!("relative defects {}, observed orders {orders:.2?}", sci(&rel)),
    );
}
