use super::*;
use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn unit(v: &[f64]) -> Vec<f64> {
    let r = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    v.iter().map(|t| t / r).collect()
}

fn dirs3() -> DirectionData {
    DirectionData::new(
        0.3,
        vec![0.5, 1.0, 2.0],
        unit(&[1.0, 2.0, -0.5]),
        vec![unit(&[0.0, 1.0, 1.0]), unit(&[1.0, 0.0, 0.0]), unit(&[0.3, -0.4, 1.0])],
    )
    .unwrap()
}

#[test]
fn value_at_centre() {
    let p = BubbleParams::new(3, 0.01, 2.0, vec![0.5, 0.1, -0.2]).unwrap();
    assert_relative_eq!(bubble(&p, &[0.5, 0.1, -0.2]).unwrap(), 10.0, epsilon = 1e-12);
}

#[test]
fn unit_normalised_profile_values() {
    let p = BubbleParams::centred(3, 1.0, 3.0).unwrap();
    assert_relative_eq!(bubble(&p, &[0.0, 1.0, 0.0]).unwrap(), 0.5f64.sqrt(), epsilon = 1e-14);
    assert_eq!(standard_profile(4, 2.0, &[0.0; 4]).unwrap(), 1.0);
    assert_relative_eq!(standard_profile(4, 8.0, &[0.0, 0.0, 1.0, 0.0]).unwrap(), 0.5, epsilon = 1e-14);
}

#[test]
fn invalid_params_rejected() {
    assert!(BubbleParams::centred(3, 0.0, 1.0).is_err());
    assert!(BubbleParams::centred(3, 1.0, -1.0).is_err());
    assert_eq!(BubbleParams::centred(2, 1.0, 1.0).unwrap_err(), BubbleError::Dimension(2));
    assert_eq!(
        DirectionData::new(1.0, vec![0.0; 3], vec![1.0, 1.0, 0.0], vec![vec![1.0, 0.0, 0.0]; 3]).unwrap_err(),
        BubbleError::NotUnit(0)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_is_bubble_with_unit_scale(x in proptest::collection::vec(-5.0f64..5.0, 4), f in 0.1f64..10.0) {
        let p = BubbleParams::centred(4, 1.0, f).unwrap();
        prop_assert_eq!(standard_profile(4, f, &x).unwrap(), bubble(&p, &x).unwrap());
    }

    #[test]
    fn bubble_rescaling(x in proptest::collection::vec(-3.0f64..3.0, 3), mu in 0.05f64..4.0, lam in 0.1f64..10.0) {
        let p = BubbleParams::centred(3, mu, 1.7).unwrap();
        let q = BubbleParams::centred(3, lam * mu, 1.7).unwrap();
        let xs: Vec<f64> = x.iter().map(|t| lam * t).collect();
        let lhs = bubble(&p, &x).unwrap();
        let rhs = lam.powf(0.5) * bubble(&q, &xs).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn theta_dominates_mu(mu in 1e-3f64..10.0, z in proptest::collection::vec(-10.0f64..10.0, 3)) {
        prop_assert!(theta(mu, &z) >= mu);
    }
}

#[test]
fn theta_examples() {
    assert_eq!(theta(2.5, &[0.0; 3]), 2.5);
    assert_eq!(theta(3.0, &[4.0, 0.0]), 5.0);
}

#[test]
fn pde_residual_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 3..=6 {
        for _ in 0..100 {
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = BubbleParams::new(n, rng.gen_range(0.01..2.0), rng.gen_range(0.2..5.0), c.clone()).unwrap();
            let x: Vec<f64> = c.iter().map(|ci| ci + rng.gen_range(-3.0..3.0)).collect();
            assert!(bubble_pde_residual(&p, &x).unwrap() < 1e-8);
        }
    }
}

#[test]
fn hessian_matches_finite_differences() {
    let p = BubbleParams::new(4, 0.7, 1.3, vec![0.1, 0.0, -0.2, 0.3]).unwrap();
    let x = [0.5, -0.4, 0.2, 0.9];
    let h = 1e-5;
    let hess = bubble_hessian(&p, &x).unwrap();
    let g0 = bubble_gradient(&p, &x).unwrap();
    for j in 0..4 {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let fd = (bubble(&p, &xp).unwrap() - bubble(&p, &xm).unwrap()) / (2.0 * h);
        assert!((fd - g0[j]).abs() < 1e-8);
        let gp = bubble_gradient(&p, &xp).unwrap();
        let gm = bubble_gradient(&p, &xm).unwrap();
        for i in 0..4 {
            assert!(((gp[i] - gm[i]) / (2.0 * h) - hess[(i, j)]).abs() < 1e-7);
        }
    }
}

#[test]
fn constants_closed_forms() {
    assert_relative_eq!(blowup_constants(6).unwrap().cn, 0.2, epsilon = 1e-15);
    assert_eq!(blowup_constants(4).unwrap().cn, 0.0);
    let k3 = blowup_constants(3).unwrap().kn_inv_n;
    assert!((k3 - 0.125 * 3f64.powf(1.5) * 2.0 * PI * PI).abs() < 1e-9);
    assert!((k3 - 12.821).abs() < 1e-3);
    let c = blowup_constants(5).unwrap();
    assert_relative_eq!(c.c2, 5.0 * c.c1, epsilon = 1e-14);
}

#[test]
fn integral_form_of_cn_agrees() {
    for n in 5..=7 {
        let c = blowup_constants(n).unwrap().cn;
        assert!((cn_from_integral(n, 60).unwrap() - c).abs() < 1e-6, "n = {n}");
    }
    assert!(profile_integral(4, 10).is_err());
}

#[test]
fn bubble_mass_matches_radial_quadrature() {
    let p = BubbleParams::centred(4, 0.3, 1.5).unwrap();
    let ex = crate::critical_exponent(4);
    // r = s/(1 - s) maps [0, 1) onto [0, ∞)
    let s: f64 = gauss_legendre_on(200, 0.0, 1.0)
        .iter()
        .map(|(s, w)| {
            let r = s / (1.0 - s);
            w * r.powi(3) * bubble(&p, &[r, 0.0, 0.0, 0.0]).unwrap().powf(ex) / (1.0 - s).powi(2)
        })
        .sum();
    assert_relative_eq!(s * sphere_area(3), bubble_mass(&p), max_relative = 1e-10);
}

#[test]
fn asymptotic_lv_orthogonality_and_trace() {
    let d = DirectionData::new(1.0, vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], vec![vec![1.0, 0.0, 0.0, 0.0]; 4]).unwrap();
    let p = BubbleParams::centred(4, 0.1, 1.0).unwrap();
    let m = asympt_lv(&d, &p, &[0.0, 3.0, 0.0, 0.0]).unwrap();
    assert_eq!(m[(2, 2)], 0.0);
    assert_eq!(m[(3, 3)], 0.0);
    let m = asympt_lv(&d, &p, &[0.4, -1.0, 2.0, 0.3]).unwrap();
    assert!(m.trace().abs() < 1e-15 * m.norm());
    assert!((&m - m.transpose()).norm() < 1e-15 * m.norm());
    assert_eq!(asympt_lv(&d, &p, &[0.0; 4]).unwrap_err(), BubbleError::AtCentre);
}

#[test]
fn asymptotic_lv_is_mass_times_kernel_derivative() {
    let d = dirs3();
    let p = BubbleParams::new(3, 0.2, 1.4, vec![0.1, 0.2, 0.3]).unwrap();
    let z = [2.0, -1.0, 0.5];
    let rel: Vec<f64> = z.iter().zip(&p.center).map(|(a, b)| a - b).collect();
    let exact = stress_apply(&rel, &d.zeta0).unwrap() * (d.eps * bubble_mass(&p));
    let a = asympt_lv(&d, &p, &z).unwrap();
    assert!((a - &exact).norm() < 1e-12 * exact.norm());
}

#[test]
fn asymptotic_lp_is_second_moment_times_kernel_hessian() {
    // P_k ≈ -(1/n) ∫|y|²B^{2*} · β ∂_k G ζ_k, with ∫|y|²B^{2*} = n μ² M/f · n/n
    let d = dirs3();
    let p = BubbleParams::centred(3, 0.2, 1.4).unwrap();
    let z = [2.0, -1.0, 0.5];
    let m2_over_n = 3.0 * p.mu * p.mu * bubble_mass(&p) / p.f_center;
    let h = 1e-5;
    for k in 0..3 {
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[k] += h;
        zm[k] -= h;
        let dk = (stress_apply(&zp, &d.zeta_k[k]).unwrap() - stress_apply(&zm, &d.zeta_k[k]).unwrap()) / (2.0 * h);
        let exact = dk * (-m2_over_n * d.beta_k[k]);
        let a = asympt_lp(&d, &p, &z, k).unwrap();
        assert!((a - &exact).norm() < 1e-8 * exact.norm(), "k = {k}");
    }
}

#[test]
fn asymptotic_lp_zero_weight_and_decay() {
    let mut d = dirs3();
    let p = BubbleParams::centred(3, 0.2, 1.4).unwrap();
    let z = [1.0, 2.0, -0.7];
    let z2: Vec<f64> = z.iter().map(|t| 2.0 * t).collect();
    let a = asympt_lp(&d, &p, &z, 1).unwrap();
    let b = asympt_lp(&d, &p, &z2, 1).unwrap();
    assert!((b - a * 0.125).norm() < 1e-14);
    d.beta_k[2] = 0.0;
    assert_eq!(asympt_lp(&d, &p, &z, 2).unwrap().norm(), 0.0);
    assert_eq!(asympt_lp(&d, &p, &z, 3).unwrap_err(), BubbleError::Axis(3));
}

#[test]
fn second_moment_ratio() {
    // ∫|y|²B^{2*} / ∫B^{2*} = n μ²/f · n/(n-2) · (n-2)/n ... checked numerically
    let p = BubbleParams::centred(5, 0.5, 2.0).unwrap();
    let ex = crate::critical_exponent(5);
    let (mut m0, mut m2) = (0.0, 0.0);
    for (s, w) in gauss_legendre_on(300, 0.0, 1.0) {
        let r = s / (1.0 - s);
        let v = w * r.powi(4) * bubble(&p, &[r, 0.0, 0.0, 0.0, 0.0]).unwrap().powf(ex) / (1.0 - s).powi(2);
        m0 += v;
        m2 += v * r * r;
    }
    assert_relative_eq!(m2 / m0, 5.0 * 5.0 * p.mu * p.mu / p.f_center, max_relative = 1e-8);
}

#[test]
fn quadrature_of_zero_form_is_zero() {
    let p = BubbleParams::centred(3, 0.1, 1.0).unwrap();
    let r = quad_lv(&[0.0; 3], &p, &[1.0, 0.0, 0.0], &QuadSpec::default()).unwrap();
    assert_eq!(r.value.norm(), 0.0);
}

#[test]
fn quadrature_is_traceless_symmetric_and_matches_far_field() {
    let p = BubbleParams::centred(3, 1.0, 1.0).unwrap();
    let d = dirs3();
    let x0: Vec<f64> = d.zeta0.iter().map(|t| d.eps * t).collect();
    let z = [60.0, 30.0, -40.0];
    let q = quad_lv(&x0, &p, &z, &QuadSpec::default()).unwrap();
    let m = &q.value;
    assert!(m.trace().abs() < 1e-8 * m.norm());
    assert!((m - m.transpose()).norm() < 1e-8 * m.norm());
    assert!(q.tail_bound < 1e-6 * m.norm());
    let a = asympt_lv(&d, &p, &z).unwrap();
    assert!((m - &a).norm() / a.norm() < 0.05);
}

#[test]
fn quadrature_converges_under_refinement() {
    let p = BubbleParams::centred(3, 1.0, 1.0).unwrap();
    let x0 = [0.0, 0.6, 0.8];
    let z = [3.0, 1.0, 0.5];
    let coarse = quad_lv(&x0, &p, &z, &QuadSpec { angular_panels: 12, radial_order: 10, ..QuadSpec::default() }).unwrap();
    let fine = quad_lv(&x0, &p, &z, &QuadSpec { angular_panels: 32, radial_order: 16, ..QuadSpec::default() }).unwrap();
    let e = (coarse.value - &fine.value).norm() / fine.value.norm();
    assert!(e < 1e-5, "{e}");
}

#[test]
fn envelope_bound_holds_on_a_grid() {
    let p = BubbleParams::centred(3, 1.0, 1.0).unwrap();
    let eps = 0.5;
    let x0 = [eps, 0.0, 0.0];
    let spec = QuadSpec { angular_panels: 8, radial_order: 8, ..QuadSpec::default() };
    let mut ratios = vec![];
    for r in [0.0, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0] {
        let z = [r * 0.6, r * 0.8, 0.0];
        let m = quad_lv(&x0, &p, &z, &spec).unwrap().value.norm();
        ratios.push(m / (eps * theta(p.mu, &z).powi(-2)));
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(max.is_finite() && max < 10.0, "{ratios:?}");
}

#[test]
fn far_point_rejected() {
    let p = BubbleParams::centred(3, 1.0, 1.0).unwrap();
    assert_eq!(
        quad_lv(&[1.0, 0.0, 0.0], &p, &[600.0, 0.0, 0.0], &QuadSpec::default()).unwrap_err(),
        BubbleError::Truncation
    );
    let tight = QuadSpec { truncation: 20.0, tail_tol: 1e-12, ..QuadSpec::default() };
    assert!(matches!(quad_lv(&[1.0, 0.0, 0.0], &p, &[2.0, 0.0, 0.0], &tight), Err(BubbleError::TailBudget { .. })));
}

#[test]
fn lv_and_lp_asymptotics_against_quadrature() {
    let p = BubbleParams::centred(3, 1.0, 1.0).unwrap();
    let d = dirs3();
    let x0: Vec<f64> = d.zeta0.iter().map(|t| d.eps * t).collect();
    for s in [50.0, 100.0, 200.0] {
        let z: Vec<f64> = unit(&[0.3, -0.5, 0.8]).iter().map(|t| s * t).collect();
        let q = quad_lv(&x0, &p, &z, &QuadSpec::default()).unwrap().value;
        let a = asympt_lv(&d, &p, &z).unwrap();
        assert!((&q - &a).norm() / a.norm() < 0.05);
        for k in 0..3 {
            let dk: Vec<f64> = d.zeta_k[k].iter().map(|t| d.beta_k[k] * t).collect();
            let q = quad_lp(&dk, &p, &z, k, &QuadSpec::default()).unwrap().value;
            let a = asympt_lp(&d, &p, &z, k).unwrap();
            assert!((&q - &a).norm() / a.norm() < 0.10, "s = {s}, k = {k}");
        }
    }
}
