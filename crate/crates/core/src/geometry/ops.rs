use super::{
    sym_index, sym_len, Geometry, GeometryError, OneFormField, RadialStencil, ScalarField, Spectral,
    SymTensorField,
};

fn radial_stencil(g: &Geometry) -> RadialStencil {
    RadialStencil::new(g.resolution(), g.spacing())
}

fn cot(r: f64) -> f64 {
    r.cos() / r.sin()
}

fn radial_profile(w: &OneFormField) -> Result<&[f64], GeometryError> {
    if w.comps()[1..].iter().any(|c| c.iter().any(|&v| v != 0.0)) {
        return Err(GeometryError::NotRadial);
    }
    Ok(w.comp(0))
}

/// Radial conformal Killing coefficient `A = (2(n-1)/n)(w' - cot r · w)`.
fn radial_ck_coefficient(g: &Geometry, w: &[f64]) -> Vec<f64> {
    let n = g.dim() as f64;
    let st = radial_stencil(g);
    let dw = st.d1(w);
    let r = g.radii().expect("sphere grid");
    (0..w.len()).map(|j| 2.0 * (n - 1.0) / n * (dw[j] - cot(r[j]) * w[j])).collect()
}

/// Positive Laplace-Beltrami operator `Δ_g f = -div_g ∇f`.
pub fn laplace_beltrami(f: &ScalarField, g: &Geometry) -> Result<ScalarField, GeometryError> {
    g.check(f.geometry())?;
    if g.is_torus() {
        let sp = Spectral::new(g)?;
        return Ok(ScalarField::raw(*g, sp.laplacian(f.values())));
    }
    let st = radial_stencil(g);
    let d1 = st.d1(f.values());
    let d2 = st.d2(f.values());
    let r = g.radii()?;
    let nm1 = g.dim() as f64 - 1.0;
    let values = (0..r.len()).map(|j| -d2[j] - nm1 * cot(r[j]) * d1[j]).collect();
    Ok(ScalarField::raw(*g, values))
}

/// Gradient `∂_a f`, as a one-form (radial derivative only on the sphere).
pub fn gradient(f: &ScalarField, g: &Geometry) -> Result<OneFormField, GeometryError> {
    g.check(f.geometry())?;
    if g.is_torus() {
        let sp = Spectral::new(g)?;
        return Ok(OneFormField::raw(*g, sp.gradient(f.values())));
    }
    let d = radial_stencil(g).d1(f.values());
    OneFormField::radial(*g, d)
}

/// Conformal Killing derivative `L_g W = ∇W + ∇W^T - (2/n)(div W) g`.
pub fn conformal_killing_deriv(w: &OneFormField, g: &Geometry) -> Result<SymTensorField, GeometryError> {
    g.check(w.geometry())?;
    if g.is_torus() {
        let sp = Spectral::new(g)?;
        return Ok(SymTensorField::raw(*g, sp.conformal_killing(w.comps())));
    }
    let n = g.dim();
    let a = radial_ck_coefficient(g, radial_profile(w)?);
    let m = a.len();
    let mut comps = vec![vec![0.0; m]; sym_len(n)];
    comps[sym_index(n, 0, 0)] = a.clone();
    for i in 1..n {
        comps[sym_index(n, i, i)] = a.iter().map(|v| -v / (n as f64 - 1.0)).collect();
    }
    Ok(SymTensorField::raw(*g, comps))
}

/// Divergence of a symmetric tensor. Torus only.
pub fn divergence_sym(t: &SymTensorField, g: &Geometry) -> Result<OneFormField, GeometryError> {
    g.check(t.geometry())?;
    let sp = Spectral::new(g)?;
    Ok(OneFormField::raw(*g, sp.divergence_sym(t.comps())))
}

/// Lamé operator `-div_g L_g W`.
pub fn lame(w: &OneFormField, g: &Geometry) -> Result<OneFormField, GeometryError> {
    g.check(w.geometry())?;
    if g.is_torus() {
        let sp = Spectral::new(g)?;
        return Ok(OneFormField::raw(*g, sp.lame(w.comps())));
    }
    // radial: -(A' + n cot r A)
    let n = g.dim() as f64;
    let a = radial_ck_coefficient(g, radial_profile(w)?);
    let da = radial_stencil(g).d1(&a);
    let r = g.radii()?;
    let out = (0..a.len()).map(|j| -(da[j] + n * cot(r[j]) * a[j])).collect();
    OneFormField::radial(*g, out)
}

/// Solves `lame(W) = F - P F` where `P` projects onto the kernel (constant
/// forms). Returns `W` (mean-free) and `‖P F‖_{L²}`.
pub fn lame_invert(f: &OneFormField, g: &Geometry) -> Result<(OneFormField, f64), GeometryError> {
    g.check(f.geometry())?;
    if !g.is_torus() {
        return Err(GeometryError::Unsupported("Lamé inversion is spectral and needs a torus"));
    }
    let sp = Spectral::new(g)?;
    let (w, defect) = sp.lame_invert(f.comps());
    Ok((OneFormField::raw(*g, w), defect))
}

/// `‖W‖²_{L²} + ‖∇W‖²_{L²}` on the torus.
pub fn h1_norm_sq(w: &OneFormField, g: &Geometry) -> Result<f64, GeometryError> {
    g.check(w.geometry())?;
    let sp = Spectral::new(g)?;
    Ok(sp.h1_norm_sq(w.comps()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t3(n: usize) -> Geometry {
        Geometry::torus_2pi(3, n).unwrap()
    }

    /// Random real one-form built from a few low Fourier modes.
    fn random_band_limited(g: &Geometry, seed: u64, modes: usize) -> OneFormField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.dim();
        let terms: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..modes)
            .map(|_| {
                let k: Vec<f64> = (0..n).map(|_| rng.gen_range(-4i32..=4) as f64).collect();
                let amp: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (k, amp, rng.gen_range(0.0..6.28))
            })
            .collect();
        OneFormField::from_fn(*g, |x| {
            let mut v = vec![0.0; n];
            for (k, amp, ph) in &terms {
                let arg: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + ph;
                for a in 0..n {
                    v[a] += amp[a] * arg.cos();
                }
            }
            v
        })
    }

    #[test]
    fn constants_are_harmonic() {
        let g = t3(16);
        let f = ScalarField::constant(g, 3.5);
        assert!(laplace_beltrami(&f, &g).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn sine_is_eigenfunction() {
        let g = t3(16);
        let f = ScalarField::from_fn(g, |x| x[0].sin());
        let lf = laplace_beltrami(&f, &g).unwrap();
        for (a, b) in lf.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_modes_are_exact() {
        let g = t3(16);
        for k in [[1.0, 0.0, 0.0], [2.0, -3.0, 1.0], [0.0, 7.0, 5.0]] {
            let f = ScalarField::from_fn(g, |x| (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).cos());
            let k2: f64 = k.iter().map(|v| v * v).sum();
            let lf = laplace_beltrami(&f, &g).unwrap();
            for (a, b) in lf.values().iter().zip(f.values()) {
                assert!((a - k2 * b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sphere_laplacian_of_cos_r() {
        let g = Geometry::sphere_radial(3, 1024, 1e-3).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].cos());
        let lf = laplace_beltrami(&f, &g).unwrap();
        for (a, b) in lf.values().iter().zip(f.values()) {
            assert!((a - 3.0 * b).abs() < 1e-5, "{a} vs {}", 3.0 * b);
        }
    }

    #[test]
    fn constant_forms_are_killing() {
        let g = t3(16);
        let w = OneFormField::constant(g, &[1.0, -2.0, 0.5]).unwrap();
        let lw = conformal_killing_deriv(&w, &g).unwrap();
        assert!(lw.sup_norm() < 1e-12);
        assert!(lame(&w, &g).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn killing_derivative_of_sine_form() {
        let g = t3(16);
        let w = OneFormField::from_fn(g, |x| vec![x[0].sin(), 0.0, 0.0]);
        let lw = conformal_killing_deriv(&w, &g).unwrap();
        for k in 0..g.node_count() {
            let c = g.coords(k)[0].cos();
            assert!((lw.get(0, 0)[k] - (2.0 - 2.0 / 3.0) * c).abs() < 1e-12);
            assert!((lw.get(1, 1)[k] + 2.0 / 3.0 * c).abs() < 1e-12);
            assert!((lw.get(2, 2)[k] + 2.0 / 3.0 * c).abs() < 1e-12);
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                assert!(lw.get(i, j)[k].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lame_of_cosine_form() {
        let g = t3(16);
        let w = OneFormField::from_fn(g, |x| vec![x[0].cos(), 0.0, 0.0]);
        let lw = lame(&w, &g).unwrap();
        for k in 0..g.node_count() {
            let c = g.coords(k)[0].cos();
            assert!((lw.comp(0)[k] - 4.0 / 3.0 * c).abs() < 1e-12);
            assert!(lw.comp(1)[k].abs() < 1e-12 && lw.comp(2)[k].abs() < 1e-12);
        }
    }

    #[test]
    fn lame_matches_minus_divergence_of_killing_derivative() {
        let g = t3(16);
        let w = random_band_limited(&g, 7, 6);
        let direct = lame(&w, &g).unwrap();
        let via = divergence_sym(&conformal_killing_deriv(&w, &g).unwrap(), &g).unwrap().scale(-1.0);
        assert!(direct.sub(&via).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn lame_invert_examples() {
        let g = t3(16);
        let (w, d) = lame_invert(&OneFormField::zeros(g), &g).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(w.max_abs(), 0.0);

        let f = OneFormField::from_fn(g, |x| vec![x[0].cos(), 0.0, 0.0]);
        let (w, d) = lame_invert(&f, &g).unwrap();
        assert!(d < 1e-12);
        assert!(lame(&w, &g).unwrap().sub(&f).unwrap().max_abs() < 1e-10);
        for k in 0..g.node_count() {
            let want = g.coords(k)[0].cos() / (2.0 - 2.0 / 3.0);
            assert!((w.comp(0)[k] - want).abs() < 1e-12);
        }

        let c = [1.0, 2.0, -2.0];
        let f = OneFormField::constant(g, &c).unwrap();
        let (w, d) = lame_invert(&f, &g).unwrap();
        assert!(w.max_abs() < 1e-12);
        let want = 3.0 * g.volume().sqrt();
        assert!((d - want).abs() < 1e-9 * want);
    }

    #[test]
    fn lame_invert_rejects_sphere() {
        let g = Geometry::sphere_radial(3, 64, 1e-3).unwrap();
        let f = OneFormField::zeros(g);
        assert!(matches!(lame_invert(&f, &g), Err(GeometryError::Unsupported(_))));
    }

    #[test]
    fn mismatched_geometry_is_rejected() {
        let g = t3(16);
        let f = ScalarField::constant(t3(8), 1.0);
        assert_eq!(laplace_beltrami(&f, &g), Err(GeometryError::Mismatch));
    }

    #[test]
    fn radial_lame_matches_closed_form() {
        // n = 3: lame(w dr) = -(4/3)(w'' + 2 cot w' + (1 - 2 cot²) w)
        let g = Geometry::sphere_radial(3, 2048, 0.2).unwrap();
        let w = OneFormField::radial(g, g.radii().unwrap().iter().map(|r| (2.0 * r).sin()).collect()).unwrap();
        let lw = lame(&w, &g).unwrap();
        for (j, r) in g.radii().unwrap().iter().enumerate() {
            let c = r.cos() / r.sin();
            let (f, f1, f2) = ((2.0 * r).sin(), 2.0 * (2.0 * r).cos(), -4.0 * (2.0 * r).sin());
            let want = -4.0 / 3.0 * (f2 + 2.0 * c * f1 + (1.0 - 2.0 * c * c) * f);
            assert!((lw.comp(0)[j] - want).abs() < 1e-6, "r={r}");
        }
        // sin r dr is in the homogeneous solution space of the radial operator
        let s = OneFormField::radial(g, g.radii().unwrap().iter().map(|r| r.sin()).collect()).unwrap();
        assert!(lame(&s, &g).unwrap().max_abs() < 1e-6);
        let lk = conformal_killing_deriv(&s, &g).unwrap();
        assert!(lk.trace().sup_norm() < 1e-14);
    }

    #[test]
    fn non_radial_sphere_form_is_rejected() {
        let g = Geometry::sphere_radial(3, 64, 1e-3).unwrap();
        let w = OneFormField::from_fn(g, |_| vec![0.0, 1.0, 0.0]);
        assert_eq!(lame(&w, &g), Err(GeometryError::NotRadial));
    }

    #[test]
    fn kernel_characterisation_on_constant_basis() {
        let g = t3(8);
        for a in 0..3 {
            let mut c = [0.0; 3];
            c[a] = 1.0;
            let w = OneFormField::constant(g, &c).unwrap();
            assert!(lame(&w, &g).unwrap().max_abs() < 1e-14);
            assert!(conformal_killing_deriv(&w, &g).unwrap().sup_norm() < 1e-14);
        }
        // and a non-constant form is in neither kernel
        let w = OneFormField::from_fn(g, |x| vec![0.0, x[0].cos(), 0.0]);
        assert!(lame(&w, &g).unwrap().max_abs() > 0.5);
        assert!(conformal_killing_deriv(&w, &g).unwrap().sup_norm() > 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn energy_identity(seed in 0u64..10_000, modes in 1usize..8) {
            let g = t3(16);
            let w = random_band_limited(&g, seed, modes);
            let lhs = lame(&w, &g).unwrap().inner(&w).unwrap();
            let lw = conformal_killing_deriv(&w, &g).unwrap();
            let rhs = 0.5 * lw.inner(&lw).unwrap();
            let h1 = h1_norm_sq(&w, &g).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10 * h1);
        }

        #[test]
        fn killing_derivative_is_traceless(seed in 0u64..10_000) {
            let g = t3(8);
            let w = random_band_limited(&g, seed, 5);
            let tr = conformal_killing_deriv(&w, &g).unwrap().trace();
            prop_assert!(tr.sup_norm() < 1e-12);
        }

        #[test]
        fn lame_invert_round_trip(seed in 0u64..10_000) {
            let g = t3(16);
            let f = random_band_limited(&g, seed, 4);
            let (w, defect) = lame_invert(&f, &g).unwrap();
            let means = f.means();
            let proj = OneFormField::constant(g, &means).unwrap();
            let back = lame(&w, &g).unwrap();
            prop_assert!(back.sub(&f.sub(&proj).unwrap()).unwrap().max_abs() < 1e-10);
            let want = means.iter().map(|m| m * m).sum::<f64>().sqrt() * g.volume().sqrt();
            prop_assert!((defect - want).abs() < 1e-9 * (1.0 + want));
            prop_assert!(w.means().iter().all(|m| m.abs() < 1e-12));
        }
    }
}
