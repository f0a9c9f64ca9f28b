use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Geometry, GeometryError, GeometryKind};

/// FFT workspace for one torus geometry.
///
/// Transforms are applied axis by axis over the row-major node layout.
/// Derivative symbols use the wavenumbers with the Nyquist mode zeroed so
/// derivatives of real fields stay real; the scalar Laplacian uses the full
/// `|k|²`.
pub struct Spectral {
    geom: Geometry,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// per-mode wavevectors, `dim` entries per mode; the derivative copy has
    /// Nyquist entries zeroed
    modes_full: Vec<f64>,
    modes_deriv: Vec<f64>,
}

impl Spectral {
    pub fn new(geom: &Geometry) -> Result<Self, GeometryError> {
        let period = match geom.kind() {
            GeometryKind::Torus { period } => period,
            _ => return Err(GeometryError::Unsupported("spectral operators need a torus")),
        };
        let n = geom.resolution();
        let mut planner = FftPlanner::new();
        let scale = 2.0 * PI / period;
        let k_full: Vec<f64> = (0..n)
            .map(|m| {
                let s = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                s * scale
            })
            .collect();
        let mut k_deriv = k_full.clone();
        if n % 2 == 0 {
            k_deriv[n / 2] = 0.0;
        }
        let dim = geom.dim();
        let mut modes_full = Vec::with_capacity(geom.node_count() * dim);
        let mut modes_deriv = Vec::with_capacity(geom.node_count() * dim);
        for idx in 0..geom.node_count() {
            for m in geom.multi_index(idx) {
                modes_full.push(k_full[m]);
                modes_deriv.push(k_deriv[m]);
            }
        }
        Ok(Spectral {
            geom: *geom,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            modes_full,
            modes_deriv,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.geom.resolution();
        let dim = self.geom.dim();
        let total = data.len();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..total).step_by(block) {
                for off in 0..stride {
                    let base = start + off;
                    for (m, l) in line.iter_mut().enumerate() {
                        *l = data[base + m * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (m, l) in line.iter().enumerate() {
                        data[base + m * stride] = *l;
                    }
                }
            }
        }
    }

    /// Unnormalised forward transform of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.fwd);
        data
    }

    /// Inverse transform, normalised, real part.
    pub fn inverse(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut data, &self.inv);
        let norm = 1.0 / data.len() as f64;
        data.iter().map(|c| c.re * norm).collect()
    }

    /// Calls `f(flat_index, k_full, k_deriv)` for every mode.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, &[f64], &[f64])) {
        let dim = self.geom.dim();
        for idx in 0..self.geom.node_count() {
            let r = idx * dim..(idx + 1) * dim;
            f(idx, &self.modes_full[r.clone()], &self.modes_deriv[r]);
        }
    }

    /// Squared wavenumber per mode, `(|k|², |k̃|²)`.
    pub fn k_squared(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.geom.node_count();
        let mut full = vec![0.0; m];
        let mut der = vec![0.0; m];
        self.for_each_mode(|i, kf, kd| {
            full[i] = kf.iter().map(|k| k * k).sum();
            der[i] = kd.iter().map(|k| k * k).sum();
        });
        (full, der)
    }

    /// Positive Laplacian `-div ∇` with the full symbol `|k|²`.
    pub fn laplacian(&self, values: &[f64]) -> Vec<f64> {
        let mut hat = self.forward(values);
        let (k2, _) = self.k_squared();
        for (h, k) in hat.iter_mut().zip(&k2) {
            *h *= *k;
        }
        self.inverse(hat)
    }

    /// Solves `(Δ + c) v = r` for a constant `c > 0`, or `c = 0` with the mean
    /// projected out.
    pub fn shifted_laplacian_solve(&self, rhs: &[f64], c: f64) -> Vec<f64> {
        let mut hat = self.forward(rhs);
        let (k2, _) = self.k_squared();
        for (h, k) in hat.iter_mut().zip(&k2) {
            let d = k + c;
            *h = if d.abs() > 1e-300 { *h / d } else { Complex64::new(0.0, 0.0) };
        }
        self.inverse(hat)
    }

    /// Partial derivatives `∂_a f` for all axes.
    pub fn gradient(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let hat = self.forward(values);
        self.gradient_hat(&hat)
    }

    fn gradient_hat(&self, hat: &[Complex64]) -> Vec<Vec<f64>> {
        let dim = self.geom.dim();
        let mut out = Vec::with_capacity(dim);
        for a in 0..dim {
            let mut d = hat.to_vec();
            self.for_each_mode(|i, _, kd| d[i] *= Complex64::new(0.0, kd[a]));
            out.push(self.inverse(d));
        }
        out
    }

    /// Jacobian `∂_b W_a` of a one-form, indexed `[a][b]`.
    pub fn jacobian(&self, comps: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
        comps.iter().map(|c| self.gradient(c)).collect()
    }

    /// Conformal Killing derivative, upper-triangle storage.
    pub fn conformal_killing(&self, comps: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.geom.dim();
        let jac = self.jacobian(comps);
        let m = self.geom.node_count();
        let mut div = vec![0.0; m];
        for a in 0..n {
            for k in 0..m {
                div[k] += jac[a][a][k];
            }
        }
        let mut out = Vec::with_capacity(super::sym_len(n));
        for i in 0..n {
            for j in i..n {
                let mut c = vec![0.0; m];
                for k in 0..m {
                    c[k] = jac[i][j][k] + jac[j][i][k];
                    if i == j {
                        c[k] -= 2.0 / n as f64 * div[k];
                    }
                }
                out.push(c);
            }
        }
        out
    }

    /// Divergence `(div T)_i = Σ_j ∂_j T_ij` of a symmetric tensor.
    pub fn divergence_sym(&self, comps: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.geom.dim();
        let hats: Vec<Vec<Complex64>> = comps.iter().map(|c| self.forward(c)).collect();
        let m = self.geom.node_count();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = vec![Complex64::new(0.0, 0.0); m];
            for j in 0..n {
                let t = &hats[super::sym_index(n, i, j)];
                self.for_each_mode(|idx, _, kd| acc[idx] += Complex64::new(0.0, kd[j]) * t[idx]);
            }
            out.push(self.inverse(acc));
        }
        out
    }

    /// Lamé operator via its symbol `|k̃|² Ŵ + (1 - 2/n) k̃ (k̃·Ŵ)`.
    pub fn lame(&self, comps: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.geom.dim();
        let coupling = 1.0 - 2.0 / n as f64;
        let hats: Vec<Vec<Complex64>> = comps.iter().map(|c| self.forward(c)).collect();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); self.geom.node_count()]; n];
        self.for_each_mode(|idx, _, kd| {
            let k2: f64 = kd.iter().map(|k| k * k).sum();
            let kw: Complex64 = (0..n).map(|a| hats[a][idx] * kd[a]).sum();
            for a in 0..n {
                out[a][idx] = hats[a][idx] * k2 + kw * (coupling * kd[a]);
            }
        });
        out.into_iter().map(|h| self.inverse(h)).collect()
    }

    /// Inverts the Lamé symbol on modes with `k̃ ≠ 0`. Returns the solution and
    /// the L² norm of the discarded kernel part of the right-hand side.
    pub fn lame_invert(&self, comps: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
        let n = self.geom.dim();
        let alpha = (n as f64 - 2.0) / (2.0 * n as f64 - 2.0);
        let hats: Vec<Vec<Complex64>> = comps.iter().map(|c| self.forward(c)).collect();
        let m = self.geom.node_count();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); m]; n];
        let mut discarded = 0.0;
        self.for_each_mode(|idx, _, kd| {
            let k2: f64 = kd.iter().map(|k| k * k).sum();
            if k2 == 0.0 {
                for h in &hats {
                    discarded += h[idx].norm_sqr();
                }
                return;
            }
            let kw: Complex64 = (0..n).map(|a| hats[a][idx] * kd[a]).sum();
            for a in 0..n {
                out[a][idx] = (hats[a][idx] - kw * (alpha * kd[a] / k2)) / k2;
            }
        });
        // Parseval: Σ_x |f|² dV = vol / N^{2n} Σ_k |f̂|²
        let defect = (discarded * self.geom.volume() / (m as f64 * m as f64)).sqrt();
        (out.into_iter().map(|h| self.inverse(h)).collect(), defect)
    }

    /// `‖W‖²_{L²} + ‖∇W‖²_{L²}` summed over components.
    pub fn h1_norm_sq(&self, comps: &[Vec<f64>]) -> f64 {
        let m = self.geom.node_count() as f64;
        let (_, kd2) = self.k_squared();
        let mut s = 0.0;
        for c in comps {
            let hat = self.forward(c);
            for (h, k) in hat.iter().zip(&kd2) {
                s += (1.0 + k) * h.norm_sqr();
            }
        }
        s * self.geom.volume() / (m * m)
    }

    /// Spectral interpolation onto a finer torus of the same period.
    pub fn interpolate_to(&self, values: &[f64], fine: &Geometry) -> Result<Vec<f64>, GeometryError> {
        let fine_sp = Spectral::new(fine)?;
        let (nc, nf) = (self.geom.resolution(), fine.resolution());
        if fine.dim() != self.geom.dim() || nf < nc || fine.kind() != self.geom.kind() {
            return Err(GeometryError::Mismatch);
        }
        let hat = self.forward(values);
        let mut fine_hat = vec![Complex64::new(0.0, 0.0); fine.node_count()];
        let dim = self.geom.dim();
        let map = |m: usize| -> Option<usize> {
            if nc % 2 == 0 && m == nc / 2 {
                None
            } else if m < nc / 2 + nc % 2 {
                Some(m)
            } else {
                Some(nf - (nc - m))
            }
        };
        let scale = fine.node_count() as f64 / self.geom.node_count() as f64;
        'modes: for idx in 0..self.geom.node_count() {
            let multi = self.geom.multi_index(idx);
            let mut target = Vec::with_capacity(dim);
            for &mm in &multi {
                match map(mm) {
                    Some(t) => target.push(t),
                    // Nyquist content is dropped
                    None => continue 'modes,
                }
            }
            fine_hat[fine.flat_index(&target)] = hat[idx] * scale;
        }
        Ok(fine_sp.inverse(fine_hat))
    }
}
