/// Finite-difference weights for derivatives `0..=m` at `z` from nodes `x`
/// (Fornberg's recursion). Returns `w[d][j]`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let np = x.len();
    let mut c = vec![vec![0.0; np]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..np {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// 4th-order first and second derivative stencils on a uniform grid:
/// centred 5-point in the interior, one-sided 6-point at the two nodes
/// nearest each end.
#[derive(Debug, Clone)]
pub struct RadialStencil {
    len: usize,
    /// (first node, weights) per output node
    d1: Vec<(usize, Vec<f64>)>,
    d2: Vec<(usize, Vec<f64>)>,
}

impl RadialStencil {
    pub fn new(len: usize, h: f64) -> Self {
        assert!(len >= 6, "radial stencil needs at least 6 nodes");
        let mut d1 = Vec::with_capacity(len);
        let mut d2 = Vec::with_capacity(len);
        for i in 0..len {
            let (start, width) = if i < 2 {
                (0, 6)
            } else if i + 2 >= len {
                (len - 6, 6)
            } else {
                (i - 2, 5)
            };
            let xs: Vec<f64> = (start..start + width).map(|j| j as f64 * h).collect();
            let w = fornberg_weights(i as f64 * h, &xs, 2);
            d1.push((start, w[1].clone()));
            d2.push((start, w[2].clone()));
        }
        RadialStencil { len, d1, d2 }
    }

    fn apply(rows: &[(usize, Vec<f64>)], f: &[f64]) -> Vec<f64> {
        rows.iter().map(|(s, w)| w.iter().enumerate().map(|(k, wk)| wk * f[s + k]).sum()).collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn d1(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.len);
        Self::apply(&self.d1, f)
    }

    pub fn d2(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.len);
        Self::apply(&self.d2, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_reproduces_classic_centred_weights() {
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let d1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        let d2 = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for k in 0..5 {
            assert!((w[1][k] - d1[k]).abs() < 1e-14);
            assert!((w[2][k] - d2[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn stencil_is_exact_on_quartics() {
        let h = 0.1;
        let st = RadialStencil::new(20, h);
        let f: Vec<f64> = (0..20).map(|i| (i as f64 * h).powi(4) - (i as f64 * h)).collect();
        let d1 = st.d1(&f);
        let d2 = st.d2(&f);
        for i in 0..20 {
            let x = i as f64 * h;
            assert!((d1[i] - (4.0 * x.powi(3) - 1.0)).abs() < 1e-10);
            assert!((d2[i] - 12.0 * x * x).abs() < 1e-9);
        }
    }

    #[test]
    fn fourth_order_convergence_on_sine() {
        let err = |n: usize| {
            let h = 2.0 / (n - 1) as f64;
            let st = RadialStencil::new(n, h);
            let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
            let d2 = st.d2(&f);
            (0..n).map(|i| (d2[i] + (i as f64 * h).sin()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 12.0, "ratio {ratio}");
    }
}
