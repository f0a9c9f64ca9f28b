use super::{Geometry, GeometryError};

/// Number of independent components of a symmetric `n×n` tensor.
pub fn sym_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Storage slot of component `(i, j)`: upper triangle, row-major.
pub fn sym_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

fn check_finite(v: &[f64]) -> Result<(), GeometryError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(GeometryError::NonFinite)
    }
}

fn check_len(geom: &Geometry, v: &[f64]) -> Result<(), GeometryError> {
    if v.len() != geom.node_count() {
        return Err(GeometryError::Samples { expected: geom.node_count(), got: v.len() });
    }
    check_finite(v)
}

/// One real sample per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    geom: Geometry,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(geom: Geometry, values: Vec<f64>) -> Result<Self, GeometryError> {
        check_len(&geom, &values)?;
        Ok(ScalarField { geom, values })
    }

    pub(crate) fn raw(geom: Geometry, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), geom.node_count());
        ScalarField { geom, values }
    }

    pub fn constant(geom: Geometry, c: f64) -> Self {
        ScalarField { geom, values: vec![c; geom.node_count()] }
    }

    /// Samples `f` at node coordinates (see [`Geometry::coords`]).
    pub fn from_fn(geom: Geometry, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..geom.node_count()).map(|i| f(&geom.coords(i))).collect();
        ScalarField { geom, values }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { geom: self.geom, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self, GeometryError> {
        self.geom.check(&other.geom)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(ScalarField { geom: self.geom, values })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn integral(&self) -> f64 {
        self.geom.quadrature_weights().iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.geom.volume()
    }

    pub fn inner(&self, other: &ScalarField) -> Result<f64, GeometryError> {
        self.geom.check(&other.geom)?;
        let w = self.geom.quadrature_weights();
        Ok(w.iter().zip(self.values.iter().zip(&other.values)).map(|(w, (a, b))| w * a * b).sum())
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).unwrap_or(0.0).sqrt()
    }
}

/// `n` real components per node. On the sphere only the radial frame
/// component (index 0) may be nonzero for the radial operators.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    geom: Geometry,
    comps: Vec<Vec<f64>>,
}

impl OneFormField {
    pub fn new(geom: Geometry, comps: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        if comps.len() != geom.dim() {
            return Err(GeometryError::Samples { expected: geom.dim(), got: comps.len() });
        }
        for c in &comps {
            check_len(&geom, c)?;
        }
        Ok(OneFormField { geom, comps })
    }

    pub(crate) fn raw(geom: Geometry, comps: Vec<Vec<f64>>) -> Self {
        OneFormField { geom, comps }
    }

    pub fn zeros(geom: Geometry) -> Self {
        OneFormField { geom, comps: vec![vec![0.0; geom.node_count()]; geom.dim()] }
    }

    pub fn constant(geom: Geometry, c: &[f64]) -> Result<Self, GeometryError> {
        if c.len() != geom.dim() {
            return Err(GeometryError::Samples { expected: geom.dim(), got: c.len() });
        }
        Ok(OneFormField { geom, comps: c.iter().map(|&v| vec![v; geom.node_count()]).collect() })
    }

    /// Samples `f(x)` which must return `n` components.
    pub fn from_fn(geom: Geometry, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let mut comps = vec![vec![0.0; geom.node_count()]; geom.dim()];
        for i in 0..geom.node_count() {
            let v = f(&geom.coords(i));
            for (a, c) in comps.iter_mut().enumerate() {
                c[i] = v[a];
            }
        }
        OneFormField { geom, comps }
    }

    /// Radial form `w(r) dr` on a sphere grid.
    pub fn radial(geom: Geometry, w: Vec<f64>) -> Result<Self, GeometryError> {
        if geom.is_torus() {
            return Err(GeometryError::Unsupported("radial forms need a sphere grid"));
        }
        check_len(&geom, &w)?;
        let mut comps = vec![vec![0.0; geom.node_count()]; geom.dim()];
        comps[0] = w;
        Ok(OneFormField { geom, comps })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn comp(&self, a: usize) -> &[f64] {
        &self.comps[a]
    }

    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.comps
    }

    pub fn into_comps(self) -> Vec<Vec<f64>> {
        self.comps
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_comps(|v| v * s)
    }

    pub fn map_comps(&self, f: impl Fn(f64) -> f64) -> Self {
        OneFormField {
            geom: self.geom,
            comps: self.comps.iter().map(|c| c.iter().map(|&v| f(v)).collect()).collect(),
        }
    }

    pub fn add(&self, other: &OneFormField) -> Result<Self, GeometryError> {
        self.geom.check(&other.geom)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(OneFormField { geom: self.geom, comps })
    }

    pub fn sub(&self, other: &OneFormField) -> Result<Self, GeometryError> {
        self.add(&other.scale(-1.0))
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField) -> Result<Self, GeometryError> {
        self.geom.check(s.geometry())?;
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().zip(s.values()).map(|(a, b)| a * b).collect())
            .collect();
        Ok(OneFormField { geom: self.geom, comps })
    }

    /// Pointwise Euclidean (frame) norm.
    pub fn pointwise_norm(&self) -> ScalarField {
        let m = self.geom.node_count();
        let values = (0..m).map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()).collect();
        ScalarField::raw(self.geom, values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.pointwise_norm().sup_norm()
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn inner(&self, other: &OneFormField) -> Result<f64, GeometryError> {
        self.geom.check(&other.geom)?;
        let w = self.geom.quadrature_weights();
        let mut s = 0.0;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for i in 0..w.len() {
                s += w[i] * a[i] * b[i];
            }
        }
        Ok(s)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).unwrap_or(0.0).sqrt()
    }

    /// Spatial mean of each component.
    pub fn means(&self) -> Vec<f64> {
        let w = self.geom.quadrature_weights();
        let vol = self.geom.volume();
        self.comps.iter().map(|c| c.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / vol).collect()
    }
}

/// Symmetric 2-tensor stored as its upper triangle (see [`sym_index`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    geom: Geometry,
    comps: Vec<Vec<f64>>,
}

impl SymTensorField {
    pub fn new(geom: Geometry, comps: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let want = sym_len(geom.dim());
        if comps.len() != want {
            return Err(GeometryError::Samples { expected: want, got: comps.len() });
        }
        for c in &comps {
            check_len(&geom, c)?;
        }
        Ok(SymTensorField { geom, comps })
    }

    pub(crate) fn raw(geom: Geometry, comps: Vec<Vec<f64>>) -> Self {
        SymTensorField { geom, comps }
    }

    pub fn zeros(geom: Geometry) -> Self {
        SymTensorField { geom, comps: vec![vec![0.0; geom.node_count()]; sym_len(geom.dim())] }
    }

    /// Samples `f(x)` returning the full `n×n` matrix in row-major order; the
    /// upper triangle is stored.
    pub fn from_fn(geom: Geometry, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let n = geom.dim();
        let mut out = Self::zeros(geom);
        for k in 0..geom.node_count() {
            let m = f(&geom.coords(k));
            for i in 0..n {
                for j in i..n {
                    out.comps[sym_index(n, i, j)][k] = m[i * n + j];
                }
            }
        }
        out
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[sym_index(self.geom.dim(), i, j)]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Vec<f64> {
        let n = self.geom.dim();
        &mut self.comps[sym_index(n, i, j)]
    }

    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }

    /// Full matrix at node `k`, row-major.
    pub fn matrix_at(&self, k: usize) -> Vec<f64> {
        let n = self.geom.dim();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = self.comps[sym_index(n, i, j)][k];
            }
        }
        m
    }

    pub fn add(&self, other: &SymTensorField) -> Result<Self, GeometryError> {
        self.geom.check(&other.geom)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(SymTensorField { geom: self.geom, comps })
    }

    pub fn scale(&self, s: f64) -> Self {
        SymTensorField {
            geom: self.geom,
            comps: self.comps.iter().map(|c| c.iter().map(|v| v * s).collect()).collect(),
        }
    }

    pub fn mul_scalar(&self, s: &ScalarField) -> Result<Self, GeometryError> {
        self.geom.check(s.geometry())?;
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().zip(s.values()).map(|(a, b)| a * b).collect())
            .collect();
        Ok(SymTensorField { geom: self.geom, comps })
    }

    /// Pointwise trace (flat metric or orthonormal frame).
    pub fn trace(&self) -> ScalarField {
        let n = self.geom.dim();
        let m = self.geom.node_count();
        let values = (0..m).map(|k| (0..n).map(|i| self.get(i, i)[k]).sum()).collect();
        ScalarField::raw(self.geom, values)
    }

    /// Pointwise squared norm `Σ_{ij} T_ij²`.
    pub fn norm_sq(&self) -> ScalarField {
        let n = self.geom.dim();
        let m = self.geom.node_count();
        let mut values = vec![0.0; m];
        for i in 0..n {
            for j in i..n {
                let w = if i == j { 1.0 } else { 2.0 };
                let c = self.get(i, j);
                for k in 0..m {
                    values[k] += w * c[k] * c[k];
                }
            }
        }
        ScalarField::raw(self.geom, values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.norm_sq().sup_norm().sqrt()
    }

    pub fn inner(&self, other: &SymTensorField) -> Result<f64, GeometryError> {
        self.geom.check(&other.geom)?;
        let n = self.geom.dim();
        let w = self.geom.quadrature_weights();
        let mut s = 0.0;
        for i in 0..n {
            for j in i..n {
                let f = if i == j { 1.0 } else { 2.0 };
                let (a, b) = (self.get(i, j), other.get(i, j));
                for k in 0..w.len() {
                    s += f * w[k] * a[k] * b[k];
                }
            }
        }
        Ok(s)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).unwrap_or(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_index_covers_upper_triangle() {
        let n = 4;
        let mut seen = vec![false; sym_len(n)];
        for i in 0..n {
            for j in i..n {
                let s = sym_index(n, i, j);
                assert!(!seen[s]);
                seen[s] = true;
                assert_eq!(s, sym_index(n, j, i));
            }
        }
        assert!(seen.iter().all(|&b| b));
        assert_eq!(sym_index(3, 0, 0), 0);
        assert_eq!(sym_index(3, 0, 2), 2);
        assert_eq!(sym_index(3, 1, 1), 3);
        assert_eq!(sym_index(3, 2, 2), 5);
    }

    #[test]
    fn constructors_validate_samples() {
        let g = Geometry::torus_2pi(3, 8).unwrap();
        assert!(ScalarField::new(g, vec![0.0; 10]).is_err());
        assert_eq!(ScalarField::new(g, vec![f64::NAN; 512]), Err(GeometryError::NonFinite));
        assert!(OneFormField::new(g, vec![vec![0.0; 512]; 2]).is_err());
        assert!(SymTensorField::new(g, vec![vec![0.0; 512]; 6]).is_ok());
    }

    #[test]
    fn tensor_norm_counts_off_diagonals_twice() {
        let g = Geometry::torus_2pi(3, 8).unwrap();
        let t = SymTensorField::from_fn(g, |_| vec![1.0, 2.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(t.norm_sq().values().iter().all(|&v| (v - 9.0).abs() < 1e-15));
        assert!(t.trace().values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }
}
