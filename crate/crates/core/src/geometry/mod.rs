//! Discrete backgrounds, sampled tensor fields and the basic operators.
//!
//! Two geometries are supported. `Torus` is the flat periodic box `[0, L)^n`
//! sampled on a uniform grid and differentiated spectrally. `SphereRadial` is
//! the round unit `n`-sphere reduced to functions of the distance `r` to a
//! fixed pole, sampled on `(ε, π-ε)` and differentiated with 4th-order finite
//! differences. Sphere tensor components are stored in the orthonormal frame
//! `(∂_r, e_1, ..., e_{n-1})`.

mod fd;
mod fields;
mod ops;
mod spectral;

pub use fd::{fornberg_weights, RadialStencil};
pub use fields::{sym_index, sym_len, OneFormField, ScalarField, SymTensorField};
pub use ops::{
    conformal_killing_deriv, divergence_sym, gradient, h1_norm_sq, lame, lame_invert,
    laplace_beltrami,
};
pub use spectral::Spectral;

use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("field lives on a different geometry")]
    Mismatch,
    #[error("invalid resolution {0}: need at least 8 points")]
    Resolution(usize),
    #[error("invalid dimension {0}: need n >= 3")]
    Dimension(usize),
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
    #[error("one-form is not radial on the sphere grid")]
    NotRadial,
    #[error("operation not supported on this geometry: {0}")]
    Unsupported(&'static str),
    #[error("sample count {got} does not match node count {expected}")]
    Samples { expected: usize, got: usize },
    #[error("non-finite sample")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryKind {
    Torus { period: f64 },
    SphereRadial { eps: f64 },
}

/// A discrete closed background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    kind: GeometryKind,
    dim: usize,
    resolution: usize,
}

impl Geometry {
    pub fn torus(dim: usize, resolution: usize, period: f64) -> Result<Self, GeometryError> {
        if dim < 3 {
            return Err(GeometryError::Dimension(dim));
        }
        if resolution < 8 {
            return Err(GeometryError::Resolution(resolution));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(GeometryError::Parameter("torus period must be positive"));
        }
        Ok(Geometry { kind: GeometryKind::Torus { period }, dim, resolution })
    }

    /// Torus with the default period `2π`.
    pub fn torus_2pi(dim: usize, resolution: usize) -> Result<Self, GeometryError> {
        Self::torus(dim, resolution, 2.0 * PI)
    }

    pub fn sphere_radial(dim: usize, resolution: usize, eps: f64) -> Result<Self, GeometryError> {
        if dim < 3 {
            return Err(GeometryError::Dimension(dim));
        }
        if resolution < 8 {
            return Err(GeometryError::Resolution(resolution));
        }
        if !(eps > 0.0 && eps < PI / 4.0) {
            return Err(GeometryError::Parameter("sphere margin must lie in (0, π/4)"));
        }
        Ok(Geometry { kind: GeometryKind::SphereRadial { eps }, dim, resolution })
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.kind, GeometryKind::Torus { .. })
    }

    pub fn node_count(&self) -> usize {
        match self.kind {
            GeometryKind::Torus { .. } => self.resolution.pow(self.dim as u32),
            GeometryKind::SphereRadial { .. } => self.resolution,
        }
    }

    /// Grid spacing (per axis on the torus, radial on the sphere).
    pub fn spacing(&self) -> f64 {
        match self.kind {
            GeometryKind::Torus { period } => period / self.resolution as f64,
            GeometryKind::SphereRadial { eps } => (PI - 2.0 * eps) / (self.resolution - 1) as f64,
        }
    }

    /// Total volume of the background.
    pub fn volume(&self) -> f64 {
        match self.kind {
            GeometryKind::Torus { period } => period.powi(self.dim as i32),
            GeometryKind::SphereRadial { .. } => crate::sphere_area(self.dim),
        }
    }

    /// Scalar curvature of the background metric.
    pub fn scalar_curvature(&self) -> f64 {
        match self.kind {
            GeometryKind::Torus { .. } => 0.0,
            GeometryKind::SphereRadial { .. } => (self.dim * (self.dim - 1)) as f64,
        }
    }

    /// Coordinates of node `idx`: `(x_1, ..., x_n)` on the torus, `[r]` on the sphere.
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        match self.kind {
            GeometryKind::Torus { .. } => {
                let h = self.spacing();
                self.multi_index(idx).into_iter().map(|m| m as f64 * h).collect()
            }
            GeometryKind::SphereRadial { eps } => vec![eps + idx as f64 * self.spacing()],
        }
    }

    /// Row-major multi-index of a torus node (last axis fastest).
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let n = self.resolution;
        let mut out = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            out[a] = idx % n;
            idx /= n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &m| acc * self.resolution + m)
    }

    /// Radial nodes of a sphere grid.
    pub fn radii(&self) -> Result<Vec<f64>, GeometryError> {
        match self.kind {
            GeometryKind::SphereRadial { .. } => {
                Ok((0..self.resolution).map(|j| self.coords(j)[0]).collect())
            }
            _ => Err(GeometryError::Unsupported("radial nodes need a sphere grid")),
        }
    }

    /// Quadrature weight attached to each node, so that `Σ w_j f_j ≈ ∫ f dv_g`.
    ///
    /// On the sphere this is composite Simpson in `r` against `ω_{n-1} sin^{n-1} r`
    /// (the polar caps of width ε are dropped).
    pub fn quadrature_weights(&self) -> Vec<f64> {
        match self.kind {
            GeometryKind::Torus { .. } => {
                vec![self.spacing().powi(self.dim as i32); self.node_count()]
            }
            GeometryKind::SphereRadial { .. } => {
                let h = self.spacing();
                let m = self.resolution;
                let area = crate::sphere_area(self.dim - 1);
                let mut w = vec![0.0; m];
                // Simpson on the largest even panel count, trapezoid on a leftover cell
                let panels = if (m - 1) % 2 == 0 { m - 1 } else { m - 2 };
                for j in 0..=panels {
                    let c = if j == 0 || j == panels { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
                    w[j] += c * h / 3.0;
                }
                if panels < m - 1 {
                    w[m - 2] += 0.5 * h;
                    w[m - 1] += 0.5 * h;
                }
                for (j, wj) in w.iter_mut().enumerate() {
                    let r = self.coords(j)[0];
                    *wj *= area * r.sin().powi(self.dim as i32 - 1);
                }
                w
            }
        }
    }

    pub(crate) fn check(&self, other: &Geometry) -> Result<(), GeometryError> {
        if self == other {
            Ok(())
        } else {
            Err(GeometryError::Mismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_grids_and_bad_dimensions() {
        assert_eq!(Geometry::torus_2pi(3, 4), Err(GeometryError::Resolution(4)));
        assert_eq!(Geometry::torus_2pi(2, 16), Err(GeometryError::Dimension(2)));
        assert!(Geometry::sphere_radial(3, 64, 0.0).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = Geometry::torus_2pi(3, 8).unwrap();
        for idx in [0, 1, 7, 8, 63, 64, 511] {
            assert_eq!(g.flat_index(&g.multi_index(idx)), idx);
        }
        assert_eq!(g.multi_index(8 * 8 + 2), vec![1, 0, 2]);
    }

    #[test]
    fn sphere_weights_integrate_volume() {
        let g = Geometry::sphere_radial(3, 401, 1e-3).unwrap();
        let total: f64 = g.quadrature_weights().iter().sum();
        // caps of width ε carry O(ε^3) volume
        assert!((total - g.volume()).abs() < 1e-6);
        let g = Geometry::sphere_radial(3, 400, 1e-3).unwrap();
        let total: f64 = g.quadrature_weights().iter().sum();
        assert!((total - g.volume()).abs() < 1e-5);
    }

    #[test]
    fn torus_weights_integrate_volume() {
        let g = Geometry::torus(3, 8, 3.0).unwrap();
        let total: f64 = g.quadrature_weights().iter().sum();
        assert!((total - 27.0).abs() < 1e-12);
    }
}
