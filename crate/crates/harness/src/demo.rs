//! Blow-up family on the round 3-sphere, checked against the closed form.

use rayon::prelude::*;
use serde::Serialize;

use lichnerowicz_core::geometry::Geometry;
use lichnerowicz_core::instability::{assemble, phi_sup, verify, Cutoff};

use crate::{worker_pool, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoOptions {
    pub nodes: usize,
    pub pole_eps: f64,
    pub substeps: usize,
    pub cutoff: Cutoff,
    pub residual_tol: f64,
    pub sup_tol: f64,
    pub spread_tol: f64,
}

impl Default for DemoOptions {
    fn default() -> Self {
        DemoOptions {
            nodes: 4096,
            pole_eps: 1e-3,
            substeps: 8,
            cutoff: Cutoff::default(),
            residual_tol: 1e-6,
            sup_tol: 1e-6,
            spread_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemoRow {
    pub lambda: f64,
    pub sup_phi: f64,
    pub closed_form: f64,
    pub sup_error: f64,
    pub scalar_residual: f64,
    pub vector_residual: f64,
    pub sup_u: f64,
    pub sup_y: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub rows: Vec<DemoRow>,
    /// `sup φ` strictly increases as `λ` decreases.
    pub monotone: bool,
    /// `(max - min) / min` of `‖U‖_∞ + ‖Y‖_∞` over the family.
    pub source_spread: f64,
    pub pass: bool,
}

pub fn run_instability_demo(lambdas: &[f64], opts: &DemoOptions) -> Result<DemoReport, HarnessError> {
    if lambdas.is_empty() {
        return Err(HarnessError::Config("no λ values given".into()));
    }
    let geom = Geometry::sphere_radial(3, opts.nodes, opts.pole_eps)?;
    let pool = worker_pool()?;
    let rows: Vec<DemoRow> = pool.install(|| {
        lambdas
            .par_iter()
            .map(|&l| -> Result<DemoRow, HarnessError> {
                let v = verify(&assemble(l, &geom, opts.cutoff, opts.substeps)?)?;
                let closed_form = phi_sup(3, l)?;
                let sup_error = (v.sup_phi - closed_form).abs();
                Ok(DemoRow {
                    lambda: l,
                    sup_phi: v.sup_phi,
                    closed_form,
                    sup_error,
                    scalar_residual: v.scalar_residual,
                    vector_residual: v.vector_residual,
                    sup_u: v.sup_u,
                    sup_y: v.sup_y,
                    pass: v.scalar_residual < opts.residual_tol
                        && v.vector_residual < opts.residual_tol
                        && sup_error < opts.sup_tol,
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut by_lambda: Vec<&DemoRow> = rows.iter().collect();
    by_lambda.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
    let monotone = by_lambda.windows(2).all(|w| w[1].lambda < w[0].lambda && w[1].sup_phi > w[0].sup_phi);
    let s: Vec<f64> = rows.iter().map(|r| r.sup_u + r.sup_y).collect();
    let (lo, hi) = s.iter().fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
    let source_spread = (hi - lo) / lo;
    let pass = rows.iter().all(|r| r.pass) && monotone && source_spread < opts.spread_tol;
    Ok(DemoReport { rows, monotone, source_spread, pass })
}
