//! Stability sweeps over a perturbation schedule.

use rayon::prelude::*;
use serde::Serialize;

use lichnerowicz_core::conformal::{classify, coefficients, normalize, PhysicsData, Regime};
use lichnerowicz_core::geometry::{conformal_killing_deriv, lame, Geometry, OneFormField, ScalarField, Spectral};
use lichnerowicz_core::solver::{solve_system, InitialGuess, Solution};

use crate::config::{DataSpec, SweepConfig};
use crate::recipe::{ck_norm, potential_c2_norm, PotentialRecipe};
use crate::{worker_pool, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "Stable-band")]
    StableBand,
    VanishingLimit,
    NonConvergent,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::StableBand => "Stable-band",
            Verdict::VanishingLimit => "VanishingLimit",
            Verdict::NonConvergent => "NonConvergent",
        })
    }
}

/// Which alternative of the compactness dichotomy a row looks like.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowClass {
    Positive,
    Decaying,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: usize,
    pub eps: f64,
    pub sup_u: f64,
    pub inf_u: f64,
    pub sup_lw: f64,
    pub scalar_residual: f64,
    pub momentum_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `sup |u_α - u_{α-1}|`; empty on the first row.
    pub diff_c0: Option<f64>,
    /// `max_k sup |∂_k(u_α - u_{α-1})|`; empty on the first row.
    pub diff_c1: Option<f64>,
    pub class: RowClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub verdict: Verdict,
    pub regime: String,
    pub all_converged: bool,
    /// `(max sup u - min sup u) / min sup u` over the schedule.
    pub sup_spread: f64,
    /// `sup b` of the base data.
    pub base_b_sup: f64,
    /// `‖Δ⃗W - Y_0‖_∞` at the last point, with `Y_0` the base source minus its mean.
    pub momentum_limit_defect: f64,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
    pub config_hash: String,
}

const SUBSEQUENCE_NOTE: &str = "the band check uses the whole sequence; compactness only promises a convergent \
subsequence, so NonConvergent alone does not contradict it";

/// Perturbation shapes scaled to unit norm in the topology each field is
/// controlled in: `C^2` for `ψ` and `V`, `C^3` for `τ`, sup norm for `π` and `σ`.
struct Shapes {
    psi: ScalarField,
    pi: ScalarField,
    tau: ScalarField,
    sigma: lichnerowicz_core::geometry::SymTensorField,
    potential: PotentialRecipe,
    potential_scale: f64,
}

fn unit(v: ScalarField, k: usize) -> Result<ScalarField, HarnessError> {
    let n = ck_norm(&v, k)?;
    Ok(if n > 0.0 { v.map(|x| x / n) } else { v })
}

fn shapes(d: &DataSpec, g: &Geometry) -> Result<Shapes, HarnessError> {
    let sigma = d.d_sigma.sample(g)?;
    let s = sigma.sup_norm();
    let base_psi = d.psi.sample(g)?;
    let pn = potential_c2_norm(&d.d_potential, base_psi.min(), base_psi.max());
    Ok(Shapes {
        psi: unit(d.d_psi.sample(g)?, 2)?,
        pi: unit(d.d_pi.sample(g)?, 0)?,
        tau: unit(d.d_tau.sample(g)?, 3)?,
        sigma: if s > 0.0 { sigma.scale(1.0 / s) } else { sigma },
        potential: d.d_potential.clone(),
        potential_scale: if pn > 0.0 { 1.0 / pn } else { 0.0 },
    })
}

/// Physics data `base + ε · shape`.
pub fn perturbed_data(d: &DataSpec, g: &Geometry, eps: f64) -> Result<PhysicsData, HarnessError> {
    let sh = shapes(d, g)?;
    build(d, &sh, g, eps)
}

fn build(d: &DataSpec, sh: &Shapes, g: &Geometry, eps: f64) -> Result<PhysicsData, HarnessError> {
    let add = |base: ScalarField, s: &ScalarField| base.zip_map(s, |a, b| a + eps * b);
    Ok(PhysicsData::new(
        add(d.psi.sample(g)?, &sh.psi)?,
        add(d.pi.sample(g)?, &sh.pi)?,
        add(d.tau.sample(g)?, &sh.tau)?,
        d.sigma.sample(g)?.add(&sh.sigma.scale(eps))?,
        PotentialRecipe::combine(&d.potential, eps * sh.potential_scale, &sh.potential),
    )?)
}

fn failed_row(alpha: usize, eps: f64) -> SweepRow {
    SweepRow {
        alpha,
        eps,
        sup_u: f64::NAN,
        inf_u: f64::NAN,
        sup_lw: f64::NAN,
        scalar_residual: f64::NAN,
        momentum_residual: f64::NAN,
        iterations: 0,
        converged: false,
        diff_c0: None,
        diff_c1: None,
        class: RowClass::Failed,
    }
}

fn row_of(alpha: usize, eps: f64, s: &Solution, g: &Geometry) -> Result<SweepRow, HarnessError> {
    Ok(SweepRow {
        alpha,
        eps,
        sup_u: s.u.max(),
        inf_u: s.u.min(),
        sup_lw: conformal_killing_deriv(&s.w, g)?.sup_norm(),
        scalar_residual: s.scalar_residual,
        momentum_residual: s.momentum_residual,
        iterations: s.iterations,
        converged: s.converged,
        diff_c0: None,
        diff_c1: None,
        class: RowClass::Positive,
    })
}

/// Solves every schedule point and classifies the trajectory.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport, HarnessError> {
    cfg.schedule.validate()?;
    let g = cfg.geometry.build()?;
    let sh = shapes(&cfg.data, &g)?;
    let base = build(&cfg.data, &sh, &g, 0.0)?;
    let (_, bb) = coefficients(&base)?;
    let regime = classify(&bb);
    let base_coeffs = normalize(&base)?;
    let eps = &cfg.schedule.eps;

    let solve_at = |eps: f64, guess: InitialGuess| -> Result<(Solution, PhysicsData), HarnessError> {
        let data = build(&cfg.data, &sh, &g, eps)?;
        let c = normalize(&data)?;
        let mut opts = cfg.solver.options.clone();
        opts.initial_guess = guess;
        Ok((solve_system(&c, &opts)?, data))
    };

    let mut solutions: Vec<Option<Solution>> = Vec::with_capacity(eps.len());
    if cfg.solver.warm_start {
        let mut guess = cfg.solver.options.initial_guess.clone();
        for (a, &e) in eps.iter().enumerate() {
            match solve_at(e, guess.clone()) {
                Ok((s, _)) => {
                    if s.converged {
                        guess = InitialGuess::Field(s.u.clone());
                    }
                    solutions.push(Some(s));
                }
                Err(err) if a == 0 => return Err(HarnessError::FirstSolve(err.to_string())),
                Err(_) => solutions.push(None),
            }
        }
    } else {
        let pool = worker_pool()?;
        let guess = cfg.solver.options.initial_guess.clone();
        let results: Vec<_> =
            pool.install(|| eps.par_iter().map(|&e| solve_at(e, guess.clone()).map(|r| r.0)).collect());
        for (a, r) in results.into_iter().enumerate() {
            match r {
                Ok(s) => solutions.push(Some(s)),
                Err(err) if a == 0 => return Err(HarnessError::FirstSolve(err.to_string())),
                Err(_) => solutions.push(None),
            }
        }
    }
    if let Some(Some(s)) = solutions.first() {
        if !s.converged {
            return Err(HarnessError::FirstSolve(format!(
                "no convergence in {} outer steps (residuals {:e}, {:e})",
                s.iterations, s.scalar_residual, s.momentum_residual
            )));
        }
    }

    let sp = Spectral::new(&g)?;
    let mut rows = Vec::with_capacity(eps.len());
    for (a, s) in solutions.iter().enumerate() {
        let mut row = match s {
            Some(s) => row_of(a, eps[a], s, &g)?,
            None => failed_row(a, eps[a]),
        };
        if let (Some(cur), Some(Some(prev))) = (s, a.checked_sub(1).map(|p| &solutions[p])) {
            let d = cur.u.zip_map(&prev.u, |x, y| x - y)?;
            row.diff_c0 = Some(d.sup_norm());
            row.diff_c1 = Some(sp.gradient(d.values()).iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        rows.push(row);
    }
    let first_sup = rows[0].sup_u;
    for r in rows.iter_mut() {
        if r.class != RowClass::Failed && !r.converged {
            r.class = RowClass::Failed;
        } else if r.class == RowClass::Positive && r.sup_u < cfg.schedule.vanish_ratio * first_sup {
            r.class = RowClass::Decaying;
        }
    }

    let all_converged = rows.iter().all(|r| r.converged);
    let sups: Vec<f64> = rows.iter().map(|r| r.sup_u).collect();
    let (lo, hi) = sups.iter().fold((f64::INFINITY, 0.0f64), |(l, h), s| (l.min(*s), h.max(*s)));
    let sup_spread = if all_converged { (hi - lo) / lo } else { f64::NAN };

    let base_b_sup = base_coeffs.b.sup_norm();
    let momentum_limit_defect = match solutions.last() {
        Some(Some(s)) => {
            let means = base_coeffs.y.means();
            let y0 = base_coeffs.y.sub(&OneFormField::constant(g, &means)?)?;
            lame(&s.w, &g)?.sub(&y0)?.max_abs()
        }
        _ => f64::NAN,
    };

    let verdict = classify_rows(&rows, cfg.schedule.vanish_ratio, cfg.schedule.stall_tol, base_b_sup);
    Ok(SweepReport {
        rows,
        summary: SweepSummary {
            verdict,
            regime: format!("{regime:?}"),
            all_converged,
            sup_spread,
            base_b_sup,
            momentum_limit_defect,
            note: SUBSEQUENCE_NOTE,
        },
        config_hash: cfg.hash(),
    })
}

fn classify_rows(rows: &[SweepRow], vanish_ratio: f64, stall_tol: f64, base_b_sup: f64) -> Verdict {
    if rows.iter().any(|r| !r.converged) {
        return Verdict::NonConvergent;
    }
    let sups: Vec<f64> = rows.iter().map(|r| r.sup_u).collect();
    let first = sups[0];
    let last = sups[sups.len() - 1];
    if base_b_sup == 0.0 && sups.windows(2).all(|w| w[1] < w[0]) && last < vanish_ratio * first {
        return Verdict::VanishingLimit;
    }
    let positive = rows.iter().all(|r| r.inf_u > 0.0) && last >= vanish_ratio * first;
    let d: Vec<f64> = rows.iter().filter_map(|r| Some(r.diff_c0? + r.diff_c1?)).collect();
    let settling = d.len() >= 3 && d[d.len() - 3..].windows(2).all(|w| w[1] < w[0] || w[1] <= stall_tol);
    if positive && settling {
        Verdict::StableBand
    } else {
        Verdict::NonConvergent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRow {
    pub regime: String,
    pub sup_u: f64,
    pub inf_u: f64,
    pub sup_lw: f64,
    pub scalar_residual: f64,
    pub momentum_residual: f64,
    pub kernel_defect: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One system solve for the base data (perturbations off).
pub fn run_solve(cfg: &SweepConfig) -> Result<(SolveRow, Solution), HarnessError> {
    let g = cfg.geometry.build()?;
    let data = perturbed_data(&cfg.data, &g, 0.0)?;
    let regime = classify(&coefficients(&data)?.1);
    let s = solve_system(&normalize(&data)?, &cfg.solver.options)?;
    let row = SolveRow {
        regime: format!("{regime:?}"),
        sup_u: s.u.max(),
        inf_u: s.u.min(),
        sup_lw: conformal_killing_deriv(&s.w, &g)?.sup_norm(),
        scalar_residual: s.scalar_residual,
        momentum_residual: s.momentum_residual,
        kernel_defect: s.kernel_defect,
        iterations: s.iterations,
        converged: s.converged,
    };
    Ok((row, s))
}

/// Regime of the base data, for reporting.
pub fn base_regime(d: &DataSpec, g: &Geometry) -> Result<Regime, HarnessError> {
    let data = perturbed_data(d, g, 0.0)?;
    Ok(classify(&coefficients(&data)?.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(sup: f64, d: Option<f64>) -> SweepRow {
        SweepRow {
            alpha: 0,
            eps: 0.0,
            sup_u: sup,
            inf_u: sup / 2.0,
            sup_lw: 0.0,
            scalar_residual: 0.0,
            momentum_residual: 0.0,
            iterations: 1,
            converged: true,
            diff_c0: d,
            diff_c1: d.map(|_| 0.0),
            class: RowClass::Positive,
        }
    }

    #[test]
    fn classification_rules() {
        let settling = [row(1.0, None), row(1.1, Some(0.4)), row(1.05, Some(0.2)), row(1.02, Some(0.1))];
        assert_eq!(classify_rows(&settling, 0.5, 1e-9, 1.0), Verdict::StableBand);
        let growing = [row(1.0, None), row(1.1, Some(0.1)), row(1.2, Some(0.2)), row(1.3, Some(0.3))];
        assert_eq!(classify_rows(&growing, 0.5, 1e-9, 1.0), Verdict::NonConvergent);
        let frozen = [row(1.0, None), row(1.0, Some(0.0)), row(1.0, Some(0.0)), row(1.0, Some(0.0))];
        assert_eq!(classify_rows(&frozen, 0.5, 1e-9, 1.0), Verdict::StableBand);
        let decaying = [row(1.0, None), row(0.6, Some(0.4)), row(0.4, Some(0.2)), row(0.3, Some(0.1))];
        assert_eq!(classify_rows(&decaying, 0.5, 1e-9, 0.0), Verdict::VanishingLimit);
        // decay without b ≡ 0 is not the vanishing alternative
        assert_eq!(classify_rows(&decaying, 0.5, 1e-9, 0.1), Verdict::NonConvergent);
        let mut failed = settling.clone();
        failed[2].converged = false;
        assert_eq!(classify_rows(&failed, 0.5, 1e-9, 1.0), Verdict::NonConvergent);
    }
}
