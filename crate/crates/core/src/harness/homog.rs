//! Homogenization error e^{−(t/2)Δ(ε)}u_ε − E₀e^{−(t/2)(Δ_L+W_L)}E₀u_ε and the ε sweep.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{effective_potential, Convention, Tube};
use crate::operators::{assemble_induced_family, assemble_reference_laplacian, e0_projection, DiscreteOperator, DiscreteState, E0Projection, Measure};
use crate::spectral::{ground_pair, Renorm};

use super::evolve::Propagator;
use super::fit::{loglog_fit, LogFit};
use super::limit::LimitOperator;
use super::norms::sobolev_norm;

/// Everything the error computation needs on one discretization level.
#[derive(Clone, Debug)]
pub struct HomogLevel {
    pub tube: Tube,
    pub renorm: Renorm,
    pub convention: Convention,
    pub lambda0: f64,
    /// Ground state produced by `renorm`; E₀ must project on it.
    pub ground: Vec<f64>,
    pub e0: E0Projection,
    /// Unscaled reference Laplacian, the operator of the |||·|||_{2k} norms.
    pub delta0: DiscreteOperator,
    pub limit: LimitOperator,
}

impl HomogLevel {
    /// `probe` is the tube width at which W_L is tabulated.
    pub fn new(tube: Tube, renorm: Renorm, convention: Convention, probe: f64) -> Result<Self> {
        let (lambda0, ground) = ground_pair(&tube.grid, renorm)?;
        let e0 = e0_projection(&ground, &tube.grid)?;
        let delta0 = assemble_reference_laplacian(&tube)?;
        let field = effective_potential(&tube.grid, &tube.density(probe)?, &tube.induced(probe)?, convention)?;
        let limit = LimitOperator::new(&tube.grid.line, &field.w_l)?;
        Ok(HomogLevel { tube, renorm, convention, lambda0, ground, e0, delta0, limit })
    }

    pub fn delta(&self, epsilon: f64) -> Result<DiscreteOperator> {
        assemble_induced_family(epsilon, &self.tube, self.lambda0)
    }

    fn check_conventions(&self) -> Result<()> {
        let d = self.e0.u0.iter().zip(&self.ground).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if self.e0.u0.len() != self.ground.len() || d > 1e-12 {
            return Err(Error::Mismatch(format!(
                "E0 ground state differs from the {} renormalization convention (max deviation {d:.3e})",
                self.renorm.name()
            )));
        }
        Ok(())
    }

    /// u_ε = u₀⊗cos(2π·mode·s/L) + ε·perturbation·(w₁u₀)⊗cos(2π·mode·s/L).
    pub fn initial_state(&self, epsilon: f64, mode: u32, perturbation: f64) -> DiscreteState {
        let grid = &self.tube.grid;
        let nf = grid.fiber.len();
        let k = 2.0 * PI * mode as f64 / grid.length;
        let mut values = Vec::with_capacity(grid.dim());
        for j in 0..grid.ns {
            let v = (k * j as f64 * grid.hs()).cos();
            for i in 0..nf {
                let w = grid.fiber.nodes[grid.fiber.interior[i]][0];
                values.push(self.ground[i] * v * (1.0 + epsilon * perturbation * w));
            }
        }
        DiscreteState::new(values, Measure::Reference)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorRecord {
    pub epsilon: f64,
    pub t: f64,
    pub l2_error: f64,
    /// |||·|||₂ and |||·|||₄ of the difference.
    pub sobolev_errors: [f64; 2],
    pub state_norm: f64,
    pub truncation_bound: f64,
}

/// Compares the evolved state with the lifted limit evolution of its E₀ coefficient.
pub fn homogenization_error(level: &HomogLevel, prop: &Propagator, epsilon: f64, t: f64, u_eps: &DiscreteState, tol: f64) -> Result<ErrorRecord> {
    level.check_conventions()?;
    let grid = &level.tube.grid;
    let ev = prop.evolve(u_eps, t, tol)?;
    let v = level.e0.coefficient(grid, &u_eps.values);
    let vt = level.limit.evolve(&v, t)?;
    let lifted = level.e0.lift(&vt);
    let diff: Vec<f64> = ev.state.values.iter().zip(&lifted).map(|(a, b)| a - b).collect();
    let l2_error = level.delta0.norm(&diff);
    let s2 = sobolev_norm(&diff, 1, &level.delta0)?;
    let s4 = sobolev_norm(&diff, 2, &level.delta0)?;
    Ok(ErrorRecord {
        epsilon,
        t,
        l2_error,
        sobolev_errors: [s2, s4],
        state_norm: level.delta0.norm(&ev.state.values),
        truncation_bound: ev.truncation_bound,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StudyParams {
    pub epsilons: Vec<f64>,
    pub times: Vec<f64>,
    pub mode: u32,
    pub perturbation: f64,
    pub tol: f64,
    /// Eigenpairs computed when Δ(ε) varies along the curve.
    pub count: usize,
    pub seed: u64,
    /// Fiber mesh refinement factor of the certification level.
    pub refine: f64,
    /// Largest accepted relative change of the error under refinement.
    pub certify_threshold: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellRecord {
    pub epsilon: f64,
    pub t: f64,
    pub l2_error: f64,
    pub sobolev2_error: f64,
    pub sobolev4_error: f64,
    pub refined_l2_error: f64,
    /// |e − e_refined| / e_refined.
    pub discretization_change: f64,
    pub certified: bool,
    pub status: String,
}

impl CellRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn rate_flag(&self) -> &'static str {
        if self.ok() && self.certified {
            "fit"
        } else {
            "excluded"
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RateSet {
    pub t: f64,
    pub l2: Option<LogFit>,
    pub sobolev2: Option<LogFit>,
    pub sobolev4: Option<LogFit>,
    /// L² error strictly decreasing along the ε grid (all cells).
    pub l2_decreasing: bool,
    /// |||·|||₂ error strictly decreasing over the certified cells.
    pub sobolev2_decreasing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub params: StudyParams,
    pub cells: Vec<CellRecord>,
    pub rates: Vec<RateSet>,
    /// max over t of the L² error, per ε.
    pub max_over_t: Vec<(f64, f64)>,
}

impl SweepReport {
    pub fn cell(&self, epsilon: f64, t: f64) -> Option<&CellRecord> {
        self.cells.iter().find(|c| c.epsilon == epsilon && c.t == t)
    }

    pub fn rates_at(&self, t: f64) -> Option<&RateSet> {
        self.rates.iter().find(|r| r.t == t)
    }
}

fn strictly_decreasing_in_eps(points: &[(f64, f64)]) -> bool {
    let mut p = points.to_vec();
    p.sort_by(|a, b| b.0.total_cmp(&a.0));
    p.len() >= 2 && p.windows(2).all(|w| w[1].1 < w[0].1)
}

fn cells_for(level: &HomogLevel, refined: &HomogLevel, params: &StudyParams, epsilon: f64) -> Vec<CellRecord> {
    let fail = |t: f64, e: &Error| CellRecord {
        epsilon,
        t,
        l2_error: f64::NAN,
        sobolev2_error: f64::NAN,
        sobolev4_error: f64::NAN,
        refined_l2_error: f64::NAN,
        discretization_change: f64::NAN,
        certified: false,
        status: format!("failed: {e}"),
    };
    let build = |lv: &HomogLevel| -> Result<Propagator> { Propagator::new(&lv.delta(epsilon)?, params.count, params.tol, params.seed) };
    let (prop, prop_r) = match (build(level), build(refined)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return params.times.iter().map(|&t| fail(t, &e)).collect(),
    };
    let u = level.initial_state(epsilon, params.mode, params.perturbation);
    let ur = refined.initial_state(epsilon, params.mode, params.perturbation);
    params
        .times
        .iter()
        .map(|&t| {
            let run = || -> Result<CellRecord> {
                let a = homogenization_error(level, &prop, epsilon, t, &u, params.tol)?;
                let b = homogenization_error(refined, &prop_r, epsilon, t, &ur, params.tol)?;
                let change = (a.l2_error - b.l2_error).abs() / b.l2_error;
                Ok(CellRecord {
                    epsilon,
                    t,
                    l2_error: a.l2_error,
                    sobolev2_error: a.sobolev_errors[0],
                    sobolev4_error: a.sobolev_errors[1],
                    refined_l2_error: b.l2_error,
                    discretization_change: change,
                    certified: change < params.certify_threshold,
                    status: "ok".into(),
                })
            };
            run().unwrap_or_else(|e| fail(t, &e))
        })
        .collect()
}

/// Runs every (ε, t) cell on `level` and on the certification level `refined`.
///
/// Cells are independent; failures are recorded per cell and the sweep continues.
pub fn sweep(level: &HomogLevel, refined: &HomogLevel, params: &StudyParams) -> SweepReport {
    let per_eps: Vec<Vec<CellRecord>> = params.epsilons.par_iter().map(|&e| cells_for(level, refined, params, e)).collect();
    let cells: Vec<CellRecord> = per_eps.into_iter().flatten().collect();
    let rates = params
        .times
        .iter()
        .map(|&t| {
            let at: Vec<&CellRecord> = cells.iter().filter(|c| c.t == t).collect();
            let fit: Vec<&CellRecord> = at.iter().copied().filter(|c| c.rate_flag() == "fit").collect();
            let xs: Vec<f64> = fit.iter().map(|c| c.epsilon).collect();
            let series = |f: fn(&CellRecord) -> f64| loglog_fit(&xs, &fit.iter().map(|c| f(c)).collect::<Vec<_>>());
            let all_l2: Vec<(f64, f64)> = at.iter().map(|c| (c.epsilon, if c.ok() { c.l2_error } else { f64::NAN })).collect();
            let cert_s2: Vec<(f64, f64)> = fit.iter().map(|c| (c.epsilon, c.sobolev2_error)).collect();
            RateSet {
                t,
                l2: series(|c| c.l2_error),
                sobolev2: series(|c| c.sobolev2_error),
                sobolev4: series(|c| c.sobolev4_error),
                l2_decreasing: strictly_decreasing_in_eps(&all_l2),
                sobolev2_decreasing: strictly_decreasing_in_eps(&cert_s2),
            }
        })
        .collect();
    let max_over_t = params
        .epsilons
        .iter()
        .map(|&e| (e, cells.iter().filter(|c| c.epsilon == e).map(|c| c.l2_error).fold(f64::NAN, f64::max)))
        .collect();
    SweepReport { params: params.clone(), cells, rates, max_over_t }
}
