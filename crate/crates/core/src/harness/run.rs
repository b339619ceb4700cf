use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::init::{initialize_variables, ura_side};
use super::scenario::perturb_fri;
use super::scheme::{quantize_phases, PhaseMode, PositionMode, SchemeSpec};
use crate::channel::Scenario;
use crate::manifold::{OptimizationPoint, ProductManifold};
use crate::objective::{ConstraintSet, Evaluation};
use crate::solver::{rep_outer_solve, InnerRecord, OuterRecord, RepStatus, SolverConfig};
use crate::Result;

/// Per-run settings beyond the solver configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Seeds random phases and FRI perturbation.
    pub seed: u64,
    /// Maximum angle error `μ` of the FRI used for optimization.
    pub angle_error: f64,
    /// Normalized path-response error variance `ν`.
    pub response_error: f64,
    /// Measure wall time; otherwise `wall_ms` is 0 so outputs stay
    /// reproducible byte for byte.
    pub record_wall_time: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchemeResult {
    pub scheme: String,
    /// Sum-rate on the true channel.
    pub sum_rate: f64,
    pub per_user_rates: Vec<f64>,
    pub min_user_rate: f64,
    /// `max_i h_i` on the true channel.
    pub max_violation: f64,
    pub feasible: bool,
    pub status: RepStatus,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub final_rho: f64,
    pub wall_ms: f64,
    pub bs_positions: Vec<f64>,
    pub irs_positions: Vec<[f64; 2]>,
    #[serde(skip)]
    pub point: Option<OptimizationPoint>,
    pub history: Vec<OuterRecord>,
    #[serde(skip)]
    pub trace: Vec<InnerRecord>,
}

/// The scenario a scheme actually runs on: URA swaps in the dense grid.
pub fn scheme_scenario(scenario: &Scenario, scheme: &SchemeSpec) -> Scenario {
    let mut s = scenario.clone();
    if scheme.irs_mode == PositionMode::DenseGrid {
        let side = ura_side(scenario.irs_region_wl);
        s.irs_elements = side * side;
    }
    s
}

/// Optimize `scheme` on (possibly perturbed) FRI, then report rates and
/// constraints on the true channel.
pub fn run_scheme(
    scenario: &Scenario,
    scheme: &SchemeSpec,
    cfg: &SolverConfig,
    opts: &RunOptions,
) -> Result<SchemeResult> {
    scheme.validate()?;
    let truth = scheme_scenario(scenario, scheme);
    truth.validate()?;
    let mut estimate = truth.clone();
    if opts.angle_error > 0.0 || opts.response_error > 0.0 {
        estimate.fri = perturb_fri(&truth.fri, opts.angle_error, opts.response_error, opts.seed);
    }

    let start = Instant::now();
    let x0 = initialize_variables(&estimate, scheme, opts.seed)?;
    let manifold = ProductManifold::with_mask(estimate.power, scheme.mask());
    let rep = rep_outer_solve(&x0, &estimate, &manifold, cfg)?;
    let wall_ms = if opts.record_wall_time {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };

    let mut point = rep.point;
    if let PhaseMode::Discrete(levels) = scheme.phase_mode {
        point.phi = quantize_phases(&point.phi, levels);
    }
    let eval = Evaluation::new(&point, &truth, &ConstraintSet::for_scenario(&truth));
    let max_violation = eval.max_violation();
    let feasible = rep.status.is_feasible() && max_violation <= cfg.feasibility_tol;

    Ok(SchemeResult {
        scheme: scheme.to_string(),
        sum_rate: eval.rates.sum,
        min_user_rate: eval.rates.min(),
        per_user_rates: eval.rates.per_user,
        max_violation,
        feasible,
        status: rep.status,
        outer_iters: rep.outer_iters,
        inner_iters_total: rep.inner_iters_total,
        final_rho: rep.penalty.rho,
        wall_ms,
        bs_positions: eval.bs_positions,
        irs_positions: eval.irs_positions,
        point: Some(point),
        history: rep.history,
        trace: rep.trace,
    })
}
