use serde::{Deserialize, Serialize};

use super::{rbfgs_inner_solve, InnerRecord, SolverConfig, TraceContext};
use crate::channel::Scenario;
use crate::manifold::{OptimizationPoint, ProductManifold};
use crate::objective::{positions, PenalizedProblem, PenaltyState};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepStatus {
    /// Every stopping condition held.
    Converged,
    /// Outer cap reached with a feasible point.
    CapReachedFeasible,
    /// Outer cap reached without ever finding a feasible point.
    Infeasible,
}

impl RepStatus {
    pub fn is_feasible(self) -> bool {
        !matches!(self, RepStatus::Infeasible)
    }
}

/// One outer pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub outer: usize,
    pub rho: f64,
    pub smoothing: f64,
    pub eps: f64,
    pub inner_iters: usize,
    pub sum_rate: f64,
    pub max_violation: f64,
    pub feasible: bool,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct RepResult {
    pub point: OptimizationPoint,
    pub bs_positions: Vec<f64>,
    pub irs_positions: Vec<[f64; 2]>,
    pub status: RepStatus,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    /// Penalty state after the last pass.
    pub penalty: PenaltyState,
    pub sum_rate: f64,
    pub per_user_rates: Vec<f64>,
    pub max_violation: f64,
    pub history: Vec<OuterRecord>,
    pub trace: Vec<InnerRecord>,
}

/// Exact-penalty outer loop: raise `ρ` and revert after an infeasible pass,
/// shrink `u` and `ε` every pass.
pub fn rep_outer_solve(
    x0: &OptimizationPoint,
    scenario: &Scenario,
    manifold: &ProductManifold,
    cfg: &SolverConfig,
) -> Result<RepResult> {
    cfg.validate()?;
    let mut pen = PenaltyState {
        rho: cfg.rho0,
        smoothing: cfg.u0,
        eps: cfg.eps0,
    };
    let mut x = x0.clone();
    let mut history = Vec::new();
    let mut trace = Vec::new();
    let mut inner_total = 0;
    let mut converged = false;
    let mut found_feasible = {
        let problem = PenalizedProblem::new(scenario, pen, *manifold);
        problem.evaluate(&x).max_violation() <= cfg.feasibility_tol
    };

    for outer in 1..=cfg.max_outer_iters {
        let problem = PenalizedProblem::new(scenario, pen, *manifold);
        let ctx = TraceContext {
            outer,
            rho: pen.rho,
            smoothing: pen.smoothing,
            eps: pen.eps,
        };
        let inner = rbfgs_inner_solve(&problem, &x, cfg, &ctx)?;
        inner_total += inner.iterations;
        trace.extend(inner.trace);

        let eval = problem.evaluate(&inner.point);
        let max_violation = eval.max_violation();
        let feasible = max_violation <= cfg.feasibility_tol;
        let step = inner.point.distance(&x);
        history.push(OuterRecord {
            outer,
            rho: pen.rho,
            smoothing: pen.smoothing,
            eps: pen.eps,
            inner_iters: inner.iterations,
            sum_rate: eval.rates.sum,
            max_violation,
            feasible,
            step,
        });

        if feasible {
            x = inner.point;
            found_feasible = true;
        } else {
            pen.rho *= cfg.theta_rho;
        }
        pen.smoothing = (cfg.theta_u * pen.smoothing).max(cfg.u_min);
        pen.eps = (cfg.theta_eps * pen.eps).max(cfg.eps_min);

        if feasible && step < cfg.tau_outer && pen.smoothing <= cfg.u_min && pen.eps <= cfg.eps_min {
            converged = true;
            break;
        }
    }

    let final_problem = PenalizedProblem::new(scenario, pen, *manifold);
    let eval = final_problem.evaluate(&x);
    let max_violation = eval.max_violation();
    let status = if converged {
        RepStatus::Converged
    } else if found_feasible && max_violation <= cfg.feasibility_tol {
        RepStatus::CapReachedFeasible
    } else {
        RepStatus::Infeasible
    };
    let (t, u) = positions(&x, scenario);
    Ok(RepResult {
        point: x,
        bs_positions: t,
        irs_positions: u,
        status,
        outer_iters: history.len(),
        inner_iters_total: inner_total,
        penalty: pen,
        sum_rate: eval.rates.sum,
        per_user_rates: eval.rates.per_user,
        max_violation,
        history,
        trace,
    })
}
