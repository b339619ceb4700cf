//! Limited-memory Riemannian BFGS and the exact-penalty outer loop.

mod line_search;
mod rbfgs;
mod rep;
mod two_loop;

pub use line_search::{armijo_search, LineSearch, MAX_BACKTRACKS};
pub use rbfgs::{rbfgs_inner_solve, InnerResult, InnerStop, TraceContext};
pub use rep::{rep_outer_solve, OuterRecord, RepResult, RepStatus};
pub use two_loop::two_loop_direction;

use serde::{Deserialize, Serialize};

use crate::manifold::{OptimizationPoint, ProductManifold, TangentDirection};
use crate::{Error, Result};

/// A smooth function on the product manifold.
pub trait Objective {
    fn manifold(&self) -> &ProductManifold;

    fn value(&self, x: &OptimizationPoint) -> f64;

    /// Value and Riemannian gradient at `x`.
    fn value_and_gradient(&self, x: &OptimizationPoint) -> (f64, TangentDirection);

    /// Problem-level quantities recorded in the iteration trace.
    fn metrics(&self, _x: &OptimizationPoint) -> IterateMetrics {
        IterateMetrics {
            sum_rate: f64::NAN,
            max_violation: f64::NAN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterateMetrics {
    pub sum_rate: f64,
    pub max_violation: f64,
}

/// One stored curvature pair. `s` and `y` are normalized by `‖s‖` when the
/// pair is created and `delta = 1/⟨s, y⟩` is fixed from then on.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryEntry {
    pub s: TangentDirection,
    pub y: TangentDirection,
    pub delta: f64,
}

/// One accepted inner iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerRecord {
    pub outer: usize,
    pub iteration: usize,
    pub objective: f64,
    pub sum_rate: f64,
    pub max_violation: f64,
    pub rho: f64,
    pub smoothing: f64,
    pub eps: f64,
    pub step: f64,
    /// `|Tr(WWᴴ) − P| / P`
    pub power_residual: f64,
    /// `max_n ||φ_n| − 1|`
    pub modulus_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub memory_size: usize,
    pub sigma_ls: f64,
    pub gamma_ls: f64,
    pub tau0: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub rho0: f64,
    pub theta_rho: f64,
    pub u0: f64,
    pub theta_u: f64,
    pub u_min: f64,
    pub eps0: f64,
    pub theta_eps: f64,
    pub eps_min: f64,
    pub tau_outer: f64,
    /// Largest `max_i h_i` still counted as feasible.
    pub feasibility_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            memory_size: 30,
            sigma_ls: 1e-4,
            gamma_ls: 0.5,
            tau0: 1.0,
            max_inner_iters: 3000,
            max_outer_iters: 30,
            rho0: 10.0,
            theta_rho: 10.0,
            u0: 1e-2,
            theta_u: 0.5,
            u_min: 1e-6,
            eps0: 1e-3,
            theta_eps: 0.5,
            eps_min: 1e-8,
            tau_outer: 1e-6,
            feasibility_tol: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let checks = [
            (self.memory_size >= 1, "memory_size must be >= 1"),
            (unit(self.sigma_ls), "sigma_ls must lie in (0, 1)"),
            (unit(self.gamma_ls), "gamma_ls must lie in (0, 1)"),
            (pos(self.tau0), "tau0 must be > 0"),
            (self.max_inner_iters >= 1, "max_inner_iters must be >= 1"),
            (self.max_outer_iters >= 1, "max_outer_iters must be >= 1"),
            (pos(self.rho0), "rho0 must be > 0"),
            (self.theta_rho > 1.0 && self.theta_rho.is_finite(), "theta_rho must be > 1"),
            (pos(self.u0), "u0 must be > 0"),
            (unit(self.theta_u), "theta_u must lie in (0, 1)"),
            (pos(self.u_min), "u_min must be > 0"),
            (pos(self.eps0), "eps0 must be > 0"),
            (unit(self.theta_eps), "theta_eps must lie in (0, 1)"),
            (pos(self.eps_min), "eps_min must be > 0"),
            (pos(self.tau_outer), "tau_outer must be > 0"),
            (self.feasibility_tol >= 0.0, "feasibility_tol must be >= 0"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidInput(msg.to_string()));
            }
        }
        Ok(())
    }
}
