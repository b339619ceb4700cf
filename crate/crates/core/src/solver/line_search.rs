use super::{Objective, SolverConfig};
use crate::manifold::{OptimizationPoint, TangentDirection};
use crate::Error;

/// Backtracking cap; hitting it is reported as stagnation.
pub const MAX_BACKTRACKS: usize = 60;

#[derive(Clone, Debug)]
pub enum LineSearch {
    Accepted {
        alpha: f64,
        point: OptimizationPoint,
        value: f64,
        backtracks: usize,
    },
    Stagnated,
}

/// Armijo backtracking along `d`: the first `α = γⁿ τ` with
/// `g(R_X(α d)) ≤ g(X) + σ α ⟨grad, d⟩`.
///
/// Trial points whose retraction degenerates or whose value is not finite are
/// rejected like any other failed trial.
pub fn armijo_search<O: Objective + ?Sized>(
    obj: &O,
    x: &OptimizationPoint,
    d: &TangentDirection,
    value: f64,
    grad: &TangentDirection,
    cfg: &SolverConfig,
) -> LineSearch {
    let slope = grad.dot(d);
    let mut alpha = cfg.tau0;
    for n in 0..=MAX_BACKTRACKS {
        match obj.manifold().retract(x, d, alpha) {
            Ok(trial) => {
                let g = obj.value(&trial);
                if g <= value + cfg.sigma_ls * alpha * slope {
                    return LineSearch::Accepted {
                        alpha,
                        point: trial,
                        value: g,
                        backtracks: n,
                    };
                }
            }
            Err(Error::DegenerateRetraction(_)) => {}
            Err(_) => return LineSearch::Stagnated,
        }
        alpha *= cfg.gamma_ls;
    }
    LineSearch::Stagnated
}
