use std::collections::VecDeque;

use super::{armijo_search, two_loop_direction, InnerRecord, LineSearch, MemoryEntry, Objective, SolverConfig};
use crate::manifold::OptimizationPoint;
use crate::{Error, Result};

/// Penalty state stamped on every trace record of one inner solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceContext {
    pub outer: usize,
    pub rho: f64,
    pub smoothing: f64,
    /// Stopping tolerance on `‖X⁺ − X‖`.
    pub eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerStop {
    /// Accepted step shorter than the tolerance.
    SmallStep,
    /// The line search found no acceptable step.
    Stagnated,
    IterationCap,
}

#[derive(Clone, Debug)]
pub struct InnerResult {
    pub point: OptimizationPoint,
    pub value: f64,
    pub iterations: usize,
    pub stop: InnerStop,
    /// Iteration 0 is the starting point.
    pub trace: Vec<InnerRecord>,
}

fn record<O: Objective + ?Sized>(
    obj: &O,
    x: &OptimizationPoint,
    value: f64,
    iteration: usize,
    step: f64,
    ctx: &TraceContext,
) -> InnerRecord {
    let m = obj.metrics(x);
    let diag = obj.manifold().validate_point(x);
    InnerRecord {
        outer: ctx.outer,
        iteration,
        objective: value,
        sum_rate: m.sum_rate,
        max_violation: m.max_violation,
        rho: ctx.rho,
        smoothing: ctx.smoothing,
        eps: ctx.eps,
        step,
        power_residual: diag.power_residual,
        modulus_residual: diag.max_modulus_residual,
    }
}

fn check_finite(value: f64, iteration: usize, what: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { iteration, what, value })
    }
}

/// Limited-memory RBFGS with Armijo steps and cautious memory updates.
pub fn rbfgs_inner_solve<O: Objective + ?Sized>(
    obj: &O,
    x0: &OptimizationPoint,
    cfg: &SolverConfig,
    ctx: &TraceContext,
) -> Result<InnerResult> {
    let manifold = obj.manifold();
    let mut x = x0.clone();
    let (mut value, mut grad) = obj.value_and_gradient(&x);
    check_finite(value, 0, "objective")?;
    check_finite(grad.norm(), 0, "gradient norm")?;

    let mut trace = vec![record(obj, &x, value, 0, 0.0, ctx)];
    let mut memory: VecDeque<MemoryEntry> = VecDeque::with_capacity(cfg.memory_size + 1);
    let mut stop = InnerStop::IterationCap;
    let mut iterations = 0;

    for l in 1..=cfg.max_inner_iters {
        iterations = l;
        let mut d = two_loop_direction(&grad, memory.make_contiguous()).map_err(|e| match e {
            Error::NonFinite { what, value, .. } => Error::NonFinite { iteration: l, what, value },
            other => other,
        })?;
        if !(grad.dot(&d) < 0.0) {
            memory.clear();
            d = -&grad;
        }
        if memory.is_empty() {
            // no curvature yet: cap the trial step at unit length so the
            // pre-images are not thrown into the flat tanh tails
            let n = d.norm();
            if n > 1.0 {
                d.scale_mut(1.0 / n);
            }
        }

        let (alpha, x_next, value_next) = match armijo_search(obj, &x, &d, value, &grad, cfg) {
            LineSearch::Accepted {
                alpha, point, value, ..
            } => (alpha, point, value),
            LineSearch::Stagnated => {
                stop = InnerStop::Stagnated;
                break;
            }
        };
        check_finite(value_next, l, "objective")?;
        let (_, grad_next) = obj.value_and_gradient(&x_next);
        check_finite(grad_next.norm(), l, "gradient norm")?;

        let step = x_next.distance(&x);
        trace.push(record(obj, &x_next, value_next, l, step, ctx));

        if step <= ctx.eps {
            x = x_next;
            value = value_next;
            stop = InnerStop::SmallStep;
            break;
        }

        let mut s = manifold.transport(&x_next, &(&d * alpha))?;
        let mut y = &grad_next - &manifold.transport(&x_next, &grad)?;
        for e in memory.iter_mut() {
            e.s = manifold.transport(&x_next, &e.s)?;
            e.y = manifold.transport(&x_next, &e.y)?;
        }
        let ss = s.dot(&s);
        let sy = s.dot(&y);
        if ss > 0.0 && sy >= 1e-4 * ss * grad.norm() && sy > 0.0 {
            let inv = 1.0 / ss.sqrt();
            s.scale_mut(inv);
            y.scale_mut(inv);
            let delta = 1.0 / s.dot(&y);
            if delta.is_finite() && delta > 0.0 {
                memory.push_back(MemoryEntry { s, y, delta });
                if memory.len() > cfg.memory_size {
                    memory.pop_front();
                }
            }
        }

        x = x_next;
        value = value_next;
        grad = grad_next;
    }

    Ok(InnerResult {
        point: x,
        value,
        iterations,
        stop,
        trace,
    })
}
