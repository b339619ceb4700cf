use serde::Serialize;

use crate::channel::Scenario;
use crate::manifold::{OptimizationPoint, ProductManifold, TangentDirection};
use crate::objective::{riemannian_gradient, smoothed_objective, ConstraintSet, PenaltyState};

/// Entries smaller than this fraction of the largest entry are compared
/// against that floor instead of their own magnitude.
pub const RELATIVE_FLOOR: f64 = 1e-3;

/// Central differences of an ambient function along every real coordinate,
/// tangent-projected at `x`.
pub fn finite_difference_with<F>(x: &OptimizationPoint, manifold: &ProductManifold, step: f64, f: F) -> TangentDirection
where
    F: Fn(&OptimizationPoint) -> f64,
{
    let shape = x.shape();
    let n = shape.real_dim();
    let mut basis = vec![0.0; n];
    let mut grad = vec![0.0; n];
    for i in 0..n {
        basis[i] = 1.0;
        let e = TangentDirection::from_real(shape, &basis).expect("shape matches");
        grad[i] = (f(&x.offset(&e, step)) - f(&x.offset(&e, -step))) / (2.0 * step);
        basis[i] = 0.0;
    }
    let ambient = TangentDirection::from_real(shape, &grad).expect("shape matches");
    manifold.transport(x, &ambient).expect("shape matches")
}

/// Finite-difference Riemannian gradient of the smoothed penalty objective.
pub fn finite_difference_gradient(
    x: &OptimizationPoint,
    scenario: &Scenario,
    pen: &PenaltyState,
    manifold: &ProductManifold,
    step: f64,
) -> TangentDirection {
    finite_difference_with(x, manifold, step, |p| smoothed_objective(p, scenario, pen))
}

/// `max_i |a_i − b_i| / max(|a_i|, |b_i|, floor·‖b‖_∞)` over real coordinates.
pub fn max_relative_error(a: &TangentDirection, b: &TangentDirection) -> f64 {
    let (a, b) = (a.to_real(), b.to_real());
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(&b)
        .map(|(x, y)| {
            let den = x.abs().max(y.abs()).max(RELATIVE_FLOOR * scale);
            if den > 0.0 {
                (x - y).abs() / den
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct GradientCheck {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_relative_error: f64,
}

/// Analytic against finite-difference Riemannian gradient at `x`.
pub fn check_gradient(
    x: &OptimizationPoint,
    scenario: &Scenario,
    pen: &PenaltyState,
    manifold: &ProductManifold,
    step: f64,
) -> GradientCheck {
    let cs = ConstraintSet::for_scenario(scenario);
    let analytic = riemannian_gradient(x, scenario, pen, &cs, manifold);
    let numeric = finite_difference_gradient(x, scenario, pen, manifold, step);
    GradientCheck {
        max_relative_error: max_relative_error(&analytic, &numeric),
        analytic: analytic.to_real(),
        numeric: numeric.to_real(),
    }
}
