use std::f64::consts::{LN_2, PI};

use mairs::harness::quantize_phases;
use mairs::manifold::{OptimizationPoint, ProductManifold, TangentDirection, MODULUS_TOL, POWER_TOL, TANGENCY_TOL};
use mairs::objective::{lse_penalty, lse_weight, position_projection};
use mairs::{CMatrix, CVector, RVector, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    manifold: ProductManifold,
    x: OptimizationPoint,
    d: TangentDirection,
    e: TangentDirection,
}

fn ambient(rng: &mut ChaCha8Rng, m: usize, k: usize, n: usize, scale: f64) -> TangentDirection {
    let mut c = || C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
    let w = CMatrix::from_fn(m, k, |_, _| c());
    let phi = CVector::from_fn(n, |_, _| c());
    let o = RVector::from_fn(m, |_, _| rng.random_range(-scale..scale));
    let p = RVector::from_fn(2 * n, |_, _| rng.random_range(-scale..scale));
    TangentDirection { w, phi, o, p }
}

fn case(seed: u64, power: f64, scale: f64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, k, n) = (rng.random_range(1..=5), rng.random_range(1..=4), rng.random_range(1..=9));
    let mut w = CMatrix::from_fn(m, k, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    w *= C64::new((power / w.norm_squared()).sqrt(), 0.0);
    let phi = CVector::from_fn(n, |_, _| C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)));
    let o = RVector::from_fn(m, |_, _| rng.random_range(-3.0..3.0));
    let p = RVector::from_fn(2 * n, |_, _| rng.random_range(-3.0..3.0));
    let x = OptimizationPoint { w, phi, o, p };
    let d = ambient(&mut rng, m, k, n, scale);
    let e = ambient(&mut rng, m, k, n, scale);
    Case {
        manifold: ProductManifold::new(power),
        x,
        d,
        e,
    }
}

fn dist(a: &TangentDirection, b: &TangentDirection) -> f64 {
    (a - b).norm()
}

proptest! {
    #[test]
    fn retraction_stays_on_the_manifold(seed in any::<u64>(), power in 1e-3f64..1e3, scale in 1e-6f64..1e2, alpha in 0.0f64..10.0) {
        let c = case(seed, power, scale);
        let d = c.manifold.transport(&c.x, &c.d).unwrap();
        let y = c.manifold.retract(&c.x, &d, alpha).unwrap();
        let diag = c.manifold.validate_point(&y);
        prop_assert!(diag.power_residual <= POWER_TOL, "power residual {}", diag.power_residual);
        prop_assert!(diag.max_modulus_residual <= MODULUS_TOL);
        prop_assert!(diag.finite);
    }

    #[test]
    fn zero_step_retraction_is_identity(seed in any::<u64>()) {
        let c = case(seed, 1.0, 1.0);
        let d = c.manifold.transport(&c.x, &c.d).unwrap();
        let y = c.manifold.retract(&c.x, &d, 0.0).unwrap();
        prop_assert!(y.distance(&c.x) <= 1e-14);
    }

    #[test]
    fn projection_is_tangent_and_idempotent(seed in any::<u64>(), scale in 1e-6f64..1e3) {
        let c = case(seed, 2.0, scale);
        let once = c.manifold.transport(&c.x, &c.d).unwrap();
        let twice = c.manifold.transport(&c.x, &once).unwrap();
        let (rw, rphi) = c.manifold.tangency_residual(&c.x, &once);
        prop_assert!(rw <= TANGENCY_TOL && rphi <= TANGENCY_TOL * (1.0 + scale), "{rw} {rphi}");
        prop_assert!(dist(&once, &twice) <= 1e-12 * (1.0 + once.norm()));
    }

    #[test]
    fn projection_never_lengthens(seed in any::<u64>(), scale in 1e-6f64..1e3) {
        let c = case(seed, 1.0, scale);
        let t = c.manifold.transport(&c.x, &c.d).unwrap();
        prop_assert!(t.norm() <= c.d.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn transported_directions_are_tangent_at_the_new_point(seed in any::<u64>(), alpha in 1e-3f64..5.0) {
        let c = case(seed, 3.0, 1.0);
        let d = c.manifold.transport(&c.x, &c.d).unwrap();
        let y = c.manifold.retract(&c.x, &d, alpha).unwrap();
        let moved = c.manifold.transport(&y, &c.e).unwrap();
        let (rw, rphi) = c.manifold.tangency_residual(&y, &moved);
        prop_assert!(rw <= TANGENCY_TOL && rphi <= TANGENCY_TOL, "{rw} {rphi}");
    }

    #[test]
    fn metric_is_symmetric_and_positive(seed in any::<u64>()) {
        let c = case(seed, 1.0, 1.0);
        let ab = c.manifold.inner_product(&c.d, &c.e).unwrap();
        let ba = c.manifold.inner_product(&c.e, &c.d).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab.abs()));
        prop_assert!(c.manifold.inner_product(&c.d, &c.d).unwrap() >= 0.0);
        // bilinear in the first argument
        let two = c.manifold.inner_product(&(&c.d * 2.0), &c.e).unwrap();
        prop_assert!((two - 2.0 * ab).abs() <= 1e-12 * (1.0 + ab.abs()));
    }

    #[test]
    fn quantized_phases_are_nearest_grid_points(angles in prop::collection::vec(-10.0f64..10.0, 1..20), bits in 1u32..6) {
        let levels = 1u32 << bits;
        let phi = CVector::from_iterator(angles.len(), angles.iter().map(|&a| C64::from_polar(1.0, a)));
        let q = quantize_phases(&phi, levels);
        let step = 2.0 * PI / levels as f64;
        for (z, zq) in phi.iter().zip(q.iter()) {
            prop_assert!((zq.norm() - 1.0).abs() <= 1e-12);
            let idx = zq.arg().rem_euclid(2.0 * PI) / step;
            prop_assert!((idx - idx.round()).abs() <= 1e-9);
            // angular gap at most half a step
            let gap = (z * zq.conj()).arg().abs();
            prop_assert!(gap <= step / 2.0 + 1e-12, "gap {gap}");
        }
    }

    #[test]
    fn projected_positions_stay_inside(v in prop::collection::vec(-50.0f64..50.0, 1..12), edge in 1e-3f64..1.0) {
        let t = position_projection(&RVector::from_vec(v), edge);
        prop_assert!(t.iter().all(|x| x.abs() <= edge / 2.0));
    }

    #[test]
    fn smoothed_penalty_brackets_the_hinge(h in -10.0f64..10.0, u in 1e-6f64..2.0) {
        let s = lse_penalty(h, u);
        prop_assert!(s >= h.max(0.0) - 1e-12);
        prop_assert!(s <= h.max(0.0) + u * LN_2 + 1e-12);
        let w = lse_weight(h, u);
        prop_assert!((0.0..=1.0).contains(&w));
    }
}
