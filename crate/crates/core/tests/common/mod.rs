#![allow(dead_code)]

use mairs::channel::Scenario;
use mairs::harness::{generate_scenario, ScenarioParams};
use mairs::manifold::OptimizationPoint;
use mairs::{CMatrix, CVector, RVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Random small scenario in the ranges used by the gradient checks.
pub fn random_instance(seed: u64) -> (Scenario, OptimizationPoint) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = ScenarioParams {
        bs_antennas: rng.random_range(2..=4),
        irs_elements: rng.random_range(3..=8),
        users: rng.random_range(2..=3),
        paths: rng.random_range(2..=6),
        bs_region_wl: 2.0,
        irs_region_wl: 2.0,
        ..ScenarioParams::default()
    };
    let mut s = generate_scenario(seed, &params).unwrap();
    let x = random_point(&s, &mut rng);
    // put the rate threshold among the users' rates so some penalties bite
    let rates = mairs::objective::Evaluation::new(&x, &s, &mairs::objective::ConstraintSet::for_scenario(&s)).rates;
    s.min_rate = rates.per_user.iter().sum::<f64>() / rates.per_user.len() as f64;
    (s, x)
}

pub fn random_point(s: &Scenario, rng: &mut ChaCha8Rng) -> OptimizationPoint {
    let (m, k, n) = (s.bs_antennas, s.users(), s.irs_elements);
    let mut w = CMatrix::from_fn(m, k, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    w *= C64::new((s.power / w.norm_squared()).sqrt(), 0.0);
    let phi = CVector::from_fn(n, |_, _| C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)));
    let o = RVector::from_fn(m, |_, _| rng.random_range(-1.5..1.5));
    let p = RVector::from_fn(2 * n, |_, _| rng.random_range(-1.5..1.5));
    OptimizationPoint { w, phi, o, p }
}
