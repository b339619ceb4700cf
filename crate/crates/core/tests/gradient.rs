mod common;

use common::random_instance;
use mairs::harness::gradcheck::finite_difference_with;
use mairs::harness::{check_gradient, max_relative_error};
use mairs::manifold::{FactorMask, OptimizationPoint, ProductManifold, TangentDirection};
use mairs::objective::{
    grad_constraints_positions, grad_rate_phi, grad_rate_positions, grad_rate_w, position_jacobian, positions,
    ConstraintSet, Evaluation, PenaltyState,
};
use mairs::{CMatrix, CVector, RVector, C64};

const STEP: f64 = 1e-6;

fn penalty() -> PenaltyState {
    PenaltyState {
        rho: 10.0,
        smoothing: 0.5,
        eps: 1e-3,
    }
}

#[test]
fn riemannian_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let (s, x) = random_instance(seed);
        let m = ProductManifold::new(s.power);
        let check = check_gradient(&x, &s, &penalty(), &m, STEP);
        assert!(check.max_relative_error <= 1e-5, "seed {seed}: {}", check.max_relative_error);
    }
}

#[test]
fn unpenalized_gradient_matches_with_frozen_factors() {
    let pen = PenaltyState {
        rho: 0.0,
        ..penalty()
    };
    let masks = [
        FactorMask {
            phases: false,
            ..FactorMask::ALL
        },
        FactorMask {
            bs_positions: false,
            irs_positions: false,
            ..FactorMask::ALL
        },
    ];
    for seed in 20..26 {
        let (s, x) = random_instance(seed);
        for mask in masks {
            let m = ProductManifold::with_mask(s.power, mask);
            let check = check_gradient(&x, &s, &pen, &m, STEP);
            assert!(check.max_relative_error <= 1e-5, "seed {seed}: {}", check.max_relative_error);
            let d = TangentDirection::from_real(x.shape(), &check.analytic).unwrap();
            if !mask.phases {
                assert!(d.phi.iter().all(|z| *z == C64::new(0.0, 0.0)));
            }
            if !mask.bs_positions {
                assert!(d.o.iter().all(|v| *v == 0.0) && d.p.iter().all(|v| *v == 0.0));
            }
        }
    }
}

/// Rate of user `k` as a function of the point, for per-factor checks.
fn rate_k(s: &mairs::channel::Scenario, k: usize) -> impl Fn(&OptimizationPoint) -> f64 + '_ {
    move |p| Evaluation::new(p, s, &ConstraintSet::for_scenario(s)).rates.per_user[k]
}

#[test]
fn per_user_rate_gradients_match_finite_differences() {
    for seed in 30..36 {
        let (s, x) = random_instance(seed);
        let eval = Evaluation::new(&x, &s, &ConstraintSet::for_scenario(&s));
        let h = &eval.effective;
        for k in 0..s.users() {
            let gw = grad_rate_w(h, &x.w, k, s.noise_power);
            let gphi = grad_rate_phi(h, &x.w, &eval.channels.bs_irs, &eval.channels.irs_ue[k], k, s.noise_power);
            let (gt, gu) = grad_rate_positions(&x, &s, k);

            // plain ambient differences, no projection
            let fd = {
                let shape = x.shape();
                let n = shape.real_dim();
                let f = rate_k(&s, k);
                let mut basis = vec![0.0; n];
                let mut g = vec![0.0; n];
                for i in 0..n {
                    basis[i] = 1.0;
                    let e = TangentDirection::from_real(shape, &basis).unwrap();
                    g[i] = (f(&x.offset(&e, STEP)) - f(&x.offset(&e, -STEP))) / (2.0 * STEP);
                    basis[i] = 0.0;
                }
                TangentDirection::from_real(shape, &g).unwrap()
            };
            let jo = position_jacobian(&x.o, s.bs_region());
            let jp = position_jacobian(&x.p, s.irs_region());
            let analytic = TangentDirection {
                w: gw,
                phi: gphi,
                o: gt.component_mul(&jo),
                p: gu.component_mul(&jp),
            };
            let err = max_relative_error(&analytic, &fd);
            assert!(err <= 1e-5, "seed {seed} user {k}: {err}");
        }
    }
}

#[test]
fn spacing_constraint_gradients_match_finite_differences() {
    for seed in 40..46 {
        let (s, x) = random_instance(seed);
        let cs = ConstraintSet::for_scenario(&s);
        let grads = grad_constraints_positions(&x, &s);
        assert_eq!(grads.len(), cs.bs_pairs.len() + cs.irs_pairs.len());
        for (i, (go, gp)) in grads.iter().enumerate() {
            let f = |p: &OptimizationPoint| Evaluation::new(p, &s, &cs).constraints[i];
            for j in 0..x.o.len() {
                let mut e = TangentDirection::zeros_like(&x);
                e.o[j] = 1.0;
                let fd = (f(&x.offset(&e, STEP)) - f(&x.offset(&e, -STEP))) / (2.0 * STEP);
                assert!((fd - go[j]).abs() <= 1e-6 * (1.0 + go[j].abs()), "o[{j}] pair {i}");
            }
            for j in 0..x.p.len() {
                let mut e = TangentDirection::zeros_like(&x);
                e.p[j] = 1.0;
                let fd = (f(&x.offset(&e, STEP)) - f(&x.offset(&e, -STEP))) / (2.0 * STEP);
                assert!((fd - gp[j]).abs() <= 1e-6 * (1.0 + gp[j].abs()), "p[{j}] pair {i}");
            }
        }
    }
}

#[test]
fn single_path_single_element_position_gradient() {
    // K = 1, N = M = 1, L = 1: the rate moves with position only through one phase
    use mairs::harness::{generate_scenario, ScenarioParams};
    let params = ScenarioParams {
        bs_antennas: 1,
        irs_elements: 1,
        users: 1,
        paths: 1,
        min_rate: 0.0,
        ..ScenarioParams::default()
    };
    let s = generate_scenario(3, &params).unwrap();
    let x = OptimizationPoint {
        w: CMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
        phi: CVector::from_element(1, C64::from_polar(1.0, 0.4)),
        o: RVector::from_element(1, 0.3),
        p: RVector::from_vec(vec![-0.2, 0.5]),
    };
    let (g_t, g_u) = grad_rate_positions(&x, &s, 0);
    // |G| and |f| are position independent, so |h| is too
    assert!(g_t[0].abs() < 1e-9 && g_u.iter().all(|v| v.abs() < 1e-9));
    let (t, u) = positions(&x, &s);
    assert_eq!(t.len(), 1);
    assert_eq!(u.len(), 1);
    let m = ProductManifold::new(s.power);
    let fd = finite_difference_with(&x, &m, STEP, rate_k(&s, 0));
    assert!(fd.o.iter().chain(fd.p.iter()).all(|v| v.abs() < 1e-6));
}
