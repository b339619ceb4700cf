//! Constraint functions, the smoothed exact-penalty objective and its
//! analytic gradients.
//!
//! Gradients of real functions of complex arguments use the real-metric
//! convention `∇_Z = 2 ∂/∂Z*`, so that the directional derivative along `ξ`
//! is `Re Tr(∇ᴴ ξ)`, matching the manifold metric. Rates are in bits, so every
//! rate gradient carries a `1/ln 2` factor.
//!
//! All rate gradients go through one kernel, [`weighted_rate_gradient`],
//! which differentiates `Σ_k ω_k r_k` through the cross gains
//! `a_kj = h_kᴴ w_j`:
//!
//! ```text
//! r_k = (ln T_k − ln D_k)/ln 2,   T_k = Σ_j |a_kj|² + σ²,   D_k = T_k − |a_kk|²
//! d(Σ ω_k r_k) = Σ_kj 2 Re(ψ_kj* da_kj),   ψ_kj = ω_k (1/T_k − [j≠k]/D_k) a_kj / ln 2
//! ```

use std::f64::consts::LN_2;

use crate::channel::{pairs_from_flat, rate_and_sum, Channels, Rates, Scenario};
use crate::manifold::{OptimizationPoint, ProductManifold, TangentDirection};
use crate::solver::{IterateMetrics, Objective};
use crate::{CMatrix, CVector, RVector, C64};

/// Index layout of the inequality constraints: BS pairs, then IRS pairs,
/// then one minimum-rate constraint per user.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    pub bs_pairs: Vec<(usize, usize)>,
    pub irs_pairs: Vec<(usize, usize)>,
    pub users: usize,
    /// Minimum antenna spacing, `λ/2`.
    pub min_distance: f64,
    /// Minimum rate `Γ`.
    pub min_rate: f64,
}

fn unordered_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            out.push((a, b));
        }
    }
    out
}

impl ConstraintSet {
    pub fn new(bs_antennas: usize, irs_elements: usize, users: usize, wavelength: f64, min_rate: f64) -> Self {
        ConstraintSet {
            bs_pairs: unordered_pairs(bs_antennas),
            irs_pairs: unordered_pairs(irs_elements),
            users,
            min_distance: wavelength / 2.0,
            min_rate,
        }
    }

    pub fn for_scenario(s: &Scenario) -> Self {
        Self::new(s.bs_antennas, s.irs_elements, s.users(), s.wavelength(), s.min_rate)
    }

    pub fn len(&self) -> usize {
        self.bs_pairs.len() + self.irs_pairs.len() + self.users
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offset of the first rate constraint.
    pub fn rate_offset(&self) -> usize {
        self.bs_pairs.len() + self.irs_pairs.len()
    }
}

/// Penalty weight `ρ`, smoothing parameter `u` and inner tolerance `ε`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PenaltyState {
    pub rho: f64,
    pub smoothing: f64,
    pub eps: f64,
}

/// `(A/2)·tanh(v)` entrywise.
pub fn position_projection(v: &RVector, edge: f64) -> RVector {
    v.map(|x| 0.5 * edge * x.tanh())
}

/// Derivative of [`position_projection`]: `(A/2)(1 − tanh²(v))`.
pub fn position_jacobian(v: &RVector, edge: f64) -> RVector {
    v.map(|x| {
        let t = x.tanh();
        0.5 * edge * (1.0 - t * t)
    })
}

/// `u·log(1 + e^{h/u})`, evaluated without overflow.
pub fn lse_penalty(h: f64, u: f64) -> f64 {
    let z = h / u;
    u * (z.max(0.0) + (-z.abs()).exp().ln_1p())
}

/// Logistic weight `e^{h/u} / (1 + e^{h/u})`.
pub fn lse_weight(h: f64, u: f64) -> f64 {
    let z = h / u;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn lse_weights(h: &[f64], u: f64) -> Vec<f64> {
    h.iter().map(|&hi| lse_weight(hi, u)).collect()
}

/// Antenna positions in metres for a point.
pub fn positions(x: &OptimizationPoint, scenario: &Scenario) -> (Vec<f64>, Vec<[f64; 2]>) {
    let t = position_projection(&x.o, scenario.bs_region());
    let u = position_projection(&x.p, scenario.irs_region());
    (t.as_slice().to_vec(), pairs_from_flat(u.as_slice()))
}

/// Everything derived from a point that the objective needs.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub bs_positions: Vec<f64>,
    pub irs_positions: Vec<[f64; 2]>,
    pub channels: Channels,
    /// `H = [h_1, …, h_K]`.
    pub effective: CMatrix,
    pub rates: Rates,
    /// Constraint values in [`ConstraintSet`] order.
    pub constraints: Vec<f64>,
}

impl Evaluation {
    pub fn new(x: &OptimizationPoint, scenario: &Scenario, cs: &ConstraintSet) -> Evaluation {
        let (t, u) = positions(x, scenario);
        let channels = Channels::evaluate(&scenario.fri, &t, &u);
        let effective = channels.effective(&x.phi);
        let rates = rate_and_sum(&effective, &x.w, scenario.noise_power);
        let constraints = constraint_values_at(&t, &u, &rates, cs);
        Evaluation {
            bs_positions: t,
            irs_positions: u,
            channels,
            effective,
            rates,
            constraints,
        }
    }

    pub fn max_violation(&self) -> f64 {
        self.constraints.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn objective(&self, pen: &PenaltyState) -> f64 {
        let penalty: f64 = self.constraints.iter().map(|&h| lse_penalty(h, pen.smoothing)).sum();
        if pen.rho == 0.0 {
            -self.rates.sum
        } else {
            -self.rates.sum + pen.rho * penalty
        }
    }
}

fn constraint_values_at(t: &[f64], u: &[[f64; 2]], rates: &Rates, cs: &ConstraintSet) -> Vec<f64> {
    let mut h = Vec::with_capacity(cs.len());
    for &(a, b) in &cs.bs_pairs {
        h.push(cs.min_distance - (t[a] - t[b]).abs());
    }
    for &(a, b) in &cs.irs_pairs {
        let dx = u[a][0] - u[b][0];
        let dy = u[a][1] - u[b][1];
        h.push(cs.min_distance - dx.hypot(dy));
    }
    for r in &rates.per_user {
        h.push(cs.min_rate - r);
    }
    h
}

/// All `h_i(X)`; the point is feasible iff every entry is `≤ 0`.
pub fn constraint_values(x: &OptimizationPoint, scenario: &Scenario) -> Vec<f64> {
    Evaluation::new(x, scenario, &ConstraintSet::for_scenario(scenario)).constraints
}

/// `g(X) = −Σ r_k + ρ Σ_i u·log(1 + e^{h_i/u})`.
pub fn smoothed_objective(x: &OptimizationPoint, scenario: &Scenario, pen: &PenaltyState) -> f64 {
    Evaluation::new(x, scenario, &ConstraintSet::for_scenario(scenario)).objective(pen)
}

/// Euclidean gradient of a weighted rate sum with respect to `W`, `φ`, and
/// the antenna positions `t`, `u` (metres).
#[derive(Clone, Debug)]
pub struct RateGradient {
    pub w: CMatrix,
    pub phi: CVector,
    pub t: RVector,
    pub u: RVector,
}

/// `ψ_kj` from the module docs; `K × K`.
fn sensitivity(h: &CMatrix, w: &CMatrix, weights: &[f64], noise_power: f64) -> CMatrix {
    let a = h.ad_mul(w);
    let k_users = a.nrows();
    let mut psi = CMatrix::zeros(k_users, a.ncols());
    for k in 0..k_users {
        let total: f64 = a.row(k).iter().map(|z| z.norm_sqr()).sum::<f64>() + noise_power;
        let denom = total - a[(k, k)].norm_sqr();
        for j in 0..a.ncols() {
            let beta = if j == k { 1.0 / total } else { 1.0 / total - 1.0 / denom };
            psi[(k, j)] = a[(k, j)] * (weights[k] * beta / LN_2);
        }
    }
    psi
}

/// `∂/∂W*` (real-metric convention) of `Σ_k ω_k r_k`: `2 H Ψ`.
fn weighted_grad_w(h: &CMatrix, psi: &CMatrix) -> CMatrix {
    h * psi * C64::new(2.0, 0.0)
}

/// Derivatives of `G` and `f_k` with respect to the positions.
struct ChannelDerivatives {
    /// `∂G[n,m]/∂t_m`
    g_dt: CMatrix,
    /// `∂G[n,m]/∂u_n,x` and `∂G[n,m]/∂u_n,y`
    g_du: [CMatrix; 2],
    /// `∂f_k[n]/∂u_n,x` and `∂f_k[n]/∂u_n,y` per user
    f_du: Vec<[CVector; 2]>,
}

impl ChannelDerivatives {
    fn evaluate(scenario: &Scenario, t: &[f64], u: &[[f64; 2]]) -> Self {
        let fri = &scenario.fri;
        let kappa = fri.wavenumber();
        let rho_t = fri.bs_steering();
        let rho_r = fri.irs_steering();
        let (n_el, m_ant) = (u.len(), t.len());
        let mut g_dt = CMatrix::zeros(n_el, m_ant);
        let mut g_du = [CMatrix::zeros(n_el, m_ant), CMatrix::zeros(n_el, m_ant)];
        let j = C64::new(0.0, 1.0);
        for (l, sigma) in fri.bs_irs_responses.iter().enumerate() {
            for (n, un) in u.iter().enumerate() {
                let irs = C64::from_polar(1.0, -kappa * (rho_r[l][0] * un[0] + rho_r[l][1] * un[1])) * sigma;
                for (m, tm) in t.iter().enumerate() {
                    let term = irs * C64::from_polar(1.0, kappa * rho_t[l] * tm) * j * kappa;
                    g_dt[(n, m)] += term * rho_t[l];
                    g_du[0][(n, m)] -= term * rho_r[l][0];
                    g_du[1][(n, m)] -= term * rho_r[l][1];
                }
            }
        }
        let f_du = fri
            .irs_ue_responses
            .iter()
            .map(|resp| {
                let mut d = [CVector::zeros(n_el), CVector::zeros(n_el)];
                for (n, un) in u.iter().enumerate() {
                    for (l, s) in resp.iter().enumerate() {
                        let term = s * C64::from_polar(1.0, kappa * (rho_r[l][0] * un[0] + rho_r[l][1] * un[1])) * j * kappa;
                        d[0][n] += term * rho_r[l][0];
                        d[1][n] += term * rho_r[l][1];
                    }
                }
                d
            })
            .collect();
        ChannelDerivatives { g_dt, g_du, f_du }
    }
}

/// Gradient of `Σ_k ω_k r_k` with respect to `W`, `φ`, `t` and `u`.
pub fn weighted_rate_gradient(
    x: &OptimizationPoint,
    eval: &Evaluation,
    scenario: &Scenario,
    weights: &[f64],
) -> RateGradient {
    let w = &x.w;
    let h = &eval.effective;
    let g = &eval.channels.bs_irs;
    let f = &eval.channels.irs_ue;
    let psi = sensitivity(h, w, weights, scenario.noise_power);
    let psi_h = psi.adjoint();
    let two = 2.0;

    let grad_w = weighted_grad_w(h, &psi);

    // V Ψᴴ with V = G W
    let v_psi = g * w * &psi_h;
    let n_el = g.nrows();
    let mut grad_phi = CVector::zeros(n_el);
    for (k, f_k) in f.iter().enumerate() {
        for n in 0..n_el {
            grad_phi[n] += f_k[n].conj() * v_psi[(n, k)] * two;
        }
    }

    let d = ChannelDerivatives::evaluate(scenario, &eval.bs_positions, &eval.irs_positions);

    // t: Σ_k 2 Re(c_km (W Ψᴴ)[m,k]),  c_km = Σ_n conj(φ_n f_k[n]) Gdt[n,m]
    let w_psi = w * &psi_h;
    let m_ant = w.nrows();
    let mut grad_t = RVector::zeros(m_ant);
    for (k, f_k) in f.iter().enumerate() {
        let q = f_k.component_mul(&x.phi).map(|z| z.conj());
        let c = d.g_dt.tr_mul(&q);
        for m in 0..m_ant {
            grad_t[m] += two * (c[m] * w_psi[(m, k)]).re;
        }
    }

    // u: Σ_k 2 Re(conj(φ_n) [conj(∂f_k[n]) (VΨᴴ)[n,k] + conj(f_k[n]) (∂G W Ψᴴ)[n,k]])
    let mut grad_u = RVector::zeros(2 * n_el);
    for c in 0..2 {
        let dg_w_psi = &d.g_du[c] * &w_psi;
        for (k, f_k) in f.iter().enumerate() {
            let df = &d.f_du[k][c];
            for n in 0..n_el {
                let inner = df[n].conj() * v_psi[(n, k)] + f_k[n].conj() * dg_w_psi[(n, k)];
                grad_u[2 * n + c] += two * (x.phi[n].conj() * inner).re;
            }
        }
    }

    RateGradient {
        w: grad_w,
        phi: grad_phi,
        t: grad_t,
        u: grad_u,
    }
}

fn one_hot(len: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[k] = 1.0;
    v
}

/// `∂r_k/∂W*` (real-metric convention, bits).
pub fn grad_rate_w(h: &CMatrix, w: &CMatrix, k: usize, noise_power: f64) -> CMatrix {
    let psi = sensitivity(h, w, &one_hot(h.ncols(), k), noise_power);
    weighted_grad_w(h, &psi)
}

/// `∂r_k/∂φ*` (real-metric convention, bits).
pub fn grad_rate_phi(h: &CMatrix, w: &CMatrix, g: &CMatrix, f_k: &CVector, k: usize, noise_power: f64) -> CVector {
    let psi = sensitivity(h, w, &one_hot(h.ncols(), k), noise_power);
    // only row k of Ψ is non-zero
    let v = g * w;
    let mut out = CVector::zeros(g.nrows());
    for j in 0..w.ncols() {
        let coeff = psi[(k, j)].conj() * 2.0;
        for n in 0..g.nrows() {
            out[n] += f_k[n].conj() * v[(n, j)] * coeff;
        }
    }
    out
}

/// `(∂r_k/∂t, ∂r_k/∂u)` with positions in metres.
pub fn grad_rate_positions(x: &OptimizationPoint, scenario: &Scenario, k: usize) -> (RVector, RVector) {
    let cs = ConstraintSet::for_scenario(scenario);
    let eval = Evaluation::new(x, scenario, &cs);
    let g = weighted_rate_gradient(x, &eval, scenario, &one_hot(scenario.users(), k));
    (g.t, g.u)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gradient of one spacing constraint with respect to the positions
/// (metres), before the `tanh` chain.
#[derive(Clone, Debug, PartialEq)]
pub struct PairGradient {
    pub t: RVector,
    pub u: RVector,
}

/// Position gradients of every spacing constraint (`𝒟_B` then `𝒟_I`).
/// Ties (`t_m = t_m'`, `u_n = u_n'`) get the zero subgradient.
pub fn pair_gradients(t: &[f64], u: &[[f64; 2]], cs: &ConstraintSet) -> Vec<PairGradient> {
    let mut out = Vec::with_capacity(cs.bs_pairs.len() + cs.irs_pairs.len());
    for &(a, b) in &cs.bs_pairs {
        let mut gt = RVector::zeros(t.len());
        let s = sign(t[a] - t[b]);
        gt[a] = -s;
        gt[b] = s;
        out.push(PairGradient {
            t: gt,
            u: RVector::zeros(2 * u.len()),
        });
    }
    for &(a, b) in &cs.irs_pairs {
        let mut gu = RVector::zeros(2 * u.len());
        let dx = u[a][0] - u[b][0];
        let dy = u[a][1] - u[b][1];
        let r = dx.hypot(dy);
        if r > 0.0 {
            gu[2 * a] = -dx / r;
            gu[2 * a + 1] = -dy / r;
            gu[2 * b] = dx / r;
            gu[2 * b + 1] = dy / r;
        }
        out.push(PairGradient {
            t: RVector::zeros(t.len()),
            u: gu,
        });
    }
    out
}

/// Gradients of the spacing constraints with respect to the pre-images
/// `o`, `p` (chained through the `tanh` Jacobian).
pub fn grad_constraints_positions(x: &OptimizationPoint, scenario: &Scenario) -> Vec<(RVector, RVector)> {
    let cs = ConstraintSet::for_scenario(scenario);
    let (t, u) = positions(x, scenario);
    let jo = position_jacobian(&x.o, scenario.bs_region());
    let jp = position_jacobian(&x.p, scenario.irs_region());
    pair_gradients(&t, &u, &cs)
        .into_iter()
        .map(|g| (g.t.component_mul(&jo), g.u.component_mul(&jp)))
        .collect()
}

/// Euclidean (ambient) gradient of `g` at `x`, given a prepared evaluation.
pub fn euclidean_gradient_at(
    x: &OptimizationPoint,
    eval: &Evaluation,
    scenario: &Scenario,
    pen: &PenaltyState,
    cs: &ConstraintSet,
) -> TangentDirection {
    let lambda = lse_weights(&eval.constraints, pen.smoothing);
    let offset = cs.rate_offset();
    let weights: Vec<f64> = (0..cs.users).map(|k| 1.0 + pen.rho * lambda[offset + k]).collect();
    let rg = weighted_rate_gradient(x, eval, scenario, &weights);

    let mut grad_t = -rg.t;
    let mut grad_u = -rg.u;
    if pen.rho != 0.0 {
        for (i, pg) in pair_gradients(&eval.bs_positions, &eval.irs_positions, cs).iter().enumerate() {
            let c = pen.rho * lambda[i];
            if c != 0.0 {
                grad_t.axpy(c, &pg.t, 1.0);
                grad_u.axpy(c, &pg.u, 1.0);
            }
        }
    }
    let jo = position_jacobian(&x.o, scenario.bs_region());
    let jp = position_jacobian(&x.p, scenario.irs_region());
    TangentDirection {
        w: -rg.w,
        phi: -rg.phi,
        o: grad_t.component_mul(&jo),
        p: grad_u.component_mul(&jp),
    }
}

pub fn euclidean_gradient(
    x: &OptimizationPoint,
    scenario: &Scenario,
    pen: &PenaltyState,
    cs: &ConstraintSet,
) -> TangentDirection {
    let eval = Evaluation::new(x, scenario, cs);
    euclidean_gradient_at(x, &eval, scenario, pen, cs)
}

/// Riemannian gradient of `g`: the tangent projection of the Euclidean one.
pub fn riemannian_gradient(
    x: &OptimizationPoint,
    scenario: &Scenario,
    pen: &PenaltyState,
    cs: &ConstraintSet,
    manifold: &ProductManifold,
) -> TangentDirection {
    let egrad = euclidean_gradient(x, scenario, pen, cs);
    manifold.transport(x, &egrad).expect("gradient shape matches point")
}

/// The smoothed penalty problem for fixed `ρ` and `u`, as seen by the solver.
#[derive(Clone, Debug)]
pub struct PenalizedProblem<'a> {
    pub scenario: &'a Scenario,
    pub constraints: ConstraintSet,
    pub penalty: PenaltyState,
    pub manifold: ProductManifold,
}

impl<'a> PenalizedProblem<'a> {
    pub fn new(scenario: &'a Scenario, penalty: PenaltyState, manifold: ProductManifold) -> Self {
        PenalizedProblem {
            scenario,
            constraints: ConstraintSet::for_scenario(scenario),
            penalty,
            manifold,
        }
    }

    pub fn evaluate(&self, x: &OptimizationPoint) -> Evaluation {
        Evaluation::new(x, self.scenario, &self.constraints)
    }
}

impl Objective for PenalizedProblem<'_> {
    fn manifold(&self) -> &ProductManifold {
        &self.manifold
    }

    fn value(&self, x: &OptimizationPoint) -> f64 {
        self.evaluate(x).objective(&self.penalty)
    }

    fn value_and_gradient(&self, x: &OptimizationPoint) -> (f64, TangentDirection) {
        let eval = self.evaluate(x);
        let egrad = euclidean_gradient_at(x, &eval, self.scenario, &self.penalty, &self.constraints);
        let rgrad = self.manifold.transport(x, &egrad).expect("gradient shape matches point");
        (eval.objective(&self.penalty), rgrad)
    }

    fn metrics(&self, x: &OptimizationPoint) -> IterateMetrics {
        let eval = self.evaluate(x);
        IterateMetrics {
            sum_rate: eval.rates.sum,
            max_violation: eval.max_violation(),
        }
    }
}
