use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use super::scenario::{stream, Stream};
use super::scheme::{PhaseMode, PositionMode, SchemeSpec};
use crate::channel::{Channels, Scenario};
use crate::manifold::OptimizationPoint;
use crate::objective::positions;
use crate::{CMatrix, CVector, Error, RVector, Result, C64};

/// Largest `|2x/A|` fed to `atanh`.
pub const PREIMAGE_CLIP: f64 = 1.0 - 1e-9;
/// Relative ridge added to `HᴴH` when it cannot be inverted.
pub const ZF_RIDGE: f64 = 1e-10;

/// `M` antennas at `λ/2` spacing centred on the origin.
pub fn bs_initial_positions(m: usize, wavelength: f64) -> Vec<f64> {
    let c = (m as f64 - 1.0) / 2.0;
    (0..m).map(|i| (i as f64 - c) * wavelength / 2.0).collect()
}

/// `atanh(2x/A)` with the argument clipped to keep boundary points finite.
pub fn preimage(x: f64, edge: f64) -> f64 {
    (2.0 * x / edge).clamp(-PREIMAGE_CLIP, PREIMAGE_CLIP).atanh()
}

fn min_distance(pts: &[[f64; 2]]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.min((pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]));
        }
    }
    best
}

/// Spread `n` points in the unit square so that their minimum pairwise
/// distance is (close to) maximal. Deterministic.
pub fn spread_points(n: usize) -> Vec<[f64; 2]> {
    match n {
        0 => return Vec::new(),
        1 => return vec![[0.5, 0.5]],
        _ => {}
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut best: Vec<[f64; 2]> = Vec::new();
    let mut best_d = 0.0;
    for _ in 0..16 {
        let mut pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let mut step = 0.1;
        for _ in 0..1500 {
            let d = min_distance(&pts);
            if d > best_d {
                best_d = d;
                best = pts.clone();
            }
            let near = d * 1.05;
            let mut moves = vec![[0.0; 2]; n];
            for i in 0..n {
                for j in i + 1..n {
                    let dx = pts[i][0] - pts[j][0];
                    let dy = pts[i][1] - pts[j][1];
                    let r = dx.hypot(dy);
                    if r < near {
                        let (ux, uy) = if r > 0.0 { (dx / r, dy / r) } else { (1.0, 0.0) };
                        let w = 1.0 - (r - d) / (near - d).max(1e-300);
                        moves[i][0] += w * ux;
                        moves[i][1] += w * uy;
                        moves[j][0] -= w * ux;
                        moves[j][1] -= w * uy;
                    }
                }
            }
            for (p, m) in pts.iter_mut().zip(&moves) {
                p[0] = (p[0] + step * m[0]).clamp(0.0, 1.0);
                p[1] = (p[1] + step * m[1]).clamp(0.0, 1.0);
            }
            step *= 0.996;
        }
    }
    best
}

/// Initial IRS layout: centres of `n` equal circles packed in the
/// `edge × edge` square, so neighbouring elements keep clear of each other and
/// of the boundary. Falls back to a square grid when the region cannot hold
/// `n` elements at `λ/2` spacing.
pub fn circle_packing(n: usize, edge: f64, wavelength: f64) -> Vec<[f64; 2]> {
    if n == 1 {
        return vec![[0.0, 0.0]];
    }
    let unit = spread_points(n);
    let d = min_distance(&unit);
    let r = d * edge / (2.0 + 2.0 * d);
    let mut side = edge - 2.0 * r;
    let clearance = wavelength / 2.0;
    if 2.0 * r < clearance {
        side = clearance / d * (1.0 + 1e-9);
    }
    if side <= edge * PREIMAGE_CLIP {
        return unit
            .iter()
            .map(|p| [(p[0] - 0.5) * side, (p[1] - 0.5) * side])
            .collect();
    }
    let cols = (n as f64).sqrt().ceil() as usize;
    let cell = edge / cols as f64;
    (0..n)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            [(c as f64 + 0.5) * cell - edge / 2.0, (r as f64 + 0.5) * cell - edge / 2.0]
        })
        .collect()
}

/// Elements per side of the dense `λ/2` grid covering an `A_I/λ` region.
pub fn ura_side(region_wl: f64) -> usize {
    (2.0 * region_wl + 1e-9).floor() as usize + 1
}

/// Dense `λ/2` grid, row-major, centred on the origin.
pub fn ura_positions(region_wl: f64, wavelength: f64) -> Vec<[f64; 2]> {
    let side = ura_side(region_wl);
    let c = (side as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        for q in 0..side {
            out.push([(q as f64 - c) * wavelength / 2.0, (r as f64 - c) * wavelength / 2.0]);
        }
    }
    out
}

/// `W = sqrt(P/Tr((HᴴH)⁻¹)) H (HᴴH)⁻¹`, with a small relative ridge when
/// `HᴴH` is singular.
pub fn zf_precoder(h: &CMatrix, power: f64) -> CMatrix {
    let gram = h.ad_mul(h);
    let k = gram.nrows();
    let inverse = gram
        .clone()
        .try_inverse()
        .filter(|inv| inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) && inv.trace().re > 0.0)
        .unwrap_or_else(|| {
            let scale = (gram.trace().re / k as f64).max(f64::MIN_POSITIVE);
            let ridge = CMatrix::identity(k, k) * C64::new(ZF_RIDGE * scale, 0.0);
            (gram + ridge).try_inverse().expect("ridge makes the Gram matrix invertible")
        });
    let scale = (power / inverse.trace().re).sqrt();
    let mut w = h * inverse * C64::new(scale, 0.0);
    // exact power despite rounding in the inverse
    let nrm2 = w.norm_squared();
    if nrm2 > 0.0 && nrm2.is_finite() {
        w *= C64::new((power / nrm2).sqrt(), 0.0);
    }
    w
}

pub fn random_phases(n: usize, seed: u64) -> CVector {
    CVector::from_iterator(
        n,
        (0..n).map(|i| {
            let mut rng = stream(seed, Stream::RandomPhase, i as u64);
            C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
        }),
    )
}

/// Starting point for `scheme`: `λ/2` BS line, packed (or dense-grid) IRS
/// layout, all-ones or random phases, ZF precoder at the initial channel.
pub fn initialize_variables(scenario: &Scenario, scheme: &SchemeSpec, seed: u64) -> Result<OptimizationPoint> {
    let lambda = scenario.wavelength();
    let n = scenario.irs_elements;
    let t = bs_initial_positions(scenario.bs_antennas, lambda);
    let u = match scheme.irs_mode {
        PositionMode::DenseGrid => ura_positions(scenario.irs_region_wl, lambda),
        _ => circle_packing(n, scenario.irs_region(), lambda),
    };
    if u.len() != n {
        return Err(Error::DimensionMismatch {
            what: "IRS layout",
            expected: n,
            got: u.len(),
        });
    }
    let phi = match scheme.phase_mode {
        PhaseMode::Random => random_phases(n, seed),
        _ => CVector::from_element(n, C64::new(1.0, 0.0)),
    };
    let a_b = scenario.bs_region();
    let a_i = scenario.irs_region();
    let o = RVector::from_iterator(t.len(), t.iter().map(|&x| preimage(x, a_b)));
    let p = RVector::from_iterator(2 * n, u.iter().flat_map(|q| [preimage(q[0], a_i), preimage(q[1], a_i)]));

    let mut x = OptimizationPoint {
        w: CMatrix::zeros(scenario.bs_antennas, scenario.users()),
        phi,
        o,
        p,
    };
    let (t_actual, u_actual) = positions(&x, scenario);
    let h = Channels::evaluate(&scenario.fri, &t_actual, &u_actual).effective(&x.phi);
    x.w = zf_precoder(&h, scenario.power);
    Ok(x)
}
