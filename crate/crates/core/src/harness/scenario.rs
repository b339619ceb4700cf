use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channel::{FieldResponseInfo, Geometry, Scenario};
use crate::units::{db_to_linear, dbm_to_watts, path_loss_db, wavelength};
use crate::{Error, Result, C64};

pub const BS_LOCATION: [f64; 3] = [0.0, 0.0, 0.0];
pub const IRS_LOCATION: [f64; 3] = [10.0, 0.0, 30.0];
/// Centre of the user square in the x–z plane; its edge is [`USER_SQUARE_EDGE`].
pub const USER_SQUARE_CENTER: [f64; 3] = [0.0, -10.0, 30.0];
pub const USER_SQUARE_EDGE: f64 = 20.0;

/// Independent random streams. Keying draws by purpose and index keeps path
/// `l` and user `k` identical when `N`, `L` or `K` change.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Trial = 1,
    UserPosition = 2,
    BsIrsPath = 3,
    IrsUePath = 4,
    AngleError = 5,
    ResponseError = 6,
    RandomPhase = 7,
}

pub fn stream(seed: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | index);
    rng
}

/// Seed of trial `trial` under a master seed.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    stream(master, Stream::Trial, trial).next_u64()
}

fn complex_normal<R: Rng>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub bs_antennas: usize,
    pub irs_elements: usize,
    pub users: usize,
    pub paths: usize,
    pub power_dbm: f64,
    pub noise_dbm: f64,
    pub carrier_hz: f64,
    pub bs_region_wl: f64,
    pub irs_region_wl: f64,
    /// Minimum per-user rate in bit/s/Hz.
    pub min_rate: f64,
    /// Maximum angle error `μ` of the estimated FRI.
    pub angle_error: f64,
    /// Variance `ν` of the normalized path-response error.
    pub response_error: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            bs_antennas: 4,
            irs_elements: 8,
            users: 3,
            paths: 8,
            power_dbm: 30.0,
            noise_dbm: -120.0,
            carrier_hz: 5e9,
            bs_region_wl: 4.0,
            irs_region_wl: 6.0,
            min_rate: 1.0,
            angle_error: 0.0,
            response_error: 0.0,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        if self.bs_antennas == 0 || self.irs_elements == 0 || self.users == 0 || self.paths == 0 {
            return bad("M, N, K and L must be positive");
        }
        if !(self.carrier_hz > 0.0) {
            return bad("carrier frequency must be positive");
        }
        if !(self.bs_region_wl > 0.0) || !(self.irs_region_wl > 0.0) {
            return bad("region sizes must be positive");
        }
        if !(self.min_rate >= 0.0) {
            return bad("minimum rate must be non-negative");
        }
        if !(self.angle_error >= 0.0) || !(self.response_error >= 0.0) {
            return bad("FRI error levels must be non-negative");
        }
        if !self.power_dbm.is_finite() || !self.noise_dbm.is_finite() {
            return bad("powers must be finite");
        }
        Ok(())
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Random scenario, fully determined by `seed`.
pub fn generate_scenario(seed: u64, params: &ScenarioParams) -> Result<Scenario> {
    params.validate()?;
    let lambda = wavelength(params.carrier_hz);
    let l_paths = params.paths;
    let half = USER_SQUARE_EDGE / 2.0;

    let users: Vec<[f64; 3]> = (0..params.users)
        .map(|k| {
            let mut rng = stream(seed, Stream::UserPosition, k as u64);
            [
                USER_SQUARE_CENTER[0] + rng.random_range(-half..=half),
                USER_SQUARE_CENTER[1],
                USER_SQUARE_CENTER[2] + rng.random_range(-half..=half),
            ]
        })
        .collect();
    let mu_g = db_to_linear(path_loss_db(distance(BS_LOCATION, IRS_LOCATION)));
    let mu_k: Vec<f64> = users
        .iter()
        .map(|&u| db_to_linear(path_loss_db(distance(IRS_LOCATION, u))))
        .collect();

    let mut departure = Vec::with_capacity(l_paths);
    let mut arrival_elevation = Vec::with_capacity(l_paths);
    let mut arrival_azimuth = Vec::with_capacity(l_paths);
    let mut bs_irs_responses = Vec::with_capacity(l_paths);
    for l in 0..l_paths {
        let mut rng = stream(seed, Stream::BsIrsPath, l as u64);
        departure.push(rng.random_range(0.0..=PI));
        arrival_elevation.push(rng.random_range(0.0..=PI));
        arrival_azimuth.push(rng.random_range(0.0..=PI));
        bs_irs_responses.push(complex_normal(&mut rng, mu_g / l_paths as f64));
    }
    let irs_ue_responses = mu_k
        .iter()
        .enumerate()
        .map(|(k, mu)| {
            (0..l_paths)
                .map(|l| {
                    let mut rng = stream(seed, Stream::IrsUePath, ((k as u64) << 24) | l as u64);
                    complex_normal(&mut rng, mu / l_paths as f64)
                })
                .collect()
        })
        .collect();

    let scenario = Scenario {
        fri: FieldResponseInfo {
            departure,
            arrival_elevation,
            arrival_azimuth,
            bs_irs_responses,
            irs_ue_responses,
            wavelength: lambda,
        },
        bs_antennas: params.bs_antennas,
        irs_elements: params.irs_elements,
        power: dbm_to_watts(params.power_dbm),
        noise_power: dbm_to_watts(params.noise_dbm),
        bs_region_wl: params.bs_region_wl,
        irs_region_wl: params.irs_region_wl,
        min_rate: params.min_rate,
        geometry: Geometry {
            bs: BS_LOCATION,
            irs: IRS_LOCATION,
            users,
        },
        bs_irs_path_loss: mu_g,
        irs_ue_path_loss: mu_k,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Estimated FRI: every angle gets an error uniform in `[−μ/2, μ/2]`
/// (clamped to `[0, π]`) and every path response becomes `σ/(1 − e)`,
/// `e ~ CN(0, ν)`, so that `(σ̂ − σ)/σ̂ = e`.
pub fn perturb_fri(fri: &FieldResponseInfo, mu: f64, nu: f64, seed: u64) -> FieldResponseInfo {
    let mut out = fri.clone();
    if mu > 0.0 {
        let angles = [
            &mut out.departure,
            &mut out.arrival_elevation,
            &mut out.arrival_azimuth,
        ];
        for (which, v) in angles.into_iter().enumerate() {
            for (l, a) in v.iter_mut().enumerate() {
                let mut rng = stream(seed, Stream::AngleError, ((which as u64) << 24) | l as u64);
                *a = (*a + rng.random_range(-mu / 2.0..=mu / 2.0)).clamp(0.0, PI);
            }
        }
    }
    if nu > 0.0 {
        for (l, s) in out.bs_irs_responses.iter_mut().enumerate() {
            let mut rng = stream(seed, Stream::ResponseError, l as u64);
            *s /= C64::new(1.0, 0.0) - complex_normal(&mut rng, nu);
        }
        for (k, resp) in out.irs_ue_responses.iter_mut().enumerate() {
            for (l, s) in resp.iter_mut().enumerate() {
                let mut rng = stream(seed, Stream::ResponseError, (((k + 1) as u64) << 24) | l as u64);
                *s /= C64::new(1.0, 0.0) - complex_normal(&mut rng, nu);
            }
        }
    }
    out
}
