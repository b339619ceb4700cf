//! Field-response channel model for the BS → IRS → UE cascade.
//!
//! Positions enter only through per-path phase terms:
//! the BS antenna at `t_m` sees `exp(j κ cos φ_t,l · t_m)` and the IRS element
//! at `u_n` sees `exp(j κ ρ_r,lᵀ u_n)` with `ρ_r,l = [sin θ cos φ, cos θ]`,
//! `κ = 2π/λ`.
//!
//! Phase convention: the optimization variable `φ` enters the cascade as
//! `h_kᴴ = φᴴ diag(f_kᴴ) G`, i.e. `φ_n = e^{-jϕ_n}` for a physical phase
//! shift `ϕ_n`. Equivalently `h_kᴴ = f_kᴴ Φ G` with `Φ = diag(φ*)`.

use std::f64::consts::PI;

use crate::{CMatrix, CVector, Error, Result, C64};

/// Angles and complex path responses describing all channels.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldResponseInfo {
    /// AoD at the BS per path (radians in `[0, π]`).
    pub departure: Vec<f64>,
    /// Elevation AoA at the IRS per path.
    pub arrival_elevation: Vec<f64>,
    /// Azimuth AoA at the IRS per path.
    pub arrival_azimuth: Vec<f64>,
    /// BS–IRS path responses (diagonal of `Σ_G`).
    pub bs_irs_responses: Vec<C64>,
    /// IRS–UE path responses, one vector per user.
    pub irs_ue_responses: Vec<Vec<C64>>,
    /// Carrier wavelength in metres.
    pub wavelength: f64,
}

impl FieldResponseInfo {
    pub fn num_paths(&self) -> usize {
        self.departure.len()
    }

    pub fn num_users(&self) -> usize {
        self.irs_ue_responses.len()
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.num_paths();
        if l == 0 {
            return Err(Error::InvalidInput("at least one path is required".into()));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::InvalidInput("wavelength must be positive".into()));
        }
        for (what, len) in [
            ("arrival elevation", self.arrival_elevation.len()),
            ("arrival azimuth", self.arrival_azimuth.len()),
            ("BS-IRS responses", self.bs_irs_responses.len()),
        ] {
            if len != l {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: l,
                    got: len,
                });
            }
        }
        for r in &self.irs_ue_responses {
            if r.len() != l {
                return Err(Error::DimensionMismatch {
                    what: "IRS-UE responses",
                    expected: l,
                    got: r.len(),
                });
            }
        }
        let in_range = |a: &f64| (0.0..=PI).contains(a);
        if !(self.departure.iter().all(in_range)
            && self.arrival_elevation.iter().all(in_range)
            && self.arrival_azimuth.iter().all(in_range))
        {
            return Err(Error::InvalidInput("path angles must lie in [0, pi]".into()));
        }
        Ok(())
    }

    /// `ρ_t,l = cos φ_t,l`.
    pub fn bs_steering(&self) -> Vec<f64> {
        self.departure.iter().map(|a| a.cos()).collect()
    }

    /// `ρ_r,l = [sin θ_r,l cos φ_r,l, cos θ_r,l]`.
    pub fn irs_steering(&self) -> Vec<[f64; 2]> {
        self.arrival_elevation
            .iter()
            .zip(&self.arrival_azimuth)
            .map(|(th, ph)| [th.sin() * ph.cos(), th.cos()])
            .collect()
    }

    /// Field response vector of a BS antenna at `t`.
    pub fn bs_frv(&self, t: f64) -> CVector {
        let kappa = self.wavenumber();
        CVector::from_iterator(
            self.num_paths(),
            self.bs_steering()
                .into_iter()
                .map(|rho| C64::from_polar(1.0, kappa * rho * t)),
        )
    }

    /// Arrival field response vector of an IRS element at `u`.
    pub fn irs_arrival_frv(&self, u: [f64; 2]) -> CVector {
        let kappa = self.wavenumber();
        CVector::from_iterator(
            self.num_paths(),
            self.irs_steering()
                .into_iter()
                .map(|r| C64::from_polar(1.0, kappa * (r[0] * u[0] + r[1] * u[1]))),
        )
    }

    /// Departure field response vector; the conjugate of the arrival one.
    pub fn irs_departure_frv(&self, u: [f64; 2]) -> CVector {
        self.irs_arrival_frv(u).map(|z| z.conj())
    }
}

/// Node coordinates in metres.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub bs: [f64; 3],
    pub irs: [f64; 3],
    pub users: Vec<[f64; 3]>,
}

/// Everything needed to evaluate channels and constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub fri: FieldResponseInfo,
    /// `M`
    pub bs_antennas: usize,
    /// `N`
    pub irs_elements: usize,
    /// Transmit power budget `P_t` in watts.
    pub power: f64,
    /// Noise power `σ_n²` in watts.
    pub noise_power: f64,
    /// BS region edge length in wavelengths (`A_B/λ`).
    pub bs_region_wl: f64,
    /// IRS region edge length in wavelengths (`A_I/λ`).
    pub irs_region_wl: f64,
    /// Minimum per-user rate `Γ` in bit/s/Hz.
    pub min_rate: f64,
    pub geometry: Geometry,
    /// Linear BS–IRS path loss `μ_G`.
    pub bs_irs_path_loss: f64,
    /// Linear IRS–UE path losses `μ_k`.
    pub irs_ue_path_loss: Vec<f64>,
}

impl Scenario {
    pub fn users(&self) -> usize {
        self.fri.num_users()
    }

    pub fn wavelength(&self) -> f64 {
        self.fri.wavelength
    }

    /// `A_B` in metres.
    pub fn bs_region(&self) -> f64 {
        self.bs_region_wl * self.fri.wavelength
    }

    /// `A_I` in metres.
    pub fn irs_region(&self) -> f64 {
        self.irs_region_wl * self.fri.wavelength
    }

    pub fn validate(&self) -> Result<()> {
        self.fri.validate()?;
        if self.bs_antennas == 0 || self.irs_elements == 0 || self.users() == 0 {
            return Err(Error::InvalidInput("M, N and K must be positive".into()));
        }
        if !(self.power > 0.0) || !(self.noise_power > 0.0) {
            return Err(Error::InvalidInput("powers must be positive".into()));
        }
        if !(self.min_rate >= 0.0) {
            return Err(Error::InvalidInput("minimum rate must be non-negative".into()));
        }
        if !(self.bs_region_wl > 0.0) || !(self.irs_region_wl > 0.0) {
            return Err(Error::InvalidInput("region sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Split an interleaved `[x1, y1, x2, y2, ...]` slice into 2-D positions.
pub fn pairs_from_flat(flat: &[f64]) -> Vec<[f64; 2]> {
    flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

/// BS–IRS channel `G ∈ C^{N×M}`:
/// `G[n,m] = Σ_l σ_G,l exp(jκ(ρ_t,l t_m − ρ_r,lᵀ u_n))`.
pub fn assemble_bs_irs(fri: &FieldResponseInfo, t: &[f64], u: &[[f64; 2]]) -> CMatrix {
    let kappa = fri.wavenumber();
    let rho_t = fri.bs_steering();
    let rho_r = fri.irs_steering();
    let mut g = CMatrix::zeros(u.len(), t.len());
    for (l, sigma) in fri.bs_irs_responses.iter().enumerate() {
        let bs: Vec<C64> = t.iter().map(|tm| C64::from_polar(1.0, kappa * rho_t[l] * tm)).collect();
        for (n, un) in u.iter().enumerate() {
            let irs = C64::from_polar(1.0, -kappa * (rho_r[l][0] * un[0] + rho_r[l][1] * un[1])) * sigma;
            for (m, b) in bs.iter().enumerate() {
                g[(n, m)] += irs * b;
            }
        }
    }
    g
}

/// IRS–UE channel of user `k`: `f_k[n] = Σ_l σ_k,l exp(jκ ρ_r,lᵀ u_n)`.
pub fn assemble_irs_ue(fri: &FieldResponseInfo, u: &[[f64; 2]], k: usize) -> Result<CVector> {
    let responses = fri.irs_ue_responses.get(k).ok_or(Error::OutOfRange {
        index: k,
        len: fri.num_users(),
    })?;
    let kappa = fri.wavenumber();
    let rho_r = fri.irs_steering();
    Ok(CVector::from_iterator(
        u.len(),
        u.iter().map(|un| {
            responses
                .iter()
                .zip(&rho_r)
                .map(|(s, r)| s * C64::from_polar(1.0, kappa * (r[0] * un[0] + r[1] * un[1])))
                .sum::<C64>()
        }),
    ))
}

/// `G` together with every user's `f_k`, evaluated at one set of positions.
#[derive(Clone, Debug)]
pub struct Channels {
    pub bs_irs: CMatrix,
    pub irs_ue: Vec<CVector>,
}

impl Channels {
    pub fn evaluate(fri: &FieldResponseInfo, t: &[f64], u: &[[f64; 2]]) -> Channels {
        let bs_irs = assemble_bs_irs(fri, t, u);
        let irs_ue = (0..fri.num_users())
            .map(|k| assemble_irs_ue(fri, u, k).expect("user index in range"))
            .collect();
        Channels { bs_irs, irs_ue }
    }

    /// Effective channels `H = [h_1, …, h_K] ∈ C^{M×K}`.
    pub fn effective(&self, phi: &CVector) -> CMatrix {
        effective_channels(phi, &self.irs_ue, &self.bs_irs)
    }
}

/// `h_k = Gᴴ diag(f_k) φ`, so that `h_kᴴ = φᴴ diag(f_kᴴ) G`.
pub fn effective_channel(phi: &CVector, f_k: &CVector, g: &CMatrix) -> CVector {
    let weighted = f_k.component_mul(phi);
    g.ad_mul(&weighted)
}

pub fn effective_channels(phi: &CVector, f: &[CVector], g: &CMatrix) -> CMatrix {
    let mut h = CMatrix::zeros(g.ncols(), f.len());
    for (k, f_k) in f.iter().enumerate() {
        h.set_column(k, &effective_channel(phi, f_k, g));
    }
    h
}

/// `γ_k = |h_kᴴ w_k|² / (Σ_{j≠k} |h_kᴴ w_j|² + σ²)`.
pub fn sinr(h: &CMatrix, w: &CMatrix, k: usize, noise_power: f64) -> f64 {
    let hk = h.column(k);
    let mut signal = 0.0;
    let mut interference = 0.0;
    for j in 0..w.ncols() {
        let a = hk.dotc(&w.column(j)).norm_sqr();
        if j == k {
            signal = a;
        } else {
            interference += a;
        }
    }
    signal / (interference + noise_power)
}

/// Per-user rates `log2(1 + γ_k)` and their sum.
#[derive(Clone, Debug, PartialEq)]
pub struct Rates {
    pub per_user: Vec<f64>,
    pub sum: f64,
}

impl Rates {
    pub fn min(&self) -> f64 {
        self.per_user.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

pub fn rate_from_sinr(gamma: f64) -> f64 {
    gamma.ln_1p() / std::f64::consts::LN_2
}

pub fn rate_and_sum(h: &CMatrix, w: &CMatrix, noise_power: f64) -> Rates {
    let per_user: Vec<f64> = (0..h.ncols())
        .map(|k| rate_from_sinr(sinr(h, w, k, noise_power)))
        .collect();
    let sum = per_user.iter().sum();
    Rates { per_user, sum }
}

/// `‖h_k‖² = φᴴ diag(f_kᴴ) G Gᴴ diag(f_k) φ`.
pub fn channel_power_gain(phi: &CVector, f_k: &CVector, g: &CMatrix) -> f64 {
    effective_channel(phi, f_k, g).norm_squared()
}
