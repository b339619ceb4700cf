use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::manifold::FactorMask;
use crate::{CVector, Error, Result, C64};

/// Phase levels used for the discrete-phase variants.
pub const DEFAULT_PHASE_LEVELS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeName {
    ProposedOps,
    ProposedFps,
    Fpa,
    FpaMaOps,
    FpaMaFps,
    MaFpa,
    Rps,
    Ura,
}

impl SchemeName {
    pub const ALL: [SchemeName; 8] = [
        SchemeName::ProposedOps,
        SchemeName::ProposedFps,
        SchemeName::Fpa,
        SchemeName::FpaMaOps,
        SchemeName::FpaMaFps,
        SchemeName::MaFpa,
        SchemeName::Rps,
        SchemeName::Ura,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SchemeName::ProposedOps => "proposed-OPS",
            SchemeName::ProposedFps => "proposed-FPS",
            SchemeName::Fpa => "FPA",
            SchemeName::FpaMaOps => "FPA-MA-OPS",
            SchemeName::FpaMaFps => "FPA-MA-FPS",
            SchemeName::MaFpa => "MA-FPA",
            SchemeName::Rps => "RPS",
            SchemeName::Ura => "URA",
        }
    }

    /// `(phases, BS, IRS)` modes the scheme is defined with.
    fn modes(self) -> (PhaseMode, PositionMode, PositionMode) {
        use PositionMode::{DenseGrid, Movable};
        const FIXED: PositionMode = PositionMode::Fixed;
        match self {
            SchemeName::ProposedOps => (PhaseMode::Continuous, Movable, Movable),
            SchemeName::ProposedFps => (PhaseMode::Fixed, Movable, Movable),
            SchemeName::Fpa => (PhaseMode::Continuous, FIXED, FIXED),
            SchemeName::FpaMaOps => (PhaseMode::Continuous, FIXED, Movable),
            SchemeName::FpaMaFps => (PhaseMode::Fixed, FIXED, Movable),
            SchemeName::MaFpa => (PhaseMode::Continuous, Movable, FIXED),
            SchemeName::Rps => (PhaseMode::Random, FIXED, FIXED),
            SchemeName::Ura => (PhaseMode::Continuous, Movable, DenseGrid),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseMode {
    /// Optimized, continuous.
    Continuous,
    /// Held at all-ones.
    Fixed,
    /// Random, not optimized.
    Random,
    /// Optimized continuously, then projected onto `κ` levels.
    Discrete(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PositionMode {
    Movable,
    Fixed,
    /// Fixed elements on the dense `λ/2` grid.
    DenseGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub name: SchemeName,
    pub phase_mode: PhaseMode,
    pub bs_mode: PositionMode,
    pub irs_mode: PositionMode,
}

impl SchemeSpec {
    pub fn new(name: SchemeName) -> Self {
        let (phase_mode, bs_mode, irs_mode) = name.modes();
        SchemeSpec {
            name,
            phase_mode,
            bs_mode,
            irs_mode,
        }
    }

    /// The discrete-phase variant; only schemes that optimize phases have one.
    pub fn discrete(name: SchemeName, levels: u32) -> Result<Self> {
        let spec = SchemeSpec {
            phase_mode: PhaseMode::Discrete(levels),
            ..SchemeSpec::new(name)
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Accepts the scheme labels, optionally suffixed by `-DPS` or `-DPS<κ>`.
    pub fn parse(s: &str) -> Result<Self> {
        let (base, levels) = match s.find("-DPS") {
            Some(i) => {
                let digits = &s[i + 4..];
                let levels = if digits.is_empty() {
                    DEFAULT_PHASE_LEVELS
                } else {
                    digits
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("bad phase level count in {s:?}")))?
                };
                (&s[..i], Some(levels))
            }
            None => (s, None),
        };
        let name = SchemeName::ALL
            .into_iter()
            .find(|n| n.label().eq_ignore_ascii_case(base))
            .ok_or_else(|| Error::InvalidInput(format!("unknown scheme {s:?}")))?;
        match levels {
            Some(k) => Self::discrete(name, k),
            None => Ok(Self::new(name)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (phase, bs, irs) = self.name.modes();
        let phase_ok = match self.phase_mode {
            PhaseMode::Discrete(k) => phase == PhaseMode::Continuous && k >= 2,
            m => m == phase,
        };
        if !phase_ok || bs != self.bs_mode || irs != self.irs_mode {
            return Err(Error::InvalidInput(format!("inconsistent scheme {self:?}")));
        }
        Ok(())
    }

    pub fn mask(&self) -> FactorMask {
        FactorMask {
            precoder: true,
            phases: matches!(self.phase_mode, PhaseMode::Continuous | PhaseMode::Discrete(_)),
            bs_positions: self.bs_mode == PositionMode::Movable,
            irs_positions: self.irs_mode == PositionMode::Movable,
        }
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name.label())?;
        match self.phase_mode {
            PhaseMode::Discrete(DEFAULT_PHASE_LEVELS) => f.write_str("-DPS"),
            PhaseMode::Discrete(k) => write!(f, "-DPS{k}"),
            _ => Ok(()),
        }
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeSpec::parse(s)
    }
}

/// Project each phase onto the nearest of `2πi/κ`, ties going to the lower
/// level.
pub fn quantize_phases(phi: &CVector, levels: u32) -> CVector {
    let step = 2.0 * PI / levels as f64;
    phi.map(|z| {
        let a = z.arg().rem_euclid(2.0 * PI);
        let q = a / step;
        let lower = q.floor();
        let idx = if q - lower > 0.5 { lower + 1.0 } else { lower };
        C64::from_polar(1.0, (idx % levels as f64) * step)
    })
}
