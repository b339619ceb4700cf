//! Unit conversions used at the configuration boundary. Everything inside the
//! crate works in watts, metres and radians.

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}

/// Free-space path loss in dB at a 5 GHz carrier: `-46 - 20 log10(d)`.
pub fn path_loss_db(distance_m: f64) -> f64 {
    -46.0 - 20.0 * distance_m.log10()
}
