//! Physical constants shared by every module.

/// Earth gravitational parameter GM, m^3/s^2.
pub const MU_EARTH: f64 = 3.986004418e14;

/// Mean Earth radius, m. States below this radius are rejected as invalid.
pub const EARTH_RADIUS: f64 = 6_371_000.0;

/// Seconds per day; epochs are days (mjd2000), dynamics run in seconds.
pub const SECONDS_PER_DAY: f64 = 86_400.0;
