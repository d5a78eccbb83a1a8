//! Conversion between the dimensionless Hamiltonians (units of `K`) and
//! laboratory time.

use serde::{Deserialize, Serialize};

use crate::error::{DcatError, Result};

/// Kerr nonlinearity used by the reference experiments, in MHz.
pub const DEFAULT_KERR_MHZ: f64 = 6.7;

/// How a Kerr value quoted in MHz maps to the rate `K` in rad/s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum KerrConvention {
    /// The quoted number is `K / 2π`.
    #[default]
    Angular,
    /// The quoted number is `K` itself.
    Plain,
}

impl KerrConvention {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "angular" | "2pi" => Ok(Self::Angular),
            "plain" | "1" => Ok(Self::Plain),
            other => Err(DcatError::InvalidArgument(format!(
                "unknown Kerr convention {other:?} (expected angular or plain)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Angular => "angular",
            Self::Plain => "plain",
        }
    }
}

/// `K` in rad/s for a value quoted in MHz.
pub fn kerr_rate(mhz: f64, convention: KerrConvention) -> f64 {
    let hz = mhz * 1e6;
    match convention {
        KerrConvention::Angular => 2.0 * std::f64::consts::PI * hz,
        KerrConvention::Plain => hz,
    }
}

/// `K = 2π × 6.7 MHz`.
pub fn default_kerr() -> f64 {
    kerr_rate(DEFAULT_KERR_MHZ, KerrConvention::Angular)
}

/// Dimensionless time `tau = K t`.
pub fn to_tau(seconds: f64, kerr: f64) -> f64 {
    seconds * kerr
}

pub fn to_seconds(tau: f64, kerr: f64) -> f64 {
    tau / kerr
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_rate() {
        assert!((default_kerr() - 4.209_734_155_5e7).abs() < 1.0);
        assert_eq!(kerr_rate(6.7, KerrConvention::Plain), 6.7e6);
        assert_eq!(KerrConvention::parse("2pi").unwrap(), KerrConvention::Angular);
        assert!(KerrConvention::parse("hz").is_err());
        assert!((to_seconds(to_tau(3e-9, 5e7), 5e7) - 3e-9).abs() < 1e-24);
    }
}
