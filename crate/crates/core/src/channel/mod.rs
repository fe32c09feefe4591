//! Link-level SNR: budgets, the outdoor stochastic model and the platoon
//! ray tracer.

mod field;
mod outdoor;
pub mod platoon;
pub mod raytrace;

use core::f64::consts::PI;
use core::fmt;

pub use field::GaussianField;
pub use outdoor::{
    los_probability, sample_realization, ChannelMode, OutdoorChannel, OutdoorParams, ShadowField,
    TrialChannel,
};

use crate::antenna::SPEED_OF_LIGHT;
use crate::geometry::Point3;
use crate::rfmath::{Db, Dbm};

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    CoincidentPositions,
    InsideBody(Point3),
    UnknownTransmitter { index: usize, count: usize },
    InvalidParameter(&'static str),
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelError::CoincidentPositions => f.write_str("transmitter and receiver coincide"),
            ChannelError::InsideBody(p) => {
                write!(f, "receiver ({}, {}, {}) is inside a car body", p.x, p.y, p.z)
            }
            ChannelError::UnknownTransmitter { index, count } => {
                write!(f, "transmitter {index} not modeled (trial has {count})")
            }
            ChannelError::InvalidParameter(what) => write!(f, "invalid channel parameter: {what}"),
        }
    }
}

impl core::error::Error for ChannelError {}

/// Transmit power, integrated noise power and bandwidth of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LinkBudget {
    pub tx_power: Dbm,
    pub noise_floor: Dbm,
    pub bandwidth_hz: f64,
}

impl LinkBudget {
    pub fn cellular() -> Self {
        LinkBudget {
            tx_power: Dbm(30.0),
            noise_floor: Dbm(-99.0),
            bandwidth_hz: 1e9,
        }
    }

    pub fn platoon() -> Self {
        LinkBudget {
            tx_power: Dbm(30.0),
            noise_floor: Dbm(-80.0),
            bandwidth_hz: 1e9,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(ChannelError::InvalidParameter("bandwidth must be positive"));
        }
        if !self.tx_power.0.is_finite() || !self.noise_floor.0.is_finite() {
            return Err(ChannelError::InvalidParameter("powers must be finite"));
        }
        Ok(())
    }
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget::cellular()
    }
}

/// Large- and small-scale losses of one link, all in dB (positive = loss).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelRealization {
    pub pathloss_db: f64,
    pub shadowing_db: f64,
    pub fading_db: f64,
    pub los: bool,
}

impl ChannelRealization {
    pub fn total_loss(&self) -> Db {
        Db(self.pathloss_db + self.shadowing_db + self.fading_db)
    }
}

/// `P_tx + G_tx + G_rx − PL − shadowing − fading − noise`.
pub fn snr(budget: &LinkBudget, tx_gain: Db, rx_gain: Db, real: &ChannelRealization) -> Db {
    (budget.tx_power + tx_gain + rx_gain - real.total_loss()) - budget.noise_floor
}

/// Free-space path loss `20·log10(4π·d·f/c)`.
pub fn free_space_loss(distance_m: f64, carrier_hz: f64) -> Db {
    Db(20.0 * libm::log10(4.0 * PI * distance_m * carrier_hz / SPEED_OF_LIGHT))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_chain() {
        let real = ChannelRealization {
            pathloss_db: 0.0,
            shadowing_db: 0.0,
            fading_db: 0.0,
            los: true,
        };
        assert_eq!(snr(&LinkBudget::cellular(), Db(0.0), Db(0.0), &real), Db(129.0));
        let lossy = ChannelRealization {
            pathloss_db: 70.0,
            shadowing_db: 3.0,
            fading_db: 1.5,
            los: false,
        };
        assert_eq!(snr(&LinkBudget::cellular(), Db(20.0), Db(2.0), &lossy), Db(76.5));
    }

    #[test]
    fn fspl_one_meter() {
        assert!((free_space_loss(1.0, 73e9).0 - 69.7142404242925).abs() < 1e-9);
        assert!((free_space_loss(1.0, 70e9).0 - 69.34974402216851).abs() < 1e-9);
    }
}
