//! Decibel arithmetic and the rate algebra of threshold-characterized
//! wiretap codes.
//!
//! A wiretap code is modeled only by its two SNR thresholds: receivers at or
//! above `th1` decode everything, receivers at or below `th2` learn nothing.
//! For a Gaussian channel of bandwidth `B` the secure rate it delivers is
//!
//! ```text
//! R_max = B·log2(1 + th1) − B·log2(1 + th2)
//! ```
//!
//! where the first term is the *decoding rate* and the second the *secrecy
//! overhead*.

use core::fmt;
use core::ops::{Add, Neg, Sub};

/// A dimensionless ratio in decibels (gains, losses, SNR, thresholds).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Db(pub f64);

/// An absolute power in dB relative to one milliwatt.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Dbm(pub f64);

impl Db {
    pub const ZERO: Db = Db(0.0);

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn to_linear(self) -> f64 {
        db_to_linear(self)
    }

    #[inline]
    pub fn from_linear(ratio: f64) -> Db {
        linear_to_db(ratio)
    }
}

impl Dbm {
    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Power in milliwatts.
    #[inline]
    pub fn to_milliwatts(self) -> f64 {
        libm::pow(10.0, self.0 / 10.0)
    }
}

impl Add for Db {
    type Output = Db;
    fn add(self, rhs: Db) -> Db {
        Db(self.0 + rhs.0)
    }
}

impl Sub for Db {
    type Output = Db;
    fn sub(self, rhs: Db) -> Db {
        Db(self.0 - rhs.0)
    }
}

impl Neg for Db {
    type Output = Db;
    fn neg(self) -> Db {
        Db(-self.0)
    }
}

impl Add<Db> for Dbm {
    type Output = Dbm;
    fn add(self, rhs: Db) -> Dbm {
        Dbm(self.0 + rhs.0)
    }
}

impl Sub<Db> for Dbm {
    type Output = Dbm;
    fn sub(self, rhs: Db) -> Dbm {
        Dbm(self.0 - rhs.0)
    }
}

/// Ratio of two absolute powers.
impl Sub for Dbm {
    type Output = Db;
    fn sub(self, rhs: Dbm) -> Db {
        Db(self.0 - rhs.0)
    }
}

impl fmt::Display for Db {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} dB", self.0)
    }
}

impl fmt::Display for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} dBm", self.0)
    }
}

/// `10^(x/10)`.
#[inline]
pub fn db_to_linear(x: Db) -> f64 {
    libm::pow(10.0, x.0 / 10.0)
}

/// `10·log10(ratio)`; zero maps to negative infinity.
#[inline]
pub fn linear_to_db(ratio: f64) -> Db {
    Db(10.0 * libm::log10(ratio))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateError {
    /// `th1 < th2`, which would make the secure rate negative.
    InvertedThresholds { th1: Db, th2: Db },
    NonPositiveBandwidth(f64),
    NonFiniteThreshold,
    /// A zero decoding rate needs an infinitely low decode threshold.
    ZeroDecodingRate,
    NegativeRate(f64),
    /// The requested secure rate exceeds what `th1` can decode.
    RateExceedsDecoding { r_max_bps: f64, decoding_bps: f64 },
}

impl fmt::Display for RateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateError::InvertedThresholds { th1, th2 } => {
                write!(f, "decode threshold {th1} is below erasure threshold {th2}")
            }
            RateError::NonPositiveBandwidth(b) => write!(f, "bandwidth must be positive, got {b} Hz"),
            RateError::NonFiniteThreshold => f.write_str("thresholds must be finite"),
            RateError::ZeroDecodingRate => {
                f.write_str("a zero decoding rate has no finite decode threshold")
            }
            RateError::NegativeRate(r) => write!(f, "rate must be non-negative, got {r} bit/s"),
            RateError::RateExceedsDecoding {
                r_max_bps,
                decoding_bps,
            } => write!(
                f,
                "secure rate {r_max_bps} bit/s exceeds decoding rate {decoding_bps} bit/s"
            ),
        }
    }
}

impl core::error::Error for RateError {}

/// Threshold model of a wiretap code.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WiretapCode {
    /// Decode threshold: SNR at or above which a receiver decodes fully.
    pub th1: Db,
    /// Erasure threshold: SNR at or below which a receiver learns nothing.
    pub th2: Db,
    pub bandwidth_hz: f64,
}

impl WiretapCode {
    pub fn new(th1: Db, th2: Db, bandwidth_hz: f64) -> Result<Self, RateError> {
        let code = WiretapCode {
            th1,
            th2,
            bandwidth_hz,
        };
        code.validate()?;
        Ok(code)
    }

    /// Builds the code from a target decoding rate and secure rate, the way
    /// beacon-rate constrained deployments pick their thresholds.
    pub fn from_rates(
        decoding_rate_bps: f64,
        r_max_bps: f64,
        bandwidth_hz: f64,
    ) -> Result<Self, RateError> {
        let th1 = solve_th1(decoding_rate_bps, bandwidth_hz)?;
        let th2 = solve_th2(r_max_bps, th1, bandwidth_hz)?;
        WiretapCode::new(th1, th2, bandwidth_hz)
    }

    pub fn validate(&self) -> Result<(), RateError> {
        if !self.th1.0.is_finite() || !self.th2.0.is_finite() {
            return Err(RateError::NonFiniteThreshold);
        }
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            return Err(RateError::NonPositiveBandwidth(self.bandwidth_hz));
        }
        if self.th1 < self.th2 {
            return Err(RateError::InvertedThresholds {
                th1: self.th1,
                th2: self.th2,
            });
        }
        Ok(())
    }

    /// `SNR ≥ th1`.
    #[inline]
    pub fn decodes(&self, snr: Db) -> bool {
        snr >= self.th1
    }

    /// `SNR > th2`: the receiver may learn something, so it is treated as
    /// having intercepted the packet.
    #[inline]
    pub fn leaks(&self, snr: Db) -> bool {
        snr > self.th2
    }

    pub fn rates(&self) -> Result<RateBreakdown, RateError> {
        secure_rate(self)
    }
}

/// The two terms of the secure-rate expression and their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateBreakdown {
    pub decoding_rate_bps: f64,
    pub secrecy_overhead_bps: f64,
    pub r_max_bps: f64,
}

impl RateBreakdown {
    /// Fraction of a frame's secret field that carries fresh random bits.
    pub fn secret_fraction(&self) -> f64 {
        if self.decoding_rate_bps > 0.0 {
            self.r_max_bps / self.decoding_rate_bps
        } else {
            0.0
        }
    }
}

#[inline]
fn shannon_rate(bandwidth_hz: f64, snr: Db) -> f64 {
    // log2(1+x) via log1p keeps precision at the very low thresholds.
    bandwidth_hz * libm::log1p(db_to_linear(snr)) / core::f64::consts::LN_2
}

pub fn secure_rate(code: &WiretapCode) -> Result<RateBreakdown, RateError> {
    code.validate()?;
    let decoding = shannon_rate(code.bandwidth_hz, code.th1);
    let overhead = shannon_rate(code.bandwidth_hz, code.th2);
    Ok(RateBreakdown {
        decoding_rate_bps: decoding,
        secrecy_overhead_bps: overhead,
        r_max_bps: (decoding - overhead).max(0.0),
    })
}

/// Inverse of the decoding-rate term: `th1 = 10·log10(2^(rate/B) − 1)`.
pub fn solve_th1(decoding_rate_bps: f64, bandwidth_hz: f64) -> Result<Db, RateError> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(RateError::NonPositiveBandwidth(bandwidth_hz));
    }
    if decoding_rate_bps < 0.0 || decoding_rate_bps.is_nan() {
        return Err(RateError::NegativeRate(decoding_rate_bps));
    }
    if decoding_rate_bps == 0.0 {
        return Err(RateError::ZeroDecodingRate);
    }
    Ok(snr_for_rate(decoding_rate_bps, bandwidth_hz))
}

/// Erasure threshold that leaves `r_max_bps` of secure rate below a decode
/// threshold `th1`.
pub fn solve_th2(r_max_bps: f64, th1: Db, bandwidth_hz: f64) -> Result<Db, RateError> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(RateError::NonPositiveBandwidth(bandwidth_hz));
    }
    if !th1.0.is_finite() {
        return Err(RateError::NonFiniteThreshold);
    }
    if r_max_bps < 0.0 || r_max_bps.is_nan() {
        return Err(RateError::NegativeRate(r_max_bps));
    }
    if r_max_bps == 0.0 {
        return Ok(th1);
    }
    let decoding = shannon_rate(bandwidth_hz, th1);
    if r_max_bps > decoding {
        return Err(RateError::RateExceedsDecoding {
            r_max_bps,
            decoding_bps: decoding,
        });
    }
    // r_max == decoding means th2 → −∞; report it rather than returning -inf.
    let overhead = decoding - r_max_bps;
    if overhead <= 0.0 {
        return Err(RateError::ZeroDecodingRate);
    }
    Ok(snr_for_rate(overhead, bandwidth_hz))
}

#[inline]
fn snr_for_rate(rate_bps: f64, bandwidth_hz: f64) -> Db {
    // 2^(r/B) − 1 via expm1 for the same reason as log1p above.
    linear_to_db(libm::expm1(rate_bps / bandwidth_hz * core::f64::consts::LN_2))
}
