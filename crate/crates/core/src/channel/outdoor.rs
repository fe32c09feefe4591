use alloc::vec::Vec;

use rand::Rng;

use super::field::GaussianField;
use super::{free_space_loss, ChannelError, ChannelRealization};
use crate::geometry::Point3;
use crate::rng;

/// Parameters of the outdoor street-level model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct OutdoorParams {
    pub carrier_hz: f64,
    pub exponent_los: f64,
    pub exponent_nlos: f64,
    pub sigma_los_db: f64,
    pub sigma_nlos_db: f64,
    pub correlation_distance_m: f64,
    /// `p_LOS(d) = min(a/d, 1)·(1 − e^(−d/b)) + e^(−d/b)` with `a` this value...
    pub los_breakpoint_m: f64,
    /// ...and `b` this one.
    pub los_decay_m: f64,
    /// Cosine components per random field.
    pub field_components: usize,
    /// Rayleigh fading on NLOS links.
    pub nlos_fading: bool,
}

impl Default for OutdoorParams {
    fn default() -> Self {
        OutdoorParams {
            carrier_hz: 73e9,
            exponent_los: 2.0,
            exponent_nlos: 3.3,
            sigma_los_db: 4.0,
            sigma_nlos_db: 7.8,
            correlation_distance_m: 10.0,
            los_breakpoint_m: 18.0,
            los_decay_m: 36.0,
            field_components: 32,
            nlos_fading: true,
        }
    }
}

impl OutdoorParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let positive = [
            self.carrier_hz,
            self.exponent_los,
            self.exponent_nlos,
            self.correlation_distance_m,
            self.los_breakpoint_m,
            self.los_decay_m,
        ];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(ChannelError::InvalidParameter(
                "carrier, exponents, distances must be positive",
            ));
        }
        if self.sigma_los_db < 0.0 || self.sigma_nlos_db < 0.0 {
            return Err(ChannelError::InvalidParameter("shadowing sigma must be non-negative"));
        }
        if self.field_components == 0 {
            return Err(ChannelError::InvalidParameter("field needs at least one component"));
        }
        Ok(())
    }

    /// Distance-dependent loss `FSPL(1 m) + 10·n·log10(d)`, never below free space.
    pub fn pathloss(&self, distance_m: f64, los: bool) -> f64 {
        let n = if los { self.exponent_los } else { self.exponent_nlos };
        let model = free_space_loss(1.0, self.carrier_hz).0 + 10.0 * n * libm::log10(distance_m);
        model.max(free_space_loss(distance_m, self.carrier_hz).0)
    }
}

pub fn los_probability(distance_m: f64, params: &OutdoorParams) -> f64 {
    let decay = libm::exp(-distance_m / params.los_decay_m);
    (params.los_breakpoint_m / distance_m).min(1.0) * (1.0 - decay) + decay
}

/// How much randomness the channel draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ChannelMode {
    /// Spatially consistent LOS state and shadowing, Rayleigh NLOS fading.
    #[default]
    Stochastic,
    /// No randomness; LOS whenever `p_LOS ≥ 1/2`.
    Median,
    /// No randomness, always LOS.
    Los,
    /// No randomness, always NLOS.
    Nlos,
}

impl ChannelMode {
    pub fn is_deterministic(self) -> bool {
        self != ChannelMode::Stochastic
    }
}

/// The random environment seen from one transmitter in one trial: a
/// shadowing field and a field driving the LOS state, both spatially
/// correlated over receiver position.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowField {
    pub correlation_distance_m: f64,
    pub sigma_los_db: f64,
    pub sigma_nlos_db: f64,
    shadow: GaussianField,
    los: GaussianField,
}

impl ShadowField {
    pub fn new(params: &OutdoorParams, seed: u64) -> Self {
        let d = params.correlation_distance_m;
        ShadowField {
            correlation_distance_m: d,
            sigma_los_db: params.sigma_los_db,
            sigma_nlos_db: params.sigma_nlos_db,
            shadow: GaussianField::new(d, params.field_components, rng::derive(&[rng::tag::SHADOW, seed])),
            los: GaussianField::new(d, params.field_components, rng::derive(&[rng::tag::LOS, seed])),
        }
    }

    /// Shadowing at `p` in dB for the given LOS state.
    pub fn shadowing_db(&self, p: Point3, los: bool) -> f64 {
        let sigma = if los { self.sigma_los_db } else { self.sigma_nlos_db };
        sigma * self.shadow.value(p)
    }

    /// Spatially consistent uniform(0, 1) variate deciding the LOS state.
    pub fn los_variate(&self, p: Point3) -> f64 {
        0.5 * libm::erfc(-self.los.value(p) / core::f64::consts::SQRT_2)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct OutdoorChannel {
    pub params: OutdoorParams,
    pub mode: ChannelMode,
}

impl OutdoorChannel {
    pub fn new(params: OutdoorParams, mode: ChannelMode) -> Result<Self, ChannelError> {
        params.validate()?;
        Ok(OutdoorChannel { params, mode })
    }

    /// Environment of transmitter `tx_index` in the trial seeded by `trial_seed`.
    pub fn field(&self, tx_index: usize, trial_seed: u64) -> ShadowField {
        ShadowField::new(&self.params, rng::derive(&[trial_seed, tx_index as u64]))
    }

    /// All per-transmitter environments of one trial.
    pub fn trial(&self, transmitters: usize, trial_seed: u64) -> TrialChannel {
        let fields = if self.mode.is_deterministic() {
            Vec::new()
        } else {
            (0..transmitters).map(|i| self.field(i, trial_seed)).collect()
        };
        TrialChannel {
            channel: self.clone(),
            fields,
            transmitters,
            seed: trial_seed,
        }
    }
}

/// Draws one link's losses.
///
/// LOS is decided by comparing the field's uniform variate at `rx` with
/// `p_LOS(d)`; shadowing comes from the same field; NLOS links add a
/// Rayleigh power-fading term keyed by `seed` and both positions.
pub fn sample_realization(
    channel: &OutdoorChannel,
    tx: Point3,
    rx: Point3,
    field: &ShadowField,
    seed: u64,
) -> Result<ChannelRealization, ChannelError> {
    let d = tx.distance(rx);
    if !(d > 0.0) {
        return Err(ChannelError::CoincidentPositions);
    }
    let p = &channel.params;
    let los = match channel.mode {
        ChannelMode::Los => true,
        ChannelMode::Nlos => false,
        ChannelMode::Median => los_probability(d, p) >= 0.5,
        ChannelMode::Stochastic => field.los_variate(rx) < los_probability(d, p),
    };
    let pathloss_db = p.pathloss(d, los);
    if channel.mode.is_deterministic() {
        return Ok(ChannelRealization {
            pathloss_db,
            shadowing_db: 0.0,
            fading_db: 0.0,
            los,
        });
    }
    let shadowing_db = field.shadowing_db(rx, los);
    let fading_db = if los || !p.nlos_fading {
        0.0
    } else {
        let [tx0, tx1, tx2] = tx.key();
        let [rx0, rx1, rx2] = rx.key();
        let mut r = rng::stream(rng::derive(&[rng::tag::FADING, seed, tx0, tx1, tx2, rx0, rx1, rx2]));
        // |h|² ~ Exp(1); the loss is its negative dB value.
        let power = -libm::log(1.0 - r.random::<f64>());
        -10.0 * libm::log10(power.max(1e-30))
    };
    Ok(ChannelRealization {
        pathloss_db,
        shadowing_db,
        fading_db,
        los,
    })
}

/// One Monte-Carlo trial: fixed environments for a set of transmitters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialChannel {
    channel: OutdoorChannel,
    fields: Vec<ShadowField>,
    transmitters: usize,
    seed: u64,
}

impl TrialChannel {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn channel(&self) -> &OutdoorChannel {
        &self.channel
    }

    pub fn realization(&self, tx_index: usize, tx: Point3, rx: Point3) -> Result<ChannelRealization, ChannelError> {
        if tx_index >= self.transmitters {
            return Err(ChannelError::UnknownTransmitter {
                index: tx_index,
                count: self.transmitters,
            });
        }
        match self.fields.get(tx_index) {
            Some(field) => sample_realization(&self.channel, tx, rx, field, self.seed),
            None => {
                // Deterministic modes never read the field.
                let unused = ShadowField::new(&OutdoorParams { field_components: 1, ..self.channel.params }, 0);
                sample_realization(&self.channel, tx, rx, &unused, self.seed)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{snr, LinkBudget};
    use crate::rfmath::Db;

    fn stochastic() -> OutdoorChannel {
        OutdoorChannel::new(OutdoorParams::default(), ChannelMode::Stochastic).unwrap()
    }

    #[test]
    fn one_meter_los_is_free_space() {
        let ch = OutdoorChannel::new(OutdoorParams::default(), ChannelMode::Los).unwrap();
        let f = ch.field(0, 1);
        let r = sample_realization(&ch, Point3::ORIGIN, Point3::planar(1.0, 0.0), &f, 1).unwrap();
        assert!((r.pathloss_db - 69.7142404242925).abs() < 1e-9);
        assert!(r.los);
        // Within 18 m the stochastic LOS state is always LOS.
        let s = stochastic();
        let f = s.field(0, 5);
        let r = sample_realization(&s, Point3::ORIGIN, Point3::planar(1.0, 0.0), &f, 5).unwrap();
        assert!(r.los && (r.pathloss_db - 69.7142404242925).abs() < 1e-9);
        assert_eq!(r.fading_db, 0.0);
    }

    #[test]
    fn realization_is_deterministic() {
        let ch = stochastic();
        let f = ch.field(2, 77);
        let tx = Point3::planar(0.0, 0.0);
        let rx = Point3::planar(120.0, 35.0);
        let a = sample_realization(&ch, tx, rx, &f, 77).unwrap();
        let b = sample_realization(&ch, tx, rx, &ch.field(2, 77), 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coincident_rejected() {
        let ch = stochastic();
        let f = ch.field(0, 0);
        assert_eq!(
            sample_realization(&ch, Point3::ORIGIN, Point3::ORIGIN, &f, 0),
            Err(ChannelError::CoincidentPositions)
        );
    }

    #[test]
    fn nearby_receivers_share_shadowing() {
        let ch = stochastic();
        let tx = Point3::ORIGIN;
        let a = Point3::planar(5.0, 5.0);
        let b = a + Point3::planar(0.1 * ch.params.correlation_distance_m, 0.0);
        let n = 10_000u64;
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for seed in 0..n {
            let f = ch.field(0, seed);
            let x = sample_realization(&ch, tx, a, &f, seed).unwrap().shadowing_db;
            let y = sample_realization(&ch, tx, b, &f, seed).unwrap().shadowing_db;
            sa += x;
            sb += y;
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        let nf = n as f64;
        let cov = sab / nf - sa * sb / (nf * nf);
        let rho = cov / libm::sqrt((saa / nf - sa * sa / (nf * nf)) * (sbb / nf - sb * sb / (nf * nf)));
        assert!(rho >= 0.9, "{rho}");
    }

    #[test]
    fn doubling_distance_costs_six_db() {
        let ch = OutdoorChannel::new(OutdoorParams::default(), ChannelMode::Los).unwrap();
        let f = ch.field(0, 0);
        let budget = LinkBudget::cellular();
        let near = sample_realization(&ch, Point3::ORIGIN, Point3::planar(3.0, 0.0), &f, 0).unwrap();
        let far = sample_realization(&ch, Point3::ORIGIN, Point3::planar(6.0, 0.0), &f, 0).unwrap();
        let drop = snr(&budget, Db(0.0), Db(0.0), &near) - snr(&budget, Db(0.0), Db(0.0), &far);
        assert!((drop.0 - 6.020599913279624).abs() < 1e-9);
    }

    #[test]
    fn pathloss_never_below_free_space() {
        let p = OutdoorParams::default();
        for i in 1..400 {
            let d = i as f64 * 0.05;
            for los in [true, false] {
                assert!(p.pathloss(d, los) >= free_space_loss(d, p.carrier_hz).0 - 1e-9);
            }
        }
    }

    #[test]
    fn mean_snr_falls_with_distance_in_los_range() {
        let ch = stochastic();
        let budget = LinkBudget::cellular();
        let mut last = f64::INFINITY;
        for d in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let n = 2000u64;
            let mean = (0..n)
                .map(|s| {
                    let f = ch.field(0, s);
                    let r = sample_realization(&ch, Point3::ORIGIN, Point3::planar(d, 0.0), &f, s).unwrap();
                    snr(&budget, Db(0.0), Db(0.0), &r).0
                })
                .sum::<f64>()
                / n as f64;
            assert!(mean <= last, "{d}: {mean} > {last}");
            last = mean;
        }
    }

    #[test]
    fn los_probability_shape() {
        let p = OutdoorParams::default();
        assert_eq!(los_probability(10.0, &p), 1.0);
        assert!(los_probability(100.0, &p) < 0.3);
        assert!(los_probability(50.0, &p) > los_probability(200.0, &p));
    }

    #[test]
    fn stochastic_los_frequency_matches_probability() {
        let ch = stochastic();
        let rx = Point3::planar(100.0, 0.0);
        let n = 4000u64;
        let hits = (0..n)
            .filter(|&s| {
                let f = ch.field(0, s);
                sample_realization(&ch, Point3::ORIGIN, rx, &f, s).unwrap().los
            })
            .count();
        let freq = hits as f64 / n as f64;
        let p = los_probability(100.0, &ch.params);
        assert!((freq - p).abs() < 0.03, "{freq} vs {p}");
    }

    #[test]
    fn trial_rejects_unknown_transmitter() {
        let t = stochastic().trial(2, 9);
        assert!(t.realization(1, Point3::ORIGIN, Point3::planar(3.0, 0.0)).is_ok());
        assert!(matches!(
            t.realization(2, Point3::ORIGIN, Point3::planar(3.0, 0.0)),
            Err(ChannelError::UnknownTransmitter { .. })
        ));
    }
}
