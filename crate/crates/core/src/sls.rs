//! Transmit sector-level sweep with secret-carrying beacons.
//!
//! 1. The initiator sends one beacon per sector; the responder listens
//!    quasi-omni.
//! 2. The responder answers with the best SNR it saw and that beacon's sector.
//! 3. The initiator replies on the chosen sector.
//!
//! Each beacon also carries a wiretap-encoded random payload. A receiver
//! decodes it at `SNR ≥ th1`; an eavesdropper is counted as having it at
//! `SNR > th2`.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::antenna::{best_of, SectorAntenna};
use crate::channel::{snr, ChannelError, ChannelRealization, LinkBudget, TrialChannel};
use crate::geometry::Point3;
use crate::rfmath::{Db, WiretapCode};
use crate::rng;
use crate::secrecy::{BitString, PacketId, ReceptionLog, DEFAULT_PAYLOAD_BITS};

/// Beacon rate of the control PHY.
pub const BEACON_RATE_BPS: f64 = 27.5e6;

/// Source of per-link losses. `station` indexes the transmitter's
/// environment.
pub trait LinkChannel {
    fn realization(&self, station: usize, tx: Point3, rx: Point3) -> Result<ChannelRealization, ChannelError>;
}

impl LinkChannel for TrialChannel {
    fn realization(&self, station: usize, tx: Point3, rx: Point3) -> Result<ChannelRealization, ChannelError> {
        TrialChannel::realization(self, station, tx, rx)
    }
}

impl<C: LinkChannel + ?Sized> LinkChannel for &C {
    fn realization(&self, station: usize, tx: Point3, rx: Point3) -> Result<ChannelRealization, ChannelError> {
        (**self).realization(station, tx, rx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    /// Also the index of the station's environment in the channel.
    pub id: usize,
    pub position: Point3,
    pub antenna: SectorAntenna,
}

impl BaseStation {
    pub fn new(id: usize, position: Point3, antenna: SectorAntenna) -> Self {
        BaseStation { id, position, antenna }
    }

    /// Gain of every sector toward `target`.
    pub fn gains_toward(&self, target: Point3) -> Vec<Db> {
        let dir = target - self.position;
        self.antenna.gains(dir.azimuth_deg(), dir.elevation_deg())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeaconFrame {
    pub array_id: u32,
    pub sector_id: u32,
    pub secret_payload: BitString,
    pub tx_rate_bps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeedbackFrame {
    pub best_snr: Db,
    pub best_sector_id: u32,
}

/// What the mobile and the probed eavesdropper saw of one beacon.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeaconRecord {
    pub array_id: u32,
    pub sector_id: u32,
    pub snr_mobile: Db,
    pub snr_eve: Db,
    pub decoded: bool,
    pub intercepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepOutcome {
    pub station: usize,
    /// In transmission order.
    pub beacons: Vec<BeaconRecord>,
    pub mobile_feedback: FeedbackFrame,
    pub initiator_feedback: FeedbackFrame,
    pub best_tx_sector_mobile: u32,
    pub best_tx_sector_eve: u32,
    /// Sector ids whose payload the mobile decoded.
    pub decoded: BTreeSet<u32>,
    /// Sector ids whose payload the eavesdropper got.
    pub intercepted: BTreeSet<u32>,
}

impl SweepOutcome {
    /// Beacon record of `sector`, whatever the transmission order.
    pub fn record(&self, sector: u32) -> Option<&BeaconRecord> {
        self.beacons.iter().find(|b| b.sector_id == sector)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SweepConfig {
    pub budget: LinkBudget,
    pub mobile_gain_dbi: f64,
    pub eve_gain_dbi: f64,
    pub payload_bits: usize,
    pub beacon_rate_bps: f64,
    /// Mobile keeps only the best beacon's payload, if it decodes at all.
    pub single_frame_worst_case: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            budget: LinkBudget::cellular(),
            mobile_gain_dbi: 0.0,
            eve_gain_dbi: 0.0,
            payload_bits: DEFAULT_PAYLOAD_BITS,
            beacon_rate_bps: BEACON_RATE_BPS,
            single_frame_worst_case: false,
        }
    }
}

/// The beacons a station sends in one sweep, payloads drawn from `seed`.
pub fn beacon_frames(station: &BaseStation, cfg: &SweepConfig, seed: u64) -> Vec<BeaconFrame> {
    let cb = station.antenna.codebook();
    (0..cb.len())
        .map(|s| {
            let mut r = rng::stream(rng::derive(&[rng::tag::PAYLOAD, seed, station.id as u64, s as u64]));
            BeaconFrame {
                array_id: cb.panel_of(s).expect("sector in range") as u32,
                sector_id: s as u32,
                secret_payload: BitString::random(cfg.payload_bits, &mut r),
                tx_rate_bps: cfg.beacon_rate_bps,
            }
        })
        .collect()
}

/// SNR of every sector's beacon at `rx`. A receiver on top of the
/// transmitter is unbounded.
pub fn beacon_snrs(
    station: &BaseStation,
    rx: Point3,
    rx_gain: Db,
    budget: &LinkBudget,
    channel: &impl LinkChannel,
) -> Result<Vec<Db>, ChannelError> {
    let n = station.antenna.sector_count();
    match channel.realization(station.id, station.position, rx) {
        Ok(real) => Ok(station
            .gains_toward(rx)
            .into_iter()
            .map(|g| snr(budget, g, rx_gain, &real))
            .collect()),
        Err(ChannelError::CoincidentPositions) => Ok(alloc::vec![Db(f64::INFINITY); n]),
        Err(e) => Err(e),
    }
}

/// Frames the mobile keeps given its SNR table.
pub fn decoded_sectors(snrs: &[Db], code: &WiretapCode, single_frame_worst_case: bool) -> BTreeSet<u32> {
    if single_frame_worst_case {
        let (best, value) = best_of(snrs);
        if code.decodes(value) {
            return BTreeSet::from([best as u32]);
        }
        return BTreeSet::new();
    }
    snrs.iter()
        .enumerate()
        .filter(|(_, &s)| code.decodes(s))
        .map(|(i, _)| i as u32)
        .collect()
}

fn feedback(snrs: &[Db]) -> FeedbackFrame {
    let (best, _) = best_of(snrs);
    let max = snrs.iter().copied().fold(Db(f64::NEG_INFINITY), |a, b| if b > a { b } else { a });
    FeedbackFrame {
        best_snr: max,
        best_sector_id: best as u32,
    }
}

pub fn run_transmit_sls(
    station: &BaseStation,
    mobile: Point3,
    eve: Point3,
    channel: &impl LinkChannel,
    code: &WiretapCode,
    cfg: &SweepConfig,
) -> Result<SweepOutcome, ChannelError> {
    let order: Vec<usize> = (0..station.antenna.sector_count()).collect();
    run_transmit_sls_ordered(station, mobile, eve, channel, code, cfg, &order)
}

/// Same sweep with beacons sent in `order` (a permutation of the sectors).
pub fn run_transmit_sls_ordered(
    station: &BaseStation,
    mobile: Point3,
    eve: Point3,
    channel: &impl LinkChannel,
    code: &WiretapCode,
    cfg: &SweepConfig,
    order: &[usize],
) -> Result<SweepOutcome, ChannelError> {
    let n = station.antenna.sector_count();
    let mut seen = alloc::vec![false; n];
    for &s in order {
        if s >= n || core::mem::replace(&mut seen[s], true) {
            return Err(ChannelError::InvalidParameter("beacon order must be a permutation of the sectors"));
        }
    }
    if order.len() != n {
        return Err(ChannelError::InvalidParameter("beacon order must be a permutation of the sectors"));
    }
    let to_mobile = channel.realization(station.id, station.position, mobile)?;
    let mobile_snrs: Vec<Db> = station
        .gains_toward(mobile)
        .into_iter()
        .map(|g| snr(&cfg.budget, g, Db(cfg.mobile_gain_dbi), &to_mobile))
        .collect();
    let eve_snrs = beacon_snrs(station, eve, Db(cfg.eve_gain_dbi), &cfg.budget, channel)?;

    let decoded = decoded_sectors(&mobile_snrs, code, cfg.single_frame_worst_case);
    let intercepted: BTreeSet<u32> = eve_snrs
        .iter()
        .enumerate()
        .filter(|(_, &s)| code.leaks(s))
        .map(|(i, _)| i as u32)
        .collect();

    // Step 1: beacons.
    let cb = station.antenna.codebook();
    let beacons = order
        .iter()
        .map(|&s| BeaconRecord {
            array_id: cb.panel_of(s).expect("sector in range") as u32,
            sector_id: s as u32,
            snr_mobile: mobile_snrs[s],
            snr_eve: eve_snrs[s],
            decoded: decoded.contains(&(s as u32)),
            intercepted: intercepted.contains(&(s as u32)),
        })
        .collect();

    // Step 2: one quasi-omni feedback from the mobile.
    let mobile_feedback = feedback(&mobile_snrs);
    // Step 3: the initiator heard that feedback quasi-omni on the reverse link.
    let reverse = snr(&cfg.budget, Db(cfg.mobile_gain_dbi), Db(0.0), &to_mobile);
    let initiator_feedback = FeedbackFrame {
        best_snr: reverse,
        best_sector_id: 0,
    };

    Ok(SweepOutcome {
        station: station.id,
        beacons,
        best_tx_sector_mobile: mobile_feedback.best_sector_id,
        best_tx_sector_eve: feedback(&eve_snrs).best_sector_id,
        mobile_feedback,
        initiator_feedback,
        decoded,
        intercepted,
    })
}

/// Independent sweeps of several stations and the merged reception log.
/// The packet id of a beacon is its sector id offset by the sector counts of
/// the stations before it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MultiSweep {
    pub outcomes: Vec<SweepOutcome>,
    pub offsets: Vec<PacketId>,
    pub log: ReceptionLog,
}

pub fn multi_station_sweep(
    stations: &[BaseStation],
    mobile: Point3,
    eve: Point3,
    channel: &impl LinkChannel,
    code: &WiretapCode,
    cfg: &SweepConfig,
) -> Result<MultiSweep, ChannelError> {
    if stations.is_empty() {
        return Err(ChannelError::InvalidParameter("at least one station is needed"));
    }
    let mut outcomes = Vec::with_capacity(stations.len());
    let mut offsets = Vec::with_capacity(stations.len());
    let mut log = ReceptionLog::default();
    let mut offset: PacketId = 0;
    for st in stations {
        let out = run_transmit_sls(st, mobile, eve, channel, code, cfg)?;
        log.bob_received.extend(out.decoded.iter().map(|s| offset + s));
        log.eve_received.extend(out.intercepted.iter().map(|s| offset + s));
        offsets.push(offset);
        offset += st.antenna.sector_count() as PacketId;
        outcomes.push(out);
    }
    log.n_sent = offset;
    Ok(MultiSweep { outcomes, offsets, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::{ArrayGeometry, SectorCodebook};
    use crate::channel::{ChannelMode, OutdoorChannel, OutdoorParams};
    use crate::secrecy::{exact_bound, worst_case_bound, SecrecyError};
    use crate::secrecy::{extract_key, generate_packets, GaloisField};

    fn station(id: usize, position: Point3, orientation: f64) -> BaseStation {
        let ant = SectorAntenna::new(ArrayGeometry::default(), SectorCodebook::base_station(orientation)).unwrap();
        BaseStation::new(id, position, ant)
    }

    fn los_trial(n: usize) -> TrialChannel {
        OutdoorChannel::new(OutdoorParams::default(), ChannelMode::Los).unwrap().trial(n, 0)
    }

    fn default_code() -> WiretapCode {
        WiretapCode::from_rates(27.5e6, 25e6, 1e9).unwrap()
    }

    #[test]
    fn thirty_six_beacons_and_best_sector() {
        let bs = station(0, Point3::ORIGIN, 0.0);
        let mobile = Point3::polar(5.0, 90.0);
        let out = run_transmit_sls(&bs, mobile, Point3::planar(-40.0, 3.0), &los_trial(1), &default_code(), &SweepConfig::default()).unwrap();
        assert_eq!(out.beacons.len(), 36);
        assert_eq!(out.best_tx_sector_mobile, 9);
        assert_eq!(out.best_tx_sector_mobile as usize, bs.antenna.best_sector(90.0, 0.0).0);
        let max = out.beacons.iter().map(|b| b.snr_mobile.0).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.mobile_feedback.best_snr.0, max);
    }

    #[test]
    fn equidistant_tie_goes_low() {
        // Sectors 5 and 6 sit symmetrically about panel 0's boresight at 55°.
        let bs = station(0, Point3::ORIGIN, 0.0);
        let out = run_transmit_sls(&bs, Point3::polar(4.0, 55.0), Point3::planar(0.0, -50.0), &los_trial(1), &default_code(), &SweepConfig::default()).unwrap();
        let g5 = out.record(5).unwrap().snr_mobile.0;
        let g6 = out.record(6).unwrap().snr_mobile.0;
        assert!((g5 - g6).abs() < 1e-9);
        assert_eq!(out.best_tx_sector_mobile, 5);
    }

    #[test]
    fn decoded_set_ignores_order() {
        let bs = station(0, Point3::ORIGIN, 12.0);
        let code = WiretapCode::new(Db(30.0), Db(10.0), 1e9).unwrap();
        let ch = OutdoorChannel::new(OutdoorParams::default(), ChannelMode::Stochastic).unwrap().trial(1, 3);
        let cfg = SweepConfig::default();
        let mobile = Point3::planar(30.0, 20.0);
        let eve = Point3::planar(-10.0, 25.0);
        let a = run_transmit_sls(&bs, mobile, eve, &ch, &code, &cfg).unwrap();
        let rev: Vec<usize> = (0..36).rev().collect();
        let b = run_transmit_sls_ordered(&bs, mobile, eve, &ch, &code, &cfg, &rev).unwrap();
        assert!(!a.decoded.is_empty());
        assert_eq!(a.decoded, b.decoded);
        assert_eq!(a.intercepted, b.intercepted);
        assert_eq!(b.beacons[0].sector_id, 35);
        assert!(run_transmit_sls_ordered(&bs, mobile, eve, &ch, &code, &cfg, &[0, 0]).is_err());
    }

    #[test]
    fn single_frame_worst_case_per_station() {
        let stations = [station(0, Point3::planar(2.0, 0.0), 0.0), station(1, Point3::planar(0.0, 2.0), 0.0)];
        let cfg = SweepConfig {
            single_frame_worst_case: true,
            ..SweepConfig::default()
        };
        let out = multi_station_sweep(&stations, Point3::ORIGIN, Point3::planar(300.0, 300.0), &los_trial(2), &default_code(), &cfg).unwrap();
        assert_eq!(out.log.bob_received.len(), 2);
        assert_eq!(out.log.n_sent, 72);
        assert!(out.log.bob_received.iter().any(|&p| p >= 36));
    }

    #[test]
    fn colocated_eve_breaks_the_key() {
        let bs = station(0, Point3::ORIGIN, 0.0);
        let mobile = Point3::planar(3.0, 1.0);
        let out = multi_station_sweep(core::slice::from_ref(&bs), mobile, mobile, &los_trial(1), &default_code(), &SweepConfig::default()).unwrap();
        assert!(!out.log.bob_received.is_empty());
        assert!(out.log.bob_received.is_subset(&out.log.eve_received));
        let packets = generate_packets(out.log.n_sent, 64, 1);
        assert!(matches!(
            extract_key(&out.log, &packets, exact_bound(&out.log), GaloisField::GF256),
            Err(SecrecyError::NoKey { .. })
        ));
    }

    #[test]
    fn four_stations_eve_outside_main_lobes() {
        // Stations 2 m from the mobile at 90° spacing, each panel facing it.
        let stations: Vec<BaseStation> = (0..4)
            .map(|k| {
                let pos = Point3::polar(2.0, k as f64 * 90.0);
                let toward = (Point3::ORIGIN - pos).azimuth_deg();
                // Sector 6 (panel 0) aims at the mobile.
                station(k, pos, toward - 60.0)
            })
            .collect();
        let ch = los_trial(4);
        let cfg = SweepConfig {
            single_frame_worst_case: true,
            ..SweepConfig::default()
        };
        let eve = Point3::new(40.0, 30.0, 0.0);
        // Oracle: mobile's best frame per station and Eve's SNR on it.
        let mut mobile_min = f64::INFINITY;
        let mut eve_max = f64::NEG_INFINITY;
        for st in &stations {
            let m = beacon_snrs(st, Point3::ORIGIN, Db(0.0), &cfg.budget, &ch).unwrap();
            let e = beacon_snrs(st, eve, Db(0.0), &cfg.budget, &ch).unwrap();
            let (best, v) = best_of(&m);
            mobile_min = mobile_min.min(v.0);
            eve_max = eve_max.max(e.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max));
            assert_eq!(best, 6);
        }
        assert!(eve_max < mobile_min - 1.0);
        let code = WiretapCode::new(Db(mobile_min - 0.5), Db(eve_max + 0.25), 1e9).unwrap();
        let out = multi_station_sweep(&stations, Point3::ORIGIN, eve, &ch, &code, &cfg).unwrap();
        assert_eq!(out.log.bob_received.len(), 4);
        assert_eq!(out.log.intercepted_of_bob(), 0);
        assert_eq!(worst_case_bound(&out.log).unwrap().max_intercepted, 3);
        let packets = generate_packets(out.log.n_sent, 64, 2);
        let worst = extract_key(&out.log, &packets, worst_case_bound(&out.log).unwrap(), GaloisField::GF256).unwrap();
        assert_eq!(worst.key_packets.len(), 1);
        let full = extract_key(&out.log, &packets, exact_bound(&out.log), GaloisField::GF256).unwrap();
        assert_eq!(full.key_packets.len(), 4);
    }

    #[test]
    fn eve_interceptions_grow_with_her_gain() {
        let bs = station(0, Point3::ORIGIN, 0.0);
        let ch = OutdoorChannel::new(OutdoorParams::default(), ChannelMode::Stochastic).unwrap().trial(1, 11);
        let code = WiretapCode::new(Db(30.0), Db(10.0), 1e9).unwrap();
        let mut last = 0;
        for g in [-20.0, -10.0, 0.0, 10.0, 20.0] {
            let cfg = SweepConfig {
                eve_gain_dbi: g,
                ..SweepConfig::default()
            };
            let out = run_transmit_sls(&bs, Point3::planar(20.0, 5.0), Point3::planar(60.0, -80.0), &ch, &code, &cfg).unwrap();
            assert!(out.intercepted.len() >= last);
            last = out.intercepted.len();
        }
    }

    #[test]
    fn payloads_are_seeded() {
        let bs = station(3, Point3::ORIGIN, 0.0);
        let cfg = SweepConfig::default();
        let a = beacon_frames(&bs, &cfg, 5);
        assert_eq!(a.len(), 36);
        assert_eq!(a, beacon_frames(&bs, &cfg, 5));
        assert_ne!(a[0].secret_payload, a[1].secret_payload);
        assert_eq!(a[0].secret_payload.len(), 1024);
        assert_eq!(a[35].array_id, 2);
    }
}
