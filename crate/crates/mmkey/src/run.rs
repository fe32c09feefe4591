//! Scenario runners.

use mmkey_core::antenna::SectorAntenna;
use mmkey_core::channel::platoon::PlatoonChannel;
use mmkey_core::geometry::wrap_deg;
use mmkey_core::rfmath::secure_rate;
use mmkey_core::secrecy::{exact_bound, extract_key, GaloisField, RandomPacket, ReceptionLog};
use mmkey_core::sls::{beacon_frames, run_transmit_sls, BaseStation, FeedbackFrame};
use mmkey_core::spatial::{
    insecure_area, insecure_volume, region_intersection, EnsbEvaluator, EnsbMap, EnsbScenario, GridSpec,
    RegionResult, ENSB_PAYLOAD_BITS,
};
use mmkey_core::{Point3, RateBreakdown, WiretapCode};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{
    check_angle, check_distance, CellularConfig, DhParams, Exp1Config, Exp2Config, Exp3Config, MapGrid, OtpConfig,
    PlatoonScenario, RateCalcConfig, Scenario, ScenarioConfig,
};
use crate::error::HarnessError;
use crate::report::{
    ComparisonRow, DhSummary, IaEntry, LinkSummary, OtpSummary, PlatoonSummary, RunOutput, RunReport, SymmetryCheck,
    Thresholds,
};

/// `(clock / cycles_per_op) · bits_per_key`, in bits per second.
pub fn dh_rate(cycles_per_op: f64, clock_hz: f64, bits_per_key: u32) -> f64 {
    clock_hz / cycles_per_op * bits_per_key as f64
}

pub fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

pub fn dh_summary(p: &DhParams) -> DhSummary {
    let rate = dh_rate(p.cycles_per_op, p.clock_hz, p.bits_per_key);
    DhSummary {
        cycles_per_op: p.cycles_per_op,
        clock_hz: p.clock_hz,
        bits_per_key: p.bits_per_key,
        rate_bps: rate,
        rate_rounded_kbps: round_significant(rate / 1e3, 1),
    }
}

/// Pad demand over one rekey interval against the key one agreement yields.
pub fn otp_budget(otp: &OtpConfig, key_rate_bps: f64) -> OtpSummary {
    let demand = otp.rekey_interval_s / otp.message_interval_s * otp.message_bytes;
    let budget = otp.key_window_s * key_rate_bps / 8.0;
    OtpSummary {
        demand_bytes: demand,
        budget_bytes: budget,
        reference_budget_bytes: otp.reference_budget_bytes,
        demand_fits_budget: demand <= budget,
    }
}

/// Rows in the order and wording of the usual DH comparison table.
pub fn comparison_rows(dh: &DhSummary, key_rate_bps: f64) -> Vec<ComparisonRow> {
    let row = |label: &str, a: String, b: String| ComparisonRow {
        label: label.to_owned(),
        dh_2048: a,
        erasure_based: b,
    };
    vec![
        row("Critical resource", "Computation power".into(), "Bandwidth".into()),
        row(
            "Secret Key Rate (realistic setup)",
            format!("{:.2} kbps (≈{} kbps)", dh.rate_bps / 1e3, dh.rate_rounded_kbps),
            format!("{:.1} Mbps", key_rate_bps / 1e6),
        ),
        row("Complexity of encryption technique", "Moderate (AES)".into(), "Simple (OTP)".into()),
        row("Quantum-Vulnerable", "Yes".into(), "No (Info. theoretically secure)".into()),
        row("Adversary with high network presence", "Resilient".into(), "Weak".into()),
    ]
}

fn thresholds(code: &WiretapCode) -> Thresholds {
    Thresholds {
        th1_db: code.th1.0,
        th2_db: code.th2.0,
        bandwidth_hz: code.bandwidth_hz,
    }
}

fn rates(code: &WiretapCode) -> Result<RateBreakdown, HarnessError> {
    secure_rate(code).map_err(|e| HarnessError::Model(e.to_string()))
}

/// A station position and the world azimuth of its first sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub position: Point3,
    pub orientation_deg: f64,
}

/// Station at `mobile + d·(cos az, sin az)` with its first sector on the mobile.
fn facing(mobile: Point3, d: f64, az_deg: f64) -> Placement {
    Placement {
        position: mobile + Point3::polar(d, az_deg),
        orientation_deg: wrap_deg(az_deg + 180.0),
    }
}

pub fn exp1_placements(d: f64, theta_deg: f64) -> Vec<Placement> {
    vec![facing(Point3::ORIGIN, d, 0.0), facing(Point3::ORIGIN, d, theta_deg)]
}

pub fn exp2_placements(d: f64, n: usize) -> Vec<Placement> {
    (0..n).map(|i| facing(Point3::ORIGIN, d, 360.0 * i as f64 / n as f64)).collect()
}

/// Single-frame worst case, as used by all three cellular experiments.
pub fn cellular_scenario(
    cellular: &CellularConfig,
    placements: &[Placement],
    mobile: Point3,
) -> Result<EnsbScenario, HarnessError> {
    let stations = placements
        .iter()
        .enumerate()
        .map(|(i, p)| Ok(BaseStation::new(i, p.position, cellular.station_antenna(p.orientation_deg)?)))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(EnsbScenario {
        stations,
        mobile,
        channel: cellular.channel.clone(),
        code: cellular.code.resolve()?,
        sweep: mmkey_core::sls::SweepConfig {
            single_frame_worst_case: true,
            ..cellular.sweep
        },
        secret_bits: cellular.secret_bits,
    })
}

/// Cells are independent; rayon keeps the output in index order.
pub fn ensb_map_parallel(ev: &EnsbEvaluator, grid: &GridSpec) -> Result<EnsbMap, HarnessError> {
    grid.validate()?;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| ev.ensb_at(grid.center(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EnsbMap::new(*grid, values, ev.trials(), ev.seed(), ev.ensb_max())?)
}

/// One ENSB map with its insecure area.
#[derive(Debug, Clone, PartialEq)]
pub struct MapRun {
    pub entry: IaEntry,
    pub map: EnsbMap,
    pub region: RegionResult,
}

fn map_run(
    label: String,
    scenario: EnsbScenario,
    grid: &MapGrid,
    trials: usize,
    seed: u64,
) -> Result<MapRun, HarnessError> {
    let grid = grid.around(scenario.mobile);
    let mobile = scenario.mobile;
    let ev = EnsbEvaluator::new(scenario, trials, seed)?;
    let map = ensb_map_parallel(&ev, &grid)?;
    let region = insecure_area(&map);
    let entry = IaEntry {
        label,
        distance_m: None,
        angle_deg: None,
        stations: None,
        mobile: Some([mobile.x, mobile.y]),
        insecure_area_m2: region.insecure_measure,
        insecure_cells: region.cells.len(),
        total_cells: grid.len(),
        mean_ensb_bits: map.values.iter().sum::<f64>() / map.values.len() as f64,
    };
    Ok(MapRun { entry, map, region })
}

pub fn run_exp1(d: f64, theta_deg: f64, cfg: &Exp1Config, seed: u64) -> Result<MapRun, HarnessError> {
    check_distance(d)?;
    check_angle(theta_deg)?;
    let sc = cellular_scenario(&cfg.cellular, &exp1_placements(d, theta_deg), Point3::ORIGIN)?;
    let mut run = map_run(format!("d={d},theta={theta_deg}"), sc, &cfg.grid, cfg.trials, seed)?;
    run.entry.distance_m = Some(d);
    run.entry.angle_deg = Some(theta_deg);
    run.entry.stations = Some(2);
    Ok(run)
}

pub fn run_exp2(d: f64, n: usize, cfg: &Exp2Config, seed: u64) -> Result<MapRun, HarnessError> {
    check_distance(d)?;
    if n == 0 {
        return Err(HarnessError::Config("at least one station is needed".into()));
    }
    let sc = cellular_scenario(&cfg.cellular, &exp2_placements(d, n), Point3::ORIGIN)?;
    let mut run = map_run(format!("d={d},n={n}"), sc, &cfg.grid, cfg.trials, seed)?;
    run.entry.distance_m = Some(d);
    run.entry.stations = Some(n);
    Ok(run)
}

/// Insecure area with the mobile at `position`, which must lie in the triangle.
pub fn run_exp3_position(cfg: &Exp3Config, position: [f64; 2], label: String, seed: u64) -> Result<MapRun, HarnessError> {
    if !crate::config::inside_triangle(&cfg.triangle, position) {
        return Err(HarnessError::Config(format!(
            "mobile position ({}, {}) lies outside the triangle",
            position[0], position[1]
        )));
    }
    let placements: Vec<Placement> = cfg
        .stations
        .iter()
        .map(|s| Placement {
            position: Point3::planar(s.x_m, s.y_m),
            orientation_deg: s.orientation_deg,
        })
        .collect();
    let mobile = Point3::planar(position[0], position[1]);
    let sc = cellular_scenario(&cfg.cellular, &placements, mobile)?;
    let mut run = map_run(label, sc, &cfg.grid, cfg.trials, seed)?;
    run.entry.stations = Some(cfg.stations.len());
    Ok(run)
}

fn cellular_header(report: &mut RunReport, cellular: &CellularConfig) -> Result<(), HarnessError> {
    let code = cellular.code.resolve()?;
    let r = rates(&code)?;
    report.thresholds = Some(thresholds(&code));
    report.ensb_max_bits = Some(cellular.secret_bits as f64 * r.secret_fraction());
    report.rates = Some(r);
    Ok(())
}

fn collect(report: &mut RunReport, runs: Vec<MapRun>) -> (Vec<(String, EnsbMap)>, Vec<(String, RegionResult)>) {
    let mut maps = Vec::with_capacity(runs.len());
    let mut regions = Vec::with_capacity(runs.len());
    for r in runs {
        maps.push((r.entry.label.clone(), r.map));
        regions.push((r.entry.label.clone(), r.region));
        report.insecure_areas.push(r.entry);
    }
    (maps, regions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonRun {
    pub summary: PlatoonSummary,
    pub regions: Vec<(String, RegionResult)>,
    pub rates: RateBreakdown,
    pub dh: DhSummary,
}

pub fn run_platoon(cfg: &PlatoonScenario) -> Result<PlatoonRun, HarnessError> {
    let channel = PlatoonChannel::new(cfg.platoon.clone()).map_err(|e| HarnessError::Config(format!("platoon: {e}")))?;
    let code = cfg.code()?;
    let r = rates(&code)?;
    let model = |e: mmkey_core::channel::ChannelError| HarnessError::Model(e.to_string());

    let mut links = Vec::new();
    let mut regions = Vec::new();
    let mut all_decode = true;
    for link in 0..channel.link_count() {
        let snr = channel.snr_at(link, channel.rx_position(link).map_err(model)?).map_err(model)?;
        all_decode &= code.decodes(snr);
        let region = insecure_volume(&channel, link, code.th2, &cfg.volume)?;
        links.push(LinkSummary {
            link: link + 1,
            snr_db: snr.0,
            calibration_db: channel.calibration_db(link).map_err(model)?,
            rates: r,
            insecure_volume_m3: region.insecure_measure,
            insecure_cells: region.cells.len(),
        });
        regions.push((format!("link-{}", link + 1), region));
    }
    let mut both = regions
        .first()
        .map(|(_, r)| r.clone())
        .ok_or_else(|| HarnessError::Config("platoon has no links".into()))?;
    for (_, r) in &regions[1..] {
        both = region_intersection(&both, r)?;
    }
    let secure = both.cells.is_empty();
    let key_rate = if secure && all_decode { r.r_max_bps } else { 0.0 };
    let summary = PlatoonSummary {
        links,
        intersection_volume_m3: both.insecure_measure,
        single_antenna_secure: secure,
        key_rate_bps: key_rate,
        otp: otp_budget(&cfg.otp, key_rate),
    };
    regions.push(("all-links".into(), both));
    Ok(PlatoonRun {
        summary,
        regions,
        rates: r,
        dh: dh_summary(&cfg.dh),
    })
}

pub fn run_rate_calc(cfg: &RateCalcConfig) -> Result<(Thresholds, RateBreakdown, DhSummary), HarnessError> {
    let code = cfg.code.resolve()?;
    Ok((thresholds(&code), rates(&code)?, dh_summary(&cfg.dh)))
}

/// Validates and runs any scenario.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    let seed = config.seed;
    let mut report = RunReport::new(config);
    let (maps, regions) = match &config.scenario {
        Scenario::Exp1(c) => {
            cellular_header(&mut report, &c.cellular)?;
            let mut runs = Vec::new();
            for &d in &c.distances_m {
                for &t in &c.angles_deg {
                    runs.push(run_exp1(d, t, c, seed)?);
                }
            }
            collect(&mut report, runs)
        }
        Scenario::Exp2(c) => {
            cellular_header(&mut report, &c.cellular)?;
            let mut runs = Vec::new();
            for &d in &c.distances_m {
                for &n in &c.station_counts {
                    runs.push(run_exp2(d, n, c, seed)?);
                }
            }
            collect(&mut report, runs)
        }
        Scenario::Exp3(c) => {
            cellular_header(&mut report, &c.cellular)?;
            let runs = c
                .mobile_positions
                .iter()
                .enumerate()
                .map(|(i, &p)| run_exp3_position(c, p, format!("position-{i}"), seed))
                .collect::<Result<Vec<_>, _>>()?;
            for pair in &c.symmetric_pairs {
                let a = runs[pair[0]].entry.insecure_area_m2;
                let b = runs[pair[1]].entry.insecure_area_m2;
                let scale = a.abs().max(b.abs());
                report.symmetry.push(SymmetryCheck {
                    positions: *pair,
                    insecure_area_m2: [a, b],
                    relative_difference: if scale > 0.0 { (a - b).abs() / scale } else { 0.0 },
                });
            }
            report.max_insecure_area_m2 = runs.iter().map(|r| r.entry.insecure_area_m2).reduce(f64::max);
            collect(&mut report, runs)
        }
        Scenario::Platoon(c) => {
            let run = run_platoon(c)?;
            report.thresholds = Some(thresholds(&c.code()?));
            report.rates = Some(run.rates);
            report.comparison = comparison_rows(&run.dh, run.summary.key_rate_bps);
            report.dh = Some(run.dh);
            report.platoon = Some(run.summary);
            report.notes = vec![
                "key budget is key window times key rate; the reference budget is carried for comparison only".into(),
                "the public combiner broadcast after the sweeps is not charged against the key rate".into(),
            ];
            (Vec::new(), run.regions)
        }
        Scenario::RateCalc(c) => {
            let (th, r, dh) = run_rate_calc(c)?;
            report.thresholds = Some(th);
            report.ensb_max_bits = Some(ENSB_PAYLOAD_BITS as f64 * r.secret_fraction());
            report.rates = Some(r);
            report.dh = Some(dh);
            (Vec::new(), Vec::new())
        }
    };
    Ok(RunOutput { report, maps, regions })
}

/// One beacon as seen in a demo sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconLine {
    pub array_id: u32,
    pub sector_id: u32,
    pub payload_hex: String,
    pub snr_mobile_db: f64,
    pub snr_eve_db: f64,
    pub decoded: bool,
    pub intercepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTranscript {
    pub seed: u64,
    pub station: [f64; 2],
    pub orientation_deg: f64,
    pub mobile: [f64; 2],
    pub eve: [f64; 2],
    pub thresholds: Thresholds,
    pub beacons: Vec<BeaconLine>,
    pub mobile_feedback: FeedbackFrame,
    pub initiator_feedback: FeedbackFrame,
    pub decoded: Vec<u32>,
    pub intercepted: Vec<u32>,
    /// Key packets left after removing what Eve holds; zero when she holds everything.
    pub key_packets: usize,
    pub key_bits: usize,
    pub key_hex: Vec<String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// One station at the origin sweeping toward a mobile with Eve listening.
pub fn sweep_demo(
    cellular: &CellularConfig,
    orientation_deg: f64,
    mobile: [f64; 2],
    eve: [f64; 2],
    seed: u64,
) -> Result<SweepTranscript, HarnessError> {
    cellular.validate()?;
    let code = cellular.code.resolve()?;
    let station = BaseStation::new(0, Point3::ORIGIN, cellular.station_antenna(orientation_deg)?);
    let channel = cellular.channel.trial(1, mmkey_core::spatial::trial_seed(seed, 0));
    let (m, e) = (Point3::planar(mobile[0], mobile[1]), Point3::planar(eve[0], eve[1]));
    let out = run_transmit_sls(&station, m, e, &channel, &code, &cellular.sweep)
        .map_err(|err| HarnessError::Model(err.to_string()))?;
    let frames = beacon_frames(&station, &cellular.sweep, seed);

    let n = frames.len() as u32;
    let log = ReceptionLog::new(n, out.decoded.clone(), out.intercepted.clone())
        .map_err(|err| HarnessError::Model(err.to_string()))?;
    let packets: Vec<RandomPacket> = frames
        .iter()
        .map(|f| RandomPacket {
            id: f.sector_id,
            payload: f.secret_payload.clone(),
        })
        .collect();
    let key = extract_key(&log, &packets, exact_bound(&log), GaloisField::GF256).ok();

    let beacons = out
        .beacons
        .iter()
        .map(|b| BeaconLine {
            array_id: b.array_id,
            sector_id: b.sector_id,
            payload_hex: hex(frames[b.sector_id as usize].secret_payload.as_bytes()),
            snr_mobile_db: b.snr_mobile.0,
            snr_eve_db: b.snr_eve.0,
            decoded: b.decoded,
            intercepted: b.intercepted,
        })
        .collect();
    Ok(SweepTranscript {
        seed,
        station: [0.0, 0.0],
        orientation_deg,
        mobile,
        eve,
        thresholds: thresholds(&code),
        beacons,
        mobile_feedback: out.mobile_feedback,
        initiator_feedback: out.initiator_feedback,
        decoded: out.decoded.iter().copied().collect(),
        intercepted: out.intercepted.iter().copied().collect(),
        key_packets: key.as_ref().map_or(0, |k| k.key_packets.len()),
        key_bits: key.as_ref().map_or(0, |k| k.bits()),
        key_hex: key
            .map(|k| k.key_packets.iter().map(|p| hex(p.as_bytes())).collect())
            .unwrap_or_default(),
    })
}

/// Azimuth cut of every sector's gain, one row per (azimuth, sector).
pub fn pattern_csv(antenna: &SectorAntenna, step_deg: f64, elevation_deg: f64) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| HarnessError::Model(format!("csv encoding: {e}"));
    w.write_record(["azimuth_deg", "sector", "gain_dbi"]).map_err(fail)?;
    let n = (360.0 / step_deg).round() as usize;
    for az in (0..n).map(|i| -180.0 + i as f64 * step_deg) {
        for (s, g) in antenna.gains(az, elevation_deg).into_iter().enumerate() {
            w.write_record([az.to_string(), s.to_string(), g.0.to_string()]).map_err(fail)?;
        }
    }
    w.into_inner().map_err(|e| HarnessError::Model(format!("csv encoding: {e}")))
}
