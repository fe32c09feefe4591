//! Scenario files. One schema, read from TOML or JSON.

use std::path::Path;

use mmkey_core::antenna::{ArrayGeometry, SectorAntenna, SectorCodebook};
use mmkey_core::channel::platoon::{PlatoonChannel, PlatoonConfig};
use mmkey_core::channel::OutdoorChannel;
use mmkey_core::sls::SweepConfig;
use mmkey_core::spatial::{GridSpec, ENSB_PAYLOAD_BITS};
use mmkey_core::{Db, Point3, WiretapCode};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub seed: u64,
    /// Where outputs go unless the command line says otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Exp1(Exp1Config),
    Exp2(Exp2Config),
    Exp3(Exp3Config),
    Platoon(PlatoonScenario),
    RateCalc(RateCalcConfig),
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Exp1(_) => "exp1",
            Scenario::Exp2(_) => "exp2",
            Scenario::Exp3(_) => "exp3",
            Scenario::Platoon(_) => "platoon",
            Scenario::RateCalc(_) => "rate-calc",
        }
    }
}

/// How the wiretap code is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CodeSpec {
    /// Thresholds solved from a decoding rate and a secure rate.
    Rates {
        decoding_rate_bps: f64,
        r_max_bps: f64,
        bandwidth_hz: f64,
    },
    Thresholds {
        th1_db: f64,
        th2_db: f64,
        bandwidth_hz: f64,
    },
}

impl Default for CodeSpec {
    fn default() -> Self {
        CodeSpec::Rates {
            decoding_rate_bps: 27.5e6,
            r_max_bps: 25e6,
            bandwidth_hz: 1e9,
        }
    }
}

impl CodeSpec {
    pub fn resolve(&self) -> Result<WiretapCode, HarnessError> {
        let code = match *self {
            CodeSpec::Rates {
                decoding_rate_bps,
                r_max_bps,
                bandwidth_hz,
            } => WiretapCode::from_rates(decoding_rate_bps, r_max_bps, bandwidth_hz),
            CodeSpec::Thresholds {
                th1_db,
                th2_db,
                bandwidth_hz,
            } => WiretapCode::new(Db(th1_db), Db(th2_db), bandwidth_hz),
        };
        code.map_err(|e| HarnessError::Config(format!("wiretap code: {e}")))
    }
}

/// Radio settings shared by the cellular experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellularConfig {
    pub code: CodeSpec,
    pub array: ArrayGeometry,
    pub channel: OutdoorChannel,
    /// `single_frame_worst_case` is forced on by the experiment runners.
    pub sweep: SweepConfig,
    pub secret_bits: usize,
}

impl Default for CellularConfig {
    fn default() -> Self {
        CellularConfig {
            code: CodeSpec::default(),
            array: ArrayGeometry::default(),
            channel: OutdoorChannel::default(),
            sweep: SweepConfig::default(),
            secret_bits: ENSB_PAYLOAD_BITS,
        }
    }
}

impl CellularConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.code.resolve()?;
        self.array
            .validate()
            .map_err(|e| HarnessError::Config(format!("array: {e}")))?;
        self.channel
            .params
            .validate()
            .map_err(|e| HarnessError::Config(format!("channel: {e}")))?;
        self.sweep
            .budget
            .validate()
            .map_err(|e| HarnessError::Config(format!("link budget: {e}")))?;
        if self.secret_bits == 0 {
            return Err(HarnessError::Config("secret_bits must be positive".into()));
        }
        Ok(())
    }

    /// Station whose first sector is centered at `orientation_deg`.
    pub fn station_antenna(&self, orientation_deg: f64) -> Result<SectorAntenna, HarnessError> {
        SectorAntenna::new(self.array, SectorCodebook::base_station(orientation_deg))
            .map_err(|e| HarnessError::Config(format!("antenna: {e}")))
    }
}

/// Square Eve grid centered on the mobile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapGrid {
    pub half_width_m: f64,
    pub cells: usize,
}

impl MapGrid {
    pub fn around(&self, mobile: Point3) -> GridSpec {
        GridSpec::square(mobile, self.half_width_m, self.cells)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if !(self.half_width_m > 0.0 && self.half_width_m.is_finite()) || self.cells == 0 {
            return Err(HarnessError::Config("grid needs a positive half width and at least one cell".into()));
        }
        self.around(Point3::ORIGIN)
            .validate()
            .map_err(|e| HarnessError::Config(format!("grid: {e}")))
    }
}

impl Default for MapGrid {
    fn default() -> Self {
        MapGrid {
            half_width_m: 1000.0,
            cells: 50,
        }
    }
}

fn check_trials(trials: usize) -> Result<(), HarnessError> {
    if trials == 0 {
        return Err(HarnessError::Config("trials must be at least 1".into()));
    }
    Ok(())
}

/// Two stations on a circle around the mobile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp1Config {
    pub distances_m: Vec<f64>,
    pub angles_deg: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub grid: MapGrid,
    #[serde(default)]
    pub cellular: CellularConfig,
}

impl Exp1Config {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.distances_m.is_empty() || self.angles_deg.is_empty() {
            return Err(HarnessError::Config("exp1 needs at least one distance and one angle".into()));
        }
        for &d in &self.distances_m {
            check_distance(d)?;
        }
        for &t in &self.angles_deg {
            check_angle(t)?;
        }
        check_trials(self.trials)?;
        self.grid.validate()?;
        self.cellular.validate()
    }
}

pub(crate) fn check_distance(d: f64) -> Result<(), HarnessError> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(HarnessError::Config(format!("distance must be positive, got {d}")));
    }
    Ok(())
}

pub(crate) fn check_angle(theta: f64) -> Result<(), HarnessError> {
    if !(theta > 0.0 && theta < 360.0) {
        return Err(HarnessError::Config(format!("angle must lie in (0, 360) degrees, got {theta}")));
    }
    Ok(())
}

/// `n` equiangular stations around the mobile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp2Config {
    pub distances_m: Vec<f64>,
    pub station_counts: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub grid: MapGrid,
    #[serde(default)]
    pub cellular: CellularConfig,
}

impl Exp2Config {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.distances_m.is_empty() || self.station_counts.is_empty() {
            return Err(HarnessError::Config("exp2 needs at least one distance and one station count".into()));
        }
        for &d in &self.distances_m {
            check_distance(d)?;
        }
        if self.station_counts.contains(&0) {
            return Err(HarnessError::Config("station counts must be at least 1".into()));
        }
        check_trials(self.trials)?;
        self.grid.validate()?;
        self.cellular.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub x_m: f64,
    pub y_m: f64,
    pub orientation_deg: f64,
}

/// Fixed cell deployment; the mobile moves inside a triangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp3Config {
    pub stations: Vec<StationSpec>,
    pub triangle: [[f64; 2]; 3],
    pub mobile_positions: Vec<[f64; 2]>,
    /// Index pairs of positions that are mirror images under the deployment's symmetry.
    #[serde(default)]
    pub symmetric_pairs: Vec<[usize; 2]>,
    pub trials: usize,
    #[serde(default)]
    pub grid: MapGrid,
    #[serde(default)]
    pub cellular: CellularConfig,
}

impl Exp3Config {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.stations.is_empty() {
            return Err(HarnessError::Config("exp3 needs at least one station".into()));
        }
        if triangle_area(&self.triangle).abs() < 1e-9 {
            return Err(HarnessError::Config("triangle is degenerate".into()));
        }
        if self.mobile_positions.is_empty() {
            return Err(HarnessError::Config("exp3 needs at least one mobile position".into()));
        }
        for (i, p) in self.mobile_positions.iter().enumerate() {
            if !inside_triangle(&self.triangle, *p) {
                return Err(HarnessError::Config(format!(
                    "mobile position {i} ({}, {}) lies outside the triangle",
                    p[0], p[1]
                )));
            }
        }
        for pair in &self.symmetric_pairs {
            if pair.iter().any(|&i| i >= self.mobile_positions.len()) {
                return Err(HarnessError::Config("symmetric pair index out of range".into()));
            }
        }
        check_trials(self.trials)?;
        self.grid.validate()?;
        self.cellular.validate()
    }
}

fn triangle_area(t: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]))
}

/// Closed triangle test with a small tolerance so vertices and edges count.
pub fn inside_triangle(t: &[[f64; 2]; 3], p: [f64; 2]) -> bool {
    let cross = |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let scale = triangle_area(t).abs().sqrt().max(1.0);
    let eps = 1e-9 * scale * scale;
    let s = [cross(t[0], t[1]), cross(t[1], t[2]), cross(t[2], t[0])];
    s.iter().all(|&v| v >= -eps) || s.iter().all(|&v| v <= eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DhParams {
    pub cycles_per_op: f64,
    pub clock_hz: f64,
    pub bits_per_key: u32,
}

impl Default for DhParams {
    fn default() -> Self {
        DhParams {
            cycles_per_op: 1.38e6,
            clock_hz: 240e6,
            bits_per_key: 112,
        }
    }
}

impl DhParams {
    fn validate(&self) -> Result<(), HarnessError> {
        if !(self.cycles_per_op > 0.0 && self.clock_hz > 0.0) || self.bits_per_key == 0 {
            return Err(HarnessError::Config("DH parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Control traffic to be protected with a one-time pad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OtpConfig {
    /// Time between key agreements.
    pub rekey_interval_s: f64,
    /// How long each key agreement runs.
    pub key_window_s: f64,
    pub message_interval_s: f64,
    pub message_bytes: f64,
    /// Key budget as printed in the source analysis, carried for comparison.
    pub reference_budget_bytes: f64,
}

impl Default for OtpConfig {
    fn default() -> Self {
        OtpConfig {
            rekey_interval_s: 300.0,
            key_window_s: 0.1,
            message_interval_s: 0.1,
            message_bytes: 60.0,
            reference_budget_bytes: 200e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatoonScenario {
    #[serde(default)]
    pub platoon: PlatoonConfig,
    pub th1_db: f64,
    pub th2_db: f64,
    pub bandwidth_hz: f64,
    pub volume: GridSpec,
    #[serde(default)]
    pub otp: OtpConfig,
    #[serde(default)]
    pub dh: DhParams,
}

impl PlatoonScenario {
    pub fn code(&self) -> Result<WiretapCode, HarnessError> {
        CodeSpec::Thresholds {
            th1_db: self.th1_db,
            th2_db: self.th2_db,
            bandwidth_hz: self.bandwidth_hz,
        }
        .resolve()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.code()?;
        self.volume
            .validate()
            .map_err(|e| HarnessError::Config(format!("volume grid: {e}")))?;
        PlatoonChannel::new(self.platoon.clone()).map_err(|e| HarnessError::Config(format!("platoon: {e}")))?;
        let o = &self.otp;
        let positive = [o.rekey_interval_s, o.key_window_s, o.message_interval_s, o.message_bytes];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(HarnessError::Config("OTP timing and sizes must be positive".into()));
        }
        self.dh.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCalcConfig {
    pub code: CodeSpec,
    #[serde(default)]
    pub dh: DhParams,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match &self.scenario {
            Scenario::Exp1(c) => c.validate(),
            Scenario::Exp2(c) => c.validate(),
            Scenario::Exp3(c) => c.validate(),
            Scenario::Platoon(c) => c.validate(),
            Scenario::RateCalc(c) => {
                c.code.resolve()?;
                c.dh.validate()
            }
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| HarnessError::Parse {
            source_name: "toml".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| HarnessError::Parse {
            source_name: "json".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(format!("cannot encode TOML: {e}")))
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        serde_json::to_string_pretty(self).map_err(|e| HarnessError::Config(format!("cannot encode JSON: {e}")))
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|e| match e {
            HarnessError::Parse { message, .. } => HarnessError::Parse {
                source_name: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    /// The shipped configuration for a scenario kind.
    pub fn default_for(kind: &str) -> Result<Self, HarnessError> {
        let text = match kind {
            "exp1" => include_str!("../configs/exp1.toml"),
            "exp2" => include_str!("../configs/exp2.toml"),
            "exp3" => include_str!("../configs/exp3.toml"),
            "platoon" => include_str!("../configs/platoon.toml"),
            "rate-calc" => include_str!("../configs/rate-calc.toml"),
            other => return Err(HarnessError::Config(format!("unknown scenario kind `{other}`"))),
        };
        Self::from_toml(text)
    }

    pub fn override_trials(&mut self, trials: usize) {
        match &mut self.scenario {
            Scenario::Exp1(c) => c.trials = trials,
            Scenario::Exp2(c) => c.trials = trials,
            Scenario::Exp3(c) => c.trials = trials,
            Scenario::Platoon(_) | Scenario::RateCalc(_) => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_membership() {
        let t = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        assert!(inside_triangle(&t, [1.0, 1.0]));
        assert!(inside_triangle(&t, [0.0, 0.0]));
        assert!(inside_triangle(&t, [5.0, 5.0]));
        assert!(!inside_triangle(&t, [6.0, 6.0]));
        assert!(!inside_triangle(&t, [-0.1, 1.0]));
        let flipped = [t[0], t[2], t[1]];
        assert!(inside_triangle(&flipped, [1.0, 1.0]));
    }

    #[test]
    fn shipped_defaults_validate() {
        for kind in ["exp1", "exp2", "exp3", "platoon", "rate-calc"] {
            let cfg = ScenarioConfig::default_for(kind).unwrap();
            assert_eq!(cfg.scenario.kind(), kind);
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = include_str!("../configs/rate-calc.toml").replace("[scenario]", "[scenario]\nbogus = 1");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(HarnessError::Parse { .. })));
        let top = format!("extra = true\n{}", include_str!("../configs/rate-calc.toml"));
        assert!(ScenarioConfig::from_toml(&top).is_err());
    }

    #[test]
    fn wrong_schema_version() {
        let text = include_str!("../configs/rate-calc.toml").replace("schema_version = 1", "schema_version = 9");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(HarnessError::Config(_))));
    }

    #[test]
    fn position_outside_triangle() {
        let mut cfg = ScenarioConfig::default_for("exp3").unwrap();
        if let Scenario::Exp3(c) = &mut cfg.scenario {
            c.mobile_positions.push([1e4, 1e4]);
        }
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("outside the triangle"), "{err}");
    }
}
