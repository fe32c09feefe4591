//! Run reports and their files: `report.json`, `ensb_map.csv`,
//! `region_cells.csv` and `timing.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mmkey_core::spatial::{EnsbMap, RegionResult};
use mmkey_core::RateBreakdown;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub th1_db: f64,
    pub th2_db: f64,
    pub bandwidth_hz: f64,
}

/// Insecure area of one map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaEntry {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mobile: Option<[f64; 2]>,
    pub insecure_area_m2: f64,
    pub insecure_cells: usize,
    pub total_cells: usize,
    pub mean_ensb_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCheck {
    pub positions: [usize; 2],
    pub insecure_area_m2: [f64; 2],
    pub relative_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSummary {
    pub link: usize,
    pub snr_db: f64,
    pub calibration_db: f64,
    pub rates: RateBreakdown,
    pub insecure_volume_m3: f64,
    pub insecure_cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtpSummary {
    pub demand_bytes: f64,
    pub budget_bytes: f64,
    pub reference_budget_bytes: f64,
    pub demand_fits_budget: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatoonSummary {
    pub links: Vec<LinkSummary>,
    pub intersection_volume_m3: f64,
    /// Whether no single-antenna eavesdropper position hears every link.
    pub single_antenna_secure: bool,
    pub key_rate_bps: f64,
    pub otp: OtpSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhSummary {
    pub cycles_per_op: f64,
    pub clock_hz: f64,
    pub bits_per_key: u32,
    pub rate_bps: f64,
    /// The same rate rounded to one significant figure.
    pub rate_rounded_kbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub dh_2048: String,
    pub erasure_based: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub kind: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rates: Option<RateBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensb_max_bits: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub insecure_areas: Vec<IaEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_insecure_area_m2: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub symmetry: Vec<SymmetryCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub platoon: Option<PlatoonSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dh: Option<DhSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub comparison: Vec<ComparisonRow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn new(config: &ScenarioConfig) -> Self {
        RunReport {
            kind: config.scenario.kind().to_owned(),
            seed: config.seed,
            config: config.clone(),
            thresholds: None,
            rates: None,
            ensb_max_bits: None,
            insecure_areas: Vec::new(),
            max_insecure_area_m2: None,
            symmetry: Vec::new(),
            platoon: None,
            dh: None,
            comparison: Vec::new(),
            notes: Vec::new(),
        }
    }
}

/// A report plus the grids behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: RunReport,
    pub maps: Vec<(String, EnsbMap)>,
    pub regions: Vec<(String, RegionResult)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub report: PathBuf,
    pub ensb_map: PathBuf,
    pub region_cells: PathBuf,
    pub timing: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        OutputPaths {
            report: dir.join("report.json"),
            ensb_map: dir.join("ensb_map.csv"),
            region_cells: dir.join("region_cells.csv"),
            timing: dir.join("timing.json"),
        }
    }
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| HarnessError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| HarnessError::io(path, e))?;
    tmp.persist(path).map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

pub fn report_json(report: &RunReport) -> Result<Vec<u8>, HarnessError> {
    let mut out = serde_json::to_vec_pretty(report).map_err(|e| HarnessError::Model(format!("report encoding: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

#[derive(Serialize)]
struct MapRow<'a> {
    map: &'a str,
    index: usize,
    x: f64,
    y: f64,
    z: f64,
    ensb: f64,
}

#[derive(Serialize)]
struct RegionRow<'a> {
    region: &'a str,
    index: usize,
    x: f64,
    y: f64,
    z: f64,
}

fn csv_bytes<R: Serialize>(header: &[&str], rows: impl Iterator<Item = R>) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let fail = |e: csv::Error| HarnessError::Model(format!("csv encoding: {e}"));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    w.into_inner().map_err(|e| HarnessError::Model(format!("csv encoding: {e}")))
}

pub fn ensb_csv(maps: &[(String, EnsbMap)]) -> Result<Vec<u8>, HarnessError> {
    let rows = maps.iter().flat_map(|(label, m)| {
        m.values.iter().enumerate().map(move |(i, &v)| {
            let c = m.grid.center(i);
            MapRow {
                map: label,
                index: i,
                x: c.x,
                y: c.y,
                z: c.z,
                ensb: v,
            }
        })
    });
    csv_bytes(&["map", "index", "x", "y", "z", "ensb"], rows)
}

pub fn region_csv(regions: &[(String, RegionResult)]) -> Result<Vec<u8>, HarnessError> {
    let rows = regions.iter().flat_map(|(label, r)| {
        r.cells.iter().map(move |&i| {
            let c = r.grid.center(i);
            RegionRow {
                region: label,
                index: i,
                x: c.x,
                y: c.y,
                z: c.z,
            }
        })
    });
    csv_bytes(&["region", "index", "x", "y", "z"], rows)
}

/// Writes every output atomically. Wall-clock time goes to its own file
/// so the report stays byte-identical across reruns.
pub fn emit_report(output: &RunOutput, paths: &OutputPaths, wall_clock_s: Option<f64>) -> Result<(), HarnessError> {
    write_atomic(&paths.report, &report_json(&output.report)?)?;
    write_atomic(&paths.ensb_map, &ensb_csv(&output.maps)?)?;
    write_atomic(&paths.region_cells, &region_csv(&output.regions)?)?;
    if let Some(t) = wall_clock_s {
        let timing = serde_json::json!({ "kind": output.report.kind, "wall_clock_s": t });
        let mut bytes = serde_json::to_vec_pretty(&timing).expect("static shape");
        bytes.push(b'\n');
        write_atomic(&paths.timing, &bytes)?;
    }
    Ok(())
}
