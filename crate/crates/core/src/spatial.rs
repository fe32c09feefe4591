//! Where can an eavesdropper stand? ENSB maps over planar grids, insecure
//! areas, platoon insecure volumes and their intersections.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::antenna::best_of;
use crate::channel::platoon::PlatoonChannel;
use crate::channel::{snr, ChannelError, OutdoorChannel, TrialChannel};
use crate::geometry::Point3;
use crate::rfmath::{Db, RateError, WiretapCode};
use crate::rng;
use crate::sls::{decoded_sectors, BaseStation, SweepConfig};

/// Secret bits per beacon in the ENSB expression.
pub const ENSB_PAYLOAD_BITS: usize = 1000;

pub const DEFAULT_CELL_BUDGET: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SpatialError {
    Resolution(f64),
    EmptyExtent,
    BudgetExceeded { cells: usize, budget: usize },
    GridMismatch,
    NoTrials,
    NoStations,
    StationIds,
    ValueCount { expected: usize, found: usize },
    Channel(ChannelError),
    Rate(RateError),
}

impl fmt::Display for SpatialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpatialError::Resolution(r) => write!(f, "grid resolution must be positive, got {r}"),
            SpatialError::EmptyExtent => f.write_str("grid extent is empty"),
            SpatialError::BudgetExceeded { cells, budget } => {
                write!(f, "grid has {cells} cells, budget is {budget}")
            }
            SpatialError::GridMismatch => f.write_str("regions are on different grids"),
            SpatialError::NoTrials => f.write_str("at least one trial is needed"),
            SpatialError::NoStations => f.write_str("scenario has no base stations"),
            SpatialError::StationIds => f.write_str("station ids must be 0..n in order"),
            SpatialError::ValueCount { expected, found } => {
                write!(f, "expected {expected} cell values, got {found}")
            }
            SpatialError::Channel(e) => write!(f, "channel: {e}"),
            SpatialError::Rate(e) => write!(f, "rate: {e}"),
        }
    }
}

impl core::error::Error for SpatialError {}

impl From<ChannelError> for SpatialError {
    fn from(e: ChannelError) -> Self {
        SpatialError::Channel(e)
    }
}

impl From<RateError> for SpatialError {
    fn from(e: RateError) -> Self {
        SpatialError::Rate(e)
    }
}

/// Axis-aligned box of cubic (3-D) or square (2-D) cells. A planar grid
/// has `min.z == max.z` and one layer of cells at that height.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct GridSpec {
    pub min: Point3,
    pub max: Point3,
    pub resolution_m: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_budget"))]
    pub cell_budget: usize,
}

#[cfg(feature = "serde")]
fn default_budget() -> usize {
    DEFAULT_CELL_BUDGET
}

impl GridSpec {
    pub fn planar(min_x: f64, min_y: f64, max_x: f64, max_y: f64, z: f64, resolution_m: f64) -> Self {
        GridSpec {
            min: Point3::new(min_x, min_y, z),
            max: Point3::new(max_x, max_y, z),
            resolution_m,
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }

    pub fn volume(min: Point3, max: Point3, resolution_m: f64) -> Self {
        GridSpec {
            min,
            max,
            resolution_m,
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }

    /// Square planar grid of `n × n` cells centered on `center`.
    pub fn square(center: Point3, half_width_m: f64, n: usize) -> Self {
        let res = 2.0 * half_width_m / n as f64;
        GridSpec::planar(
            center.x - half_width_m,
            center.y - half_width_m,
            center.x + half_width_m,
            center.y + half_width_m,
            center.z,
            res,
        )
    }

    pub fn is_planar(&self) -> bool {
        self.max.z == self.min.z
    }

    fn count(&self, lo: f64, hi: f64) -> usize {
        libm::ceil((hi - lo) / self.resolution_m - 1e-9).max(0.0) as usize
    }

    /// Cells along x, y, z.
    pub fn shape(&self) -> [usize; 3] {
        let nz = if self.is_planar() { 1 } else { self.count(self.min.z, self.max.z) };
        [self.count(self.min.x, self.max.x), self.count(self.min.y, self.max.y), nz]
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<(), SpatialError> {
        if !(self.resolution_m > 0.0) || !self.resolution_m.is_finite() {
            return Err(SpatialError::Resolution(self.resolution_m));
        }
        let [nx, ny, nz] = self.shape();
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(SpatialError::EmptyExtent);
        }
        let cells = nx.saturating_mul(ny).saturating_mul(nz);
        if cells > self.cell_budget {
            return Err(SpatialError::BudgetExceeded {
                cells,
                budget: self.cell_budget,
            });
        }
        Ok(())
    }

    /// Area or volume of one cell.
    pub fn cell_measure(&self) -> f64 {
        let r = self.resolution_m;
        if self.is_planar() {
            r * r
        } else {
            r * r * r
        }
    }

    /// Cell index → (i, j, k); x varies fastest.
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.shape();
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    pub fn center(&self, index: usize) -> Point3 {
        let [i, j, k] = self.coords(index);
        let r = self.resolution_m;
        let z = if self.is_planar() { self.min.z } else { self.min.z + (k as f64 + 0.5) * r };
        Point3::new(self.min.x + (i as f64 + 0.5) * r, self.min.y + (j as f64 + 0.5) * r, z)
    }
}

/// ENSB in bits at every cell center.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsbMap {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub ensb_max: f64,
}

impl EnsbMap {
    pub fn new(grid: GridSpec, values: Vec<f64>, trials: usize, seed: u64, ensb_max: f64) -> Result<Self, SpatialError> {
        if values.len() != grid.len() {
            return Err(SpatialError::ValueCount {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if trials == 0 {
            return Err(SpatialError::NoTrials);
        }
        Ok(EnsbMap {
            grid,
            values,
            trials,
            seed,
            ensb_max,
        })
    }

    /// Default Monte-Carlo tolerance: one trial's worth of bits.
    pub fn tolerance(&self) -> f64 {
        self.ensb_max / self.trials as f64
    }
}

/// A set of grid cells and the area or volume they cover.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionResult {
    pub grid: GridSpec,
    pub cells: BTreeSet<usize>,
    pub insecure_measure: f64,
}

impl RegionResult {
    pub fn from_cells(grid: GridSpec, cells: BTreeSet<usize>) -> Self {
        let insecure_measure = cells.len() as f64 * grid.cell_measure();
        RegionResult {
            grid,
            cells,
            insecure_measure,
        }
    }

    pub fn is_subset(&self, other: &RegionResult) -> bool {
        self.grid == other.grid && self.cells.is_subset(&other.cells)
    }
}

/// Cells of `grid` whose center satisfies `insecure`.
pub fn region_where(grid: &GridSpec, mut insecure: impl FnMut(Point3) -> Result<bool, SpatialError>) -> Result<RegionResult, SpatialError> {
    grid.validate()?;
    let mut cells = BTreeSet::new();
    for i in 0..grid.len() {
        if insecure(grid.center(i))? {
            cells.insert(i);
        }
    }
    Ok(RegionResult::from_cells(*grid, cells))
}

pub fn region_intersection(a: &RegionResult, b: &RegionResult) -> Result<RegionResult, SpatialError> {
    if a.grid != b.grid {
        return Err(SpatialError::GridMismatch);
    }
    Ok(RegionResult::from_cells(a.grid, a.cells.intersection(&b.cells).copied().collect()))
}

/// Cells where ENSB falls short of its maximum by more than half a trial's
/// worth, i.e. where at least one trial left Eve holding every frame the
/// mobile decoded.
pub fn insecure_area(map: &EnsbMap) -> RegionResult {
    insecure_area_with_tolerance(map, map.tolerance())
}

pub fn insecure_area_with_tolerance(map: &EnsbMap, tolerance: f64) -> RegionResult {
    let cut = map.ensb_max - tolerance / 2.0;
    let cells = map
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v < cut)
        .map(|(i, _)| i)
        .collect();
    RegionResult::from_cells(map.grid, cells)
}

/// Cells where `link`'s SNR exceeds `th2`. Cells inside a car are never
/// insecure.
pub fn insecure_volume(channel: &PlatoonChannel, link: usize, th2: Db, grid: &GridSpec) -> Result<RegionResult, SpatialError> {
    region_where(grid, |p| {
        if channel.scene().inside_solid(p) {
            return Ok(false);
        }
        match channel.snr_at(link, p) {
            Ok(s) => Ok(s > th2),
            Err(ChannelError::CoincidentPositions) => Ok(true),
            Err(e) => Err(e.into()),
        }
    })
}

/// Stations, mobile, channel and code behind an ENSB map.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsbScenario {
    /// Ids must be `0..n` in order; they index the channel environments.
    pub stations: Vec<BaseStation>,
    pub mobile: Point3,
    pub channel: OutdoorChannel,
    pub code: WiretapCode,
    pub sweep: SweepConfig,
    pub secret_bits: usize,
}

impl EnsbScenario {
    pub fn validate(&self) -> Result<(), SpatialError> {
        if self.stations.is_empty() {
            return Err(SpatialError::NoStations);
        }
        if self.stations.iter().enumerate().any(|(i, s)| s.id != i) {
            return Err(SpatialError::StationIds);
        }
        self.code.validate()?;
        self.channel.params.validate()?;
        self.sweep.budget.validate()?;
        Ok(())
    }

    /// `secret_bits · R_max / decoding rate`.
    pub fn ensb_max(&self) -> Result<f64, SpatialError> {
        Ok(self.secret_bits as f64 * self.code.rates()?.secret_fraction())
    }
}

/// Frames the mobile decoded in one trial, as (station, sector).
#[derive(Debug, Clone, PartialEq)]
struct TrialState {
    channel: TrialChannel,
    frames: Vec<(usize, usize)>,
}

/// Precomputed trials of a scenario. Evaluating a position is a pure
/// function of the position, so cells may be evaluated in any order or in
/// parallel.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsbEvaluator {
    scenario: EnsbScenario,
    trials: Vec<TrialState>,
    /// Per station, sectors decoded in at least one trial.
    used_sectors: Vec<Vec<usize>>,
    ensb_max: f64,
    seed: u64,
}

pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    rng::derive(&[rng::tag::TRIAL, seed, trial as u64])
}

impl EnsbEvaluator {
    pub fn new(scenario: EnsbScenario, trials: usize, seed: u64) -> Result<Self, SpatialError> {
        scenario.validate()?;
        if trials == 0 {
            return Err(SpatialError::NoTrials);
        }
        let n = scenario.stations.len();
        let mut used = alloc::vec![BTreeSet::new(); n];
        let mut states = Vec::with_capacity(trials);
        for t in 0..trials {
            let channel = scenario.channel.trial(n, trial_seed(seed, t));
            let mut frames = Vec::new();
            for st in &scenario.stations {
                let real = channel.realization(st.id, st.position, scenario.mobile)?;
                let snrs: Vec<Db> = st
                    .gains_toward(scenario.mobile)
                    .into_iter()
                    .map(|g| snr(&scenario.sweep.budget, g, Db(scenario.sweep.mobile_gain_dbi), &real))
                    .collect();
                for s in decoded_sectors(&snrs, &scenario.code, scenario.sweep.single_frame_worst_case) {
                    frames.push((st.id, s as usize));
                    used[st.id].insert(s as usize);
                }
            }
            states.push(TrialState { channel, frames });
        }
        Ok(EnsbEvaluator {
            ensb_max: scenario.ensb_max()?,
            used_sectors: used.into_iter().map(|s| s.into_iter().collect()).collect(),
            trials: states,
            scenario,
            seed,
        })
    }

    pub fn scenario(&self) -> &EnsbScenario {
        &self.scenario
    }

    pub fn trials(&self) -> usize {
        self.trials.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ensb_max(&self) -> f64 {
        self.ensb_max
    }

    /// Fraction of trials in which the mobile decoded at least one frame
    /// that Eve at `eve` missed.
    pub fn probability(&self, eve: Point3) -> Result<f64, SpatialError> {
        let sc = &self.scenario;
        // Antenna gains toward Eve do not change between trials.
        let gains: Vec<Vec<(usize, Db)>> = sc
            .stations
            .iter()
            .zip(&self.used_sectors)
            .map(|(st, sectors)| {
                let dir = eve - st.position;
                let (az, el) = (dir.azimuth_deg(), dir.elevation_deg());
                sectors
                    .iter()
                    .map(|&s| (s, st.antenna.gain(s, az, el).expect("sector in range")))
                    .collect()
            })
            .collect();
        let gain_of = |station: usize, sector: usize| {
            gains[station]
                .iter()
                .find(|(s, _)| *s == sector)
                .map(|(_, g)| *g)
                .expect("decoded sector was precomputed")
        };
        let mut hits = 0usize;
        for trial in &self.trials {
            let mut cached: Vec<Option<Option<crate::channel::ChannelRealization>>> = alloc::vec![None; sc.stations.len()];
            let mut missed = false;
            for &(station, sector) in &trial.frames {
                let real = match cached[station] {
                    Some(r) => r,
                    None => {
                        let st = &sc.stations[station];
                        let r = match trial.channel.realization(station, st.position, eve) {
                            Ok(r) => Some(r),
                            Err(ChannelError::CoincidentPositions) => None,
                            Err(e) => return Err(e.into()),
                        };
                        cached[station] = Some(r);
                        r
                    }
                };
                let Some(real) = real else { continue };
                let s = snr(&sc.sweep.budget, gain_of(station, sector), Db(sc.sweep.eve_gain_dbi), &real);
                if !sc.code.leaks(s) {
                    missed = true;
                    break;
                }
            }
            if missed {
                hits += 1;
            }
        }
        Ok(hits as f64 / self.trials.len() as f64)
    }

    pub fn ensb_at(&self, eve: Point3) -> Result<f64, SpatialError> {
        Ok(self.ensb_max * self.probability(eve)?)
    }

    /// Sequential map; callers wanting parallelism evaluate
    /// [`EnsbEvaluator::ensb_at`] per cell and assemble with [`EnsbMap::new`].
    pub fn map(&self, grid: &GridSpec) -> Result<EnsbMap, SpatialError> {
        grid.validate()?;
        let values = (0..grid.len())
            .map(|i| self.ensb_at(grid.center(i)))
            .collect::<Result<Vec<_>, _>>()?;
        EnsbMap::new(*grid, values, self.trials(), self.seed, self.ensb_max)
    }
}

pub fn ensb_at(eve: Point3, scenario: &EnsbScenario, trials: usize, seed: u64) -> Result<f64, SpatialError> {
    EnsbEvaluator::new(scenario.clone(), trials, seed)?.ensb_at(eve)
}

pub fn ensb_map(scenario: &EnsbScenario, grid: &GridSpec, trials: usize, seed: u64) -> Result<EnsbMap, SpatialError> {
    EnsbEvaluator::new(scenario.clone(), trials, seed)?.map(grid)
}

/// Best-sector index of a station toward a point, for callers placing
/// stations so that a given sector serves the mobile.
pub fn serving_sector(station: &BaseStation, target: Point3) -> usize {
    best_of(&station.gains_toward(target)).0
}
