//! Image-method ray tracing among planar rectangular reflectors and
//! box-shaped occluders.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::ChannelError;
use crate::antenna::SPEED_OF_LIGHT;
use crate::geometry::Point3;

const EPS: f64 = 1e-9;

fn cross(a: Point3, b: Point3) -> Point3 {
    Point3::new(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x)
}

/// Which part of a car a reflector models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Surface {
    Roof,
    Hood,
    Back,
    Other,
}

/// A one-sided reflecting rectangle `origin + s·u + t·v`, `s, t ∈ [0, 1]`.
/// It reflects only on the side its normal `u × v` points to. With
/// `bounded = false` the whole plane reflects.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Reflector {
    pub surface: Surface,
    pub origin: Point3,
    pub u: Point3,
    pub v: Point3,
    pub bounded: bool,
}

impl Reflector {
    pub fn rectangle(surface: Surface, origin: Point3, u: Point3, v: Point3) -> Self {
        Reflector {
            surface,
            origin,
            u,
            v,
            bounded: true,
        }
    }

    /// Infinite plane through `point`, facing `normal`.
    pub fn plane(point: Point3, normal: Point3) -> Self {
        let n = normal * (1.0 / normal.norm());
        let helper = if n.x.abs() < 0.9 { Point3::new(1.0, 0.0, 0.0) } else { Point3::new(0.0, 1.0, 0.0) };
        let u = cross(n, helper);
        let v = cross(n, u);
        Reflector {
            surface: Surface::Other,
            origin: point,
            u,
            v,
            bounded: false,
        }
    }

    pub fn normal(&self) -> Point3 {
        let n = cross(self.u, self.v);
        n * (1.0 / n.norm())
    }

    fn signed_distance(&self, p: Point3) -> f64 {
        (p - self.origin).dot(self.normal())
    }

    pub fn mirror(&self, p: Point3) -> Point3 {
        p - self.normal() * (2.0 * self.signed_distance(p))
    }

    fn contains(&self, p: Point3) -> bool {
        if !self.bounded {
            return true;
        }
        let d = p - self.origin;
        let s = d.dot(self.u) / self.u.dot(self.u);
        let t = d.dot(self.v) / self.v.dot(self.v);
        (-EPS..=1.0 + EPS).contains(&s) && (-EPS..=1.0 + EPS).contains(&t)
    }

    /// Where segment `a → b` crosses the plane, if it does, strictly inside the segment.
    fn crossing(&self, a: Point3, b: Point3) -> Option<Point3> {
        let da = self.signed_distance(a);
        let db = self.signed_distance(b);
        if da * db >= 0.0 {
            return None;
        }
        let t = da / (da - db);
        Some(a + (b - a) * t)
    }
}

/// Axis-aligned solid box.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Self {
        Aabb { min, max }
    }

    /// Strict interior.
    pub fn contains(&self, p: Point3) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y && p.z > self.min.z && p.z < self.max.z
    }

    /// Whether the segment passes through the box with positive length.
    /// Touching a face (e.g. ending on it) does not block.
    pub fn blocks(&self, a: Point3, b: Point3) -> bool {
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        let d = b - a;
        for (o, dir, lo, hi) in [
            (a.x, d.x, self.min.x, self.max.x),
            (a.y, d.y, self.min.y, self.max.y),
            (a.z, d.z, self.min.z, self.max.z),
        ] {
            if dir.abs() < 1e-15 {
                if o <= lo || o >= hi {
                    return false;
                }
            } else {
                let (mut ta, mut tb) = ((lo - o) / dir, (hi - o) / dir);
                if ta > tb {
                    core::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
            }
        }
        (t1 - t0) * d.norm() > 1e-6
    }
}

/// A scene: reflectors plus occluding solids.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scene {
    pub reflectors: Vec<Reflector>,
    pub solids: Vec<Aabb>,
}

impl Scene {
    pub fn free_space() -> Self {
        Scene::default()
    }

    fn clear(&self, a: Point3, b: Point3) -> bool {
        !self.solids.iter().any(|s| s.blocks(a, b))
    }

    pub fn inside_solid(&self, p: Point3) -> bool {
        self.solids.iter().any(|s| s.contains(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TracerConfig {
    pub carrier_hz: f64,
    /// Loss per bounce.
    pub reflection_loss_db: f64,
    /// Phase added per bounce.
    pub reflection_phase_rad: f64,
    pub max_order: u8,
}

impl Default for TracerConfig {
    fn default() -> Self {
        TracerConfig {
            carrier_hz: 70e9,
            reflection_loss_db: 6.0,
            reflection_phase_rad: PI,
            max_order: 1,
        }
    }
}

impl TracerConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.carrier_hz > 0.0) {
            return Err(ChannelError::InvalidParameter("carrier must be positive"));
        }
        if self.reflection_loss_db < 0.0 || !self.reflection_loss_db.is_finite() {
            return Err(ChannelError::InvalidParameter("reflection loss must be finite and non-negative"));
        }
        if self.max_order > 2 {
            return Err(ChannelError::InvalidParameter("reflection order above 2 is not supported"));
        }
        Ok(())
    }
}

/// One propagation path.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Path {
    pub length_m: f64,
    /// Indices into the scene's reflectors, in bounce order.
    pub via: Vec<usize>,
    pub reflection_loss_db: f64,
    /// Unit vector leaving the transmitter.
    pub departure: Point3,
    /// Unit vector pointing from the receiver back along the arriving ray.
    pub arrival: Point3,
}

impl Path {
    pub fn bounces(&self) -> usize {
        self.via.len()
    }

    /// Complex baseband gain, without antenna gains.
    pub fn amplitude(&self, cfg: &TracerConfig) -> Complex64 {
        let lambda = cfg.wavelength();
        let mag = lambda / (4.0 * PI * self.length_m) * libm::pow(10.0, -self.reflection_loss_db / 20.0);
        let phase = -2.0 * PI * self.length_m / lambda + self.bounces() as f64 * cfg.reflection_phase_rad;
        Complex64::from_polar(mag, phase)
    }
}

fn unit(p: Point3) -> Point3 {
    p * (1.0 / p.norm())
}

/// Traces every direct and reflected path up to `cfg.max_order` bounces.
pub fn trace(scene: &Scene, cfg: &TracerConfig, tx: Point3, rx: Point3) -> Result<Vec<Path>, ChannelError> {
    if scene.inside_solid(rx) {
        return Err(ChannelError::InsideBody(rx));
    }
    if tx.distance(rx) <= 0.0 {
        return Err(ChannelError::CoincidentPositions);
    }
    let mut paths = Vec::new();
    let mut push = |points: &[Point3], via: Vec<usize>| {
        let length_m = points.windows(2).map(|w| w[0].distance(w[1])).sum();
        let n = points.len();
        paths.push(Path {
            length_m,
            reflection_loss_db: via.len() as f64 * cfg.reflection_loss_db,
            via,
            departure: unit(points[1] - points[0]),
            arrival: unit(points[n - 2] - points[n - 1]),
        });
    };
    if scene.clear(tx, rx) {
        push(&[tx, rx], Vec::new());
    }
    let faces = |r: &Reflector, p: Point3| r.signed_distance(p) > EPS;
    if cfg.max_order >= 1 {
        for (i, r) in scene.reflectors.iter().enumerate() {
            if !faces(r, tx) || !faces(r, rx) {
                continue;
            }
            let Some(hit) = r.crossing(r.mirror(tx), rx) else { continue };
            if r.contains(hit) && scene.clear(tx, hit) && scene.clear(hit, rx) {
                push(&[tx, hit, rx], alloc::vec![i]);
            }
        }
    }
    if cfg.max_order >= 2 {
        for (i, a) in scene.reflectors.iter().enumerate() {
            if !faces(a, tx) {
                continue;
            }
            let ia = a.mirror(tx);
            for (j, b) in scene.reflectors.iter().enumerate() {
                if i == j || !faces(b, rx) {
                    continue;
                }
                let ib = b.mirror(ia);
                let Some(h2) = b.crossing(ib, rx) else { continue };
                if !b.contains(h2) || !faces(a, h2) {
                    continue;
                }
                let Some(h1) = a.crossing(ia, h2) else { continue };
                if !a.contains(h1) || !faces(b, h1) {
                    continue;
                }
                if scene.clear(tx, h1) && scene.clear(h1, h2) && scene.clear(h2, rx) {
                    push(&[tx, h1, h2, rx], alloc::vec![i, j]);
                }
            }
        }
    }
    Ok(paths)
}

/// Coherent sum of path amplitudes, each scaled by a linear amplitude
/// weight (antenna gains as `10^(G/20)`).
pub fn coherent_sum(paths: &[Path], cfg: &TracerConfig, weight: impl Fn(&Path) -> f64) -> Complex64 {
    paths.iter().map(|p| p.amplitude(cfg) * weight(p)).sum()
}

/// Effective loss in dB of a set of paths; infinite when nothing arrives.
pub fn pathloss_db(paths: &[Path], cfg: &TracerConfig, weight: impl Fn(&Path) -> f64) -> f64 {
    let power = coherent_sum(paths, cfg, weight).norm_sqr();
    if power > 0.0 {
        -10.0 * libm::log10(power)
    } else {
        f64::INFINITY
    }
}
