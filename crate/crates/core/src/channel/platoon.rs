//! Two-car platoon: box-shaped cars with reflecting roof, hood and back,
//! directional transmitters on the front car, omni receivers on the car
//! behind it.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::raytrace::{self, Aabb, Path, Reflector, Scene, Surface, TracerConfig};
use super::{ChannelError, LinkBudget};
use crate::antenna::{array_gain, ArrayGeometry, QuasiOmni};
use crate::geometry::{wrap_deg, Point3};
use crate::rfmath::Db;

/// Car body: a cabin box with a lower hood box in front. Cars face +x and
/// are centered on y = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CarShape {
    pub length_m: f64,
    pub width_m: f64,
    pub roof_height_m: f64,
    pub hood_length_m: f64,
    pub hood_height_m: f64,
}

impl Default for CarShape {
    fn default() -> Self {
        CarShape {
            length_m: 4.5,
            width_m: 1.8,
            roof_height_m: 1.5,
            hood_length_m: 1.0,
            hood_height_m: 1.0,
        }
    }
}

/// One transmit/receive pair. The transmitter sits on the front car's roof
/// `tx_setback_m` ahead of its rear edge; the receiver sits on the back
/// car's roof `rx_setback_m` behind the windshield line.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LinkMount {
    /// Height above the roof.
    pub height_m: f64,
    pub lateral_m: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_setback"))]
    pub tx_setback_m: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_setback"))]
    pub rx_setback_m: f64,
    /// SNR the receiver should see after calibration; `None` leaves the raw trace.
    #[cfg_attr(feature = "serde", serde(default))]
    pub target_snr_db: Option<f64>,
}

#[cfg(feature = "serde")]
fn default_setback() -> f64 {
    0.3
}

impl LinkMount {
    pub fn new(height_m: f64, lateral_m: f64, target_snr_db: Option<f64>) -> Self {
        LinkMount {
            height_m,
            lateral_m,
            tx_setback_m: 0.3,
            rx_setback_m: 0.3,
            target_snr_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PlatoonGeometry {
    pub car: CarShape,
    pub gap_m: f64,
    pub links: Vec<LinkMount>,
}

impl Default for PlatoonGeometry {
    fn default() -> Self {
        PlatoonGeometry {
            car: CarShape::default(),
            gap_m: 5.0,
            links: alloc::vec![
                LinkMount::new(0.5, 0.9, Some(50.0)),
                LinkMount::new(1.0, -0.9, Some(49.0)),
            ],
        }
    }
}

impl PlatoonGeometry {
    /// Rear x of the back car (index 0) and front car (index 1).
    pub fn rear_x(&self, car: usize) -> f64 {
        car as f64 * (self.car.length_m + self.gap_m) - self.car.length_m
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let c = &self.car;
        if !(self.gap_m > 0.0) {
            return Err(ChannelError::InvalidParameter("inter-vehicle gap must be positive"));
        }
        if !(c.length_m > 0.0 && c.width_m > 0.0 && c.roof_height_m > 0.0) {
            return Err(ChannelError::InvalidParameter("car dimensions must be positive"));
        }
        if !(c.hood_length_m >= 0.0 && c.hood_length_m < c.length_m && c.hood_height_m > 0.0 && c.hood_height_m <= c.roof_height_m) {
            return Err(ChannelError::InvalidParameter("hood must be shorter and lower than the car"));
        }
        let cabin = c.length_m - c.hood_length_m;
        for l in &self.links {
            let on_roof = l.height_m >= 0.0
                && l.lateral_m.abs() <= c.width_m / 2.0
                && (0.0..=cabin).contains(&l.tx_setback_m)
                && (0.0..=cabin).contains(&l.rx_setback_m);
            if !on_roof {
                return Err(ChannelError::InvalidParameter("antenna mount is off the roof"));
            }
        }
        Ok(())
    }

    pub fn tx_position(&self, link: &LinkMount) -> Point3 {
        Point3::new(
            self.rear_x(1) + link.tx_setback_m,
            link.lateral_m,
            self.car.roof_height_m + link.height_m,
        )
    }

    pub fn rx_position(&self, link: &LinkMount) -> Point3 {
        let windshield = self.rear_x(0) + self.car.length_m - self.car.hood_length_m;
        Point3::new(
            windshield - link.rx_setback_m,
            link.lateral_m,
            self.car.roof_height_m + link.height_m,
        )
    }

    /// Solids and reflectors of both cars.
    pub fn scene(&self) -> Scene {
        let c = &self.car;
        let hw = c.width_m / 2.0;
        let mut scene = Scene::default();
        for car in 0..2 {
            let rear = self.rear_x(car);
            let windshield = rear + c.length_m - c.hood_length_m;
            let front = rear + c.length_m;
            scene.solids.push(Aabb::new(Point3::new(rear, -hw, 0.0), Point3::new(windshield, hw, c.roof_height_m)));
            if c.hood_length_m > 0.0 {
                scene.solids.push(Aabb::new(Point3::new(windshield, -hw, 0.0), Point3::new(front, hw, c.hood_height_m)));
                scene.reflectors.push(Reflector::rectangle(
                    Surface::Hood,
                    Point3::new(windshield, -hw, c.hood_height_m),
                    Point3::new(c.hood_length_m, 0.0, 0.0),
                    Point3::new(0.0, c.width_m, 0.0),
                ));
            }
            scene.reflectors.push(Reflector::rectangle(
                Surface::Roof,
                Point3::new(rear, -hw, c.roof_height_m),
                Point3::new(windshield - rear, 0.0, 0.0),
                Point3::new(0.0, c.width_m, 0.0),
            ));
            // u × v points along -x, out of the car.
            scene.reflectors.push(Reflector::rectangle(
                Surface::Back,
                Point3::new(rear, -hw, 0.0),
                Point3::new(0.0, 0.0, c.roof_height_m),
                Point3::new(0.0, c.width_m, 0.0),
            ));
        }
        scene
    }
}

/// Paths from a transmitter to `rx` among the platoon's cars.
pub fn trace_platoon(
    geometry: &PlatoonGeometry,
    tracer: &TracerConfig,
    tx: Point3,
    rx: Point3,
) -> Result<Vec<Path>, ChannelError> {
    raytrace::trace(&geometry.scene(), tracer, tx, rx)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PlatoonConfig {
    pub geometry: PlatoonGeometry,
    pub tracer: TracerConfig,
    pub budget: LinkBudget,
    pub array: ArrayGeometry,
    pub rx_gain_dbi: f64,
}

impl Default for PlatoonConfig {
    fn default() -> Self {
        PlatoonConfig {
            geometry: PlatoonGeometry::default(),
            tracer: TracerConfig::default(),
            budget: LinkBudget::platoon(),
            array: ArrayGeometry {
                carrier_hz: 70e9,
                ..ArrayGeometry::default()
            },
            rx_gain_dbi: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LinkState {
    tx: Point3,
    rx: Point3,
    boresight_az_deg: f64,
    weights: Vec<Complex64>,
    calibration_db: f64,
}

/// Calibrated, deterministic SNR field of every platoon link.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonChannel {
    config: PlatoonConfig,
    scene: Scene,
    links: Vec<LinkState>,
}

impl PlatoonChannel {
    pub fn new(config: PlatoonConfig) -> Result<Self, ChannelError> {
        config.geometry.validate()?;
        config.tracer.validate()?;
        config.budget.validate()?;
        config
            .array
            .validate()
            .map_err(|_| ChannelError::InvalidParameter("invalid transmit array"))?;
        let scene = config.geometry.scene();
        let mut channel = PlatoonChannel {
            scene,
            links: Vec::new(),
            config,
        };
        for mount in channel.config.geometry.links.clone() {
            let tx = channel.config.geometry.tx_position(&mount);
            let rx = channel.config.geometry.rx_position(&mount);
            let toward = rx - tx;
            let boresight_az_deg = toward.azimuth_deg();
            let weights = channel.config.array.steering_weights(0.0, toward.elevation_deg());
            let mut state = LinkState {
                tx,
                rx,
                boresight_az_deg,
                weights,
                calibration_db: 0.0,
            };
            if let Some(target) = mount.target_snr_db {
                let raw = channel.raw_snr(&state, rx)?;
                if !raw.is_finite() {
                    return Err(ChannelError::InvalidParameter("link receiver gets no path to calibrate on"));
                }
                state.calibration_db = target - raw;
            }
            channel.links.push(state);
        }
        Ok(channel)
    }

    pub fn config(&self) -> &PlatoonConfig {
        &self.config
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    fn link(&self, link: usize) -> Result<&LinkState, ChannelError> {
        self.links.get(link).ok_or(ChannelError::UnknownTransmitter {
            index: link,
            count: self.links.len(),
        })
    }

    pub fn tx_position(&self, link: usize) -> Result<Point3, ChannelError> {
        Ok(self.link(link)?.tx)
    }

    pub fn rx_position(&self, link: usize) -> Result<Point3, ChannelError> {
        Ok(self.link(link)?.rx)
    }

    pub fn calibration_db(&self, link: usize) -> Result<f64, ChannelError> {
        Ok(self.link(link)?.calibration_db)
    }

    pub fn paths(&self, link: usize, pos: Point3) -> Result<Vec<Path>, ChannelError> {
        raytrace::trace(&self.scene, &self.config.tracer, self.link(link)?.tx, pos)
    }

    fn raw_snr(&self, state: &LinkState, pos: Point3) -> Result<f64, ChannelError> {
        let paths = raytrace::trace(&self.scene, &self.config.tracer, state.tx, pos)?;
        let geom = &self.config.array;
        let loss = raytrace::pathloss_db(&paths, &self.config.tracer, |p| {
            let local = wrap_deg(p.departure.azimuth_deg() - state.boresight_az_deg);
            let g = array_gain(geom, &state.weights, local, p.departure.elevation_deg()).expect("weights match the array");
            libm::pow(10.0, g.0 / 20.0)
        });
        let b = &self.config.budget;
        let rx_gain = QuasiOmni::new(self.config.rx_gain_dbi).gain(0.0, 0.0);
        Ok(b.tx_power.0 + rx_gain.0 - loss - b.noise_floor.0)
    }

    /// Calibrated SNR of `link`'s transmitter at `pos`; `-inf` when every
    /// path is blocked.
    pub fn snr_at(&self, link: usize, pos: Point3) -> Result<Db, ChannelError> {
        let state = self.link(link)?;
        Ok(Db(self.raw_snr(state, pos)? + state.calibration_db))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_hits_targets() {
        let ch = PlatoonChannel::new(PlatoonConfig::default()).unwrap();
        let s1 = ch.snr_at(0, ch.rx_position(0).unwrap()).unwrap();
        let s2 = ch.snr_at(1, ch.rx_position(1).unwrap()).unwrap();
        assert!((s1.0 - 50.0).abs() < 1e-9 && (s2.0 - 49.0).abs() < 1e-9);
    }

    #[test]
    fn geometry_defaults_are_valid() {
        let g = PlatoonGeometry::default();
        g.validate().unwrap();
        let scene = g.scene();
        assert_eq!(scene.reflectors.len(), 6);
        assert_eq!(scene.solids.len(), 4);
        for r in &scene.reflectors {
            let n = r.normal();
            match r.surface {
                Surface::Roof | Surface::Hood => assert!((n.z - 1.0).abs() < 1e-12),
                Surface::Back => assert!((n.x + 1.0).abs() < 1e-12),
                Surface::Other => unreachable!(),
            }
        }
        let l = &g.links[0];
        assert!(g.tx_position(l).z > g.car.roof_height_m && g.rx_position(l).x < g.tx_position(l).x);
    }

    #[test]
    fn bad_geometry_rejected() {
        let mut g = PlatoonGeometry::default();
        g.gap_m = 0.0;
        assert!(g.validate().is_err());
        let mut g = PlatoonGeometry::default();
        g.links[0].lateral_m = 2.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn inside_body_is_an_error() {
        let ch = PlatoonChannel::new(PlatoonConfig::default()).unwrap();
        assert!(matches!(ch.snr_at(0, Point3::new(-3.0, 0.0, 0.5)), Err(ChannelError::InsideBody(_))));
    }

    #[test]
    fn first_order_ray_count_bound() {
        let g = PlatoonGeometry::default();
        let cfg = TracerConfig::default();
        let tx = g.tx_position(&g.links[0]);
        for i in 0..20 {
            for k in 0..8 {
                let rx = Point3::new(-6.0 + i as f64 * 0.85, -2.5 + k as f64 * 0.7, 2.3);
                let paths = trace_platoon(&g, &cfg, tx, rx).unwrap();
                assert!(paths.len() <= 1 + g.scene().reflectors.len());
            }
        }
    }
}
