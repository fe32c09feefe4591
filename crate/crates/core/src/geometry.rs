use core::ops::{Add, Mul, Neg, Sub};

/// A point or displacement in meters. `x` east, `y` north, `z` up.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub const fn planar(x: f64, y: f64) -> Self {
        Point3 { x, y, z: 0.0 }
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn distance(self, o: Point3) -> f64 {
        (self - o).norm()
    }

    /// Azimuth of this vector in degrees, counter-clockwise from +x, in (−180, 180].
    pub fn azimuth_deg(self) -> f64 {
        libm::atan2(self.y, self.x).to_degrees()
    }

    /// Elevation above the horizontal plane, degrees.
    pub fn elevation_deg(self) -> f64 {
        let h = libm::hypot(self.x, self.y);
        libm::atan2(self.z, h).to_degrees()
    }

    /// Point at `r` meters along azimuth `az_deg` in the horizontal plane.
    pub fn polar(r: f64, az_deg: f64) -> Point3 {
        let a = az_deg.to_radians();
        Point3::planar(r * libm::cos(a), r * libm::sin(a))
    }

    /// Bit-exact fingerprint for seeding per-position randomness.
    pub fn key(self) -> [u64; 3] {
        // Normalize -0.0 so mirrored evaluations hash identically.
        let f = |v: f64| if v == 0.0 { 0u64 } else { v.to_bits() };
        [f(self.x), f(self.y), f(self.z)]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Wraps an angle in degrees into (−180, 180].
pub fn wrap_deg(a: f64) -> f64 {
    let mut w = libm::fmod(a, 360.0);
    if w <= -180.0 {
        w += 360.0;
    } else if w > 180.0 {
        w -= 360.0;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert!((Point3::planar(0.0, 1.0).azimuth_deg() - 90.0).abs() < 1e-12);
        assert!((Point3::new(1.0, 0.0, 1.0).elevation_deg() - 45.0).abs() < 1e-12);
        assert_eq!(wrap_deg(190.0), -170.0);
        assert_eq!(wrap_deg(-180.0), 180.0);
        assert_eq!(wrap_deg(720.0), 0.0);
        let p = Point3::polar(2.0, 90.0);
        assert!(p.x.abs() < 1e-12 && (p.y - 2.0).abs() < 1e-12);
    }
}
