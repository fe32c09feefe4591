use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::Point3;
use crate::rng;

/// Zero-mean, unit-variance random field with covariance `exp(−r/d)`.
///
/// Built as a sum of `M` random cosines whose wave vectors follow a
/// multivariate Cauchy law of scale `1/d`; that law's characteristic function
/// is exactly `exp(−‖r‖/d)`, so the covariance across seeds is exact for any
/// `M` and the field can be evaluated at arbitrary positions.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianField {
    waves: Vec<[f64; 4]>,
    scale: f64,
}

impl GaussianField {
    pub fn new(correlation_distance_m: f64, components: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed);
        let components = components.max(1);
        let waves = (0..components)
            .map(|_| {
                let w: f64 = rng.sample::<f64, _>(StandardNormal).abs().max(1e-300);
                let s = 1.0 / (w * correlation_distance_m);
                let kx: f64 = rng.sample(StandardNormal);
                let ky: f64 = rng.sample(StandardNormal);
                let kz: f64 = rng.sample(StandardNormal);
                let phase = rng.random::<f64>() * 2.0 * PI;
                [kx * s, ky * s, kz * s, phase]
            })
            .collect();
        GaussianField {
            waves,
            scale: libm::sqrt(2.0 / components as f64),
        }
    }

    pub fn value(&self, p: Point3) -> f64 {
        self.scale
            * self
                .waves
                .iter()
                .map(|[kx, ky, kz, ph]| libm::cos(kx * p.x + ky * p.y + kz * p.z + ph))
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pearson correlation of the field at two points, across seeds.
    fn correlation(d: f64, sep: f64, n: u64) -> f64 {
        let a = Point3::planar(3.0, -2.0);
        let b = a + Point3::planar(sep, 0.0);
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for seed in 0..n {
            let f = GaussianField::new(d, 32, seed);
            let (x, y) = (f.value(a), f.value(b));
            sa += x;
            sb += y;
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        let n = n as f64;
        let cov = sab / n - sa / n * sb / n;
        cov / libm::sqrt((saa / n - (sa / n) * (sa / n)) * (sbb / n - (sb / n) * (sb / n)))
    }

    #[test]
    fn exponential_correlation() {
        for mult in [0.5, 1.0, 2.0] {
            let rho = correlation(10.0, 10.0 * mult, 10_000);
            assert!((rho - libm::exp(-mult)).abs() < 0.05, "{mult}: {rho}");
        }
    }

    #[test]
    fn unit_variance() {
        let p = Point3::new(1.0, 2.0, 0.5);
        let n = 10_000;
        let mean_sq: f64 = (0..n).map(|s| GaussianField::new(10.0, 32, s).value(p)).map(|v| v * v).sum::<f64>() / n as f64;
        assert!((mean_sq - 1.0).abs() < 0.05, "{mean_sq}");
    }
}
