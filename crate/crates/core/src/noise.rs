//! Pixel-noise models and the deterministic random stream used by the
//! Monte Carlo oracle.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{CameraModel, PixelPoint, Point3};

/// Source of the sensor noise standard deviation for a camera/target pair.
pub trait NoiseModel: Sync {
    fn pixel_std(&self, camera: &CameraModel, point: &Point3) -> f64;
}

/// Uses each camera's own constant `pixel_noise_std`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CameraNoise;

impl NoiseModel for CameraNoise {
    fn pixel_std(&self, camera: &CameraModel, _point: &Point3) -> f64 {
        camera.pixel_noise_std
    }
}

impl<F> NoiseModel for F
where
    F: Fn(&CameraModel, &Point3) -> f64 + Sync,
{
    fn pixel_std(&self, camera: &CameraModel, point: &Point3) -> f64 {
        self(camera, point)
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a stream key from a seed and a path of indices.
pub fn stream_key(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(seed ^ GOLDEN), |key, &i| mix64(key ^ mix64(i.wrapping_add(GOLDEN))))
}

/// Counter-based generator: output `k` is `mix64(key + (k + 1)·φ)`.
///
/// A stream is fully determined by its key, so any (seed, point, trial,
/// camera) tuple can be regenerated independently on any thread.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        CounterRng { key, counter: 0 }
    }

    pub fn keyed(seed: u64, path: &[u64]) -> Self {
        CounterRng::new(stream_key(seed, path))
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Standard normal draw (ziggurat).
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Adds isotropic Gaussian sensor noise with standard deviation `std`.
pub fn perturb<R: RngCore + ?Sized>(pixel: PixelPoint, std: f64, rng: &mut R) -> PixelPoint {
    let du = standard_normal(rng);
    let dv = standard_normal(rng);
    PixelPoint::new(pixel.u + std * du, pixel.v + std * dv)
}
