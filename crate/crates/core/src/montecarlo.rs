//! Monte Carlo oracle for the reconstruction-error covariance.
//!
//! Every trial perturbs each camera's noiseless projection with Gaussian
//! sensor noise, triangulates, and records the reconstruction error. The
//! second moment of the errors is accumulated about zero with denominator
//! `N − 1`.
//!
//! Random draws for camera `c` in trial `k` of stream `p` come from a counter
//! stream keyed by `(seed, p, k, c)`, and the reduction walks trials in index
//! order, so results are bit-identical for any number of worker threads.

use rayon::prelude::*;

use crate::covariance::Covariance3;
use crate::error::{Error, Result};
use crate::geometry::{self, CameraModel, PixelPoint, Point3, Vector3};
use crate::noise::{self, CounterRng};
use crate::triangulation::{self, DEFAULT_GLS_ITERATIONS};

use nalgebra::Matrix3;
use rand::RngCore;

/// Fraction of degenerate trials above which a run is rejected.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Gls { iterations: usize },
    Midpoint,
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::Gls {
            iterations: DEFAULT_GLS_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub trials: usize,
    pub seed: u64,
    pub estimator: Estimator,
}

impl McConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        McConfig {
            trials,
            seed,
            estimator: Estimator::default(),
        }
    }

    pub fn with_estimator(self, estimator: Estimator) -> Self {
        McConfig { estimator, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(Error::InvalidConfig(format!(
                "Monte Carlo needs at least 2 trials, got {}",
                self.trials
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    /// `Σ e·eᵀ / (n − 1)` over the valid trials.
    pub sample_cov: Covariance3,
    pub sample_mean_error: Vector3,
    pub trials_used: usize,
    /// Trials dropped because the noisy rays could not be triangulated.
    pub excluded: usize,
}

impl McResult {
    /// Sample covariance about the sample mean instead of about zero.
    pub fn mean_centered_cov(&self) -> Covariance3 {
        let n = self.trials_used as f64;
        let mu = self.sample_mean_error;
        Covariance3::from_symmetric(self.sample_cov.matrix() - mu * mu.transpose() * (n / (n - 1.0)))
    }

    pub fn overall_std(&self) -> f64 {
        self.sample_cov.overall_std()
    }
}

/// Noiseless projection plus isotropic Gaussian noise with the camera's σ.
pub fn sample_measurement<R: RngCore + ?Sized>(
    camera: &CameraModel,
    point: &Point3,
    rng: &mut R,
) -> Result<PixelPoint> {
    let clean = geometry::project(camera, point)?;
    Ok(noise::perturb(clean, camera.pixel_noise_std, rng))
}

pub fn mc_covariance(cameras: &[&CameraModel], point: &Point3, config: &McConfig) -> Result<McResult> {
    mc_covariance_stream(cameras, point, 0, config)
}

/// [`mc_covariance`] on an explicit random stream, so that experiments over
/// many points draw independent noise for each.
pub fn mc_covariance_stream(
    cameras: &[&CameraModel],
    point: &Point3,
    stream: u64,
    config: &McConfig,
) -> Result<McResult> {
    let errors = trial_errors(cameras, point, stream, config)?;
    summarize(&errors)
}

/// Per-trial reconstruction errors in trial order; `None` marks a degenerate draw.
pub fn trial_errors(
    cameras: &[&CameraModel],
    point: &Point3,
    stream: u64,
    config: &McConfig,
) -> Result<Vec<Option<Vector3>>> {
    config.validate()?;
    if cameras.len() < 2 {
        return Err(Error::InsufficientObservations(cameras.len()));
    }
    let clean: Vec<PixelPoint> = cameras
        .iter()
        .map(|c| geometry::project(c, point))
        .collect::<Result<_>>()?;

    (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let observations: Vec<(&CameraModel, PixelPoint)> = cameras
                .iter()
                .zip(&clean)
                .map(|(camera, pixel)| {
                    let mut rng = CounterRng::keyed(
                        config.seed,
                        &[stream, trial as u64, u64::from(camera.id.0)],
                    );
                    (*camera, noise::perturb(*pixel, camera.pixel_noise_std, &mut rng))
                })
                .collect();
            let estimate = match config.estimator {
                Estimator::Gls { iterations } => triangulation::triangulate_gls(&observations, iterations),
                Estimator::Midpoint => triangulation::triangulate_midpoint(&observations),
            };
            match estimate {
                Ok(p) => Ok(Some(triangulation::reconstruction_error(point, &p))),
                Err(Error::DegenerateGeometry | Error::SingularInformation { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Reduces trial errors in index order with compensated summation.
pub fn summarize(errors: &[Option<Vector3>]) -> Result<McResult> {
    let trials = errors.len();
    let excluded = errors.iter().filter(|e| e.is_none()).count();
    if excluded as f64 > MAX_EXCLUDED_FRACTION * trials as f64 {
        return Err(Error::TooFewValidTrials { excluded, trials });
    }
    let used = trials - excluded;
    if used < 2 {
        return Err(Error::TooFewValidTrials { excluded, trials });
    }

    let mut first = [Neumaier::default(); 3];
    let mut second = [Neumaier::default(); 6];
    const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    for e in errors.iter().flatten() {
        for i in 0..3 {
            first[i].add(e[i]);
        }
        for (acc, &(i, j)) in second.iter_mut().zip(&PAIRS) {
            acc.add(e[i] * e[j]);
        }
    }

    let denom = (used - 1) as f64;
    let mut cov = Matrix3::zeros();
    for (acc, &(i, j)) in second.iter().zip(&PAIRS) {
        cov[(i, j)] = acc.total() / denom;
        cov[(j, i)] = cov[(i, j)];
    }
    let mean = Vector3::new(first[0].total(), first[1].total(), first[2].total()) / used as f64;
    Ok(McResult {
        sample_cov: Covariance3::from_symmetric(cov),
        sample_mean_error: mean,
        trials_used: used,
        excluded,
    })
}

/// Below this standard deviation (m) a covariance counts as exactly zero.
pub const ZERO_STD: f64 = 1e-12;

/// `100·|√tr Σ̂ − √tr Σ| / √tr Σ`.
///
/// When the theory is zero the result is 0 if the sample is zero as well
/// (up to [`ZERO_STD`]) and [`Error::ZeroTheory`] otherwise.
pub fn percent_std_difference(mc: &McResult, theory: &Covariance3) -> Result<f64> {
    percent_std_difference_cov(&mc.sample_cov, theory)
}

pub fn percent_std_difference_cov(sample: &Covariance3, theory: &Covariance3) -> Result<f64> {
    let sample_std = sample.overall_std();
    let theory_std = theory.overall_std();
    if theory_std <= ZERO_STD {
        return if sample_std <= ZERO_STD {
            Ok(0.0)
        } else {
            Err(Error::ZeroTheory)
        };
    }
    Ok(100.0 * (sample_std - theory_std).abs() / theory_std)
}

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}
