//! Reconstruction-error covariance for marker-based multi-camera motion capture.
//!
//! The crate predicts how precisely a 3D marker can be triangulated from a set
//! of pinhole cameras without running a simulation. Each camera contributes a
//! Gaussian that is very wide along its viewing ray and narrow in the plane
//! parallel to its sensor; fusing the per-camera information gives the
//! covariance of the reconstructed point. A seeded Monte Carlo triangulation
//! oracle checks the closed form, and the scenario layer builds camera rings,
//! voxel error maps and camera-pair rankings on top of both.
//!
//! Module map:
//! - [`geometry`]: pinhole camera, projection and back-projection.
//! - [`covariance`]: per-camera covariance and information, fusion, 1σ slices.
//! - [`triangulation`]: midpoint and iterated GLS point reconstruction.
//! - [`noise`]: pixel-noise models and the counter-based random stream.
//! - [`montecarlo`]: sample covariance of the reconstruction error.
//! - [`scenario`]: ring setups, experiments, error maps, camera selection.

// Negated comparisons double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covariance;
mod error;
pub mod geometry;
pub mod linalg;
pub mod montecarlo;
pub mod noise;
pub mod scenario;
pub mod triangulation;

pub use error::{Error, Result};

pub use covariance::{
    fuse, overall_std, sigma_ellipse_slice, single_view_covariance, single_view_information,
    Covariance3, EllipseSection, Information3, MPolicy, MeasurementGaussian,
};
pub use geometry::{CameraId, CameraModel, PixelPoint, Point3, Ray, Rotation3, Vector3};
pub use montecarlo::{mc_covariance, percent_std_difference, Estimator, McConfig, McResult};
pub use scenario::{ErrorMap, PairRanking, Room, Scenario};
pub use triangulation::{reconstruction_error, triangulate_gls, triangulate_midpoint};
