//! Point reconstruction from two or more back-projected rays.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geometry::{self, CameraModel, PixelPoint, Point3, Ray, Vector3};
use crate::linalg::sym_eigen3;

pub const DEFAULT_GLS_ITERATIONS: usize = 2;

const PARALLEL_TOL: f64 = 1e-12;
const SOLVE_RATIO: f64 = 1e-14;

/// Least-squares point closest to all rays (unweighted perpendicular distances).
pub fn triangulate_rays_midpoint(rays: &[Ray]) -> Result<Point3> {
    if rays.len() < 2 {
        return Err(Error::InsufficientObservations(rays.len()));
    }
    if all_parallel(rays) {
        return Err(Error::DegenerateGeometry);
    }
    let mut lhs = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for ray in rays {
        let proj = Matrix3::identity() - ray.direction * ray.direction.transpose();
        lhs += proj;
        rhs += proj * ray.origin.coords;
    }
    solve_symmetric(&lhs, &rhs).ok_or(Error::DegenerateGeometry)
}

pub fn triangulate_midpoint(observations: &[(&CameraModel, PixelPoint)]) -> Result<Point3> {
    let rays: Vec<Ray> = observations
        .iter()
        .map(|(camera, pixel)| geometry::back_project(camera, pixel))
        .collect();
    triangulate_rays_midpoint(&rays)
}

/// Iterated generalized least squares.
///
/// Starts from the midpoint estimate. Each iteration weights every ray by its
/// limit-mode information `PᵀP/s²` (no information along the ray, lateral
/// std `s = σ·depth/f` at the current depth estimate) and solves the
/// weighted normal equations. When any camera is noiseless the weights fall
/// back to `σ = 1` for every camera.
pub fn triangulate_gls(
    observations: &[(&CameraModel, PixelPoint)],
    iterations: usize,
) -> Result<Point3> {
    let mut estimate = triangulate_midpoint(observations)?;
    let unit_sigma = observations.iter().any(|(c, _)| c.pixel_noise_std == 0.0);

    for _ in 0..iterations {
        let mut lhs = Matrix3::zeros();
        let mut rhs = Vector3::zeros();
        for (camera, pixel) in observations {
            let ray = geometry::back_project(camera, pixel);
            let depth = geometry::depth(camera, &estimate);
            if !(depth > 0.0) {
                return Err(Error::DegenerateGeometry);
            }
            let sigma = if unit_sigma { 1.0 } else { camera.pixel_noise_std };
            let s = sigma * depth / camera.focal;
            let axis = camera.axis();
            let along = Matrix3::identity() - ray.direction * axis.transpose() / axis.dot(&ray.direction);
            let info = along.transpose() * along / (s * s);
            let nearest = ray.closest_point(&estimate);
            lhs += info;
            rhs += info * nearest.coords;
        }
        let eig = sym_eigen3(&lhs);
        if !(eig.min() >= crate::covariance::SINGULAR_RATIO * eig.max()) {
            return Err(Error::SingularInformation {
                ratio: eig.min() / eig.max(),
            });
        }
        estimate = Point3::from(eig.compose(|l| 1.0 / l) * rhs);
    }
    Ok(estimate)
}

/// `estimate − true_point`.
pub fn reconstruction_error(true_point: &Point3, estimate: &Point3) -> Vector3 {
    estimate - true_point
}

fn all_parallel(rays: &[Ray]) -> bool {
    rays.iter().enumerate().all(|(i, a)| {
        rays[i + 1..]
            .iter()
            .all(|b| a.direction.dot(&b.direction).abs() >= 1.0 - PARALLEL_TOL)
    })
}

fn solve_symmetric(lhs: &Matrix3<f64>, rhs: &Vector3) -> Option<Point3> {
    let eig = sym_eigen3(lhs);
    if !(eig.min() > SOLVE_RATIO * eig.max()) {
        return None;
    }
    Some(Point3::from(eig.compose(|l| 1.0 / l) * rhs))
}
