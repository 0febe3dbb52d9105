#![allow(dead_code)]

use mocapvar::geometry::{CameraId, CameraModel, Point3, Rotation3, Vector3};
use rand::Rng;

/// Unit vector uniformly distributed on the sphere.
pub fn random_unit<R: Rng>(rng: &mut R) -> Vector3 {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// A camera 4–15 m from `target`, aimed within ~0.5 m of it so the target
/// is generally off the optical axis.
pub fn random_camera<R: Rng>(rng: &mut R, id: u32, target: &Point3, direction: &Vector3) -> CameraModel {
    let distance = rng.random_range(4.0..15.0);
    let center = target + direction * distance;
    let aim = target + random_unit(rng) * rng.random_range(0.0..0.5);
    let view = (aim - center).normalize();
    let up = if view.z.abs() > 0.9 { Vector3::x() } else { Vector3::z() };
    let rotation = Rotation3::look_at(&center, &aim, &up).unwrap();
    CameraModel::new(
        CameraId(id),
        center,
        rotation,
        rng.random_range(0.008..0.02),
        rng.random_range(5e-6..2e-5),
    )
    .unwrap()
}

/// `n` cameras around `target` with pairwise viewing directions at least
/// 15° apart (and not within 15° of opposite).
pub fn random_network<R: Rng>(rng: &mut R, target: &Point3, n: usize) -> Vec<CameraModel> {
    let min_sin = 15f64.to_radians().sin();
    let mut dirs: Vec<Vector3> = Vec::new();
    while dirs.len() < n {
        let d = random_unit(rng);
        if dirs.iter().all(|e| d.cross(e).norm() > min_sin) {
            dirs.push(d);
        }
    }
    dirs.iter()
        .enumerate()
        .map(|(i, d)| random_camera(rng, i as u32, target, d))
        .collect()
}

pub fn random_target<R: Rng>(rng: &mut R) -> Point3 {
    Point3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    )
}
