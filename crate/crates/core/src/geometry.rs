//! Ideal pinhole camera: projection, back-projection, viewing directions and
//! depth along the optical axis.
//!
//! Camera frame convention: x to the right, y down, z along the optical axis.
//! Sensor coordinates are metric (meters on the sensor), centered on the
//! principal point. There is no lens distortion.

use std::fmt;

use nalgebra::{Matrix3, Matrix3x2};

use crate::error::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;

const ORTHONORMAL_TOL: f64 = 1e-12;
const COINCIDENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CameraId(pub u32);

impl fmt::Display for CameraId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Camera orientation. Columns are the camera right axis, down axis and
/// optical axis expressed in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn identity() -> Self {
        Rotation3(Matrix3::identity())
    }

    /// Validates that `m` is orthonormal with determinant +1.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidRotation("non-finite entry".into()));
        }
        let gram_err = (m.transpose() * m - Matrix3::identity()).abs().max();
        if gram_err > ORTHONORMAL_TOL {
            return Err(Error::InvalidRotation(format!(
                "RᵀR deviates from identity by {gram_err:e}"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidRotation(format!("determinant is {det}")));
        }
        Ok(Rotation3(m))
    }

    /// Orientation of a camera at `center` looking at `target`, with the
    /// camera down axis as close as possible to `-up`.
    pub fn look_at(center: &Point3, target: &Point3, up: &Vector3) -> Result<Self> {
        let axis = target - center;
        if axis.norm() <= COINCIDENT_TOL {
            return Err(Error::DegenerateDirection);
        }
        let axis = axis.normalize();
        let down = -up + axis * up.dot(&axis);
        if down.norm() <= 1e-9 * up.norm().max(1.0) {
            return Err(Error::InvalidRotation(
                "up vector is parallel to the viewing axis".into(),
            ));
        }
        let down = down.normalize();
        let right = down.cross(&axis);
        Rotation3::from_matrix(Matrix3::from_columns(&[right, down, axis]))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn right(&self) -> Vector3 {
        self.0.column(0).into_owned()
    }

    pub fn down(&self) -> Vector3 {
        self.0.column(1).into_owned()
    }

    pub fn axis(&self) -> Vector3 {
        self.0.column(2).into_owned()
    }
}

/// Sensor-plane coordinates in meters, origin at the principal point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        PixelPoint { u, v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point3,
    /// Unit length.
    pub direction: Vector3,
}

impl Ray {
    pub fn new(origin: Point3, direction: Vector3) -> Self {
        Ray {
            origin,
            direction: direction.normalize(),
        }
    }

    pub fn at(&self, t: f64) -> Point3 {
        self.origin + self.direction * t
    }

    /// Point on the (infinite) line closest to `p`.
    pub fn closest_point(&self, p: &Point3) -> Point3 {
        self.at((p - self.origin).dot(&self.direction))
    }

    pub fn distance_to(&self, p: &Point3) -> f64 {
        (p - self.closest_point(p)).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub id: CameraId,
    pub center: Point3,
    pub rotation: Rotation3,
    /// Focal length in meters.
    pub focal: f64,
    /// Standard deviation of the isotropic sensor noise, meters on the sensor.
    /// Zero means a noiseless camera.
    pub pixel_noise_std: f64,
}

impl CameraModel {
    pub fn new(
        id: CameraId,
        center: Point3,
        rotation: Rotation3,
        focal: f64,
        pixel_noise_std: f64,
    ) -> Result<Self> {
        if center.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCamera(format!("camera {id}: non-finite center")));
        }
        if !(focal.is_finite() && focal > 0.0) {
            return Err(Error::InvalidCamera(format!(
                "camera {id}: focal length must be positive, got {focal}"
            )));
        }
        if !(pixel_noise_std.is_finite() && pixel_noise_std >= 0.0) {
            return Err(Error::InvalidCamera(format!(
                "camera {id}: pixel noise std must be non-negative, got {pixel_noise_std}"
            )));
        }
        Ok(CameraModel {
            id,
            center,
            rotation,
            focal,
            pixel_noise_std,
        })
    }

    pub fn axis(&self) -> Vector3 {
        self.rotation.axis()
    }

    /// World point expressed in the camera frame.
    pub fn to_camera_frame(&self, point: &Point3) -> Vector3 {
        self.rotation.matrix().transpose() * (point - self.center)
    }
}

/// Signed distance from the optical center to the plane through `point`
/// parallel to the image plane.
pub fn depth(camera: &CameraModel, point: &Point3) -> f64 {
    (point - camera.center).dot(&camera.axis())
}

pub fn project(camera: &CameraModel, point: &Point3) -> Result<PixelPoint> {
    let pc = camera.to_camera_frame(point);
    if !(pc.z > 0.0) {
        return Err(Error::BehindCamera { depth: pc.z });
    }
    Ok(PixelPoint::new(
        camera.focal * pc.x / pc.z,
        camera.focal * pc.y / pc.z,
    ))
}

pub fn back_project(camera: &CameraModel, pixel: &PixelPoint) -> Ray {
    let sensor = Vector3::new(pixel.u, pixel.v, camera.focal);
    Ray::new(camera.center, camera.rotation.matrix() * sensor)
}

/// Unit vector from the optical center towards `point`.
pub fn viewing_direction(camera: &CameraModel, point: &Point3) -> Result<Vector3> {
    let d = point - camera.center;
    let n = d.norm();
    if n <= COINCIDENT_TOL {
        return Err(Error::DegenerateDirection);
    }
    Ok(d / n)
}

/// Orthonormal basis of the plane parallel to the image plane: the camera
/// right and down axes.
pub fn image_plane_basis(camera: &CameraModel) -> Matrix3x2<f64> {
    Matrix3x2::from_columns(&[camera.rotation.right(), camera.rotation.down()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn identity_camera(focal: f64) -> CameraModel {
        CameraModel::new(CameraId(0), Point3::origin(), Rotation3::identity(), focal, 1e-5).unwrap()
    }

    fn rot_y(angle: f64) -> Rotation3 {
        let (s, c) = angle.sin_cos();
        Rotation3::from_matrix(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)).unwrap()
    }

    #[test]
    fn projection_examples() {
        let cam = identity_camera(0.01);
        assert_eq!(project(&cam, &Point3::new(0.0, 0.0, 5.0)).unwrap(), PixelPoint::new(0.0, 0.0));
        let p = project(&cam, &Point3::new(0.5, 0.0, 5.0)).unwrap();
        assert!((p.u - 0.001).abs() < 1e-15 && p.v == 0.0);
        assert!(matches!(
            project(&cam, &Point3::new(0.0, 0.0, -1.0)),
            Err(Error::BehindCamera { .. })
        ));
        assert!(matches!(
            project(&cam, &Point3::new(1.0, 0.0, 0.0)),
            Err(Error::BehindCamera { .. })
        ));
    }

    #[test]
    fn back_projection_examples() {
        let cam = identity_camera(0.01);
        let r = back_project(&cam, &PixelPoint::new(0.0, 0.0));
        assert_eq!(r.origin, Point3::origin());
        assert_eq!(r.direction, Vector3::z());
        let r = back_project(&cam, &PixelPoint::new(0.01, 0.0));
        let expected = Vector3::new(1.0, 0.0, 1.0) / 2f64.sqrt();
        assert!((r.direction - expected).norm() < 1e-15);
    }

    #[test]
    fn depth_examples() {
        let cam = identity_camera(0.01);
        assert_eq!(depth(&cam, &Point3::new(0.0, 0.0, 5.0)), 5.0);
        assert_eq!(depth(&cam, &Point3::new(3.0, 4.0, 5.0)), 5.0);
        let rotated =
            CameraModel::new(CameraId(1), Point3::origin(), rot_y(FRAC_PI_2), 0.01, 1e-5).unwrap();
        assert!((depth(&rotated, &Point3::new(2.0, 0.0, 0.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn viewing_direction_examples() {
        let cam = identity_camera(0.01);
        assert_eq!(viewing_direction(&cam, &Point3::new(0.0, 0.0, 7.0)).unwrap(), Vector3::z());
        let off = CameraModel { center: Point3::new(10.0, 0.0, 0.0), ..cam.clone() };
        assert_eq!(viewing_direction(&off, &Point3::origin()).unwrap(), -Vector3::x());
        assert_eq!(
            viewing_direction(&off, &Point3::new(10.0, 0.0, 0.0)),
            Err(Error::DegenerateDirection)
        );
    }

    #[test]
    fn image_plane_basis_examples() {
        let basis = image_plane_basis(&identity_camera(0.01));
        assert_eq!(basis.column(0).into_owned(), Vector3::x());
        assert_eq!(basis.column(1).into_owned(), Vector3::y());

        let rotated =
            CameraModel::new(CameraId(1), Point3::origin(), rot_y(FRAC_PI_2), 0.01, 1e-5).unwrap();
        let basis = image_plane_basis(&rotated);
        assert!((basis.column(0) - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
        assert!((basis.column(1) - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-15);

        // Gram-Schmidt of the world axes against the optical axis spans the same plane.
        let axis = rotated.axis();
        let mut complement = Vec::new();
        for e in [Vector3::x(), Vector3::y(), Vector3::z()] {
            let mut v = e - axis * e.dot(&axis);
            for c in &complement {
                let c: &Vector3 = c;
                v -= c * c.dot(&v);
            }
            if v.norm() > 1e-6 {
                complement.push(v.normalize());
            }
        }
        assert_eq!(complement.len(), 2);
        let proj_gs = complement[0] * complement[0].transpose() + complement[1] * complement[1].transpose();
        assert!((basis * basis.transpose() - proj_gs).norm() < 1e-12);
    }

    #[test]
    fn rotation_rejects_bad_matrices() {
        assert!(Rotation3::from_matrix(Matrix3::identity() * 2.0).is_err());
        let reflection = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Rotation3::from_matrix(reflection).is_err());
        assert!(Rotation3::from_matrix(Matrix3::from_element(f64::NAN)).is_err());
        assert!(Rotation3::from_matrix(Matrix3::new(1.0, 1e-9, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn look_at_ring_camera() {
        let r = Rotation3::look_at(&Point3::new(10.0, 0.0, 0.0), &Point3::origin(), &Vector3::z()).unwrap();
        assert!((r.axis() - -Vector3::x()).norm() < 1e-15);
        assert!((r.down() - -Vector3::z()).norm() < 1e-15);
        assert!((r.right() - Vector3::y()).norm() < 1e-15);
        assert!(Rotation3::look_at(&Point3::origin(), &Point3::new(0.0, 0.0, 3.0), &Vector3::z()).is_err());
    }

    #[test]
    fn camera_validation() {
        let r = Rotation3::identity();
        assert!(CameraModel::new(CameraId(0), Point3::origin(), r, 0.0, 1e-5).is_err());
        assert!(CameraModel::new(CameraId(0), Point3::origin(), r, 0.01, -1.0).is_err());
        assert!(CameraModel::new(CameraId(0), Point3::new(f64::NAN, 0.0, 0.0), r, 0.01, 1.0).is_err());
        assert!(CameraModel::new(CameraId(0), Point3::origin(), r, 0.01, 0.0).is_ok());
    }
}
