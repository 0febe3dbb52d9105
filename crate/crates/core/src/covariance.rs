//! Per-camera Gaussian model of a marker position and its minimum-variance
//! fusion across cameras.
//!
//! A camera observing a target contributes
//!
//! ```text
//! Σ = M·ψψᵀ + s²·ΨΨᵀ,    s = σ·f′/f
//! ```
//!
//! where ψ is the unit direction from the optical center to the target, Ψ is
//! the camera right/down basis, f′ the target depth along the optical axis and
//! M a very large variance along the ray. Independent cameras are fused by
//! summing informations and inverting the sum.
//!
//! With `B = [Ψ | ψ]` the covariance factors as `B·diag(s², s², M)·Bᵀ`, so its
//! inverse is `B⁻ᵀ·diag(1/s², 1/s², 1/M)·B⁻¹`. `B` is well conditioned for any
//! target in front of the camera, which keeps the inverse accurate even when
//! `M/s²` is far beyond what a generic 3×3 inversion can handle. Letting
//! `M → ∞` gives the rank-2 limit information `PᵀP/s²`, where
//! `P = I − ψ·aᵀ/(aᵀψ)` projects along the ray onto the image-parallel plane
//! (`a` is the optical axis). On the optical axis this reduces to `ΨΨᵀ/s²`.

use nalgebra::{Matrix3, Matrix3x2};

use crate::error::{Error, Result};
use crate::geometry::{self, CameraId, CameraModel, Point3, Vector3};
use crate::linalg::{self, sym_eigen2, sym_eigen3};
use crate::noise::{CameraNoise, NoiseModel};

/// Largest accepted squared condition number of the `[Ψ | ψ]` factor when
/// inverting a finite-M covariance.
pub const MAX_CONDITION: f64 = 1e15;
/// Fused information is singular when its smallest eigenvalue falls below this
/// fraction of the largest.
pub const SINGULAR_RATIO: f64 = 1e-12;
/// Smallest in-plane variance (m²) accepted by [`sigma_ellipse_slice`].
pub const MIN_SECTION_VARIANCE: f64 = 1e-18;

const ON_AXIS_TOL: f64 = 1e-12;

/// How the variance along the viewing ray is modeled.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MPolicy {
    /// Explicit ray variance `M`, in m².
    Finite(f64),
    /// The `M → ∞` limit; only the information form exists.
    #[default]
    Limit,
}

impl MPolicy {
    /// `M = (10³·L·m)²` for a room whose largest side is `room_max_side` and a
    /// network of `camera_count` cameras.
    pub fn default_finite(room_max_side: f64, camera_count: usize) -> Self {
        MPolicy::Finite((1e3 * room_max_side * camera_count as f64).powi(2))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MPolicy::Finite(m) if !(m.is_finite() && m > 0.0) => Err(Error::InvalidConfig(
                format!("finite M must be positive, got {m}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Symmetric positive semi-definite 3×3 covariance, m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance3(Matrix3<f64>);

impl Covariance3 {
    pub fn zeros() -> Self {
        Covariance3(Matrix3::zeros())
    }

    /// Checks symmetry (1e-10 relative) and PSD (eigenvalues ≥ −1e-10·trace).
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        check_symmetric_psd(&m)?;
        Ok(Covariance3(linalg::symmetrize(&m)))
    }

    pub(crate) fn from_symmetric(m: Matrix3<f64>) -> Self {
        Covariance3(linalg::symmetrize(&m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn overall_std(&self) -> f64 {
        overall_std(self)
    }

    /// Row-major entries.
    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)], m[(0, 1)], m[(0, 2)],
            m[(1, 0)], m[(1, 1)], m[(1, 2)],
            m[(2, 0)], m[(2, 1)], m[(2, 2)],
        ]
    }
}

/// Symmetric PSD 3×3 information matrix, m⁻², with its structural rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Information3 {
    matrix: Matrix3<f64>,
    rank: u8,
    source: Option<CameraId>,
}

impl Information3 {
    pub fn new(matrix: Matrix3<f64>, rank: u8, source: Option<CameraId>) -> Result<Self> {
        check_symmetric_psd(&matrix)?;
        if rank > 3 {
            return Err(Error::InvalidConfig(format!("rank {rank} exceeds 3")));
        }
        Ok(Information3 {
            matrix: linalg::symmetrize(&matrix),
            rank,
            source,
        })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn rank(&self) -> u8 {
        self.rank
    }

    /// Camera this information came from, used to fix the summation order.
    pub fn source(&self) -> Option<CameraId> {
        self.source
    }

    /// Rank counted from eigenvalues above `1e-12·trace`.
    pub fn numerical_rank(&self) -> usize {
        let tr = self.matrix.trace();
        if tr <= 0.0 {
            return 0;
        }
        sym_eigen3(&self.matrix)
            .values
            .iter()
            .filter(|&&l| l > SINGULAR_RATIO * tr)
            .count()
    }
}

/// What a single camera knows about a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementGaussian {
    pub camera_id: CameraId,
    /// Unit direction from the optical center to the target.
    pub psi: Vector3,
    /// Camera right/down axes.
    pub plane_basis: Matrix3x2<f64>,
    pub optical_axis: Vector3,
    /// Target depth along the optical axis.
    pub depth: f64,
    /// Lateral standard deviation in the target plane, `σ·depth/f`.
    pub propagated_std: f64,
    pub policy: MPolicy,
}

impl MeasurementGaussian {
    pub fn new(camera: &CameraModel, point: &Point3, policy: MPolicy) -> Result<Self> {
        Self::with_noise(camera, point, policy, &CameraNoise)
    }

    /// Like [`MeasurementGaussian::new`] but takes σ from `noise`.
    pub fn with_noise(
        camera: &CameraModel,
        point: &Point3,
        policy: MPolicy,
        noise: &dyn NoiseModel,
    ) -> Result<Self> {
        policy.validate()?;
        let depth = geometry::depth(camera, point);
        if !(depth > 0.0) {
            return Err(Error::BehindCamera { depth });
        }
        let sigma = noise.pixel_std(camera, point);
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidCamera(format!(
                "camera {}: pixel noise std must be non-negative, got {sigma}",
                camera.id
            )));
        }
        Ok(MeasurementGaussian {
            camera_id: camera.id,
            psi: geometry::viewing_direction(camera, point)?,
            plane_basis: geometry::image_plane_basis(camera),
            optical_axis: camera.axis(),
            depth,
            propagated_std: sigma * depth / camera.focal,
            policy,
        })
    }

    pub fn is_on_axis(&self) -> bool {
        (self.plane_basis.transpose() * self.psi).amax() < ON_AXIS_TOL
    }

    /// `M·ψψᵀ + s²·ΨΨᵀ`.
    pub fn covariance(&self) -> Result<Covariance3> {
        let m = match self.policy {
            MPolicy::Finite(m) => m,
            MPolicy::Limit => return Err(Error::LimitModeHasNoCovariance),
        };
        let s2 = self.propagated_std.powi(2);
        let sigma = m * self.psi * self.psi.transpose()
            + s2 * self.plane_basis * self.plane_basis.transpose();
        Ok(Covariance3::from_symmetric(sigma))
    }

    pub fn information(&self) -> Result<Information3> {
        let s = self.propagated_std;
        if s == 0.0 {
            return Err(Error::InvalidCamera(format!(
                "camera {} is noiseless; its information is unbounded",
                self.camera_id
            )));
        }
        let inv_s2 = 1.0 / (s * s);
        let (matrix, rank) = match self.policy {
            MPolicy::Limit => {
                let p = self.ray_projection();
                (inv_s2 * p.transpose() * p, 2)
            }
            MPolicy::Finite(m) => {
                let basis_inv = self.basis_inverse();
                // Relative error of B⁻ᵀ·D⁻¹·B⁻¹ grows with cond(B)².
                let gram = sym_eigen3(&(basis_inv.transpose() * basis_inv));
                let condition = gram.max() / gram.min();
                if !(condition <= MAX_CONDITION) {
                    return Err(Error::SingularCovariance { condition });
                }
                let d = Matrix3::from_diagonal(&Vector3::new(inv_s2, inv_s2, 1.0 / m));
                (basis_inv.transpose() * d * basis_inv, 3)
            }
        };
        Ok(Information3 {
            matrix: linalg::symmetrize(&matrix),
            rank,
            source: Some(self.camera_id),
        })
    }

    /// Oblique projection along ψ onto the plane orthogonal to the optical axis.
    fn ray_projection(&self) -> Matrix3<f64> {
        let a = self.optical_axis;
        Matrix3::identity() - self.psi * a.transpose() / a.dot(&self.psi)
    }

    /// Inverse of `[Ψ | ψ]`: rows are `ΨᵀP` and `aᵀ/(aᵀψ)`.
    fn basis_inverse(&self) -> Matrix3<f64> {
        let a = self.optical_axis;
        let top = self.plane_basis.transpose() * self.ray_projection();
        let last = a.transpose() / a.dot(&self.psi);
        Matrix3::from_rows(&[top.row(0).into_owned(), top.row(1).into_owned(), last])
    }
}

pub fn single_view_covariance(
    camera: &CameraModel,
    point: &Point3,
    policy: MPolicy,
) -> Result<Covariance3> {
    MeasurementGaussian::new(camera, point, policy)?.covariance()
}

pub fn single_view_information(
    camera: &CameraModel,
    point: &Point3,
    policy: MPolicy,
) -> Result<Information3> {
    MeasurementGaussian::new(camera, point, policy)?.information()
}

/// Minimum-variance fusion: inverse of the summed information.
///
/// Inputs are summed in a canonical order (by source camera, then by matrix
/// entries) so the result does not depend on the caller's ordering.
pub fn fuse(infos: &[Information3]) -> Result<Covariance3> {
    if infos.is_empty() {
        return Err(Error::InvalidConfig("cannot fuse an empty set of measurements".into()));
    }
    let mut ordered: Vec<&Information3> = infos.iter().collect();
    ordered.sort_by(|a, b| {
        a.source.cmp(&b.source).then_with(|| {
            a.matrix
                .iter()
                .zip(b.matrix.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let total = ordered
        .iter()
        .fold(Matrix3::zeros(), |acc, info| acc + info.matrix);

    let eig = sym_eigen3(&total);
    let ratio = if eig.max() > 0.0 { eig.min() / eig.max() } else { 0.0 };
    if !(ratio >= SINGULAR_RATIO) {
        return Err(Error::SingularInformation { ratio });
    }
    Ok(Covariance3::from_symmetric(eig.compose(|l| 1.0 / l)))
}

/// Fused covariance of `cameras` observing `point` under `policy`.
///
/// A set made only of noiseless cameras has zero covariance as long as its
/// geometry can triangulate the point; mixing noiseless and noisy cameras is
/// rejected.
pub fn fused_covariance(
    cameras: &[&CameraModel],
    point: &Point3,
    policy: MPolicy,
) -> Result<Covariance3> {
    let noiseless = cameras.iter().filter(|c| c.pixel_noise_std == 0.0).count();
    if noiseless > 0 && noiseless < cameras.len() {
        return Err(Error::MixedNoiselessCameras);
    }
    if noiseless > 0 {
        let unit = |_: &CameraModel, _: &Point3| 1.0;
        let infos = cameras
            .iter()
            .map(|c| MeasurementGaussian::with_noise(c, point, policy, &unit)?.information())
            .collect::<Result<Vec<_>>>()?;
        fuse(&infos)?;
        return Ok(Covariance3::zeros());
    }
    let infos = cameras
        .iter()
        .map(|c| single_view_information(c, point, policy))
        .collect::<Result<Vec<_>>>()?;
    fuse(&infos)
}

/// `√trace(Σ)`, in meters.
pub fn overall_std(cov: &Covariance3) -> f64 {
    cov.trace().max(0.0).sqrt()
}

/// The 1σ ellipse of a covariance marginalized onto a plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseSection {
    pub center: Point3,
    /// Semi-axes `(a, b)` with `a ≥ b`, meters.
    pub axis_lengths: (f64, f64),
    /// Unit major and minor axis directions.
    pub axis_directions: [Vector3; 2],
    /// In-plane reference basis used for angles and sampling.
    pub plane_basis: [Vector3; 2],
}

impl EllipseSection {
    /// Angle of the major axis from the first plane basis vector, degrees in [0, 180).
    pub fn major_angle_deg(&self) -> f64 {
        let d = self.axis_directions[0];
        let angle = d.dot(&self.plane_basis[1]).atan2(d.dot(&self.plane_basis[0])).to_degrees();
        let wrapped = angle.rem_euclid(180.0);
        if wrapped >= 180.0 - 1e-9 {
            0.0
        } else {
            wrapped
        }
    }

    pub fn axis_ratio(&self) -> f64 {
        self.axis_lengths.0 / self.axis_lengths.1
    }

    /// `n` points of the 1σ curve, starting on the major axis.
    pub fn polyline(&self, n: usize) -> Vec<Point3> {
        let (a, b) = self.axis_lengths;
        (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                self.center
                    + self.axis_directions[0] * (a * t.cos())
                    + self.axis_directions[1] * (b * t.sin())
            })
            .collect()
    }
}

/// Deterministic orthonormal basis of the plane orthogonal to `normal`.
///
/// The first vector comes from the world axis least aligned with `normal`,
/// so a plane with normal +z gets the basis (x, y).
pub fn plane_basis(normal: &Vector3) -> Result<[Vector3; 2]> {
    let n_norm = normal.norm();
    if !(n_norm > 0.0 && n_norm.is_finite()) {
        return Err(Error::InvalidConfig("plane normal must be a non-zero vector".into()));
    }
    let n = normal / n_norm;
    let pick = (0..3)
        .min_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs()))
        .unwrap_or(0);
    let e = Vector3::ith(pick, 1.0);
    let first = (e - n * n.dot(&e)).normalize();
    let second = n.cross(&first);
    Ok([first, second])
}

pub fn sigma_ellipse_slice(
    cov: &Covariance3,
    plane_normal: &Vector3,
    center: &Point3,
) -> Result<EllipseSection> {
    let basis = plane_basis(plane_normal)?;
    let sigma = cov.matrix();
    let a = basis[0].dot(&(sigma * basis[0]));
    let b = basis[0].dot(&(sigma * basis[1]));
    let c = basis[1].dot(&(sigma * basis[1]));
    let ([hi, lo], [major, minor]) = sym_eigen2(a, b, c);
    if !(lo >= MIN_SECTION_VARIANCE) {
        return Err(Error::DegenerateSection { variance: lo });
    }
    Ok(EllipseSection {
        center: *center,
        axis_lengths: (hi.sqrt(), lo.sqrt()),
        axis_directions: [
            basis[0] * major.x + basis[1] * major.y,
            basis[0] * minor.x + basis[1] * minor.y,
        ],
        plane_basis: basis,
    })
}

fn check_symmetric_psd(m: &Matrix3<f64>) -> Result<()> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig("matrix has non-finite entries".into()));
    }
    let scale = m.amax();
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(Error::InvalidConfig(format!("matrix is not symmetric ({asym:e})")));
    }
    let tr = m.trace();
    let eig = sym_eigen3(&linalg::symmetrize(m));
    if eig.min() < -1e-10 * tr.abs().max(scale) {
        return Err(Error::InvalidConfig(format!(
            "matrix is not positive semi-definite (eigenvalue {:e})",
            eig.min()
        )));
    }
    Ok(())
}
