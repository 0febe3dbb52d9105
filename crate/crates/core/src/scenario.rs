//! Experiment construction: camera rings, target sampling, the cameras-count
//! and pair-angle studies, voxel error maps and camera selection.

use std::collections::HashSet;
use std::f64::consts::TAU;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::covariance::{self, Covariance3, EllipseSection, MPolicy};
use crate::error::{Error, Result};
use crate::geometry::{self, CameraId, CameraModel, Point3, Rotation3, Vector3};
use crate::montecarlo::{self, McConfig, McResult};
use crate::noise::stream_key;

/// Targets are sampled inside this fraction of the ring radius.
pub const INTERIOR_RADIUS_FRACTION: f64 = 0.9;
/// Half height of the sampled target slab around the ring plane, meters.
pub const TARGET_HALF_HEIGHT: f64 = 1.0;

const TIE_TOL: f64 = 1e-12;

/// Axis-aligned box in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Room {
    pub min: Point3,
    pub max: Point3,
}

impl Room {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        let finite = min.iter().chain(max.iter()).all(|x| x.is_finite());
        if !finite || (0..3).any(|i| !(max[i] > min[i])) {
            return Err(Error::InvalidScenario(format!(
                "room must have positive volume, got min {min} max {max}"
            )));
        }
        Ok(Room { min, max })
    }

    pub fn extent(&self) -> Vector3 {
        self.max - self.min
    }

    pub fn max_side(&self) -> f64 {
        self.extent().max()
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// Which cameras count as seeing a target.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Visibility {
    /// Strictly positive depth.
    #[default]
    InFront,
    /// Positive depth and projection inside a sensor of the given half
    /// extents (meters on the sensor).
    Sensor { half_width: f64, half_height: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    cameras: Vec<CameraModel>,
    pub room: Room,
    pub m_policy: MPolicy,
    pub seed: u64,
    pub visibility: Visibility,
}

impl Scenario {
    /// Cameras are kept sorted by id.
    pub fn new(mut cameras: Vec<CameraModel>, room: Room, m_policy: MPolicy, seed: u64) -> Result<Self> {
        if cameras.is_empty() {
            return Err(Error::InvalidScenario("at least one camera is required".into()));
        }
        let mut seen = HashSet::new();
        for c in &cameras {
            if !seen.insert(c.id) {
                return Err(Error::InvalidScenario(format!("duplicate camera id {}", c.id)));
            }
        }
        m_policy.validate()?;
        cameras.sort_by_key(|c| c.id);
        Ok(Scenario {
            cameras,
            room,
            m_policy,
            seed,
            visibility: Visibility::InFront,
        })
    }

    pub fn with_visibility(mut self, visibility: Visibility) -> Self {
        self.visibility = visibility;
        self
    }

    pub fn cameras(&self) -> &[CameraModel] {
        &self.cameras
    }

    pub fn camera(&self, id: CameraId) -> Result<&CameraModel> {
        self.cameras
            .binary_search_by_key(&id, |c| c.id)
            .map(|i| &self.cameras[i])
            .map_err(|_| Error::UnknownCamera(id))
    }

    /// Cameras with the given ids, or all cameras for `None`.
    pub fn select(&self, ids: Option<&[CameraId]>) -> Result<Vec<&CameraModel>> {
        match ids {
            None => Ok(self.cameras.iter().collect()),
            Some(ids) => {
                let mut out = ids.iter().map(|&id| self.camera(id)).collect::<Result<Vec<_>>>()?;
                out.sort_by_key(|c| c.id);
                out.dedup_by_key(|c| c.id);
                Ok(out)
            }
        }
    }

    pub fn sees(&self, camera: &CameraModel, point: &Point3) -> bool {
        if !(geometry::depth(camera, point) > 0.0) {
            return false;
        }
        match self.visibility {
            Visibility::InFront => true,
            Visibility::Sensor { half_width, half_height } => match geometry::project(camera, point) {
                Ok(px) => px.u.abs() <= half_width && px.v.abs() <= half_height,
                Err(_) => false,
            },
        }
    }

    pub fn visible<'a>(&self, cameras: &[&'a CameraModel], point: &Point3) -> Vec<&'a CameraModel> {
        cameras.iter().copied().filter(|c| self.sees(c, point)).collect()
    }

    /// Fused closed-form covariance under the scenario's M policy.
    pub fn fused_covariance(&self, cameras: &[&CameraModel], point: &Point3) -> Result<Covariance3> {
        covariance::fused_covariance(cameras, point, self.m_policy)
    }

    /// Centroid of the camera centers and the smallest horizontal distance
    /// from it to a camera.
    pub fn ring_geometry(&self) -> (Point3, f64) {
        let n = self.cameras.len() as f64;
        let centroid = Point3::from(
            self.cameras.iter().fold(Vector3::zeros(), |acc, c| acc + c.center.coords) / n,
        );
        let radius = self
            .cameras
            .iter()
            .map(|c| (c.center.x - centroid.x).hypot(c.center.y - centroid.y))
            .fold(f64::INFINITY, f64::min);
        (centroid, radius)
    }
}

/// `m` cameras equally spaced on a horizontal circle around the origin, all
/// aimed at the circle center with their down axis along world −z.
pub fn ring_scenario(m: usize, radius: f64, height: f64, focal: f64, sigma: f64) -> Result<Scenario> {
    if m == 0 {
        return Err(Error::InvalidScenario("ring needs at least one camera".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) || !height.is_finite() {
        return Err(Error::InvalidScenario(format!("invalid ring radius {radius} or height {height}")));
    }
    let target = Point3::new(0.0, 0.0, height);
    let cameras = (0..m)
        .map(|k| {
            let angle = TAU * k as f64 / m as f64;
            let center = Point3::new(radius * angle.cos(), radius * angle.sin(), height);
            let rotation = Rotation3::look_at(&center, &target, &Vector3::z())?;
            CameraModel::new(CameraId(k as u32), center, rotation, focal, sigma)
        })
        .collect::<Result<Vec<_>>>()?;
    let room = Room::new(
        Point3::new(-radius, -radius, height - TARGET_HALF_HEIGHT),
        Point3::new(radius, radius, height + TARGET_HALF_HEIGHT),
    )?;
    Scenario::new(cameras, room, MPolicy::Limit, 0)
}

/// Uniform sample from the cylinder of radius `radius` and half height
/// [`TARGET_HALF_HEIGHT`] around `center`.
pub fn sample_interior_point<R: Rng + ?Sized>(rng: &mut R, center: &Point3, radius: f64) -> Point3 {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = TAU * rng.random::<f64>();
    let z = TARGET_HALF_HEIGHT * (2.0 * rng.random::<f64>() - 1.0);
    Point3::new(center.x + r * theta.cos(), center.y + r * theta.sin(), center.z + z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig4Row {
    pub m: usize,
    pub mean_percent_diff: f64,
    /// Standard error of the mean over points.
    pub stderr: f64,
    pub points_used: usize,
}

/// Percent difference between Monte Carlo and closed-form overall std for
/// random interior points and random `m`-camera subsets.
///
/// For each `m` and point index, the point and the camera subset are drawn
/// from a stream keyed by `(mc.seed, m, point)`. Points whose subset cannot
/// triangulate them are skipped and not counted in `points_used`.
pub fn run_fig4(base: &Scenario, m_values: &[usize], points_per_m: usize, mc: &McConfig) -> Result<Vec<Fig4Row>> {
    mc.validate()?;
    if m_values.is_empty() {
        return Err(Error::InvalidConfig("no camera counts given".into()));
    }
    let n = base.cameras().len();
    if let Some(&bad) = m_values.iter().find(|&&m| m < 2 || m > n) {
        return Err(Error::InvalidConfig(format!("camera count {bad} outside [2, {n}]")));
    }
    let (center, ring_radius) = base.ring_geometry();
    let sample_radius = INTERIOR_RADIUS_FRACTION * ring_radius;

    m_values
        .iter()
        .map(|&m| {
            let diffs = (0..points_per_m)
                .into_par_iter()
                .map(|p| fig4_point(base, m, p as u64, &center, sample_radius, mc))
                .collect::<Result<Vec<Option<f64>>>>()?;
            let used: Vec<f64> = diffs.into_iter().flatten().collect();
            let (mean, stderr) = mean_and_stderr(&used);
            Ok(Fig4Row {
                m,
                mean_percent_diff: mean,
                stderr,
                points_used: used.len(),
            })
        })
        .collect()
}

fn fig4_point(
    base: &Scenario,
    m: usize,
    p: u64,
    center: &Point3,
    sample_radius: f64,
    mc: &McConfig,
) -> Result<Option<f64>> {
    let key = stream_key(mc.seed, &[m as u64, p]);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let point = sample_interior_point(&mut rng, center, sample_radius);
    let mut picks = index::sample(&mut rng, base.cameras().len(), m).into_vec();
    picks.sort_unstable();
    let subset: Vec<&CameraModel> = picks.iter().map(|&i| &base.cameras()[i]).collect();
    let subset = base.visible(&subset, &point);
    if subset.len() < 2 {
        return Ok(None);
    }
    let theory = match base.fused_covariance(&subset, &point) {
        Ok(t) => t,
        Err(e) if e.is_numerical() => return Ok(None),
        Err(e) => return Err(e),
    };
    let sample = montecarlo::mc_covariance_stream(&subset, &point, key, mc)?;
    montecarlo::percent_std_difference(&sample, &theory).map(Some)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Default ring for the pair-angle study: 16 cameras, 10 m radius.
pub const FIG5_CAMERAS: usize = 16;
pub const FIG5_RADIUS: f64 = 10.0;
pub const DEFAULT_FOCAL: f64 = 0.01;
pub const DEFAULT_PIXEL_SIGMA: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Fig5Row {
    pub angle: f64,
    pub pair: (CameraId, CameraId),
    pub theory_cov: Covariance3,
    pub mc: McResult,
    pub theory: EllipseSection,
    pub sample: EllipseSection,
}

pub fn run_fig5(angles: &[f64], mc: &McConfig) -> Result<Vec<Fig5Row>> {
    let ring = ring_scenario(FIG5_CAMERAS, FIG5_RADIUS, 0.0, DEFAULT_FOCAL, DEFAULT_PIXEL_SIGMA)?;
    run_fig5_on(&ring, angles, mc)
}

/// For each angle, pairs the first ring camera with the one separated by that
/// angle and compares closed-form and sampled 1σ ellipses of the ring-center
/// reconstruction, sliced in the ring plane.
pub fn run_fig5_on(ring: &Scenario, angles: &[f64], mc: &McConfig) -> Result<Vec<Fig5Row>> {
    mc.validate()?;
    let cameras = ring.cameras();
    let step = TAU / cameras.len() as f64;
    let (center, _) = ring.ring_geometry();
    angles
        .iter()
        .map(|&angle| {
            let k = (angle / step).round();
            if !(k >= 1.0 && k < cameras.len() as f64) || (k * step - angle).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "angle {angle} is not a multiple of the ring spacing {step}"
                )));
            }
            let pair = [&cameras[0], &cameras[k as usize]];
            let theory_cov = ring.fused_covariance(&pair, &center)?;
            let sample = montecarlo::mc_covariance_stream(&pair, &center, k as u64, mc)?;
            Ok(Fig5Row {
                angle,
                pair: (pair[0].id, pair[1].id),
                theory_cov,
                mc: sample,
                theory: covariance::sigma_ellipse_slice(&theory_cov, &Vector3::z(), &center)?,
                sample: covariance::sigma_ellipse_slice(&sample.sample_cov, &Vector3::z(), &center)?,
            })
        })
        .collect()
}

/// Closed-form reconstruction quality on a voxel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap {
    pub dims: [usize; 3],
    pub origin: Point3,
    pub spacing: Vector3,
    /// Overall std per voxel, `None` where the visible cameras cannot
    /// reconstruct. Index is `i + nx·(j + ny·k)`.
    pub std: Vec<Option<f64>>,
    pub visible: Vec<usize>,
}

impl ErrorMap {
    pub fn len(&self) -> usize {
        self.std.len()
    }

    pub fn is_empty(&self) -> bool {
        self.std.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        voxel_index(self.dims, i, j, k)
    }

    pub fn voxel_center(&self, flat: usize) -> Point3 {
        voxel_center(self.dims, &self.origin, &self.spacing, flat)
    }
}

fn voxel_index(dims: [usize; 3], i: usize, j: usize, k: usize) -> usize {
    i + dims[0] * (j + dims[1] * k)
}

fn voxel_coords(dims: [usize; 3], flat: usize) -> [usize; 3] {
    [flat % dims[0], (flat / dims[0]) % dims[1], flat / (dims[0] * dims[1])]
}

fn voxel_center(dims: [usize; 3], origin: &Point3, spacing: &Vector3, flat: usize) -> Point3 {
    let c = voxel_coords(dims, flat);
    Point3::new(
        origin.x + (c[0] as f64 + 0.5) * spacing.x,
        origin.y + (c[1] as f64 + 0.5) * spacing.y,
        origin.z + (c[2] as f64 + 0.5) * spacing.z,
    )
}

fn grid(scenario: &Scenario, dims: [usize; 3]) -> Result<(Point3, Vector3)> {
    if dims.contains(&0) {
        return Err(Error::InvalidConfig(format!("grid dimensions must be ≥ 1, got {dims:?}")));
    }
    let e = scenario.room.extent();
    let spacing = Vector3::new(e.x / dims[0] as f64, e.y / dims[1] as f64, e.z / dims[2] as f64);
    Ok((scenario.room.min, spacing))
}

/// Fuses the limit-mode information of every visible camera at each voxel
/// center of a grid spanning the room.
pub fn error_map(scenario: &Scenario, dims: [usize; 3], subset: Option<&[CameraId]>) -> Result<ErrorMap> {
    let (origin, spacing) = grid(scenario, dims)?;
    let cameras = scenario.select(subset)?;
    let n = dims.iter().product::<usize>();
    let cells: Vec<(Option<f64>, usize)> = (0..n)
        .into_par_iter()
        .map(|flat| {
            let p = voxel_center(dims, &origin, &spacing, flat);
            let seen = scenario.visible(&cameras, &p);
            let std = if seen.len() < 2 {
                None
            } else {
                covariance::fused_covariance(&seen, &p, MPolicy::Limit)
                    .ok()
                    .map(|c| c.overall_std())
            };
            (std, seen.len())
        })
        .collect();
    let (std, visible) = cells.into_iter().unzip();
    Ok(ErrorMap {
        dims,
        origin,
        spacing,
        std,
        visible,
    })
}

/// Monte Carlo overall std on the same grid as [`error_map`]. Voxel `v` uses
/// random stream `v`.
pub fn error_map_mc(
    scenario: &Scenario,
    dims: [usize; 3],
    subset: Option<&[CameraId]>,
    mc: &McConfig,
) -> Result<Vec<Option<f64>>> {
    mc.validate()?;
    let (origin, spacing) = grid(scenario, dims)?;
    let cameras = scenario.select(subset)?;
    let n = dims.iter().product::<usize>();
    (0..n)
        .into_par_iter()
        .map(|flat| {
            let p = voxel_center(dims, &origin, &spacing, flat);
            let seen = scenario.visible(&cameras, &p);
            if seen.len() < 2 {
                return Ok(None);
            }
            match montecarlo::mc_covariance_stream(&seen, &p, flat as u64, mc) {
                Ok(r) => Ok(Some(r.overall_std())),
                Err(e) if e.is_numerical() => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub a: CameraId,
    pub b: CameraId,
    /// Overall std of the pair-fused covariance, meters.
    pub quality: f64,
}

/// Visible camera pairs, best (smallest std) first.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRanking {
    pub entries: Vec<PairScore>,
}

impl PairRanking {
    pub fn best(&self) -> &PairScore {
        &self.entries[0]
    }
}

pub fn rank_pairs(scenario: &Scenario, point: &Point3) -> Result<PairRanking> {
    let all: Vec<&CameraModel> = scenario.cameras().iter().collect();
    let seen = scenario.visible(&all, point);
    let pairs: Vec<(usize, usize)> = (0..seen.len())
        .flat_map(|i| ((i + 1)..seen.len()).map(move |j| (i, j)))
        .collect();
    let mut entries = pairs
        .par_iter()
        .map(|&(i, j)| {
            match covariance::fused_covariance(&[seen[i], seen[j]], point, MPolicy::Limit) {
                Ok(c) => Ok(Some(PairScore {
                    a: seen[i].id,
                    b: seen[j].id,
                    quality: c.overall_std(),
                })),
                Err(e) if e.is_numerical() => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    if entries.is_empty() {
        return Err(Error::NoVisiblePair);
    }
    entries.sort_by(|x, y| {
        x.quality
            .total_cmp(&y.quality)
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });
    Ok(PairRanking { entries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Cameras in the order they were chosen.
    pub cameras: Vec<CameraId>,
    /// Overall std after each addition; entry 0 is the starting pair.
    pub stds: Vec<f64>,
}

impl Selection {
    pub fn final_std(&self) -> f64 {
        *self.stds.last().expect("selection is never empty")
    }
}

/// Starts from the best pair and greedily adds the camera that most reduces
/// the overall std, breaking ties (1e-12 relative) by lowest id.
pub fn greedy_select(scenario: &Scenario, point: &Point3, k: usize) -> Result<Selection> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("subset size must be ≥ 2, got {k}")));
    }
    let all: Vec<&CameraModel> = scenario.cameras().iter().collect();
    let seen = scenario.visible(&all, point);
    if seen.len() < k {
        return Err(Error::NotEnoughCameras {
            needed: k,
            available: seen.len(),
        });
    }
    let best = *rank_pairs(scenario, point)?.best();
    let mut chosen = vec![scenario.camera(best.a)?, scenario.camera(best.b)?];
    let mut selection = Selection {
        cameras: vec![best.a, best.b],
        stds: vec![best.quality],
    };

    while chosen.len() < k {
        let mut pick: Option<(&CameraModel, f64)> = None;
        for &candidate in seen.iter().filter(|c| !selection.cameras.contains(&c.id)) {
            let mut trial = chosen.clone();
            trial.push(candidate);
            let std = covariance::fused_covariance(&trial, point, MPolicy::Limit)?.overall_std();
            if pick.is_none_or(|(_, s)| std < s * (1.0 - TIE_TOL)) {
                pick = Some((candidate, std));
            }
        }
        let (camera, std) = pick.ok_or(Error::NotEnoughCameras {
            needed: k,
            available: chosen.len(),
        })?;
        chosen.push(camera);
        selection.cameras.push(camera.id);
        selection.stds.push(std);
    }
    Ok(selection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn ring_of_four() {
        let s = ring_scenario(4, 10.0, 0.0, 0.01, 1e-5).unwrap();
        let expected = [(10.0, 0.0), (0.0, 10.0), (-10.0, 0.0), (0.0, -10.0)];
        for (cam, (x, y)) in s.cameras().iter().zip(expected) {
            assert!((cam.center - Point3::new(x, y, 0.0)).norm() < 1e-12);
            let to_center = (Point3::origin() - cam.center).normalize();
            assert!((cam.axis() - to_center).norm() < 1e-15);
            assert!((cam.rotation.down() + Vector3::z()).norm() < 1e-15);
        }
        assert_eq!(s.room.min, Point3::new(-10.0, -10.0, -1.0));
    }

    #[test]
    fn large_ring_spacing() {
        let s = ring_scenario(256, 10.0, 0.0, 0.01, 1e-5).unwrap();
        assert_eq!(s.cameras().len(), 256);
        let a0 = s.cameras()[0].center.y.atan2(s.cameras()[0].center.x);
        let a1 = s.cameras()[1].center.y.atan2(s.cameras()[1].center.x);
        assert!((a1 - a0 - TAU / 256.0).abs() < 1e-12);
    }

    #[test]
    fn scenario_validation() {
        let s = ring_scenario(2, 10.0, 0.0, 0.01, 1e-5).unwrap();
        let mut cams = s.cameras().to_vec();
        cams[1].id = cams[0].id;
        assert!(matches!(
            Scenario::new(cams, s.room, MPolicy::Limit, 0),
            Err(Error::InvalidScenario(_))
        ));
        assert!(Scenario::new(vec![], s.room, MPolicy::Limit, 0).is_err());
        assert!(Room::new(Point3::origin(), Point3::new(1.0, 0.0, 1.0)).is_err());
        assert!(ring_scenario(0, 10.0, 0.0, 0.01, 1e-5).is_err());
        assert_eq!(s.camera(CameraId(9)), Err(Error::UnknownCamera(CameraId(9))));
    }

    #[test]
    fn sensor_visibility() {
        let s = ring_scenario(4, 10.0, 0.0, 0.01, 1e-5)
            .unwrap()
            .with_visibility(Visibility::Sensor { half_width: 0.005, half_height: 0.005 });
        let cam = &s.cameras()[0];
        assert!(s.sees(cam, &Point3::origin()));
        // 45° off axis: u = f·tan 45° = 0.01 > 0.005.
        assert!(!s.sees(cam, &Point3::new(5.0, 5.0, 0.0)));
        assert!(!s.sees(cam, &Point3::new(11.0, 0.0, 0.0)));
    }

    #[test]
    fn interior_samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let p = sample_interior_point(&mut rng, &Point3::origin(), 9.0);
            assert!(p.x.hypot(p.y) <= 9.0 && p.z.abs() <= 1.0);
        }
    }

    #[test]
    fn fig4_noiseless_rows_are_zero() {
        let base = ring_scenario(32, 10.0, 0.0, 0.01, 0.0).unwrap();
        let rows = run_fig4(&base, &[2, 5], 6, &McConfig::new(20, 4)).unwrap();
        assert_eq!(rows.len(), 2);
        for row in rows {
            assert_eq!(row.mean_percent_diff, 0.0);
            assert_eq!(row.points_used, 6);
        }
        assert!(run_fig4(&base, &[], 6, &McConfig::new(20, 4)).is_err());
        assert!(run_fig4(&base, &[1], 6, &McConfig::new(20, 4)).is_err());
        assert!(run_fig4(&base, &[33], 6, &McConfig::new(20, 4)).is_err());
    }

    #[test]
    fn fig5_rejects_off_grid_angles() {
        assert!(run_fig5(&[0.1], &McConfig::new(10, 0)).is_err());
        assert!(run_fig5(&[0.0], &McConfig::new(10, 0)).is_err());
    }

    #[test]
    fn error_map_single_voxel_matches_fusion() {
        let ring = ring_scenario(4, 10.0, 0.0, 0.01, 1e-5).unwrap();
        let room = Room::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
        let s = Scenario::new(ring.cameras().to_vec(), room, MPolicy::Limit, 0).unwrap();
        let map = error_map(&s, [1, 1, 1], Some(&[CameraId(0), CameraId(1)])).unwrap();
        let expected = 0.01 * 2.5f64.sqrt();
        assert!((map.std[0].unwrap() - expected).abs() < 1e-9 * expected);
        assert_eq!(map.visible[0], 2);

        let single = error_map(&s, [2, 2, 2], Some(&[CameraId(0)])).unwrap();
        assert!(single.std.iter().all(Option::is_none));
        assert!(error_map(&s, [0, 1, 1], None).is_err());
    }

    #[test]
    fn error_map_indexing() {
        let s = ring_scenario(4, 10.0, 0.0, 0.01, 1e-5).unwrap();
        let map = error_map(&s, [4, 3, 2], None).unwrap();
        assert_eq!(map.len(), 24);
        let flat = map.index(3, 2, 1);
        assert_eq!(flat, 23);
        let c = map.voxel_center(flat);
        assert!((c - Point3::new(7.5, 10.0 - 20.0 / 6.0, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn ring_center_prefers_orthogonal_pairs() {
        let s = ring_scenario(16, 10.0, 0.0, 0.01, 1e-5).unwrap();
        let ranking = rank_pairs(&s, &Point3::origin()).unwrap();
        // Opposite cameras see along the same line and are dropped.
        assert_eq!(ranking.entries.len(), 120 - 8);
        let best = ranking.best();
        let sep = (best.b.0 - best.a.0) as f64 * TAU / 16.0;
        assert!((sep - FRAC_PI_2).abs() < 1e-12 || (sep - 3.0 * FRAC_PI_2).abs() < 1e-12);
        assert!(ranking.entries.windows(2).all(|w| w[0].quality <= w[1].quality));
        let _ = PI;
    }

    #[test]
    fn two_camera_ranking() {
        let ring = ring_scenario(16, 10.0, 0.0, 0.01, 1e-5).unwrap();
        let cams = vec![ring.cameras()[0].clone(), ring.cameras()[3].clone()];
        let s = Scenario::new(cams, ring.room, MPolicy::Limit, 0).unwrap();
        assert_eq!(rank_pairs(&s, &Point3::origin()).unwrap().entries.len(), 1);
    }

    #[test]
    fn greedy_bounds() {
        let s = ring_scenario(8, 10.0, 0.0, 0.01, 1e-5).unwrap();
        let p = Point3::new(1.0, -2.0, 0.3);
        let two = greedy_select(&s, &p, 2).unwrap();
        let best = *rank_pairs(&s, &p).unwrap().best();
        assert_eq!(two.cameras, vec![best.a, best.b]);
        let all = greedy_select(&s, &p, 8).unwrap();
        let cams: Vec<&CameraModel> = s.cameras().iter().collect();
        let full = covariance::fused_covariance(&cams, &p, MPolicy::Limit).unwrap().overall_std();
        assert!((all.final_std() - full).abs() < 1e-12 * full);
        assert!(all.stds.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(matches!(greedy_select(&s, &p, 9), Err(Error::NotEnoughCameras { .. })));
        assert!(greedy_select(&s, &p, 1).is_err());
    }
}
