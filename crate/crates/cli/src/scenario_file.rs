//! Versioned JSON scenario documents.
//!
//! ```json
//! {
//!   "version": 1,
//!   "cameras": [
//!     {"id": 0, "center": [10, 0, 0], "rotation": {"look_at": [0, 0, 0], "up": [0, 0, 1]},
//!      "focal": 0.01, "sigma": 1e-5},
//!     {"id": 1, "center": [0, 10, 0], "rotation": [1, 0, 0, 0, 1, 0, 0, 0, 1],
//!      "focal": 0.01, "sigma": 1e-5}
//!   ],
//!   "room": {"min": [-10, -10, -1], "max": [10, 10, 1]},
//!   "m_policy": {"mode": "limit"},
//!   "seed": 0
//! }
//! ```
//!
//! A row-major `rotation` has the camera right, down and optical axes as its
//! columns. Everything is in meters and radians.

use std::path::Path;

use mocapvar::geometry::{CameraId, CameraModel, Point3, Rotation3, Vector3};
use mocapvar::scenario::{Room, Scenario, Visibility};
use mocapvar::MPolicy;
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub cameras: Vec<CameraEntry>,
    pub room: RoomEntry,
    #[serde(default)]
    pub m_policy: MPolicyEntry,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility: Option<VisibilityEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraEntry {
    pub id: u32,
    pub center: [f64; 3],
    pub rotation: RotationEntry,
    pub focal: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RotationEntry {
    RowMajor([f64; 9]),
    LookAt { look_at: [f64; 3], up: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomEntry {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MPolicyEntry {
    #[default]
    Limit,
    Finite {
        m: f64,
    },
    /// `(10³·L·m)²` from the room and camera count.
    FiniteDefault,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VisibilityEntry {
    InFront,
    Sensor { half_width: f64, half_height: f64 },
}

fn point(a: [f64; 3]) -> Point3 {
    Point3::new(a[0], a[1], a[2])
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<(Self, Scenario), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let file: ScenarioFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let scenario = file.to_scenario()?;
        Ok((file, scenario))
    }

    /// Validates every geometric invariant and builds the scenario.
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        if self.version != FORMAT_VERSION {
            return Err(CliError::Input(format!(
                "unsupported scenario version {} (expected {FORMAT_VERSION})",
                self.version
            )));
        }
        let cameras = self
            .cameras
            .iter()
            .map(|c| {
                let center = point(c.center);
                let rotation = match &c.rotation {
                    RotationEntry::RowMajor(m) => Rotation3::from_matrix(Matrix3::from_row_slice(m)),
                    RotationEntry::LookAt { look_at, up } => {
                        Rotation3::look_at(&center, &point(*look_at), &Vector3::from(*up))
                    }
                }
                .map_err(|e| CliError::Input(format!("camera {}: {e}", c.id)))?;
                Ok(CameraModel::new(CameraId(c.id), center, rotation, c.focal, c.sigma)?)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let room = Room::new(point(self.room.min), point(self.room.max))?;
        let policy = match self.m_policy {
            MPolicyEntry::Limit => MPolicy::Limit,
            MPolicyEntry::Finite { m } => MPolicy::Finite(m),
            MPolicyEntry::FiniteDefault => MPolicy::default_finite(room.max_side(), cameras.len()),
        };
        let visibility = match self.visibility {
            None | Some(VisibilityEntry::InFront) => Visibility::InFront,
            Some(VisibilityEntry::Sensor { half_width, half_height }) => {
                if !(half_width > 0.0 && half_height > 0.0) {
                    return Err(CliError::Input("sensor half extents must be positive".into()));
                }
                Visibility::Sensor { half_width, half_height }
            }
        };
        Ok(Scenario::new(cameras, room, policy, self.seed)?.with_visibility(visibility))
    }

    /// Canonical serialization: fixed field order, no whitespace.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("scenario files always serialize")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_bytes()))
    }

    /// Ring document with look-at rotations.
    pub fn ring(m: usize, radius: f64, height: f64, focal: f64, sigma: f64, policy: MPolicyEntry, seed: u64) -> Result<Self, CliError> {
        let scenario = mocapvar::scenario::ring_scenario(m, radius, height, focal, sigma)?;
        let target = [0.0, 0.0, height];
        Ok(ScenarioFile {
            version: FORMAT_VERSION,
            cameras: scenario
                .cameras()
                .iter()
                .map(|c| CameraEntry {
                    id: c.id.0,
                    center: [c.center.x, c.center.y, c.center.z],
                    rotation: RotationEntry::LookAt { look_at: target, up: [0.0, 0.0, 1.0] },
                    focal,
                    sigma,
                })
                .collect(),
            room: RoomEntry {
                min: scenario.room.min.coords.into(),
                max: scenario.room.max.coords.into(),
            },
            m_policy: policy,
            seed,
            visibility: None,
        })
    }
}
