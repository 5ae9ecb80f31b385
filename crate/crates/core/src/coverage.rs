//! Full-coverage paths for a single structure.
//!
//! One viewpoint is synthesized per face, looking at the face centroid along
//! the camera's optical axis. Faces that no viewpoint can observe within the
//! incidence and range limits are *uncoverable* and are left out of every
//! coverage denominator. Viewpoints are ordered into a closed tour at the
//! inspection speed.
//!
//! Paths computed elsewhere can be brought in through
//! [`ingest_coverage_path`], which validates face indices and re-times the
//! records with the boundary value solver.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Point3, Pose, SensorConfig, Structure, TriMesh, VehicleConfig};
use crate::motion::segment_time;
use crate::tsp::{solve_tsp, CostMatrix};

/// Relative slack before an ingested timing counts as inconsistent.
pub const INGEST_TIMING_TOLERANCE: f64 = 0.05;
const GEOMETRY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub pose: Pose,
    /// Face this viewpoint was synthesized for, when known.
    pub generating_face: Option<usize>,
    /// Sorted, unique.
    pub covered_faces: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveragePath {
    pub structure_id: String,
    pub points: Vec<Viewpoint>,
    /// Arrival time at each point, starting at 0.
    pub cumulative_times: Vec<f64>,
    /// Includes the closing segment when `is_cycle`.
    pub total_duration: f64,
    pub is_cycle: bool,
}

impl CoveragePath {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Duration of the segment leaving point `k`; the last point's segment
    /// closes the cycle (zero for open paths).
    pub fn segment_duration(&self, k: usize) -> f64 {
        if k + 1 < self.points.len() {
            self.cumulative_times[k + 1] - self.cumulative_times[k]
        } else if self.is_cycle {
            self.total_duration - self.cumulative_times[k]
        } else {
            0.0
        }
    }

    pub fn covered_union(&self) -> BTreeSet<usize> {
        self.points
            .iter()
            .flat_map(|p| p.covered_faces.iter().copied())
            .collect()
    }
}

/// Unit optical axis for a heading and a fixed camera pitch.
pub fn optical_axis(yaw: f64, pitch: f64) -> Point3 {
    Point3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin())
}

/// Camera placement for one face, or `None` when the face is uncoverable.
pub fn synthesize_viewpoint(
    mesh: &TriMesh,
    face: usize,
    sensor: &SensorConfig,
) -> Result<Option<Viewpoint>> {
    let info = mesh.face(face)?;
    let inward = -info.normal;
    let yaw = if inward.xy().norm() > GEOMETRY_EPS {
        inward.y.atan2(inward.x)
    } else {
        0.0
    };
    let axis = optical_axis(yaw, sensor.camera_pitch);
    let incidence = axis.dot(&inward).clamp(-1.0, 1.0).acos();
    if incidence > sensor.incidence_tolerance + GEOMETRY_EPS {
        return Ok(None);
    }
    let Some(standoff) = standoff_distance(info.circumradius, sensor) else {
        return Ok(None);
    };
    let pose = Pose::from_point(&(info.centroid - standoff * axis), yaw);
    let mut covered_faces = visible_faces(&pose, mesh, sensor);
    if let Err(pos) = covered_faces.binary_search(&face) {
        // the generating face sits on the optical axis at the chosen range
        debug_assert!(false, "face {face} not visible from its own viewpoint");
        covered_faces.insert(pos, face);
    }
    Ok(Some(Viewpoint {
        pose,
        generating_face: Some(face),
        covered_faces,
    }))
}

/// Distance at which a circle of radius `r` fills the narrower half-FoV,
/// clamped to the sensor range. `None` if it does not fit within `range_max`.
pub fn standoff_distance(r: f64, sensor: &SensorConfig) -> Option<f64> {
    let half = 0.5 * sensor.fov_h.min(sensor.fov_v);
    let needed = r / half.tan();
    (needed <= sensor.range_max).then(|| needed.max(sensor.range_min))
}

/// Faces whose centroid is in range, inside both half-angles and front-facing.
/// Occlusion is not tested. Returned sorted.
pub fn visible_faces(pose: &Pose, mesh: &TriMesh, sensor: &SensorConfig) -> Vec<usize> {
    let forward = optical_axis(pose.psi, sensor.camera_pitch);
    let right = Point3::new(pose.psi.sin(), -pose.psi.cos(), 0.0);
    let up = right.cross(&forward);
    let eye = pose.position();
    let (half_h, half_v) = (0.5 * sensor.fov_h, 0.5 * sensor.fov_v);
    mesh.face_info()
        .iter()
        .enumerate()
        .filter(|(_, f)| {
            let ray = f.centroid - eye;
            let dist = ray.norm();
            if dist < sensor.range_min - GEOMETRY_EPS || dist > sensor.range_max + GEOMETRY_EPS {
                return false;
            }
            let depth = ray.dot(&forward);
            if depth <= 0.0 {
                return false;
            }
            ray.dot(&right).abs().atan2(depth) <= half_h + GEOMETRY_EPS
                && ray.dot(&up).abs().atan2(depth) <= half_v + GEOMETRY_EPS
                && f.normal.dot(&ray) < 0.0
        })
        .map(|(i, _)| i)
        .collect()
}

/// Faces of `mesh` for which [`synthesize_viewpoint`] succeeds.
pub fn coverable_faces(mesh: &TriMesh, sensor: &SensorConfig) -> Vec<usize> {
    (0..mesh.face_count())
        .filter(|&f| matches!(synthesize_viewpoint(mesh, f, sensor), Ok(Some(_))))
        .collect()
}

/// Closed full-coverage tour of a structure at inspection speed.
pub fn plan_coverage(
    structure: &Structure,
    sensor: &SensorConfig,
    vehicle: &VehicleConfig,
    seed: u64,
) -> Result<CoveragePath> {
    let mesh = &structure.mesh;
    let mut viewpoints = Vec::new();
    for face in 0..mesh.face_count() {
        if let Some(vp) = synthesize_viewpoint(mesh, face, sensor)? {
            viewpoints.push(vp);
        }
    }
    if viewpoints.is_empty() {
        return Err(Error::NothingCoverable(structure.id.clone()));
    }
    let coverable: BTreeSet<usize> = viewpoints.iter().filter_map(|v| v.generating_face).collect();
    for vp in &mut viewpoints {
        vp.covered_faces.retain(|f| coverable.contains(f));
    }

    let nodes: Vec<(Pose, Pose)> = viewpoints.iter().map(|v| (v.pose, v.pose)).collect();
    let matrix = CostMatrix::from_poses(&nodes, vehicle.v_inspect, vehicle.yaw_rate_max);
    let tour = solve_tsp(&matrix, true, seed);
    let points: Vec<Viewpoint> = tour.order.iter().map(|&i| viewpoints[i].clone()).collect();
    let poses: Vec<Pose> = points.iter().map(|p| p.pose).collect();
    let (cumulative_times, total_duration) = retime(&poses, true, vehicle);
    Ok(CoveragePath {
        structure_id: structure.id.clone(),
        points,
        cumulative_times,
        total_duration,
        is_cycle: true,
    })
}

/// Arrival times under the boundary value solver at inspection speed.
fn retime(poses: &[Pose], is_cycle: bool, vehicle: &VehicleConfig) -> (Vec<f64>, f64) {
    let seg = |a: &Pose, b: &Pose| segment_time(a, b, vehicle.v_inspect, vehicle.yaw_rate_max);
    let mut times = Vec::with_capacity(poses.len());
    let mut t = 0.0;
    for (k, pose) in poses.iter().enumerate() {
        if k > 0 {
            t += seg(&poses[k - 1], pose);
        }
        times.push(t);
    }
    let total = match (is_cycle, poses.first(), poses.last()) {
        (true, Some(first), Some(last)) if poses.len() > 1 => t + seg(last, first),
        _ => t,
    };
    (times, total)
}

/// One point of an externally computed coverage path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub psi: f64,
    pub cumulative_time: f64,
    pub covered_face_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generating_face: Option<usize>,
}

impl CoverageRecord {
    pub fn from_path(path: &CoveragePath) -> Vec<CoverageRecord> {
        path.points
            .iter()
            .zip(&path.cumulative_times)
            .map(|(p, &t)| CoverageRecord {
                x: p.pose.x,
                y: p.pose.y,
                z: p.pose.z,
                psi: p.pose.psi,
                cumulative_time: t,
                covered_face_indices: p.covered_faces.clone(),
                generating_face: p.generating_face,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestedPath {
    pub path: CoveragePath,
    /// Segments whose recorded timing was off by more than the tolerance.
    pub warnings: Vec<String>,
}

/// Validates an external coverage path and re-times it with the boundary
/// value solver. Timing deviations beyond [`INGEST_TIMING_TOLERANCE`]
/// produce a warning; the output always carries solver timing.
pub fn ingest_coverage_path(
    structure: &Structure,
    records: &[CoverageRecord],
    is_cycle: bool,
    vehicle: &VehicleConfig,
) -> Result<IngestedPath> {
    let id = &structure.id;
    let fail = |reason: String| Error::InvalidCoveragePath {
        id: id.clone(),
        reason,
    };
    if records.is_empty() {
        return Err(fail("no records".into()));
    }
    let face_count = structure.mesh.face_count();
    let mut points = Vec::with_capacity(records.len());
    for (k, rec) in records.iter().enumerate() {
        if !rec.cumulative_time.is_finite() || rec.cumulative_time < 0.0 {
            return Err(fail(format!("record {k}: bad time {}", rec.cumulative_time)));
        }
        if k > 0 && rec.cumulative_time < records[k - 1].cumulative_time {
            return Err(fail(format!("record {k}: time goes backwards")));
        }
        let covered: BTreeSet<usize> = rec.covered_face_indices.iter().copied().collect();
        if let Some(&bad) = covered.iter().find(|&&f| f >= face_count) {
            return Err(Error::FaceIndex {
                index: bad,
                count: face_count,
            });
        }
        if let Some(g) = rec.generating_face {
            if !covered.contains(&g) {
                return Err(fail(format!("record {k}: generating face {g} not covered")));
            }
        }
        points.push(Viewpoint {
            pose: Pose::new(rec.x, rec.y, rec.z, rec.psi)?,
            generating_face: rec.generating_face,
            covered_faces: covered.into_iter().collect(),
        });
    }

    let poses: Vec<Pose> = points.iter().map(|p| p.pose).collect();
    let (cumulative_times, total_duration) = retime(&poses, is_cycle, vehicle);
    let mut warnings = Vec::new();
    for k in 1..records.len() {
        let given = records[k].cumulative_time - records[k - 1].cumulative_time;
        let solved = cumulative_times[k] - cumulative_times[k - 1];
        if (given - solved).abs() > INGEST_TIMING_TOLERANCE * solved + GEOMETRY_EPS {
            warnings.push(format!(
                "{id}: segment {}->{k} recorded {given:.3} s, solver gives {solved:.3} s",
                k - 1
            ));
        }
    }
    Ok(IngestedPath {
        path: CoveragePath {
            structure_id: id.clone(),
            points,
            cumulative_times,
            total_duration,
            is_cycle,
        },
        warnings,
    })
}
