//! Time-limited slices of a coverage path and the reward they earn.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::coverage::CoveragePath;
use crate::error::{Error, Result};
use crate::model::{Pose, Structure};
use crate::motion::lerp;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPose {
    pub pose: Pose,
    /// Seconds from the start of the enclosing path.
    pub time: f64,
}

/// Consecutive points of a coverage path starting at `entry_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubPath {
    pub entry_index: usize,
    /// Seconds.
    pub duration: f64,
    /// Starts at the entry pose (time 0); may end on an interpolated pose.
    pub waypoints: Vec<TimedPose>,
    /// Path points fully reached, in visiting order.
    pub credited_points: Vec<usize>,
    /// Union of the faces covered by the credited points, sorted.
    pub credited_faces: Vec<usize>,
}

impl SubPath {
    pub fn entry_pose(&self) -> Pose {
        self.waypoints[0].pose
    }

    pub fn exit_pose(&self) -> Pose {
        self.waypoints.last().expect("subpath has an entry").pose
    }
}

/// Walks `path` from `entry_index` for `duration` seconds, wrapping around on
/// cycles. The walk stops on an interpolated pose when time runs out
/// mid-segment; that pose earns no face credit. An open path that runs out of
/// points before `duration` ends early.
pub fn extract_subpath(path: &CoveragePath, entry_index: usize, duration: f64) -> Result<SubPath> {
    let m = path.len();
    if entry_index >= m {
        return Err(Error::invalid(
            "entry_index",
            format!("{entry_index} out of range for {m} points"),
        ));
    }
    if !(duration >= 0.0) || duration > path.total_duration + TIME_EPS {
        return Err(Error::DurationExceeded {
            requested: duration,
            available: path.total_duration,
        });
    }
    let max_steps = if path.is_cycle { m } else { m - 1 - entry_index };

    let mut waypoints = vec![TimedPose {
        pose: path.points[entry_index].pose,
        time: 0.0,
    }];
    let mut credited_points = vec![entry_index];
    let mut remaining = duration;
    let mut elapsed = 0.0;
    let mut at = entry_index;
    for _ in 0..max_steps {
        if remaining <= TIME_EPS {
            break;
        }
        let seg = path.segment_duration(at);
        let next = (at + 1) % m;
        if seg <= remaining + TIME_EPS {
            remaining -= seg;
            elapsed += seg;
            waypoints.push(TimedPose {
                pose: path.points[next].pose,
                time: elapsed,
            });
            credited_points.push(next);
            at = next;
        } else {
            let fraction = remaining / seg;
            elapsed += remaining;
            waypoints.push(TimedPose {
                pose: lerp(&path.points[at].pose, &path.points[next].pose, fraction),
                time: elapsed,
            });
            break;
        }
    }

    let credited_faces: BTreeSet<usize> = credited_points
        .iter()
        .flat_map(|&p| path.points[p].covered_faces.iter().copied())
        .collect();
    Ok(SubPath {
        entry_index,
        duration: elapsed,
        waypoints,
        credited_points,
        credited_faces: credited_faces.into_iter().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reward {
    /// Covered area, m².
    pub covered_area: f64,
    /// Covered area over the structure's coverable area, in `[0, 1]`.
    pub coverage_ratio: f64,
    /// Importance weight times covered area.
    pub reward: f64,
}

/// Reward of a subpath of `path`, the full-coverage path of `structure`.
pub fn compute_reward(structure: &Structure, path: &CoveragePath, subpath: &SubPath) -> Reward {
    let coverable = structure.mesh.area_of(&path.covered_union());
    reward_with_denominator(structure, coverable, subpath)
}

pub(crate) fn reward_with_denominator(
    structure: &Structure,
    coverable_area: f64,
    subpath: &SubPath,
) -> Reward {
    let covered_area = structure.mesh.area_of(&subpath.credited_faces);
    let coverage_ratio = if coverable_area > 0.0 {
        (covered_area / coverable_area).min(1.0)
    } else {
        0.0
    };
    Reward {
        covered_area,
        coverage_ratio,
        reward: structure.weight * covered_area,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::Viewpoint;
    use crate::model::TriMesh;

    /// Points 2 m apart on a line, each covering its own face of a strip mesh.
    fn strip(points: usize, is_cycle: bool) -> (Structure, CoveragePath) {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for k in 0..points {
            let x = 2.0 * k as f64;
            let b = vertices.len();
            vertices.extend([[x, 0., 0.], [x + 1.0, 0., 0.], [x, 0., 1.0 + k as f64]]);
            faces.push([b, b + 1, b + 2]);
        }
        let mesh = TriMesh::new(vertices, faces).unwrap();
        let structure = Structure::new("strip", mesh, 0.25).unwrap();
        let pts: Vec<Viewpoint> = (0..points)
            .map(|k| Viewpoint {
                pose: Pose::new(2.0 * k as f64, -3.0, 0.0, std::f64::consts::FRAC_PI_2).unwrap(),
                generating_face: Some(k),
                covered_faces: vec![k],
            })
            .collect();
        let times = (0..points).map(|k| 2.0 * k as f64).collect();
        let last = 2.0 * (points - 1) as f64;
        let path = CoveragePath {
            structure_id: "strip".into(),
            points: pts,
            cumulative_times: times,
            total_duration: if is_cycle { 2.0 * last } else { last },
            is_cycle,
        };
        (structure, path)
    }

    #[test]
    fn whole_path_earns_everything() {
        let (s, path) = strip(5, true);
        let sub = extract_subpath(&path, 0, path.total_duration).unwrap();
        assert_eq!(sub.credited_faces, vec![0, 1, 2, 3, 4]);
        let r = compute_reward(&s, &path, &sub);
        assert!((r.coverage_ratio - 1.0).abs() < 1e-12);
        assert!((r.reward - 0.25 * s.mesh.area()).abs() < 1e-12);
        // any entry works on a cycle
        let sub = extract_subpath(&path, 3, path.total_duration).unwrap();
        assert_eq!(sub.credited_faces, vec![0, 1, 2, 3, 4]);
        assert!((sub.duration - path.total_duration).abs() < 1e-9);
    }

    #[test]
    fn zero_duration_credits_the_entry() {
        let (s, path) = strip(5, true);
        let sub = extract_subpath(&path, 2, 0.0).unwrap();
        assert_eq!(sub.waypoints.len(), 1);
        assert_eq!(sub.credited_faces, vec![2]);
        let r = compute_reward(&s, &path, &sub);
        assert!((r.covered_area - s.mesh.face(2).unwrap().area).abs() < 1e-12);
    }

    #[test]
    fn partial_walk_interpolates_the_end() {
        let (_, path) = strip(5, false);
        let sub = extract_subpath(&path, 0, 5.0).unwrap();
        assert_eq!(sub.credited_points, vec![0, 1, 2]);
        assert_eq!(sub.waypoints.len(), 4);
        let end = sub.exit_pose();
        assert!((end.x - 5.0).abs() < 1e-12);
        assert!((sub.duration - 5.0).abs() < 1e-12);
    }

    #[test]
    fn cycles_wrap_open_paths_stop() {
        let (_, cycle) = strip(4, true);
        let sub = extract_subpath(&cycle, 3, 7.0).unwrap();
        // 3 -> 0 takes 6 s, then 1 s toward point 1
        assert_eq!(sub.credited_points, vec![3, 0]);
        assert!((sub.duration - 7.0).abs() < 1e-12);

        let (_, open) = strip(4, false);
        let sub = extract_subpath(&open, 2, 5.0).unwrap();
        assert_eq!(sub.credited_points, vec![2, 3]);
        assert!((sub.duration - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_requests() {
        let (_, path) = strip(3, true);
        assert!(extract_subpath(&path, 3, 0.0).is_err());
        assert!(matches!(
            extract_subpath(&path, 0, path.total_duration + 1.0),
            Err(Error::DurationExceeded { .. })
        ));
        assert!(extract_subpath(&path, 0, -1.0).is_err());
    }

    #[test]
    fn weighted_reward() {
        // weight 0.25 over 40 m² of credited faces
        let mesh = TriMesh::new(
            vec![[0., 0., 0.], [10., 0., 0.], [0., 0., 8.]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let s = Structure::new("w", mesh, 0.25).unwrap();
        let sub = SubPath {
            entry_index: 0,
            duration: 0.0,
            waypoints: vec![TimedPose {
                pose: Pose::new(0., 0., 0., 0.).unwrap(),
                time: 0.0,
            }],
            credited_points: vec![0],
            credited_faces: vec![0],
        };
        let r = reward_with_denominator(&s, 40.0, &sub);
        assert!((r.reward - 10.0).abs() < 1e-12);
        assert!((r.coverage_ratio - 1.0).abs() < 1e-12);
    }
}
