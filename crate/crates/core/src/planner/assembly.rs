//! Flattening the best plan into one timed, flyable path.

use serde::{Deserialize, Serialize};

use super::SampledPlan;
use crate::model::{Pose, VehicleConfig};
use crate::motion::segment_time;

/// What the vehicle does on the segment arriving at a waypoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentLabel {
    Start,
    Transit,
    Inspect { structure_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub pose: Pose,
    /// Arrival time, seconds from mission start.
    pub time: f64,
    pub segment: SegmentLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledPath {
    pub points: Vec<PathPoint>,
    pub total_duration: f64,
}

impl AssembledPath {
    /// Largest gap between stored segment durations and the boundary value
    /// solver at each segment's speed limit.
    pub fn max_timing_error(&self, vehicle: &VehicleConfig) -> f64 {
        self.points
            .windows(2)
            .map(|w| {
                let speed = match w[1].segment {
                    SegmentLabel::Transit => vehicle.v_travel,
                    _ => vehicle.v_inspect,
                };
                let expected = segment_time(&w[0].pose, &w[1].pose, speed, vehicle.yaw_rate_max);
                ((w[1].time - w[0].time) - expected).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Subpaths in tour order joined by straight transit segments, plus the
/// return leg on closed routes.
pub fn assemble_path(plan: &SampledPlan, vehicle: &VehicleConfig) -> AssembledPath {
    let mut points: Vec<PathPoint> = Vec::new();
    let mut clock = 0.0;
    let transit = |from: &Pose, to: &Pose| segment_time(from, to, vehicle.v_travel, vehicle.yaw_rate_max);
    for visit in &plan.visits {
        let entry = visit.subpath.entry_pose();
        match points.last() {
            None => points.push(PathPoint {
                pose: entry,
                time: 0.0,
                segment: SegmentLabel::Start,
            }),
            Some(last) => {
                clock += transit(&last.pose, &entry);
                points.push(PathPoint {
                    pose: entry,
                    time: clock,
                    segment: SegmentLabel::Transit,
                });
            }
        }
        let base = clock;
        for wp in &visit.subpath.waypoints[1..] {
            clock = base + wp.time;
            points.push(PathPoint {
                pose: wp.pose,
                time: clock,
                segment: SegmentLabel::Inspect {
                    structure_id: visit.structure_id.clone(),
                },
            });
        }
    }
    if plan.closed_route {
        if let (Some(first), Some(last)) = (points.first(), points.last()) {
            let home = first.pose;
            clock += transit(&last.pose, &home);
            points.push(PathPoint {
                pose: home,
                time: clock,
                segment: SegmentLabel::Transit,
            });
        }
    }
    AssembledPath {
        points,
        total_duration: clock,
    }
}
