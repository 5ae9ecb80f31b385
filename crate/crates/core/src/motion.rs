//! Two-state boundary value solver for a rotorcraft.
//!
//! Poses are joined by a straight line in position and the short arc in
//! yaw, both executed simultaneously. The segment lasts as long as the
//! slower of the two motions at its limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{angular_distance, wrap_angle, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedSegment {
    pub start: Pose,
    pub end: Pose,
    pub duration: f64,
    pub speed_limit_used: f64,
}

impl TimedSegment {
    pub fn new(start: Pose, end: Pose, speed: f64, yaw_rate_max: f64) -> Result<Self> {
        Ok(TimedSegment {
            start,
            end,
            duration: travel_time(&start, &end, speed, yaw_rate_max)?,
            speed_limit_used: speed,
        })
    }
}

/// Pose at fraction `s` of the way from `from` to `to`.
pub fn interpolate(from: &Pose, to: &Pose, s: f64) -> Result<Pose> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::invalid("s", format!("{s} not in [0, 1]")));
    }
    Ok(lerp(from, to, s))
}

pub(crate) fn lerp(from: &Pose, to: &Pose, s: f64) -> Pose {
    if s == 0.0 {
        return *from;
    }
    if s == 1.0 {
        return *to;
    }
    let dpsi = wrap_angle(to.psi - from.psi);
    Pose {
        x: from.x + s * (to.x - from.x),
        y: from.y + s * (to.y - from.y),
        z: from.z + s * (to.z - from.z),
        psi: wrap_angle(from.psi + s * dpsi),
    }
}

/// Execution time between two poses: `max(distance / speed, yaw distance / yaw rate)`.
pub fn travel_time(from: &Pose, to: &Pose, speed: f64, yaw_rate_max: f64) -> Result<f64> {
    if !(speed.is_finite() && speed > 0.0) {
        return Err(Error::invalid("speed", format!("{speed} is not > 0")));
    }
    if !(yaw_rate_max.is_finite() && yaw_rate_max > 0.0) {
        return Err(Error::invalid("yaw_rate_max", format!("{yaw_rate_max} is not > 0")));
    }
    Ok(segment_time(from, to, speed, yaw_rate_max))
}

/// `travel_time` without limit checks, for callers holding validated configs.
pub(crate) fn segment_time(from: &Pose, to: &Pose, speed: f64, yaw_rate_max: f64) -> f64 {
    let translate = from.distance(to) / speed;
    let turn = angular_distance(from.psi, to.psi) / yaw_rate_max;
    translate.max(turn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn pose(x: f64, y: f64, z: f64, psi: f64) -> Pose {
        Pose::new(x, y, z, psi).unwrap()
    }

    #[test]
    fn interpolate_examples() {
        let a = pose(0., 0., 0., 0.);
        let b = pose(2., 0., 0., FRAC_PI_2);
        assert_eq!(interpolate(&a, &b, 0.0).unwrap(), a);
        assert_eq!(interpolate(&a, &b, 1.0).unwrap(), b);
        let mid = interpolate(&a, &b, 0.5).unwrap();
        assert!((mid.x - 1.0).abs() < 1e-15 && mid.y == 0.0 && mid.z == 0.0);
        assert!((mid.psi - FRAC_PI_4).abs() < 1e-15);
        assert!(interpolate(&a, &b, 1.5).is_err());
        assert!(interpolate(&a, &b, -0.1).is_err());
    }

    #[test]
    fn interpolation_crosses_the_seam_the_short_way() {
        let a = pose(0., 0., 0., 3.0);
        let b = pose(0., 0., 0., -3.0);
        let mid = interpolate(&a, &b, 0.5).unwrap();
        assert!((mid.psi.abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn travel_time_examples() {
        let a = pose(1., 2., 3., 0.4);
        assert_eq!(travel_time(&a, &a, 3.0, 0.5).unwrap(), 0.0);
        let b = pose(4., 2., 3., 0.4);
        assert!((travel_time(&a, &b, 3.0, 0.5).unwrap() - 1.0).abs() < 1e-12);
        let c = pose(0., 0., 0., 0.);
        let d = pose(0.1, 0., 0., PI);
        assert!((travel_time(&c, &d, 3.0, 0.5).unwrap() - PI / 0.5).abs() < 1e-12);
        assert!(travel_time(&c, &d, 0.0, 0.5).is_err());
        assert!(travel_time(&c, &d, 3.0, -1.0).is_err());
    }

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (-50.0f64..50.0, -50.0f64..50.0, 0.0f64..30.0, -PI..PI)
            .prop_map(|(x, y, z, psi)| Pose::new(x, y, z, psi).unwrap())
    }

    proptest! {
        #[test]
        fn travel_time_properties(a in arb_pose(), b in arb_pose(), v in 0.1f64..10.0, w in 0.1f64..2.0, dv in 0.0f64..5.0) {
            let t = travel_time(&a, &b, v, w).unwrap();
            prop_assert_eq!(t, travel_time(&b, &a, v, w).unwrap());
            let lin = a.distance(&b) / v;
            let ang = angular_distance(a.psi, b.psi) / w;
            prop_assert!(t >= lin && t >= ang);
            prop_assert!(t == lin || t == ang);
            prop_assert!(travel_time(&a, &b, v + dv, w).unwrap() <= t);
        }

        #[test]
        fn partial_segments_scale_linearly(a in arb_pose(), b in arb_pose(), s in 0.0f64..1.0) {
            let full = segment_time(&a, &b, 1.5, 0.5);
            let part = segment_time(&a, &lerp(&a, &b, s), 1.5, 0.5);
            prop_assert!((part - s * full).abs() < 1e-9);
        }
    }
}
