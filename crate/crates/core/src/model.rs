//! Geometry and configuration types shared across the planner.
//!
//! Everything here is immutable once constructed. Meshes are always in the
//! world frame: a structure's placement is applied to its vertices when the
//! structure is built, so no consumer has to track frames.

use std::f64::consts::{PI, TAU};

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = Vector3<f64>;

/// Wraps an angle into `(-π, π]`.
pub fn normalize_yaw(psi: f64) -> Result<f64> {
    if !psi.is_finite() {
        return Err(Error::invalid("psi", format!("non-finite yaw {psi}")));
    }
    Ok(wrap_angle(psi))
}

pub(crate) fn wrap_angle(psi: f64) -> f64 {
    let r = psi.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Shortest angular distance between two headings, in `[0, π]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (b - a).abs().rem_euclid(TAU);
    d.min(TAU - d)
}

/// Position plus heading of a rotorcraft. Roll and pitch are taken as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPose")]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub psi: f64,
}

#[derive(Deserialize)]
struct RawPose {
    x: f64,
    y: f64,
    z: f64,
    psi: f64,
}

impl TryFrom<RawPose> for Pose {
    type Error = Error;

    fn try_from(raw: RawPose) -> Result<Self> {
        Pose::new(raw.x, raw.y, raw.z, raw.psi)
    }
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, psi: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::invalid("pose", "non-finite position"));
        }
        Ok(Pose {
            x,
            y,
            z,
            psi: normalize_yaw(psi)?,
        })
    }

    pub(crate) fn from_point(p: &Point3, psi: f64) -> Self {
        Pose {
            x: p.x,
            y: p.y,
            z: p.z,
            psi: wrap_angle(psi),
        }
    }

    pub fn position(&self) -> Point3 {
        Point3::new(self.x, self.y, self.z)
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (self.position() - other.position()).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceInfo {
    pub centroid: Point3,
    pub normal: Point3,
    pub area: f64,
    /// Radius of the face's circumscribed circle.
    pub circumradius: f64,
}

/// Triangle mesh with per-face geometry precomputed at validation.
///
/// Face winding is counter-clockwise when seen from outside, so the
/// right-hand normal points outward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMesh", into = "RawMesh")]
pub struct TriMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    info: Vec<FaceInfo>,
    total_area: f64,
}

#[derive(Serialize, Deserialize)]
struct RawMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

impl TryFrom<RawMesh> for TriMesh {
    type Error = Error;

    fn try_from(raw: RawMesh) -> Result<Self> {
        TriMesh::new(raw.vertices, raw.faces)
    }
}

impl From<TriMesh> for RawMesh {
    fn from(mesh: TriMesh) -> Self {
        RawMesh {
            vertices: mesh.vertices,
            faces: mesh.faces,
        }
    }
}

impl TriMesh {
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        if let Some(v) = vertices.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not finite")));
        }
        let mut info = Vec::with_capacity(faces.len());
        for (f, tri) in faces.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "face {f} references vertex {bad}, mesh has {}",
                    vertices.len()
                )));
            }
            let [a, b, c] = tri.map(|i| Point3::from(vertices[i]));
            let cross = (b - a).cross(&(c - a));
            let twice_area = cross.norm();
            let scale = (b - a).norm() * (c - a).norm();
            if !(twice_area > 1e-12 * scale) {
                return Err(Error::InvalidMesh(format!("face {f} has zero area")));
            }
            let (ab, bc, ca) = ((b - a).norm(), (c - b).norm(), (a - c).norm());
            info.push(FaceInfo {
                centroid: (a + b + c) / 3.0,
                normal: cross / twice_area,
                area: 0.5 * twice_area,
                circumradius: ab * bc * ca / (2.0 * twice_area),
            });
        }
        let total_area = info.iter().map(|f| f.area).sum();
        Ok(TriMesh {
            vertices,
            faces,
            info,
            total_area,
        })
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn face(&self, index: usize) -> Result<&FaceInfo> {
        self.info.get(index).ok_or(Error::FaceIndex {
            index,
            count: self.faces.len(),
        })
    }

    pub fn face_info(&self) -> &[FaceInfo] {
        &self.info
    }

    /// Area of the whole mesh in m².
    pub fn area(&self) -> f64 {
        self.total_area
    }

    /// Sum of the areas of the given faces, each counted once.
    pub fn area_of<'a>(&self, faces: impl IntoIterator<Item = &'a usize>) -> f64 {
        faces.into_iter().map(|&f| self.info[f].area).sum()
    }

    /// Rotates about +z by `pose.psi`, then translates by the pose position.
    pub fn transformed(&self, pose: &Pose) -> Result<TriMesh> {
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), pose.psi);
        let offset = pose.position();
        let vertices = self
            .vertices
            .iter()
            .map(|v| (rot * Point3::from(*v) + offset).into())
            .collect();
        TriMesh::new(vertices, self.faces.clone())
    }

    /// Axis-aligned bounds as `(min, max)`.
    pub fn bounds(&self) -> (Point3, Point3) {
        let mut lo = Point3::repeat(f64::INFINITY);
        let mut hi = Point3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            let p = Point3::from(*v);
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        (lo, hi)
    }
}

/// Convenience wrapper for the area of a validated mesh.
pub fn mesh_area(mesh: &TriMesh) -> f64 {
    mesh.area()
}

/// One facility to inspect: a world-frame mesh and its importance weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStructure")]
pub struct Structure {
    pub id: String,
    pub mesh: TriMesh,
    pub weight: f64,
}

#[derive(Deserialize)]
struct RawStructure {
    id: String,
    mesh: TriMesh,
    weight: f64,
}

impl TryFrom<RawStructure> for Structure {
    type Error = Error;

    fn try_from(raw: RawStructure) -> Result<Self> {
        Structure::new(raw.id, raw.mesh, raw.weight)
    }
}

impl Structure {
    pub fn new(id: impl Into<String>, mesh: TriMesh, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::invalid("weight", format!("{weight} is not >= 0")));
        }
        Ok(Structure {
            id: id.into(),
            mesh,
            weight,
        })
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{value} is not > 0")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVehicle")]
pub struct VehicleConfig {
    /// Transit speed between structures, m/s.
    pub v_travel: f64,
    /// Speed along coverage paths, m/s.
    pub v_inspect: f64,
    /// rad/s
    pub yaw_rate_max: f64,
}

#[derive(Deserialize)]
struct RawVehicle {
    v_travel: f64,
    v_inspect: f64,
    yaw_rate_max: f64,
}

impl TryFrom<RawVehicle> for VehicleConfig {
    type Error = Error;

    fn try_from(r: RawVehicle) -> Result<Self> {
        VehicleConfig::new(r.v_travel, r.v_inspect, r.yaw_rate_max)
    }
}

impl VehicleConfig {
    pub fn new(v_travel: f64, v_inspect: f64, yaw_rate_max: f64) -> Result<Self> {
        positive("v_travel", v_travel)?;
        positive("v_inspect", v_inspect)?;
        positive("yaw_rate_max", yaw_rate_max)?;
        Ok(VehicleConfig {
            v_travel,
            v_inspect,
            yaw_rate_max,
        })
    }
}

impl Default for VehicleConfig {
    fn default() -> Self {
        VehicleConfig {
            v_travel: 3.0,
            v_inspect: 1.0,
            yaw_rate_max: 0.5,
        }
    }
}

/// Camera model. `fov_h`/`fov_v` are full opening angles; the visibility
/// test uses half of each. `camera_pitch` is the elevation of the optical
/// axis (negative looks down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSensor")]
pub struct SensorConfig {
    pub fov_h: f64,
    pub fov_v: f64,
    pub range_min: f64,
    pub range_max: f64,
    pub camera_pitch: f64,
    /// Largest allowed angle between the optical axis and the inward face normal.
    pub incidence_tolerance: f64,
}

#[derive(Deserialize)]
struct RawSensor {
    fov_h: f64,
    fov_v: f64,
    range_min: f64,
    range_max: f64,
    camera_pitch: f64,
    #[serde(default = "default_incidence")]
    incidence_tolerance: f64,
}

fn default_incidence() -> f64 {
    60f64.to_radians()
}

impl TryFrom<RawSensor> for SensorConfig {
    type Error = Error;

    fn try_from(r: RawSensor) -> Result<Self> {
        SensorConfig::new(r.fov_h, r.fov_v, r.range_min, r.range_max, r.camera_pitch)?
            .with_incidence_tolerance(r.incidence_tolerance)
    }
}

impl SensorConfig {
    pub fn new(
        fov_h: f64,
        fov_v: f64,
        range_min: f64,
        range_max: f64,
        camera_pitch: f64,
    ) -> Result<Self> {
        for (field, fov) in [("fov_h", fov_h), ("fov_v", fov_v)] {
            if !(fov > 0.0 && fov < PI) {
                return Err(Error::invalid(field, format!("{fov} not in (0, π)")));
            }
        }
        if !(range_min > 0.0 && range_min < range_max && range_max.is_finite()) {
            return Err(Error::invalid(
                "range",
                format!("need 0 < range_min < range_max, got [{range_min}, {range_max}]"),
            ));
        }
        if !(camera_pitch.is_finite() && camera_pitch.abs() <= PI / 2.0) {
            return Err(Error::invalid("camera_pitch", format!("{camera_pitch}")));
        }
        Ok(SensorConfig {
            fov_h,
            fov_v,
            range_min,
            range_max,
            camera_pitch,
            incidence_tolerance: default_incidence(),
        })
    }

    pub fn with_incidence_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance < PI / 2.0) {
            return Err(Error::invalid(
                "incidence_tolerance",
                format!("{tolerance} not in (0, π/2)"),
            ));
        }
        self.incidence_tolerance = tolerance;
        Ok(self)
    }
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            fov_h: 65f64.to_radians(),
            fov_v: 65f64.to_radians(),
            range_min: 1.0,
            range_max: 15.0,
            camera_pitch: (-35f64).to_radians(),
            incidence_tolerance: default_incidence(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMission")]
pub struct MissionConfig {
    /// Mission time budget, seconds.
    pub t_max: f64,
    /// Whether the route returns to its starting pose.
    pub closed_route: bool,
    pub iterations: usize,
    pub rng_seed: u64,
    /// Per-structure inclusion probability when sampling subsets.
    pub inclusion_probability: f64,
}

#[derive(Deserialize)]
struct RawMission {
    t_max: f64,
    closed_route: bool,
    iterations: usize,
    rng_seed: u64,
    #[serde(default = "default_inclusion")]
    inclusion_probability: f64,
}

fn default_inclusion() -> f64 {
    0.5
}

impl TryFrom<RawMission> for MissionConfig {
    type Error = Error;

    fn try_from(r: RawMission) -> Result<Self> {
        MissionConfig {
            t_max: r.t_max,
            closed_route: r.closed_route,
            iterations: r.iterations,
            rng_seed: r.rng_seed,
            inclusion_probability: r.inclusion_probability,
        }
        .validated()
    }
}

impl MissionConfig {
    pub fn validated(self) -> Result<Self> {
        positive("t_max", self.t_max)?;
        if self.iterations == 0 {
            return Err(Error::invalid("iterations", "must be at least 1"));
        }
        let p = self.inclusion_probability;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid("inclusion_probability", format!("{p} not in (0, 1]")));
        }
        Ok(self)
    }
}

impl Default for MissionConfig {
    fn default() -> Self {
        MissionConfig {
            t_max: 1800.0,
            closed_route: true,
            iterations: 30,
            rng_seed: 0,
            inclusion_probability: default_inclusion(),
        }
    }
}
