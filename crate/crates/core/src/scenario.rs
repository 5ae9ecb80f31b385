//! Randomized distributed-infrastructure scenarios.

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    MissionConfig, Point3, Pose, SensorConfig, Structure, TriMesh, VehicleConfig,
};

pub const PLACEMENT_ATTEMPTS: usize = 10_000;
pub const DEFAULT_MARGIN: f64 = 5.0;
const BOUNDS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub structures: Vec<Structure>,
    /// Extent of the area `[Δx, Δy, Δz]`, meters, anchored at the origin.
    pub area_bounds: [f64; 3],
    /// Minimum horizontal clearance between structure footprints, meters.
    pub margin: f64,
    pub vehicle: VehicleConfig,
    pub sensor: SensorConfig,
    pub mission: MissionConfig,
}

impl Scenario {
    /// Checks id uniqueness, containment in the area and footprint separation.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for s in &self.structures {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::invalid("structures", format!("duplicate id '{}'", s.id)));
            }
            let (lo, hi) = s.mesh.bounds();
            let inside = (0..3).all(|k| lo[k] >= -BOUNDS_EPS && hi[k] <= self.area_bounds[k] + BOUNDS_EPS);
            if !inside {
                return Err(Error::invalid(
                    "structures",
                    format!("'{}' extends outside the area", s.id),
                ));
            }
        }
        let boxes: Vec<_> = self.structures.iter().map(|s| s.mesh.bounds()).collect();
        for i in 0..boxes.len() {
            for j in 0..i {
                if footprints_overlap(&boxes[i], &boxes[j], self.margin) {
                    return Err(Error::invalid(
                        "structures",
                        format!(
                            "'{}' and '{}' are closer than {} m",
                            self.structures[i].id, self.structures[j].id, self.margin
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Mean distance over all pairs of structure bounding-box centers, meters.
    /// Zero with fewer than two structures.
    pub fn mean_pairwise_distance(&self) -> f64 {
        let centers: Vec<Point3> = self
            .structures
            .iter()
            .map(|s| {
                let (lo, hi) = s.mesh.bounds();
                (lo + hi) / 2.0
            })
            .collect();
        let n = centers.len();
        if n < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..i {
                sum += (centers[i] - centers[j]).norm();
            }
        }
        sum / (n * (n - 1) / 2) as f64
    }
}

fn footprints_overlap(a: &(Point3, Point3), b: &(Point3, Point3), margin: f64) -> bool {
    (0..2).all(|k| a.0[k] < b.1[k] + margin && b.0[k] < a.1[k] + margin)
}

/// A structure template: mesh centered on the origin, base at z = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    pub mesh: TriMesh,
    pub weight: f64,
}

/// Places `count` structures drawn from `archetypes` on the ground with random
/// yaw, rejecting placements that leave the area or crowd another footprint.
pub fn generate(
    archetypes: &[Archetype],
    count: usize,
    bounds: [f64; 3],
    margin: f64,
    rng: &mut impl Rng,
) -> Result<Scenario> {
    if count == 0 {
        return Err(Error::invalid("count", "must be at least 1"));
    }
    if archetypes.is_empty() {
        return Err(Error::invalid("archetypes", "none given"));
    }
    if bounds.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::invalid("bounds", format!("{bounds:?} must be positive")));
    }
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::invalid("margin", format!("{margin} must be >= 0")));
    }

    let mut structures: Vec<Structure> = Vec::with_capacity(count);
    let mut footprints = Vec::with_capacity(count);
    for index in 0..count {
        let archetype = &archetypes[rng.gen_range(0..archetypes.len())];
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let yaw = rng.gen_range(-PI..PI);
            let rotated = archetype.mesh.transformed(&Pose::new(0.0, 0.0, 0.0, yaw)?)?;
            let (lo, hi) = rotated.bounds();
            let x_range = (-lo.x, bounds[0] - hi.x);
            let y_range = (-lo.y, bounds[1] - hi.y);
            if x_range.0 > x_range.1 || y_range.0 > y_range.1 || hi.z - lo.z.min(0.0) > bounds[2] {
                continue;
            }
            let dx = rng.gen_range(x_range.0..=x_range.1);
            let dy = rng.gen_range(y_range.0..=y_range.1);
            let offset = Point3::new(dx, dy, 0.0);
            let footprint = (lo + offset, hi + offset);
            if footprints.iter().any(|f| footprints_overlap(f, &footprint, margin)) {
                continue;
            }
            let mesh = rotated.transformed(&Pose::new(dx, dy, 0.0, 0.0)?)?;
            structures.push(Structure::new(
                format!("{}-{index:02}", archetype.name),
                mesh,
                archetype.weight,
            )?);
            footprints.push(footprint);
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::PlacementFailed {
                index,
                attempts: PLACEMENT_ATTEMPTS,
            });
        }
    }
    Ok(Scenario {
        structures,
        area_bounds: bounds,
        margin,
        vehicle: VehicleConfig::default(),
        sensor: SensorConfig::default(),
        mission: MissionConfig::default(),
    })
}

/// Accumulates triangles; quads are tiled into `nu × nv` cells.
#[derive(Default)]
struct MeshBuilder {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

impl MeshBuilder {
    /// Tiled parallelogram spanned by `u` and `v` from `origin`; faces point along `u × v`.
    fn quad(&mut self, origin: [f64; 3], u: [f64; 3], v: [f64; 3], nu: usize, nv: usize) {
        let (o, u, v) = (Point3::from(origin), Point3::from(u), Point3::from(v));
        let base = self.vertices.len();
        for j in 0..=nv {
            for i in 0..=nu {
                let p = o + u * (i as f64 / nu as f64) + v * (j as f64 / nv as f64);
                self.vertices.push(p.into());
            }
        }
        let at = |i: usize, j: usize| base + j * (nu + 1) + i;
        for j in 0..nv {
            for i in 0..nu {
                self.faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
                self.faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
            }
        }
    }

    /// Open-bottomed box with its minimum corner at `min`, walls tiled at roughly `tile` meters.
    fn box_without_floor(&mut self, min: [f64; 3], size: [f64; 3], tile: f64) {
        let [x, y, z] = min;
        let [sx, sy, sz] = size;
        let n = |len: f64| ((len / tile).ceil() as usize).max(1);
        // walls, counter-clockwise seen from outside
        self.quad([x, y, z], [sx, 0., 0.], [0., 0., sz], n(sx), n(sz));
        self.quad([x + sx, y, z], [0., sy, 0.], [0., 0., sz], n(sy), n(sz));
        self.quad([x + sx, y + sy, z], [-sx, 0., 0.], [0., 0., sz], n(sx), n(sz));
        self.quad([x, y + sy, z], [0., -sy, 0.], [0., 0., sz], n(sy), n(sz));
        // roof
        self.quad([x, y, z + sz], [sx, 0., 0.], [0., sy, 0.], n(sx), n(sy));
    }

    fn build(self) -> TriMesh {
        TriMesh::new(self.vertices, self.faces).expect("procedural archetype is valid")
    }
}

/// Rows of tilted panels. Each panel has an upward face and an uncoverable underside.
pub fn solar_panel_array() -> TriMesh {
    let mut b = MeshBuilder::default();
    let (rows, length, width, spacing) = (4, 12.0, 2.5, 6.0);
    let tilt = 25f64.to_radians();
    let (rise, run) = (width * tilt.sin(), width * tilt.cos());
    let y0 = -(spacing * (rows - 1) as f64 + run) / 2.0;
    for r in 0..rows {
        let y = y0 + spacing * r as f64;
        let origin = [-length / 2.0, y, 0.8];
        b.quad(origin, [length, 0., 0.], [0., run, rise], 4, 1);
        b.quad(origin, [0., run, rise], [length, 0., 0.], 1, 4);
    }
    b.build()
}

/// Vertical cylinder approximation with a flat roof fan.
pub fn vessel_tank() -> TriMesh {
    let (radius, height, sides, bands) = (6.0, 8.0, 12, 2);
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for band in 0..=bands {
        let z = height * band as f64 / bands as f64;
        for s in 0..sides {
            let a = 2.0 * PI * s as f64 / sides as f64;
            vertices.push([radius * a.cos(), radius * a.sin(), z]);
        }
    }
    let ring = |band: usize, s: usize| band * sides + s % sides;
    for band in 0..bands {
        for s in 0..sides {
            let (a, b) = (ring(band, s), ring(band, s + 1));
            let (c, d) = (ring(band + 1, s + 1), ring(band + 1, s));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    let center = vertices.len();
    vertices.push([0.0, 0.0, height]);
    for s in 0..sides {
        faces.push([center, ring(bands, s), ring(bands, s + 1)]);
    }
    TriMesh::new(vertices, faces).expect("procedural archetype is valid")
}

/// Large closed hall.
pub fn turbine_hall() -> TriMesh {
    let mut b = MeshBuilder::default();
    b.box_without_floor([-15.0, -7.5, 0.0], [30.0, 15.0, 10.0], 5.0);
    b.build()
}

/// Tank body with three bushings on top.
pub fn power_transformer() -> TriMesh {
    let mut b = MeshBuilder::default();
    b.box_without_floor([-2.0, -1.25, 0.0], [4.0, 2.5, 3.0], 4.0);
    for x in [-1.3, -0.25, 0.8] {
        b.box_without_floor([x, -0.25, 3.0], [0.5, 0.5, 1.2], 1.2);
    }
    b.build()
}

/// The four stand-in facility types. Panels weigh 0.25, the rest 1.0.
pub fn builtin_archetypes() -> Vec<Archetype> {
    vec![
        Archetype {
            name: "solar_panels".into(),
            mesh: solar_panel_array(),
            weight: 0.25,
        },
        Archetype {
            name: "vessel_tank".into(),
            mesh: vessel_tank(),
            weight: 1.0,
        },
        Archetype {
            name: "turbine_hall".into(),
            mesh: turbine_hall(),
            weight: 1.0,
        },
        Archetype {
            name: "transformer".into(),
            mesh: power_transformer(),
            weight: 1.0,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn archetypes_are_distinct_and_valid() {
        let all = builtin_archetypes();
        assert_eq!(all.len(), 4);
        let counts: HashSet<usize> = all.iter().map(|a| a.mesh.face_count()).collect();
        assert_eq!(counts.len(), 4);
        for a in &all {
            let (lo, _) = a.mesh.bounds();
            assert!(lo.z >= 0.0 && lo.z < 1.0, "{} not standing on the ground", a.name);
            let rebuilt = TriMesh::new(a.mesh.vertices().to_vec(), a.mesh.faces().to_vec());
            assert!(rebuilt.is_ok());
        }
        let weights: Vec<f64> = all.iter().map(|a| a.weight).collect();
        assert_eq!(weights, vec![0.25, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn box_normals_point_outward() {
        let hall = turbine_hall();
        for f in hall.face_info() {
            let outward = f.centroid - Point3::new(0.0, 0.0, 5.0);
            assert!(f.normal.dot(&outward) > 0.0);
        }
    }

    #[test]
    fn tank_normals_point_outward() {
        let tank = vessel_tank();
        for f in tank.face_info() {
            let outward = f.centroid - Point3::new(0.0, 0.0, 4.0);
            assert!(f.normal.dot(&outward) > 0.0);
        }
    }

    #[test]
    fn generates_valid_scenarios() {
        let arch = builtin_archetypes();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = generate(&arch, 8, [200.0, 200.0, 50.0], DEFAULT_MARGIN, &mut rng).unwrap();
        assert_eq!(s.structures.len(), 8);
        s.validate().unwrap();
        assert!(s.mean_pairwise_distance() > 0.0);

        let one = generate(&arch, 1, [200.0, 200.0, 50.0], DEFAULT_MARGIN, &mut rng).unwrap();
        one.validate().unwrap();
        assert_eq!(one.mean_pairwise_distance(), 0.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let arch = builtin_archetypes();
        let a = generate(&arch, 8, [200.0, 200.0, 50.0], 5.0, &mut ChaCha8Rng::seed_from_u64(9));
        let b = generate(&arch, 8, [200.0, 200.0, 50.0], 5.0, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.unwrap(), b.unwrap());
    }

    #[test]
    fn overcrowded_area_fails() {
        let mut b = MeshBuilder::default();
        b.box_without_floor([-25.0, -25.0, 0.0], [50.0, 50.0, 10.0], 10.0);
        let big = Archetype {
            name: "block".into(),
            mesh: b.build(),
            weight: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = generate(&[big], 64, [100.0, 100.0, 50.0], 5.0, &mut rng);
        assert!(matches!(err, Err(Error::PlacementFailed { .. })));
    }

    #[test]
    fn rejects_bad_arguments() {
        let arch = builtin_archetypes();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate(&arch, 0, [200.0, 200.0, 50.0], 5.0, &mut rng).is_err());
        assert!(generate(&[], 3, [200.0, 200.0, 50.0], 5.0, &mut rng).is_err());
        assert!(generate(&arch, 3, [200.0, -1.0, 50.0], 5.0, &mut rng).is_err());
    }

    #[test]
    fn validate_catches_overlap() {
        let arch = builtin_archetypes();
        let mut s = generate(&arch, 2, [200.0, 200.0, 50.0], 5.0, &mut ChaCha8Rng::seed_from_u64(4))
            .unwrap();
        s.structures[1].mesh = s.structures[0].mesh.clone();
        assert!(s.validate().is_err());
    }
}
