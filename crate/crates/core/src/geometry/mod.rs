//! Geometry: poses, meshes, ray casting and contact queries.
//!
//! A [`Scene`] bundles the one known object mesh (with its spatial index) and
//! the sensor rig of the end effector. Everything here is immutable after
//! construction so scenes can be shared freely across threads during parallel
//! gain evaluation.

mod mesh;
mod pose;
mod ray;

pub use mesh::{door_like, drill_like, unit_cube, Aabb, MeshError, TriangleMesh};
pub use pose::{normalize_angle, Pose};
pub use ray::{point_inside, ray_cast, ray_cast_brute, winding_number, MeshIndex};

use nalgebra::{Point3, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RigError {
    #[error("sensor rig must have at least one contact point")]
    Empty,
}

/// Contact points of the end effector, expressed in the end-effector frame.
/// A guarded move sweeps every point along the move direction and stops when
/// any of them touches the object.
#[derive(Debug, Clone)]
pub struct SensorRig {
    points: Vec<Point3<f64>>,
}

impl SensorRig {
    pub fn new(points: Vec<Point3<f64>>) -> Result<Self, RigError> {
        if points.is_empty() {
            return Err(RigError::Empty);
        }
        Ok(SensorRig { points })
    }

    /// The minimal rig: a single probe point at the end-effector origin.
    pub fn single_point() -> Self {
        SensorRig {
            points: vec![Point3::origin()],
        }
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }
}

/// The known object (mesh + spatial index) and the sensor rig.
#[derive(Debug, Clone)]
pub struct Scene {
    mesh: TriangleMesh,
    index: MeshIndex,
    rig: SensorRig,
}

impl Scene {
    pub fn new(mesh: TriangleMesh, rig: SensorRig) -> Self {
        let index = MeshIndex::build(&mesh);
        Scene { mesh, index, rig }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn rig(&self) -> &SensorRig {
        &self.rig
    }

    /// Grid-accelerated cast against the object at `object_pose`.
    pub fn ray_cast(
        &self,
        origin: &Point3<f64>,
        direction: &Vector3<f64>,
        object_pose: &Pose,
    ) -> Option<f64> {
        ray_cast(origin, direction, &self.mesh, &self.index, object_pose)
    }

    /// Minimum travel distance before any rig point touches the object, for
    /// an end effector starting at `start` and translating along
    /// `direction`. `None` when every rig ray misses.
    pub fn rig_contact_distance(
        &self,
        start: &Pose,
        direction: &Vector3<f64>,
        object_pose: &Pose,
    ) -> Option<f64> {
        let mut best: Option<f64> = None;
        for p in self.rig.points() {
            let origin = start.transform_point(p);
            if let Some(t) = self.ray_cast(&origin, direction, object_pose) {
                best = Some(match best {
                    Some(b) => b.min(t),
                    None => t,
                });
            }
        }
        best
    }

    /// Whether a world point sits inside the object at `object_pose`.
    pub fn point_inside(&self, point: &Point3<f64>, object_pose: &Pose) -> bool {
        point_inside(point, &self.mesh, object_pose)
    }
}
