//! Guarded-move actions: definition, generation, and contact queries.
//!
//! A guarded move starts at an end-effector pose, translates along a fixed
//! unit direction at constant speed, and stops either on contact or after
//! `length` meters. Its cost is execution time: travel time at full length
//! plus a fixed per-action overhead (approach, retract, sensor settle).
//!
//! Generators produce the four families used in the experiments: a fixed
//! human-designed triple of axis approaches, inward rays from a surrounding
//! sphere, pokes along inward surface normals of the object at its sensed
//! pose, and vertical drops scattered over the object. Generated actions are
//! then *fitted* against the initial hypothesis set: starts are retracted
//! until they sit outside every hypothesis surface, and lengths are extended
//! so any hypothesis that can be contacted is reached within the move.

use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use thiserror::Error;

use crate::geometry::{Pose, Scene};

#[derive(Debug, Error)]
pub enum ActionError {
    #[error("action {id}: direction norm {norm} is not unit within 1e-9")]
    NotUnitDirection { id: u32, norm: f64 },
    #[error("action {id}: length must be positive (got {value})")]
    NonPositiveLength { id: u32, value: f64 },
    #[error("action {id}: speed must be positive (got {value})")]
    NonPositiveSpeed { id: u32, value: f64 },
    #[error("action ids must be dense 0..n-1 (found {found} at position {position})")]
    NonDenseIds { found: u32, position: usize },
    #[error("actions csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("failed to read actions csv: {0}")]
    Io(#[from] std::io::Error),
}

/// One guarded move.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub id: u32,
    /// End-effector start pose; rig contact points are expressed in this
    /// frame and sweep along `direction` with it.
    pub start: Pose,
    /// Unit translation direction in world coordinates.
    pub direction: Vector3<f64>,
    /// Maximum travel in meters.
    pub length: f64,
    /// Travel speed in m/s.
    pub speed: f64,
    /// Fixed per-action overhead in seconds.
    pub fixed_time: f64,
}

impl Action {
    /// Trajectory run time if no contact occurs (seconds).
    pub fn duration(&self) -> f64 {
        self.length / self.speed
    }

    /// Execution cost in seconds: full travel plus fixed overhead. Guarded
    /// moves are budgeted at full length because contact time is unknown
    /// before execution.
    pub fn cost(&self) -> f64 {
        self.duration() + self.fixed_time
    }

    fn validate(&self) -> Result<(), ActionError> {
        let norm = self.direction.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(ActionError::NotUnitDirection { id: self.id, norm });
        }
        if !(self.length > 0.0) {
            return Err(ActionError::NonPositiveLength {
                id: self.id,
                value: self.length,
            });
        }
        if !(self.speed > 0.0) {
            return Err(ActionError::NonPositiveSpeed {
                id: self.id,
                value: self.speed,
            });
        }
        Ok(())
    }
}

/// Time at which the rig first touches the object at `object_pose`, or `None`
/// when the swept path never contacts within the action's length.
pub fn contact_time(action: &Action, object_pose: &Pose, scene: &Scene) -> Option<f64> {
    let distance = scene.rig_contact_distance(&action.start, &action.direction, object_pose)?;
    if distance <= action.length {
        // Clamp against the duration computed the same way callers do, so
        // `Contact(t) <= duration()` holds bit-for-bit.
        Some((distance / action.speed).min(action.duration()))
    } else {
        None
    }
}

/// A dense, validated collection of actions; ids are indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    actions: Vec<Action>,
}

impl ActionSet {
    pub fn new(actions: Vec<Action>) -> Result<Self, ActionError> {
        for (i, a) in actions.iter().enumerate() {
            if a.id as usize != i {
                return Err(ActionError::NonDenseIds {
                    found: a.id,
                    position: i,
                });
            }
            a.validate()?;
        }
        Ok(ActionSet { actions })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, id: u32) -> &Action {
        &self.actions[id as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Action> {
        self.actions.iter()
    }

    /// Serialize as CSV (header plus one row per action). Floats use the
    /// shortest exact representation, so export/import round-trips bit-exact.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(
            "id,start_x,start_y,start_z,start_theta,dir_x,dir_y,dir_z,length,speed,fixed_time\n",
        );
        for a in &self.actions {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                a.id,
                a.start.x,
                a.start.y,
                a.start.z,
                a.start.theta,
                a.direction.x,
                a.direction.y,
                a.direction.z,
                a.length,
                a.speed,
                a.fixed_time
            ));
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self, ActionError> {
        let mut actions = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if idx == 0 {
                continue; // header
            }
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 11 {
                return Err(ActionError::Csv {
                    line: lineno,
                    message: format!("expected 11 fields, got {}", fields.len()),
                });
            }
            let parse = |i: usize| -> Result<f64, ActionError> {
                fields[i].parse().map_err(|_| ActionError::Csv {
                    line: lineno,
                    message: format!("bad float in field {i}: {:?}", fields[i]),
                })
            };
            let id: u32 = fields[0].parse().map_err(|_| ActionError::Csv {
                line: lineno,
                message: format!("bad id: {:?}", fields[0]),
            })?;
            actions.push(Action {
                id,
                start: Pose::new(parse(1)?, parse(2)?, parse(3)?, parse(4)?),
                direction: Vector3::new(parse(5)?, parse(6)?, parse(7)?),
                length: parse(8)?,
                speed: parse(9)?,
                fixed_time: parse(10)?,
            });
        }
        ActionSet::new(actions)
    }

    pub fn write_csv_file(&self, path: &std::path::Path) -> Result<(), ActionError> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn from_csv_file(path: &std::path::Path) -> Result<Self, ActionError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text)
    }
}

/// Shared knobs for the generators. Defaults target desk-scale objects.
#[derive(Debug, Clone)]
pub struct GenParams {
    /// Travel speed for all moves (m/s).
    pub speed: f64,
    /// Fixed per-action overhead (s).
    pub fixed_time: f64,
    /// Radius of the surrounding sphere for `gen_sphere` (m). Must exceed the
    /// maximal hypothesis extent so starts fall outside the object.
    pub sphere_radius: f64,
    /// Maximum in-plane start translation applied to sphere actions (m).
    pub max_inplane: f64,
    /// Clearance kept between a fitted start and the nearest hypothesis
    /// surface, and margin added to fitted lengths (m).
    pub retract_margin: f64,
    /// Start scatter radius in x/y for table-drop actions (m).
    pub table_scatter: f64,
    /// Start height above the sensed pose for table-drop actions (m).
    pub table_height: f64,
    /// Start distance for the human-designed axis approaches (m).
    pub approach_distance: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            speed: 0.05,
            fixed_time: 5.0,
            sphere_radius: 0.5,
            max_inplane: 0.05,
            retract_margin: 0.05,
            table_scatter: 0.1,
            table_height: 0.5,
            approach_distance: 0.5,
        }
    }
}

fn raw_action(start: Pose, direction: Vector3<f64>, length: f64, params: &GenParams) -> Action {
    Action {
        id: 0, // assigned densely when the set is assembled
        start,
        direction,
        length,
        speed: params.speed,
        fixed_time: params.fixed_time,
    }
}

/// Any unit vector orthogonal to `d`.
fn orthonormal_to(d: &Vector3<f64>) -> Vector3<f64> {
    let trial = if d.x.abs() < 0.9 {
        Vector3::new(1.0, 0.0, 0.0)
    } else {
        Vector3::new(0.0, 1.0, 0.0)
    };
    d.cross(&trial).normalize()
}

/// Inward rays from a sphere of `radius` around the sensed position. Each
/// direction points from its sphere sample toward the center; the start is
/// then shifted by a random translation in the plane orthogonal to the
/// movement (so trajectories do not all pass through one point) and given a
/// random yaw.
pub fn gen_sphere<R: Rng>(
    center: &Pose,
    radius: f64,
    n: usize,
    params: &GenParams,
    rng: &mut R,
) -> Vec<Action> {
    let c = Point3::new(center.x, center.y, center.z);
    let mut actions = Vec::with_capacity(n);
    for _ in 0..n {
        let unit: [f64; 3] = UnitSphere.sample(rng);
        let on_sphere = c + radius * Vector3::new(unit[0], unit[1], unit[2]);
        let direction = (c - on_sphere).normalize();
        let u = orthonormal_to(&direction);
        let v = direction.cross(&u);
        let r = params.max_inplane * rng.gen::<f64>().sqrt();
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let offset = r * (phi.cos() * u + phi.sin() * v);
        let start_pos = on_sphere + offset;
        let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        actions.push(raw_action(
            Pose::new(start_pos.x, start_pos.y, start_pos.z, theta),
            direction,
            2.0 * radius,
            params,
        ));
    }
    actions
}

/// Pokes along inward surface normals of the object rendered at its sensed
/// pose. Surface points are sampled uniformly by area; each start backs off
/// from the surface along the (outward) normal by the retract margin, to be
/// refined by fitting.
pub fn gen_normal<R: Rng>(
    sensed: &Pose,
    n: usize,
    params: &GenParams,
    scene: &Scene,
    rng: &mut R,
) -> Vec<Action> {
    let mesh = scene.mesh();
    let ntris = mesh.triangles().len();
    let mut cumulative = Vec::with_capacity(ntris);
    let mut total = 0.0;
    for t in 0..ntris {
        total += mesh.triangle_area(t);
        cumulative.push(total);
    }
    let bb = mesh.aabb();
    let centroid = Point3::new(
        0.5 * (bb.min.x + bb.max.x),
        0.5 * (bb.min.y + bb.max.y),
        0.5 * (bb.min.z + bb.max.z),
    );
    let mut actions = Vec::with_capacity(n);
    for _ in 0..n {
        let pick = rng.gen_range(0.0..total);
        let t = cumulative.partition_point(|&c| c <= pick).min(ntris - 1);
        let [a, b, c] = mesh.triangle_vertices(t);
        // Uniform barycentric sample.
        let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        let local = a + u * (b - a) + v * (c - a);
        let mut normal = mesh.triangle_normal(t);
        // Orient inward: toward the body of the mesh.
        if normal.dot(&(centroid - local)) < 0.0 {
            normal = -normal;
        }
        let world_point = sensed.transform_point(&local);
        let world_normal = sensed.rotate_vector(&normal);
        let start_pos = world_point - params.retract_margin * world_normal;
        let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        actions.push(raw_action(
            Pose::new(start_pos.x, start_pos.y, start_pos.z, theta),
            world_normal,
            2.0 * params.retract_margin + bb.diagonal(),
            params,
        ));
    }
    actions
}

/// Vertical drops: starts scattered in x/y above the sensed pose, moving
/// straight down. These pin down the object's height.
pub fn gen_table<R: Rng>(
    sensed: &Pose,
    n: usize,
    params: &GenParams,
    rng: &mut R,
) -> Vec<Action> {
    let mut actions = Vec::with_capacity(n);
    for _ in 0..n {
        let r = params.table_scatter * rng.gen::<f64>().sqrt();
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let start = Pose::new(
            sensed.x + r * phi.cos(),
            sensed.y + r * phi.sin(),
            sensed.z + params.table_height,
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        );
        actions.push(raw_action(
            start,
            Vector3::new(0.0, 0.0, -1.0),
            2.0 * params.table_height,
            params,
        ));
    }
    actions
}

/// The human-designed baseline: one approach along each world axis, aimed at
/// the sensed center.
pub fn gen_human(sensed: &Pose, params: &GenParams) -> Vec<Action> {
    let d = params.approach_distance;
    let axes = [
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
    ];
    axes.iter()
        .map(|axis| {
            let start = Pose::new(
                sensed.x + d * axis.x,
                sensed.y + d * axis.y,
                sensed.z + d * axis.z,
                0.0,
            );
            raw_action(start, -axis, 2.0 * d, params)
        })
        .collect()
}

/// Fit raw actions to an initial hypothesis set: retract starts until every
/// rig point clears every hypothesis surface by the retract margin, then set
/// each length to reach the farthest contactable hypothesis plus the margin.
/// Hypotheses an action cannot reach are simply never contacted by it (the
/// sensing model yields NoContact for them).
pub fn fit_to_hypotheses(
    mut actions: Vec<Action>,
    hypotheses: &[Pose],
    scene: &Scene,
    params: &GenParams,
) -> Vec<Action> {
    let mesh_diag = scene.mesh().aabb().diagonal();
    for action in &mut actions {
        // Pass 1: how far back must the start sit so that every rig-point ray
        // enters each hypothesis surface only ahead of the start? Cast from
        // far behind along the movement line; entry distance below the
        // rig point's own line position means the point is at or inside the
        // surface.
        let mut retract = 0.0f64;
        for hyp in hypotheses {
            for rig_point in scene.rig().points() {
                let world = action.start.transform_point(rig_point);
                let back = (world - Point3::new(hyp.x, hyp.y, hyp.z)).norm() + mesh_diag + 1.0;
                let far_origin = world - back * action.direction;
                if let Some(entry) = scene.ray_cast(&far_origin, &action.direction, hyp) {
                    let needed = back - entry + params.retract_margin;
                    retract = retract.max(needed);
                }
            }
        }
        if retract > 0.0 {
            let p = Point3::new(action.start.x, action.start.y, action.start.z)
                - retract * action.direction;
            action.start = Pose::new(p.x, p.y, p.z, action.start.theta);
            action.length += retract;
        }
        // Pass 2: extend the length so every hypothesis that can be reached
        // is reached.
        let mut farthest: Option<f64> = None;
        for hyp in hypotheses {
            if let Some(d) =
                scene.rig_contact_distance(&action.start, &action.direction, hyp)
            {
                farthest = Some(farthest.map_or(d, |f: f64| f.max(d)));
            }
        }
        if let Some(f) = farthest {
            action.length = action.length.max(f + params.retract_margin);
        }
    }
    actions
}

/// Per-family action counts for [`generate_action_set`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionCounts {
    pub human: usize,
    pub sphere: usize,
    pub normal: usize,
    pub table: usize,
}

/// Generate, fit and assemble the full candidate set. Families are laid out
/// in a fixed order (human, sphere, normal, table) with dense ids, so the
/// human baseline always occupies ids `0..human`.
pub fn generate_action_set<R: Rng>(
    counts: ActionCounts,
    sensed: &Pose,
    hypotheses: &[Pose],
    scene: &Scene,
    params: &GenParams,
    rng: &mut R,
) -> Result<ActionSet, ActionError> {
    let mut raw = Vec::new();
    if counts.human > 0 {
        let mut human = gen_human(sensed, params);
        human.truncate(counts.human);
        raw.extend(human);
    }
    raw.extend(gen_sphere(sensed, params.sphere_radius, counts.sphere, params, rng));
    raw.extend(gen_normal(sensed, counts.normal, params, scene, rng));
    raw.extend(gen_table(sensed, counts.table, params, rng));
    let mut fitted = fit_to_hypotheses(raw, hypotheses, scene, params);
    for (i, a) in fitted.iter_mut().enumerate() {
        a.id = i as u32;
    }
    ActionSet::new(fitted)
}
