//! Ray casting against posed triangle meshes.
//!
//! Two interchangeable paths exist on purpose: [`ray_cast_brute`] tests every
//! triangle and is the reference implementation, while [`ray_cast`] walks a
//! uniform grid over the mesh and must return results identical to the brute
//! path. Both run in the mesh's local frame (rays are pulled back through the
//! object pose; rigid maps preserve distances, so the returned `t` is a world
//! distance for unit-length directions).
//!
//! Triangle tests are watertight-style Moller-Trumbore: the barycentric
//! denominator is rejected below `1e-12`, barycentric bounds get a matching
//! slack so shared edges cannot swallow hits, and hits closer than `1e-9`
//! along the ray are ignored so a ray starting on a surface does not
//! immediately re-hit it.

use nalgebra::{Point3, Vector3};

use super::mesh::TriangleMesh;
use super::pose::Pose;

/// Rejection threshold for the barycentric denominator (near-parallel rays).
const DET_EPS: f64 = 1e-12;
/// Slack on barycentric bounds so edge and vertex hits are kept.
const BARY_EPS: f64 = 1e-12;
/// Hits closer than this along the ray are ignored.
const T_MIN: f64 = 1e-9;

/// Moller-Trumbore ray/triangle intersection. Returns the distance along the
/// (unit) direction, or `None`.
fn intersect_triangle(
    origin: &Point3<f64>,
    dir: &Vector3<f64>,
    v0: &Point3<f64>,
    v1: &Point3<f64>,
    v2: &Point3<f64>,
) -> Option<f64> {
    let edge1 = v1 - v0;
    let edge2 = v2 - v0;
    let pvec = dir.cross(&edge2);
    let det = edge1.dot(&pvec);
    if det.abs() < DET_EPS {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - v0;
    let u = tvec.dot(&pvec) * inv_det;
    if u < -BARY_EPS || u > 1.0 + BARY_EPS {
        return None;
    }
    let qvec = tvec.cross(&edge1);
    let v = dir.dot(&qvec) * inv_det;
    if v < -BARY_EPS || u + v > 1.0 + BARY_EPS {
        return None;
    }
    let t = edge2.dot(&qvec) * inv_det;
    if t < T_MIN {
        return None;
    }
    Some(t)
}

/// A candidate hit; ordering prefers smaller distance, then smaller triangle
/// index so the two cast paths agree bit-for-bit even on ties.
#[derive(Clone, Copy, PartialEq)]
struct Hit {
    t: f64,
    triangle: usize,
}

impl Hit {
    fn better_than(&self, other: &Option<Hit>) -> bool {
        match other {
            None => true,
            Some(o) => self.t < o.t || (self.t == o.t && self.triangle < o.triangle),
        }
    }
}

/// Reference caster: test every triangle. Kept as the oracle for the grid
/// path and for small meshes.
pub fn ray_cast_brute(
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
    mesh: &TriangleMesh,
    pose: &Pose,
) -> Option<f64> {
    let o = pose.inverse_transform_point(origin);
    let d = pose.inverse_rotate_vector(direction);
    let mut best: Option<Hit> = None;
    for (i, _) in mesh.triangles().iter().enumerate() {
        let [v0, v1, v2] = mesh.triangle_vertices(i);
        if let Some(t) = intersect_triangle(&o, &d, &v0, &v1, &v2) {
            let hit = Hit { t, triangle: i };
            if hit.better_than(&best) {
                best = Some(hit);
            }
        }
    }
    best.map(|h| h.t)
}

/// Uniform spatial grid over a mesh's local-frame bounding box. Triangles are
/// binned into every cell their own bounding box overlaps, so a traversal that
/// visits cells in ray order cannot miss an intersection.
#[derive(Debug, Clone)]
pub struct MeshIndex {
    dims: [usize; 3],
    cell_size: [f64; 3],
    grid_min: Point3<f64>,
    grid_max: Point3<f64>,
    cells: Vec<Vec<u32>>,
}

impl MeshIndex {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let aabb = mesh.aabb().padded(1e-9);
        let extent = aabb.max - aabb.min;
        let ntris = mesh.triangles().len();
        let max_extent = extent.x.max(extent.y).max(extent.z).max(1e-9);
        // Aim for roughly 2 triangles per cell, spreading resolution across
        // axes in proportion to their extent.
        let density = (2.0 * ntris as f64).cbrt() / max_extent;
        let mut dims = [0usize; 3];
        let mut cell_size = [0f64; 3];
        for (i, e) in [extent.x, extent.y, extent.z].into_iter().enumerate() {
            let n = ((e * density).ceil() as usize).clamp(1, 64);
            dims[i] = n;
            cell_size[i] = (e / n as f64).max(1e-12);
        }
        let mut cells = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        for (t, _) in mesh.triangles().iter().enumerate() {
            let [a, b, c] = mesh.triangle_vertices(t);
            let lo = [
                a.x.min(b.x).min(c.x),
                a.y.min(b.y).min(c.y),
                a.z.min(b.z).min(c.z),
            ];
            let hi = [
                a.x.max(b.x).max(c.x),
                a.y.max(b.y).max(c.y),
                a.z.max(b.z).max(c.z),
            ];
            let min_idx = cell_of(&aabb.min, &cell_size, &dims, &Point3::new(lo[0], lo[1], lo[2]));
            let max_idx = cell_of(&aabb.min, &cell_size, &dims, &Point3::new(hi[0], hi[1], hi[2]));
            for ix in min_idx[0]..=max_idx[0] {
                for iy in min_idx[1]..=max_idx[1] {
                    for iz in min_idx[2]..=max_idx[2] {
                        cells[flat(&dims, ix, iy, iz)].push(t as u32);
                    }
                }
            }
        }
        MeshIndex {
            dims,
            cell_size,
            grid_min: aabb.min,
            grid_max: aabb.max,
            cells,
        }
    }

    fn cell_triangles(&self, ix: usize, iy: usize, iz: usize) -> &[u32] {
        &self.cells[flat(&self.dims, ix, iy, iz)]
    }
}

fn flat(dims: &[usize; 3], ix: usize, iy: usize, iz: usize) -> usize {
    (iz * dims[1] + iy) * dims[0] + ix
}

fn cell_of(
    grid_min: &Point3<f64>,
    cell_size: &[f64; 3],
    dims: &[usize; 3],
    p: &Point3<f64>,
) -> [usize; 3] {
    let mut idx = [0usize; 3];
    for (i, (coord, min)) in [(p.x, grid_min.x), (p.y, grid_min.y), (p.z, grid_min.z)]
        .into_iter()
        .enumerate()
    {
        let raw = ((coord - min) / cell_size[i]).floor();
        idx[i] = (raw.max(0.0) as usize).min(dims[i] - 1);
    }
    idx
}

/// Grid-accelerated cast. Must agree exactly with [`ray_cast_brute`].
pub fn ray_cast(
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
    mesh: &TriangleMesh,
    index: &MeshIndex,
    pose: &Pose,
) -> Option<f64> {
    let o = pose.inverse_transform_point(origin);
    let d = pose.inverse_rotate_vector(direction);

    // Clip the ray against the grid box (slab test).
    let mut t_enter = 0.0f64;
    let mut t_exit = f64::INFINITY;
    for i in 0..3 {
        let (o_i, min_i, max_i) = match i {
            0 => (o.x, index.grid_min.x, index.grid_max.x),
            1 => (o.y, index.grid_min.y, index.grid_max.y),
            _ => (o.z, index.grid_min.z, index.grid_max.z),
        };
        let d_i = d[i];
        if d_i.abs() < 1e-15 {
            if o_i < min_i || o_i > max_i {
                return None;
            }
        } else {
            let (mut t0, mut t1) = ((min_i - o_i) / d_i, (max_i - o_i) / d_i);
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_enter = t_enter.max(t0);
            t_exit = t_exit.min(t1);
        }
    }
    if t_enter > t_exit {
        return None;
    }

    let entry = o + d * t_enter;
    let mut cell = cell_of(&index.grid_min, &index.cell_size, &index.dims, &entry);
    let mut step = [0isize; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for i in 0..3 {
        let d_i = d[i];
        if d_i > 1e-15 {
            step[i] = 1;
            let bound = index.grid_min[i] + (cell[i] as f64 + 1.0) * index.cell_size[i];
            t_max[i] = (bound - o[i]) / d_i;
            t_delta[i] = index.cell_size[i] / d_i;
        } else if d_i < -1e-15 {
            step[i] = -1;
            let bound = index.grid_min[i] + cell[i] as f64 * index.cell_size[i];
            t_max[i] = (bound - o[i]) / d_i;
            t_delta[i] = index.cell_size[i] / -d_i;
        }
    }

    let mut best: Option<Hit> = None;
    loop {
        for &t_idx in index.cell_triangles(cell[0], cell[1], cell[2]) {
            let [v0, v1, v2] = mesh.triangle_vertices(t_idx as usize);
            if let Some(t) = intersect_triangle(&o, &d, &v0, &v1, &v2) {
                let hit = Hit {
                    t,
                    triangle: t_idx as usize,
                };
                if hit.better_than(&best) {
                    best = Some(hit);
                }
            }
        }
        // Next cell boundary along the ray.
        let axis = (0..3).min_by(|&a, &b| t_max[a].total_cmp(&t_max[b])).unwrap();
        let t_next = t_max[axis];
        if let Some(hit) = best {
            // The hit lies within already-visited cells once the frontier
            // passes it; triangles spanning multiple cells make the check
            // against the frontier (not the current cell) necessary.
            if hit.t <= t_next {
                break;
            }
        }
        if t_next > t_exit {
            break;
        }
        let next = cell[axis] as isize + step[axis];
        if next < 0 || next as usize >= index.dims[axis] {
            break;
        }
        cell[axis] = next as usize;
        t_max[axis] += t_delta[axis];
    }
    best.map(|h| h.t)
}

/// Generalized winding number of a posed mesh around a world point, computed
/// as the summed solid angle over all triangles divided by 4 pi. For closed
/// meshes this is approximately the number of times the surface wraps the
/// point: ~0 outside, ~1 inside (2 inside the overlap of two embedded
/// solids), which makes it robust for the unioned procedural shapes.
pub fn winding_number(point: &Point3<f64>, mesh: &TriangleMesh, pose: &Pose) -> f64 {
    let p = pose.inverse_transform_point(point);
    let mut total = 0.0;
    for i in 0..mesh.triangles().len() {
        let [va, vb, vc] = mesh.triangle_vertices(i);
        let a = va - p;
        let b = vb - p;
        let c = vc - p;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let numerator = a.dot(&b.cross(&c));
        let denominator =
            la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        total += 2.0 * numerator.atan2(denominator);
    }
    total / (4.0 * std::f64::consts::PI)
}

/// Inside test via the winding number; `point` is in world coordinates.
pub fn point_inside(point: &Point3<f64>, mesh: &TriangleMesh, pose: &Pose) -> bool {
    winding_number(point, mesh, pose) > 0.5
}
