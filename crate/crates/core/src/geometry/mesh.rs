//! Triangle meshes: construction, a strict Wavefront-OBJ subset reader, and
//! procedural test shapes.
//!
//! The reader accepts only what the simulator needs: `v x y z` vertex records
//! and triangular `f i j k` face records with 1-based positive indices. Any
//! other record type is skipped with a warning. Malformed records, non-triangle
//! faces, out-of-range indices and zero-area triangles are hard errors carrying
//! the 1-based line number, so bad assets fail loudly instead of producing
//! meshes that ray casts silently slip through.

use nalgebra::{Point3, Vector3};
use std::io::BufRead;
use std::path::Path;
use thiserror::Error;

/// Triangles whose cross-product norm falls below this are considered
/// zero-area and rejected at load time.
const DEGENERATE_AREA_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("failed to read mesh file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {text}")]
    MalformedLine { line: usize, text: String },
    #[error("line {line}: face has {count} indices, only triangles are supported")]
    NonTriangleFace { line: usize, count: usize },
    #[error("line {line}: vertex index {index} out of range (mesh has {vertices} vertices)")]
    IndexOutOfRange {
        line: usize,
        index: i64,
        vertices: usize,
    },
    #[error("line {line}: degenerate (zero-area) triangle")]
    DegenerateTriangle { line: usize },
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("triangle {triangle} references vertex {index} out of range")]
    BadTriangle { triangle: usize, index: usize },
    #[error("triangle {triangle} has zero area")]
    ZeroAreaTriangle { triangle: usize },
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Grow the box by `pad` on every side.
    pub fn padded(&self, pad: f64) -> Aabb {
        let d = Vector3::new(pad, pad, pad);
        Aabb {
            min: self.min - d,
            max: self.max + d,
        }
    }
}

/// An immutable triangle mesh in its own local frame.
///
/// Invariants established at construction: every triangle index is in range
/// and no triangle has zero area.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[usize; 3]>,
    aabb: Aabb,
}

impl TriangleMesh {
    /// Build a mesh from raw parts, validating the structural invariants.
    pub fn from_parts(
        vertices: Vec<Point3<f64>>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i >= vertices.len() {
                    return Err(MeshError::BadTriangle {
                        triangle: t,
                        index: i,
                    });
                }
            }
            if triangle_area2(&vertices, tri) < DEGENERATE_AREA_EPS {
                return Err(MeshError::ZeroAreaTriangle { triangle: t });
            }
        }
        let aabb = compute_aabb(&vertices);
        Ok(TriangleMesh {
            vertices,
            triangles,
            aabb,
        })
    }

    /// Read a mesh from the supported OBJ subset.
    pub fn from_obj_file(path: &Path) -> Result<Self, MeshError> {
        let file = std::fs::File::open(path)?;
        Self::from_obj_reader(std::io::BufReader::new(file))
    }

    /// Parse OBJ text from any reader; see the module docs for the accepted
    /// subset and error contract.
    pub fn from_obj_reader<R: BufRead>(reader: R) -> Result<Self, MeshError> {
        let mut vertices: Vec<Point3<f64>> = Vec::new();
        let mut triangles: Vec<[usize; 3]> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let record = fields.next().expect("non-empty line has a first field");
            match record {
                "v" => {
                    let coords: Vec<&str> = fields.collect();
                    if coords.len() != 3 {
                        return Err(MeshError::MalformedLine {
                            line: lineno,
                            text: trimmed.to_string(),
                        });
                    }
                    let mut xyz = [0.0f64; 3];
                    for (slot, raw) in xyz.iter_mut().zip(&coords) {
                        *slot = raw.parse().map_err(|_| MeshError::MalformedLine {
                            line: lineno,
                            text: trimmed.to_string(),
                        })?;
                    }
                    vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
                }
                "f" => {
                    let raw: Vec<&str> = fields.collect();
                    if raw.len() != 3 {
                        return Err(MeshError::NonTriangleFace {
                            line: lineno,
                            count: raw.len(),
                        });
                    }
                    let mut tri = [0usize; 3];
                    for (slot, field) in tri.iter_mut().zip(&raw) {
                        let index: i64 =
                            field.parse().map_err(|_| MeshError::MalformedLine {
                                line: lineno,
                                text: trimmed.to_string(),
                            })?;
                        if index < 1 || index as usize > vertices.len() {
                            return Err(MeshError::IndexOutOfRange {
                                line: lineno,
                                index,
                                vertices: vertices.len(),
                            });
                        }
                        *slot = (index - 1) as usize;
                    }
                    if triangle_area2(&vertices, &tri) < DEGENERATE_AREA_EPS {
                        return Err(MeshError::DegenerateTriangle { line: lineno });
                    }
                    triangles.push(tri);
                }
                other => {
                    log::warn!("obj reader: ignoring unsupported record '{other}' on line {lineno}");
                }
            }
        }
        if triangles.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let aabb = compute_aabb(&vertices);
        Ok(TriangleMesh {
            vertices,
            triangles,
            aabb,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn aabb(&self) -> Aabb {
        self.aabb
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * triangle_area2(&self.vertices, &self.triangles[t]).sqrt()
    }

    /// Outward-agnostic triangle normal (right-hand rule over the stored
    /// winding), unit length.
    pub fn triangle_normal(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangle_vertices(t);
        (b - a).cross(&(c - a)).normalize()
    }
}

/// Squared parallelogram area of a triangle; cheap degeneracy test.
fn triangle_area2(vertices: &[Point3<f64>], tri: &[usize; 3]) -> f64 {
    let a = vertices[tri[0]];
    let b = vertices[tri[1]];
    let c = vertices[tri[2]];
    (b - a).cross(&(c - a)).norm_squared()
}

fn compute_aabb(vertices: &[Point3<f64>]) -> Aabb {
    let mut min = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut max = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in vertices {
        min.x = min.x.min(v.x);
        min.y = min.y.min(v.y);
        min.z = min.z.min(v.z);
        max.x = max.x.max(v.x);
        max.y = max.y.max(v.y);
        max.z = max.z.max(v.z);
    }
    Aabb { min, max }
}

/// Append an axis-aligned box (12 triangles, outward winding) to a vertex /
/// triangle soup.
fn push_box(
    vertices: &mut Vec<Point3<f64>>,
    triangles: &mut Vec<[usize; 3]>,
    center: Point3<f64>,
    half: Vector3<f64>,
) {
    let base = vertices.len();
    for &sz in &[-1.0, 1.0] {
        for &sy in &[-1.0, 1.0] {
            for &sx in &[-1.0, 1.0] {
                vertices.push(Point3::new(
                    center.x + sx * half.x,
                    center.y + sy * half.y,
                    center.z + sz * half.z,
                ));
            }
        }
    }
    // Vertex layout: bit 0 = +x, bit 1 = +y, bit 2 = +z.
    const FACES: [[usize; 4]; 6] = [
        [1, 3, 7, 5], // +x
        [0, 4, 6, 2], // -x
        [2, 6, 7, 3], // +y
        [0, 1, 5, 4], // -y
        [4, 5, 7, 6], // +z
        [0, 2, 3, 1], // -z
    ];
    for quad in FACES {
        triangles.push([base + quad[0], base + quad[1], base + quad[2]]);
        triangles.push([base + quad[0], base + quad[2], base + quad[3]]);
    }
}

/// Append a closed z-aligned cylinder (side quads plus cap fans, outward
/// winding).
fn push_cylinder(
    vertices: &mut Vec<Point3<f64>>,
    triangles: &mut Vec<[usize; 3]>,
    center_xy: (f64, f64),
    radius: f64,
    z0: f64,
    z1: f64,
    segments: usize,
) {
    let base = vertices.len();
    for i in 0..segments {
        let angle = 2.0 * std::f64::consts::PI * (i as f64) / (segments as f64);
        let (s, c) = angle.sin_cos();
        vertices.push(Point3::new(center_xy.0 + radius * c, center_xy.1 + radius * s, z0));
        vertices.push(Point3::new(center_xy.0 + radius * c, center_xy.1 + radius * s, z1));
    }
    let bottom_center = vertices.len();
    vertices.push(Point3::new(center_xy.0, center_xy.1, z0));
    let top_center = vertices.len();
    vertices.push(Point3::new(center_xy.0, center_xy.1, z1));
    for i in 0..segments {
        let j = (i + 1) % segments;
        let (b_i, t_i) = (base + 2 * i, base + 2 * i + 1);
        let (b_j, t_j) = (base + 2 * j, base + 2 * j + 1);
        // Side, outward.
        triangles.push([b_i, b_j, t_j]);
        triangles.push([b_i, t_j, t_i]);
        // Caps: bottom faces -z, top faces +z.
        triangles.push([bottom_center, b_j, b_i]);
        triangles.push([top_center, t_i, t_j]);
    }
}

/// Drill-like test object: a 0.15 m cube body with a 0.04 m radius, 0.2 m tall
/// bit cylinder on top and a pistol-grip handle protruding sideways to
/// x = 0.26. Solids are sunk into each other so the union has no coplanar
/// internal faces (that keeps inside/outside queries well defined). The grip
/// matters beyond looks: it breaks rotational symmetry, so probes brushing it
/// feel the object's yaw through the long lever arm.
pub fn drill_like() -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    push_box(
        &mut vertices,
        &mut triangles,
        Point3::new(0.0, 0.0, -0.095),
        Vector3::new(0.075, 0.075, 0.075),
    );
    push_cylinder(&mut vertices, &mut triangles, (0.0, 0.0), 0.04, -0.03, 0.17, 32);
    push_box(
        &mut vertices,
        &mut triangles,
        Point3::new(0.155, 0.0, -0.07),
        Vector3::new(0.105, 0.035, 0.03),
    );
    TriangleMesh::from_parts(vertices, triangles).expect("procedural drill mesh is valid")
}

/// Door-like test object: a 1.0 x 2.0 x 0.05 m slab with a handle box that
/// protrudes 0.12 m from the front face, embedded slightly to avoid coplanar
/// internal faces. Local origin at the slab center.
pub fn door_like() -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    push_box(
        &mut vertices,
        &mut triangles,
        Point3::new(0.0, 0.0, 0.0),
        Vector3::new(0.5, 0.025, 1.0),
    );
    // Handle: 0.15 m long bar at door-handle height, reaching y = 0.145.
    push_box(
        &mut vertices,
        &mut triangles,
        Point3::new(0.325, 0.065, 0.0),
        Vector3::new(0.075, 0.08, 0.03),
    );
    TriangleMesh::from_parts(vertices, triangles).expect("procedural door mesh is valid")
}

/// Unit-cube helper used across the test suites: side length 1 centered at
/// `center`.
pub fn unit_cube(center: Point3<f64>) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    push_box(
        &mut vertices,
        &mut triangles,
        center,
        Vector3::new(0.5, 0.5, 0.5),
    );
    TriangleMesh::from_parts(vertices, triangles).expect("cube mesh is valid")
}
