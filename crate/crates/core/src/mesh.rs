//! Triangle mesh model, ASCII OBJ I/O, normalization frames and the
//! Hausdorff distortion metric.
//!
//! The normalization frame moves the origin to the vertex mean, aligns the
//! principal component axis with `+z` and measures radii in units of the
//! mean radial distance, which is what the QIM layer quantizes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use rstar::RTree;

use crate::error::{Error, Result};

/// Relative tolerance under which two covariance eigenvalues count as equal.
const EIGEN_TIE_TOLERANCE: f64 = 1e-8;

/// An indexed triangle mesh with derived vertex adjacency.
///
/// Adjacency is rebuilt from the face list on construction, so two meshes
/// with equal vertices and faces always compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    vertex_faces: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds a mesh, rejecting out-of-range indices, degenerate faces and
    /// non-finite coordinates.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::arg(format!("vertex {i} has a non-finite coordinate")));
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= n) {
                return Err(Error::arg(format!(
                    "face {fi} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::arg(format!("face {fi} repeats a vertex: {f:?}")));
            }
        }
        let (vertex_faces, neighbors) = build_adjacency(n, &faces);
        Ok(Mesh {
            vertices,
            faces,
            vertex_faces,
            neighbors,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Faces incident to `v`, ascending.
    pub fn incident_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    /// One-ring neighbours of `v`, ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Same topology with new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point3<f64>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::arg(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::arg(format!("vertex {i} has a non-finite coordinate")));
        }
        Ok(Mesh {
            vertices,
            faces: self.faces.clone(),
            vertex_faces: self.vertex_faces.clone(),
            neighbors: self.neighbors.clone(),
        })
    }

    /// Map from each undirected edge `(lo, hi)` to the faces containing it.
    pub fn edge_faces(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push(fi);
            }
        }
        edges
    }

    /// Number of distinct undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Mean length over all distinct edges, or 0 for a mesh without edges.
    pub fn mean_edge_length(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (v, ring) in self.neighbors.iter().enumerate() {
            for &w in ring.iter().filter(|&&w| w > v) {
                total += (self.vertices[w] - self.vertices[v]).norm();
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }
}

fn build_adjacency(n: usize, faces: &[[usize; 3]]) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut vertex_faces = vec![Vec::new(); n];
    let mut neighbors = vec![Vec::new(); n];
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            vertex_faces[f[k]].push(fi);
            neighbors[f[k]].push(f[(k + 1) % 3]);
            neighbors[f[k]].push(f[(k + 2) % 3]);
        }
    }
    for ring in &mut neighbors {
        ring.sort_unstable();
        ring.dedup();
    }
    (vertex_faces, neighbors)
}

/// Parses the `v`/`f` subset of Wavefront OBJ.
///
/// Texture and normal references in face records are dropped, polygons are
/// fan-triangulated and negative (relative) indices are resolved. All other
/// record types are ignored.
pub fn parse_obj(text: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .take(3)
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| Error::parse(line_no, format!("bad coordinate {s:?}")))
                    })
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(Error::parse(line_no, "vertex needs three coordinates"));
                }
                if !coords.iter().all(|c| c.is_finite()) {
                    return Err(Error::parse(line_no, "non-finite coordinate"));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = fields
                    .map(|tok| resolve_index(tok, vertices.len(), line_no))
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::parse(line_no, "face needs at least three vertices"));
                }
                for k in 1..idx.len() - 1 {
                    let tri = [idx[0], idx[k], idx[k + 1]];
                    if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                        return Err(Error::parse(line_no, "degenerate face repeats a vertex"));
                    }
                    faces.push(tri);
                }
            }
            _ => {}
        }
    }
    let n = vertices.len();
    for (fi, f) in faces.iter().enumerate() {
        if let Some(&bad) = f.iter().find(|&&i| i >= n) {
            return Err(Error::parse(
                0,
                format!("face {fi} references vertex {} of {n}", bad + 1),
            ));
        }
    }
    Mesh::new(vertices, faces)
}

fn resolve_index(token: &str, seen: usize, line: usize) -> Result<usize> {
    let head = token.split('/').next().unwrap_or("");
    let raw: i64 = head
        .parse()
        .map_err(|_| Error::parse(line, format!("bad face index {token:?}")))?;
    match raw {
        0 => Err(Error::parse(line, "face index 0 is invalid")),
        r if r > 0 => Ok((r - 1) as usize),
        r => {
            let back = (-r) as usize;
            if back > seen {
                Err(Error::parse(line, format!("relative index {r} out of range")))
            } else {
                Ok(seen - back)
            }
        }
    }
}

/// Writes the mesh as OBJ. Coordinates use the shortest representation that
/// parses back to the identical `f64`.
pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::with_capacity(mesh.vertex_count() * 48 + mesh.face_count() * 24);
    for p in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// Unweighted mean of the vertex positions.
pub fn center_of_mass(mesh: &Mesh) -> Result<Point3<f64>> {
    mean_point(mesh.vertices())
}

fn mean_point(points: &[Point3<f64>]) -> Result<Point3<f64>> {
    if points.is_empty() {
        return Err(Error::arg("center of mass of an empty point set"));
    }
    let sum = points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords);
    Ok(Point3::from(sum / points.len() as f64))
}

/// Spherical coordinates in a normalization frame. `r` is in units of the
/// frame's `scale_ref`; `theta` is the inclination from `+z`, `phi` the
/// azimuth in `[-pi, pi)`. A zero radius carries angles `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoord {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphericalCoord {
    /// True when the point coincided with the frame origin and the angles
    /// are the `(0, 0)` convention rather than measured values.
    pub fn is_degenerate(&self) -> bool {
        self.r == 0.0
    }
}

/// Translation, rotation and scale that put a mesh into canonical position.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationFrame {
    pub origin: Point3<f64>,
    /// Rows are the frame axes expressed in input coordinates.
    pub rotation: Matrix3<f64>,
    pub scale_ref: f64,
}

impl NormalizationFrame {
    /// Frame-local Cartesian coordinates (rotated, unscaled).
    pub fn to_local(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * (p - self.origin))
    }

    pub fn from_local(&self, q: &Point3<f64>) -> Point3<f64> {
        self.origin + self.rotation.transpose() * q.coords
    }

    /// Distance from the origin in units of `scale_ref`.
    pub fn radial(&self, p: &Point3<f64>) -> f64 {
        (p - self.origin).norm() / self.scale_ref
    }

    pub fn to_spherical(&self, p: &Point3<f64>) -> SphericalCoord {
        let q = self.to_local(p).coords / self.scale_ref;
        let r = q.norm();
        if r == 0.0 {
            return SphericalCoord {
                r: 0.0,
                theta: 0.0,
                phi: 0.0,
            };
        }
        let theta = (q.z / r).clamp(-1.0, 1.0).acos();
        let mut phi = q.y.atan2(q.x);
        if phi >= std::f64::consts::PI {
            phi = -std::f64::consts::PI;
        }
        SphericalCoord { r, theta, phi }
    }

    pub fn from_spherical(&self, s: &SphericalCoord) -> Point3<f64> {
        let (st, ct) = s.theta.sin_cos();
        let (sp, cp) = s.phi.sin_cos();
        let q = Vector3::new(st * cp, st * sp, ct) * (s.r * self.scale_ref);
        self.from_local(&Point3::from(q))
    }
}

/// Result of principal-component alignment.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub mesh: Mesh,
    pub frame: NormalizationFrame,
    /// Set when two covariance eigenvalues coincide within tolerance, in which
    /// case the axes come from the deterministic tie-break only.
    pub degenerate: bool,
}

/// Computes the normalization frame of a point set.
///
/// Returns the frame and the degenerate-eigenvalue flag.
pub fn normalization_frame_of(points: &[Point3<f64>]) -> Result<(NormalizationFrame, bool)> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!(
            "normalization needs at least 3 vertices, got {}",
            points.len()
        )));
    }
    let origin = mean_point(points)?;
    let mut cov = Matrix3::zeros();
    let mut radial_sum = 0.0;
    for p in points {
        let d = p - origin;
        cov += d * d.transpose();
        radial_sum += d.norm();
    }
    cov /= points.len() as f64;
    let scale_ref = radial_sum / points.len() as f64;
    if !(scale_ref > 0.0) {
        return Err(Error::Degenerate("all vertices coincide".into()));
    }

    let eig = SymmetricEigen::new(cov);
    let mut pairs: Vec<(f64, Vector3<f64>)> = (0..3)
        .map(|i| {
            let v: Vector3<f64> = eig.eigenvectors.column(i).into_owned();
            (eig.eigenvalues[i], orient_axis(v.normalize(), points, &origin))
        })
        .collect();
    let top = pairs.iter().map(|p| p.0).fold(f64::MIN, f64::max);
    let tie = |a: f64, b: f64| (a - b).abs() <= EIGEN_TIE_TOLERANCE * top.abs().max(f64::MIN_POSITIVE);
    pairs.sort_by(|a, b| {
        if tie(a.0, b.0) {
            lexicographic(&b.1, &a.1)
        } else {
            b.0.total_cmp(&a.0)
        }
    });
    if pairs[1].0 <= EIGEN_TIE_TOLERANCE * top {
        return Err(Error::Degenerate("vertices are collinear".into()));
    }
    let degenerate = tie(pairs[0].0, pairs[1].0) || tie(pairs[1].0, pairs[2].0);

    let z = pairs[0].1;
    // Re-orthogonalize the second axis against z before completing the frame.
    let x = (pairs[1].1 - z * z.dot(&pairs[1].1)).normalize();
    let y = z.cross(&x);
    let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    Ok((
        NormalizationFrame {
            origin,
            rotation,
            scale_ref,
        },
        degenerate,
    ))
}

/// Normalization frame of a mesh (vertex-mean origin, PCA axes, mean radius).
pub fn normalization_frame(mesh: &Mesh) -> Result<NormalizationFrame> {
    normalization_frame_of(mesh.vertices()).map(|(f, _)| f)
}

/// Translates the mesh to its centroid and rotates its principal axis onto `z`.
pub fn pca_align(mesh: &Mesh) -> Result<Alignment> {
    let (frame, degenerate) = normalization_frame_of(mesh.vertices())?;
    let vertices = mesh.vertices().iter().map(|p| frame.to_local(p)).collect();
    Ok(Alignment {
        mesh: mesh.with_vertices(vertices)?,
        frame,
        degenerate,
    })
}

/// Flips `axis` so that the vertex with the largest projection magnitude
/// projects positively; the first such vertex wins ties.
fn orient_axis(axis: Vector3<f64>, points: &[Point3<f64>], origin: &Point3<f64>) -> Vector3<f64> {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for p in points {
        let proj = (p - origin).dot(&axis);
        if proj.abs() > best {
            best = proj.abs();
            sign = proj.signum();
        }
    }
    axis * sign
}

fn lexicographic(a: &Vector3<f64>, b: &Vector3<f64>) -> std::cmp::Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Symmetric Hausdorff distance between two point sets under the Euclidean
/// metric.
pub fn hausdorff(a: &[Point3<f64>], b: &[Point3<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg("hausdorff distance of an empty point set"));
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

fn directed_hausdorff(from: &[Point3<f64>], to: &[Point3<f64>]) -> f64 {
    let tree = RTree::bulk_load(to.iter().map(|p| [p.x, p.y, p.z]).collect::<Vec<_>>());
    from.par_iter()
        .map(|p| {
            let q = tree
                .nearest_neighbor(&[p.x, p.y, p.z])
                .expect("tree is non-empty");
            (Point3::new(q[0], q[1], q[2]) - p).norm()
        })
        .reduce(|| 0.0, f64::max)
}
