//! Discrete curvature, topology checks and the vertex stability ranking used
//! to pick embedding locations that survive simplification.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::io::Write;

use nalgebra::Vector3;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Per-vertex curvature and topology summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexMetrics {
    /// Angle deficit divided by the barycentric area (1/units²).
    pub gaussian_curvature: f64,
    /// Signed mean curvature (1/units); positive where the surface is convex.
    /// Zero on boundary vertices, where it is undefined.
    pub mean_curvature: f64,
    pub angle_deficit: f64,
    pub is_boundary: bool,
    pub is_nonmanifold: bool,
    /// One third of the summed incident triangle areas.
    pub one_ring_area: f64,
}

/// Scoring configuration for [`stability_rank`].
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityConfig {
    /// Weights of the Gaussian percentile, mean percentile and concavity bonus.
    pub weights: [f64; 3],
    /// Vertices whose best curvature percentile falls below this are dropped.
    pub risky_percentile: f64,
    pub min_vertices: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            weights: [0.5, 0.3, 0.2],
            risky_percentile: 0.20,
            min_vertices: 4,
        }
    }
}

impl StabilityConfig {
    /// Hex SHA-256 of the canonical textual form of the configuration.
    pub fn digest(&self) -> String {
        let canonical = format!(
            "weights={:?},{:?},{:?};risky_percentile={:?};min_vertices={}",
            self.weights[0], self.weights[1], self.weights[2], self.risky_percentile, self.min_vertices
        );
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Vertices ordered by decreasing stability.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRanking {
    pub scores: Vec<f64>,
    pub indices: Vec<usize>,
    pub config_digest: String,
    /// Metrics of each ranked vertex, parallel to `indices`.
    pub metrics: Vec<VertexMetrics>,
}

impl StabilityRanking {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Writes `index,score,kappa_g,kappa_h` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "score", "kappa_g", "kappa_h"])?;
        for ((i, s), m) in self.indices.iter().zip(&self.scores).zip(&self.metrics) {
            w.write_record([
                i.to_string(),
                s.to_string(),
                m.gaussian_curvature.to_string(),
                m.mean_curvature.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    // atan2 form stays accurate for nearly parallel edges.
    a.cross(b).norm().atan2(a.dot(b))
}

fn cot(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let c = a.cross(b).norm();
    if c <= f64::MIN_POSITIVE {
        0.0
    } else {
        a.dot(b) / c
    }
}

/// Corners of face `f` rotated so that `v` comes first, keeping orientation.
fn rotated(f: &[usize; 3], v: usize) -> (usize, usize) {
    if f[0] == v {
        (f[1], f[2])
    } else if f[1] == v {
        (f[2], f[0])
    } else {
        (f[0], f[1])
    }
}

fn angle_sum_and_area(mesh: &Mesh, v: usize) -> Result<(f64, f64)> {
    let faces = mesh.incident_faces(v);
    if faces.is_empty() {
        return Err(Error::arg(format!("vertex {v} has no incident faces")));
    }
    let p = mesh.vertices();
    let mut angles = 0.0;
    let mut area = 0.0;
    for &fi in faces {
        let (j, k) = rotated(&mesh.faces()[fi], v);
        let e1 = p[j] - p[v];
        let e2 = p[k] - p[v];
        angles += angle_between(&e1, &e2);
        area += e1.cross(&e2).norm() / 6.0;
    }
    Ok((angles, area))
}

/// Angle deficit at `v`: `2π − Σθ` for interior vertices and `π − Σθ` on the
/// boundary.
pub fn angle_deficit(mesh: &Mesh, v: usize) -> Result<f64> {
    check_vertex(mesh, v)?;
    let (angles, _) = angle_sum_and_area(mesh, v)?;
    let full = if is_boundary_vertex(mesh, v) { PI } else { 2.0 * PI };
    Ok(full - angles)
}

/// Gaussian curvature at `v` as angle deficit per barycentric area.
pub fn gaussian_curvature(mesh: &Mesh, v: usize) -> Result<f64> {
    check_vertex(mesh, v)?;
    let (angles, area) = angle_sum_and_area(mesh, v)?;
    if area <= 0.0 {
        return Err(Error::Degenerate(format!("vertex {v} has zero one-ring area")));
    }
    let full = if is_boundary_vertex(mesh, v) { PI } else { 2.0 * PI };
    Ok((full - angles) / area)
}

/// Signed mean curvature at an interior vertex from the cotangent Laplacian.
///
/// The magnitude is `|Σ (cot α + cot β)(p_j − p_i)| / (4A)`; the sign is
/// positive when the Laplace vector points against the area-weighted face
/// normal, i.e. on convex parts of an outward-oriented surface.
pub fn mean_curvature(mesh: &Mesh, v: usize) -> Result<f64> {
    check_vertex(mesh, v)?;
    if mesh.incident_faces(v).is_empty() {
        return Err(Error::arg(format!("vertex {v} has no incident faces")));
    }
    if is_boundary_vertex(mesh, v) {
        return Err(Error::arg(format!("mean curvature undefined at boundary vertex {v}")));
    }
    let (h, _) = mean_curvature_unchecked(mesh, v);
    h
}

fn mean_curvature_unchecked(mesh: &Mesh, v: usize) -> (Result<f64>, f64) {
    let p = mesh.vertices();
    let mut laplace = Vector3::zeros();
    let mut normal = Vector3::zeros();
    let mut area = 0.0;
    for &fi in mesh.incident_faces(v) {
        let (j, k) = rotated(&mesh.faces()[fi], v);
        let (pv, pj, pk) = (p[v], p[j], p[k]);
        laplace += cot(&(pv - pk), &(pj - pk)) * (pj - pv);
        laplace += cot(&(pv - pj), &(pk - pj)) * (pk - pv);
        let n = (pj - pv).cross(&(pk - pv));
        normal += n;
        area += n.norm() / 6.0;
    }
    if area <= 0.0 {
        return (
            Err(Error::Degenerate(format!("vertex {v} has zero one-ring area"))),
            area,
        );
    }
    let magnitude = laplace.norm() / (4.0 * area);
    let sign = if laplace.dot(&normal) > 0.0 { -1.0 } else { 1.0 };
    (Ok(sign * magnitude), area)
}

fn check_vertex(mesh: &Mesh, v: usize) -> Result<()> {
    if v >= mesh.vertex_count() {
        return Err(Error::arg(format!(
            "vertex {v} out of range for {} vertices",
            mesh.vertex_count()
        )));
    }
    Ok(())
}

fn is_boundary_vertex(mesh: &Mesh, v: usize) -> bool {
    mesh.neighbors(v)
        .iter()
        .any(|&w| edge_multiplicity(mesh, v, w) == 1)
}

fn edge_multiplicity(mesh: &Mesh, a: usize, b: usize) -> usize {
    mesh.incident_faces(a)
        .iter()
        .filter(|&&fi| mesh.faces()[fi].contains(&b))
        .count()
}

/// Vertices incident to an edge that belongs to exactly one face.
pub fn boundary_vertices(mesh: &Mesh) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for ((a, b), faces) in mesh.edge_faces() {
        if faces.len() == 1 {
            out.insert(a);
            out.insert(b);
        }
    }
    out
}

/// Vertices on an edge shared by three or more faces, or whose incident
/// faces do not form a single edge-connected fan.
pub fn nonmanifold_vertices(mesh: &Mesh) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for ((a, b), faces) in mesh.edge_faces() {
        if faces.len() >= 3 {
            out.insert(a);
            out.insert(b);
        }
    }
    for v in 0..mesh.vertex_count() {
        if !out.contains(&v) && !single_fan(mesh, v) {
            out.insert(v);
        }
    }
    out
}

fn single_fan(mesh: &Mesh, v: usize) -> bool {
    let faces = mesh.incident_faces(v);
    if faces.len() <= 1 {
        return true;
    }
    let mut seen = vec![false; faces.len()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut reached = 1;
    while let Some(i) = stack.pop() {
        let fi = &mesh.faces()[faces[i]];
        for (j, &gj) in faces.iter().enumerate() {
            if seen[j] {
                continue;
            }
            let g = &mesh.faces()[gj];
            let shares_spoke = fi.iter().any(|&w| w != v && g.contains(&w));
            if shares_spoke {
                seen[j] = true;
                reached += 1;
                stack.push(j);
            }
        }
    }
    reached == faces.len()
}

/// Euler characteristic `V − E + F`.
pub fn euler_characteristic(mesh: &Mesh) -> i64 {
    mesh.vertex_count() as i64 - mesh.edge_count() as i64 + mesh.face_count() as i64
}

/// Sum of angle deficits over all vertices with incident faces.
pub fn total_angle_deficit(mesh: &Mesh) -> Result<f64> {
    let mut total = 0.0;
    for v in 0..mesh.vertex_count() {
        if !mesh.incident_faces(v).is_empty() {
            total += angle_deficit(mesh, v)?;
        }
    }
    Ok(total)
}

/// Metrics of every vertex. Isolated vertices get zero curvature and area.
pub fn vertex_metrics(mesh: &Mesh) -> Vec<VertexMetrics> {
    let boundary = boundary_vertices(mesh);
    let nonmanifold = nonmanifold_vertices(mesh);
    (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| {
            let is_boundary = boundary.contains(&v);
            let is_nonmanifold = nonmanifold.contains(&v);
            if mesh.incident_faces(v).is_empty() {
                return VertexMetrics {
                    gaussian_curvature: 0.0,
                    mean_curvature: 0.0,
                    angle_deficit: 0.0,
                    is_boundary,
                    is_nonmanifold,
                    one_ring_area: 0.0,
                };
            }
            let (angles, area) = angle_sum_and_area(mesh, v).unwrap_or((0.0, 0.0));
            let deficit = if is_boundary { PI } else { 2.0 * PI } - angles;
            let mean = if is_boundary {
                0.0
            } else {
                mean_curvature_unchecked(mesh, v).0.unwrap_or(0.0)
            };
            VertexMetrics {
                gaussian_curvature: if area > 0.0 { deficit / area } else { 0.0 },
                mean_curvature: mean,
                angle_deficit: deficit,
                is_boundary,
                is_nonmanifold,
                one_ring_area: area,
            }
        })
        .collect()
}

/// Fraction of `sorted` strictly below `x`.
fn percentile(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&y| y < x) as f64 / sorted.len() as f64
}

/// Ranks vertices by predicted stability.
///
/// Boundary, non-manifold, flat and low-curvature ("risky") vertices are
/// excluded. Each remaining vertex scores
/// `w₀·pct(|κ_G|) + w₁·pct(|κ_H|) + w₂·[κ_H < 0]`, where `pct` is the
/// fraction of eligible vertices with strictly smaller magnitude. Ties are
/// broken by ascending vertex index.
pub fn stability_rank(mesh: &Mesh, config: &StabilityConfig) -> Result<StabilityRanking> {
    if mesh.vertex_count() < config.min_vertices {
        return Err(Error::Capability(format!(
            "mesh has {} vertices, ranking needs at least {}",
            mesh.vertex_count(),
            config.min_vertices
        )));
    }
    let metrics = vertex_metrics(mesh);
    let h = mesh.mean_edge_length();
    let eligible: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| {
            let m = &metrics[v];
            !m.is_boundary && !m.is_nonmanifold && m.one_ring_area > 0.0
        })
        .collect();
    let sorted_abs = |f: fn(&VertexMetrics) -> f64| {
        let mut vals: Vec<f64> = eligible.iter().map(|&v| f(&metrics[v]).abs()).collect();
        vals.sort_by(f64::total_cmp);
        vals
    };
    let gauss = sorted_abs(|m| m.gaussian_curvature);
    let mean = sorted_abs(|m| m.mean_curvature);

    let [w_g, w_h, w_c] = config.weights;
    let mut scored: Vec<(f64, usize)> = eligible
        .iter()
        .filter_map(|&v| {
            let m = &metrics[v];
            let flat = m.gaussian_curvature.abs() * h * h < 1e-9 && m.mean_curvature.abs() * h < 1e-9;
            let pg = percentile(&gauss, m.gaussian_curvature.abs());
            let ph = percentile(&mean, m.mean_curvature.abs());
            if flat || pg.max(ph) < config.risky_percentile {
                return None;
            }
            let concave = if m.mean_curvature < 0.0 { 1.0 } else { 0.0 };
            Some((w_g * pg + w_h * ph + w_c * concave, v))
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    Ok(StabilityRanking {
        scores: scored.iter().map(|s| s.0).collect(),
        metrics: scored.iter().map(|s| metrics[s.1]).collect(),
        indices: scored.into_iter().map(|s| s.1).collect(),
        config_digest: config.digest(),
    })
}

/// The first `count` ranked vertices in ranking order.
///
/// The key is accepted for interface stability; the selection does not
/// depend on it.
pub fn select_embedding_vertices(ranking: &StabilityRanking, count: usize, _key: u64) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::arg("selection count must be positive"));
    }
    if count > ranking.len() {
        return Err(Error::Capability(format!(
            "requested {count} vertices but only {} are eligible",
            ranking.len()
        )));
    }
    Ok(ranking.indices[..count].to_vec())
}

/// Unit area-weighted normal at `v`, or zero when undefined.
pub fn vertex_normal(mesh: &Mesh, v: usize) -> Vector3<f64> {
    let p = mesh.vertices();
    let mut n = Vector3::zeros();
    for &fi in mesh.incident_faces(v) {
        let (j, k) = rotated(&mesh.faces()[fi], v);
        n += (p[j] - p[v]).cross(&(p[k] - p[v]));
    }
    n.try_normalize(0.0).unwrap_or_else(Vector3::zeros)
}
