//! Scalar and sparse (spread-transform) quantization index modulation, and
//! their application to the normalized radial coordinate of mesh vertices.

use std::collections::HashSet;

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{normalization_frame, Mesh, NormalizationFrame};

/// Embedding parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QimConfig {
    /// Quantization step in normalized radial units.
    pub delta: f64,
    pub spreading_length: usize,
    pub key: u64,
}

impl Default for QimConfig {
    fn default() -> Self {
        QimConfig {
            delta: 0.01,
            spreading_length: 1,
            key: 0,
        }
    }
}

impl QimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if self.spreading_length == 0 {
            return Err(Error::Config("spreading length must be at least 1".into()));
        }
        Ok(())
    }
}

fn dither(u: u8) -> f64 {
    if u == 0 {
        0.25
    } else {
        -0.25
    }
}

fn check_step(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::arg(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// Quantizes `x` onto the coset of bit `u`:
/// `Δ·round((x − d_u)/Δ) + d_u` with dither `d_u = (−1)^u·Δ/4`.
pub fn qim_quantize(x: f64, u: u8, delta: f64) -> Result<f64> {
    check_step(delta)?;
    if !x.is_finite() {
        return Err(Error::arg(format!("cannot quantize non-finite value {x}")));
    }
    if u > 1 {
        return Err(Error::arg(format!("bit must be 0 or 1, got {u}")));
    }
    let d = dither(u) * delta;
    Ok(delta * ((x - d) / delta).round() + d)
}

/// Minimum-distance detection. Exact ties go to bit 0.
pub fn qim_detect(w: f64, delta: f64) -> Result<u8> {
    let d0 = (w - qim_quantize(w, 0, delta)?).abs();
    let d1 = (w - qim_quantize(w, 1, delta)?).abs();
    Ok(u8::from(d1 < d0))
}

/// Unit-norm projection vector for sparse QIM.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionVector {
    values: Vec<f64>,
}

impl ProjectionVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if values.is_empty() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::arg(format!(
                "projection vector must be non-empty with unit norm, got norm {norm}"
            )));
        }
        Ok(ProjectionVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn project(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.values.len() {
            return Err(Error::arg(format!(
                "vector length {} does not match projection length {}",
                x.len(),
                self.values.len()
            )));
        }
        Ok(x.iter().zip(&self.values).map(|(a, b)| a * b).sum())
    }
}

/// Keyed `±1/√L` projection for block `block`. Each block draws from its own
/// ChaCha stream so vectors can be regenerated independently.
pub fn generate_projection(key: u64, block: u64, len: usize) -> Result<ProjectionVector> {
    if len == 0 {
        return Err(Error::arg("projection length must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(block);
    let mag = 1.0 / (len as f64).sqrt();
    let values = (0..len)
        .map(|_| if rng.random::<bool>() { mag } else { -mag })
        .collect();
    ProjectionVector::new(values)
}

/// `y = x + (Q_u(xᵀp) − xᵀp)·p`, so that `yᵀp` lands on the coset of `u`.
pub fn sqim_embed(x: &[f64], p: &ProjectionVector, u: u8, delta: f64) -> Result<Vec<f64>> {
    let proj = p.project(x)?;
    let shift = qim_quantize(proj, u, delta)? - proj;
    Ok(x.iter().zip(p.values()).map(|(xi, pi)| xi + shift * pi).collect())
}

pub fn sqim_detect(r: &[f64], p: &ProjectionVector, delta: f64) -> Result<u8> {
    qim_detect(p.project(r)?, delta)
}

fn check_selection(mesh: &Mesh, selection: &[usize]) -> Result<()> {
    let mut seen = HashSet::with_capacity(selection.len());
    for &v in selection {
        if v >= mesh.vertex_count() {
            return Err(Error::arg(format!("selected vertex {v} is out of range")));
        }
        if !seen.insert(v) {
            return Err(Error::arg(format!("vertex {v} selected twice")));
        }
    }
    Ok(())
}

/// Embeds `bits` into the radial coordinates of `selection` measured in
/// `frame`, starting from the positions in `mesh`. Angles are preserved
/// because each vertex moves along its ray from the frame origin.
pub fn embed_bits_with_frame(
    mesh: &Mesh,
    frame: &NormalizationFrame,
    selection: &[usize],
    bits: &[u8],
    cfg: &QimConfig,
) -> Result<Mesh> {
    cfg.validate()?;
    let l = cfg.spreading_length;
    if selection.len() != bits.len() * l {
        return Err(Error::Capability(format!(
            "{} bits with spreading length {l} need {} vertices, selection has {}",
            bits.len(),
            bits.len() * l,
            selection.len()
        )));
    }
    check_selection(mesh, selection)?;
    let mut vertices = mesh.vertices().to_vec();
    for (block, (verts, &bit)) in selection.chunks(l).zip(bits).enumerate() {
        let p = generate_projection(cfg.key, block as u64, l)?;
        let radii: Vec<f64> = verts.iter().map(|&v| frame.radial(&vertices[v])).collect();
        if let Some(pos) = radii.iter().position(|&r| r == 0.0) {
            return Err(Error::Degenerate(format!(
                "vertex {} sits at the frame origin",
                verts[pos]
            )));
        }
        let moved = sqim_embed(&radii, &p, bit, cfg.delta)?;
        for ((&v, r_old), r_new) in verts.iter().zip(&radii).zip(&moved) {
            if *r_new <= 0.0 {
                return Err(Error::Degenerate(format!(
                    "quantization step too large: vertex {v} would cross the origin"
                )));
            }
            vertices[v] = scale_about(&frame.origin, &vertices[v], r_new / r_old);
        }
    }
    mesh.with_vertices(vertices)
}

fn scale_about(origin: &Point3<f64>, p: &Point3<f64>, factor: f64) -> Point3<f64> {
    origin + (p - origin) * factor
}

/// Embeds `bits` in the mesh's own normalization frame.
///
/// Moving vertices shifts the frame slightly, so embedding is repeated
/// against the frame of the current result until that frame stops changing.
/// The returned mesh then reads back exactly under its own frame.
pub fn embed_bits_in_mesh(mesh: &Mesh, selection: &[usize], bits: &[u8], cfg: &QimConfig) -> Result<Mesh> {
    let mut frame = normalization_frame(mesh)?;
    let mut out = embed_bits_with_frame(mesh, &frame, selection, bits, cfg)?;
    for _ in 0..8 {
        let next = normalization_frame(&out)?;
        if frames_close(&frame, &next) {
            break;
        }
        frame = next;
        out = embed_bits_with_frame(mesh, &frame, selection, bits, cfg)?;
    }
    Ok(out)
}

pub(crate) fn frames_close(a: &NormalizationFrame, b: &NormalizationFrame) -> bool {
    let tol = 1e-15 * a.scale_ref;
    (a.origin - b.origin).norm() <= tol && (a.scale_ref - b.scale_ref).abs() <= tol
}

/// Reads one bit per block of `spreading_length` selected vertices, using the
/// mesh's own normalization frame.
pub fn extract_bits_from_mesh(mesh: &Mesh, selection: &[usize], cfg: &QimConfig) -> Result<Vec<u8>> {
    cfg.validate()?;
    if !selection.len().is_multiple_of(cfg.spreading_length) {
        return Err(Error::arg(format!(
            "selection length {} is not a multiple of {}",
            selection.len(),
            cfg.spreading_length
        )));
    }
    let frame = normalization_frame(mesh)?;
    let aligned: Vec<Option<usize>> = selection.iter().map(|&v| Some(v)).collect();
    extract_bits_aligned(mesh, &aligned, &frame, cfg).map(|bits| bits.into_iter().flatten().collect())
}

/// Block-wise detection where some selected vertices may be missing.
///
/// A block whose vertices are all `None` yields `None` (a deletion). In a
/// partially surviving block the projection is restricted to the survivors
/// and renormalized before detection.
pub fn extract_bits_aligned(
    mesh: &Mesh,
    selection: &[Option<usize>],
    frame: &NormalizationFrame,
    cfg: &QimConfig,
) -> Result<Vec<Option<u8>>> {
    cfg.validate()?;
    let l = cfg.spreading_length;
    if !selection.len().is_multiple_of(l) {
        return Err(Error::arg(format!(
            "selection length {} is not a multiple of {l}",
            selection.len()
        )));
    }
    let n = mesh.vertex_count();
    selection
        .chunks(l)
        .enumerate()
        .map(|(block, verts)| {
            let p = generate_projection(cfg.key, block as u64, l)?;
            let mut radii = Vec::with_capacity(l);
            let mut weights = Vec::with_capacity(l);
            for (slot, v) in verts.iter().enumerate() {
                if let Some(v) = *v {
                    if v >= n {
                        return Err(Error::arg(format!("aligned vertex {v} is out of range")));
                    }
                    radii.push(frame.radial(&mesh.vertices()[v]));
                    weights.push(p.values()[slot]);
                }
            }
            if radii.is_empty() {
                return Ok(None);
            }
            let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
            let sub = ProjectionVector::new(weights.iter().map(|w| w / norm).collect())?;
            sqim_detect(&radii, &sub, cfg.delta).map(Some)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Nearest point of `offset + Δ·Z` to `x` by scanning lattice indices.
    fn lattice_oracle(x: f64, offset: f64, delta: f64) -> f64 {
        let mut best = f64::INFINITY;
        let mut arg = 0.0;
        for k in -1000..=1000 {
            let c = offset + k as f64 * delta;
            if (c - x).abs() < best {
                best = (c - x).abs();
                arg = c;
            }
        }
        arg
    }

    #[test]
    fn quantize_matches_lattice_search() {
        assert!((qim_quantize(0.3, 0, 1.0).unwrap() - lattice_oracle(0.3, 0.25, 1.0)).abs() < 1e-15);
        assert!((qim_quantize(0.3, 0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((qim_quantize(0.3, 1, 1.0).unwrap() - lattice_oracle(0.3, -0.25, 1.0)).abs() < 1e-15);
        assert!((qim_quantize(0.3, 1, 1.0).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(qim_quantize(0.25, 0, 1.0).unwrap(), 0.25);
    }

    #[test]
    fn detect_examples() {
        let d0 = (0.3f64 - 0.25).abs();
        let d1 = (0.3f64 - 0.75).abs();
        assert!(d0 < d1);
        assert_eq!(qim_detect(0.3, 1.0).unwrap(), 0);
        assert_eq!(qim_detect(0.75, 1.0).unwrap(), 1);
        // Exact midpoint between the cosets.
        assert_eq!(qim_detect(0.5, 1.0).unwrap(), 0);
    }

    #[test]
    fn detect_margin() {
        let delta = 1.0;
        let eps = 1e-9;
        for &x in &[-3.7, -0.1, 0.0, 0.49, 12.3] {
            for u in 0..2u8 {
                let q = qim_quantize(x, u, delta).unwrap();
                for e in [delta / 4.0 - eps, -(delta / 4.0 - eps)] {
                    assert_eq!(qim_detect(q + e, delta).unwrap(), u);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(qim_quantize(f64::NAN, 0, 1.0).is_err());
        assert!(qim_quantize(1.0, 0, 0.0).is_err());
        assert!(qim_detect(f64::INFINITY, 1.0).is_err());
        let p = generate_projection(1, 0, 2).unwrap();
        assert!(sqim_embed(&[1.0], &p, 0, 1.0).is_err());
    }

    #[test]
    fn sqim_scalar_specialization() {
        let p = ProjectionVector::new(vec![1.0]).unwrap();
        for &x in &[0.3, -1.2, 4.9] {
            for u in 0..2 {
                assert_eq!(sqim_embed(&[x], &p, u, 0.5).unwrap()[0], qim_quantize(x, u, 0.5).unwrap());
            }
            assert_eq!(sqim_detect(&[x], &p, 0.5).unwrap(), qim_detect(x, 0.5).unwrap());
        }
    }

    #[test]
    fn sqim_two_dimensional_example() {
        let s = 0.5f64.sqrt();
        let p = ProjectionVector::new(vec![s, s]).unwrap();
        let x = [0.1, 0.2];
        let proj = 0.3 * s;
        assert!((proj - 0.21213).abs() < 1e-5);
        let y = sqim_embed(&x, &p, 1, 1.0).unwrap();
        let shift = -0.25 - proj;
        assert!((y[0] - (0.1 + shift * s)).abs() < 1e-12);
        assert!((y[0] + 0.2268).abs() < 1e-4);
        assert!((y[1] + 0.1268).abs() < 1e-4);
        assert!((y[0] * s + y[1] * s + 0.25).abs() < 1e-12);
    }

    #[test]
    fn sqim_fixed_point() {
        let p = generate_projection(3, 0, 3).unwrap();
        let x = vec![0.25 * p.values()[0], 0.25 * p.values()[1], 0.25 * p.values()[2]];
        let y = sqim_embed(&x, &p, 0, 1.0).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_construction() {
        let a = generate_projection(42, 5, 4).unwrap();
        assert_eq!(a, generate_projection(42, 5, 4).unwrap());
        assert!(a.values().iter().all(|v| (v.abs() - 0.5).abs() < 1e-15));
        let differ = (0..64u64)
            .filter(|&k| generate_projection(k, 0, 16).unwrap() != generate_projection(k + 1000, 0, 16).unwrap())
            .count();
        assert!(differ >= 63);
        assert!(generate_projection(1, 0, 0).is_err());
    }

    #[test]
    fn partial_block_reduces_to_scalar() {
        let verts = vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.1, 0.0),
            Point3::new(0.0, 0.0, 0.9),
            Point3::new(-1.0, -1.0, -1.0),
        ];
        let mesh = Mesh::new(verts, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        let cfg = QimConfig {
            delta: 0.05,
            spreading_length: 2,
            key: 9,
        };
        let frame = normalization_frame(&mesh).unwrap();
        let bits = extract_bits_aligned(&mesh, &[Some(0), None], &frame, &cfg).unwrap();
        let p = generate_projection(9, 0, 2).unwrap();
        let signed = p.values()[0].signum() * frame.radial(&mesh.vertices()[0]);
        assert_eq!(bits, vec![Some(qim_detect(signed, 0.05).unwrap())]);
        assert_eq!(extract_bits_aligned(&mesh, &[None, None], &frame, &cfg).unwrap(), vec![None]);
    }

    #[test]
    fn selection_checks() {
        let mesh = Mesh::new(
            vec![Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), Point3::new(0.0, 0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let cfg = QimConfig::default();
        assert!(embed_bits_in_mesh(&mesh, &[0, 0], &[1, 0], &cfg).is_err());
        assert!(embed_bits_in_mesh(&mesh, &[0], &[1, 0], &cfg).is_err());
    }
}
