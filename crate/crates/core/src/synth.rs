//! Seeded synthetic test meshes: a feature-laden sphere, a terrain patch, a
//! spiked torus and plain icospheres.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Radial feature on a sphere: a Gaussian bump (positive height) or dent.
struct Bump {
    center: Vector3<f64>,
    width: f64,
    height: f64,
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Projected cube with `6n² + 2` vertices on the unit sphere, outward
/// oriented.
fn cube_sphere_base(n: usize) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut dirs = Vec::new();
    let mut faces = Vec::new();
    let n = n as i64;
    let mut id = |c: [i64; 3], dirs: &mut Vec<Vector3<f64>>| {
        *index.entry(c).or_insert_with(|| {
            let v = Vector3::new(c[0] as f64, c[1] as f64, c[2] as f64) * (2.0 / n as f64)
                - Vector3::repeat(1.0);
            dirs.push(v.normalize());
            dirs.len() - 1
        })
    };
    // Each cube face: fixed axis, its value, and two in-plane axes ordered so
    // that (a × b) points outward.
    let sides: [(usize, i64, usize, usize); 6] = [
        (0, n, 1, 2),
        (0, 0, 2, 1),
        (1, n, 2, 0),
        (1, 0, 0, 2),
        (2, n, 0, 1),
        (2, 0, 1, 0),
    ];
    for (axis, value, a, b) in sides {
        let at = |i: i64, j: i64| {
            let mut c = [0; 3];
            c[axis] = value;
            c[a] = i;
            c[b] = j;
            c
        };
        for i in 0..n {
            for j in 0..n {
                let v00 = id(at(i, j), &mut dirs);
                let v10 = id(at(i + 1, j), &mut dirs);
                let v11 = id(at(i + 1, j + 1), &mut dirs);
                let v01 = id(at(i, j + 1), &mut dirs);
                faces.push([v00, v10, v11]);
                faces.push([v00, v11, v01]);
            }
        }
    }
    (dirs, faces)
}

/// Sphere of about `6n²` vertices carrying Gaussian bumps, dents and
/// single-vertex spikes, with mild radial roughness.
pub fn feature_sphere(n: usize, seed: u64) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::arg("cube-sphere resolution must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dirs, faces) = cube_sphere_base(n);
    let bumps: Vec<Bump> = (0..24)
        .map(|i| Bump {
            center: random_direction(&mut rng),
            width: rng.random_range(0.08..0.25),
            height: if i % 3 == 2 { -1.0 } else { 1.0 } * rng.random_range(0.05..0.15),
        })
        .collect();
    let h = 2.0 / n as f64;
    let mut radii: Vec<f64> = dirs
        .iter()
        .map(|d| {
            let mut r = 1.0;
            for b in &bumps {
                let angle = d.dot(&b.center).clamp(-1.0, 1.0).acos();
                r += b.height * (-0.5 * (angle / b.width).powi(2)).exp();
            }
            r + rng.random_range(-0.02..0.02) * h
        })
        .collect();
    add_spikes(&mut radii, dirs.len() / 40, h, &mut rng);
    let vertices = dirs.iter().zip(&radii).map(|(d, r)| Point3::from(d * *r)).collect();
    Mesh::new(vertices, faces)
}

/// Raises or lowers `count` random vertices by a few edge lengths.
fn add_spikes(values: &mut [f64], count: usize, h: f64, rng: &mut ChaCha8Rng) {
    for _ in 0..count {
        let v = rng.random_range(0..values.len());
        let sign = if rng.random_bool(0.7) { 1.0 } else { -1.0 };
        values[v] += sign * rng.random_range(1.0..3.0) * h;
    }
}

/// Open height field on a `side × side` grid over the unit square with
/// hills, a ridge and spikes. Its border is a mesh boundary.
pub fn terrain(side: usize, seed: u64) -> Result<Mesh> {
    if side < 3 {
        return Err(Error::arg("terrain needs at least 3 samples per side"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hills: Vec<(f64, f64, f64, f64)> = (0..30)
        .map(|_| {
            (
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.03..0.12),
                rng.random_range(-0.08..0.15),
            )
        })
        .collect();
    let h = 1.0 / (side - 1) as f64;
    let mut heights = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let mut z = 0.04 * (-(((x - y) * 6.0).powi(2))).exp();
            for &(cx, cy, w, a) in &hills {
                z += a * (-0.5 * ((x - cx).powi(2) + (y - cy).powi(2)) / (w * w)).exp();
            }
            heights.push(z + rng.random_range(-0.02..0.02) * h);
        }
    }
    add_spikes(&mut heights, side * side / 40, h, &mut rng);
    let mut vertices = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            vertices.push(Point3::new(i as f64 * h, j as f64 * h, heights[i * side + j]));
        }
    }
    let mut faces = Vec::with_capacity(2 * (side - 1) * (side - 1));
    for i in 0..side - 1 {
        for j in 0..side - 1 {
            let a = i * side + j;
            faces.push([a, a + side, a + side + 1]);
            faces.push([a, a + side + 1, a + 1]);
        }
    }
    Mesh::new(vertices, faces)
}

/// Torus with `major × minor` vertices, tube radius 0.35 around a unit
/// circle, with spikes along the tube normal and mild roughness.
pub fn spiked_torus(major: usize, minor: usize, seed: u64) -> Result<Mesh> {
    if major < 3 || minor < 3 {
        return Err(Error::arg("torus needs at least 3 samples in each direction"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tube = 0.35;
    let h = 2.0 * PI * tube / minor as f64;
    let mut offsets: Vec<f64> = (0..major * minor).map(|_| rng.random_range(-0.02..0.02) * h).collect();
    let ribs: Vec<(f64, f64)> = (0..12)
        .map(|_| (rng.random_range(0.0..2.0 * PI), rng.random_range(0.02..0.06)))
        .collect();
    add_spikes(&mut offsets, major * minor / 40, h, &mut rng);
    let mut vertices = Vec::with_capacity(major * minor);
    for i in 0..major {
        let u = 2.0 * PI * i as f64 / major as f64;
        for j in 0..minor {
            let v = 2.0 * PI * j as f64 / minor as f64;
            let rib: f64 = ribs
                .iter()
                .map(|&(c, a)| {
                    let d = (u - c + PI).rem_euclid(2.0 * PI) - PI;
                    a * (-0.5 * (d / 0.08).powi(2)).exp()
                })
                .sum();
            let r = tube + rib + offsets[i * minor + j];
            let ring = 1.0 + r * v.cos();
            vertices.push(Point3::new(ring * u.cos(), ring * u.sin(), r * v.sin()));
        }
    }
    let at = |i: usize, j: usize| (i % major) * minor + j % minor;
    let mut faces = Vec::with_capacity(2 * major * minor);
    for i in 0..major {
        for j in 0..minor {
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    Mesh::new(vertices, faces)
}

/// Unit icosphere after `subdivisions` rounds of midpoint subdivision
/// (`10·4^s + 2` vertices).
pub fn icosphere(subdivisions: usize) -> Result<Mesh> {
    if subdivisions > 8 {
        return Err(Error::arg("at most 8 subdivisions are supported"));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                verts.len() - 1
            })
        };
        faces = faces
            .iter()
            .flat_map(|&[a, b, c]| {
                let ab = mid(a, b, &mut verts);
                let bc = mid(b, c, &mut verts);
                let ca = mid(c, a, &mut verts);
                [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
            })
            .collect();
    }
    Mesh::new(verts.into_iter().map(Point3::from).collect(), faces)
}
