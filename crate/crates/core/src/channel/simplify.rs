use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{Matrix4, Point3, Vector4};

use super::survival::SurvivalMap;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::stability::{boundary_vertices, nonmanifold_vertices};

/// Result of [`simplify_mesh`].
#[derive(Debug, Clone)]
pub struct Simplified {
    pub mesh: Mesh,
    pub survival: SurvivalMap,
    /// Final face count over the original face count. Larger than the
    /// request when no further collapse was legal.
    pub achieved_fraction: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    u: usize,
    v: usize,
    version_u: u32,
    version_v: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Reversed so that the max-heap pops the cheapest collapse, lowest
    // indices first on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.u.cmp(&self.u))
            .then(other.v.cmp(&self.v))
    }
}

struct Decimator {
    pos: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vf: Vec<Vec<usize>>,
    alive: Vec<bool>,
    fixed: Vec<bool>,
    quadric: Vec<Matrix4<f64>>,
    version: Vec<u32>,
    heap: BinaryHeap<Candidate>,
    live_faces: usize,
}

impl Decimator {
    fn new(mesh: &Mesh) -> Self {
        let n = mesh.vertex_count();
        let mut fixed = vec![false; n];
        for v in boundary_vertices(mesh).into_iter().chain(nonmanifold_vertices(mesh)) {
            fixed[v] = true;
        }
        let pos = mesh.vertices().to_vec();
        let mut quadric = vec![Matrix4::zeros(); n];
        for f in mesh.faces() {
            let (a, b, c) = (pos[f[0]], pos[f[1]], pos[f[2]]);
            let cross = (b - a).cross(&(c - a));
            let double_area = cross.norm();
            if double_area == 0.0 {
                continue;
            }
            let normal = cross / double_area;
            let plane = Vector4::new(normal.x, normal.y, normal.z, -normal.dot(&a.coords));
            let k = plane * plane.transpose() * (0.5 * double_area);
            for &v in f {
                quadric[v] += k;
            }
        }
        let vf = (0..n).map(|v| mesh.incident_faces(v).to_vec()).collect();
        Decimator {
            pos,
            faces: mesh.faces().to_vec(),
            face_alive: vec![true; mesh.face_count()],
            vf,
            alive: vec![true; n],
            fixed,
            quadric,
            version: vec![0; n],
            heap: BinaryHeap::new(),
            live_faces: mesh.face_count(),
        }
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.vf[v]
            .iter()
            .flat_map(|&f| self.faces[f])
            .filter(|&w| w != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn cost(&self, u: usize, v: usize) -> f64 {
        let p = self.pos[v];
        let h = Vector4::new(p.x, p.y, p.z, 1.0);
        let q = self.quadric[u] + self.quadric[v];
        (h.transpose() * q * h)[0].max(0.0)
    }

    fn push(&mut self, u: usize, v: usize) {
        if self.fixed[u] || !self.alive[u] || !self.alive[v] {
            return;
        }
        self.heap.push(Candidate {
            cost: self.cost(u, v),
            u,
            v,
            version_u: self.version[u],
            version_v: self.version[v],
        });
    }

    fn shared_faces(&self, u: usize, v: usize) -> Vec<usize> {
        self.vf[u]
            .iter()
            .copied()
            .filter(|&f| self.faces[f].contains(&v))
            .collect()
    }

    fn is_legal(&self, u: usize, v: usize) -> bool {
        let shared = self.shared_faces(u, v);
        if shared.len() != 2 {
            return false;
        }
        let opposite: Vec<usize> = shared
            .iter()
            .map(|&f| *self.faces[f].iter().find(|&&w| w != u && w != v).expect("triangle"))
            .collect();
        if opposite[0] == opposite[1] {
            return false;
        }
        // Link condition: the only common neighbours are the two opposite
        // corners, otherwise the collapse pinches the surface.
        let nu = self.neighbors(u);
        let nv = self.neighbors(v);
        let common = nu.iter().filter(|w| nv.binary_search(w).is_ok()).count();
        if common != 2 {
            return false;
        }
        if opposite.iter().any(|&w| self.neighbors(w).len() <= 3) || nu.len() < 3 {
            return false;
        }
        for &f in &self.vf[u] {
            if shared.contains(&f) {
                continue;
            }
            let tri = self.faces[f];
            let corner = |w: usize, moved: bool| if w == u && moved { self.pos[v] } else { self.pos[w] };
            let normal = |moved: bool| {
                let (a, b, c) = (corner(tri[0], moved), corner(tri[1], moved), corner(tri[2], moved));
                (b - a).cross(&(c - a))
            };
            let (before, after) = (normal(false), normal(true));
            if after.dot(&before) <= 0.0 || after.norm() <= 1e-12 * before.norm() {
                return false;
            }
        }
        true
    }

    fn collapse(&mut self, u: usize, v: usize) {
        for f in self.shared_faces(u, v) {
            self.face_alive[f] = false;
            self.live_faces -= 1;
            for w in self.faces[f] {
                self.vf[w].retain(|&g| g != f);
            }
        }
        for f in std::mem::take(&mut self.vf[u]) {
            for w in self.faces[f].iter_mut() {
                if *w == u {
                    *w = v;
                }
            }
            self.vf[v].push(f);
        }
        self.vf[v].sort_unstable();
        self.alive[u] = false;
        let qu = self.quadric[u];
        self.quadric[v] += qu;

        let mut ring = self.neighbors(v);
        ring.push(v);
        for &x in &ring {
            self.version[x] = self.version[x].wrapping_add(1);
        }
        for &x in &ring {
            for y in self.neighbors(x) {
                self.push(x, y);
                self.push(y, x);
            }
        }
    }

    fn run(&mut self, target_faces: usize) {
        for u in 0..self.pos.len() {
            for v in self.neighbors(u) {
                self.push(u, v);
            }
        }
        while self.live_faces > target_faces {
            let Some(c) = self.heap.pop() else { break };
            if !self.alive[c.u]
                || !self.alive[c.v]
                || self.version[c.u] != c.version_u
                || self.version[c.v] != c.version_v
            {
                continue;
            }
            if self.is_legal(c.u, c.v) {
                self.collapse(c.u, c.v);
            }
        }
    }
}

/// Decimates `mesh` by quadric-error half-edge collapses until at most
/// `face_fraction` of the faces remain.
///
/// A vertex `u` collapses onto a neighbour `v` that keeps its position, at
/// cost `(Q_u + Q_v)(v)`. Boundary and non-manifold vertices never move
/// away. Collapses violating the link condition, flipping a face or leaving
/// a valence-3 corner are skipped; if nothing legal remains the decimation
/// stops early. Survivors keep their relative order.
pub fn simplify_mesh(mesh: &Mesh, face_fraction: f64) -> Result<Simplified> {
    if !(face_fraction > 0.0 && face_fraction <= 1.0) {
        return Err(Error::arg(format!("face fraction must lie in (0, 1], got {face_fraction}")));
    }
    let original = mesh.face_count();
    let target = (face_fraction * original as f64).floor() as usize;
    if target >= original {
        return Ok(Simplified {
            mesh: mesh.clone(),
            survival: SurvivalMap::identity(mesh.vertex_count()),
            achieved_fraction: 1.0,
        });
    }
    let mut d = Decimator::new(mesh);
    d.run(target);

    let survival = SurvivalMap::from_survivors(&d.alive);
    let vertices = d
        .pos
        .iter()
        .zip(&d.alive)
        .filter(|(_, &a)| a)
        .map(|(p, _)| *p)
        .collect();
    let faces = d
        .faces
        .iter()
        .zip(&d.face_alive)
        .filter(|(_, &a)| a)
        .map(|(f, _)| f.map(|w| survival.new_index(w).expect("face corners survive")))
        .collect();
    Ok(Simplified {
        mesh: Mesh::new(vertices, faces)?,
        survival,
        achieved_fraction: if original == 0 {
            1.0
        } else {
            d.live_faces as f64 / original as f64
        },
    })
}
