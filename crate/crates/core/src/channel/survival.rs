use std::collections::VecDeque;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Fate of every original vertex after an attack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivalMap {
    new_index: Vec<Option<usize>>,
}

impl SurvivalMap {
    /// Map for a mesh where nothing changed.
    pub fn identity(n: usize) -> Self {
        SurvivalMap {
            new_index: (0..n).map(Some).collect(),
        }
    }

    /// Builds a map from per-vertex survival flags, numbering survivors in
    /// their original order.
    pub fn from_survivors(alive: &[bool]) -> Self {
        let mut next = 0;
        let new_index = alive
            .iter()
            .map(|&a| {
                a.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        SurvivalMap { new_index }
    }

    /// Validates injectivity of the surviving indices.
    pub fn from_entries(new_index: Vec<Option<usize>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (v, idx) in new_index.iter().enumerate() {
            if let Some(i) = idx {
                if !seen.insert(*i) {
                    return Err(Error::arg(format!("vertex {v} reuses new index {i}")));
                }
            }
        }
        Ok(SurvivalMap { new_index })
    }

    pub fn original_count(&self) -> usize {
        self.new_index.len()
    }

    pub fn new_index(&self, original: usize) -> Option<usize> {
        self.new_index.get(original).copied().flatten()
    }

    pub fn survived(&self, original: usize) -> bool {
        self.new_index(original).is_some()
    }

    pub fn survivor_count(&self) -> usize {
        self.new_index.iter().filter(|i| i.is_some()).count()
    }

    pub fn deleted_count(&self) -> usize {
        self.original_count() - self.survivor_count()
    }

    /// Longest stretch of deleted vertices along `selection`.
    pub fn max_consecutive_deleted(&self, selection: &[usize]) -> usize {
        deletion_pattern(selection, self).max_consecutive
    }

    /// Writes `original_index,survived,new_index` rows; deleted vertices
    /// leave `new_index` empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["original_index", "survived", "new_index"])?;
        for (v, idx) in self.new_index.iter().enumerate() {
            w.write_record([
                v.to_string(),
                u8::from(idx.is_some()).to_string(),
                idx.map(|i| i.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut entries = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = row + 2;
            let field = |i: usize| rec.get(i).unwrap_or("").trim();
            let orig: usize = field(0)
                .parse()
                .map_err(|_| Error::parse(line, format!("bad original index {:?}", field(0))))?;
            if orig != entries.len() {
                return Err(Error::parse(line, format!("expected original index {}", entries.len())));
            }
            let entry = match field(1) {
                "1" => Some(
                    field(2)
                        .parse()
                        .map_err(|_| Error::parse(line, format!("bad new index {:?}", field(2))))?,
                ),
                "0" => None,
                other => return Err(Error::parse(line, format!("bad survived flag {other:?}"))),
            };
            entries.push(entry);
        }
        SurvivalMap::from_entries(entries)
    }
}

/// Survival of an ordered selection of marked vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DeletionPattern {
    pub survived: Vec<bool>,
    pub p_hat: f64,
    pub max_consecutive: usize,
}

pub fn deletion_pattern(selection: &[usize], map: &SurvivalMap) -> DeletionPattern {
    let survived: Vec<bool> = selection.iter().map(|&v| map.survived(v)).collect();
    let deleted = survived.iter().filter(|s| !**s).count();
    let mut run = 0;
    let mut max_consecutive = 0;
    for &s in &survived {
        run = if s { 0 } else { run + 1 };
        max_consecutive = max_consecutive.max(run);
    }
    DeletionPattern {
        p_hat: if selection.is_empty() {
            0.0
        } else {
            deleted as f64 / selection.len() as f64
        },
        survived,
        max_consecutive,
    }
}

/// Keeps the vertices flagged alive, dropping every face that touches a
/// removed vertex.
pub fn retain_vertices(mesh: &Mesh, alive: &[bool]) -> Result<(Mesh, SurvivalMap)> {
    let map = SurvivalMap::from_survivors(alive);
    let vertices = mesh
        .vertices()
        .iter()
        .zip(alive)
        .filter(|(_, &a)| a)
        .map(|(p, _)| *p)
        .collect();
    let faces = mesh
        .faces()
        .iter()
        .filter_map(|f| {
            Some([map.new_index(f[0])?, map.new_index(f[1])?, map.new_index(f[2])?])
        })
        .collect();
    Ok((Mesh::new(vertices, faces)?, map))
}

/// Removes every vertex within `radius_hops` edges of `center`.
pub fn region_delete(mesh: &Mesh, center: usize, radius_hops: usize) -> Result<(Mesh, SurvivalMap)> {
    if center >= mesh.vertex_count() {
        return Err(Error::arg(format!(
            "center {center} out of range for {} vertices",
            mesh.vertex_count()
        )));
    }
    let mut hops = vec![usize::MAX; mesh.vertex_count()];
    hops[center] = 0;
    let mut queue = VecDeque::from([center]);
    while let Some(v) = queue.pop_front() {
        if hops[v] == radius_hops {
            continue;
        }
        for &w in mesh.neighbors(v) {
            if hops[w] == usize::MAX {
                hops[w] = hops[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let alive: Vec<bool> = hops.iter().map(|&h| h == usize::MAX).collect();
    if !alive.iter().any(|&a| a) {
        return Err(Error::Capability("region deletion would remove every vertex".into()));
    }
    retain_vertices(mesh, &alive)
}

/// Smallest hop radius around `center` deleting at least `fraction` of the
/// vertices.
pub fn radius_for_fraction(mesh: &Mesh, center: usize, fraction: f64) -> Result<usize> {
    if center >= mesh.vertex_count() {
        return Err(Error::arg(format!("center {center} out of range")));
    }
    let target = (fraction * mesh.vertex_count() as f64).ceil() as usize;
    let mut hops = vec![usize::MAX; mesh.vertex_count()];
    hops[center] = 0;
    let mut queue = VecDeque::from([center]);
    let mut counts: Vec<usize> = vec![1];
    while let Some(v) = queue.pop_front() {
        for &w in mesh.neighbors(v) {
            if hops[w] == usize::MAX {
                hops[w] = hops[v] + 1;
                if counts.len() <= hops[w] {
                    counts.push(0);
                }
                counts[hops[w]] += 1;
                queue.push_back(w);
            }
        }
    }
    let mut total = 0;
    for (r, c) in counts.iter().enumerate() {
        total += c;
        if total >= target {
            return Ok(r);
        }
    }
    Err(Error::Capability(format!(
        "the component around {center} holds fewer than {target} vertices"
    )))
}
