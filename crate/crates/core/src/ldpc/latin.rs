use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LdpcCode, SparseBinary};
use crate::error::{Error, Result};

const COLUMN_ATTEMPTS: usize = 2000;
const RESTARTS: usize = 200;

/// A `q × q` Latin square over the symbols `0..q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatinSquare {
    q: usize,
    cells: Vec<usize>,
}

impl LatinSquare {
    /// Validates that every symbol appears once per row and column.
    pub fn new(q: usize, cells: Vec<usize>) -> Result<Self> {
        if q < 2 || cells.len() != q * q {
            return Err(Error::arg(format!("need a {q}x{q} array with q >= 2")));
        }
        let mut seen = vec![false; q];
        for line in 0..q {
            for by_row in [true, false] {
                seen.iter_mut().for_each(|s| *s = false);
                for t in 0..q {
                    let cell = if by_row { cells[line * q + t] } else { cells[t * q + line] };
                    if cell >= q || std::mem::replace(&mut seen[cell], true) {
                        return Err(Error::arg(format!(
                            "symbol {cell} breaks the Latin property in {} {line}",
                            if by_row { "row" } else { "column" }
                        )));
                    }
                }
            }
        }
        Ok(LatinSquare { q, cells })
    }

    pub fn order(&self) -> usize {
        self.q
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.cells[i * self.q + j]
    }
}

/// Cayley table of the cyclic group: `cells[i][j] = (i + j) mod q`.
pub fn cayley_latin_square(q: usize) -> Result<LatinSquare> {
    if q < 2 {
        return Err(Error::arg(format!("Latin square order must be at least 2, got {q}")));
    }
    let cells = (0..q * q).map(|c| (c / q + c % q) % q).collect();
    LatinSquare::new(q, cells)
}

/// Permutation matrix with ones exactly where the square holds `alpha`,
/// given as the column of the one in each row.
pub fn perm_from_symbol(square: &LatinSquare, alpha: usize) -> Result<Vec<usize>> {
    let q = square.q;
    if alpha >= q {
        return Err(Error::arg(format!("symbol {alpha} not in 0..{q}")));
    }
    Ok((0..q)
        .map(|i| (0..q).find(|&j| square.get(i, j) == alpha).expect("Latin row holds every symbol"))
        .collect())
}

/// The `μ × η` symbol array a code was assembled from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseMatrix {
    pub q: usize,
    pub w: Vec<Vec<usize>>,
}

impl BaseMatrix {
    pub fn mu(&self) -> usize {
        self.w.len()
    }

    pub fn eta(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }
}

/// Parity-check matrix whose `(i, j)` block is the permutation matrix of
/// symbol `w[i][j]`.
pub fn assemble_h(w: &[Vec<usize>], square: &LatinSquare) -> Result<SparseBinary> {
    let q = square.q;
    let eta = w.first().map_or(0, Vec::len);
    if w.is_empty() || eta == 0 || w.iter().any(|r| r.len() != eta) {
        return Err(Error::arg("base array must be a non-empty rectangle"));
    }
    let perms: Vec<Vec<Vec<usize>>> = w
        .iter()
        .map(|row| row.iter().map(|&a| perm_from_symbol(square, a)).collect())
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(w.len() * q);
    for block_row in &perms {
        for i in 0..q {
            rows.push(block_row.iter().enumerate().map(|(bj, p)| bj * q + p[i]).collect());
        }
    }
    SparseBinary::from_rows(eta * q, rows)
}

/// Builds a `μq × ηq` code over the cyclic Latin square of order `q`.
///
/// The base array is filled column by column with seeded random symbols.
/// A column is accepted only if, for every pair of block rows, its symbol
/// difference differs from those of earlier columns. This difference test is
/// exactly the condition for the assembled matrix to be free of 4-cycles.
pub fn construct_code(q: usize, mu: usize, eta: usize, seed: u64) -> Result<LdpcCode> {
    if mu == 0 || eta == 0 {
        return Err(Error::arg("mu and eta must be positive"));
    }
    if mu > eta {
        return Err(Error::arg(format!("mu = {mu} exceeds eta = {eta}; the rate would not be positive")));
    }
    if eta > q {
        return Err(Error::arg(format!("eta = {eta} exceeds q = {q}; 4-cycles are unavoidable")));
    }
    let square = cayley_latin_square(q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RESTARTS {
        if let Some(w) = search_base(q, mu, eta, &mut rng) {
            let h = assemble_h(&w, &square)?;
            debug_assert!(super::girth_at_least_6(&h));
            return Ok(LdpcCode::from_parity_check(h)?.with_base(BaseMatrix { q, w }));
        }
    }
    Err(Error::Capability(format!(
        "no 4-cycle-free base array found for q = {q}, mu = {mu}, eta = {eta}"
    )))
}

fn search_base(q: usize, mu: usize, eta: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<usize>>> {
    let pairs: Vec<(usize, usize)> = (0..mu).flat_map(|a| (a + 1..mu).map(move |b| (a, b))).collect();
    let mut used = vec![vec![false; q]; pairs.len()];
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(eta);
    for _ in 0..eta {
        let mut accepted = None;
        for _ in 0..COLUMN_ATTEMPTS {
            let col: Vec<usize> = (0..mu).map(|_| rng.random_range(0..q)).collect();
            let diffs: Vec<usize> = pairs.iter().map(|&(a, b)| (col[a] + q - col[b]) % q).collect();
            if diffs.iter().zip(&used).all(|(&d, u)| !u[d]) {
                accepted = Some((col, diffs));
                break;
            }
        }
        let (col, diffs) = accepted?;
        for (d, u) in diffs.into_iter().zip(used.iter_mut()) {
            u[d] = true;
        }
        columns.push(col);
    }
    Some((0..mu).map(|r| columns.iter().map(|c| c[r]).collect()).collect())
}
