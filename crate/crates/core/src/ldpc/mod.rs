//! LDPC codes: Latin-square construction, systematic encoding, sum-product
//! decoding and alist exchange.

mod alist;
mod decode;
mod encode;
mod latin;

use std::collections::HashSet;

pub use alist::{parse_alist, write_alist};
pub use decode::{sp_decode, DecodeResult, DecoderState};
pub use encode::SystematicEncoder;
pub use latin::{assemble_h, cayley_latin_square, construct_code, perm_from_symbol, BaseMatrix, LatinSquare};

use crate::error::{Error, Result};

/// Binary matrix stored as row and column adjacency lists, both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinary {
    rows: usize,
    cols: usize,
    row_adj: Vec<Vec<usize>>,
    col_adj: Vec<Vec<usize>>,
}

impl SparseBinary {
    /// Builds a matrix from the column indices of each row. Duplicate
    /// entries are rejected.
    pub fn from_rows(cols: usize, row_adj: Vec<Vec<usize>>) -> Result<Self> {
        let rows = row_adj.len();
        let mut col_adj = vec![Vec::new(); cols];
        let mut sorted_rows = Vec::with_capacity(rows);
        for (r, mut entries) in row_adj.into_iter().enumerate() {
            entries.sort_unstable();
            if entries.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::arg(format!("row {r} lists a column twice")));
            }
            for &c in &entries {
                if c >= cols {
                    return Err(Error::arg(format!("row {r} references column {c} of {cols}")));
                }
                col_adj[c].push(r);
            }
            sorted_rows.push(entries);
        }
        Ok(SparseBinary {
            rows,
            cols,
            row_adj: sorted_rows,
            col_adj,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseBinary::from_rows(n, (0..n).map(|i| vec![i]).collect()).expect("valid identity")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_adj[r]
    }

    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_adj[c]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row_adj[r].binary_search(&c).is_ok()
    }

    pub fn nnz(&self) -> usize {
        self.row_adj.iter().map(Vec::len).sum()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        self.col_adj.iter().map(Vec::len).collect()
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.row_adj.iter().map(Vec::len).collect()
    }

    /// Rank over GF(2).
    pub fn rank(&self) -> usize {
        encode::reduce(self).pivots.len()
    }
}

/// `x·Hᵀ` over GF(2).
pub fn syndrome(h: &SparseBinary, x: &[u8]) -> Result<Vec<u8>> {
    if x.len() != h.cols {
        return Err(Error::arg(format!(
            "word length {} does not match code length {}",
            x.len(),
            h.cols
        )));
    }
    Ok(h.row_adj
        .iter()
        .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ (x[c] & 1)))
        .collect())
}

pub fn is_codeword(h: &SparseBinary, x: &[u8]) -> Result<bool> {
    Ok(syndrome(h, x)?.iter().all(|&s| s == 0))
}

/// True when no two columns share more than one row, i.e. the Tanner graph
/// has no 4-cycles.
pub fn girth_at_least_6(h: &SparseBinary) -> bool {
    let mut seen = HashSet::with_capacity(h.nnz() * 4);
    for row in &h.row_adj {
        for (i, &a) in row.iter().enumerate() {
            for &b in &row[i + 1..] {
                if !seen.insert((a, b)) {
                    return false;
                }
            }
        }
    }
    true
}

/// A binary LDPC code with its systematic encoder.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    h: SparseBinary,
    encoder: SystematicEncoder,
    base: Option<BaseMatrix>,
}

impl LdpcCode {
    /// Wraps an arbitrary parity-check matrix.
    pub fn from_parity_check(h: SparseBinary) -> Result<Self> {
        if h.cols == 0 {
            return Err(Error::arg("code length must be positive"));
        }
        let encoder = SystematicEncoder::new(&h);
        if encoder.k() == 0 {
            return Err(Error::Capability("parity-check matrix has full column rank".into()));
        }
        Ok(LdpcCode { h, encoder, base: None })
    }

    pub(crate) fn with_base(mut self, base: BaseMatrix) -> Self {
        self.base = Some(base);
        self
    }

    pub fn h(&self) -> &SparseBinary {
        &self.h
    }

    /// Construction parameters when the code came from a Latin square.
    pub fn base(&self) -> Option<&BaseMatrix> {
        self.base.as_ref()
    }

    pub fn n(&self) -> usize {
        self.h.cols
    }

    pub fn m(&self) -> usize {
        self.h.rows
    }

    pub fn k(&self) -> usize {
        self.encoder.k()
    }

    pub fn rank(&self) -> usize {
        self.n() - self.k()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    /// Maximum column weight.
    pub fn d_v(&self) -> usize {
        self.h.column_weights().into_iter().max().unwrap_or(0)
    }

    /// Maximum row weight.
    pub fn d_c(&self) -> usize {
        self.h.row_weights().into_iter().max().unwrap_or(0)
    }

    pub fn girth_at_least_6(&self) -> bool {
        girth_at_least_6(&self.h)
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        self.encoder.encode(message)
    }

    /// Message bits of a codeword (the information positions).
    pub fn message_of(&self, codeword: &[u8]) -> Result<Vec<u8>> {
        self.encoder.message_of(codeword)
    }

    pub fn info_positions(&self) -> &[usize] {
        self.encoder.info_positions()
    }

    pub fn syndrome(&self, x: &[u8]) -> Result<Vec<u8>> {
        syndrome(&self.h, x)
    }

    pub fn is_codeword(&self, x: &[u8]) -> Result<bool> {
        is_codeword(&self.h, x)
    }
}

/// Effective rate of a code carried by the binary `{2, 3}` runlength alphabet
/// with equiprobable symbols: one code bit per 2.5 channel bits.
pub fn effective_rate(rate: f64) -> f64 {
    0.4 * rate
}
