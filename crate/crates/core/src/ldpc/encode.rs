use super::SparseBinary;
use crate::error::{Error, Result};

/// Row-reduced echelon form of a parity-check matrix.
pub(super) struct Reduction {
    pub rows: Vec<Vec<u64>>,
    /// Pivot column of each reduced row, ascending.
    pub pivots: Vec<usize>,
}

fn bit(row: &[u64], c: usize) -> bool {
    row[c / 64] >> (c % 64) & 1 == 1
}

/// Gauss–Jordan elimination over GF(2) on packed rows.
pub(super) fn reduce(h: &SparseBinary) -> Reduction {
    let words = h.cols().div_ceil(64);
    let mut rows: Vec<Vec<u64>> = (0..h.rows())
        .map(|r| {
            let mut packed = vec![0u64; words];
            for &c in h.row(r) {
                packed[c / 64] |= 1 << (c % 64);
            }
            packed
        })
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..h.cols() {
        let Some(found) = (rank..rows.len()).find(|&r| bit(&rows[r], c)) else {
            continue;
        };
        rows.swap(rank, found);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && bit(row, c) {
                row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        pivots.push(c);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.truncate(rank);
    Reduction { rows, pivots }
}

/// Systematic encoder derived from the reduced parity-check matrix.
///
/// Message bits occupy the non-pivot columns in ascending order; each pivot
/// column is the parity of the message bits its reduced row touches.
#[derive(Debug, Clone)]
pub struct SystematicEncoder {
    n: usize,
    info: Vec<usize>,
    parity: Vec<(usize, Vec<usize>)>,
}

impl SystematicEncoder {
    pub fn new(h: &SparseBinary) -> Self {
        let red = reduce(h);
        let n = h.cols();
        let mut is_pivot = vec![false; n];
        red.pivots.iter().for_each(|&c| is_pivot[c] = true);
        let info: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let parity = red
            .pivots
            .iter()
            .zip(&red.rows)
            .map(|(&pc, row)| {
                let taps = info
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| bit(row, c))
                    .map(|(t, _)| t)
                    .collect();
                (pc, taps)
            })
            .collect();
        SystematicEncoder { n, info, parity }
    }

    pub fn k(&self) -> usize {
        self.info.len()
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k() {
            return Err(Error::arg(format!(
                "message has {} bits, code dimension is {}",
                message.len(),
                self.k()
            )));
        }
        if message.iter().any(|&b| b > 1) {
            return Err(Error::arg("message bits must be 0 or 1"));
        }
        let mut cw = vec![0u8; self.n];
        for (&pos, &b) in self.info.iter().zip(message) {
            cw[pos] = b;
        }
        for (pc, taps) in &self.parity {
            cw[*pc] = taps.iter().fold(0, |acc, &t| acc ^ message[t]);
        }
        Ok(cw)
    }

    pub fn message_of(&self, codeword: &[u8]) -> Result<Vec<u8>> {
        if codeword.len() != self.n {
            return Err(Error::arg(format!(
                "word has {} bits, code length is {}",
                codeword.len(),
                self.n
            )));
        }
        Ok(self.info.iter().map(|&c| codeword[c]).collect())
    }
}
