use std::fmt::Write as _;

use super::SparseBinary;
use crate::error::{Error, Result};

/// Serializes `h` in MacKay's alist format with zero padding.
pub fn write_alist(h: &SparseBinary) -> String {
    let cw = h.column_weights();
    let rw = h.row_weights();
    let max_c = cw.iter().copied().max().unwrap_or(0);
    let max_r = rw.iter().copied().max().unwrap_or(0);
    let mut out = String::new();
    let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "{} {}", h.cols(), h.rows());
    let _ = writeln!(out, "{max_c} {max_r}");
    let _ = writeln!(out, "{}", join(&mut cw.iter().copied()));
    let _ = writeln!(out, "{}", join(&mut rw.iter().copied()));
    for c in 0..h.cols() {
        let mut it = h.col(c).iter().map(|r| r + 1).chain(std::iter::repeat(0)).take(max_c);
        let _ = writeln!(out, "{}", join(&mut it));
    }
    for r in 0..h.rows() {
        let mut it = h.row(r).iter().map(|c| c + 1).chain(std::iter::repeat(0)).take(max_r);
        let _ = writeln!(out, "{}", join(&mut it));
    }
    out
}

/// Parses an alist file. The column lists must agree with the row lists.
pub fn parse_alist(text: &str) -> Result<SparseBinary> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut next_numbers = |what: &str| -> Result<(usize, Vec<usize>)> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("alist ends before {what}")))?;
        let nums = line
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| Error::parse(no, format!("bad number {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok((no, nums))
    };
    let (no, dims) = next_numbers("dimensions")?;
    let [n, m] = dims[..] else {
        return Err(Error::parse(no, "expected `n m`"));
    };
    let (no, maxes) = next_numbers("maximum degrees")?;
    if maxes.len() != 2 {
        return Err(Error::parse(no, "expected two maximum degrees"));
    }
    let (no, col_w) = next_numbers("column weights")?;
    if col_w.len() != n {
        return Err(Error::parse(no, format!("expected {n} column weights")));
    }
    let (no, row_w) = next_numbers("row weights")?;
    if row_w.len() != m {
        return Err(Error::parse(no, format!("expected {m} row weights")));
    }
    let mut cols = Vec::with_capacity(n);
    for &w in &col_w {
        let (no, entries) = next_numbers("column lists")?;
        cols.push((no, nonzero(entries, w, m, no)?));
    }
    let mut rows = Vec::with_capacity(m);
    for &w in &row_w {
        let (no, entries) = next_numbers("row lists")?;
        rows.push(nonzero(entries, w, n, no)?);
    }
    let h = SparseBinary::from_rows(n, rows)?;
    for (c, (no, list)) in cols.into_iter().enumerate() {
        let mut list = list;
        list.sort_unstable();
        if list != h.col(c) {
            return Err(Error::parse(no, format!("column {} disagrees with the row lists", c + 1)));
        }
    }
    Ok(h)
}

fn nonzero(entries: Vec<usize>, weight: usize, bound: usize, line: usize) -> Result<Vec<usize>> {
    let list: Vec<usize> = entries.into_iter().filter(|&e| e != 0).collect();
    if list.len() != weight {
        return Err(Error::parse(line, format!("expected {weight} entries, found {}", list.len())));
    }
    if let Some(&bad) = list.iter().find(|&&e| e > bound) {
        return Err(Error::parse(line, format!("index {bad} exceeds {bound}")));
    }
    Ok(list.into_iter().map(|e| e - 1).collect())
}
