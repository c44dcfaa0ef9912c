//! Runlength modulation: every symbol becomes a run of identical bits whose
//! length exceeds the longest possible burst of deletions, so deletions
//! shorten runs but never merge or remove them.

use crate::error::{Error, Result};

/// LLR magnitude assigned to outcomes that only one symbol can produce.
pub const LLR_CLIP: f64 = 25.0;

/// Bit value of the first emitted run; later runs alternate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarity {
    #[default]
    OnesFirst,
    ZerosFirst,
}

impl Polarity {
    pub fn first_bit(self) -> u8 {
        match self {
            Polarity::OnesFirst => 1,
            Polarity::ZerosFirst => 0,
        }
    }
}

/// Mapping from symbols to run lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct RunAlphabet {
    bits_per_symbol: usize,
    run_lengths: Vec<usize>,
    s_d: usize,
    polarity: Polarity,
}

impl RunAlphabet {
    pub fn new(bits_per_symbol: usize, run_lengths: Vec<usize>, s_d: usize, polarity: Polarity) -> Result<Self> {
        if !(1..=16).contains(&bits_per_symbol) {
            return Err(Error::Config(format!(
                "bits per symbol must be in 1..=16, got {bits_per_symbol}"
            )));
        }
        if s_d == 0 {
            return Err(Error::Config("s_d must be at least 1".into()));
        }
        if run_lengths.len() != 1 << bits_per_symbol {
            return Err(Error::Config(format!(
                "{bits_per_symbol} bits per symbol need {} run lengths, got {}",
                1usize << bits_per_symbol,
                run_lengths.len()
            )));
        }
        if let Some(&bad) = run_lengths.iter().find(|&&r| r <= s_d) {
            return Err(Error::Config(format!(
                "run length {bad} does not exceed s_d = {s_d}"
            )));
        }
        let mut sorted = run_lengths.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("run lengths must be distinct".into()));
        }
        Ok(RunAlphabet {
            bits_per_symbol,
            run_lengths,
            s_d,
            polarity,
        })
    }

    /// Symbol `v` maps to run length `s_d + 1 + v`.
    pub fn standard(bits_per_symbol: usize, s_d: usize, polarity: Polarity) -> Result<Self> {
        let count = 1usize.checked_shl(bits_per_symbol as u32).unwrap_or(0);
        RunAlphabet::new(bits_per_symbol, (0..count).map(|v| s_d + 1 + v).collect(), s_d, polarity)
    }

    /// The binary alphabet `{0 ↦ 2, 1 ↦ 3}` for single deletions.
    pub fn binary() -> Self {
        RunAlphabet::standard(1, 1, Polarity::OnesFirst).expect("valid alphabet")
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn size(&self) -> usize {
        self.run_lengths.len()
    }

    pub fn run_lengths(&self) -> &[usize] {
        &self.run_lengths
    }

    pub fn s_d(&self) -> usize {
        self.s_d
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    /// Transmission cost of each symbol in channel bits.
    pub fn costs(&self) -> Vec<f64> {
        self.run_lengths.iter().map(|&r| r as f64).collect()
    }

    /// Expected channel bits per symbol under `priors`.
    pub fn mean_cost(&self, priors: &[f64]) -> Result<f64> {
        check_priors(priors, self.size())?;
        Ok(priors.iter().zip(&self.run_lengths).map(|(p, &r)| p * r as f64).sum())
    }
}

fn check_priors(priors: &[f64], size: usize) -> Result<()> {
    if priors.len() != size {
        return Err(Error::arg(format!("expected {size} priors, got {}", priors.len())));
    }
    let sum: f64 = priors.iter().sum();
    if priors.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::arg("priors must form a probability distribution"));
    }
    Ok(())
}

/// Probability of exactly `j` deletions in one run, `j = 0..=s_d`:
/// `p_d^j` for `j ≥ 1` and the remainder for `j = 0`.
pub fn event_probabilities(p_d: f64, s_d: usize) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p_d) {
        return Err(Error::arg(format!("p_d must lie in [0, 1), got {p_d}")));
    }
    let mut probs = vec![0.0; s_d + 1];
    let mut pj = 1.0;
    for slot in probs.iter_mut().skip(1) {
        pj *= p_d;
        *slot = pj;
    }
    let tail: f64 = probs.iter().sum();
    if tail >= 1.0 {
        return Err(Error::arg(format!(
            "deletion probabilities sum to {tail} for p_d = {p_d}, s_d = {s_d}"
        )));
    }
    probs[0] = 1.0 - tail;
    Ok(probs)
}

/// Groups bits into symbols, most significant bit first.
pub fn bits_to_symbols(bits: &[u8], bits_per_symbol: usize) -> Result<Vec<usize>> {
    if bits_per_symbol == 0 || !bits.len().is_multiple_of(bits_per_symbol) {
        return Err(Error::arg(format!(
            "{} bits do not split into {bits_per_symbol}-bit symbols",
            bits.len()
        )));
    }
    bits.chunks(bits_per_symbol)
        .map(|chunk| {
            chunk.iter().try_fold(0usize, |acc, &b| match b {
                0 | 1 => Ok(acc << 1 | b as usize),
                _ => Err(Error::arg(format!("invalid bit value {b}"))),
            })
        })
        .collect()
}

pub fn symbols_to_bits(symbols: &[usize], bits_per_symbol: usize) -> Vec<u8> {
    symbols
        .iter()
        .flat_map(|&s| (0..bits_per_symbol).rev().map(move |k| ((s >> k) & 1) as u8))
        .collect()
}

/// Emits one run per symbol with alternating bit values.
pub fn rl_encode(symbols: &[usize], alphabet: &RunAlphabet) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(symbols.len() * (alphabet.s_d + 2));
    let mut bit = alphabet.polarity.first_bit();
    for &s in symbols {
        let len = *alphabet
            .run_lengths
            .get(s)
            .ok_or_else(|| Error::arg(format!("symbol {s} outside an alphabet of {}", alphabet.size())))?;
        out.extend(std::iter::repeat_n(bit, len));
        bit ^= 1;
    }
    Ok(out)
}

/// Lengths of the maximal runs of a bit stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunObservation {
    pub lengths: Vec<usize>,
    /// Value of the first run's bits; meaningless when `lengths` is empty.
    pub polarity_start: u8,
}

pub fn parse_runs(bits: &[u8]) -> RunObservation {
    let mut lengths = Vec::new();
    let mut iter = bits.iter();
    let Some(&first) = iter.next() else {
        return RunObservation {
            lengths,
            polarity_start: 0,
        };
    };
    let mut current = first;
    let mut len = 1;
    for &b in iter {
        if b == current {
            len += 1;
        } else {
            lengths.push(len);
            current = b;
            len = 1;
        }
    }
    lengths.push(len);
    RunObservation {
        lengths,
        polarity_start: first,
    }
}

fn check_polarity(obs: &RunObservation, alphabet: &RunAlphabet) -> Result<()> {
    if !obs.lengths.is_empty() && obs.polarity_start != alphabet.polarity.first_bit() {
        return Err(Error::arg(format!(
            "first run carries bit {} but the alphabet starts with {}",
            obs.polarity_start,
            alphabet.polarity.first_bit()
        )));
    }
    Ok(())
}

/// Symbols able to produce an observed run of `len` bits.
fn candidates(alphabet: &RunAlphabet, len: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    alphabet
        .run_lengths
        .iter()
        .enumerate()
        .filter(move |&(_, &r)| r >= len && r - len <= alphabet.s_d)
        .map(move |(s, &r)| (s, r - len))
}

/// Maps each run to the symbol with the shortest run length reachable by at
/// most `s_d` deletions. The flag marks runs more than one symbol could
/// have produced.
pub fn rl_decode_hard(obs: &RunObservation, alphabet: &RunAlphabet) -> Result<(Vec<usize>, Vec<bool>)> {
    check_polarity(obs, alphabet)?;
    let mut symbols = Vec::with_capacity(obs.lengths.len());
    let mut flags = Vec::with_capacity(obs.lengths.len());
    for (i, &len) in obs.lengths.iter().enumerate() {
        let mut best: Option<(usize, usize)> = None;
        let mut count = 0;
        for (s, deleted) in candidates(alphabet, len) {
            count += 1;
            if best.is_none_or(|(_, d)| deleted < d) {
                best = Some((s, deleted));
            }
        }
        let (s, _) = best.ok_or_else(|| {
            Error::arg(format!("run {i} of length {len} cannot come from any symbol"))
        })?;
        symbols.push(s);
        flags.push(count > 1);
    }
    Ok((symbols, flags))
}

/// Bitwise LLRs `ln P(bit = 0 | run) − ln P(bit = 1 | run)`, `b` values per
/// run, from the per-run deletion model. Values are clipped to
/// `±LLR_CLIP`; outcomes impossible for one bit value saturate.
pub fn rl_bit_llrs(obs: &RunObservation, alphabet: &RunAlphabet, p_d: f64, priors: &[f64]) -> Result<Vec<f64>> {
    check_polarity(obs, alphabet)?;
    check_priors(priors, alphabet.size())?;
    let events = event_probabilities(p_d, alphabet.s_d)?;
    let b = alphabet.bits_per_symbol;
    let mut out = Vec::with_capacity(obs.lengths.len() * b);
    for (i, &len) in obs.lengths.iter().enumerate() {
        let mut mass = vec![[0.0f64; 2]; b];
        let mut any = false;
        for (s, deleted) in candidates(alphabet, len) {
            let w = events[deleted] * priors[s];
            if w > 0.0 {
                any = true;
            }
            for (k, m) in mass.iter_mut().enumerate() {
                m[(s >> (b - 1 - k)) & 1] += w;
            }
        }
        if !any {
            return Err(Error::arg(format!("run {i} of length {len} has zero likelihood")));
        }
        out.extend(mass.iter().map(|m| llr(m[0], m[1])));
    }
    Ok(out)
}

fn llr(p0: f64, p1: f64) -> f64 {
    match (p0 > 0.0, p1 > 0.0) {
        (true, true) => (p0.ln() - p1.ln()).clamp(-LLR_CLIP, LLR_CLIP),
        (true, false) => LLR_CLIP,
        (false, true) => -LLR_CLIP,
        (false, false) => 0.0,
    }
}

/// Per-run LLRs for a binary alphabet with priors `(P(0), P(1))`.
pub fn rl_llr(obs: &RunObservation, alphabet: &RunAlphabet, p_d: f64, priors: [f64; 2]) -> Result<Vec<f64>> {
    if alphabet.bits_per_symbol != 1 {
        return Err(Error::arg("rl_llr needs a binary alphabet"));
    }
    rl_bit_llrs(obs, alphabet, p_d, &priors)
}
