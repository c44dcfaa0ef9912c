use crate::error::{Error, Result};

const PRECISION: u32 = 32;
const TOP: u64 = (1 << PRECISION) - 1;
const HALF: u64 = 1 << (PRECISION - 1);
const QUARTER: u64 = 1 << (PRECISION - 2);
const FREQ_BITS: u32 = 16;
const FREQ_TOTAL: u64 = 1 << FREQ_BITS;

/// Integer frequencies summing to 2^16, each at least 1.
pub fn quantize_frequencies(target: &[f64]) -> Result<Vec<u32>> {
    if target.len() < 2 || target.len() > 1 << 12 {
        return Err(Error::arg("target needs between 2 and 4096 symbols"));
    }
    let sum: f64 = target.iter().sum();
    if target.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::arg("every target symbol needs positive probability"));
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::arg("target probabilities must sum to 1"));
    }
    let mut freqs: Vec<i64> = target
        .iter()
        .map(|p| ((p * FREQ_TOTAL as f64).round() as i64).max(1))
        .collect();
    let mut excess: i64 = freqs.iter().sum::<i64>() - FREQ_TOTAL as i64;
    while excess != 0 {
        // Adjust the largest entry; ties resolve to the lowest symbol.
        let (i, _) = freqs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty");
        let step = excess.clamp(-(FREQ_TOTAL as i64), freqs[i] - 1);
        if step == 0 {
            return Err(Error::arg("target cannot be represented with 16-bit frequencies"));
        }
        freqs[i] -= step;
        excess -= step;
    }
    Ok(freqs.into_iter().map(|f| f as u32).collect())
}

fn cumulative(freqs: &[u32]) -> Vec<u64> {
    let mut cum = Vec::with_capacity(freqs.len() + 1);
    cum.push(0);
    for &f in freqs {
        cum.push(cum.last().unwrap() + f as u64);
    }
    cum
}

/// Interval state shared by the encoder and the decoder.
#[derive(Debug, Clone)]
struct Interval {
    low: u64,
    high: u64,
    pending: u64,
    /// Bits the encoder has committed so far.
    emitted: u64,
}

enum Scale {
    Lower,
    Upper,
    Middle,
}

impl Interval {
    fn new() -> Self {
        Interval {
            low: 0,
            high: TOP,
            pending: 0,
            emitted: 0,
        }
    }

    fn narrow(&mut self, lo: u64, hi: u64) {
        let range = self.high - self.low + 1;
        self.high = self.low + range * hi / FREQ_TOTAL - 1;
        self.low += range * lo / FREQ_TOTAL;
    }

    /// Next renormalization step, applied to the bounds.
    fn scale(&mut self) -> Option<Scale> {
        let step = if self.high < HALF {
            Scale::Lower
        } else if self.low >= HALF {
            self.low -= HALF;
            self.high -= HALF;
            Scale::Upper
        } else if self.low >= QUARTER && self.high < 3 * QUARTER {
            self.low -= QUARTER;
            self.high -= QUARTER;
            Scale::Middle
        } else {
            return None;
        };
        self.low <<= 1;
        self.high = self.high << 1 | 1;
        Some(step)
    }
}

fn push_with_pending(out: &mut Vec<u8>, iv: &mut Interval, bit: u8) {
    out.push(bit);
    out.extend(std::iter::repeat_n(bit ^ 1, iv.pending as usize));
    iv.emitted += 1 + iv.pending;
    iv.pending = 0;
}

fn encode(symbols: &[usize], cum: &[u64]) -> Result<Vec<u8>> {
    let mut iv = Interval::new();
    let mut out = Vec::new();
    for &s in symbols {
        if s + 1 >= cum.len() {
            return Err(Error::arg(format!("symbol {s} outside the model")));
        }
        iv.narrow(cum[s], cum[s + 1]);
        while let Some(step) = iv.scale() {
            match step {
                Scale::Lower => push_with_pending(&mut out, &mut iv, 0),
                Scale::Upper => push_with_pending(&mut out, &mut iv, 1),
                Scale::Middle => iv.pending += 1,
            }
        }
    }
    iv.pending += 1;
    let last = u8::from(iv.low >= QUARTER);
    push_with_pending(&mut out, &mut iv, last);
    Ok(out)
}

/// Symbols produced from a bit stream together with the number of input
/// bits they represent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transformed {
    pub symbols: Vec<usize>,
    pub bit_len: usize,
}

/// Arithmetic-decodes `bits` against `target`, producing symbols whose
/// statistics approach the target distribution.
///
/// The input is read as a binary fraction with a fixed padding. Decoding stops
/// once re-encoding the symbols would reproduce every input bit, which is
/// what makes [`inverse_transform`] exact.
pub fn distribution_transform(bits: &[u8], target: &[f64]) -> Result<Transformed> {
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::arg("input bits must be 0 or 1"));
    }
    let freqs = quantize_frequencies(target)?;
    let cum = cumulative(&freqs);
    let k = bits.len() as u64;
    // Padding 0101… keeps the value off dyadic points, where the interval
    // could straddle a boundary forever without committing the last bit.
    let mut next_bit = bits.iter().copied().chain((0u8..=1).cycle());
    let mut value: u64 = 0;
    for _ in 0..PRECISION {
        value = value << 1 | next_bit.next().unwrap() as u64;
    }
    let mut iv = Interval::new();
    let mut symbols = Vec::new();
    while iv.emitted < k {
        let range = iv.high - iv.low + 1;
        let scaled = ((value - iv.low + 1) * FREQ_TOTAL - 1) / range;
        let s = cum.partition_point(|&c| c <= scaled) - 1;
        symbols.push(s);
        iv.narrow(cum[s], cum[s + 1]);
        while let Some(step) = iv.scale() {
            match step {
                Scale::Lower => {
                    iv.emitted += 1 + iv.pending;
                    iv.pending = 0;
                }
                Scale::Upper => {
                    value -= HALF;
                    iv.emitted += 1 + iv.pending;
                    iv.pending = 0;
                }
                Scale::Middle => {
                    value -= QUARTER;
                    iv.pending += 1;
                }
            }
            value = value << 1 | next_bit.next().unwrap() as u64;
        }
    }
    Ok(Transformed {
        symbols,
        bit_len: bits.len(),
    })
}

/// Recovers the original bits from the output of [`distribution_transform`].
pub fn inverse_transform(t: &Transformed, target: &[f64]) -> Result<Vec<u8>> {
    let freqs = quantize_frequencies(target)?;
    let mut bits = encode(&t.symbols, &cumulative(&freqs))?;
    if bits.len() < t.bit_len {
        return Err(Error::arg("symbol stream is too short for the recorded bit length"));
    }
    bits.truncate(t.bit_len);
    Ok(bits)
}
