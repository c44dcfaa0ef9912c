use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::Report;
use crate::capacity::unit_cost_capacity;
use crate::channel::{apply_deletion_channel_with, dmc_matrix, DeletionChannelSpec};
use crate::error::{Error, Result};
use crate::ldpc::{construct_code, effective_rate, write_alist, DecoderState, LdpcCode};
use crate::runlength::{bits_to_symbols, parse_runs, rl_bit_llrs, rl_encode, Polarity, RunAlphabet};

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one simulated frame, independent of scheduling.
pub fn frame_seed(master: u64, point: u64, frame: u64) -> u64 {
    splitmix(splitmix(splitmix(master) ^ point) ^ frame)
}

/// One `p_d` point of a coded sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub p_d: f64,
    pub frames: usize,
    pub bit_errors: usize,
    pub frame_errors: usize,
    pub ber: f64,
    pub fer: f64,
    pub mean_iterations: f64,
    /// Frames where the decoder hit its iteration limit.
    pub nonconverged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub n: usize,
    pub k: usize,
    pub rate: f64,
    pub r_eff: f64,
    pub rows: Vec<SweepRow>,
}

#[derive(Default)]
struct Tally {
    bit_errors: usize,
    frame_errors: usize,
    iterations: usize,
    nonconverged: usize,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.bit_errors += o.bit_errors;
        self.frame_errors += o.frame_errors;
        self.iterations += o.iterations;
        self.nonconverged += o.nonconverged;
        self
    }
}

/// Simulates `frames` codewords per deletion probability through runlength
/// modulation and the run-wise deletion channel.
///
/// Each frame draws a uniform message, so BER counts message-bit errors
/// over `frames · k`. The decoder assumes the true `p_d`.
pub fn run_sweep(
    code: &LdpcCode,
    alphabet: &RunAlphabet,
    p_ds: &[f64],
    frames: usize,
    seed: u64,
    max_iter: usize,
) -> Result<SweepReport> {
    if frames == 0 {
        return Err(Error::arg("frames per point must be positive"));
    }
    for &p in p_ds {
        DeletionChannelSpec::new(p, alphabet.s_d(), 0)?;
    }
    let b = alphabet.bits_per_symbol();
    let padded = code.n().div_ceil(b) * b;
    let priors = vec![1.0 / alphabet.size() as f64; alphabet.size()];
    let mut rows = Vec::with_capacity(p_ds.len());
    for (point, &p_d) in p_ds.iter().enumerate() {
        let spec = DeletionChannelSpec::new(p_d, alphabet.s_d(), 0)?;
        let tally = (0..frames)
            .into_par_iter()
            .map_init(
                || DecoderState::new(code),
                |decoder, f| -> Result<Tally> {
                    let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(seed, point as u64, f as u64));
                    let message: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
                    let mut codeword = code.encode(&message)?;
                    codeword.resize(padded, 0);
                    let tx = rl_encode(&bits_to_symbols(&codeword, b)?, alphabet)?;
                    let rx = apply_deletion_channel_with(&tx, &spec, &mut rng)?;
                    let mut llr = rl_bit_llrs(&parse_runs(&rx.bits), alphabet, p_d, &priors)?;
                    llr.truncate(code.n());
                    let d = decoder.decode(&llr, max_iter)?;
                    let decoded = code.message_of(&d.bits)?;
                    let errors = decoded.iter().zip(&message).filter(|(a, b)| a != b).count();
                    Ok(Tally {
                        bit_errors: errors,
                        frame_errors: usize::from(errors > 0),
                        iterations: d.iterations,
                        nonconverged: usize::from(!d.converged),
                    })
                },
            )
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
        rows.push(SweepRow {
            p_d,
            frames,
            bit_errors: tally.bit_errors,
            frame_errors: tally.frame_errors,
            ber: tally.bit_errors as f64 / (frames * code.k()) as f64,
            fer: tally.frame_errors as f64 / frames as f64,
            mean_iterations: tally.iterations as f64 / frames as f64,
            nonconverged: tally.nonconverged,
        });
    }
    Ok(SweepReport {
        n: code.n(),
        k: code.k(),
        rate: code.rate(),
        r_eff: effective_rate(code.rate()),
        rows,
    })
}

impl SweepReport {
    /// CSV with columns
    /// `p_d,frames,bit_errors,frame_errors,ber,fer,mean_iterations,nonconverged`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "p_d",
            "frames",
            "bit_errors",
            "frame_errors",
            "ber",
            "fer",
            "mean_iterations",
            "nonconverged",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.p_d.to_string(),
                r.frames.to_string(),
                r.bit_errors.to_string(),
                r.frame_errors.to_string(),
                r.ber.to_string(),
                r.fer.to_string(),
                r.mean_iterations.to_string(),
                r.nonconverged.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> Report {
        let mut r = Report::new();
        r.set("n", self.n);
        r.set("k", self.k);
        r.set("rate", self.rate);
        r.set("r_eff", self.r_eff);
        r.set("points", self.rows.len());
        r
    }
}

/// One point of the capacity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityRow {
    pub p_d: f64,
    pub alphabet_size: usize,
    pub c_unit: f64,
    pub iterations: usize,
    pub converged: bool,
    pub p_star: Vec<f64>,
}

pub const CAPACITY_TOL: f64 = 1e-9;
pub const CAPACITY_MAX_ITER: usize = 10_000;

/// Unit-cost capacity of the runlength deletion channel for every pair of
/// `p_d` and alphabet size. Symbol `v` of an alphabet of size `|X|` costs
/// `s_d + 1 + v` channel bits. Rows are ordered by `p_d`, then size.
pub fn capacity_grid(sizes: &[usize], p_ds: &[f64], s_d: usize) -> Result<Vec<CapacityRow>> {
    let alphabets = sizes
        .iter()
        .map(|&size| {
            if size < 2 || !size.is_power_of_two() {
                return Err(Error::arg(format!("alphabet size {size} is not a power of two ≥ 2")));
            }
            RunAlphabet::standard(size.trailing_zeros() as usize, s_d, Polarity::OnesFirst)
        })
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<(f64, &RunAlphabet)> = p_ds
        .iter()
        .flat_map(|&p| alphabets.iter().map(move |a| (p, a)))
        .collect();
    grid.par_iter()
        .map(|&(p_d, alphabet)| {
            let dmc = dmc_matrix(alphabet, p_d)?;
            let r = unit_cost_capacity(&dmc.transition, &dmc.costs, CAPACITY_TOL, CAPACITY_MAX_ITER)?;
            Ok(CapacityRow {
                p_d,
                alphabet_size: alphabet.size(),
                c_unit: r.c_unit,
                iterations: r.iterations,
                converged: r.converged,
                p_star: r.p_star,
            })
        })
        .collect()
}

/// CSV with columns `p_d,alphabet_size,c_unit,iterations,converged,p_star`;
/// `p_star` lists the optimal input distribution separated by `;`.
pub fn write_capacity_csv<W: Write>(rows: &[CapacityRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_d", "alphabet_size", "c_unit", "iterations", "converged", "p_star"])?;
    for r in rows {
        let p_star = r.p_star.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
        w.write_record([
            r.p_d.to_string(),
            r.alphabet_size.to_string(),
            r.c_unit.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            p_star,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Builds a Latin-square code and returns it with its alist text and a
/// parameter report.
pub fn codegen(q: usize, mu: usize, eta: usize, seed: u64) -> Result<(LdpcCode, String, Report)> {
    let code = construct_code(q, mu, eta, seed)?;
    let alist = write_alist(code.h());
    let mut r = Report::new();
    r.set("q", q);
    r.set("mu", mu);
    r.set("eta", eta);
    r.set("seed", seed);
    r.set("n", code.n());
    r.set("m", code.m());
    r.set("k", code.k());
    r.set("rate", code.rate());
    r.set("rate_bound", 1.0 - mu as f64 / eta as f64);
    r.set("r_eff", effective_rate(code.rate()));
    r.set("d_v", code.d_v());
    r.set("d_c", code.d_c());
    r.set("girth_at_least_6", code.girth_at_least_6());
    Ok((code, alist, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_sweep_is_error_free() {
        let code = construct_code(7, 2, 6, 3).unwrap();
        let r = run_sweep(&code, &RunAlphabet::binary(), &[0.0], 20, 1, 20).unwrap();
        let row = &r.rows[0];
        assert_eq!((row.bit_errors, row.frame_errors, row.nonconverged), (0, 0, 0));
        assert_eq!(row.mean_iterations, 0.0);
    }

    #[test]
    fn deterministic() {
        let code = construct_code(7, 2, 6, 3).unwrap();
        let a = run_sweep(&code, &RunAlphabet::binary(), &[0.1], 30, 9, 20).unwrap();
        let b = run_sweep(&code, &RunAlphabet::binary(), &[0.1], 30, 9, 20).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(frame_seed(1, 0, 0), frame_seed(1, 0, 1));
        assert_ne!(frame_seed(1, 0, 1), frame_seed(1, 1, 0));
    }

    #[test]
    fn capacity_grid_shape() {
        let rows = capacity_grid(&[2, 4], &[0.0, 0.05], 1).unwrap();
        assert_eq!(rows.len(), 4);
        assert!((rows[0].c_unit - 0.405_685_2).abs() < 1e-4);
        assert!(rows[1].c_unit > rows[0].c_unit);
        assert!(rows[2].c_unit < rows[0].c_unit);
        assert!(capacity_grid(&[3], &[0.0], 1).is_err());
    }
}
