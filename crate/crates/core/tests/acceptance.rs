//! Acceptance suite. One PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails. Run with `cargo test -p meshmark --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use meshmark::channel::{apply_deletion_channel_with, dmc_matrix, simplify_mesh, DeletionChannelSpec};
use meshmark::ldpc::{construct_code, effective_rate, sp_decode, DecoderState, LdpcCode};
use meshmark::mesh::Mesh;
use meshmark::pipeline::{
    capacity_grid, codegen, embed, extract, frame_from_report, run_sweep, Attack, ExtractMode, PipelineConfig,
    WatermarkJob,
};
use meshmark::qim::{generate_projection, qim_detect, qim_quantize, sqim_detect, sqim_embed};
use meshmark::runlength::{bits_to_symbols, parse_runs, rl_encode, rl_llr, Polarity, RunAlphabet};
use meshmark::stability::{euler_characteristic, stability_rank, total_angle_deficit, StabilityConfig};
use meshmark::synth::{feature_sphere, icosphere, spiked_torus, terrain};
use nalgebra::Point3;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: meshmark::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn bit_string(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2)).collect()
}

/// The ~30k-vertex synthetic meshes used for selection and full-loop checks.
fn test_meshes(seed: u64) -> Result<Vec<(&'static str, Mesh)>, String> {
    Ok(vec![
        ("sphere", lib(feature_sphere(71, seed))?),
        ("terrain", lib(terrain(173, seed))?),
        ("torus", lib(spiked_torus(240, 125, seed))?),
    ])
}

fn runlength_fidelity() -> Outcome {
    let binary = lib(rl_encode(&[0, 1, 1, 0, 1, 1], &RunAlphabet::binary()))?;
    let expected = "11 000 111 00 111 000".replace(' ', "");
    ensure(bit_string(&binary) == expected, || format!("binary: {}", bit_string(&binary)))?;

    let four = lib(RunAlphabet::standard(2, 1, Polarity::ZerosFirst))?;
    let input: Vec<u8> = "0101001011".bytes().map(|c| c - b'0').collect();
    let symbols = lib(bits_to_symbols(&input, 2))?;
    let bits = lib(rl_encode(&symbols, &four))?;
    let expected = "000 111 00 1111 00000".replace(' ', "");
    ensure(bit_string(&bits) == expected, || format!("4-ary: {}", bit_string(&bits)))?;
    Ok(format!("binary {} / 4-ary {}", bit_string(&binary), bit_string(&bits)))
}

fn rate_accounting() -> Outcome {
    // Printed table rows: (R, R_eff as printed with two decimals).
    let rows = [((79, 4, 28), 0.86, 0.34), ((47, 4, 18), 0.78, 0.32)];
    let mut notes = Vec::new();
    for ((q, mu, eta), rate, printed) in rows {
        ensure((effective_rate(rate) - 0.4 * rate).abs() < 1e-15, || format!("R_eff({rate})"))?;
        let (code, _, report) = lib(codegen(q, mu, eta, 1))?;
        let r: f64 = lib(report.require("rate"))?;
        let r_eff: f64 = lib(report.require("r_eff"))?;
        ensure((r - code.rate()).abs() < 1e-12, || "reported rate differs from the code".into())?;
        ensure((r_eff - 0.4 * r).abs() < 1e-15, || format!("r_eff {r_eff} is not 0.4·{r}"))?;
        ensure((r - rate).abs() <= 0.005, || format!("rate {r} outside the {rate} class"))?;
        ensure((r_eff - printed).abs() <= 0.01 + 1e-12, || format!("r_eff {r_eff} vs printed {printed}"))?;
        notes.push(format!("R={r:.4} R_eff={r_eff:.4}"));
    }
    Ok(notes.join(", "))
}

/// Root above 1 of `x⁻² + x⁻³ = 1` by bisection.
fn cost_root() -> f64 {
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.powi(-2) + mid.powi(-3) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn noiseless_capacity() -> Outcome {
    let rows = lib(capacity_grid(&[2], &[0.0], 1))?;
    let c = rows[0].c_unit;
    let oracle = cost_root().log2();
    ensure(rows[0].converged, || "did not converge".into())?;
    ensure((c - 0.40569).abs() <= 1e-4, || format!("C = {c}"))?;
    ensure((c - oracle).abs() <= 1e-6, || format!("C = {c} vs root {oracle}"))?;
    Ok(format!("C = {c:.6}, log2 root = {oracle:.6}"))
}

fn capacity_orderings() -> Outcome {
    let sizes = [2, 4, 8, 16];
    let p_ds: Vec<f64> = (1..=10).map(|i| i as f64 / 100.0).collect();
    let rows = lib(capacity_grid(&sizes, &p_ds, 1))?;
    let at = |i: usize, j: usize| {
        rows.iter()
            .find(|r| r.p_d == p_ds[i] && r.alphabet_size == sizes[j])
            .expect("grid point")
    };
    ensure(rows.iter().all(|r| r.converged), || "unconverged grid point".into())?;
    for i in 0..p_ds.len() {
        for j in 1..sizes.len() {
            ensure(at(i, j).c_unit > at(i, j - 1).c_unit, || {
                format!("p_d={}: |X|={} not above |X|={}", p_ds[i], sizes[j], sizes[j - 1])
            })?;
        }
    }
    for j in 0..sizes.len() {
        for i in 1..p_ds.len() {
            ensure(at(i, j).c_unit <= at(i - 1, j).c_unit, || {
                format!("|X|={}: increases at p_d={}", sizes[j], p_ds[i])
            })?;
        }
    }
    Ok(format!(
        "C(0.01): {:.4} < {:.4} < {:.4} < {:.4}",
        at(0, 0).c_unit,
        at(0, 1).c_unit,
        at(0, 2).c_unit,
        at(0, 3).c_unit
    ))
}

fn qim_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let delta = 0.01;
    let bound = delta / 4.0 - 1e-6;
    let mut errors = 0;
    let mut worst_move = 0.0f64;
    for trial in 0..100_000u64 {
        let l = rng.random_range(1..=8);
        let p = lib(generate_projection(17, trial, l))?;
        let x: Vec<f64> = (0..l).map(|_| rng.random_range(0.5..1.5)).collect();
        let u = rng.random_range(0..2u8);
        let y = lib(sqim_embed(&x, &p, u, delta))?;
        let moved = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        worst_move = worst_move.max(moved);
        // Noise whose component along p is below the bound; the orthogonal
        // part is arbitrary and must not matter.
        let along = rng.random_range(-bound..bound);
        let mut noise: Vec<f64> = (0..l).map(|_| rng.random_range(-0.01..0.01)).collect();
        let proj: f64 = noise.iter().zip(p.values()).map(|(n, q)| n * q).sum();
        for (n, q) in noise.iter_mut().zip(p.values()) {
            *n += (along - proj) * q;
        }
        let r: Vec<f64> = y.iter().zip(&noise).map(|(a, b)| a + b).collect();
        if lib(sqim_detect(&r, &p, delta))? != u {
            errors += 1;
        }
    }
    ensure(errors == 0, || format!("{errors} detection errors"))?;
    ensure(worst_move <= delta / 2.0 * (1.0 + 1e-12), || format!("move {worst_move} > Δ/2"))?;

    let samples = 1_000_000;
    let mut sq = 0.0;
    for _ in 0..samples {
        let x = rng.random_range(-50.0..50.0);
        let u = rng.random_range(0..2u8);
        let q = lib(qim_quantize(x, u, delta))?;
        if lib(qim_detect(q, delta))? != u {
            errors += 1;
        }
        sq += (q - x).powi(2);
    }
    let mse = sq / samples as f64;
    let ideal = delta * delta / 12.0;
    ensure(errors == 0, || "noiseless detection failed".into())?;
    ensure((mse / ideal - 1.0).abs() <= 0.02, || format!("MSE {mse:e} vs Δ²/12 {ideal:e}"))?;
    Ok(format!(
        "0 errors / 1e5, MSE/(Δ²/12) = {:.4}, max move = {:.4}Δ",
        mse / ideal,
        worst_move / delta
    ))
}

fn code_structure() -> Outcome {
    let mut notes = Vec::new();
    for (q, mu, eta) in [(79, 4, 28), (47, 4, 18), (56, 4, 18), (15, 3, 14), (5, 2, 3)] {
        let code = lib(construct_code(q, mu, eta, 1))?;
        let h = code.h();
        ensure(code.girth_at_least_6(), || format!("({q},{mu},{eta}) has a 4-cycle"))?;
        // Girth oracle: no two columns share two rows.
        let mut shared = std::collections::HashSet::new();
        for r in 0..h.rows() {
            let row = h.row(r);
            for a in 0..row.len() {
                for b in a + 1..row.len() {
                    ensure(shared.insert((row[a], row[b])), || format!("({q},{mu},{eta}) 4-cycle oracle"))?;
                }
            }
        }
        ensure(h.column_weights().iter().all(|&w| w == mu), || "column weight".into())?;
        ensure(h.row_weights().iter().all(|&w| w == eta), || "row weight".into())?;
        ensure(code.rate() >= 1.0 - mu as f64 / eta as f64 - 1e-12, || "rate bound".into())?;
        notes.push(format!("n={} R={:.3}", code.n(), code.rate()));
    }
    let n86 = 79 * 28;
    let n78 = 47 * 18;
    ensure((n86 as f64 / 2212.0 - 1.0).abs() <= 0.2, || "0.86 class length".into())?;
    ensure((n78 as f64 / 848.0 - 1.0).abs() <= 0.2, || "0.78 class length".into())?;
    Ok(notes.join(", "))
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    a.max(b) + (-(a - b).abs()).exp().ln_1p()
}

/// Bitwise MAP decisions by enumerating every codeword.
fn bitwise_map(code: &LdpcCode, llr: &[f64]) -> Result<Vec<u8>, String> {
    let k = code.k();
    let mut mass = vec![[f64::NEG_INFINITY; 2]; code.n()];
    for m in 0u64..1 << k {
        let msg: Vec<u8> = (0..k).map(|i| ((m >> i) & 1) as u8).collect();
        let cw = lib(code.encode(&msg))?;
        let ll: f64 = cw.iter().zip(llr).map(|(&b, &l)| if b == 0 { l / 2.0 } else { -l / 2.0 }).sum();
        for (i, &b) in cw.iter().enumerate() {
            mass[i][b as usize] = log_add(mass[i][b as usize], ll);
        }
    }
    Ok(mass.iter().map(|m| u8::from(m[1] > m[0])).collect())
}

fn decoder_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut converged_checked = 0;
    // Converged results are codewords, over noisy AWGN frames and over
    // runlength deletion-channel frames.
    for (q, mu, eta) in [(5, 2, 3), (15, 3, 14), (47, 4, 18)] {
        let code = lib(construct_code(q, mu, eta, 1))?;
        let mut state = DecoderState::new(&code);
        for sigma in [0.6, 0.9, 1.2] {
            let noise = Normal::new(0.0, sigma).expect("valid sigma");
            for _ in 0..100 {
                let cw = lib(code.encode(&random_bits(&mut rng, code.k())))?;
                let llr: Vec<f64> = cw
                    .iter()
                    .map(|&b| 2.0 * (if b == 0 { 1.0 } else { -1.0 } + noise.sample(&mut rng)) / (sigma * sigma))
                    .collect();
                let d = lib(state.decode(&llr, 50))?;
                if d.converged {
                    ensure(lib(code.is_codeword(&d.bits))?, || "converged to a non-codeword".into())?;
                    converged_checked += 1;
                }
            }
        }
        let alphabet = RunAlphabet::binary();
        for p_d in [0.02, 0.08] {
            for _ in 0..100 {
                let cw = lib(code.encode(&random_bits(&mut rng, code.k())))?;
                let symbols: Vec<usize> = cw.iter().map(|&b| b as usize).collect();
                let tx = lib(rl_encode(&symbols, &alphabet))?;
                let spec = lib(DeletionChannelSpec::new(p_d, 1, 0))?;
                let rx = lib(apply_deletion_channel_with(&tx, &spec, &mut rng))?;
                let llr = lib(rl_llr(&parse_runs(&rx.bits), &alphabet, p_d, [0.5, 0.5]))?;
                let d = lib(sp_decode(&code, &llr, 50))?;
                if d.converged {
                    ensure(lib(code.is_codeword(&d.bits))?, || "converged to a non-codeword".into())?;
                    converged_checked += 1;
                }
            }
        }

        // A single erased bit of a girth-6 code is fixed by one round of
        // messages from any of its checks.
        let cw = lib(code.encode(&random_bits(&mut rng, code.k())))?;
        let positions: Vec<usize> = if code.n() <= 60 {
            (0..code.n()).collect()
        } else {
            sample(&mut rng, code.n(), 60).into_vec()
        };
        for pos in positions {
            let mut llr: Vec<f64> = cw.iter().map(|&b| if b == 0 { 8.0 } else { -8.0 }).collect();
            llr[pos] = 0.0;
            let d = lib(sp_decode(&code, &llr, 50))?;
            ensure(d.converged && d.iterations <= 1 && d.bits == cw, || {
                format!("erasure at {pos}: converged={} iterations={}", d.converged, d.iterations)
            })?;
        }
    }

    let toy = lib(construct_code(5, 2, 3, 1))?;
    ensure(toy.n() <= 15, || "toy code too long".into())?;
    let sigma = 0.8;
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    let mut agree = 0;
    for _ in 0..200 {
        let cw = lib(toy.encode(&random_bits(&mut rng, toy.k())))?;
        let llr: Vec<f64> = cw
            .iter()
            .map(|&b| 2.0 * (if b == 0 { 1.0 } else { -1.0 } + noise.sample(&mut rng)) / (sigma * sigma))
            .collect();
        if lib(sp_decode(&toy, &llr, 50))?.bits == bitwise_map(&toy, &llr)? {
            agree += 1;
        }
    }
    ensure(agree >= 190, || format!("MAP agreement {agree}/200"))?;
    Ok(format!("{converged_checked} converged frames checked, MAP agreement {agree}/200"))
}

fn coded_performance() -> Outcome {
    let code = lib(construct_code(56, 4, 18, 1))?;
    ensure((code.rate() - 0.78).abs() < 0.01 && (900..=1100).contains(&code.n()), || {
        format!("code n={} R={}", code.n(), code.rate())
    })?;
    let p_ds = [0.05, 0.04, 0.03, 0.02, 0.01];
    let r = lib(run_sweep(&code, &RunAlphabet::binary(), &p_ds, 10_000, 2024, 50))?;
    for w in r.rows.windows(2) {
        ensure(w[1].ber <= w[0].ber && w[1].fer <= w[0].fer, || {
            format!("not monotone between p_d={} and p_d={}", w[0].p_d, w[1].p_d)
        })?;
    }
    let last = r.rows.last().expect("five rows");
    ensure(last.fer < 1e-2, || format!("FER(0.01) = {}", last.fer))?;
    Ok(r.rows
        .iter()
        .map(|row| format!("p={} BER={:.2e} FER={:.2e}", row.p_d, row.ber, row.fer))
        .collect::<Vec<_>>()
        .join("; "))
}

/// Bits of runs with the given lengths, alternating from `first`.
fn runs_to_bits(lengths: &[usize], first: u8) -> Vec<u8> {
    let mut out = Vec::new();
    for (i, &len) in lengths.iter().enumerate() {
        out.extend(std::iter::repeat_n(first ^ (i % 2) as u8, len));
    }
    out
}

fn count_runs(bits: &[u8]) -> usize {
    bits.windows(2).filter(|w| w[0] != w[1]).count() + usize::from(!bits.is_empty())
}

/// Every input of up to `max_runs` symbols, with every vector of per-run
/// deletion counts in `0..=s_d`.
fn brute_force_counts(alphabet: &RunAlphabet, max_runs: usize) -> Result<usize, String> {
    let size = alphabet.size();
    let s_d = alphabet.s_d();
    let lens = alphabet.run_lengths().to_vec();
    let mut cases = 0;
    for runs in 1..=max_runs {
        for input in 0..size.pow(runs as u32) {
            let symbols: Vec<usize> = (0..runs).map(|i| input / size.pow(i as u32) % size).collect();
            let run_lengths: Vec<usize> = symbols.iter().map(|&s| lens[s]).collect();
            let tx = lib(rl_encode(&symbols, alphabet))?;
            ensure(tx == runs_to_bits(&run_lengths, alphabet.polarity().first_bit()), || {
                "encoder disagrees with the run oracle".into()
            })?;
            for pattern in 0..(s_d + 1).pow(runs as u32) {
                let cut: Vec<usize> = run_lengths
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| l - pattern / (s_d + 1).pow(i as u32) % (s_d + 1))
                    .collect();
                let rx = runs_to_bits(&cut, alphabet.polarity().first_bit());
                ensure(count_runs(&rx) == runs && parse_runs(&rx).lengths == cut, || {
                    format!("run count changed for {symbols:?} / {cut:?}")
                })?;
                cases += 1;
            }
        }
    }
    Ok(cases)
}

/// Every position-level deletion pattern with no more than `s_d`
/// consecutive deleted bits, for inputs of up to `max_runs` runs.
fn brute_force_positions(alphabet: &RunAlphabet, max_runs: usize) -> Result<usize, String> {
    let size = alphabet.size();
    let s_d = alphabet.s_d();
    let mut cases = 0;
    for runs in 1..=max_runs {
        for input in 0..size.pow(runs as u32) {
            let symbols: Vec<usize> = (0..runs).map(|i| input / size.pow(i as u32) % size).collect();
            let tx = lib(rl_encode(&symbols, alphabet))?;
            for mask in 0u32..1 << tx.len() {
                let mut longest = 0;
                let mut current = 0;
                for i in 0..tx.len() {
                    current = if mask >> i & 1 == 1 { current + 1 } else { 0 };
                    longest = longest.max(current);
                }
                if longest > s_d {
                    continue;
                }
                let rx: Vec<u8> = tx.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 0).map(|(_, &b)| b).collect();
                ensure(parse_runs(&rx).lengths.len() == runs, || format!("mask {mask:b} on {symbols:?}"))?;
                cases += 1;
            }
        }
    }
    Ok(cases)
}

fn channel_equivalence() -> Outcome {
    let mut notes = Vec::new();
    let mut worst = 0.0f64;
    for (alphabet, p_d, seed) in [
        (RunAlphabet::binary(), 0.1, 31u64),
        (lib(RunAlphabet::standard(2, 2, Polarity::OnesFirst))?, 0.15, 32),
    ] {
        let dmc = lib(dmc_matrix(&alphabet, p_d))?;
        let spec = lib(DeletionChannelSpec::new(p_d, alphabet.s_d(), 0))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![vec![0usize; dmc.outputs.len()]; alphabet.size()];
        let mut totals = vec![0usize; alphabet.size()];
        let block = 10_000;
        for _ in 0..100 {
            let symbols: Vec<usize> = (0..block).map(|_| rng.random_range(0..alphabet.size())).collect();
            let tx = lib(rl_encode(&symbols, &alphabet))?;
            let rx = lib(apply_deletion_channel_with(&tx, &spec, &mut rng))?;
            let lengths = parse_runs(&rx.bits).lengths;
            ensure(lengths.len() == block, || "run count changed in simulation".into())?;
            for (&s, &len) in symbols.iter().zip(&lengths) {
                let y = dmc.output_index(len).ok_or_else(|| format!("unexpected run length {len}"))?;
                counts[s][y] += 1;
                totals[s] += 1;
            }
        }
        for x in 0..alphabet.size() {
            for y in 0..dmc.outputs.len() {
                let p = dmc.transition[x][y];
                let emp = counts[x][y] as f64 / totals[x] as f64;
                let sigma = (p * (1.0 - p) / totals[x] as f64).sqrt();
                if sigma == 0.0 {
                    ensure(emp == p, || format!("x={x} y={y}: {emp} vs {p}"))?;
                } else {
                    let z = (emp - p).abs() / sigma;
                    worst = worst.max(z);
                    ensure(z <= 3.0, || format!("x={x} y={y}: {emp} vs {p} ({z:.2}σ)"))?;
                }
            }
        }
        notes.push(format!("|X|={} 1e6 symbols", alphabet.size()));
    }
    let binary = brute_force_counts(&RunAlphabet::binary(), 12)?;
    let four = brute_force_counts(&lib(RunAlphabet::standard(2, 2, Polarity::OnesFirst))?, 6)?;
    let positions = brute_force_positions(&RunAlphabet::binary(), 5)?
        + brute_force_positions(&lib(RunAlphabet::standard(2, 2, Polarity::OnesFirst))?, 3)?;
    notes.push(format!("max {worst:.2}σ"));
    notes.push(format!("{} brute-force cases", binary + four + positions));
    Ok(notes.join(", "))
}

fn stability_selection() -> Outcome {
    let mut worst_ratio = f64::INFINITY;
    let mut notes = Vec::new();
    for (idx, name) in ["sphere", "terrain", "torus"].into_iter().enumerate() {
        let (mut ranked_total, mut random_total, mut clean_seeds) = (0usize, 0usize, 0);
        for seed in 1..=10u64 {
            let mesh = test_meshes(seed)?.swap_remove(idx).1;
            let ranking = lib(stability_rank(&mesh, &StabilityConfig::default()))?;
            let top = &ranking.indices[..1000];
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let random = sample(&mut rng, mesh.vertex_count(), 1000).into_vec();
            let simplified = lib(simplify_mesh(&mesh, 0.7))?;
            let map = &simplified.survival;
            ranked_total += top.iter().filter(|&&v| !map.survived(v)).count();
            random_total += random.iter().filter(|&&v| !map.survived(v)).count();
            if map.max_consecutive_deleted(top) == 0 {
                clean_seeds += 1;
            }
        }
        ensure(5 * ranked_total <= random_total, || {
            format!("{name}: ranked lost {ranked_total}, random lost {random_total}")
        })?;
        ensure(clean_seeds >= 9, || format!("{name}: consecutive deletions in {} seeds", 10 - clean_seeds))?;
        worst_ratio = worst_ratio.min(random_total as f64 / ranked_total.max(1) as f64);
        notes.push(format!("{name} {ranked_total}/{random_total} clean {clean_seeds}/10"));
    }
    Ok(format!("{} (ranked/random deleted), worst ratio {worst_ratio:.1}", notes.join(", ")))
}

fn full_loop() -> Outcome {
    let code = lib(construct_code(47, 4, 18, 1))?;
    let cfg = PipelineConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut blind = 0;
    let (mut oracle_cases, mut oracle_eligible) = (0, 0);
    for (name, mesh) in test_meshes(1)? {
        for trial in 0..20u64 {
            let len = rng.random_range(1..=code.k());
            let payload = random_bits(&mut rng, len);
            let key = rng.random();
            let job = WatermarkJob {
                payload: &payload,
                key,
                config: &cfg,
                code: &code,
            };
            let e = lib(embed(&mesh, &job))?;
            let x = lib(extract(&e.mesh, key, &cfg, &code, ExtractMode::Blind, Some(len)))?;
            ensure(x.converged && x.payload == payload, || format!("{name} trial {trial}: blind mismatch"))?;
            blind += 1;

            if trial < 3 {
                let (attacked, survival, _) = lib(meshmark::pipeline::attack(&e.mesh, &Attack::Simplify { fraction: 0.7 }))?;
                let frame = lib(frame_from_report(&e.report))?;
                let mode = ExtractMode::Oracle {
                    selection: &e.selection,
                    survival: &survival,
                    frame: &frame,
                };
                let x = lib(extract(&attacked, key, &cfg, &code, mode, Some(len)))?;
                let p_hat: f64 = lib(x.report.require("p_hat"))?;
                oracle_cases += 1;
                if p_hat <= 0.02 {
                    oracle_eligible += 1;
                    ensure(x.payload == payload, || format!("{name} trial {trial}: oracle mismatch at p̂={p_hat}"))?;
                }
            }
        }
    }
    Ok(format!(
        "{blind} blind round trips exact; oracle exact in {oracle_eligible}/{oracle_cases} runs with p̂ ≤ 0.02"
    ))
}

fn gauss_bonnet() -> Outcome {
    let tetra = lib(Mesh::new(
        vec![
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(1.0, -1.0, -1.0),
            Point3::new(-1.0, 1.0, -1.0),
            Point3::new(-1.0, -1.0, 1.0),
        ],
        vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
    ))?;
    let t = lib(total_angle_deficit(&tetra))?;
    ensure((t - 4.0 * PI).abs() <= 1e-9, || format!("tetrahedron {t}"))?;
    let mut worst = (t - 4.0 * PI).abs();
    let meshes = [
        lib(icosphere(3))?,
        lib(feature_sphere(40, 3))?,
        lib(spiked_torus(120, 60, 3))?,
    ];
    for m in &meshes {
        let expected = 2.0 * PI * euler_characteristic(m) as f64;
        let err = (lib(total_angle_deficit(m))? - expected).abs();
        ensure(err <= 1e-9, || format!("error {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("max error {worst:.1e}"))
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "runlength fidelity", budget: Duration::from_millis(1), run: runlength_fidelity },
        Criterion { name: "rate accounting", budget: Duration::from_secs(60), run: rate_accounting },
        Criterion { name: "noiseless unit-cost capacity", budget: Duration::from_secs(1), run: noiseless_capacity },
        Criterion { name: "capacity orderings", budget: Duration::from_secs(30), run: capacity_orderings },
        Criterion { name: "QIM properties", budget: Duration::from_secs(10), run: qim_properties },
        Criterion { name: "code structure", budget: Duration::from_secs(60), run: code_structure },
        Criterion { name: "decoder sanity", budget: Duration::from_secs(60), run: decoder_sanity },
        Criterion { name: "coded performance", budget: Duration::from_secs(20 * 60), run: coded_performance },
        Criterion { name: "channel-model equivalence", budget: Duration::from_secs(5 * 60), run: channel_equivalence },
        Criterion { name: "stability selection", budget: Duration::from_secs(10 * 60), run: stability_selection },
        Criterion { name: "full-loop recovery", budget: Duration::from_secs(10 * 60), run: full_loop },
        Criterion { name: "Gauss-Bonnet", budget: Duration::from_secs(60), run: gauss_bonnet },
    ];
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        if only.is_some_and(|n| n != i + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let verdict = match outcome {
            Ok(detail) if elapsed <= c.budget => Ok(detail),
            Ok(detail) => Err(format!("{detail}; over the {:?} budget", c.budget)),
            Err(e) => Err(e),
        };
        match verdict {
            Ok(detail) => println!("PASS {:>2} {} [{:.3?}] {detail}", i + 1, c.name, elapsed),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {} [{:.3?}] {e}", i + 1, c.name, elapsed);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
