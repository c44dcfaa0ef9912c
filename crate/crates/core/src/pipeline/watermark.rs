use std::io::{Read, Write};

use nalgebra::{Matrix3, Point3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::config::PipelineConfig;
use super::report::Report;
use crate::capacity::{distribution_transform, inverse_transform, Transformed};
use crate::channel::{region_delete, simplify_mesh, SurvivalMap};
use crate::error::{Error, Result};
use crate::ldpc::{effective_rate, sp_decode, LdpcCode};
use crate::mesh::{hausdorff, normalization_frame, Mesh, NormalizationFrame};
use crate::qim::{embed_bits_with_frame, extract_bits_aligned, frames_close, QimConfig};
use crate::runlength::{bits_to_symbols, parse_runs, rl_bit_llrs, rl_encode, RunAlphabet, RunObservation};
use crate::stability::{select_embedding_vertices, stability_rank};

/// Half-width of the band around the marking lattice that identifies a
/// marked vertex, as a fraction of `delta`.
pub const LATTICE_TOLERANCE: f64 = 1e-7;

/// Unmarked vertices are kept at least this many tolerances away from the
/// lattice.
const GUARD_FACTOR: f64 = 4.0;

const MAX_FRAME_PASSES: usize = 64;

/// Extra radial movement tolerated beyond half a step, as a fraction of
/// `delta`.
const MOVE_SLACK: f64 = 1e-3;

/// Largest radial move of a marked vertex, in frame units.
fn max_move(delta: f64) -> f64 {
    delta * (0.5 + MOVE_SLACK)
}

/// Everything needed to watermark one mesh.
#[derive(Debug, Clone, Copy)]
pub struct WatermarkJob<'a> {
    /// Payload bits, at most `k` (or whatever the transformer fits into `k`).
    pub payload: &'a [u8],
    pub key: u64,
    pub config: &'a PipelineConfig,
    pub code: &'a LdpcCode,
}

impl WatermarkJob<'_> {
    /// Vertices marked for this job.
    pub fn selection_size(&self) -> Result<usize> {
        Framing::new(self.config, self.code).map(|f| f.vertices)
    }
}

/// Layout of one codeword on the mesh.
///
/// Every codeword is given room for its worst case, all symbols at the
/// longest run, so the vertex count never depends on the payload. Unused
/// slots carry one extra run after the last symbol.
#[derive(Debug, Clone, Copy)]
struct Framing {
    symbols: usize,
    slots: usize,
    vertices: usize,
}

impl Framing {
    fn new(cfg: &PipelineConfig, code: &LdpcCode) -> Result<Self> {
        let alphabet = cfg.alphabet()?;
        let symbols = code.n().div_ceil(cfg.bits_per_symbol);
        let longest = *alphabet.run_lengths().iter().max().expect("non-empty alphabet");
        let slots = symbols * longest;
        Ok(Framing {
            symbols,
            slots,
            vertices: slots * cfg.spreading_length,
        })
    }
}

/// Output of [`embed`].
#[derive(Debug, Clone)]
pub struct Embedded {
    pub mesh: Mesh,
    /// Marked vertices in channel order (ascending index).
    pub selection: Vec<usize>,
    /// Normalization frame of the watermarked mesh.
    pub frame: NormalizationFrame,
    pub report: Report,
}

fn check_bits(bits: &[u8]) -> Result<()> {
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::arg(format!("payload bit {b} is not 0 or 1")));
    }
    Ok(())
}

/// Runs the embedding chain: optional distribution transform, LDPC
/// encoding, runlength modulation and QIM on the most stable vertices.
pub fn embed(mesh: &Mesh, job: &WatermarkJob) -> Result<Embedded> {
    let cfg = job.config;
    let code = job.code;
    cfg.validate()?;
    check_bits(job.payload)?;
    let alphabet = cfg.alphabet()?;
    let framing = Framing::new(cfg, code)?;

    let mut message: Vec<u8> = match &cfg.transform {
        Some(target) => distribution_transform(job.payload, target)?
            .symbols
            .iter()
            .map(|&s| s as u8)
            .collect(),
        None => job.payload.to_vec(),
    };
    if message.len() > code.k() {
        return Err(Error::Capability(format!(
            "payload needs {} message bits but the code carries k = {}",
            message.len(),
            code.k()
        )));
    }
    let message_bits = message.len();
    message.resize(code.k(), 0);
    let mut codeword = code.encode(&message)?;
    codeword.resize(framing.symbols * cfg.bits_per_symbol, 0);
    let symbols = bits_to_symbols(&codeword, cfg.bits_per_symbol)?;
    let mut channel = rl_encode(&symbols, &alphabet)?;
    let run_bits = channel.len();
    let filler = channel.last().map_or(alphabet.polarity().first_bit(), |b| b ^ 1);
    channel.resize(framing.slots, filler);

    let ranking = stability_rank(mesh, &cfg.stability)?;
    let mut selection = select_embedding_vertices(&ranking, framing.vertices, job.key)?;
    selection.sort_unstable();

    let qim = cfg.qim(job.key);
    let (marked, frame) = embed_guarded(mesh, &selection, &channel, &qim)?;
    if qim.spreading_length == 1 && lattice_vertices(&marked, &frame, qim.delta) != selection {
        return Err(Error::Degenerate(
            "marked vertices cannot be told apart from the rest of the mesh".into(),
        ));
    }

    let mut report = Report::new();
    report.set("payload_bits", job.payload.len());
    report.set("message_bits", message_bits);
    report.set("padding_bits", code.k() - message_bits);
    report.set("code.n", code.n());
    report.set("code.k", code.k());
    report.set("code.rate", code.rate());
    report.set("code.r_eff", effective_rate(code.rate()));
    report.set("symbols", framing.symbols);
    report.set("channel_bits", run_bits);
    report.set("filler_bits", framing.slots - run_bits);
    report.set("selection_size", framing.vertices);
    report.set("eligible_vertices", ranking.len());
    report.set("selection_digest", selection_digest(&selection));
    report.set("stability_digest", &ranking.config_digest);
    write_frame(&mut report, &frame);
    let distortion = hausdorff(mesh.vertices(), marked.vertices())?;
    report.set("hausdorff", distortion);
    report.set("hausdorff_bound", max_move(qim.delta) * frame.scale_ref);
    report.extend_prefixed("config", &config_report(cfg));
    Ok(Embedded {
        mesh: marked,
        selection,
        frame,
        report,
    })
}

/// Embeds so that the marks read back exactly under the frame of the result.
///
/// Quantization is discontinuous, so re-quantizing against each new frame
/// can cycle. Instead the target radius of every marked vertex is fixed by a
/// first pass and later passes only rescale toward those targets, which is a
/// contraction. With `L = 1` unmarked vertices found within the guard band
/// of the lattice get a target just outside it, inside the same loop so the
/// final frame accounts for them.
fn embed_guarded(
    mesh: &Mesh,
    selection: &[usize],
    bits: &[u8],
    qim: &QimConfig,
) -> Result<(Mesh, NormalizationFrame)> {
    let guard = GUARD_FACTOR * LATTICE_TOLERANCE * qim.delta;
    let mut frame = normalization_frame(mesh)?;
    let first = embed_bits_with_frame(mesh, &frame, selection, bits, qim)?;
    let mut targets: Vec<Option<f64>> = vec![None; mesh.vertex_count()];
    let mut is_marked = vec![false; mesh.vertex_count()];
    for &v in selection {
        targets[v] = Some(frame.radial(&first.vertices()[v]));
        is_marked[v] = true;
    }
    let mut out = first;
    for _ in 0..MAX_FRAME_PASSES {
        let next = normalization_frame(&out)?;
        if frames_close(&frame, &next) {
            let mut added = false;
            if qim.spreading_length == 1 {
                for (v, p) in mesh.vertices().iter().enumerate() {
                    let r = next.radial(p);
                    if let Some(t) = targets[v] {
                        // Frame drift can leave a marked vertex more than half
                        // a step from its target. It is moved to the nearer
                        // point of its coset only past a small slack, since
                        // flipping exactly at the boundary can cycle.
                        if is_marked[v] && (t - r).abs() > max_move(qim.delta) {
                            targets[v] = Some(t + qim.delta * ((r - t) / qim.delta).round());
                            added = true;
                        }
                        continue;
                    }
                    let (nearest, offset) = lattice_offset(r, qim.delta);
                    if offset.abs() < guard {
                        targets[v] = Some(nearest + if offset >= 0.0 { guard } else { -guard });
                        added = true;
                    }
                }
            }
            if !added {
                return Ok((out, frame));
            }
        }
        frame = next;
        out = place_at_radii(mesh, &frame, &targets)?;
    }
    Err(Error::Degenerate(
        "embedding frame did not settle; the marks move the mesh centre too much".into(),
    ))
}

/// Moves every vertex with a target along its ray from the frame origin so
/// its radial coordinate equals the target.
fn place_at_radii(mesh: &Mesh, frame: &NormalizationFrame, targets: &[Option<f64>]) -> Result<Mesh> {
    let mut vertices = mesh.vertices().to_vec();
    for (v, p) in vertices.iter_mut().enumerate() {
        if let Some(t) = targets[v] {
            let r = frame.radial(p);
            if r == 0.0 {
                return Err(Error::Degenerate(format!("vertex {v} sits at the frame origin")));
            }
            *p = frame.origin + (*p - frame.origin) * (t / r);
        }
    }
    mesh.with_vertices(vertices)
}

/// Signed offset of `r` from the nearest point of `(Δ/2)ℤ + Δ/4`, the union
/// of both QIM cosets.
fn lattice_offset(r: f64, delta: f64) -> (f64, f64) {
    let half = delta / 2.0;
    let t = (r - delta / 4.0) / half;
    let nearest = t.round() * half + delta / 4.0;
    (nearest, r - nearest)
}

/// Vertices whose radial coordinate lies on the marking lattice, ascending.
pub fn lattice_vertices(mesh: &Mesh, frame: &NormalizationFrame, delta: f64) -> Vec<usize> {
    let tau = LATTICE_TOLERANCE * delta;
    mesh.vertices()
        .iter()
        .enumerate()
        .filter(|(_, p)| lattice_offset(frame.radial(p), delta).1.abs() <= tau)
        .map(|(v, _)| v)
        .collect()
}

fn selection_digest(selection: &[usize]) -> String {
    let text = selection.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn config_report(cfg: &PipelineConfig) -> Report {
    Report::parse(&cfg.to_string()).expect("canonical config parses as a report")
}

fn write_frame(report: &mut Report, frame: &NormalizationFrame) {
    report.set("frame.origin.x", frame.origin.x);
    report.set("frame.origin.y", frame.origin.y);
    report.set("frame.origin.z", frame.origin.z);
    report.set("frame.scale_ref", frame.scale_ref);
}

/// Reads the frame written into an embed report. Only origin and scale are
/// recorded, which is all radial coordinates depend on.
pub fn frame_from_report(report: &Report) -> Result<NormalizationFrame> {
    Ok(NormalizationFrame {
        origin: Point3::new(
            report.require("frame.origin.x")?,
            report.require("frame.origin.y")?,
            report.require("frame.origin.z")?,
        ),
        rotation: Matrix3::identity(),
        scale_ref: report.require("frame.scale_ref")?,
    })
}

/// Writes the channel-ordered selection as `channel_position,vertex_index`.
pub fn write_selection_csv<W: Write>(selection: &[usize], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["channel_position", "vertex_index"])?;
    for (i, v) in selection.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_selection_csv<R: Read>(input: R) -> Result<Vec<usize>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let pos: usize = rec
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::parse(line, "bad channel position"))?;
        if pos != out.len() {
            return Err(Error::parse(line, format!("expected channel position {}", out.len())));
        }
        let v = rec
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::parse(line, "bad vertex index"))?;
        out.push(v);
    }
    Ok(out)
}

/// How extraction finds the marked vertices.
#[derive(Debug, Clone, Copy)]
pub enum ExtractMode<'a> {
    /// Only the received mesh is used. With `L = 1` marked vertices are
    /// recognised by their lattice-aligned radii; otherwise the stability
    /// ranking is recomputed on the received mesh.
    Blind,
    /// The embedder's selection and frame, mapped through a survival map.
    Oracle {
        selection: &'a [usize],
        survival: &'a SurvivalMap,
        frame: &'a NormalizationFrame,
    },
}

/// Output of [`extract`].
#[derive(Debug, Clone)]
pub struct Extracted {
    pub payload: Vec<u8>,
    pub converged: bool,
    pub report: Report,
}

/// Recovers the payload. A decoder that does not converge still returns its
/// best guess with `converged` cleared.
///
/// `payload_bits` defaults to `k`; it is required when the distribution
/// transformer is on.
pub fn extract(
    mesh: &Mesh,
    key: u64,
    cfg: &PipelineConfig,
    code: &LdpcCode,
    mode: ExtractMode,
    payload_bits: Option<usize>,
) -> Result<Extracted> {
    cfg.validate()?;
    let framing = Framing::new(cfg, code)?;
    let qim = cfg.qim(key);
    let l = cfg.spreading_length;
    let mut report = Report::new();

    let (aligned, frame) = match mode {
        ExtractMode::Blind => {
            report.set("mode", "blind");
            let frame = normalization_frame(mesh)?;
            let mut found = if l == 1 {
                lattice_vertices(mesh, &frame, cfg.delta)
            } else {
                let ranking = stability_rank(mesh, &cfg.stability)?;
                let mut top = ranking.indices;
                top.truncate(framing.vertices);
                top.sort_unstable();
                top
            };
            report.set("found_vertices", found.len());
            if found.len() < l {
                return Err(Error::Capability("no marked vertices found in the mesh".into()));
            }
            found.truncate(found.len() - found.len() % l);
            (found.into_iter().map(Some).collect::<Vec<_>>(), frame)
        }
        ExtractMode::Oracle {
            selection,
            survival,
            frame,
        } => {
            report.set("mode", "oracle");
            if selection.len() % l != 0 {
                return Err(Error::arg(format!("selection length {} is not a multiple of L = {l}", selection.len())));
            }
            let aligned: Vec<Option<usize>> = selection.iter().map(|&v| survival.new_index(v)).collect();
            let deleted = aligned.iter().filter(|a| a.is_none()).count();
            report.set("deleted_vertices", deleted);
            (aligned, frame.clone())
        }
    };
    report.set("expected_vertices", framing.vertices);
    let detected = extract_bits_aligned(mesh, &aligned, &frame, &qim)?;
    if let ExtractMode::Oracle { .. } = mode {
        let lost = detected.iter().filter(|b| b.is_none()).count();
        let p_hat = if detected.is_empty() { 0.0 } else { lost as f64 / detected.len() as f64 };
        report.set("p_hat", p_hat);
    }
    let bits: Vec<u8> = detected.into_iter().flatten().collect();
    report.set("channel_bits_read", bits.len());

    let alphabet = cfg.alphabet()?;
    let obs = parse_runs(&bits);
    report.set("runs_observed", obs.lengths.len());
    let llr = channel_llrs(&obs, &alphabet, framing.symbols, code.n(), cfg.decoder_p_d, &cfg.priors());
    let decoded = sp_decode(code, &llr, cfg.max_iter)?;
    report.set("iterations", decoded.iterations);
    report.set("converged", decoded.converged);
    let message = code.message_of(&decoded.bits)?;

    let payload = match &cfg.transform {
        Some(target) => {
            let bit_len = payload_bits
                .ok_or_else(|| Error::Config("the payload length is required with the transformer on".into()))?;
            let t = Transformed {
                symbols: message.iter().map(|&b| b as usize).collect(),
                bit_len,
            };
            inverse_transform(&t, target)?
        }
        None => {
            let len = payload_bits.unwrap_or(code.k());
            if len > code.k() {
                return Err(Error::arg(format!("payload length {len} exceeds k = {}", code.k())));
            }
            message[..len].to_vec()
        }
    };
    report.set("payload_bits", payload.len());
    report.extend_prefixed("config", &config_report(cfg));
    Ok(Extracted {
        payload,
        converged: decoded.converged,
        report,
    })
}

/// Per-bit LLRs for the first `symbols` runs, truncated to the code length.
///
/// Missing runs and runs no symbol could produce become erasures; a leading
/// run of the wrong polarity is taken to mean the first run was lost. Run
/// lengths are clamped into the attainable range so stray merges still give
/// usable soft information.
fn channel_llrs(
    obs: &RunObservation,
    alphabet: &RunAlphabet,
    symbols: usize,
    n: usize,
    p_d: f64,
    priors: &[f64],
) -> Vec<f64> {
    let b = alphabet.bits_per_symbol();
    let mut lengths = obs.lengths.clone();
    if !lengths.is_empty() && obs.polarity_start != alphabet.polarity().first_bit() {
        lengths.insert(0, 0);
    }
    lengths.truncate(symbols);
    let shortest = alphabet.run_lengths().iter().min().expect("non-empty") - alphabet.s_d();
    let longest = *alphabet.run_lengths().iter().max().expect("non-empty");
    let mut llr = Vec::with_capacity(symbols * b);
    for len in lengths {
        let single = RunObservation {
            lengths: vec![len.clamp(shortest, longest)],
            polarity_start: alphabet.polarity().first_bit(),
        };
        match rl_bit_llrs(&single, alphabet, p_d, priors) {
            Ok(v) if len > 0 => llr.extend(v),
            _ => llr.extend(std::iter::repeat_n(0.0, b)),
        }
    }
    llr.resize(n, 0.0);
    llr
}

/// Mesh attacks available to the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Attack {
    /// Quadric decimation to the given fraction of faces.
    Simplify { fraction: f64 },
    /// Removal of every vertex within `hops` edges of `center`.
    Region { center: usize, hops: usize },
}

/// Applies `attack` and reports what survived.
pub fn attack(mesh: &Mesh, attack: &Attack) -> Result<(Mesh, SurvivalMap, Report)> {
    let mut report = Report::new();
    let (out, survival) = match *attack {
        Attack::Simplify { fraction } => {
            let s = simplify_mesh(mesh, fraction)?;
            report.set("attack", "simplify");
            report.set("fraction", fraction);
            report.set("achieved_fraction", s.achieved_fraction);
            (s.mesh, s.survival)
        }
        Attack::Region { center, hops } => {
            let (m, s) = region_delete(mesh, center, hops)?;
            report.set("attack", "region");
            report.set("center", center);
            report.set("hops", hops);
            (m, s)
        }
    };
    report.set("original_vertices", mesh.vertex_count());
    report.set("surviving_vertices", survival.survivor_count());
    report.set("deleted_vertices", survival.deleted_count());
    Ok((out, survival, report))
}

/// Seeded choice of a region-attack center.
pub fn random_center(mesh: &Mesh, seed: u64) -> Result<usize> {
    if mesh.is_empty() {
        return Err(Error::arg("cannot pick a center on an empty mesh"));
    }
    Ok(ChaCha8Rng::seed_from_u64(seed).random_range(0..mesh.vertex_count()))
}
