//! Command-line front end of the mesh watermarking pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meshmark::channel::SurvivalMap;
use meshmark::ldpc::{parse_alist, LdpcCode};
use meshmark::mesh::{parse_obj, write_obj};
use meshmark::pipeline::{
    self, Attack, ExtractMode, PipelineConfig, Report, WatermarkJob,
};
use meshmark::runlength::{Polarity, RunAlphabet};
use meshmark::stability::{stability_rank, StabilityConfig};
use meshmark::{synth, Error, Mesh};

#[derive(Parser)]
#[command(name = "meshmark", version, about = "LDPC-coded QIM watermarking of triangle meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a payload into a mesh.
    Embed(EmbedArgs),
    /// Recover a payload from a (possibly attacked) mesh.
    Extract(ExtractArgs),
    /// Simplify a mesh or cut a region out of it.
    Attack(AttackArgs),
    /// Simulate coded transmission over the runlength deletion channel.
    Sweep(SweepArgs),
    /// Unit-cost capacity over a grid of deletion probabilities and alphabet sizes.
    Capacity(CapacityArgs),
    /// Construct a Latin-square LDPC code.
    Codegen(CodegenArgs),
    /// Write one of the synthetic test meshes.
    Synth(SynthArgs),
    /// Write the stability ranking of a mesh as CSV.
    Rank(RankArgs),
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Payload as a string of 0/1 characters.
    #[arg(long, conflicts_with = "payload_file")]
    payload: Option<String>,
    /// File holding the payload as 0/1 characters.
    #[arg(long)]
    payload_file: Option<PathBuf>,
    #[arg(long)]
    key: u64,
    #[arg(long)]
    config: PathBuf,
    /// Code file overriding the `code` key of the config.
    #[arg(long)]
    code: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the report; printed to stdout otherwise.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Channel-ordered selection CSV, needed later for oracle extraction.
    #[arg(long)]
    selection: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    key: u64,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    code: Option<PathBuf>,
    /// Selection CSV from embedding; switches to oracle alignment.
    #[arg(long, requires_all = ["survival", "embed_report"])]
    selection: Option<PathBuf>,
    /// Survival map CSV from the attack.
    #[arg(long, requires = "selection")]
    survival: Option<PathBuf>,
    /// Report written by `embed`, for the embedding frame.
    #[arg(long, requires = "selection")]
    embed_report: Option<PathBuf>,
    /// Number of payload bits to output; defaults to k.
    #[arg(long)]
    payload_bits: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Keep this fraction of faces.
    #[arg(long, conflicts_with = "region_hops")]
    simplify: Option<f64>,
    /// Delete every vertex within this many edges of a center vertex.
    #[arg(long)]
    region_hops: Option<usize>,
    /// Region center; drawn from the seed when omitted.
    #[arg(long, requires = "region_hops")]
    region_center: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Survival map CSV output.
    #[arg(long)]
    survival: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CodeSpec {
    /// Existing alist file.
    #[arg(long, conflicts_with_all = ["q", "mu", "eta"])]
    code: Option<PathBuf>,
    #[arg(long, requires_all = ["mu", "eta"])]
    q: Option<usize>,
    #[arg(long)]
    mu: Option<usize>,
    #[arg(long)]
    eta: Option<usize>,
    #[arg(long, default_value_t = 1)]
    code_seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    code: CodeSpec,
    #[arg(long, default_value_t = 1)]
    bits_per_symbol: usize,
    #[arg(long, default_value_t = 1)]
    s_d: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.04,0.03,0.02,0.01")]
    p_d: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CapacityArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.03,0.04,0.05,0.06,0.07,0.08,0.09,0.1")]
    p_d: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    s_d: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CodegenArgs {
    #[arg(long)]
    q: usize,
    #[arg(long)]
    mu: usize,
    #[arg(long)]
    eta: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SynthKind {
    Sphere,
    Terrain,
    Torus,
    Icosphere,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Config supplying the stability weights; defaults are used otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Lib(Error),
    NonConvergence,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

type CliResult = Result<(), Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        Error::Parse { .. } | Error::Csv(_) => 2,
        Error::Config(_) | Error::InvalidArgument(_) => 3,
        Error::Capability(_) | Error::Degenerate(_) => 4,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Lib(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult {
    fs::write(path, contents)
        .map_err(|e| Failure::Lib(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))))
}

fn load_mesh(path: &Path) -> Result<Mesh, Failure> {
    Ok(parse_obj(&read(path)?)?)
}

fn parse_bits(text: &str) -> Result<Vec<u8>, Failure> {
    text.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Failure::Lib(Error::InvalidArgument(format!("payload character {c:?} is not 0 or 1")))),
        })
        .collect()
}

fn bit_string(bits: &[u8]) -> String {
    bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
}

/// Loads the config and the code it names (or the override), resolving the
/// code path against the config's directory.
fn load_config(config: &Path, code_override: Option<&Path>) -> Result<(PipelineConfig, LdpcCode, PathBuf), Failure> {
    let cfg = PipelineConfig::parse(&read(config)?)?;
    let code_path = match (code_override, &cfg.code_path) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => config.parent().unwrap_or(Path::new(".")).join(p),
        (None, None) => {
            return Err(Failure::Lib(Error::Config(
                "no code given: set `code` in the config or pass --code".into(),
            )))
        }
    };
    let code = LdpcCode::from_parity_check(parse_alist(&read(&code_path)?)?)?;
    Ok((cfg, code, code_path))
}

fn emit_report(report: &Report, path: Option<&Path>) -> CliResult {
    match path {
        Some(p) => write(p, report.to_string()),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn embed(a: EmbedArgs) -> CliResult {
    let mesh = load_mesh(&a.mesh)?;
    let (cfg, code, code_path) = load_config(&a.config, a.code.as_deref())?;
    let payload = match (&a.payload, &a.payload_file) {
        (Some(p), _) => parse_bits(p)?,
        (None, Some(f)) => parse_bits(&read(f)?)?,
        (None, None) => Vec::new(),
    };
    let job = WatermarkJob {
        payload: &payload,
        key: a.key,
        config: &cfg,
        code: &code,
    };
    let mut out = pipeline::embed(&mesh, &job)?;
    out.report.set("code_file", code_path.display());
    write(&a.out, write_obj(&out.mesh))?;
    if let Some(sel) = &a.selection {
        let mut buf = Vec::new();
        pipeline::write_selection_csv(&out.selection, &mut buf)?;
        write(sel, buf)?;
    }
    emit_report(&out.report, a.report.as_deref())
}

fn extract(a: ExtractArgs) -> CliResult {
    let mesh = load_mesh(&a.mesh)?;
    let (cfg, code, _) = load_config(&a.config, a.code.as_deref())?;
    let result = match (&a.selection, &a.survival, &a.embed_report) {
        (Some(sel), Some(surv), Some(rep)) => {
            let selection = pipeline::read_selection_csv(read(sel)?.as_bytes())?;
            let survival = SurvivalMap::read_csv(read(surv)?.as_bytes())?;
            let frame = pipeline::frame_from_report(&Report::parse(&read(rep)?)?)?;
            let mode = ExtractMode::Oracle {
                selection: &selection,
                survival: &survival,
                frame: &frame,
            };
            pipeline::extract(&mesh, a.key, &cfg, &code, mode, a.payload_bits)?
        }
        _ => pipeline::extract(&mesh, a.key, &cfg, &code, ExtractMode::Blind, a.payload_bits)?,
    };
    println!("{}", bit_string(&result.payload));
    if let Some(p) = &a.report {
        write(p, result.report.to_string())?;
    }
    if result.converged {
        Ok(())
    } else {
        Err(Failure::NonConvergence)
    }
}

fn attack(a: AttackArgs) -> CliResult {
    let mesh = load_mesh(&a.mesh)?;
    let kind = match (a.simplify, a.region_hops) {
        (Some(fraction), None) => Attack::Simplify { fraction },
        (None, Some(hops)) => {
            let center = match a.region_center {
                Some(c) => c,
                None => pipeline::random_center(&mesh, a.seed)?,
            };
            Attack::Region { center, hops }
        }
        _ => {
            return Err(Failure::Lib(Error::InvalidArgument(
                "choose exactly one of --simplify and --region-hops".into(),
            )))
        }
    };
    let (out, survival, mut report) = pipeline::attack(&mesh, &kind)?;
    report.set("seed", a.seed);
    write(&a.out, write_obj(&out))?;
    let mut buf = Vec::new();
    survival.write_csv(&mut buf)?;
    write(&a.survival, buf)?;
    emit_report(&report, a.report.as_deref())
}

fn load_code(spec: &CodeSpec) -> Result<LdpcCode, Failure> {
    match (&spec.code, spec.q, spec.mu, spec.eta) {
        (Some(path), ..) => Ok(LdpcCode::from_parity_check(parse_alist(&read(path)?)?)?),
        (None, Some(q), Some(mu), Some(eta)) => Ok(meshmark::ldpc::construct_code(q, mu, eta, spec.code_seed)?),
        _ => Err(Failure::Lib(Error::InvalidArgument(
            "give either --code or all of --q, --mu and --eta".into(),
        ))),
    }
}

fn sweep(a: SweepArgs) -> CliResult {
    let code = load_code(&a.code)?;
    let alphabet = RunAlphabet::standard(a.bits_per_symbol, a.s_d, Polarity::OnesFirst)?;
    let report = pipeline::run_sweep(&code, &alphabet, &a.p_d, a.frames, a.seed, a.max_iter)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write(&a.out, buf)?;
    let mut summary = report.summary();
    summary.set("frames_per_point", a.frames);
    summary.set("seed", a.seed);
    print!("{summary}");
    Ok(())
}

fn capacity(a: CapacityArgs) -> CliResult {
    let rows = pipeline::capacity_grid(&a.sizes, &a.p_d, a.s_d)?;
    let mut buf = Vec::new();
    pipeline::write_capacity_csv(&rows, &mut buf)?;
    write(&a.out, buf)?;
    let unconverged = rows.iter().filter(|r| !r.converged).count();
    if unconverged > 0 {
        eprintln!("{unconverged} grid points did not converge");
        return Err(Failure::NonConvergence);
    }
    Ok(())
}

fn codegen(a: CodegenArgs) -> CliResult {
    let (_, alist, report) = pipeline::codegen(a.q, a.mu, a.eta, a.seed)?;
    write(&a.out, alist)?;
    emit_report(&report, a.report.as_deref())
}

fn synth(a: SynthArgs) -> CliResult {
    let mesh = match a.kind {
        SynthKind::Sphere => synth::feature_sphere(71, a.seed)?,
        SynthKind::Terrain => synth::terrain(173, a.seed)?,
        SynthKind::Torus => synth::spiked_torus(240, 125, a.seed)?,
        SynthKind::Icosphere => synth::icosphere(5)?,
    };
    write(&a.out, write_obj(&mesh))
}

fn rank(a: RankArgs) -> CliResult {
    let mesh = load_mesh(&a.mesh)?;
    let stability = match &a.config {
        Some(path) => PipelineConfig::parse(&read(path)?)?.stability,
        None => StabilityConfig::default(),
    };
    let ranking = stability_rank(&mesh, &stability)?;
    let mut buf = Vec::new();
    ranking.write_csv(&mut buf)?;
    write(&a.out, buf)?;
    println!("ranked_vertices = {}", ranking.len());
    println!("stability_digest = {}", ranking.config_digest);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Embed(a) => embed(a),
        Command::Extract(a) => extract(a),
        Command::Attack(a) => attack(a),
        Command::Sweep(a) => sweep(a),
        Command::Capacity(a) => capacity(a),
        Command::Codegen(a) => codegen(a),
        Command::Synth(a) => synth(a),
        Command::Rank(a) => rank(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NonConvergence) => {
            eprintln!("error: decoder or iteration did not converge");
            ExitCode::from(5)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
