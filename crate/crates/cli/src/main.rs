use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use opsteg_core::codec::{capacity_of, scan_document};
use opsteg_core::fixture::generate_fixture;
use opsteg_core::{
    embed_document, extract_document, load_config, parse_document, Capacity, PdfDocument,
    StegConfig, StegError,
};

/// Bytes of the version tag digest stored in front of every payload.
const TAG_BYTES: usize = 4;

#[derive(Parser)]
#[command(
    name = "opsteg",
    version,
    about = "Hide files in the numeric operands of PDF content streams"
)]
struct Cli {
    /// Embedding config file.
    #[arg(long, global = true, env = "OPSTEG_CONFIG")]
    config: Option<PathBuf>,

    /// Suppress diagnostics and the key=value listing.
    #[arg(long, global = true)]
    quiet: bool,

    /// Override whether low-reliability operators carry bits.
    #[arg(long, global = true, value_name = "BOOL")]
    include_low_reliability: Option<bool>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report how many bytes a cover can hold.
    Stat { cover: PathBuf },
    /// Hide a payload file in a cover.
    Embed {
        cover: PathBuf,
        out: PathBuf,
        payload: PathBuf,
    },
    /// Recover a payload from a stego file.
    Extract { stego: PathBuf, out: PathBuf },
    /// Write a test PDF described by a spec file.
    GenFixture { spec: PathBuf, out: PathBuf },
}

/// A failure carrying the process exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: anyhow::Error) -> Self {
        Failure { code, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure::new(2, error)
    }
}

fn steg_failure(e: StegError) -> Failure {
    let code = match e {
        StegError::InsufficientCapacity { .. } => 3,
        StegError::TruncatedMessage { .. } | StegError::ImplausibleLength { .. } => 4,
        _ => 2,
    };
    Failure::new(code, e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("opsteg: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_cfg(cli)?;
    match &cli.command {
        Command::Stat { cover } => stat(cli, &cfg, cover),
        Command::Embed {
            cover,
            out,
            payload,
        } => embed(cli, &cfg, cover, out, payload),
        Command::Extract { stego, out } => extract(cli, &cfg, stego, out),
        Command::GenFixture { spec, out } => gen_fixture(cli, &cfg, spec, out),
    }
}

fn load_cfg(cli: &Cli) -> Result<StegConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let bytes =
                fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
            load_config(&bytes).with_context(|| format!("config {}", path.display()))?
        }
        None => StegConfig::default(),
    };
    if let Some(flag) = cli.include_low_reliability {
        cfg.include_low_reliability = flag;
    }
    Ok(cfg)
}

fn read_pdf(path: &Path) -> Result<PdfDocument> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_document(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn tag_digest(cfg: &StegConfig) -> [u8; TAG_BYTES] {
    let digest = Sha256::digest(cfg.version_tag.as_bytes());
    let mut out = [0; TAG_BYTES];
    out.copy_from_slice(&digest[..TAG_BYTES]);
    out
}

fn payload_bytes(cap: &Capacity, cfg: &StegConfig) -> u64 {
    cap.bytes(cfg.header_bits).saturating_sub(TAG_BYTES as u64)
}

fn print_kv(cli: &Cli, pairs: &[(String, String)]) {
    if !cli.quiet {
        for (k, v) in pairs {
            println!("{k}={v}");
        }
    }
}

fn stat(cli: &Cli, cfg: &StegConfig, cover: &Path) -> Result<(), Failure> {
    let doc = read_pdf(cover)?;
    let scanned = scan_document(&doc, cfg).map_err(steg_failure)?;
    let cap = capacity_of(&scanned, cfg);
    if !cli.quiet {
        for s in &scanned.skipped {
            eprintln!("skipped stream {}: {}", s.owner, s.reason);
        }
        for d in &scanned.diagnostics {
            eprintln!("stream {} byte {}: {}", d.owner, d.offset, d.message);
        }
    }
    println!("content streams: {}", scanned.streams.len());
    println!("eligible operands: {}", cap.eligible_operands);
    println!("capacity: {} bits", cap.bits);
    println!("capacity: {} bytes", cap.bytes(cfg.header_bits));
    println!("payload capacity: {} bytes", payload_bytes(&cap, cfg));
    if !cap.per_operator.is_empty() {
        println!(
            "{:<8} {:>10} {:>10} {:>12}",
            "operator", "sites", "operands", "bits"
        );
        for (op, row) in &cap.per_operator {
            println!(
                "{op:<8} {:>10} {:>10} {:>12}",
                row.sites, row.slots, row.bits
            );
        }
    }
    let mut kv = vec![
        ("content_streams".into(), scanned.streams.len().to_string()),
        ("skipped_streams".into(), scanned.skipped.len().to_string()),
        (
            "eligible_operands".into(),
            cap.eligible_operands.to_string(),
        ),
        ("capacity_bits".into(), cap.bits.to_string()),
        (
            "capacity_bytes".into(),
            cap.bytes(cfg.header_bits).to_string(),
        ),
        (
            "payload_capacity_bytes".into(),
            payload_bytes(&cap, cfg).to_string(),
        ),
    ];
    for (op, row) in &cap.per_operator {
        kv.push((format!("operator.{op}.operands"), row.slots.to_string()));
        kv.push((format!("operator.{op}.bits"), row.bits.to_string()));
    }
    print_kv(cli, &kv);
    Ok(())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

fn embed(
    cli: &Cli,
    cfg: &StegConfig,
    cover: &Path,
    out: &Path,
    payload: &Path,
) -> Result<(), Failure> {
    if same_file(cover, out) || same_file(payload, out) {
        return Err(anyhow!("output {} would overwrite an input", out.display()).into());
    }
    let doc = read_pdf(cover)?;
    let data = fs::read(payload).with_context(|| format!("reading {}", payload.display()))?;
    let mut enveloped = tag_digest(cfg).to_vec();
    enveloped.extend_from_slice(&data);
    let (stego, report) = match embed_document(&doc, &enveloped, cfg) {
        Ok(r) => r,
        Err(StegError::InsufficientCapacity {
            required,
            available,
        }) => {
            let needed = data.len() as u64;
            let fits = (available.saturating_sub(u64::from(cfg.header_bits)) / 8)
                .saturating_sub(TAG_BYTES as u64);
            return Err(Failure::new(
                3,
                anyhow!(
                    "payload of {needed} bytes does not fit: cover holds {fits} bytes \
                     ({required} bits required, {available} available)"
                ),
            ));
        }
        Err(e) => return Err(steg_failure(e)),
    };
    fs::write(out, stego.to_bytes()).with_context(|| format!("writing {}", out.display()))?;
    println!("embedded {} bytes into {}", data.len(), out.display());
    println!("operands visited: {}", report.operands_visited);
    println!("operands modified: {}", report.operands_modified);
    println!("operands unchanged: {}", report.operands_exact_match);
    println!("digits added: {}", report.digits_added);
    println!("bits embedded: {}", report.bits_embedded);
    let mut kv: Vec<(String, String)> = report
        .key_values()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    kv.push(("payload_bytes".into(), data.len().to_string()));
    print_kv(cli, &kv);
    Ok(())
}

fn extract(cli: &Cli, cfg: &StegConfig, stego: &Path, out: &Path) -> Result<(), Failure> {
    if same_file(stego, out) {
        return Err(anyhow!("output {} would overwrite the input", out.display()).into());
    }
    let doc = read_pdf(stego)?;
    let enveloped = extract_document(&doc, cfg).map_err(steg_failure)?;
    if enveloped.len() < TAG_BYTES || enveloped[..TAG_BYTES] != tag_digest(cfg) {
        return Err(Failure::new(
            5,
            anyhow!(
                "payload was not embedded with version tag {:?}",
                cfg.version_tag
            ),
        ));
    }
    let data = &enveloped[TAG_BYTES..];
    fs::write(out, data).with_context(|| format!("writing {}", out.display()))?;
    println!("extracted {} bytes to {}", data.len(), out.display());
    print_kv(cli, &[("payload_bytes".into(), data.len().to_string())]);
    Ok(())
}

fn gen_fixture(cli: &Cli, cfg: &StegConfig, spec: &Path, out: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let fixture =
        generate_fixture(&text).with_context(|| format!("fixture spec {}", spec.display()))?;
    fs::write(out, &fixture.bytes).with_context(|| format!("writing {}", out.display()))?;
    let census = &fixture.census;
    println!("wrote {} ({} bytes)", out.display(), fixture.bytes.len());
    println!("content streams: {}", census.streams.len());
    println!("operator instances: {}", census.sites().count());
    println!("eligible operands: {}", census.eligible_slots(cfg));
    let mut kv = vec![
        ("content_streams".into(), census.streams.len().to_string()),
        (
            "operator_instances".into(),
            census.sites().count().to_string(),
        ),
        (
            "eligible_operands".into(),
            census.eligible_slots(cfg).to_string(),
        ),
        (
            "capacity_bits".into(),
            census.capacity_bits(cfg).to_string(),
        ),
    ];
    let mut per_op = std::collections::BTreeMap::<&str, usize>::new();
    for (site, _, ok) in census.eligibility(cfg) {
        if ok {
            *per_op.entry(site.op.as_str()).or_default() += 1;
        }
    }
    for (op, n) in per_op {
        kv.push((format!("census.{op}.operands"), n.to_string()));
    }
    print_kv(cli, &kv);
    Ok(())
}
