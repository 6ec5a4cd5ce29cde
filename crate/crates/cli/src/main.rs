use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use weft_core::harness::rename::{rename_repository, RenameError};
use weft_core::harness::{evaluate, run_scan, OracleMode, RenameLabel, ScanConfig, ScanError};

#[derive(Parser)]
#[command(name = "weft", version, about = "Context-guided vulnerability triage for Java repositories")]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan one repository and write a findings report.
    Scan(ScanArgs),
    /// Scan both variants of every pair in a dataset and score them.
    Eval(EvalArgs),
    /// Prefix user identifiers with the opposite label.
    Rename(RenameArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Oracle {
    Live,
    Mock,
    Replay,
}

#[derive(Clone, Copy, ValueEnum)]
enum Label {
    Vulnerable,
    NonVulnerable,
}

/// Flags shared by `scan` and `eval`; unset flags fall back to the config
/// file, then to the defaults.
#[derive(Args)]
struct Common {
    /// TOML file with `ScanConfig` fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Knowledge base JSON; the bundled starter base when omitted.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// User sink spec file; repeatable.
    #[arg(long = "sink")]
    sinks: Vec<PathBuf>,
    #[arg(long)]
    hops: Option<usize>,
    /// Votes per detection unit (odd).
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, value_enum)]
    oracle: Option<Oracle>,
    /// Transcript directory: read in replay mode, written otherwise.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    token_budget: Option<usize>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    repo: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Write one rendered context per invocation under `<out>/contexts`.
    #[arg(long)]
    dump_context: bool,
    /// Write both graphs as text and DOT under `<out>/graph`.
    #[arg(long)]
    dump_graph: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// JSON-lines dataset of paired variants.
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RenameArgs {
    #[arg(long)]
    repo: PathBuf,
    /// Label of the input; identifiers get the opposite one.
    #[arg(long, value_enum)]
    label: Label,
    #[arg(long)]
    out: PathBuf,
}

/// The config file could not be read or parsed.
#[derive(Debug)]
struct BadConfig(PathBuf);

impl std::fmt::Display for BadConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config {}", self.0.display())
    }
}

impl std::error::Error for BadConfig {}

fn load_config(path: Option<&Path>) -> Result<ScanConfig> {
    let Some(path) = path else { return Ok(ScanConfig::default()) };
    let bad = || BadConfig(path.to_path_buf());
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::Error::new(e).context(bad()))?;
    toml::from_str(&text).map_err(|e| anyhow::Error::new(e).context(bad()))
}

fn merge(c: &Common) -> Result<ScanConfig> {
    let mut cfg = load_config(c.config.as_deref())?;
    if c.kb.is_some() {
        cfg.kb = c.kb.clone();
    }
    cfg.sinks.extend(c.sinks.iter().cloned());
    if let Some(h) = c.hops {
        cfg.hop_limit = h;
    }
    if let Some(r) = c.rounds {
        cfg.n_rounds = r;
    }
    if let Some(o) = c.oracle {
        cfg.oracle = match o {
            Oracle::Live => OracleMode::Live,
            Oracle::Mock => OracleMode::Mock,
            Oracle::Replay => OracleMode::Replay,
        };
    }
    if c.transcript.is_some() {
        cfg.transcript = c.transcript.clone();
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    if let Some(b) = c.token_budget {
        cfg.token_budget = b;
    }
    Ok(cfg)
}

fn scan(a: &ScanArgs) -> Result<i32> {
    let mut cfg = merge(&a.common)?;
    cfg.repo = a.repo.clone();
    cfg.dump_context |= a.dump_context;
    cfg.dump_graph |= a.dump_graph;
    let art = run_scan(&cfg)?;
    let r = &art.report;
    // The frontend logs its own diagnostics as it parses.
    for d in r.diagnostics.iter().filter(|d| d.module != "frontend") {
        log::warn!("{d}");
    }
    if cfg.out.is_none() {
        print!("{}", r.to_json());
    }
    let s = &r.summary;
    eprintln!("{} findings: {} vulnerable, {} not vulnerable, {} undetermined", r.findings.len(), s.vulnerable, s.not_vulnerable, s.undetermined);
    Ok(r.exit_code)
}

fn eval(a: &EvalArgs) -> Result<i32> {
    let cfg = merge(&a.common)?;
    let rep = evaluate(&a.dataset, &cfg)?;
    let text = serde_json::to_string_pretty(&rep)? + "\n";
    match &cfg.out {
        Some(out) => {
            std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            std::fs::write(out.join("eval.json"), &text).with_context(|| format!("writing {}", out.join("eval.json").display()))?;
        }
        None => print!("{text}"),
    }
    let (m, p) = (&rep.metrics, &rep.pairwise);
    eprintln!("precision {:.3} recall {:.3} f1 {:.3} | P-C {:.3} P-R {:.3} VP-S {:.3}", m.precision, m.recall, m.f1, p.p_c, p.p_r, p.vp_s);
    Ok(0)
}

fn rename(a: &RenameArgs) -> Result<i32> {
    let label = match a.label {
        Label::Vulnerable => RenameLabel::Vulnerable,
        Label::NonVulnerable => RenameLabel::NonVulnerable,
    };
    let out = match rename_repository(&a.repo, &a.out, label) {
        Ok(o) => o,
        Err(e @ RenameError::Parse { .. }) => {
            log::error!("{e}");
            return Ok(3);
        }
        Err(e) => return Err(e.into()),
    };
    let map = a.out.join("rename_map.json");
    std::fs::write(&map, serde_json::to_string_pretty(&out.map)? + "\n").with_context(|| format!("writing {}", map.display()))?;
    eprintln!("renamed {} identifiers in {} files; map in {}", out.map.identifiers.len(), out.files.len(), map.display());
    Ok(0)
}

fn status(e: &anyhow::Error) -> i32 {
    if let Some(s) = e.downcast_ref::<ScanError>() {
        return s.exit_code();
    }
    if e.downcast_ref::<BadConfig>().is_some() || matches!(e.downcast_ref::<RenameError>(), Some(RenameError::Io { .. })) {
        return 2;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let r = match &cli.command {
        Command::Scan(a) => scan(a),
        Command::Eval(a) => eval(a),
        Command::Rename(a) => rename(a),
    };
    match r {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            // Core errors already spell out their cause.
            match e.downcast_ref::<ScanError>() {
                Some(s) => eprintln!("error: {s}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(status(&e) as u8)
        }
    }
}
