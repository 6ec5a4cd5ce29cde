//! End-to-end scan: parse, build G_o, enhance, extract contexts, judge each
//! detection unit, and write the report with its side artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::report::{EdgeDelta, Finding, Report, Summary, REPORT_SCHEMA};
use super::exit_code;
use crate::context::{dump_name, find_sensitive_invocations, ContextConfig, Extractor, HolisticContext};
use crate::enhance::oracle::{read_transcript, write_transcript, LiveOracle, RecordingOracle, ReplayOracle, TypePropagationOracle};
use crate::enhance::{enhance, EnhanceConfig, Enhanced, OracleError, ResolutionOracle};
use crate::frontend::{parse_repository, DiagClass, Diagnostic, FrontendConfig, FrontendError, RepoModel};
use crate::knowledge::{detection_units_for, load_sinks, validate_sinks, DetectionUnit, KnowledgeBase, KnowledgeError, UserSinkSpec};
use crate::llm::{ChatClient, ChatConfig, TransportError};
use crate::reasoning::client::{read_inference_transcript, write_inference_transcript};
use crate::reasoning::{build_detection_prompt, judge, AggregatedVerdict, InferenceClient, InferenceError, KeywordClient, LiveClient, MetaPrompt, Outcome, RecordingClient, ReplayClient, DEFAULT_ROUNDS};
use crate::udg::{assemble_original_udg, to_dot, to_text, NodeRef, Tau, UnifiedDependencyGraph};

pub const RESOLUTION_TRANSCRIPT: &str = "resolution.jsonl";
pub const INFERENCE_TRANSCRIPT: &str = "inference.jsonl";

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("[config] {0}")]
    Config(String),
    #[error("[frontend] {0}")]
    Frontend(#[from] FrontendError),
    #[error("[knowledge] {0}")]
    Knowledge(#[from] KnowledgeError),
    #[error("[enhance] {0}")]
    Oracle(#[from] OracleError),
    #[error("[reasoning] {0}")]
    Inference(#[from] InferenceError),
    #[error("[llm] {0}")]
    Transport(#[from] TransportError),
    #[error("[harness] writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ScanError {
    pub fn class(&self) -> DiagClass {
        match self {
            ScanError::Config(_) | ScanError::Knowledge(_) => DiagClass::Config,
            ScanError::Frontend(FrontendError::Glob(_)) => DiagClass::Config,
            ScanError::Frontend(FrontendError::HierarchyCycle(_)) => DiagClass::Parse,
            ScanError::Frontend(FrontendError::Io { .. }) => DiagClass::Config,
            ScanError::Oracle(_) | ScanError::Inference(_) => DiagClass::Config,
            ScanError::Transport(TransportError::MissingKey(_)) => DiagClass::Config,
            ScanError::Transport(_) => DiagClass::OracleFatal,
            ScanError::Io { .. } => DiagClass::Internal,
        }
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(&[Diagnostic::new("harness", self.class(), self.to_string())])
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScanError + '_ {
    move |source| ScanError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    #[default]
    Live,
    Mock,
    Replay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub repo: PathBuf,
    /// Starter KB when unset.
    pub kb: Option<PathBuf>,
    /// Sink spec files.
    pub sinks: Vec<PathBuf>,
    pub hop_limit: usize,
    pub n_rounds: usize,
    pub oracle: OracleMode,
    /// Directory holding `resolution.jsonl` and `inference.jsonl`: read in
    /// replay mode, written otherwise.
    pub transcript: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub dump_context: bool,
    pub dump_graph: bool,
    pub token_budget: usize,
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    pub chat: ChatConfig,
    pub enhance: EnhanceConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let ctx = ContextConfig::default();
        ScanConfig {
            repo: PathBuf::from("."),
            kb: None,
            sinks: Vec::new(),
            hop_limit: ctx.hop_limit,
            n_rounds: DEFAULT_ROUNDS,
            oracle: OracleMode::default(),
            transcript: None,
            out: None,
            dump_context: false,
            dump_graph: false,
            token_budget: ctx.token_budget,
            include: Vec::new(),
            exclude: Vec::new(),
            chat: ChatConfig::default(),
            enhance: EnhanceConfig::default(),
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), ScanError> {
        if self.n_rounds == 0 || self.n_rounds.is_multiple_of(2) {
            return Err(ScanError::Config(format!("rounds must be odd and at least 1, got {}", self.n_rounds)));
        }
        if self.token_budget == 0 {
            return Err(ScanError::Config("token budget must be positive".into()));
        }
        if !self.repo.is_dir() {
            return Err(ScanError::Config(format!("repository {} is not a directory", self.repo.display())));
        }
        if self.oracle == OracleMode::Replay && self.transcript.is_none() {
            return Err(ScanError::Config("replay mode needs a transcript directory".into()));
        }
        Ok(())
    }

    pub fn context(&self) -> ContextConfig {
        ContextConfig { hop_limit: self.hop_limit, token_budget: self.token_budget }
    }

    pub fn frontend(&self) -> FrontendConfig {
        FrontendConfig { include: self.include.clone(), exclude: self.exclude.clone(), ..FrontendConfig::default() }
    }
}

/// Wall-clock milliseconds per phase. Kept out of the report so that
/// reports stay byte-comparable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub phases: BTreeMap<String, f64>,
}

impl Timings {
    fn lap(&mut self, phase: &str, since: Instant) -> Instant {
        self.phases.insert(phase.to_string(), since.elapsed().as_secs_f64() * 1000.0);
        Instant::now()
    }
}

pub struct UnitResult {
    pub context: usize,
    pub unit: DetectionUnit,
    pub prompt: MetaPrompt,
    pub verdict: AggregatedVerdict,
}

/// Everything a scan produced, for callers that want more than the report.
pub struct ScanArtifacts {
    pub model: RepoModel,
    pub original: UnifiedDependencyGraph,
    pub enhanced: Enhanced,
    pub contexts: Vec<HolisticContext>,
    pub units: Vec<UnitResult>,
    pub report: Report,
    pub timings: Timings,
}

fn edge_counts(g: &UnifiedDependencyGraph) -> BTreeMap<String, usize> {
    [Tau::ControlFlow, Tau::DataDependency, Tau::Call].iter().map(|t| (t.as_str().to_string(), g.count(*t))).collect()
}

/// Runs the pipeline on a parsed model with injected oracle and client.
pub fn scan_model(model: RepoModel, repo: &str, kb: &KnowledgeBase, sinks: &[UserSinkSpec], cfg: &ScanConfig, oracle: &mut dyn ResolutionOracle, client: &dyn InferenceClient) -> ScanArtifacts {
    let mut timings = Timings::default();
    let mut t = Instant::now();
    let original = assemble_original_udg(&model);
    t = timings.lap("udg", t);
    let enhanced = enhance(&model, &original, oracle, &cfg.enhance);
    t = timings.lap("enhance", t);

    let invocations = find_sensitive_invocations(&model, &enhanced.graph, kb, sinks);
    let extractor = Extractor::new(&model, &enhanced.graph, cfg.context());
    let contexts: Vec<HolisticContext> = invocations.par_iter().map(|inv| extractor.holistic_context(inv)).collect();
    t = timings.lap("context", t);

    let mut diagnostics: Vec<Diagnostic> = model.diagnostics.iter().chain(&enhanced.diagnostics).cloned().collect();
    let mut pending = Vec::new();
    for (i, ctx) in contexts.iter().enumerate() {
        let inv = &ctx.invocation;
        match detection_units_for(&inv.api, &inv.cwes, &inv.overrides, kb) {
            Ok(units) => pending.extend(units.into_iter().map(|u| (i, u))),
            Err(e) => diagnostics.push(Diagnostic::new("knowledge", DiagClass::Config, e.to_string()).at(model.path_of(inv.statement), Some(model.stmt(inv.statement).line_span.start))),
        }
    }
    let judged: Vec<_> = pending
        .into_par_iter()
        .map(|(i, unit)| {
            let prompt = build_detection_prompt(&contexts[i], &unit);
            let verdict = judge(client, &prompt, cfg.n_rounds);
            (i, unit, prompt, verdict)
        })
        .collect();
    timings.lap("reasoning", t);

    let mut units = Vec::new();
    let mut findings = Vec::new();
    for (i, unit, prompt, verdict) in judged {
        let ctx = &contexts[i];
        let inv = &ctx.invocation;
        let stmt = model.stmt(inv.statement);
        let file = model.path_of(inv.statement).to_string();
        let line = stmt.line_span.start;
        let verdict = match verdict {
            Ok(v) => v,
            Err(e) => {
                diagnostics.push(Diagnostic::new("reasoning", DiagClass::Config, e.to_string()));
                continue;
            }
        };
        if verdict.votes.iter().any(|v| v.transport_error) {
            diagnostics.push(Diagnostic::new("reasoning", DiagClass::OracleFatal, format!("inference transport failure for {} {}", unit.api, unit.cwe)).at(&file, Some(line)));
        }
        if verdict.outcome == Outcome::Undetermined {
            diagnostics.push(Diagnostic::new("reasoning", DiagClass::Oracle, format!("no parseable verdict for {} {}", unit.api, unit.cwe)).at(&file, Some(line)));
        }
        let explanation = verdict.votes.iter().find(|v| v.parse_ok && v.is_vulnerable == verdict.final_verdict).map(|v| v.explanation.clone()).unwrap_or_default();
        findings.push(Finding {
            id: format!("{}/{}", inv.id, unit.cwe),
            file,
            line,
            api: unit.api.clone(),
            cwe: unit.cwe.clone(),
            verdict: verdict.outcome,
            confidence: verdict.confidence,
            low_confidence: verdict.low_confidence,
            explanation,
            votes: verdict.votes.iter().map(|v| if v.parse_ok { v.is_vulnerable } else { None }).collect(),
            context_file: cfg.dump_context.then(|| format!("contexts/{}", dump_name(inv))),
            context_lines: ctx.lines.clone(),
            notes: ctx.notes.clone(),
        });
        units.push(UnitResult { context: i, unit, prompt, verdict });
    }

    let count = |o: Outcome| findings.iter().filter(|f| f.verdict == o).count();
    let summary = Summary {
        files: model.files.len(),
        statements: model.statements.len(),
        functions: model.functions.len(),
        edges_original: edge_counts(&original),
        edges_enhanced: edge_counts(&enhanced.graph),
        audit: enhanced.audit.totals().into_iter().map(|(t, (a, r))| (t.as_str().to_string(), EdgeDelta { added: a, removed: r })).collect(),
        oracle_queries: enhanced.oracle_queries,
        invocations: contexts.len(),
        units: findings.len(),
        vulnerable: count(Outcome::Vulnerable),
        not_vulnerable: count(Outcome::NotVulnerable),
        undetermined: count(Outcome::Undetermined),
    };
    let exit = exit_code(&diagnostics);
    let report = Report { schema: REPORT_SCHEMA.into(), repo: repo.to_string(), summary, findings, diagnostics, exit_code: exit };
    ScanArtifacts { model, original, enhanced, contexts, units, report, timings }
}

fn node_label(model: &RepoModel, g: &UnifiedDependencyGraph, n: NodeRef) -> String {
    match n {
        NodeRef::Stmt(s) => format!("{}:{}", model.path_of(s), model.stmt(s).line_span.start),
        NodeRef::External(_) => g.external_node(n).map(|x| x.signature.clone()).unwrap_or_default(),
    }
}

/// Audit log with node ids replaced by locations and signatures.
pub fn audit_json(a: &ScanArtifacts) -> serde_json::Value {
    let entries: Vec<_> = a
        .enhanced
        .audit
        .entries
        .iter()
        .map(|e| {
            serde_json::json!({
                "op": e.op,
                "pass": e.pass,
                "tau": e.tau,
                "src": node_label(&a.model, &a.enhanced.graph, e.src),
                "dst": node_label(&a.model, &a.enhanced.graph, e.dst),
                "variable": e.variable,
            })
        })
        .collect();
    serde_json::json!({ "entries": entries, "oracle_queries": a.enhanced.oracle_queries })
}

fn load_kb(cfg: &ScanConfig) -> Result<(KnowledgeBase, Vec<UserSinkSpec>), ScanError> {
    let kb = match &cfg.kb {
        Some(p) => KnowledgeBase::load(p)?,
        None => KnowledgeBase::starter(),
    };
    for w in &kb.warnings {
        log::warn!("knowledge base: {w}");
    }
    let mut sinks = Vec::new();
    for p in &cfg.sinks {
        sinks.extend(load_sinks(p)?);
    }
    validate_sinks(&sinks, &kb)?;
    Ok((kb, sinks))
}

fn write(path: &Path, text: &str) -> Result<(), ScanError> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).map_err(io_err(d))?;
    }
    std::fs::write(path, text).map_err(io_err(path))
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Scan `cfg.repo` with the oracle and client chosen by `cfg.oracle`, then
/// write artifacts under `cfg.out` when set.
pub fn run_scan(cfg: &ScanConfig) -> Result<ScanArtifacts, ScanError> {
    cfg.validate()?;
    let (kb, sinks) = load_kb(cfg)?;
    let t = Instant::now();
    let model = parse_repository(&cfg.repo, &cfg.frontend())?;
    let parse_ms = t.elapsed().as_secs_f64() * 1000.0;
    let repo = cfg.repo.display().to_string();

    let (mut artifacts, resolution, inference) = match cfg.oracle {
        OracleMode::Replay => {
            let dir = cfg.transcript.as_ref().expect("validated");
            let mut oracle = ReplayOracle::new(read_transcript(&dir.join(RESOLUTION_TRANSCRIPT))?);
            let client = ReplayClient::new(read_inference_transcript(&dir.join(INFERENCE_TRANSCRIPT))?);
            (scan_model(model, &repo, &kb, &sinks, cfg, &mut oracle, &client), None, None)
        }
        OracleMode::Mock => {
            let mut oracle = RecordingOracle::new(TypePropagationOracle);
            let client = RecordingClient::new(KeywordClient::default());
            let a = scan_model(model, &repo, &kb, &sinks, cfg, &mut oracle, &client);
            (a, Some(oracle.records), Some(client.records()))
        }
        OracleMode::Live => {
            let mut oracle = RecordingOracle::new(LiveOracle { client: ChatClient::new(cfg.chat.clone())? });
            let client = RecordingClient::new(LiveClient { chat: ChatClient::new(cfg.chat.clone())? });
            let a = scan_model(model, &repo, &kb, &sinks, cfg, &mut oracle, &client);
            (a, Some(oracle.records), Some(client.records()))
        }
    };
    artifacts.timings.phases.insert("parse".into(), parse_ms);

    if let (Some(dir), Some(res), Some(inf)) = (&cfg.transcript, resolution, inference) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_transcript(&dir.join(RESOLUTION_TRANSCRIPT), &res)?;
        write_inference_transcript(&dir.join(INFERENCE_TRANSCRIPT), &inf)?;
    }
    if let Some(out) = &cfg.out {
        write_outputs(out, cfg, &artifacts)?;
    }
    Ok(artifacts)
}

pub fn write_outputs(out: &Path, cfg: &ScanConfig, a: &ScanArtifacts) -> Result<(), ScanError> {
    write(&out.join("report.json"), &a.report.to_json())?;
    write(&out.join("report.sarif"), &pretty(&a.report.to_sarif()))?;
    write(&out.join("audit.json"), &pretty(&audit_json(a)))?;
    write(&out.join("timings.json"), &pretty(&a.timings))?;
    if cfg.dump_context {
        for ctx in &a.contexts {
            write(&out.join("contexts").join(dump_name(&ctx.invocation)), &ctx.rendered)?;
        }
    }
    if cfg.dump_graph {
        write(&out.join("graph").join("original.txt"), &to_text(&a.model, &a.original))?;
        write(&out.join("graph").join("original.dot"), &to_dot(&a.model, &a.original))?;
        write(&out.join("graph").join("enhanced.txt"), &to_text(&a.model, &a.enhanced.graph))?;
        write(&out.join("graph").join("enhanced.dot"), &to_dot(&a.model, &a.enhanced.graph))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_sources;
    use crate::reasoning::{FixedClient, ScriptedClient};

    const EXEC: &str = "package p;\nclass Runner {\n  void run(String cmd) throws Exception {\n    Runtime.getRuntime().exec(cmd);\n  }\n}\n";

    fn mock_cfg() -> ScanConfig {
        ScanConfig { oracle: OracleMode::Mock, ..ScanConfig::default() }
    }

    #[test]
    fn empty_repository_is_clean() {
        let m = parse_sources(Vec::new()).unwrap();
        let a = scan_model(m, "empty", &KnowledgeBase::starter(), &[], &mock_cfg(), &mut TypePropagationOracle, &KeywordClient::default());
        assert!(a.report.findings.is_empty());
        assert_eq!(a.report.exit_code, 0);
    }

    #[test]
    fn one_finding_per_unit() {
        let m = parse_sources(vec![("p/Runner.java".into(), EXEC.into())]).unwrap();
        let a = scan_model(m, "r", &KnowledgeBase::starter(), &[], &mock_cfg(), &mut TypePropagationOracle, &ScriptedClient::verdicts(&[true, true, false]));
        assert_eq!(a.report.findings.len(), 1);
        let f = &a.report.findings[0];
        assert_eq!((f.file.as_str(), f.line, f.cwe.as_str()), ("p/Runner.java", 4, "CWE-78"));
        assert_eq!(f.verdict, Outcome::Vulnerable);
        assert_eq!(f.votes, vec![Some(true), Some(true), Some(false)]);
        assert_eq!(a.report.summary.vulnerable, 1);
    }

    #[test]
    fn unparseable_votes_are_undetermined_not_fatal() {
        let m = parse_sources(vec![("p/Runner.java".into(), EXEC.into())]).unwrap();
        let a = scan_model(m, "r", &KnowledgeBase::starter(), &[], &mock_cfg(), &mut TypePropagationOracle, &FixedClient("maybe".into()));
        assert_eq!(a.report.findings[0].verdict, Outcome::Undetermined);
        assert_eq!(a.report.exit_code, 0);
    }

    #[test]
    fn config_validation() {
        let dir = tempfile::tempdir().unwrap();
        let ok = ScanConfig { repo: dir.path().into(), ..mock_cfg() };
        assert!(ok.validate().is_ok());
        assert!(matches!(ScanConfig { n_rounds: 4, ..ok.clone() }.validate(), Err(ScanError::Config(_))));
        assert!(matches!(ScanConfig { oracle: OracleMode::Replay, ..ok.clone() }.validate(), Err(ScanError::Config(_))));
        assert!(matches!(ScanConfig { repo: dir.path().join("missing"), ..ok }.validate(), Err(ScanError::Config(_))));
        assert_eq!(ScanError::Config(String::new()).exit_code(), 2);
    }

    #[test]
    fn mock_then_replay_writes_identical_reports() {
        let dir = tempfile::tempdir().unwrap();
        let repo = dir.path().join("repo");
        std::fs::create_dir_all(repo.join("p")).unwrap();
        std::fs::write(repo.join("p/Runner.java"), EXEC).unwrap();
        let tr = dir.path().join("tr");
        let first = ScanConfig { repo: repo.clone(), transcript: Some(tr.clone()), out: Some(dir.path().join("a")), dump_context: true, dump_graph: true, ..mock_cfg() };
        run_scan(&first).unwrap();
        let replay = ScanConfig { oracle: OracleMode::Replay, out: Some(dir.path().join("b")), ..first.clone() };
        run_scan(&replay).unwrap();
        let read = |d: &str, f: &str| std::fs::read_to_string(dir.path().join(d).join(f)).unwrap();
        assert_eq!(read("a", "report.json"), read("b", "report.json"));
        assert_eq!(read("a", "report.sarif"), read("b", "report.sarif"));
        assert!(dir.path().join("a/graph/enhanced.dot").exists());
        let report = Report::from_json(&read("a", "report.json")).unwrap();
        assert!(dir.path().join("a").join(report.findings[0].context_file.as_ref().unwrap()).exists());
    }
}
