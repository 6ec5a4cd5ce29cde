//! Resolution oracles answering call-target questions: live, mock,
//! scripted, fault-injecting, recording and replaying.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::frontend::lexer::{tokenize, TokKind};
use crate::frontend::model::{CallKind, FuncId, Receiver, RepoModel, Src, StmtId};
use crate::llm::{ChatClient, TransportError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Polymorphism,
    ReflectionClass,
    ReflectionMethod,
}

pub struct OracleQuery<'a> {
    pub model: &'a RepoModel,
    /// Stable call-site key, `path:line#index`.
    pub site: String,
    pub kind: QueryKind,
    pub prompt: String,
    pub stmt: StmtId,
    pub call_index: usize,
    pub dataflow: &'a [StmtId],
    /// Candidate signatures, class names or method signatures.
    pub options: &'a [String],
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle transport failure: {0}")]
    Transport(#[from] TransportError),
    #[error("no recorded response for {0}")]
    Missing(String),
    #[error("injected fault: {0}")]
    Injected(String),
    #[error("transcript I/O: {0}")]
    Io(String),
}

impl OracleError {
    /// Transport-level failures are escalated; the rest are per-site.
    pub fn is_fatal(&self) -> bool {
        matches!(self, OracleError::Transport(_))
    }
}

pub trait ResolutionOracle: Send {
    fn ask(&mut self, q: &OracleQuery<'_>) -> Result<String, OracleError>;
}

pub fn answer_feasible(targets: &[String]) -> String {
    json!({ "feasible": targets }).to_string()
}

pub fn answer_class(class: &str) -> String {
    json!({ "class": class }).to_string()
}

pub fn answer_method(method: &str) -> String {
    json!({ "method": method }).to_string()
}

/// Responses keyed by (kind, site); `*` matches any site.
#[derive(Debug, Clone, Default)]
pub struct ScriptedOracle {
    responses: HashMap<(QueryKind, String), String>,
}

impl ScriptedOracle {
    pub fn new() -> ScriptedOracle {
        ScriptedOracle::default()
    }

    pub fn on(mut self, kind: QueryKind, site: &str, response: impl Into<String>) -> ScriptedOracle {
        self.responses.insert((kind, site.to_string()), response.into());
        self
    }
}

impl ResolutionOracle for ScriptedOracle {
    fn ask(&mut self, q: &OracleQuery<'_>) -> Result<String, OracleError> {
        self.responses
            .get(&(q.kind, q.site.clone()))
            .or_else(|| self.responses.get(&(q.kind, "*".to_string())))
            .cloned()
            .ok_or_else(|| OracleError::Missing(format!("{:?} {}", q.kind, q.site)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Prose with no JSON object.
    Garbage,
    /// Well-formed JSON naming nothing from the offered list.
    OutOfList,
    /// `{"feasible": []}` and empty strings.
    Empty,
    /// Raises an injected error without a response.
    Error,
    /// Raises a transport error.
    Transport,
}

pub struct FaultOracle {
    pub fault: Fault,
}

impl ResolutionOracle for FaultOracle {
    fn ask(&mut self, q: &OracleQuery<'_>) -> Result<String, OracleError> {
        match self.fault {
            Fault::Garbage => Ok("I am not sure which target is meant here.".into()),
            Fault::OutOfList => Ok(match q.kind {
                QueryKind::Polymorphism => answer_feasible(&["void Nowhere.missing()".to_string()]),
                QueryKind::ReflectionClass => answer_class("com.nowhere.Missing"),
                QueryKind::ReflectionMethod => answer_method("void missing()"),
            }),
            Fault::Empty => Ok(match q.kind {
                QueryKind::Polymorphism => answer_feasible(&[]),
                QueryKind::ReflectionClass => answer_class(""),
                QueryKind::ReflectionMethod => answer_method(""),
            }),
            Fault::Error => Err(OracleError::Injected(q.site.clone())),
            Fault::Transport => Err(OracleError::Transport(TransportError::Io("injected connection reset".into()))),
        }
    }
}

/// Deterministic mock: polymorphic receivers are typed by following
/// `new` and copy flows through the dataflow context; reflective targets
/// come from `getClass()`, `forName("...")` or class literals, and method
/// names from string literals (single or pairwise concatenated) whose arity fits.
#[derive(Debug, Default, Clone)]
pub struct TypePropagationOracle;

fn func_by_signature(model: &RepoModel, sig: &str) -> Option<FuncId> {
    model.functions.iter().find(|f| f.signature.render() == sig).map(|f| f.id)
}

fn concrete_types(model: &RepoModel, dataflow: &[StmtId], var: &str, depth: usize) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if depth > 16 {
        return out;
    }
    for &s in dataflow {
        let st = model.stmt(s);
        for fl in st.flows.iter().filter(|f| f.target == var) {
            if let Some(w) = &fl.copy_of {
                out.extend(concrete_types(model, dataflow, w, depth + 1));
                continue;
            }
            for src in &fl.sources {
                if let Src::Call(k) = src {
                    let c = &st.calls[*k];
                    if let (CallKind::Constructor, Receiver::Static(t)) = (&c.kind, &c.receiver) {
                        out.insert(t.clone());
                    }
                }
            }
        }
    }
    out
}

fn string_literals(text: &str) -> Vec<String> {
    match tokenize(text) {
        Ok(toks) => toks
            .into_iter()
            .filter(|t| t.kind == TokKind::StrLit)
            .map(|t| t.text.trim_start_matches('"').trim_end_matches('"').to_string())
            .collect(),
        Err(_) => Vec::new(),
    }
}

fn match_class<'o>(options: &'o [String], name: &str) -> Option<&'o String> {
    options.iter().find(|o| *o == name).or_else(|| {
        let mut it = options.iter().filter(|o| o.rsplit(['.', '$']).next() == Some(name.rsplit('.').next().unwrap_or(name)));
        match (it.next(), it.next()) {
            (Some(o), None) => Some(o),
            _ => None,
        }
    })
}

impl TypePropagationOracle {
    fn polymorphism(&self, q: &OracleQuery<'_>) -> String {
        let st = q.model.stmt(q.stmt);
        let call = &st.calls[q.call_index];
        let var = call.recv_sources.iter().find_map(|s| match s {
            Src::Var(v) => Some(v.clone()),
            Src::Call(_) => None,
        });
        let types = var.map(|v| concrete_types(q.model, q.dataflow, &v, 0)).unwrap_or_default();
        let cands: Vec<(String, FuncId)> = q.options.iter().filter_map(|o| func_by_signature(q.model, o).map(|f| (o.clone(), f))).collect();
        if types.is_empty() || cands.is_empty() {
            return answer_feasible(q.options);
        }
        let mut feasible = BTreeSet::new();
        for t in &types {
            let Some(c) = q.model.resolve_type(t, st.file) else { return answer_feasible(q.options) };
            let chain = std::iter::once(c).chain(q.model.hierarchy.all_supertypes(c));
            for k in chain {
                if let Some((sig, _)) = cands.iter().find(|(_, f)| q.model.func(*f).class == k) {
                    feasible.insert(sig.clone());
                    break;
                }
            }
        }
        if feasible.is_empty() {
            return answer_feasible(q.options);
        }
        answer_feasible(&feasible.into_iter().collect::<Vec<_>>())
    }

    fn reflection_class(&self, q: &OracleQuery<'_>) -> String {
        let stmts: Vec<StmtId> = q.dataflow.iter().copied().chain(std::iter::once(q.stmt)).collect();
        for &s in &stmts {
            let st = q.model.stmt(s);
            for c in &st.calls {
                if c.name == "getClass" && c.args.is_empty() && matches!(c.receiver, Receiver::Implicit | Receiver::This) {
                    if let Some(f) = q.model.owner_func(s) {
                        let name = &q.model.class(q.model.func(f).class).name;
                        if let Some(o) = match_class(q.options, name) {
                            return answer_class(o);
                        }
                    }
                }
                if c.name == "forName" {
                    for lit in string_literals(&c.text) {
                        if let Some(o) = match_class(q.options, &lit) {
                            return answer_class(o);
                        }
                    }
                }
            }
        }
        for &s in &stmts {
            if let Ok(toks) = tokenize(&q.model.stmt(s).text) {
                for w in toks.windows(3) {
                    if w[0].kind == TokKind::Ident && w[1].text == "." && w[2].text == "class" {
                        if let Some(o) = match_class(q.options, &w[0].text) {
                            return answer_class(o);
                        }
                    }
                }
            }
        }
        answer_class("")
    }

    fn reflection_method(&self, q: &OracleQuery<'_>) -> String {
        let mut lits = Vec::new();
        for &s in q.dataflow.iter().chain(std::iter::once(&q.stmt)) {
            lits.extend(string_literals(&q.model.stmt(s).text));
        }
        let mut names: BTreeSet<String> = lits.iter().cloned().collect();
        for (i, a) in lits.iter().enumerate() {
            for (j, b) in lits.iter().enumerate() {
                if i != j {
                    names.insert(format!("{a}{b}"));
                }
            }
        }
        let call = &q.model.stmt(q.stmt).calls[q.call_index];
        let want_arity = if call.name == "invoke" { call.args.len().checked_sub(1) } else { Some(call.args.len()) };
        let mut best: Option<(usize, &String)> = None;
        for o in q.options {
            let Some(f) = func_by_signature(q.model, o) else { continue };
            let f = q.model.func(f);
            if !names.contains(&f.name) || want_arity.is_some_and(|k| k != f.params.len()) {
                continue;
            }
            if best.is_none_or(|(l, _)| l < f.name.len()) {
                best = Some((f.name.len(), o));
            }
        }
        answer_method(best.map(|b| b.1.as_str()).unwrap_or(""))
    }
}

impl ResolutionOracle for TypePropagationOracle {
    fn ask(&mut self, q: &OracleQuery<'_>) -> Result<String, OracleError> {
        Ok(match q.kind {
            QueryKind::Polymorphism => self.polymorphism(q),
            QueryKind::ReflectionClass => self.reflection_class(q),
            QueryKind::ReflectionMethod => self.reflection_method(q),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub site: String,
    pub kind: QueryKind,
    pub prompt: String,
    pub response: String,
}

pub fn write_transcript(path: &Path, records: &[TranscriptRecord]) -> Result<(), OracleError> {
    let mut f = std::fs::File::create(path).map_err(|e| OracleError::Io(e.to_string()))?;
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| OracleError::Io(e.to_string()))?;
        writeln!(f, "{line}").map_err(|e| OracleError::Io(e.to_string()))?;
    }
    Ok(())
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptRecord>, OracleError> {
    let f = std::fs::File::open(path).map_err(|e| OracleError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| OracleError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| OracleError::Io(format!("{}:{}: {e}", path.display(), i + 1)))?);
    }
    Ok(out)
}

/// Wraps an oracle and keeps every exchange.
pub struct RecordingOracle<O> {
    pub inner: O,
    pub records: Vec<TranscriptRecord>,
}

impl<O: ResolutionOracle> RecordingOracle<O> {
    pub fn new(inner: O) -> RecordingOracle<O> {
        RecordingOracle { inner, records: Vec::new() }
    }
}

impl<O: ResolutionOracle> ResolutionOracle for RecordingOracle<O> {
    fn ask(&mut self, q: &OracleQuery<'_>) -> Result<String, OracleError> {
        let r = self.inner.ask(q)?;
        self.records.push(TranscriptRecord { site: q.site.clone(), kind: q.kind, prompt: q.prompt.clone(), response: r.clone() });
        Ok(r)
    }
}

/// Answers from a transcript, keyed by (site, kind, prompt).
pub struct ReplayOracle {
    map: HashMap<(String, QueryKind, String), String>,
}

impl ReplayOracle {
    pub fn new(records: Vec<TranscriptRecord>) -> ReplayOracle {
        ReplayOracle { map: records.into_iter().map(|r| ((r.site, r.kind, r.prompt), r.response)).collect() }
    }

    pub fn load(path: &Path) -> Result<ReplayOracle, OracleError> {
        Ok(ReplayOracle::new(read_transcript(path)?))
    }
}

impl ResolutionOracle for ReplayOracle {
    fn ask(&mut self, q: &OracleQuery<'_>) -> Result<String, OracleError> {
        self.map.get(&(q.site.clone(), q.kind, q.prompt.clone())).cloned().ok_or_else(|| OracleError::Missing(format!("{:?} {}", q.kind, q.site)))
    }
}

pub struct LiveOracle {
    pub client: ChatClient,
}

impl ResolutionOracle for LiveOracle {
    fn ask(&mut self, q: &OracleQuery<'_>) -> Result<String, OracleError> {
        // Resolution answers should be stable, so sampling is off here.
        Ok(self.client.complete(&q.prompt, 0.0, self.client.config().seed)?)
    }
}

impl<T: ResolutionOracle + ?Sized> ResolutionOracle for Box<T> {
    fn ask(&mut self, q: &OracleQuery<'_>) -> Result<String, OracleError> {
        (**self).ask(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_and_class_matching() {
        assert_eq!(string_literals("String m = \"display\" + type;"), vec!["display"]);
        let opts = vec!["com.a.PropertyClass".to_string(), "com.a.Other".to_string()];
        assert_eq!(match_class(&opts, "PropertyClass"), Some(&opts[0]));
        assert_eq!(match_class(&opts, "com.a.Other"), Some(&opts[1]));
        assert_eq!(match_class(&opts, "Missing"), None);
    }

    #[test]
    fn transcript_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        let recs = vec![TranscriptRecord { site: "A.java:3#0".into(), kind: QueryKind::Polymorphism, prompt: "p\nq".into(), response: "{}".into() }];
        write_transcript(&p, &recs).unwrap();
        assert_eq!(read_transcript(&p).unwrap(), recs);
    }
}
