//! Detection prompts, repeated sampling and majority voting.

pub mod client;
pub mod prompt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::last_json_object;

pub use client::{FixedClient, InferenceClient, InferenceError, InferenceRecord, KeywordClient, LiveClient, RecordingClient, ReplayClient, ScriptedClient};
pub use prompt::{build_detection_prompt, fill_template, unfilled_slots, MetaPrompt, PromptSlots, META_PROMPT_TEMPLATE, STEP_HEADERS};

pub const DEFAULT_ROUNDS: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReasoningError {
    #[error("round count must be odd and at least 1, got {0}")]
    BadRounds(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub explanation: String,
    pub is_vulnerable: Option<bool>,
    pub raw: String,
    pub parse_ok: bool,
    /// The round failed in transport rather than in parsing.
    #[serde(default)]
    pub transport_error: bool,
}

/// Last JSON object with a boolean `is_vulnerable`; prose and code fences
/// around it are ignored.
pub fn parse_verdict(text: &str) -> Verdict {
    match last_json_object(text, |v| v.get("is_vulnerable").is_some_and(|b| b.is_boolean())) {
        Some(v) => Verdict {
            explanation: match v.get("explanation") {
                Some(serde_json::Value::String(s)) => s.clone(),
                Some(serde_json::Value::Null) | None => String::new(),
                Some(other) => other.to_string(),
            },
            is_vulnerable: v["is_vulnerable"].as_bool(),
            raw: text.to_string(),
            parse_ok: true,
            transport_error: false,
        },
        None => Verdict { explanation: String::new(), is_vulnerable: None, raw: text.to_string(), parse_ok: false, transport_error: false },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Vulnerable,
    NotVulnerable,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedVerdict {
    pub votes: Vec<Verdict>,
    pub n_requested: usize,
    /// `None` when no round parsed.
    pub final_verdict: Option<bool>,
    pub outcome: Outcome,
    /// Votes for the final verdict over parseable votes.
    pub confidence: f64,
    /// Set on a tie broken towards vulnerable.
    pub low_confidence: bool,
}

/// Strict majority over parseable votes; an even split goes to vulnerable.
pub fn aggregate_votes(votes: Vec<Verdict>, n_requested: usize) -> AggregatedVerdict {
    let yes = votes.iter().filter(|v| v.parse_ok && v.is_vulnerable == Some(true)).count();
    let no = votes.iter().filter(|v| v.parse_ok && v.is_vulnerable == Some(false)).count();
    let total = yes + no;
    if total == 0 {
        return AggregatedVerdict { votes, n_requested, final_verdict: None, outcome: Outcome::Undetermined, confidence: 0.0, low_confidence: true };
    }
    let final_verdict = yes >= no;
    let agree = if final_verdict { yes } else { no };
    AggregatedVerdict {
        votes,
        n_requested,
        final_verdict: Some(final_verdict),
        outcome: if final_verdict { Outcome::Vulnerable } else { Outcome::NotVulnerable },
        confidence: agree as f64 / total as f64,
        low_confidence: yes == no,
    }
}

/// Issues `n` independent rounds concurrently and parses each. Failed
/// rounds stay in the list with `parse_ok = false`.
pub fn query_rounds(client: &dyn InferenceClient, prompt: &MetaPrompt, n: usize) -> Result<Vec<Verdict>, ReasoningError> {
    if n == 0 || n.is_multiple_of(2) {
        return Err(ReasoningError::BadRounds(n));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|round| match client.complete(&prompt.text, round) {
            Ok(text) => parse_verdict(&text),
            Err(e) => Verdict { explanation: String::new(), is_vulnerable: None, raw: e.to_string(), parse_ok: false, transport_error: e.is_transport() },
        })
        .collect())
}

pub fn judge(client: &dyn InferenceClient, prompt: &MetaPrompt, n: usize) -> Result<AggregatedVerdict, ReasoningError> {
    Ok(aggregate_votes(query_rounds(client, prompt, n)?, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vote(v: bool) -> Verdict {
        parse_verdict(&client::verdict_json(v, ""))
    }

    fn failed() -> Verdict {
        parse_verdict("I could not decide.")
    }

    fn prompt() -> MetaPrompt {
        let slots = PromptSlots { context: String::new(), api: "a".into(), cwe: "CWE-1".into(), vuln_patterns: "p".into(), defense_knowledge: "d".into() };
        MetaPrompt { text: fill_template(&slots), slots }
    }

    #[test]
    fn parse_forms() {
        let v = parse_verdict(r#"{"explanation":"escaped first","is_vulnerable":false}"#);
        assert!(v.parse_ok);
        assert_eq!(v.is_vulnerable, Some(false));
        assert_eq!(v.explanation, "escaped first");
        let fenced = parse_verdict("Step 1 ... done.\n```json\n{\"is_vulnerable\": true}\n```\n");
        assert_eq!(fenced.is_vulnerable, Some(true));
        assert_eq!(fenced.explanation, "");
        assert!(!parse_verdict(r#"{"explanation":"x","is_vulnerable":"yes"}"#).parse_ok);
        assert!(!failed().parse_ok);
        let two = parse_verdict(r#"draft {"is_vulnerable": true} final {"is_vulnerable": false}"#);
        assert_eq!(two.is_vulnerable, Some(false));
    }

    #[test]
    fn aggregation_examples() {
        let a = aggregate_votes(vec![vote(true), vote(true), vote(false)], 3);
        assert_eq!(a.final_verdict, Some(true));
        assert!((a.confidence - 2.0 / 3.0).abs() < 1e-12);
        let b = aggregate_votes(vec![vote(false), vote(false), vote(false)], 3);
        assert_eq!((b.final_verdict, b.confidence, b.outcome), (Some(false), 1.0, Outcome::NotVulnerable));
        let c = aggregate_votes(vec![vote(true), failed(), vote(false)], 3);
        assert_eq!(c.final_verdict, Some(true));
        assert!(c.low_confidence);
        assert_eq!(c.confidence, 0.5);
        let d = aggregate_votes(vec![failed(), failed(), failed()], 3);
        assert_eq!((d.final_verdict, d.outcome), (None, Outcome::Undetermined));
    }

    #[test]
    fn rounds_from_mocks() {
        let p = prompt();
        let fixed = FixedClient(client::verdict_json(false, "ok"));
        let vs = query_rounds(&fixed, &p, 3).unwrap();
        assert_eq!(vs.len(), 3);
        assert!(vs.iter().all(|v| v == &vs[0] && v.parse_ok));
        let alt = ScriptedClient::verdicts(&[true, false, true]);
        let vs = query_rounds(&alt, &p, 3).unwrap();
        assert_eq!(vs.iter().filter(|v| v.is_vulnerable == Some(true)).count(), 2);
        let prose = ScriptedClient(vec![Ok(client::verdict_json(true, "")), Ok("no json at all".into()), Err("boom".into())]);
        let vs = query_rounds(&prose, &p, 3).unwrap();
        assert_eq!(vs.iter().filter(|v| v.parse_ok).count(), 1);
        assert!(!vs[2].transport_error);
        assert_eq!(query_rounds(&fixed, &p, 2), Err(ReasoningError::BadRounds(2)));
        assert_eq!(query_rounds(&fixed, &p, 0), Err(ReasoningError::BadRounds(0)));
    }

    proptest! {
        #[test]
        fn aggregation_permutation_invariant(vs in proptest::collection::vec(0u8..3, 1..9), seed in any::<u64>()) {
            let mk = |x: &u8| match x { 0 => vote(false), 1 => vote(true), _ => failed() };
            let a = aggregate_votes(vs.iter().map(mk).collect(), vs.len());
            let mut shuffled = vs.clone();
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let b = aggregate_votes(shuffled.iter().map(mk).collect(), vs.len());
            prop_assert_eq!(a.final_verdict, b.final_verdict);
            prop_assert_eq!(a.confidence, b.confidence);
            prop_assert_eq!(a.low_confidence, b.low_confidence);
        }

        #[test]
        fn odd_fully_parsed_votes_never_tie(vs in proptest::collection::vec(any::<bool>(), 1..8)) {
            let n = if vs.len() % 2 == 0 { vs.len() - 1 } else { vs.len() };
            let a = aggregate_votes(vs[..n].iter().map(|v| vote(*v)).collect(), n);
            prop_assert!(!a.low_confidence);
            prop_assert!(a.confidence > 0.5);
            let yes = vs[..n].iter().filter(|v| **v).count();
            prop_assert_eq!(a.final_verdict, Some(2 * yes > n));
        }
    }
}
