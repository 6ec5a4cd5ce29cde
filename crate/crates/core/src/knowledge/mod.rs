//! Sensitive APIs, their CWE types and the per-CWE guideline text that
//! fills the detection prompt.

mod pattern;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pattern::{ApiPattern, CallDescriptor};

/// Seed knowledge base shipped with the crate.
pub const STARTER_KB: &str = include_str!("../../kb/starter.json");

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("no guideline for {cwe} (needed by {api})")]
    MissingGuideline { api: String, cwe: String },
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> KnowledgeError {
    KnowledgeError::Schema { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CweGuideline {
    pub cwe_id: String,
    pub title: String,
    pub vuln_patterns: String,
    pub defense_knowledge: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbEntry {
    pub api: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arity: Option<usize>,
    pub cwes: Vec<String>,
}

/// Inline guideline text carried by a user sink.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidelineText {
    #[serde(default)]
    pub title: String,
    pub vuln_patterns: String,
    pub defense_knowledge: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSinkSpec {
    pub function: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arity: Option<usize>,
    pub cwe: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guideline: Option<GuidelineText>,
}

impl UserSinkSpec {
    pub fn pattern(&self) -> Result<ApiPattern, KnowledgeError> {
        ApiPattern::parse(&self.function, self.arity).ok_or_else(|| schema("sinks[].function", format!("malformed signature `{}`", self.function)))
    }

    /// The inline guideline as a full record.
    pub fn override_guideline(&self) -> Option<CweGuideline> {
        self.guideline.as_ref().map(|g| CweGuideline {
            cwe_id: self.cwe.clone(),
            title: if g.title.is_empty() { self.cwe.clone() } else { g.title.clone() },
            vuln_patterns: g.vuln_patterns.clone(),
            defense_knowledge: g.defense_knowledge.clone(),
        })
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct KbFile {
    #[serde(default)]
    guidelines: Vec<CweGuideline>,
    #[serde(default)]
    apis: Vec<KbEntry>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct SinkFile {
    #[serde(default)]
    sinks: Vec<UserSinkSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    pub guidelines: BTreeMap<String, CweGuideline>,
    pub entries: Vec<KbEntry>,
    patterns: Vec<ApiPattern>,
    /// Non-fatal load messages (duplicate APIs merged).
    pub warnings: Vec<String>,
}

/// One (API, CWE) pair for one invocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionUnit {
    pub api: String,
    pub cwe: String,
    pub guideline: CweGuideline,
}

fn is_cwe_id(s: &str) -> bool {
    s.strip_prefix("CWE-").is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

fn check_guideline(i: usize, g: &CweGuideline) -> Result<(), KnowledgeError> {
    if !is_cwe_id(&g.cwe_id) {
        return Err(schema(format!("guidelines[{i}].cwe_id"), format!("`{}` is not CWE-<digits>", g.cwe_id)));
    }
    for (name, text) in [("title", &g.title), ("vuln_patterns", &g.vuln_patterns), ("defense_knowledge", &g.defense_knowledge)] {
        if text.trim().is_empty() {
            return Err(schema(format!("guidelines[{i}].{name}"), "must be non-empty"));
        }
    }
    Ok(())
}

impl KnowledgeBase {
    pub fn from_json(text: &str) -> Result<KnowledgeBase, KnowledgeError> {
        let raw: KbFile = serde_json::from_str(text).map_err(|e| schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        let mut kb = KnowledgeBase::default();
        for (i, g) in raw.guidelines.into_iter().enumerate() {
            check_guideline(i, &g)?;
            if kb.guidelines.contains_key(&g.cwe_id) {
                return Err(schema(format!("guidelines[{i}].cwe_id"), format!("duplicate guideline {}", g.cwe_id)));
            }
            kb.guidelines.insert(g.cwe_id.clone(), g);
        }
        for (i, e) in raw.apis.into_iter().enumerate() {
            let pattern = ApiPattern::parse(&e.api, e.arity).ok_or_else(|| schema(format!("apis[{i}].api"), format!("malformed signature `{}`", e.api)))?;
            if e.cwes.is_empty() {
                return Err(schema(format!("apis[{i}].cwes"), "at least one CWE required"));
            }
            for (j, c) in e.cwes.iter().enumerate() {
                if !kb.guidelines.contains_key(c) {
                    return Err(schema(format!("apis[{i}].cwes[{j}]"), format!("{c} has no guideline")));
                }
            }
            if let Some(k) = kb.entries.iter().position(|x| x.api == e.api && x.arity == e.arity) {
                kb.warnings.push(format!("duplicate api `{}` merged into earlier entry", e.api));
                for c in e.cwes {
                    if !kb.entries[k].cwes.contains(&c) {
                        kb.entries[k].cwes.push(c);
                    }
                }
                continue;
            }
            kb.entries.push(e);
            kb.patterns.push(pattern);
        }
        Ok(kb)
    }

    pub fn load(path: &Path) -> Result<KnowledgeBase, KnowledgeError> {
        let text = std::fs::read_to_string(path).map_err(|source| KnowledgeError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn starter() -> KnowledgeBase {
        Self::from_json(STARTER_KB).expect("starter knowledge base is valid")
    }

    /// Pretty JSON in the load format.
    pub fn dump(&self) -> String {
        let raw = KbFile { guidelines: self.guidelines.values().cloned().collect(), apis: self.entries.clone() };
        serde_json::to_string_pretty(&raw).expect("serializable")
    }

    pub fn guideline(&self, cwe: &str) -> Option<&CweGuideline> {
        self.guidelines.get(cwe)
    }

    /// Entries whose pattern matches any of the call's descriptors.
    pub fn matching(&self, calls: &[CallDescriptor]) -> Vec<&KbEntry> {
        self.entries.iter().zip(&self.patterns).filter(|(_, p)| calls.iter().any(|c| p.matches(c))).map(|(e, _)| e).collect()
    }
}

pub fn parse_sinks(text: &str) -> Result<Vec<UserSinkSpec>, KnowledgeError> {
    let raw: SinkFile = serde_json::from_str(text).map_err(|e| schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    for (i, s) in raw.sinks.iter().enumerate() {
        s.pattern().map_err(|_| schema(format!("sinks[{i}].function"), format!("malformed signature `{}`", s.function)))?;
        if !is_cwe_id(&s.cwe) {
            return Err(schema(format!("sinks[{i}].cwe"), format!("`{}` is not CWE-<digits>", s.cwe)));
        }
        if let Some(g) = &s.guideline {
            if g.vuln_patterns.trim().is_empty() || g.defense_knowledge.trim().is_empty() {
                return Err(schema(format!("sinks[{i}].guideline"), "guideline text must be non-empty"));
            }
        }
    }
    Ok(raw.sinks)
}

pub fn load_sinks(path: &Path) -> Result<Vec<UserSinkSpec>, KnowledgeError> {
    let text = std::fs::read_to_string(path).map_err(|source| KnowledgeError::Io { path: path.display().to_string(), source })?;
    parse_sinks(&text)
}

/// Checks that every sink's CWE resolves, either inline or in `kb`.
pub fn validate_sinks(sinks: &[UserSinkSpec], kb: &KnowledgeBase) -> Result<(), KnowledgeError> {
    for s in sinks {
        if s.guideline.is_none() && kb.guideline(&s.cwe).is_none() {
            return Err(KnowledgeError::MissingGuideline { api: s.function.clone(), cwe: s.cwe.clone() });
        }
    }
    Ok(())
}

/// One unit per CWE; an inline override wins over the KB guideline.
pub fn detection_units_for(api: &str, cwes: &[String], overrides: &[CweGuideline], kb: &KnowledgeBase) -> Result<Vec<DetectionUnit>, KnowledgeError> {
    cwes.iter()
        .map(|cwe| {
            let guideline = overrides
                .iter()
                .find(|g| &g.cwe_id == cwe)
                .or_else(|| kb.guideline(cwe))
                .cloned()
                .ok_or_else(|| KnowledgeError::MissingGuideline { api: api.to_string(), cwe: cwe.clone() })?;
            Ok(DetectionUnit { api: api.to_string(), cwe: cwe.clone(), guideline })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn guideline(id: &str) -> String {
        format!(r#"{{"cwe_id":"{id}","title":"t {id}","vuln_patterns":"p","defense_knowledge":"d"}}"#)
    }

    #[test]
    fn starter_has_required_cwes() {
        let kb = KnowledgeBase::starter();
        for c in ["CWE-78", "CWE-89", "CWE-22", "CWE-74", "CWE-79", "CWE-90", "CWE-94", "CWE-502", "CWE-611", "CWE-918"] {
            assert!(kb.guideline(c).is_some(), "{c}");
        }
        assert!(kb.warnings.is_empty());
        for e in &kb.entries {
            assert!(!e.cwes.is_empty());
        }
    }

    #[test]
    fn sql_guideline_contrasts_bind_variables_with_replace_all() {
        let kb = KnowledgeBase::starter();
        let d = &kb.guideline("CWE-89").unwrap().defense_knowledge;
        assert!(d.contains("PreparedStatement"));
        assert!(d.contains("replaceAll"));
    }

    #[test]
    fn dump_round_trip() {
        let kb = KnowledgeBase::starter();
        let text = kb.dump();
        let again = KnowledgeBase::from_json(&text).unwrap();
        assert_eq!(again, kb);
        assert_eq!(again.dump(), text);
        let a: serde_json::Value = serde_json::from_str(STARTER_KB).unwrap();
        let b: serde_json::Value = serde_json::from_str(&text).unwrap();
        let sorted = |v: &serde_json::Value| {
            let mut g: Vec<String> = v["guidelines"].as_array().unwrap().iter().map(|x| x.to_string()).collect();
            g.sort();
            (g, v["apis"].clone())
        };
        assert_eq!(sorted(&a), sorted(&b));
    }

    #[test]
    fn empty_kb_is_valid() {
        let kb = KnowledgeBase::from_json(r#"{"guidelines":[],"apis":[]}"#).unwrap();
        assert!(kb.entries.is_empty() && kb.guidelines.is_empty());
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad_id = format!(r#"{{"guidelines":[{}],"apis":[]}}"#, guideline("CWE78"));
        match KnowledgeBase::from_json(&bad_id) {
            Err(KnowledgeError::Schema { field, .. }) => assert_eq!(field, "guidelines[0].cwe_id"),
            other => panic!("{other:?}"),
        }
        let empty_text = r#"{"guidelines":[{"cwe_id":"CWE-1","title":"t","vuln_patterns":" ","defense_knowledge":"d"}]}"#;
        match KnowledgeBase::from_json(empty_text) {
            Err(KnowledgeError::Schema { field, .. }) => assert_eq!(field, "guidelines[0].vuln_patterns"),
            other => panic!("{other:?}"),
        }
        let no_cwe = format!(r#"{{"guidelines":[{}],"apis":[{{"api":"a.B.c","cwes":[]}}]}}"#, guideline("CWE-1"));
        assert!(matches!(KnowledgeBase::from_json(&no_cwe), Err(KnowledgeError::Schema { field, .. }) if field == "apis[0].cwes"));
        let dangling = format!(r#"{{"guidelines":[{}],"apis":[{{"api":"a.B.c","cwes":["CWE-2"]}}]}}"#, guideline("CWE-1"));
        assert!(matches!(KnowledgeBase::from_json(&dangling), Err(KnowledgeError::Schema { field, .. }) if field == "apis[0].cwes[0]"));
        let malformed = format!(r#"{{"guidelines":[{}],"apis":[{{"api":"a..c","cwes":["CWE-1"]}}]}}"#, guideline("CWE-1"));
        assert!(matches!(KnowledgeBase::from_json(&malformed), Err(KnowledgeError::Schema { field, .. }) if field == "apis[0].api"));
    }

    #[test]
    fn duplicate_api_merged_with_warning() {
        let text = format!(
            r#"{{"guidelines":[{},{}],"apis":[{{"api":"java.lang.Runtime.exec","cwes":["CWE-78"]}},{{"api":"java.lang.Runtime.exec","cwes":["CWE-88"]}}]}}"#,
            guideline("CWE-78"),
            guideline("CWE-88")
        );
        let kb = KnowledgeBase::from_json(&text).unwrap();
        assert_eq!(kb.entries.len(), 1);
        assert_eq!(kb.entries[0].cwes, vec!["CWE-78", "CWE-88"]);
        assert_eq!(kb.warnings.len(), 1);
        let units = detection_units_for("java.lang.Runtime.exec", &kb.entries[0].cwes, &[], &kb).unwrap();
        assert_eq!(units.iter().map(|u| u.cwe.as_str()).collect::<Vec<_>>(), vec!["CWE-78", "CWE-88"]);
    }

    #[test]
    fn units_single_and_override() {
        let kb = KnowledgeBase::starter();
        assert_eq!(detection_units_for("exec", &["CWE-78".into()], &[], &kb).unwrap().len(), 1);
        let sinks = parse_sinks(
            r#"{"sinks":[{"function":"com.acme.MyDao.rawQuery","cwe":"CWE-1000","guideline":{"vuln_patterns":"raw SQL built from input","defense_knowledge":"use the typed query builder"}}]}"#,
        )
        .unwrap();
        validate_sinks(&sinks, &kb).unwrap();
        let ov = sinks[0].override_guideline().unwrap();
        let units = detection_units_for(&sinks[0].function, &["CWE-1000".into()], &[ov], &kb).unwrap();
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].guideline.defense_knowledge, "use the typed query builder");
    }

    #[test]
    fn unknown_sink_cwe_without_override_is_missing_guideline() {
        let kb = KnowledgeBase::starter();
        let sinks = parse_sinks(r#"{"sinks":[{"function":"MyDao.rawQuery","cwe":"CWE-4242"}]}"#).unwrap();
        assert!(matches!(validate_sinks(&sinks, &kb), Err(KnowledgeError::MissingGuideline { .. })));
        assert!(matches!(detection_units_for("MyDao.rawQuery", &["CWE-4242".into()], &[], &kb), Err(KnowledgeError::MissingGuideline { .. })));
    }

    proptest! {
        #[test]
        fn dump_round_trips(keep in proptest::collection::vec(any::<bool>(), 64)) {
            let full = KnowledgeBase::starter();
            let apis: Vec<&KbEntry> = full.entries.iter().zip(keep.iter().cycle()).filter(|(_, k)| **k).map(|(e, _)| e).collect();
            let text = serde_json::json!({ "guidelines": full.guidelines.values().collect::<Vec<_>>(), "apis": apis }).to_string();
            let kb = KnowledgeBase::from_json(&text).unwrap();
            let again = KnowledgeBase::from_json(&kb.dump()).unwrap();
            prop_assert_eq!(&again, &kb);
            prop_assert_eq!(again.dump(), kb.dump());
        }
    }
}
