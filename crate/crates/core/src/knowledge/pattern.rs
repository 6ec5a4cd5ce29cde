use serde::{Deserialize, Serialize};

/// `pkg.Type.method` with an optional arity pin. Constructors use `<init>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiPattern {
    pub qualifier: Vec<String>,
    pub method: String,
    pub arity: Option<usize>,
}

/// What a call site is known to call.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CallDescriptor {
    /// Dotted type name, as qualified as the frontend can make it.
    pub qualifier: Option<String>,
    pub method: String,
    pub arity: usize,
}

impl CallDescriptor {
    pub fn render(&self) -> String {
        match &self.qualifier {
            Some(q) => format!("{q}.{}", self.method),
            None => self.method.clone(),
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_' || c == '$') && cs.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

fn ends_with(long: &[&str], short: &[&str]) -> bool {
    short.len() <= long.len() && long[long.len() - short.len()..] == *short
}

impl ApiPattern {
    /// Accepts `a.b.C.m`, `m`, and an optional `/n` arity suffix; an
    /// explicit `arity` argument wins.
    pub fn parse(text: &str, arity: Option<usize>) -> Option<ApiPattern> {
        let (body, suffix) = match text.rsplit_once('/') {
            Some((b, n)) => (b, Some(n.parse::<usize>().ok()?)),
            None => (text, None),
        };
        let mut segs: Vec<&str> = body.split('.').collect();
        let method = segs.pop()?;
        if !(is_ident(method) || method == "<init>") || !segs.iter().all(|s| is_ident(s)) {
            return None;
        }
        if method == "<init>" && segs.is_empty() {
            return None;
        }
        Some(ApiPattern { qualifier: segs.into_iter().map(String::from).collect(), method: method.to_string(), arity: arity.or(suffix) })
    }

    /// Method names must be equal; qualifiers match when either is a
    /// segment-wise suffix of the other.
    pub fn matches(&self, call: &CallDescriptor) -> bool {
        if self.method != call.method || self.arity.is_some_and(|a| a != call.arity) {
            return false;
        }
        if self.qualifier.is_empty() {
            return true;
        }
        let Some(q) = &call.qualifier else { return false };
        let theirs: Vec<&str> = q.split('.').collect();
        let ours: Vec<&str> = self.qualifier.iter().map(String::as_str).collect();
        ends_with(&ours, &theirs) || ends_with(&theirs, &ours)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(q: Option<&str>, m: &str, n: usize) -> CallDescriptor {
        CallDescriptor { qualifier: q.map(String::from), method: m.into(), arity: n }
    }

    #[test]
    fn parse_forms() {
        let p = ApiPattern::parse("java.lang.Runtime.exec", None).unwrap();
        assert_eq!(p.qualifier, vec!["java", "lang", "Runtime"]);
        assert_eq!(p.method, "exec");
        assert_eq!(ApiPattern::parse("exec/1", None).unwrap().arity, Some(1));
        assert_eq!(ApiPattern::parse("exec/1", Some(2)).unwrap().arity, Some(2));
        assert!(ApiPattern::parse("java.io.File.<init>", None).is_some());
        for bad in ["", "a..b", "<init>", "a.b/x", "1a.b", "a.b c"] {
            assert!(ApiPattern::parse(bad, None).is_none(), "{bad}");
        }
    }

    #[test]
    fn suffix_matching() {
        let p = ApiPattern::parse("java.lang.Runtime.exec", None).unwrap();
        assert!(p.matches(&call(Some("Runtime"), "exec", 1)));
        assert!(p.matches(&call(Some("java.lang.Runtime"), "exec", 3)));
        assert!(!p.matches(&call(Some("com.acme.Runtime2"), "exec", 1)));
        assert!(!p.matches(&call(Some("lang.Process"), "exec", 1)));
        assert!(!p.matches(&call(None, "exec", 1)));
        assert!(!p.matches(&call(Some("Runtime"), "execute", 1)));
        let bare = ApiPattern::parse("exec", None).unwrap();
        assert!(bare.matches(&call(None, "exec", 1)));
        assert!(bare.matches(&call(Some("java.lang.Runtime"), "exec", 1)));
        let pinned = ApiPattern::parse("MyDao.rawQuery/2", None).unwrap();
        assert!(pinned.matches(&call(Some("com.acme.MyDao"), "rawQuery", 2)));
        assert!(!pinned.matches(&call(Some("com.acme.MyDao"), "rawQuery", 1)));
    }
}
