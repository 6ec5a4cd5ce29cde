//! Line sets, per-file rendering and the token budget.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::{FileId, RepoModel, StmtId};

pub type LineSet = BTreeMap<FileId, BTreeSet<u32>>;

/// Counts prompt tokens for the context budget.
pub trait Tokenizer: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

/// Roughly four characters per token.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharRatioTokenizer;

impl Tokenizer for CharRatioTokenizer {
    fn count(&self, text: &str) -> usize {
        text.chars().count().div_ceil(4)
    }
}

/// Per file, which lines are touched by a non-synthetic statement.
#[derive(Debug, Clone)]
pub struct LineIndex {
    /// `prefix[f][l]`: how many lines below `l` a real statement touches.
    prefix: Vec<Vec<u32>>,
}

impl LineIndex {
    pub fn new(model: &RepoModel) -> LineIndex {
        let mut touched: Vec<Vec<bool>> = model.files.iter().map(|f| vec![false; f.line_count() as usize + 2]).collect();
        for s in model.statements.iter().filter(|s| !s.is_synthetic()) {
            let t = &mut touched[s.file.idx()];
            for l in s.line_span.lines() {
                if let Some(x) = t.get_mut(l as usize) {
                    *x = true;
                }
            }
        }
        let prefix = touched
            .into_iter()
            .map(|t| {
                let mut p = Vec::with_capacity(t.len() + 1);
                let mut acc = 0;
                p.push(0);
                for x in t {
                    acc += x as u32;
                    p.push(acc);
                }
                p
            })
            .collect();
        LineIndex { prefix }
    }

    /// Whether lines strictly between `a` and `b` hold no real statement.
    fn gap_is_empty(&self, f: FileId, a: u32, b: u32) -> bool {
        let p = &self.prefix[f.idx()];
        let at = |l: u32| p[(l as usize).min(p.len() - 1)];
        at(b) - at(a + 1) == 0
    }
}

/// Lines of the non-synthetic statements, with every gap that contains no
/// real statement (comments, blanks, braces, signatures) filled in.
pub fn line_set(model: &RepoModel, index: &LineIndex, stmts: impl IntoIterator<Item = StmtId>) -> LineSet {
    let mut raw: LineSet = BTreeMap::new();
    for s in stmts {
        let st = model.stmt(s);
        if st.is_synthetic() {
            continue;
        }
        raw.entry(st.file).or_default().extend(st.line_span.lines());
    }
    for (f, lines) in raw.iter_mut() {
        let v: Vec<u32> = lines.iter().copied().collect();
        for w in v.windows(2) {
            if w[1] > w[0] + 1 && index.gap_is_empty(*f, w[0], w[1]) {
                lines.extend(w[0] + 1..w[1]);
            }
        }
    }
    raw
}

/// Maximal runs of consecutive lines.
pub fn ranges(lines: &BTreeSet<u32>) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = Vec::new();
    for &l in lines {
        match out.last_mut() {
            Some((_, e)) if *e + 1 == l => *e = l,
            _ => out.push((l, l)),
        }
    }
    out
}

/// `path → [(start, end)]`, for reports and tests.
pub fn line_ranges(model: &RepoModel, ls: &LineSet) -> BTreeMap<String, Vec<(u32, u32)>> {
    ls.iter().map(|(f, l)| (model.file(*f).path.clone(), ranges(l))).collect()
}

/// `// file:` header per file, `<line>| <text>` per line, `...` between runs.
pub fn render_lines(model: &RepoModel, ls: &LineSet) -> String {
    let mut out = String::new();
    for (f, lines) in ls {
        let file = model.file(*f);
        out.push_str(&format!("// file: {}\n", file.path));
        for (k, (a, b)) in ranges(lines).into_iter().enumerate() {
            if k > 0 {
                out.push_str("...\n");
            }
            for l in a..=b {
                out.push_str(&format!("{l}| {}\n", file.line(l)));
            }
        }
    }
    out
}

/// Number of `<line>|` rows in a rendering.
pub fn numbered_rows(rendered: &str) -> usize {
    rendered.lines().filter(|l| l.split_once("| ").is_some_and(|(n, _)| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))).count()
}
