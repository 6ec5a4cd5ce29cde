//! Resolution of labeled `break` / `continue` targets.

use super::model::{Block, DiagClass, Diagnostic, FunctionDecl, JumpTarget, RepoModel, StmtId};

/// First statement executed when `b` is entered, or `follow` when `b` is empty.
pub fn first_of(b: &Block, follow: StmtId) -> StmtId {
    match b {
        Block::Simple(s) | Block::Return(s) | Block::Throw(s) => *s,
        Block::Break { stmt, .. } | Block::Continue { stmt, .. } => *stmt,
        Block::Seq(items) => items.iter().rev().fold(follow, |acc, it| first_of(it, acc)),
        Block::If { cond, .. } | Block::While { cond, .. } => *cond,
        Block::DoWhile { body, cond } => first_of(body, *cond),
        Block::For { init, cond, update, body } => {
            if let Some(i) = init.first() {
                *i
            } else {
                loop_start(*cond, update, body, follow)
            }
        }
        Block::ForEach { header, .. } => *header,
        Block::Switch { selector, .. } => *selector,
        Block::Labeled { label, .. } => *label,
        Block::Try { body, finally, .. } => {
            let after = finally.as_ref().map(|f| first_of(f, follow)).unwrap_or(follow);
            first_of(body, after)
        }
    }
}

/// Where a `for` loop re-enters after its init: the condition, or the body
/// when there is no condition.
pub fn loop_start(cond: Option<StmtId>, update: &[StmtId], body: &Block, follow: StmtId) -> StmtId {
    match cond {
        Some(c) => c,
        None => {
            let fallback = update.first().copied().unwrap_or(follow);
            first_of(body, fallback)
        }
    }
}

/// The next-iteration point of a `for` loop.
pub fn for_continue_point(cond: Option<StmtId>, update: &[StmtId], body: &Block, follow: StmtId) -> StmtId {
    update.first().copied().unwrap_or_else(|| loop_start(cond, update, body, follow))
}

struct LabelCtx {
    name: String,
    construct: StmtId,
    continue_point: Option<StmtId>,
    break_succ: StmtId,
}

#[derive(Debug, Clone, Default)]
pub struct LabelResolution {
    pub targets: Vec<JumpTarget>,
    pub unresolved: Vec<Diagnostic>,
}

pub fn resolve_label_targets(model: &RepoModel) -> LabelResolution {
    let mut out = LabelResolution::default();
    for f in &model.functions {
        resolve_in_function(model, f, &mut out);
    }
    out.targets.sort_by_key(|t| t.jump);
    out
}

pub fn resolve_in_function(model: &RepoModel, f: &FunctionDecl, out: &mut LabelResolution) {
    let mut stack = Vec::new();
    walk(model, &f.tree, f.exit, &mut stack, out);
}

fn unwrap_labels(b: &Block) -> &Block {
    match b {
        Block::Labeled { body, .. } => unwrap_labels(body),
        other => other,
    }
}

fn walk(model: &RepoModel, b: &Block, follow: StmtId, stack: &mut Vec<LabelCtx>, out: &mut LabelResolution) {
    match b {
        Block::Simple(_) | Block::Return(_) | Block::Throw(_) => {}
        Block::Seq(items) => {
            for (i, it) in items.iter().enumerate() {
                let next = items[i + 1..].iter().rev().fold(follow, |acc, x| first_of(x, acc));
                walk(model, it, next, stack, out);
            }
        }
        Block::If { then, els, .. } => {
            walk(model, then, follow, stack, out);
            if let Some(e) = els {
                walk(model, e, follow, stack, out);
            }
        }
        Block::While { cond, body } | Block::DoWhile { body, cond } => walk(model, body, *cond, stack, out),
        Block::For { cond, update, body, .. } => {
            let cp = for_continue_point(*cond, update, body, follow);
            walk(model, body, cp, stack, out);
        }
        Block::ForEach { header, body } => walk(model, body, *header, stack, out),
        Block::Switch { groups, .. } => {
            for (i, g) in groups.iter().enumerate() {
                let next = groups[i + 1..].iter().rev().fold(follow, |acc, x| first_of(x, acc));
                walk(model, g, next, stack, out);
            }
        }
        Block::Labeled { label, name, body } => {
            let inner = unwrap_labels(body);
            let (construct, continue_point) = match inner {
                Block::For { cond, update, body: lb, .. } => {
                    let cp = for_continue_point(*cond, update, lb, follow);
                    (cond.or(update.first().copied()).unwrap_or(*label), Some(cp))
                }
                Block::ForEach { header, .. } => (*header, Some(*header)),
                Block::While { cond, .. } | Block::DoWhile { cond, .. } => (*cond, Some(*cond)),
                Block::Switch { selector, .. } => (*selector, None),
                _ => (*label, None),
            };
            stack.push(LabelCtx { name: name.clone(), construct, continue_point, break_succ: follow });
            walk(model, body, follow, stack, out);
            stack.pop();
        }
        Block::Break { stmt, label: Some(l) } => match stack.iter().rev().find(|c| &c.name == l) {
            Some(c) => out.targets.push(JumpTarget { jump: *stmt, label: l.clone(), is_continue: false, target_construct: c.construct, resolved_successor: c.break_succ }),
            None => out.unresolved.push(unresolved(model, *stmt, l, "no enclosing label")),
        },
        Block::Continue { stmt, label: Some(l) } => match stack.iter().rev().find(|c| &c.name == l) {
            Some(LabelCtx { construct, continue_point: Some(cp), .. }) => {
                out.targets.push(JumpTarget { jump: *stmt, label: l.clone(), is_continue: true, target_construct: *construct, resolved_successor: *cp })
            }
            Some(_) => out.unresolved.push(unresolved(model, *stmt, l, "continue target is not a loop")),
            None => out.unresolved.push(unresolved(model, *stmt, l, "no enclosing label")),
        },
        Block::Break { .. } | Block::Continue { .. } => {}
        Block::Try { body, catches, finally } => {
            let after = finally.as_ref().map(|f| first_of(f, follow)).unwrap_or(follow);
            walk(model, body, after, stack, out);
            for c in catches {
                walk(model, c, after, stack, out);
            }
            if let Some(f) = finally {
                walk(model, f, follow, stack, out);
            }
        }
    }
}

fn unresolved(model: &RepoModel, stmt: StmtId, label: &str, why: &str) -> Diagnostic {
    let s = model.stmt(stmt);
    Diagnostic::new("frontend", DiagClass::Parse, format!("unresolved label `{label}`: {why}")).at(&model.file(s.file).path, Some(s.line_span.start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_sources;

    fn text_of(m: &RepoModel, id: StmtId) -> String {
        m.stmt(id).text.clone()
    }

    fn resolve(body: &str) -> (RepoModel, LabelResolution) {
        let m = parse_sources(vec![("T.java".into(), format!("class T {{ void m(int n, boolean c) {{ {body} }} }}"))]).unwrap();
        let r = resolve_label_targets(&m);
        (m, r)
    }

    #[test]
    fn continue_in_for_goes_to_update() {
        let (m, r) = resolve("outer: for (int i = 0; i < n; i++) { for (int j = 0; j < n; j++) { continue outer; } }");
        assert_eq!(r.targets.len(), 1);
        assert_eq!(text_of(&m, r.targets[0].resolved_successor), "i++");
        assert_eq!(text_of(&m, r.targets[0].target_construct), "i < n");
    }

    #[test]
    fn break_goes_to_following_statement_or_exit() {
        let (m, r) = resolve("outer: while (c) { while (c) { break outer; } } n = 1;");
        assert_eq!(text_of(&m, r.targets[0].resolved_successor), "n = 1;");
        let (m, r) = resolve("outer: while (c) { break outer; }");
        assert_eq!(m.stmt(r.targets[0].resolved_successor).kind, crate::frontend::model::StmtKind::Exit);
    }

    #[test]
    fn illegal_targets_are_reported() {
        let (_, r) = resolve("blk: { continue blk; }");
        assert_eq!(r.unresolved.len(), 1);
        let (_, r) = resolve("while (c) { break missing; }");
        assert_eq!(r.unresolved.len(), 1);
        assert!(r.targets.is_empty());
    }
}
