//! Structured intra-procedural control flow.
//!
//! Labeled `break`/`continue` get no successors here; the enhancement pass
//! reconnects them. `try` is modeled on its normal path only: the body
//! falls into `finally`, catch blocks are left unreachable.

use crate::frontend::labels::{first_of, for_continue_point, loop_start};
use crate::frontend::model::{Block, FunctionDecl, StmtId};

struct Loop {
    brk: StmtId,
    cont: Option<StmtId>,
}

struct Builder {
    edges: Vec<(StmtId, StmtId)>,
    exit: StmtId,
    targets: Vec<Loop>,
}

impl Builder {
    fn edge(&mut self, a: StmtId, b: StmtId) {
        self.edges.push((a, b));
    }

    fn walk(&mut self, b: &Block, follow: StmtId) {
        match b {
            Block::Simple(s) => self.edge(*s, follow),
            Block::Return(s) | Block::Throw(s) => self.edge(*s, self.exit),
            Block::Seq(items) => {
                for (i, it) in items.iter().enumerate() {
                    let next = items[i + 1..].iter().rev().fold(follow, |acc, x| first_of(x, acc));
                    self.walk(it, next);
                }
            }
            Block::If { cond, then, els } => {
                self.edge(*cond, first_of(then, follow));
                self.walk(then, follow);
                match els {
                    Some(e) => {
                        self.edge(*cond, first_of(e, follow));
                        self.walk(e, follow);
                    }
                    None => self.edge(*cond, follow),
                }
            }
            Block::While { cond, body } => {
                self.edge(*cond, first_of(body, *cond));
                self.edge(*cond, follow);
                self.in_loop(body, *cond, follow, *cond);
            }
            Block::DoWhile { body, cond } => {
                self.edge(*cond, first_of(body, *cond));
                self.edge(*cond, follow);
                self.in_loop(body, *cond, follow, *cond);
            }
            Block::For { init, cond, update, body } => {
                let start = loop_start(*cond, update, body, follow);
                for (i, s) in init.iter().enumerate() {
                    self.edge(*s, init.get(i + 1).copied().unwrap_or(start));
                }
                let cp = for_continue_point(*cond, update, body, follow);
                if let Some(c) = cond {
                    self.edge(*c, first_of(body, cp));
                    self.edge(*c, follow);
                }
                for (i, u) in update.iter().enumerate() {
                    self.edge(*u, update.get(i + 1).copied().unwrap_or(start));
                }
                self.in_loop(body, cp, follow, cp);
            }
            Block::ForEach { header, body } => {
                self.edge(*header, first_of(body, *header));
                self.edge(*header, follow);
                self.in_loop(body, *header, follow, *header);
            }
            Block::Switch { selector, groups, has_default } => {
                for (i, g) in groups.iter().enumerate() {
                    let next = groups[i + 1..].iter().rev().fold(follow, |acc, x| first_of(x, acc));
                    self.edge(*selector, first_of(g, next));
                }
                if !has_default || groups.is_empty() {
                    self.edge(*selector, follow);
                }
                self.targets.push(Loop { brk: follow, cont: None });
                for (i, g) in groups.iter().enumerate() {
                    let next = groups[i + 1..].iter().rev().fold(follow, |acc, x| first_of(x, acc));
                    self.walk(g, next);
                }
                self.targets.pop();
            }
            Block::Labeled { label, body, .. } => {
                self.edge(*label, first_of(body, follow));
                self.walk(body, follow);
            }
            Block::Break { stmt, label: None } => {
                if let Some(t) = self.targets.last() {
                    let brk = t.brk;
                    self.edge(*stmt, brk);
                }
            }
            Block::Continue { stmt, label: None } => {
                if let Some(c) = self.targets.iter().rev().find_map(|t| t.cont) {
                    self.edge(*stmt, c);
                }
            }
            Block::Break { .. } | Block::Continue { .. } => {}
            Block::Try { body, catches, finally } => {
                let after = finally.as_ref().map(|f| first_of(f, follow)).unwrap_or(follow);
                self.walk(body, after);
                for c in catches {
                    self.walk(c, after);
                }
                if let Some(f) = finally {
                    self.walk(f, follow);
                }
            }
        }
    }

    fn in_loop(&mut self, body: &Block, body_follow: StmtId, brk: StmtId, cont: StmtId) {
        self.targets.push(Loop { brk, cont: Some(cont) });
        self.walk(body, body_follow);
        self.targets.pop();
    }
}

/// Control-flow edges of one function, entry to exit.
pub fn build_cfg(f: &FunctionDecl) -> Vec<(StmtId, StmtId)> {
    let mut b = Builder { edges: Vec::new(), exit: f.exit, targets: Vec::new() };
    b.edge(f.entry, first_of(&f.tree, f.exit));
    b.walk(&f.tree, f.exit);
    b.edges.sort();
    b.edges.dedup();
    b.edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_sources, RepoModel};

    fn cfg_of(body: &str) -> (RepoModel, Vec<(String, String)>) {
        let m = parse_sources(vec![("T.java".into(), format!("class T {{ void m(int n, boolean c) {{ {body} }} }}"))]).unwrap();
        let f = &m.functions[0];
        let name = |s: StmtId| match m.stmt(s).kind {
            crate::frontend::StmtKind::Entry => "ENTRY".to_string(),
            crate::frontend::StmtKind::Exit => "EXIT".to_string(),
            _ => m.stmt(s).text.clone(),
        };
        let mut e: Vec<_> = build_cfg(f).into_iter().map(|(a, b)| (name(a), name(b))).collect();
        e.sort();
        (m, e)
    }

    fn pairs(v: &[(&str, &str)]) -> Vec<(String, String)> {
        let mut p: Vec<_> = v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        p.sort();
        p
    }

    #[test]
    fn straight_line() {
        let (_, e) = cfg_of("n = 1; n = 2; n = 3;");
        assert_eq!(e, pairs(&[("ENTRY", "n = 1;"), ("n = 1;", "n = 2;"), ("n = 2;", "n = 3;"), ("n = 3;", "EXIT")]));
    }

    #[test]
    fn while_loop_textbook() {
        let (_, e) = cfg_of("while (c) { n = 1; } n = 2;");
        assert_eq!(
            e,
            pairs(&[("ENTRY", "while (c)"), ("while (c)", "n = 1;"), ("n = 1;", "while (c)"), ("while (c)", "n = 2;"), ("n = 2;", "EXIT")])
        );
    }

    #[test]
    fn if_without_else_and_return() {
        let (_, e) = cfg_of("if (c) { return; } n = 1;");
        assert_eq!(e, pairs(&[("ENTRY", "if (c)"), ("if (c)", "return;"), ("return;", "EXIT"), ("if (c)", "n = 1;"), ("n = 1;", "EXIT")]));
    }

    #[test]
    fn for_loop_with_unlabeled_break_and_continue() {
        let (_, e) = cfg_of("for (int i = 0; i < n; i++) { if (c) continue; break; }");
        assert_eq!(
            e,
            pairs(&[
                ("ENTRY", "int i = 0"),
                ("int i = 0", "i < n"),
                ("i < n", "if (c)"),
                ("i < n", "EXIT"),
                ("if (c)", "continue;"),
                ("if (c)", "break;"),
                ("continue;", "i++"),
                ("break;", "EXIT"),
                ("i++", "i < n"),
            ])
        );
    }

    #[test]
    fn labeled_jumps_have_no_successors() {
        let (_, e) = cfg_of("outer: while (c) { while (c) { break outer; } }");
        assert!(e.iter().all(|(a, _)| a != "break outer;"));
        assert!(e.contains(&("while (c)".to_string(), "break outer;".to_string())));
    }

    #[test]
    fn switch_fallthrough_and_default() {
        let (_, e) = cfg_of("switch (n) { case 1: n = 2; case 2: n = 3; break; default: n = 4; }");
        assert!(e.contains(&("switch (n)".into(), "n = 2;".into())));
        assert!(e.contains(&("n = 2;".into(), "n = 3;".into())));
        assert!(e.contains(&("break;".into(), "EXIT".into())));
        assert!(!e.contains(&("switch (n)".into(), "EXIT".into())));
    }

    #[test]
    fn try_finally_normal_flow() {
        let (_, e) = cfg_of("try { n = 1; } catch (Exception x) { n = 2; } finally { n = 3; }");
        assert!(e.contains(&("n = 1;".into(), "n = 3;".into())));
        assert!(!e.iter().any(|(_, b)| b == "n = 2;"));
    }
}
