//! Global statements as explicit nodes, linked only among themselves.

use super::{add_logged, Audit, Pass};
use crate::frontend::{GlobalDecl, RepoModel, StmtKind};
use crate::udg::{NodeRef, UdgEdge, UnifiedDependencyGraph};

/// Field definition that a right-hand-side name refers to. `Type.F`
/// resolves `Type` first; a bare name searches the declaring class.
pub fn resolve_global_use<'m>(model: &'m RepoModel, g: &GlobalDecl, var: &str) -> Option<&'m GlobalDecl> {
    match var.rsplit_once('.') {
        Some((ty, field)) => {
            let file = model.stmt(g.statement).file;
            let c = model.resolve_type(ty, file)?;
            model.find_field(field, Some(c))
        }
        None => model.find_field(var, g.class),
    }
}

pub fn add_global_nodes(model: &RepoModel, g: &mut UnifiedDependencyGraph, audit: &mut Audit) {
    for gd in &model.globals {
        g.nodes.insert(NodeRef::Stmt(gd.statement));
    }
    for gd in model.globals.iter().filter(|x| x.kind == StmtKind::GlobalDef) {
        for v in &gd.rhs_uses {
            let Some(def) = resolve_global_use(model, gd, v) else { continue };
            if def.statement != gd.statement {
                add_logged(g, UdgEdge::dd(def.statement, gd.statement, v).added(), audit, Pass::Globals);
            }
        }
    }
}
