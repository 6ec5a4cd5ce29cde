//! Conservative call graph by class-hierarchy analysis.

use std::collections::BTreeSet;

use super::{NodeRef, UdgEdge, UnifiedDependencyGraph};
use crate::frontend::hierarchy::self_and_subtypes;
use crate::frontend::model::{CallKind, CallSite, ClassId, FuncId, Receiver, RepoModel, StmtId};

/// Method names of the reflection API that hide their real target.
pub const REFLECTIVE_APIS: [&str; 5] = ["forName", "getMethod", "getDeclaredMethod", "invoke", "newInstance"];

/// Reflective calls that actually run the looked-up member.
pub const REFLECTIVE_INVOCATIONS: [&str; 2] = ["invoke", "newInstance"];

const REFLECTION_TYPES: [&str; 3] = ["Class", "Method", "Constructor"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallResolution {
    /// In-repo targets, sorted.
    InRepo(Vec<FuncId>),
    /// Implicit default constructor of an in-repo class: nothing to call.
    Nothing,
    External { signature: String, reflective: bool },
}

fn declared(model: &RepoModel, c: ClassId, name: &str, arity: usize) -> Vec<FuncId> {
    model
        .class(c)
        .methods
        .iter()
        .copied()
        .filter(|m| {
            let f = model.func(*m);
            f.name == name && f.params.len() == arity && !f.is_ctor && !f.is_initializer
        })
        .collect()
}

/// Methods matching `name/arity` in `c` or, failing that, its nearest supertype.
fn lookup_up(model: &RepoModel, c: ClassId, name: &str, arity: usize) -> Vec<FuncId> {
    let here = declared(model, c, name, arity);
    if !here.is_empty() {
        return here;
    }
    for s in model.hierarchy.all_supertypes(c) {
        let m = declared(model, s, name, arity);
        if !m.is_empty() {
            return m;
        }
    }
    Vec::new()
}

/// Targets of a call with static receiver type `c`: the method found from
/// `c` upwards plus, for virtual calls, every override in subtypes of `c`.
pub fn dispatch_targets(model: &RepoModel, c: ClassId, name: &str, arity: usize, virtual_call: bool) -> Vec<FuncId> {
    let base = lookup_up(model, c, name, arity);
    let mut out: BTreeSet<FuncId> = base.iter().copied().collect();
    if virtual_call {
        let subs = self_and_subtypes(&model.hierarchy, c);
        for b in &base {
            if model.func(*b).is_static {
                continue;
            }
            out.extend(model.hierarchy.overriders_of(*b).filter(|o| subs.contains(&model.func(*o).class)));
        }
        // Inherited from an external supertype: subtypes may still implement it.
        for s in subs.iter().filter(|_| base.is_empty()) {
            out.extend(declared(model, *s, name, arity).into_iter().filter(|m| !model.func(*m).is_static));
        }
    }
    out.into_iter().filter(|f| !model.func(*f).is_abstract).collect()
}

fn ctors(model: &RepoModel, c: ClassId, arity: usize) -> (bool, Vec<FuncId>) {
    let all: Vec<FuncId> = model.class(c).methods.iter().copied().filter(|m| model.func(*m).is_ctor).collect();
    let matching = all.iter().copied().filter(|m| model.func(*m).params.len() == arity).collect();
    (all.is_empty(), matching)
}

fn external_signature(owner: &str, name: &str, arity: usize) -> String {
    format!("{owner}.{name}/{arity}")
}

fn is_reflective(call: &CallSite) -> bool {
    if !REFLECTIVE_APIS.contains(&call.name.as_str()) {
        return false;
    }
    match &call.receiver {
        Receiver::Static(t) | Receiver::Value(Some(t)) => {
            let simple = t.rsplit('.').next().unwrap_or(t);
            let simple = simple.split('<').next().unwrap_or(simple);
            REFLECTION_TYPES.contains(&simple)
        }
        Receiver::Value(None) => true,
        _ => false,
    }
}

/// Resolves call site `call` of statement `stmt`.
pub fn resolve_call(model: &RepoModel, stmt: StmtId, call: &CallSite) -> CallResolution {
    let arity = call.args.len();
    let from_fn = model.owner_func(stmt);
    let from_class = from_fn.map(|f| model.func(f).class);
    let file = model.stmt(stmt).file;
    let targets: Option<Vec<FuncId>> = match (&call.kind, &call.receiver) {
        (CallKind::Constructor, Receiver::Static(t)) => match model.resolve_type(t, file) {
            Some(c) => {
                let (none_declared, m) = ctors(model, c, arity);
                if m.is_empty() && none_declared {
                    return CallResolution::Nothing;
                }
                Some(m)
            }
            None => None,
        },
        (CallKind::Delegating, r) => {
            let target_class = match (r, from_class) {
                (Receiver::Super, Some(c)) => model.hierarchy.supers(c).find(|s| !model.class(*s).is_interface),
                (_, c) => c,
            };
            match target_class {
                Some(c) => {
                    let (none_declared, m) = ctors(model, c, arity);
                    if m.is_empty() && none_declared {
                        return CallResolution::Nothing;
                    }
                    Some(m)
                }
                None => None,
            }
        }
        (_, Receiver::Static(t)) => model.resolve_type(t, file).map(|c| dispatch_targets(model, c, &call.name, arity, false)),
        (_, Receiver::Value(Some(t))) => model.resolve_type(t, file).map(|c| dispatch_targets(model, c, &call.name, arity, true)),
        (_, Receiver::Value(None)) => None,
        (_, Receiver::Super) => from_class.and_then(|c| {
            model.hierarchy.supers(c).map(|s| dispatch_targets(model, s, &call.name, arity, false)).find(|t| !t.is_empty())
        }),
        (_, Receiver::This) => from_class.map(|c| dispatch_targets(model, c, &call.name, arity, true)),
        (_, Receiver::Implicit) => {
            let mut cur = from_class;
            let mut found = None;
            while let Some(c) = cur {
                let base = lookup_up(model, c, &call.name, arity);
                if !base.is_empty() {
                    let virt = base.iter().any(|b| !model.func(*b).is_static);
                    found = Some(dispatch_targets(model, c, &call.name, arity, virt));
                    break;
                }
                cur = model.class(c).outer;
            }
            found
        }
    };
    match targets {
        Some(t) if !t.is_empty() => CallResolution::InRepo(t),
        _ => {
            let owner = match (&call.kind, &call.receiver) {
                (CallKind::Constructor, Receiver::Static(t)) => return CallResolution::External { signature: external_signature(t, "<init>", arity), reflective: false },
                (CallKind::Delegating, _) => return CallResolution::External { signature: external_signature(&call.name, "<init>", arity), reflective: false },
                (_, Receiver::Static(t)) | (_, Receiver::Value(Some(t))) => t.clone(),
                (_, Receiver::Implicit) | (_, Receiver::This) | (_, Receiver::Super) => from_class.map(|c| model.class(c).name.clone()).unwrap_or_else(|| "?".into()),
                _ => "?".into(),
            };
            CallResolution::External { signature: external_signature(&owner, &call.name, arity), reflective: is_reflective(call) }
        }
    }
}

/// Adds call edges for every call site of every function statement.
pub fn build_call_graph(model: &RepoModel, g: &mut UnifiedDependencyGraph) {
    for f in &model.functions {
        for &s in &f.body {
            for (i, call) in model.stmt(s).calls.iter().enumerate() {
                match resolve_call(model, s, call) {
                    CallResolution::InRepo(ts) => {
                        for t in ts {
                            g.add_edge(UdgEdge::call(s, NodeRef::Stmt(model.func(t).entry), i));
                        }
                    }
                    CallResolution::Nothing => {}
                    CallResolution::External { signature, reflective } => {
                        let n = g.external(&signature, reflective);
                        g.add_edge(UdgEdge::call(s, n, i));
                    }
                }
            }
        }
    }
}
