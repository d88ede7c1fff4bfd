use super::*;
use thiserror::Error;

/// A model element reached by a dotted path.
#[derive(Debug, Clone, Copy)]
pub enum Element<'a> {
    Project(&'a Project),
    Component(&'a ComponentType),
    Cluster(&'a Cluster),
    Enum(&'a EnumDecl),
    Port(&'a str, &'a Port),
    Block(&'a str, &'a Block),
    Mode(&'a str, &'a Mode),
    State(&'a str, &'a str),
    Var(&'a str, &'a VarDecl),
}

impl Element<'_> {
    /// Canonical identity of the element.
    pub fn key(&self) -> String {
        match self {
            Element::Project(_) => String::new(),
            Element::Component(c) => c.name.clone(),
            Element::Cluster(c) => c.name.clone(),
            Element::Enum(e) => format!("enum:{}", e.name),
            Element::Port(owner, p) => format!("{owner}.{}", p.name),
            Element::Block(owner, b) => format!("{owner}/{}", b.name),
            Element::Mode(owner, m) => format!("{owner}/mode:{}", m.name),
            Element::State(owner, s) => format!("{owner}/state:{s}"),
            Element::Var(owner, v) => format!("{owner}/var:{}", v.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("no element at path '{0}'")]
    NotFound(String),
    #[error("path '{0}' is ambiguous: {1:?}")]
    Ambiguous(String, Vec<String>),
}

/// Resolves a dotted path such as `EngineCtl.ThrottleRateOfChange`.
///
/// A leading segment naming the project itself is optional. Segments after
/// a component name select its ports, blocks, modes, states or variables;
/// a block segment followed by more segments descends into the block's
/// component type.
pub fn resolve<'a>(project: &'a Project, path: &str) -> Result<Element<'a>, ResolveError> {
    let path = path.trim();
    if path.is_empty() {
        return Ok(Element::Project(project));
    }
    let segs: Vec<&str> = path.split('.').collect();
    let mut found: Vec<Element<'a>> = Vec::new();
    walk(project, Element::Project(project), &segs, &mut found);
    let mut keys: Vec<String> = found.iter().map(Element::key).collect();
    keys.sort();
    keys.dedup();
    match keys.len() {
        0 => Err(ResolveError::NotFound(path.to_string())),
        1 => Ok(found.swap_remove(0)),
        _ => Err(ResolveError::Ambiguous(path.to_string(), keys)),
    }
}

fn walk<'a>(p: &'a Project, at: Element<'a>, segs: &[&str], out: &mut Vec<Element<'a>>) {
    let Some((head, rest)) = segs.split_first() else {
        out.push(at);
        return;
    };
    for next in children(p, at, head) {
        walk(p, next, rest, out);
    }
}

fn children<'a>(p: &'a Project, at: Element<'a>, name: &str) -> Vec<Element<'a>> {
    let mut out = Vec::new();
    match at {
        Element::Project(_) => {
            if p.name == name {
                out.push(Element::Project(p));
            }
            if let Some(c) = p.component(name) {
                out.push(Element::Component(c));
            }
            if let Some(c) = p.cluster(name) {
                out.push(Element::Cluster(c));
            }
            if let Some(e) = p.enum_decl(name) {
                out.push(Element::Enum(e));
            }
        }
        Element::Component(c) => {
            if let Some(port) = c.port(name) {
                out.push(Element::Port(&c.name, port));
            }
            match &c.def {
                Definition::Ssd(n) | Definition::Dfd(n) => {
                    if let Some(b) = n.block(name) {
                        out.push(Element::Block(&c.name, b));
                    }
                }
                Definition::Mtd(m) => {
                    if let Some(mode) = m.modes.iter().find(|m| m.name == name) {
                        out.push(Element::Mode(&c.name, mode));
                    }
                }
                Definition::Std(s) => {
                    if let Some(st) = s.states.iter().find(|s| *s == name) {
                        out.push(Element::State(&c.name, st));
                    }
                    if let Some(v) = s.vars.iter().find(|v| v.name == name) {
                        out.push(Element::Var(&c.name, v));
                    }
                }
                _ => {}
            }
        }
        Element::Cluster(cl) => {
            if let Some(port) = cl.port(name) {
                out.push(Element::Port(&cl.name, port));
            }
            if let Some(b) = p.component(&cl.behavior) {
                out.extend(children(p, Element::Component(b), name));
            }
        }
        Element::Block(_, b) => {
            if let BlockKind::Instance { of, .. } = &b.kind {
                if let Some(c) = p.component(of) {
                    out.extend(children(p, Element::Component(c), name));
                } else if let Some(c) = p.cluster(of) {
                    out.extend(children(p, Element::Cluster(c), name));
                }
            }
        }
        Element::Mode(_, m) => {
            if let Some(c) = p.component(&m.behavior) {
                out.extend(children(p, Element::Component(c), name));
            }
        }
        Element::Enum(_) | Element::Port(..) | Element::State(..) | Element::Var(..) => {}
    }
    out
}
