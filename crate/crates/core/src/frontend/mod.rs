//! Textual syntax: parsing `.amd` files into projects, canonical
//! serialization and communication-matrix import.

mod commmatrix;
mod lexer;
mod parser;
mod serialize;

pub use commmatrix::{import_comm_matrix, parse_comm_matrix, CommMatrixRow, ImportError};
pub use parser::{decimal_ratio, parse_clock, parse_expr, parse_type, SyntaxError};
pub use serialize::{serialize, InvalidModel};

use crate::diag::{code, Diagnostic};
use crate::model::*;
use parser::{parse_items, Item, Located};
use std::collections::{BTreeSet, HashMap};
use std::path::{Component, Path, PathBuf};

/// One model file. Line and column positions are recomputed by the lexer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        SourceFile { path: path.into(), text: text.into() }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(SourceFile { path: path.to_string_lossy().into_owned(), text: std::fs::read_to_string(path)? })
    }
}

/// Parses a single text buffer. Includes are looked up on disk relative to
/// the working directory.
pub fn parse_str(text: &str) -> Result<Project, Vec<Diagnostic>> {
    parse(&[SourceFile::new("<input>", text)])
}

/// Parses a set of files into one project and validates it.
///
/// Includes are resolved relative to the including file, first against the
/// given files and then against the file system. Each file is read once.
pub fn parse(files: &[SourceFile]) -> Result<Project, Vec<Diagnostic>> {
    let given: HashMap<PathBuf, &SourceFile> = files.iter().map(|f| (normalize(Path::new(&f.path)), f)).collect();
    let mut seen: BTreeSet<PathBuf> = BTreeSet::new();
    let mut queue: Vec<SourceFile> = files.to_vec();
    queue.reverse();
    let mut parsed: Vec<(String, Vec<Located>)> = Vec::new();
    let mut diags = Vec::new();
    while let Some(file) = queue.pop() {
        let key = normalize(Path::new(&file.path));
        if !seen.insert(key.clone()) {
            continue;
        }
        let items = match parse_items(&file.text) {
            Ok(items) => items,
            Err(e) => {
                diags.push(Diagnostic::error(code::SYNTAX, format!("{}:{}:{}", file.path, e.line, e.col), e.message));
                continue;
            }
        };
        let dir = key.parent().map(Path::to_path_buf).unwrap_or_default();
        for (line, item) in &items {
            let Item::Include(target) = item else { continue };
            let path = normalize(&dir.join(target));
            if seen.contains(&path) {
                continue;
            }
            if let Some(f) = given.get(&path) {
                queue.push((*f).clone());
            } else {
                match SourceFile::load(&path) {
                    Ok(f) => queue.push(f),
                    Err(err) => diags.push(Diagnostic::error(
                        code::INCLUDE,
                        format!("{}:{line}", file.path),
                        format!("cannot include '{target}': {err}"),
                    )),
                }
            }
        }
        parsed.push((file.path.clone(), items));
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let mut project = merge(&parsed, &mut diags);
    if !diags.is_empty() {
        return Err(diags);
    }
    resolve_labels(&mut project);
    let errors: Vec<Diagnostic> = validate(&project).into_iter().filter(Diagnostic::is_error).collect();
    if errors.is_empty() {
        Ok(project)
    } else {
        Err(errors)
    }
}

/// Lexical path normalization without touching the file system.
fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

fn merge(files: &[(String, Vec<Located>)], diags: &mut Vec<Diagnostic>) -> Project {
    let mut p = Project::default();
    let mut header: HashMap<&'static str, (String, String)> = HashMap::new();
    let mut names: HashMap<(&'static str, String), String> = HashMap::new();
    let mut tech = TechArch::default();
    let mut dep = Deployment::default();
    for (path, items) in files {
        for (line, item) in items {
            let at = format!("{path}:{line}");
            let mut set_header = |key: &'static str, value: String, diags: &mut Vec<Diagnostic>| -> bool {
                match header.get(key) {
                    Some((prev, where_)) if *prev != value => {
                        diags.push(Diagnostic::error(
                            code::DUPLICATE_DEF,
                            &at,
                            format!("{key} already declared as '{prev}' at {where_}"),
                        ));
                        false
                    }
                    Some(_) => false,
                    None => {
                        header.insert(key, (value, at.clone()));
                        true
                    }
                }
            };
            let mut fresh = |kind: &'static str, name: &str, diags: &mut Vec<Diagnostic>| -> bool {
                // Components and clusters share one namespace.
                let ns = if kind == "cluster" { "component" } else { kind };
                match names.get(&(ns, name.to_string())) {
                    Some(prev) => {
                        diags.push(Diagnostic::error(
                            code::DUPLICATE_DEF,
                            &at,
                            format!("{kind} '{name}' already defined at {prev}"),
                        ));
                        false
                    }
                    None => {
                        names.insert((ns, name.to_string()), at.clone());
                        true
                    }
                }
            };
            match item {
                Item::Project(n) => {
                    if set_header("project", n.clone(), diags) {
                        p.name = n.clone();
                    }
                }
                Item::Level(l) => {
                    if set_header("level", l.keyword().into(), diags) {
                        p.level = *l;
                    }
                }
                Item::BaseTick(t) => {
                    if set_header("base_tick", t.to_string(), diags) {
                        p.base_tick_ms = *t;
                    }
                }
                Item::System(s) => {
                    if set_header("system", s.clone(), diags) {
                        p.system = Some(s.clone());
                    }
                }
                Item::Include(_) => {}
                Item::Enum(e) => {
                    if fresh("enum", &e.name, diags) {
                        p.enums.push(e.clone());
                    }
                }
                Item::Component(c) => {
                    if fresh("component", &c.name, diags) {
                        p.components.push(c.clone());
                    }
                }
                Item::Cluster(c) => {
                    if fresh("cluster", &c.name, diags) {
                        p.clusters.push(c.clone());
                    }
                }
                Item::Ecu(e) => {
                    if fresh("ecu", e, diags) {
                        tech.ecus.push(e.clone());
                    }
                }
                Item::Bus(b) => {
                    if fresh("bus", &b.name, diags) {
                        tech.buses.push(b.clone());
                    }
                }
                Item::Task(t) => {
                    if fresh("task", &t.name, diags) {
                        tech.tasks.push(t.clone());
                    }
                }
                Item::Frame(f) => {
                    if fresh("frame", &f.name, diags) {
                        tech.frames.push(f.clone());
                    }
                }
                Item::Deploy(c, t) => dep.cluster_to_task.push((c.clone(), t.clone())),
                Item::Signal(s) => dep.signal_to_frame.push(s.clone()),
            }
        }
    }
    if tech != TechArch::default() {
        p.tech = Some(tech);
    }
    if dep != Deployment::default() {
        p.deployment = Some(dep);
    }
    p
}

/// Turns bare identifiers that name enum labels into label literals, unless
/// a port or variable of the same name is in scope.
fn resolve_labels(p: &mut Project) {
    let labels: BTreeSet<String> = p.enums.iter().flat_map(|e| e.labels.iter().cloned()).collect();
    if labels.is_empty() {
        return;
    }
    for c in &mut p.components {
        let mut scope: BTreeSet<String> = c.ports.iter().map(|p| p.name.clone()).collect();
        if let Definition::Std(s) = &c.def {
            scope.extend(s.vars.iter().map(|v| v.name.clone()));
        }
        let fix = |e: &mut Expr| relabel(e, &labels, &scope);
        match &mut c.def {
            Definition::Function(assigns) => assigns.iter_mut().for_each(|a| fix(&mut a.expr)),
            Definition::Mtd(m) => m.transitions.iter_mut().for_each(|t| fix(&mut t.guard)),
            Definition::Std(s) => {
                for t in &mut s.transitions {
                    fix(&mut t.guard);
                    t.actions.iter_mut().for_each(|a| fix(&mut a.expr));
                }
            }
            _ => {}
        }
    }
}

fn relabel(e: &mut Expr, labels: &BTreeSet<String>, scope: &BTreeSet<String>) {
    match e {
        Expr::Var(v) if labels.contains(v.as_str()) && !scope.contains(v.as_str()) => {
            *e = Expr::Lit(Literal::Label(std::mem::take(v)));
        }
        Expr::Unary(_, a) => relabel(a, labels, scope),
        Expr::Binary(_, a, b) => {
            relabel(a, labels, scope);
            relabel(b, labels, scope);
        }
        Expr::If(c, a, b) => {
            relabel(c, labels, scope);
            relabel(a, labels, scope);
            relabel(b, labels, scope);
        }
        Expr::Call(_, args) => args.iter_mut().for_each(|a| relabel(a, labels, scope)),
        Expr::Lit(_) | Expr::Var(_) | Expr::Present(_) => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_empty_project() {
        let p = parse_str("").unwrap();
        assert_eq!(p, Project::default());
    }

    #[test]
    fn function_component() {
        let p = parse_str(
            "component ADD {\n in ch1 : int; in ch2 : int; in ch3 : int; out sum : int;\n function { sum = ch1 + ch2 + ch3; }\n}",
        )
        .unwrap();
        let c = p.component("ADD").unwrap();
        let Definition::Function(a) = &c.def else { panic!("not a function") };
        assert_eq!(a[0].expr.to_string(), "ch1 + ch2 + ch3");
    }

    #[test]
    fn unbalanced_braces_single_diagnostic() {
        let d = parse_str("component A {\n in x : int;\n function { \n").unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, code::SYNTAX);
        assert!(d[0].path.starts_with("<input>:4:"), "{}", d[0].path);
    }

    #[test]
    fn duplicate_across_files() {
        let a = SourceFile::new("m/a.amd", "include \"b.amd\";\ncomponent X { in i; }");
        let b = SourceFile::new("m/b.amd", "component X { in j; }");
        let d = parse(&[a, b]).unwrap_err();
        assert_eq!(d[0].code, code::DUPLICATE_DEF);
    }

    #[test]
    fn include_resolved_and_deduplicated() {
        let a = SourceFile::new("m/a.amd", "level FAA; include \"./b.amd\";\ncomponent X { in i; }");
        let b = SourceFile::new("m/b.amd", "include \"a.amd\"; component Y { out o; }");
        let p = parse(&[a, b]).unwrap();
        assert_eq!(p.components.len(), 2);
    }

    #[test]
    fn unresolved_include() {
        let d = parse_str("include \"does/not/exist.amd\";").unwrap_err();
        assert_eq!(d[0].code, code::INCLUDE);
    }

    #[test]
    fn enum_labels_become_literals() {
        let p = parse_str(
            "enum G { Lo, Hi }\ncomponent F { in x : int; out g : G; function { g = if x > 3 then Hi else Lo; } }",
        )
        .unwrap();
        let Definition::Function(a) = &p.component("F").unwrap().def else { unreachable!() };
        assert!(matches!(&a[0].expr, Expr::If(_, t, _) if **t == Expr::Lit(Literal::Label("Hi".into()))));
    }
}
