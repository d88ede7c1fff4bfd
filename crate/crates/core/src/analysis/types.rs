//! Monomorphic type inference by unification.
//!
//! Every component port has one type slot shared by all instances of the
//! component. Builtin blocks get fresh slots. Channels, function bodies and
//! mode behaviors add equality constraints; numeric literals default to
//! `int` (or `real` for decimal literals) when nothing else fixes them.

use super::{frame_network, FlowKey};
use crate::diag::{code, Diagnostic};
use crate::model::*;
use std::collections::BTreeMap;

/// Inferred type of every flow, keyed by (owner frame, flow).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TypeEnv {
    pub flows: BTreeMap<FlowKey, DataType>,
}

impl TypeEnv {
    pub fn get(&self, owner: &str, flow: &Endpoint) -> Option<&DataType> {
        self.flows.get(&(owner.to_string(), flow.clone()))
    }

    pub fn port(&self, owner: &str, port: &str) -> Option<&DataType> {
        self.get(owner, &Endpoint::port(port))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Lit {
    None,
    Int,
    Real,
}

#[derive(Debug, Clone)]
struct Class {
    ty: Option<DataType>,
    lit: Lit,
    numeric: bool,
    /// Contains a port of an unspecified component; may stay untyped.
    opaque: bool,
}

impl Class {
    fn new() -> Self {
        Class { ty: None, lit: Lit::None, numeric: false, opaque: false }
    }

    fn resolved(&self) -> Option<DataType> {
        self.ty.clone().or(match self.lit {
            Lit::Int => Some(DataType::Int),
            Lit::Real => Some(DataType::Real),
            Lit::None => None,
        })
    }
}

fn is_fixed(t: &DataType) -> bool {
    matches!(t, DataType::Impl(ImplType::Fixed { .. }))
}

/// Whether a concrete type satisfies the class's pending constraints.
fn admits(c: &Class, t: &DataType) -> bool {
    let numeric_ok = !(c.numeric || c.lit != Lit::None) || t.is_numeric();
    let real_ok = c.lit != Lit::Real || *t == DataType::Real || is_fixed(t);
    numeric_ok && real_ok
}

fn describe(c: &Class) -> String {
    match (&c.ty, c.lit) {
        (Some(t), _) => t.to_string(),
        (None, Lit::Real) => "real literal".into(),
        (None, Lit::Int) => "numeric literal".into(),
        (None, Lit::None) if c.numeric => "numeric value".into(),
        _ => "unknown".into(),
    }
}

struct Checker<'p> {
    p: &'p Project,
    parent: Vec<usize>,
    classes: Vec<Class>,
    slots: BTreeMap<FlowKey, usize>,
    deferred: Vec<(usize, usize, String)>,
    diags: Vec<Diagnostic>,
}

impl<'p> Checker<'p> {
    fn fresh(&mut self, c: Class) -> usize {
        self.parent.push(self.parent.len());
        self.classes.push(c);
        self.parent.len() - 1
    }

    fn concrete(&mut self, t: DataType) -> usize {
        self.fresh(Class { ty: Some(t), ..Class::new() })
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn class(&mut self, i: usize) -> &Class {
        let r = self.find(i);
        &self.classes[r]
    }

    fn mismatch(&mut self, site: &str, a: &Class, b: &Class) {
        self.diags.push(Diagnostic::error(
            code::TYPE_MISMATCH,
            site,
            format!("conflicting types {} and {}", describe(a), describe(b)),
        ));
    }

    fn unify(&mut self, a: usize, b: usize, site: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (ca, cb) = (self.classes[ra].clone(), self.classes[rb].clone());
        let merged = Class {
            ty: ca.ty.clone().or(cb.ty.clone()),
            lit: ca.lit.max(cb.lit),
            numeric: ca.numeric || cb.numeric,
            opaque: ca.opaque || cb.opaque,
        };
        let ok = match (&ca.ty, &cb.ty) {
            (Some(x), Some(y)) => x == y,
            (Some(t), None) => admits(&cb, t),
            (None, Some(t)) => admits(&ca, t),
            (None, None) => true,
        };
        if !ok {
            self.mismatch(site, &ca, &cb);
            return;
        }
        self.parent[rb] = ra;
        self.classes[ra] = merged;
    }

    fn require_numeric(&mut self, i: usize, site: &str) {
        let r = self.find(i);
        match &self.classes[r].ty {
            Some(t) if !t.is_numeric() => {
                let c = self.classes[r].clone();
                let want = Class { numeric: true, ..Class::new() };
                self.mismatch(site, &c, &want);
            }
            _ => self.classes[r].numeric = true,
        }
    }

    fn require(&mut self, i: usize, t: DataType, site: &str) {
        let j = self.concrete(t);
        self.unify(i, j, site);
    }

    /// Slot of a flow inside `owner`'s frame.
    fn slot(&mut self, owner: &str, flow: &Endpoint) -> usize {
        if let Endpoint::Block(b, port) = flow {
            let target =
                frame_network(self.p, owner).and_then(|n| n.block(b).cloned()).and_then(|blk| match blk.kind {
                    BlockKind::Instance { of, .. } => Some(of),
                    _ => None,
                });
            if let Some(of) = target {
                return self.slot(&of, &Endpoint::port(port.clone()));
            }
        }
        let key = (owner.to_string(), flow.clone());
        if let Some(&i) = self.slots.get(&key) {
            return i;
        }
        let i = self.fresh(Class::new());
        self.slots.insert(key, i);
        i
    }

    fn literal(&mut self, l: &Literal, site: &str) -> usize {
        match l {
            Literal::Bool(_) => self.concrete(DataType::Bool),
            Literal::Int(_) => self.fresh(Class { lit: Lit::Int, ..Class::new() }),
            Literal::Real(_) => self.fresh(Class { lit: Lit::Real, ..Class::new() }),
            Literal::Label(name) => match self.p.enum_of_label(name) {
                Some(e) => self.concrete(DataType::Enum(e.name.clone())),
                None => {
                    self.diags.push(Diagnostic::error(
                        code::TYPE_UNKNOWN_NAME,
                        site,
                        format!("'{name}' is not a label of exactly one enum"),
                    ));
                    self.fresh(Class::new())
                }
            },
        }
    }

    fn expr(&mut self, e: &Expr, scope: &BTreeMap<String, usize>, site: &str) -> usize {
        match e {
            Expr::Lit(l) => self.literal(l, site),
            Expr::Var(n) => match scope.get(n) {
                Some(&i) => i,
                None => {
                    self.diags.push(Diagnostic::error(code::TYPE_UNKNOWN_NAME, site, format!("unknown name '{n}'")));
                    self.fresh(Class::new())
                }
            },
            Expr::Present(n) => {
                if !scope.contains_key(n) {
                    self.diags.push(Diagnostic::error(code::TYPE_UNKNOWN_NAME, site, format!("unknown name '{n}'")));
                }
                self.concrete(DataType::Bool)
            }
            Expr::Unary(UnOp::Neg, a) => {
                let a = self.expr(a, scope, site);
                self.require_numeric(a, site);
                a
            }
            Expr::Unary(UnOp::Not, a) => {
                let a = self.expr(a, scope, site);
                self.require(a, DataType::Bool, site);
                a
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (self.expr(a, scope, site), self.expr(b, scope, site));
                match op {
                    BinOp::And | BinOp::Or => {
                        self.require(a, DataType::Bool, site);
                        self.require(b, DataType::Bool, site);
                        a
                    }
                    BinOp::Eq | BinOp::Ne => {
                        self.unify(a, b, site);
                        self.concrete(DataType::Bool)
                    }
                    _ => {
                        self.unify(a, b, site);
                        self.require_numeric(a, site);
                        if op.is_comparison() {
                            self.concrete(DataType::Bool)
                        } else {
                            a
                        }
                    }
                }
            }
            Expr::If(c, a, b) => {
                let c = self.expr(c, scope, site);
                self.require(c, DataType::Bool, site);
                let (a, b) = (self.expr(a, scope, site), self.expr(b, scope, site));
                self.unify(a, b, site);
                a
            }
            Expr::Call(f, args) => {
                let ids: Vec<usize> = args.iter().map(|a| self.expr(a, scope, site)).collect();
                for w in ids.windows(2) {
                    self.unify(w[0], w[1], site);
                }
                self.require_numeric(ids[0], site);
                let _ = f;
                ids[0]
            }
        }
    }

    fn port_scope(&mut self, owner: &str, ports: &[Port]) -> BTreeMap<String, usize> {
        ports.iter().map(|p| (p.name.clone(), self.slot(owner, &Endpoint::port(p.name.clone())))).collect()
    }

    fn clock_refs(&mut self, owner: &str, c: &ClockExpr, site: &str) {
        let mut modes = Vec::new();
        collect_modes(c, &mut modes);
        for (flow, label) in modes {
            let l = self.literal(&Literal::Label(label), site);
            let s = self.slot(owner, &flow);
            self.unify(s, l, site);
        }
    }

    fn declare_ports(&mut self, owner: &str, ports: &[Port]) {
        for port in ports {
            let s = self.slot(owner, &Endpoint::port(port.name.clone()));
            if let Some(t) = &port.ty {
                self.require(s, t.clone(), &format!("{owner}.{}", port.name));
            }
            if let Some(c) = &port.clock {
                self.clock_refs(owner, c, &format!("{owner}.{}", port.name));
            }
        }
    }

    fn network(&mut self, owner: &str, net: &Network) {
        for b in &net.blocks {
            let site = format!("{owner}/{}", b.name);
            let x = |me: &mut Self, port: &str| me.slot(owner, &Endpoint::block(b.name.clone(), port));
            match &b.kind {
                BlockKind::Instance { gate, .. } => {
                    if let Some(g) = gate {
                        self.clock_refs(owner, g, &site);
                    }
                }
                BlockKind::When(c) => {
                    let (i, o) = (x(self, "x"), x(self, "y"));
                    self.unify(i, o, &site);
                    self.clock_refs(owner, c, &site);
                }
                BlockKind::Delay { init, clock } => {
                    let (i, o) = (x(self, "x"), x(self, "y"));
                    self.unify(i, o, &site);
                    if let Some(l) = init {
                        let l = self.literal(l, &site);
                        self.unify(i, l, &site);
                    }
                    if let Some(c) = clock {
                        self.clock_refs(owner, c, &site);
                    }
                }
                BlockKind::Hold { init } => {
                    let (i, o) = (x(self, "x"), x(self, "y"));
                    self.unify(i, o, &site);
                    let l = self.literal(init, &site);
                    self.unify(i, l, &site);
                }
                BlockKind::Merge(n) => {
                    let o = x(self, "y");
                    for k in 1..=*n {
                        let i = x(self, &format!("x{k}"));
                        self.unify(i, o, &site);
                    }
                }
            }
        }
        for (k, ch) in net.channels.iter().enumerate() {
            let site = format!("{owner}/channel#{k}");
            let src = self.slot(owner, &ch.source);
            for s in &ch.sinks {
                let d = self.slot(owner, s);
                self.unify(src, d, &format!("{site} ({} -> {s})", ch.source));
            }
            let init = match &ch.kind {
                ChannelKind::SsdDelayed { init: Some(l) } | ChannelKind::Delay { init: l } => Some(l),
                _ => None,
            };
            if let Some(l) = init {
                let l = self.literal(l, &site);
                self.unify(src, l, &site);
            }
            if let Some(c) = &ch.clock {
                self.clock_refs(owner, c, &site);
            }
        }
    }

    fn component(&mut self, c: &ComponentType) {
        match &c.def {
            Definition::Unspecified => {
                for port in &c.ports {
                    let s = self.slot(&c.name, &Endpoint::port(port.name.clone()));
                    let r = self.find(s);
                    self.classes[r].opaque = true;
                }
            }
            Definition::Function(assigns) => {
                let scope = self.port_scope(&c.name, &c.ports);
                for a in assigns {
                    let site = format!("{}.{}", c.name, a.target);
                    let e = self.expr(&a.expr, &scope, &site);
                    if let Some(&t) = scope.get(&a.target) {
                        self.deferred.push((e, t, site));
                    }
                }
            }
            Definition::Ssd(n) | Definition::Dfd(n) => self.network(&c.name, n),
            Definition::Mtd(m) => {
                let scope = self.port_scope(&c.name, &c.ports);
                for (k, t) in m.transitions.iter().enumerate() {
                    let site = format!("{}/transition#{k}", c.name);
                    let g = self.expr(&t.guard, &scope, &site);
                    self.require(g, DataType::Bool, &site);
                }
                for mode in &m.modes {
                    let Some(sig) = self.p.signature(&mode.behavior) else { continue };
                    for port in sig {
                        if let Some(&outer) = scope.get(&port.name) {
                            let inner = self.slot(&mode.behavior, &Endpoint::port(port.name.clone()));
                            self.unify(outer, inner, &format!("{}/mode:{}", c.name, mode.name));
                        }
                    }
                }
            }
            Definition::Std(s) => {
                let mut scope = self.port_scope(&c.name, &c.ports);
                for v in &s.vars {
                    let site = format!("{}.{}", c.name, v.name);
                    let slot = self.concrete(v.ty.clone());
                    let l = self.literal(&v.init, &site);
                    self.unify(slot, l, &site);
                    scope.insert(v.name.clone(), slot);
                }
                for (k, t) in s.transitions.iter().enumerate() {
                    let site = format!("{}/transition#{k}", c.name);
                    let g = self.expr(&t.guard, &scope, &site);
                    self.require(g, DataType::Bool, &site);
                    for a in &t.actions {
                        let e = self.expr(&a.expr, &scope, &site);
                        if let Some(&target) = scope.get(&a.target) {
                            self.deferred.push((e, target, site.clone()));
                        }
                    }
                }
            }
        }
    }

    /// Every flow of the project in canonical order.
    fn all_flows(&self) -> Vec<FlowKey> {
        let mut out = Vec::new();
        let owners = self
            .p
            .components
            .iter()
            .map(|c| (c.name.as_str(), c.ports.as_slice()))
            .chain(self.p.clusters.iter().map(|c| (c.name.as_str(), c.ports.as_slice())));
        for (owner, ports) in owners {
            for port in ports {
                out.push((owner.to_string(), Endpoint::port(port.name.clone())));
            }
            if let Some(net) = frame_network(self.p, owner) {
                for b in &net.blocks {
                    if let Some((ins, outs)) = self.p.block_ports(b) {
                        for port in ins.into_iter().chain(outs) {
                            out.push((owner.to_string(), Endpoint::block(b.name.clone(), port)));
                        }
                    }
                }
            }
        }
        out
    }
}

fn collect_modes(c: &ClockExpr, out: &mut Vec<(Endpoint, String)>) {
    match c {
        ClockExpr::Mode(f, l) => out.push((f.clone(), l.clone())),
        ClockExpr::Every(_, c) | ClockExpr::Not(c) => collect_modes(c, out),
        ClockExpr::And(cs) | ClockExpr::Or(cs) => cs.iter().for_each(|c| collect_modes(c, out)),
        ClockExpr::Base | ClockExpr::Present(_) => {}
    }
}

/// Infers a type for every flow. Expects a structurally valid project.
pub fn typecheck(p: &Project) -> Result<TypeEnv, Vec<Diagnostic>> {
    let mut ck = Checker {
        p,
        parent: Vec::new(),
        classes: Vec::new(),
        slots: BTreeMap::new(),
        deferred: Vec::new(),
        diags: Vec::new(),
    };
    for c in &p.components {
        ck.declare_ports(&c.name, &c.ports);
    }
    for cl in &p.clusters {
        ck.declare_ports(&cl.name, &cl.ports);
    }
    for c in &p.components {
        ck.component(c);
    }
    for cl in &p.clusters {
        ck.network(&cl.name, &cl.wrapper_network());
    }
    // Assignments may convert between numeric types when an implementation
    // type is involved; the value is requantized at the target.
    for (e, t, site) in std::mem::take(&mut ck.deferred) {
        let (te, tt) = (ck.class(e).ty.clone(), ck.class(t).ty.clone());
        let converts = match (&te, &tt) {
            (Some(a), Some(b)) => {
                a.is_numeric() && b.is_numeric() && (matches!(a, DataType::Impl(_)) || matches!(b, DataType::Impl(_)))
            }
            _ => false,
        };
        if !converts {
            ck.unify(e, t, &site);
        }
    }
    let mut env = TypeEnv::default();
    let mut reported = std::collections::BTreeSet::new();
    for key in ck.all_flows() {
        let s = ck.slot(&key.0, &key.1);
        let r = ck.find(s);
        let class = ck.classes[r].clone();
        match class.resolved() {
            Some(t) => {
                env.flows.insert(key, t);
            }
            None if class.opaque => {}
            None => {
                if reported.insert(r) {
                    ck.diags.push(Diagnostic::error(
                        code::TYPE_UNCONSTRAINED,
                        format!("{}.{}", key.0, key.1),
                        "no type can be inferred for this port",
                    ));
                }
            }
        }
    }
    if ck.diags.is_empty() {
        Ok(env)
    } else {
        Err(ck.diags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_str;

    fn check(src: &str) -> Result<TypeEnv, Vec<Diagnostic>> {
        typecheck(&parse_str(src).unwrap())
    }

    #[test]
    fn add_output_inferred_int() {
        let env = check(
            "component ADD { in ch1; in ch2; in ch3; out s; function { s = ch1 + ch2 + ch3; } }
             component Top { in a : int; in b : int; in c : int; out o;
               dfd { block add : ADD; channel a -> add.ch1; channel b -> add.ch2; channel c -> add.ch3;
                     channel add.s -> o; } }",
        )
        .unwrap();
        assert_eq!(env.port("ADD", "s"), Some(&DataType::Int));
        assert_eq!(env.get("Top", &Endpoint::block("add", "s")), Some(&DataType::Int));
        assert_eq!(env.port("Top", "o"), Some(&DataType::Int));
    }

    #[test]
    fn bool_into_arithmetic() {
        let d = check("component F { in a : bool; out y; function { y = a + 1; } }").unwrap_err();
        assert_eq!(d[0].code, code::TYPE_MISMATCH);
    }

    #[test]
    fn int_bound_to_real_port() {
        let d = check(
            "component R { in x : real; out y : real; function { y = x; } }
             component Top { in a : int; out o : real; dfd { block r : R; channel a -> r.x; channel r.y -> o; } }",
        )
        .unwrap_err();
        assert_eq!(d[0].code, code::TYPE_MISMATCH);
        assert!(d[0].path.starts_with("Top/channel#0"), "{}", d[0].path);
    }

    #[test]
    fn literal_defaults_and_unconstrained() {
        let env = check("component K { out y; function { y = 3; } }").unwrap();
        assert_eq!(env.port("K", "y"), Some(&DataType::Int));
        let env = check("component K { out y; function { y = 2.5 * 2; } }").unwrap();
        assert_eq!(env.port("K", "y"), Some(&DataType::Real));
        let d = check("component K { in x; out y : int; function { y = 1; } }").unwrap_err();
        assert_eq!(d[0].code, code::TYPE_UNCONSTRAINED);
    }

    #[test]
    fn impl_types_convert_at_assignment() {
        let env = check(
            "level LA; component Q { in x : fixed(int16, 0.1, 0); out y : fixed(int16, 0.01, 0); function { y = x * 2; } }",
        );
        assert!(env.is_ok(), "{env:?}");
    }
}
