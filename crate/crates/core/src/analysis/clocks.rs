//! Clock calculus.
//!
//! Each component is checked once in its own frame, where `base` means
//! "whenever the component is active". An instance block in a parent frame
//! gets an activation clock α: the common clock of its unannotated inputs
//! (or the frame clock when it has none), restricted by its gate. Port
//! clocks of the instantiated component are projected into the parent by
//! substituting α for `base` and renaming port references to flows.

use super::{frame_network, FlowKey, TypeEnv};
use crate::diag::{code, Diagnostic};
use crate::model::*;
use std::collections::BTreeMap;

/// Normalized clock of every flow plus the activation clock of every
/// instance block, all relative to the owning frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClockAssignment {
    pub flows: BTreeMap<FlowKey, ClockExpr>,
    pub activation: BTreeMap<(String, String), ClockExpr>,
}

impl ClockAssignment {
    pub fn get(&self, owner: &str, flow: &Endpoint) -> Option<&ClockExpr> {
        self.flows.get(&(owner.to_string(), flow.clone()))
    }

    pub fn activation(&self, owner: &str, block: &str) -> Option<&ClockExpr> {
        self.activation.get(&(owner.to_string(), block.to_string()))
    }
}

struct Env<'a> {
    owner: &'a str,
    flows: &'a BTreeMap<Endpoint, ClockExpr>,
    types: &'a TypeEnv,
    p: &'a Project,
}

impl ClockEnv for Env<'_> {
    fn flow_clock(&self, flow: &Endpoint) -> Option<ClockExpr> {
        self.flows.get(flow).cloned()
    }

    fn flow_labels(&self, flow: &Endpoint) -> Option<Vec<String>> {
        match self.types.get(self.owner, flow)? {
            DataType::Enum(e) => self.p.enum_decl(e).map(|d| d.labels.clone()),
            _ => None,
        }
    }
}

/// Clock of each port of `owner` in its own frame.
pub fn port_clocks(p: &Project, types: &TypeEnv, owner: &str, ports: &[Port]) -> BTreeMap<Endpoint, ClockExpr> {
    let mut flows: BTreeMap<Endpoint, ClockExpr> = BTreeMap::new();
    // Event ports first: they are self-referential and anchor the others.
    for port in ports {
        let clock = match &port.clock {
            None => Some(ClockExpr::Base),
            Some(_) if port.is_event() => Some(ClockExpr::Present(Endpoint::port(port.name.clone()))),
            Some(_) => None,
        };
        if let Some(c) = clock {
            flows.insert(Endpoint::port(port.name.clone()), c);
        }
    }
    // Remaining annotations may reference other ports; resolve in passes.
    for _ in 0..=ports.len() {
        for port in ports {
            let key = Endpoint::port(port.name.clone());
            if flows.contains_key(&key) {
                continue;
            }
            let c = port.clock.as_ref().expect("annotated");
            if c.flows().iter().all(|f| flows.contains_key(f)) {
                let n = c.normalize(&Env { owner, flows: &flows, types, p });
                flows.insert(key, n);
            }
        }
    }
    for port in ports {
        let key = Endpoint::port(port.name.clone());
        if !flows.contains_key(&key) {
            let n = port.clock.as_ref().expect("annotated").normalize(&Env { owner, flows: &flows, types, p });
            flows.insert(key, n);
        }
    }
    flows
}

/// Replaces `base` by `alpha` and renames flow references.
fn substitute(c: &ClockExpr, alpha: &ClockExpr, rename: &dyn Fn(&Endpoint) -> Endpoint) -> ClockExpr {
    match c {
        ClockExpr::Base => alpha.clone(),
        ClockExpr::Every(n, s) => ClockExpr::Every(*n, Box::new(substitute(s, alpha, rename))),
        ClockExpr::Not(s) => ClockExpr::Not(Box::new(substitute(s, alpha, rename))),
        ClockExpr::Present(f) => ClockExpr::Present(rename(f)),
        ClockExpr::Mode(f, l) => ClockExpr::Mode(rename(f), l.clone()),
        ClockExpr::And(cs) => ClockExpr::And(cs.iter().map(|c| substitute(c, alpha, rename)).collect()),
        ClockExpr::Or(cs) => ClockExpr::Or(cs.iter().map(|c| substitute(c, alpha, rename)).collect()),
    }
}

struct Checker<'a> {
    p: &'a Project,
    types: &'a TypeEnv,
    out: ClockAssignment,
    diags: Vec<Diagnostic>,
    own: BTreeMap<String, BTreeMap<Endpoint, ClockExpr>>,
}

impl<'a> Checker<'a> {
    fn own(&mut self, owner: &str) -> BTreeMap<Endpoint, ClockExpr> {
        if let Some(m) = self.own.get(owner) {
            return m.clone();
        }
        let ports = self.p.signature(owner).unwrap_or(&[]);
        let m = port_clocks(self.p, self.types, owner, ports);
        self.own.insert(owner.to_string(), m.clone());
        m
    }

    fn mismatch(&mut self, path: String, what: &str, got: &ClockExpr, want: &ClockExpr) {
        self.diags.push(Diagnostic::error(
            code::CLOCK_MISMATCH,
            path,
            format!("{what}: clock {got} differs from {want}"),
        ));
    }

    fn frame(&mut self, owner: &str, net: &Network) {
        let mut flows = self.own(owner);
        let limit = 2 * (net.blocks.len() + net.channels.len()) + 4;
        for _ in 0..limit {
            let before = flows.clone();
            self.sweep(owner, net, &mut flows, false);
            if flows == before {
                break;
            }
        }
        self.sweep(owner, net, &mut flows, true);
        // Flows left unknown sit on cycles broken only by delays without an
        // anchor, or are unconnected; give them the frame clock.
        for b in &net.blocks {
            if let Some((ins, outs)) = self.p.block_ports(b) {
                for port in ins.into_iter().chain(outs) {
                    flows.entry(Endpoint::block(b.name.clone(), port)).or_insert(ClockExpr::Base);
                }
            }
        }
        for (f, c) in flows {
            self.out.flows.insert((owner.to_string(), f), c);
        }
    }

    /// One propagation pass over blocks and channels; `report` emits
    /// mismatches against the current assignment.
    fn sweep(&mut self, owner: &str, net: &Network, flows: &mut BTreeMap<Endpoint, ClockExpr>, report: bool) {
        let source_of =
            |sink: &Endpoint| net.channels.iter().find(|c| c.sinks.contains(sink)).map(|c| c.source.clone());
        for b in &net.blocks {
            self.block(owner, b, flows, &source_of, report);
        }
        let declared = self.own(owner);
        for (k, ch) in net.channels.iter().enumerate() {
            let Some(src) = flows.get(&ch.source).cloned() else { continue };
            for sink in &ch.sinks {
                match sink {
                    Endpoint::Block(..) => {
                        flows.insert(sink.clone(), src.clone());
                    }
                    Endpoint::Port(name) if report => {
                        let event = self
                            .p
                            .signature(owner)
                            .and_then(|s| s.iter().find(|q| q.name == *name))
                            .is_some_and(Port::is_event);
                        let want = &declared[sink];
                        if !event && &src != want {
                            self.mismatch(format!("{owner}/channel#{k}"), &format!("output {name}"), &src, want);
                        }
                    }
                    Endpoint::Port(_) => {}
                }
            }
            if let (true, Some(c)) = (report, &ch.clock) {
                let want = c.normalize(&Env { owner, flows, types: self.types, p: self.p });
                if want != src {
                    self.mismatch(format!("{owner}/channel#{k}"), "channel annotation", &src, &want);
                }
            }
        }
    }

    fn block(
        &mut self,
        owner: &str,
        b: &Block,
        flows: &mut BTreeMap<Endpoint, ClockExpr>,
        source_of: &dyn Fn(&Endpoint) -> Option<Endpoint>,
        report: bool,
    ) {
        let at = |port: &str| Endpoint::block(b.name.clone(), port);
        let path = format!("{owner}/{}", b.name);
        let norm = |c: &ClockExpr, flows: &BTreeMap<Endpoint, ClockExpr>| {
            c.normalize(&Env { owner, flows, types: self.types, p: self.p })
        };
        match &b.kind {
            BlockKind::When(c) => {
                if let Some(x) = flows.get(&at("x")).cloned() {
                    let y = norm(&ClockExpr::And(vec![x, c.clone()]), flows);
                    flows.insert(at("y"), y);
                }
            }
            BlockKind::Delay { clock, .. } => {
                let x = flows.get(&at("x")).cloned();
                match clock {
                    Some(c) => {
                        let y = norm(c, flows);
                        if let (true, Some(x)) = (report, &x) {
                            if *x != y {
                                self.mismatch(path, "delay input", x, &y);
                            }
                        }
                        flows.insert(at("y"), y);
                    }
                    None => {
                        if let Some(x) = x {
                            flows.insert(at("y"), x);
                        }
                    }
                }
            }
            BlockKind::Hold { .. } => {
                flows.insert(at("y"), ClockExpr::Base);
            }
            BlockKind::Merge(n) => {
                let known: Vec<ClockExpr> =
                    (1..=*n).filter_map(|k| flows.get(&at(&format!("x{k}"))).cloned()).collect();
                if !known.is_empty() {
                    let y = norm(&ClockExpr::Or(known), flows);
                    flows.insert(at("y"), y);
                }
            }
            BlockKind::Instance { of, gate } => {
                let Some(sig) = self.p.signature(of) else { return };
                let sig = sig.to_vec();
                let own = self.own(of);
                // Common clock of unannotated inputs.
                let mut common: Option<ClockExpr> = None;
                let mut waiting = false;
                for port in sig.iter().filter(|q| q.dir == Direction::In && q.clock.is_none()) {
                    match flows.get(&at(&port.name)) {
                        Some(c) => match &common {
                            None => common = Some(c.clone()),
                            Some(k) if k != c => {
                                if report {
                                    let k = k.clone();
                                    self.mismatch(path.clone(), &format!("input {}", port.name), c, &k);
                                }
                            }
                            Some(_) => {}
                        },
                        None => waiting = true,
                    }
                }
                if waiting && common.is_none() {
                    return;
                }
                let base = common.unwrap_or(ClockExpr::Base);
                let alpha = match gate {
                    Some(g) => norm(&ClockExpr::And(vec![base, g.clone()]), flows),
                    None => base,
                };
                let rename = |e: &Endpoint| -> Endpoint {
                    let Endpoint::Port(q) = e else { return e.clone() };
                    let inner = at(q);
                    let is_input = sig.iter().any(|s| s.name == *q && s.dir == Direction::In);
                    if is_input {
                        source_of(&inner).unwrap_or(inner)
                    } else {
                        inner
                    }
                };
                let project = |port: &Port, flows: &BTreeMap<Endpoint, ClockExpr>| {
                    let k = &own[&Endpoint::port(port.name.clone())];
                    norm(&ClockExpr::And(vec![alpha.clone(), substitute(k, &alpha, &rename)]), flows)
                };
                if report {
                    for port in sig.iter().filter(|q| q.dir == Direction::In && q.clock.is_some() && !q.is_event()) {
                        if let Some(got) = flows.get(&at(&port.name)).cloned() {
                            let want = project(port, flows);
                            if got != want {
                                self.mismatch(path.clone(), &format!("input {}", port.name), &got, &want);
                            }
                        }
                    }
                }
                for port in sig.iter().filter(|q| q.dir == Direction::Out) {
                    let y = if port.clock.is_none() {
                        alpha.clone()
                    } else if port.is_event() {
                        ClockExpr::Present(at(&port.name))
                    } else {
                        project(port, flows)
                    };
                    flows.insert(at(&port.name), y);
                }
                self.out.activation.insert((owner.to_string(), b.name.clone()), alpha);
            }
        }
    }

    fn function(&mut self, c: &ComponentType, assigns: &[Assignment]) {
        let own = self.own(&c.name);
        for a in assigns {
            let Some(target) = c.port(&a.target) else { continue };
            if target.is_event() {
                continue;
            }
            let mut reads = a.expr.value_reads();
            reads.sort();
            reads.dedup();
            let mut clock: Option<&ClockExpr> = None;
            for r in reads {
                let Some(k) = own.get(&Endpoint::port(r)) else { continue };
                match clock {
                    None => clock = Some(k),
                    Some(prev) if prev != k => {
                        let prev = prev.clone();
                        self.mismatch(format!("{}.{}", c.name, a.target), &format!("operand {r}"), k, &prev);
                    }
                    Some(_) => {}
                }
            }
            let got = clock.cloned().unwrap_or(ClockExpr::Base);
            let want = &own[&Endpoint::port(a.target.clone())];
            if got != *want {
                self.mismatch(format!("{}.{}", c.name, a.target), "output", &got, want);
            }
        }
    }

    fn mtd(&mut self, c: &ComponentType, m: &Mtd) {
        let own = self.own(&c.name);
        for mode in &m.modes {
            let inner = self.own(&mode.behavior);
            for (flow, k) in inner {
                if let Some(outer) = own.get(&flow) {
                    if *outer != k {
                        self.mismatch(format!("{}/mode:{}", c.name, mode.name), &format!("port {flow}"), &k, outer);
                    }
                }
            }
        }
    }

    fn cluster_periods(&mut self, cl: &Cluster) {
        let own = self.own(&cl.name);
        for port in &cl.ports {
            let Some(n) = own[&Endpoint::port(port.name.clone())].period() else { continue };
            let ms = u64::from(n) * u64::from(self.p.base_tick_ms);
            if cl.period_ms == 0 || ms % u64::from(cl.period_ms) != 0 {
                self.diags.push(Diagnostic::error(
                    code::CLUSTER_CLOCK,
                    format!("{}.{}", cl.name, port.name),
                    format!("port period {ms} ms is not a multiple of the cluster period {} ms", cl.period_ms),
                ));
            }
        }
    }
}

/// Assigns a normalized clock to every flow and checks clock consistency.
pub fn clock_check(p: &Project, types: &TypeEnv) -> Result<ClockAssignment, Vec<Diagnostic>> {
    let mut ck = Checker { p, types, out: ClockAssignment::default(), diags: Vec::new(), own: BTreeMap::new() };
    for c in &p.components {
        match &c.def {
            Definition::Ssd(n) | Definition::Dfd(n) => ck.frame(&c.name, n),
            other => {
                for (f, k) in ck.own(&c.name) {
                    ck.out.flows.insert((c.name.clone(), f), k);
                }
                match other {
                    Definition::Function(a) => ck.function(c, a),
                    Definition::Mtd(m) => ck.mtd(c, m),
                    _ => {}
                }
            }
        }
    }
    for cl in &p.clusters {
        if let Some(net) = frame_network(p, &cl.name) {
            ck.frame(&cl.name, &net);
        }
        ck.cluster_periods(cl);
    }
    if ck.diags.is_empty() {
        Ok(ck.out)
    } else {
        ck.diags.dedup();
        Err(ck.diags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::typecheck;
    use crate::frontend::parse_str;

    fn clocks(src: &str) -> Result<ClockAssignment, Vec<Diagnostic>> {
        let p = parse_str(src).unwrap();
        let t = typecheck(&p).unwrap();
        clock_check(&p, &t)
    }

    #[test]
    fn when_every_two() {
        let a = clocks(
            "component S { in a : int; out b : int @ every(2); dfd { block w : when(every(2, true)); channel a -> w.x; channel w.y -> b; } }",
        )
        .unwrap();
        assert_eq!(a.get("S", &Endpoint::block("w", "y")), Some(&ClockExpr::periodic(2)));
    }

    #[test]
    fn same_clock_operands() {
        let a = clocks("component F { in x : int; in y : int; out z : int; function { z = x + y; } }").unwrap();
        assert_eq!(a.get("F", &Endpoint::port("z")), Some(&ClockExpr::Base));
    }

    #[test]
    fn mixed_rates_rejected() {
        let d = clocks("component F { in x : int @ every(2); in y : int; out z : int; function { z = x + y; } }")
            .unwrap_err();
        assert_eq!(d[0].code, code::CLOCK_MISMATCH);
        let d = clocks(
            "component Add { in x : int; in y : int; out z : int; function { z = x + y; } }
             component S { in a : int; out o : int; dfd { block w : when(every(2)); block add : Add;
               channel a -> w.x, add.y; channel w.y -> add.x; channel add.z -> o; } }",
        )
        .unwrap_err();
        assert_eq!(d[0].code, code::CLOCK_MISMATCH);
        assert_eq!(d[0].path, "S/add");
    }

    #[test]
    fn delay_feedback_resolves() {
        let a = clocks(
            "component Add { in x : int; in y : int; out z : int; function { z = x + y; } }
             component I { in u : int @ every(3); out s : int @ every(3); dfd { block add : Add; block d : delay(0);
               channel u -> add.x; channel d.y -> add.y; channel add.z -> d.x, s; } }",
        )
        .unwrap();
        assert_eq!(a.get("I", &Endpoint::block("d", "y")), Some(&ClockExpr::periodic(3)));
        assert_eq!(a.activation("I", "add"), Some(&ClockExpr::periodic(3)));
    }

    #[test]
    fn nested_instance_projection() {
        let a = clocks(
            "component Slow { in x : int; out y : int @ every(2); dfd { block w : when(every(2)); channel x -> w.x; channel w.y -> y; } }
             component Top { in a : int; out o : int @ every(6);
               dfd { block w : when(every(3)); block s : Slow; channel a -> w.x; channel w.y -> s.x; channel s.y -> o; } }",
        )
        .unwrap();
        assert_eq!(a.get("Top", &Endpoint::block("s", "y")), Some(&ClockExpr::periodic(6)));
    }

    #[test]
    fn idempotent() {
        let src = "component S { in a : int; out b : int @ every(2); dfd { block w : when(every(2)); channel a -> w.x; channel w.y -> b; } }";
        assert_eq!(clocks(src).unwrap(), clocks(src).unwrap());
    }
}
