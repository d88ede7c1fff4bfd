//! Structural well-formedness of a project.

use super::*;
use crate::diag::{code, Diagnostic};
use std::collections::{BTreeMap, BTreeSet, HashSet};

/// Returns every structural violation; empty iff the project is well-formed.
pub fn validate(project: &Project) -> Vec<Diagnostic> {
    let mut v = Validator { p: project, out: Vec::new() };
    v.run();
    v.out
}

struct Validator<'a> {
    p: &'a Project,
    out: Vec<Diagnostic>,
}

fn duplicates<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut dups = Vec::new();
    for n in names {
        if !seen.insert(n) && !dups.contains(&n) {
            dups.push(n);
        }
    }
    dups
}

impl<'a> Validator<'a> {
    fn err(&mut self, code: &'static str, path: impl Into<String>, msg: impl Into<String>) {
        self.out.push(Diagnostic::error(code, path, msg));
    }

    fn warn(&mut self, code: &'static str, path: impl Into<String>, msg: impl Into<String>) {
        self.out.push(Diagnostic::warning(code, path, msg));
    }

    fn run(&mut self) {
        let p = self.p;
        let top = p.components.iter().map(|c| c.name.as_str()).chain(p.clusters.iter().map(|c| c.name.as_str()));
        for d in duplicates(top) {
            self.err(code::DUPLICATE, d, format!("duplicate component or cluster name '{d}'"));
        }
        for d in duplicates(p.enums.iter().map(|e| e.name.as_str())) {
            self.err(code::DUPLICATE, d, format!("duplicate enum '{d}'"));
        }
        for e in &p.enums {
            if e.labels.is_empty() {
                self.err(code::BAD_TYPE, &e.name, "enum has no labels");
            }
            for d in duplicates(e.labels.iter().map(String::as_str)) {
                self.err(code::DUPLICATE, format!("{}.{d}", e.name), format!("duplicate enum label '{d}'"));
            }
        }
        if let Some(s) = &p.system {
            if p.component(s).is_none() {
                self.err(code::UNRESOLVED, s.as_str(), format!("system '{s}' is not a component"));
            }
        }
        for c in &p.components {
            self.component(c);
        }
        for c in &p.clusters {
            self.cluster(c);
        }
        self.containment();
        self.tech_and_deployment();
    }

    fn data_type(&mut self, path: &str, ty: &DataType) {
        match ty {
            DataType::Enum(n) if self.p.enum_decl(n).is_none() => {
                self.err(code::UNRESOLVED, path, format!("unknown type '{n}'"));
            }
            DataType::Impl(ImplType::Fixed { scale, .. }) if *scale <= Ratio::from_integer(0) => {
                self.err(code::BAD_TYPE, path, "fixed-point scale must be positive");
            }
            _ => {}
        }
    }

    fn literal(&mut self, path: &str, lit: &Literal) {
        if let Literal::Label(l) = lit {
            if self.p.enum_of_label(l).is_none() {
                self.err(code::UNRESOLVED, path, format!("unknown or ambiguous enum label '{l}'"));
            }
        }
    }

    fn clock(&mut self, path: &str, clock: &ClockExpr, resolves: &dyn Fn(&Endpoint) -> bool) {
        let mut bad_every = false;
        check_every(clock, &mut bad_every);
        if bad_every {
            self.err(code::BAD_CLOCK, path, "every(n, c) requires n >= 1");
        }
        for f in clock.flows() {
            if !resolves(f) {
                self.err(code::UNRESOLVED, path, format!("clock references unknown flow '{f}'"));
            }
        }
    }

    fn ports(&mut self, owner: &str, ports: &[Port]) {
        for d in duplicates(ports.iter().map(|p| p.name.as_str())) {
            self.err(code::DUPLICATE, format!("{owner}.{d}"), format!("duplicate port '{d}'"));
        }
        for port in ports {
            let path = format!("{owner}.{}", port.name);
            if let Some(ty) = &port.ty {
                self.data_type(&path, ty);
            }
            if let Some(c) = &port.clock {
                let own = |e: &Endpoint| matches!(e, Endpoint::Port(n) if ports.iter().any(|q| q.name == *n));
                self.clock(&path, c, &own);
            }
            if let Some((lo, hi)) = port.range {
                if lo > hi {
                    self.err(code::BAD_TYPE, &path, "empty value range");
                }
            }
        }
    }

    fn component(&mut self, c: &ComponentType) {
        self.ports(&c.name, &c.ports);
        match &c.def {
            Definition::Unspecified => {}
            Definition::Function(assigns) => self.function(c, assigns),
            Definition::Ssd(n) => self.network(c, n, true),
            Definition::Dfd(n) => self.network(c, n, false),
            Definition::Mtd(m) => self.mtd(c, m),
            Definition::Std(s) => self.std(c, s),
        }
    }

    fn function(&mut self, c: &ComponentType, assigns: &[Assignment]) {
        let mut assigned = BTreeSet::new();
        for a in assigns {
            let path = format!("{}.{}", c.name, a.target);
            match c.port(&a.target) {
                Some(p) if p.dir == Direction::Out => {}
                Some(_) => self.err(code::DIRECTION, &path, "function assigns an input port"),
                None => self.err(code::UNRESOLVED, &path, format!("unknown output '{}'", a.target)),
            }
            if !assigned.insert(a.target.as_str()) {
                self.err(code::DUPLICATE, &path, "output assigned twice");
            }
            self.expr_names(&path, &a.expr, &|n| c.port(n).is_some_and(|p| p.dir == Direction::In));
        }
        for out in c.outputs() {
            if !assigned.contains(out.name.as_str()) {
                self.err(code::UNCONNECTED, format!("{}.{}", c.name, out.name), "output never assigned");
            }
        }
    }

    fn expr_names(&mut self, path: &str, e: &Expr, known: &dyn Fn(&str) -> bool) {
        for n in e.names() {
            if !known(n) && self.p.enum_of_label(n).is_none() {
                self.err(code::UNRESOLVED, path, format!("unknown name '{n}'"));
            }
        }
        let mut labels = Vec::new();
        e.walk(&mut |x| {
            if let Expr::Lit(l @ Literal::Label(_)) = x {
                labels.push(l.clone());
            }
        });
        for l in labels {
            self.literal(path, &l);
        }
    }

    fn network(&mut self, c: &ComponentType, n: &Network, ssd: bool) {
        let p = self.p;
        for d in duplicates(n.blocks.iter().map(|b| b.name.as_str())) {
            self.err(code::DUPLICATE, format!("{}/{d}", c.name), format!("duplicate block '{d}'"));
        }
        let resolves = |e: &Endpoint| match e {
            Endpoint::Port(name) => c.port(name).is_some(),
            Endpoint::Block(b, port) => n.block(b).is_some_and(|blk| p.block_port_dir(blk, port).is_some()),
        };
        for b in &n.blocks {
            let path = format!("{}/{}", c.name, b.name);
            match &b.kind {
                BlockKind::Instance { of, gate } => {
                    if p.signature(of).is_none() {
                        self.err(code::UNRESOLVED, &path, format!("unknown component '{of}'"));
                    }
                    if let Some(g) = gate {
                        if ssd {
                            self.err(code::BAD_CHANNEL, &path, "SSD sub-components cannot be gated");
                        }
                        self.clock(&path, g, &resolves);
                    }
                }
                _ if ssd => self.err(code::BAD_CHANNEL, &path, "SSDs contain only component instances"),
                BlockKind::When(cl) => self.clock(&path, cl, &resolves),
                BlockKind::Delay { init, clock } => {
                    if let Some(l) = init {
                        self.literal(&path, l);
                    }
                    if let Some(cl) = clock {
                        self.clock(&path, cl, &resolves);
                    }
                }
                BlockKind::Merge(k) => {
                    if *k == 0 {
                        self.err(code::BAD_CHANNEL, &path, "merge needs at least one input");
                    }
                }
                BlockKind::Hold { init } => self.literal(&path, init),
            }
        }

        // consumer endpoint -> number of driving channels
        let mut drivers: BTreeMap<&Endpoint, usize> = BTreeMap::new();
        for (i, ch) in n.channels.iter().enumerate() {
            let path = format!("{}/channel#{i}", c.name);
            match (&ch.kind, ssd) {
                (ChannelKind::SsdDelayed { .. }, false) => {
                    self.err(code::BAD_CHANNEL, &path, "DFD channels are instantaneous or explicitly delayed")
                }
                (ChannelKind::SsdDelayed { init: Some(l) }, true) => self.literal(&path, l),
                (ChannelKind::Instant | ChannelKind::Delay { .. }, true) => {
                    self.err(code::BAD_CHANNEL, &path, "SSD channels always introduce a message delay")
                }
                (ChannelKind::Delay { init }, false) => self.literal(&path, init),
                _ => {}
            }
            if let Some(cl) = &ch.clock {
                self.clock(&path, cl, &resolves);
            }
            if ch.sinks.is_empty() {
                self.err(code::BAD_CHANNEL, &path, "channel without sinks");
            }
            match self.endpoint_role(c, n, &ch.source) {
                None => self.err(code::UNRESOLVED, &path, format!("unknown endpoint '{}'", ch.source)),
                Some(Role::Consumer) => self.err(
                    code::DIRECTION,
                    &path,
                    format!("direction mismatch: source '{}' does not produce messages", ch.source),
                ),
                Some(Role::Producer) => {}
            }
            for s in &ch.sinks {
                match self.endpoint_role(c, n, s) {
                    None => self.err(code::UNRESOLVED, &path, format!("unknown endpoint '{s}'")),
                    Some(Role::Producer) => self.err(
                        code::DIRECTION,
                        &path,
                        format!("direction mismatch: sink '{s}' does not consume messages"),
                    ),
                    Some(Role::Consumer) => *drivers.entry(s).or_default() += 1,
                }
            }
        }
        for (sink, count) in &drivers {
            if *count > 1 && !self.is_actuator(n, sink) {
                self.err(
                    code::FAN_IN,
                    format!("{}/{sink}", c.name),
                    format!("'{sink}' is driven by {count} channels; use a merge block"),
                );
            }
        }
        // unconnected consumers
        let mut consumers = Vec::new();
        for out in c.outputs() {
            consumers.push(Endpoint::Port(out.name.clone()));
        }
        for b in &n.blocks {
            if let Some((ins, _)) = p.block_ports(b) {
                consumers.extend(ins.into_iter().map(|i| Endpoint::Block(b.name.clone(), i)));
            }
        }
        for e in consumers {
            if !drivers.contains_key(&e) {
                let msg = format!("'{e}' is not connected");
                if ssd {
                    self.warn(code::UNCONNECTED, format!("{}/{e}", c.name), msg);
                } else {
                    self.err(code::UNCONNECTED, format!("{}/{e}", c.name), msg);
                }
            }
        }
    }

    fn is_actuator(&self, n: &Network, e: &Endpoint) -> bool {
        match e {
            Endpoint::Block(b, port) => n
                .block(b)
                .and_then(|blk| match &blk.kind {
                    BlockKind::Instance { of, .. } => self.p.signature(of),
                    _ => None,
                })
                .and_then(|sig| sig.iter().find(|p| p.name == *port))
                .is_some_and(|p| p.actuator),
            Endpoint::Port(_) => false,
        }
    }

    fn endpoint_role(&self, c: &ComponentType, n: &Network, e: &Endpoint) -> Option<Role> {
        match e {
            Endpoint::Port(name) => c.port(name).map(|p| match p.dir {
                Direction::In => Role::Producer,
                Direction::Out => Role::Consumer,
            }),
            Endpoint::Block(b, port) => {
                let blk = n.block(b)?;
                self.p.block_port_dir(blk, port).map(|d| match d {
                    Direction::In => Role::Consumer,
                    Direction::Out => Role::Producer,
                })
            }
        }
    }

    fn mtd(&mut self, c: &ComponentType, m: &Mtd) {
        let p = self.p;
        for d in duplicates(m.modes.iter().map(|x| x.name.as_str())) {
            self.err(code::DUPLICATE, format!("{}/mode:{d}", c.name), format!("duplicate mode '{d}'"));
        }
        if m.modes.is_empty() {
            self.err(code::MTD_MODES, &c.name, "MTD without modes");
            return;
        }
        if !m.modes.iter().any(|x| x.name == m.initial) {
            self.err(code::MTD_MODES, &c.name, format!("initial mode '{}' is not declared", m.initial));
        }
        for mode in &m.modes {
            let path = format!("{}/mode:{}", c.name, mode.name);
            let Some(beh) = p.component(&mode.behavior) else {
                self.err(code::UNRESOLVED, &path, format!("unknown behavior '{}'", mode.behavior));
                continue;
            };
            for bp in &beh.ports {
                match c.port(&bp.name) {
                    Some(mp) if mp.dir == bp.dir => {}
                    _ => self.err(
                        code::MODE_SIGNATURE,
                        &path,
                        format!("behavior port '{}' has no matching MTD port", bp.name),
                    ),
                }
            }
            for out in c.outputs() {
                if beh.port(&out.name).is_none_or(|bp| bp.dir != Direction::Out) {
                    self.err(
                        code::MODE_SIGNATURE,
                        &path,
                        format!("behavior '{}' does not produce output '{}'", beh.name, out.name),
                    );
                }
            }
        }
        let mut prios: BTreeSet<(&str, i64)> = BTreeSet::new();
        for (i, t) in m.transitions.iter().enumerate() {
            let path = format!("{}/transition#{i}", c.name);
            for end in [&t.source, &t.target] {
                if !m.modes.iter().any(|x| x.name == *end) {
                    self.err(code::UNRESOLVED, &path, format!("unknown mode '{end}'"));
                }
            }
            if !prios.insert((t.source.as_str(), t.priority)) {
                self.err(
                    code::PRIORITY,
                    &path,
                    format!("priority {} used twice on transitions leaving '{}'", t.priority, t.source),
                );
            }
            self.expr_names(&path, &t.guard, &|n| c.port(n).is_some_and(|p| p.dir == Direction::In));
        }
        let mut reached = BTreeSet::from([m.initial.as_str()]);
        let mut frontier = vec![m.initial.as_str()];
        while let Some(s) = frontier.pop() {
            for t in m.transitions.iter().filter(|t| t.source == s) {
                if reached.insert(t.target.as_str()) {
                    frontier.push(t.target.as_str());
                }
            }
        }
        for mode in &m.modes {
            if !reached.contains(mode.name.as_str()) {
                self.err(
                    code::MTD_MODES,
                    format!("{}/mode:{}", c.name, mode.name),
                    "mode unreachable from the initial mode",
                );
            }
        }
    }

    fn std(&mut self, c: &ComponentType, s: &Std) {
        for d in duplicates(s.states.iter().map(String::as_str)) {
            self.err(code::DUPLICATE, format!("{}/state:{d}", c.name), format!("duplicate state '{d}'"));
        }
        for d in duplicates(s.vars.iter().map(|v| v.name.as_str()).chain(c.ports.iter().map(|p| p.name.as_str()))) {
            self.err(code::DUPLICATE, format!("{}.{d}", c.name), format!("'{d}' declared as both variable and port"));
        }
        if !s.states.contains(&s.initial) {
            self.err(code::STD_RESTRICTION, &c.name, format!("initial state '{}' is not declared", s.initial));
        }
        for v in &s.vars {
            let path = format!("{}.{}", c.name, v.name);
            self.data_type(&path, &v.ty);
            self.literal(&path, &v.init);
        }
        let readable =
            |n: &str| c.port(n).is_some_and(|p| p.dir == Direction::In) || s.vars.iter().any(|v| v.name == n);
        let mut prios: BTreeSet<(&str, i64)> = BTreeSet::new();
        for (i, t) in s.transitions.iter().enumerate() {
            let path = format!("{}/transition#{i}", c.name);
            for end in [&t.source, &t.target] {
                if !s.states.contains(end) {
                    self.err(
                        code::STD_RESTRICTION,
                        &path,
                        format!("transition endpoint '{end}' is not a state of this diagram"),
                    );
                }
            }
            if !prios.insert((t.source.as_str(), t.priority)) {
                self.err(
                    code::PRIORITY,
                    &path,
                    format!("priority {} used twice on transitions leaving '{}'", t.priority, t.source),
                );
            }
            self.expr_names(&path, &t.guard, &readable);
            let mut assigned = BTreeSet::new();
            for a in &t.actions {
                let writable = c.port(&a.target).is_some_and(|p| p.dir == Direction::Out)
                    || s.vars.iter().any(|v| v.name == a.target);
                if !writable {
                    self.err(
                        code::STD_RESTRICTION,
                        &path,
                        format!("action target '{}' is not an output or variable", a.target),
                    );
                }
                if !assigned.insert(a.target.as_str()) {
                    self.err(code::STD_RESTRICTION, &path, format!("'{}' assigned twice", a.target));
                }
                self.expr_names(&path, &a.expr, &readable);
            }
        }
    }

    fn cluster(&mut self, cl: &Cluster) {
        self.ports(&cl.name, &cl.ports);
        for port in &cl.ports {
            let path = format!("{}.{}", cl.name, port.name);
            if port.clock.is_none() {
                self.err(code::CLUSTER_CLOCK, &path, "cluster port lacks an explicit clock");
            }
            if port.ty.is_none() {
                self.err(code::CLUSTER_CLOCK, &path, "cluster port lacks a declared type");
            }
        }
        if cl.period_ms == 0 {
            self.err(code::BAD_CLOCK, &cl.name, "cluster period must be positive");
        }
        match self.p.component(&cl.behavior) {
            None => self.err(code::UNRESOLVED, &cl.name, format!("unknown behavior '{}'", cl.behavior)),
            Some(b) => {
                let same = b.ports.len() == cl.ports.len()
                    && cl.ports.iter().all(|p| b.port(&p.name).is_some_and(|q| q.dir == p.dir));
                if !same {
                    self.err(
                        code::MODE_SIGNATURE,
                        &cl.name,
                        format!("behavior '{}' ports differ from cluster ports", b.name),
                    );
                }
            }
        }
    }

    fn containment(&mut self) {
        let p = self.p;
        let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for c in &p.components {
            let e = edges.entry(c.name.as_str()).or_default();
            match &c.def {
                Definition::Ssd(n) | Definition::Dfd(n) => {
                    for b in &n.blocks {
                        if let BlockKind::Instance { of, .. } = &b.kind {
                            e.push(of);
                        }
                    }
                }
                Definition::Mtd(m) => e.extend(m.modes.iter().map(|m| m.behavior.as_str())),
                _ => {}
            }
        }
        for cl in &p.clusters {
            edges.entry(cl.name.as_str()).or_default().push(&cl.behavior);
        }
        for start in edges.keys().copied().collect::<Vec<_>>() {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<&str> = edges[start].clone();
            let mut cyclic = false;
            while let Some(n) = stack.pop() {
                if n == start {
                    cyclic = true;
                    break;
                }
                if seen.insert(n) {
                    if let Some(next) = edges.get(n) {
                        stack.extend(next.iter().copied());
                    }
                }
            }
            if cyclic {
                self.err(code::RECURSIVE, start, format!("recursive containment: '{start}' contains itself"));
            }
        }
    }

    fn tech_and_deployment(&mut self) {
        let p = self.p;
        let empty = TechArch::default();
        let ta = p.tech.as_ref().unwrap_or(&empty);
        for d in duplicates(ta.ecus.iter().map(String::as_str)) {
            self.err(code::DUPLICATE, d, format!("duplicate ECU '{d}'"));
        }
        for d in duplicates(ta.tasks.iter().map(|t| t.name.as_str())) {
            self.err(code::DUPLICATE, d, format!("duplicate task '{d}'"));
        }
        for d in duplicates(ta.buses.iter().map(|t| t.name.as_str())) {
            self.err(code::DUPLICATE, d, format!("duplicate bus '{d}'"));
        }
        for d in duplicates(ta.frames.iter().map(|t| t.name.as_str())) {
            self.err(code::DUPLICATE, d, format!("duplicate frame '{d}'"));
        }
        for b in &ta.buses {
            for e in &b.ecus {
                if !ta.ecus.contains(e) {
                    self.err(code::DEPLOY_REF, &b.name, format!("unknown ECU '{e}'"));
                }
            }
        }
        for t in &ta.tasks {
            if !ta.ecus.contains(&t.ecu) {
                self.err(code::DEPLOY_REF, &t.name, format!("unknown ECU '{}'", t.ecu));
            }
            if t.period_ms == 0 {
                self.err(code::BAD_CLOCK, &t.name, "task period must be positive");
            }
        }
        for f in &ta.frames {
            if ta.bus(&f.bus).is_none() {
                self.err(code::DEPLOY_REF, &f.name, format!("unknown bus '{}'", f.bus));
            }
            for d in duplicates(f.slots.iter().map(String::as_str)) {
                self.err(code::DUPLICATE, format!("{}.{d}", f.name), format!("duplicate slot '{d}'"));
            }
        }
        let Some(dep) = &p.deployment else { return };
        let mut mapped: BTreeMap<&str, usize> = BTreeMap::new();
        for (cl, task) in &dep.cluster_to_task {
            if p.cluster(cl).is_none() {
                self.err(code::DEPLOY_REF, cl.as_str(), format!("unknown cluster '{cl}'"));
            }
            if ta.task(task).is_none() {
                self.err(code::DEPLOY_REF, cl.as_str(), format!("unknown task '{task}'"));
            }
            *mapped.entry(cl).or_default() += 1;
        }
        for (cl, n) in mapped {
            if n > 1 {
                self.err(
                    code::DEPLOY_REF,
                    cl,
                    format!("cluster mapped to {n} tasks; a cluster runs in exactly one task"),
                );
            }
        }
        let mut used = BTreeSet::new();
        for s in &dep.signal_to_frame {
            let path = format!("{}.{}", s.cluster, s.port);
            match p.cluster(&s.cluster).and_then(|c| c.port(&s.port)) {
                Some(port) if port.dir == Direction::Out => {}
                _ => self.err(code::DEPLOY_REF, &path, "signal must name a cluster output port"),
            }
            match ta.frame(&s.frame) {
                Some(f) if f.slots.contains(&s.slot) => {}
                _ => self.err(code::DEPLOY_REF, &path, format!("unknown frame slot '{}.{}'", s.frame, s.slot)),
            }
            if !used.insert((s.frame.as_str(), s.slot.as_str())) {
                self.err(code::DEPLOY_REF, &path, format!("slot '{}.{}' used twice", s.frame, s.slot));
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Role {
    Producer,
    Consumer,
}

fn check_every(c: &ClockExpr, bad: &mut bool) {
    match c {
        ClockExpr::Every(n, sub) => {
            if *n == 0 {
                *bad = true;
            }
            check_every(sub, bad);
        }
        ClockExpr::Not(sub) => check_every(sub, bad),
        ClockExpr::And(cs) | ClockExpr::Or(cs) => cs.iter().for_each(|x| check_every(x, bad)),
        _ => {}
    }
}
