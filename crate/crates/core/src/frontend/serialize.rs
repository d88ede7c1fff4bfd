//! Canonical text output. Elements keep declaration order.

use crate::diag::{self, Diagnostic};
use crate::model::*;
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("model is invalid:\n{}", diag::render(.0))]
pub struct InvalidModel(pub Vec<Diagnostic>);

/// Renders a valid project in canonical form.
pub fn serialize(p: &Project) -> Result<String, InvalidModel> {
    let errors: Vec<Diagnostic> = validate(p).into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(InvalidModel(errors));
    }
    Ok(render(p))
}

/// Renders without validating; used for diagnostics output of broken models.
pub fn render(p: &Project) -> String {
    let mut out = String::new();
    let o = &mut out;
    let _ = writeln!(o, "project {};", p.name);
    let _ = writeln!(o, "level {};", p.level.keyword());
    let _ = writeln!(o, "base_tick {};", p.base_tick_ms);
    if let Some(s) = &p.system {
        let _ = writeln!(o, "system {s};");
    }
    for e in &p.enums {
        let _ = writeln!(o, "\nenum {} {{ {} }}", e.name, e.labels.join(", "));
    }
    for c in &p.components {
        o.push('\n');
        component(o, c);
    }
    for c in &p.clusters {
        let _ = writeln!(o, "\ncluster {} {{\n  period {};", c.name, c.period_ms);
        for port in &c.ports {
            port_line(o, port);
        }
        let _ = writeln!(o, "  behavior {};\n}}", c.behavior);
    }
    if let Some(t) = &p.tech {
        o.push('\n');
        for e in &t.ecus {
            let _ = writeln!(o, "ecu {e};");
        }
        for b in &t.buses {
            let _ = writeln!(o, "bus {} connects {};", b.name, b.ecus.join(", "));
        }
        for t in &t.tasks {
            let _ = writeln!(o, "task {} on {} period {} priority {};", t.name, t.ecu, t.period_ms, t.priority);
        }
        for f in &t.frames {
            let _ = write!(o, "frame {} on {} {{", f.name, f.bus);
            for s in &f.slots {
                let _ = write!(o, " slot {s};");
            }
            o.push_str(" }\n");
        }
    }
    if let Some(d) = &p.deployment {
        o.push('\n');
        for (c, t) in &d.cluster_to_task {
            let _ = writeln!(o, "deploy {c} -> {t};");
        }
        for s in &d.signal_to_frame {
            let _ = writeln!(o, "signal {}.{} -> {}.{};", s.cluster, s.port, s.frame, s.slot);
        }
    }
    out
}

fn port_line(o: &mut String, p: &Port) {
    let dir = match p.dir {
        Direction::In => "in",
        Direction::Out => "out",
    };
    let _ = write!(o, "  {dir} {}", p.name);
    if let Some(t) = &p.ty {
        let _ = write!(o, " : {t}");
    }
    if let Some((lo, hi)) = p.range {
        let _ = write!(o, " range [{lo:?}, {hi:?}]");
    }
    if let Some(c) = &p.clock {
        let _ = write!(o, " @ {c}");
    }
    if p.actuator {
        o.push_str(" actuator");
    }
    o.push_str(";\n");
}

fn sinks(s: &[Endpoint]) -> String {
    s.iter().map(Endpoint::to_string).collect::<Vec<_>>().join(", ")
}

fn guard(e: &Expr) -> String {
    if *e == Expr::Lit(Literal::Bool(true)) {
        String::new()
    } else {
        format!(" on {e}")
    }
}

fn component(o: &mut String, c: &ComponentType) {
    let _ = writeln!(o, "component {} {{", c.name);
    for p in &c.ports {
        port_line(o, p);
    }
    match &c.def {
        Definition::Unspecified => {}
        Definition::Function(assigns) => {
            o.push_str("  function {\n");
            for a in assigns {
                let _ = writeln!(o, "    {} = {};", a.target, a.expr);
            }
            o.push_str("  }\n");
        }
        Definition::Ssd(n) => {
            o.push_str("  ssd {\n");
            for b in &n.blocks {
                if let BlockKind::Instance { of, .. } = &b.kind {
                    let _ = writeln!(o, "    sub {} : {of};", b.name);
                }
            }
            for ch in &n.channels {
                let _ = write!(o, "    channel {} -> {}", ch.source, sinks(&ch.sinks));
                if let ChannelKind::SsdDelayed { init: Some(l) } = &ch.kind {
                    let _ = write!(o, " init {l}");
                }
                if let Some(c) = &ch.clock {
                    let _ = write!(o, " @ {c}");
                }
                o.push_str(";\n");
            }
            o.push_str("  }\n");
        }
        Definition::Dfd(n) => {
            o.push_str("  dfd {\n");
            for b in &n.blocks {
                let _ = write!(o, "    block {} : ", b.name);
                let _ = match &b.kind {
                    BlockKind::Instance { of, gate: None } => write!(o, "{of}"),
                    BlockKind::Instance { of, gate: Some(g) } => write!(o, "{of} when {g}"),
                    BlockKind::When(c) => write!(o, "when({c})"),
                    BlockKind::Delay { init, clock } => match init {
                        Some(l) => write!(o, "delay({l})"),
                        None => write!(o, "delay(-)"),
                    }
                    .and_then(|_| match clock {
                        Some(c) => write!(o, " @ {c}"),
                        None => Ok(()),
                    }),
                    BlockKind::Merge(n) => write!(o, "merge({n})"),
                    BlockKind::Hold { init } => write!(o, "hold({init})"),
                };
                o.push_str(";\n");
            }
            for ch in &n.channels {
                let _ = write!(o, "    channel {} -> {}", ch.source, sinks(&ch.sinks));
                if let ChannelKind::Delay { init } = &ch.kind {
                    let _ = write!(o, " delay({init})");
                }
                if let Some(c) = &ch.clock {
                    let _ = write!(o, " @ {c}");
                }
                o.push_str(";\n");
            }
            o.push_str("  }\n");
        }
        Definition::Mtd(m) => {
            let _ = writeln!(o, "  mtd {{\n    initial {};", m.initial);
            for mode in &m.modes {
                let _ = writeln!(o, "    mode {} : {};", mode.name, mode.behavior);
            }
            for t in &m.transitions {
                let _ = writeln!(
                    o,
                    "    transition {} -> {} priority {}{};",
                    t.source,
                    t.target,
                    t.priority,
                    guard(&t.guard)
                );
            }
            o.push_str("  }\n");
        }
        Definition::Std(s) => {
            let _ = writeln!(o, "  std {{\n    initial {};", s.initial);
            for st in &s.states {
                let _ = writeln!(o, "    state {st};");
            }
            for v in &s.vars {
                let _ = writeln!(o, "    var {} : {} = {};", v.name, v.ty, v.init);
            }
            for t in &s.transitions {
                let _ =
                    write!(o, "    transition {} -> {} priority {}{}", t.source, t.target, t.priority, guard(&t.guard));
                if !t.actions.is_empty() {
                    o.push_str(" do {");
                    for a in &t.actions {
                        let _ = write!(o, " {} := {};", a.target, a.expr);
                    }
                    o.push_str(" }");
                }
                o.push_str(";\n");
            }
            o.push_str("  }\n");
        }
    }
    o.push_str("}\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_str;

    #[test]
    fn empty_component_minimal_text() {
        let mut p = Project::new("P", Level::Faa);
        p.components.push(ComponentType::new("E", vec![], Definition::Unspecified));
        let text = serialize(&p).unwrap();
        assert_eq!(text, "project P;\nlevel FAA;\nbase_tick 1;\n\ncomponent E {\n}\n");
        assert_eq!(parse_str(&text).unwrap(), p);
    }

    #[test]
    fn invalid_model_refused() {
        let mut p = Project::new("P", Level::Faa);
        p.components.push(ComponentType::new("E", vec![], Definition::Unspecified));
        p.components.push(ComponentType::new("E", vec![], Definition::Unspecified));
        assert!(serialize(&p).is_err());
    }
}
