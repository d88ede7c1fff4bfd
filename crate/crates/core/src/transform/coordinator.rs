//! Coordinator insertion for actuator conflicts.

use super::{endpoint_stem, fresh, TransformError};
use crate::analysis::{faa_conflict_check, Conflict};
use crate::model::*;

/// Routes every writer of the conflicting actuator through a new
/// coordinator component with one input per writer.
///
/// At FAA the coordinator is unspecified; at lower levels it is a
/// single-state STD forwarding the first present input in writer order.
pub fn insert_coordinator(p: &Project, conflict: &Conflict) -> Result<Project, TransformError> {
    let stale = || TransformError::ConflictStale(format!("{}/{}", conflict.component, conflict.actuator));
    let current = faa_conflict_check(p);
    let live = current.iter().find(|c| c.component == conflict.component && c.actuator == conflict.actuator);
    match live {
        Some(c) if c.writers == conflict.writers => {}
        _ => return Err(stale()),
    }
    let owner = p.component(&conflict.component).ok_or_else(stale)?;
    let net = owner.def.network().ok_or_else(stale)?;

    let ty = actuator_type(p, owner, net, &conflict.actuator);
    let mut out = p.clone();
    let coord = out.fresh_component_name(&format!("Coord_{}", endpoint_stem(&conflict.actuator)));
    let n = conflict.writers.len();
    let mut ports: Vec<Port> = (1..=n).map(|k| Port::input(format!("in_{k}"), ty.clone())).collect();
    ports.push(Port::output("out", ty));
    let def = if p.level == Level::Faa {
        Definition::Unspecified
    } else {
        Definition::Std(Std {
            initial: "Select".into(),
            states: vec!["Select".into()],
            vars: Vec::new(),
            transitions: (1..=n)
                .map(|k| StdTransition {
                    source: "Select".into(),
                    target: "Select".into(),
                    priority: k as i64,
                    guard: Expr::Present(format!("in_{k}")),
                    actions: vec![Assignment { target: "out".into(), expr: Expr::var(format!("in_{k}")) }],
                })
                .collect(),
        })
    };
    let owner_pos = out.components.iter().position(|c| c.name == conflict.component).expect("owner");
    out.components.insert(owner_pos, ComponentType::new(coord.clone(), ports, def));

    let block = fresh(&format!("coord_{}", endpoint_stem(&conflict.actuator)), &|b| net.block(b).is_some());
    let ssd = matches!(owner.def, Definition::Ssd(_));
    let mk = |src: Endpoint, sink: Endpoint| {
        if ssd {
            Channel::ssd(src, vec![sink])
        } else {
            Channel::instant(src, vec![sink])
        }
    };
    let mut net = net.clone();
    let mut k = 0;
    let mut rewired = Vec::new();
    for ch in &mut net.channels {
        if let Some(i) = ch.sinks.iter().position(|s| *s == conflict.actuator) {
            ch.sinks.remove(i);
            k += 1;
            let mut c = ch.clone();
            c.sinks = vec![Endpoint::block(block.clone(), format!("in_{k}"))];
            rewired.push(c);
        }
    }
    net.channels.retain(|c| !c.sinks.is_empty());
    net.channels.extend(rewired);
    net.blocks.push(Block { name: block.clone(), kind: BlockKind::instance(coord) });
    net.channels.push(mk(Endpoint::block(block, "out"), conflict.actuator.clone()));
    let def = match owner.def {
        Definition::Ssd(_) => Definition::Ssd(net),
        _ => Definition::Dfd(net),
    };
    out.components[owner_pos + 1].def = def;
    Ok(out)
}

fn actuator_type(p: &Project, owner: &ComponentType, net: &Network, a: &Endpoint) -> Option<DataType> {
    match a {
        Endpoint::Port(q) => owner.port(q).and_then(|q| q.ty.clone()),
        Endpoint::Block(b, q) => match &net.block(b)?.kind {
            BlockKind::Instance { of, .. } => p.signature(of)?.iter().find(|x| x.name == *q)?.ty.clone(),
            _ => None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_str;
    use crate::transform::structural_errors;

    const SRC: &str = "project P;\nlevel FAA;\nbase_tick 10;\n\
        component Brake { in cmd : real actuator; }\n\
        component Abs { out cmd : real; }\n\
        component Esp { out cmd : real; }\n\
        component Acc { out cmd : real; }\n\
        component Car { ssd { sub b : Brake; sub a : Abs; sub e : Esp; sub c : Acc; \
          channel a.cmd -> b.cmd; channel e.cmd -> b.cmd; channel c.cmd -> b.cmd; } }\n";

    #[test]
    fn three_writers_resolved() {
        let p = parse_str(SRC).unwrap();
        let conflicts = faa_conflict_check(&p);
        assert_eq!(conflicts.len(), 1);
        assert_eq!(conflicts[0].writers.len(), 3);
        let q = insert_coordinator(&p, &conflicts[0]).unwrap();
        assert!(faa_conflict_check(&q).is_empty());
        assert_eq!(q.component("Coord_b_cmd").unwrap().inputs().count(), 3);
        assert_eq!(structural_errors(&q), vec![]);
        assert_eq!(insert_coordinator(&q, &conflicts[0]), Err(TransformError::ConflictStale("Car/b.cmd".into())));
    }
}
