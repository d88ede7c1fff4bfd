//! MTD to partitionable dataflow.

use super::{fresh, fresh_enum_name, TransformError};
use crate::model::*;
use std::collections::BTreeSet;

/// Name of the mode-controller block inside the generated DFD.
pub const CONTROLLER: &str = "ctl";

/// Replaces MTD `component` by an equivalent DFD: a mode-controller STD
/// emits the current mode every tick, each mode's behavior runs as an
/// instance gated by `mode(ctl.mode, M)`, and one merge per output selects
/// the active mode's message. Gated instances keep their state while
/// inactive, which matches the frozen-mode rule of MTD execution.
pub fn mtd_to_dataflow(p: &Project, component: &str, expose_mode_port: bool) -> Result<Project, TransformError> {
    let c = p.component(component).ok_or_else(|| TransformError::UnknownComponent(component.into()))?;
    let Definition::Mtd(m) = &c.def else { return Err(TransformError::NotAnMtd(component.into())) };
    let mut seen = BTreeSet::new();
    for t in &m.transitions {
        if !seen.insert((&t.source, t.priority)) {
            return Err(TransformError::NonDeterministicMtd { component: component.into(), mode: t.source.clone() });
        }
    }
    for mode in &m.modes {
        if p.enum_of_label(&mode.name).is_some() || c.port(&mode.name).is_some() {
            return Err(TransformError::Unsupported(format!(
                "mode name '{}' clashes with an existing label or port",
                mode.name
            )));
        }
    }

    let mut out = p.clone();
    let enum_name = fresh_enum_name(p, &format!("{component}_Mode"));
    out.enums.push(EnumDecl { name: enum_name.clone(), labels: m.modes.iter().map(|x| x.name.clone()).collect() });
    let mode_ty = DataType::Enum(enum_name);
    let label = |name: &str| Expr::Lit(Literal::Label(name.to_string()));

    // Controller: the MTD's transitions plus a lowest-priority self-loop per
    // mode so that the mode flow is present on every tick.
    let ctl_name = out.fresh_component_name(&format!("{component}_ModeCtl"));
    let guard_inputs: BTreeSet<&str> = m.transitions.iter().flat_map(|t| t.guard.names()).collect();
    let mut ctl_ports: Vec<Port> = c.inputs().filter(|q| guard_inputs.contains(q.name.as_str())).cloned().collect();
    for q in &mut ctl_ports {
        q.actuator = false;
        q.range = None;
    }
    let mode_port = fresh("mode", &|n| ctl_ports.iter().any(|q| q.name == n));
    ctl_ports.push(Port::output(mode_port.clone(), Some(mode_ty.clone())));
    let idle = m.transitions.iter().map(|t| t.priority).max().map_or(1, |x| x + 1);
    let emit = |target: &str| vec![Assignment { target: mode_port.clone(), expr: label(target) }];
    let mut transitions: Vec<StdTransition> = m
        .transitions
        .iter()
        .map(|t| StdTransition {
            source: t.source.clone(),
            target: t.target.clone(),
            priority: t.priority,
            guard: t.guard.clone(),
            actions: emit(&t.target),
        })
        .collect();
    for mode in &m.modes {
        transitions.push(StdTransition {
            source: mode.name.clone(),
            target: mode.name.clone(),
            priority: idle,
            guard: Expr::Lit(Literal::Bool(true)),
            actions: emit(&mode.name),
        });
    }
    let ctl = ComponentType::new(
        ctl_name.clone(),
        ctl_ports.clone(),
        Definition::Std(Std {
            initial: m.initial.clone(),
            states: m.modes.iter().map(|x| x.name.clone()).collect(),
            vars: Vec::new(),
            transitions,
        }),
    );

    // Network.
    let mut blocks = vec![Block { name: CONTROLLER.into(), kind: BlockKind::instance(ctl_name.clone()) }];
    let mode_block = |mode: &str| format!("m_{mode}");
    for mode in &m.modes {
        let gate = ClockExpr::Mode(Endpoint::block(CONTROLLER, mode_port.clone()), mode.name.clone());
        blocks.push(Block {
            name: mode_block(&mode.name),
            kind: BlockKind::Instance { of: mode.behavior.clone(), gate: Some(gate) },
        });
    }
    let behavior_has = |behavior: &str, port: &str| {
        p.signature(behavior).is_some_and(|s| s.iter().any(|q| q.name == port && q.dir == Direction::In))
    };
    let mut channels = Vec::new();
    for x in c.inputs() {
        let mut sinks = Vec::new();
        if ctl_ports.iter().any(|q| q.name == x.name && q.dir == Direction::In) {
            sinks.push(Endpoint::block(CONTROLLER, x.name.clone()));
        }
        for mode in m.modes.iter().filter(|mode| behavior_has(&mode.behavior, &x.name)) {
            sinks.push(Endpoint::block(mode_block(&mode.name), x.name.clone()));
        }
        if !sinks.is_empty() {
            channels.push(Channel::instant(Endpoint::port(x.name.clone()), sinks));
        }
    }
    for o in c.outputs() {
        let merge = format!("merge_{}", o.name);
        blocks.push(Block { name: merge.clone(), kind: BlockKind::Merge(m.modes.len()) });
        for (k, mode) in m.modes.iter().enumerate() {
            channels.push(Channel::instant(
                Endpoint::block(mode_block(&mode.name), o.name.clone()),
                vec![Endpoint::block(merge.clone(), format!("x{}", k + 1))],
            ));
        }
        channels.push(Channel::instant(Endpoint::block(merge, "y"), vec![Endpoint::port(o.name.clone())]));
    }
    let mut ports = c.ports.clone();
    if expose_mode_port {
        let name = fresh("mode", &|n| ports.iter().any(|q| q.name == n));
        ports.push(Port::output(name.clone(), Some(mode_ty)));
        channels.push(Channel::instant(Endpoint::block(CONTROLLER, mode_port), vec![Endpoint::port(name)]));
    }

    let pos = out.components.iter().position(|x| x.name == component).expect("component exists");
    out.components[pos] = ComponentType::new(component, ports, Definition::Dfd(Network { blocks, channels }));
    out.components.insert(pos, ctl);
    Ok(out)
}
