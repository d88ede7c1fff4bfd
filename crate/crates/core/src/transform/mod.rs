//! Model transformations between abstraction levels.
//!
//! Every transformation is a pure function from a project to a new project
//! (or, for the manifest, to a deployment artifact).

mod cluster;
mod coordinator;
mod flatten;
mod manifest;
mod mtd;
mod refine;

pub use cluster::{cluster_by_clock, ClusterOptions};
pub use coordinator::insert_coordinator;
pub use flatten::flatten_to_ccd;
pub use manifest::{export_manifest, CommRow, Deadline, EcuEntry, Manifest, TaskEntry};
pub use mtd::mtd_to_dataflow;
pub use refine::{parse_refinement_map, refine_types, RefinementMap, TypeRule};

use crate::diag::{self, Diagnostic};
use crate::model::*;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("unknown component '{0}'")]
    UnknownComponent(String),
    #[error("'{0}' is not a mode transition diagram")]
    NotAnMtd(String),
    #[error("MTD '{component}' has transitions of equal priority leaving mode '{mode}'")]
    NonDeterministicMtd { component: String, mode: String },
    #[error("conflict on {0} no longer matches the model")]
    ConflictStale(String),
    #[error("depth {depth} exceeds the SSD hierarchy depth {max}")]
    DepthExceedsHierarchy { depth: usize, max: usize },
    #[error("constant {value} at {path} is not representable as {ty}")]
    UnrepresentableConstant { path: String, value: String, ty: String },
    #[error("line {line}: {message}")]
    MapSyntax { line: usize, message: String },
    #[error("deployment is not consistent:\n{}", diag::render(.0).trim_end())]
    UncheckedDeployment(Vec<Diagnostic>),
    #[error("source model has errors:\n{}", diag::render(.0).trim_end())]
    InvalidSource(Vec<Diagnostic>),
    #[error("{0}")]
    Unsupported(String),
}

/// Name of the simulated/deployed root network.
pub(crate) fn root_name(p: &Project) -> Result<String, TransformError> {
    p.system_name().map(str::to_string).ok_or_else(|| TransformError::Unsupported("project has no components".into()))
}

pub(crate) fn fresh(stem: &str, taken: &dyn Fn(&str) -> bool) -> String {
    if !taken(stem) {
        return stem.to_string();
    }
    (2..).map(|i| format!("{stem}_{i}")).find(|n| !taken(n)).expect("unbounded")
}

pub(crate) fn fresh_enum_name(p: &Project, stem: &str) -> String {
    fresh(stem, &|n| p.enum_decl(n).is_some() || p.component(n).is_some() || p.cluster(n).is_some())
}

/// Port declaration for a flow carrying `clock` in the enclosing frame:
/// periodic clocks are kept, anything else becomes an event port.
pub(crate) fn port_for_flow(name: &str, dir: Direction, ty: Option<DataType>, clock: Option<&ClockExpr>) -> Port {
    let clock = match clock.and_then(ClockExpr::period) {
        Some(n) => ClockExpr::periodic(n),
        None => ClockExpr::Present(Endpoint::port(name)),
    };
    Port::new(name, dir, ty).with_clock(clock)
}

/// Identifier-safe rendering of an endpoint.
pub(crate) fn endpoint_stem(e: &Endpoint) -> String {
    match e {
        Endpoint::Port(q) => q.clone(),
        Endpoint::Block(b, q) => format!("{b}_{q}"),
    }
}

/// Replaces every SSD channel by an explicit delay block feeding the
/// original sinks over an instantaneous channel.
pub(crate) fn ssd_to_dfd(net: &Network) -> Network {
    let mut names: BTreeSet<String> = net.blocks.iter().map(|b| b.name.clone()).collect();
    let mut out = Network { blocks: net.blocks.clone(), channels: Vec::new() };
    for ch in &net.channels {
        let ChannelKind::SsdDelayed { init } = &ch.kind else {
            out.channels.push(ch.clone());
            continue;
        };
        let d = fresh(&format!("d_{}", endpoint_stem(&ch.source)), &|n| names.contains(n));
        names.insert(d.clone());
        out.blocks.push(Block { name: d.clone(), kind: BlockKind::Delay { init: init.clone(), clock: None } });
        out.channels.push(Channel::instant(ch.source.clone(), vec![Endpoint::block(d.clone(), "x")]));
        let mut tail = Channel::instant(Endpoint::block(d, "y"), ch.sinks.clone());
        tail.clock = ch.clock.clone();
        out.channels.push(tail);
    }
    out
}

/// Removes the given components when nothing refers to them any more.
pub(crate) fn prune(p: &mut Project, candidates: &BTreeSet<String>) {
    loop {
        let used: BTreeSet<&str> = p
            .components
            .iter()
            .flat_map(|c| match &c.def {
                Definition::Ssd(n) | Definition::Dfd(n) => n
                    .blocks
                    .iter()
                    .filter_map(|b| match &b.kind {
                        BlockKind::Instance { of, .. } => Some(of.as_str()),
                        _ => None,
                    })
                    .collect::<Vec<_>>(),
                Definition::Mtd(m) => m.modes.iter().map(|x| x.behavior.as_str()).collect(),
                _ => Vec::new(),
            })
            .chain(p.clusters.iter().map(|c| c.behavior.as_str()))
            .chain(p.system_name())
            .collect();
        let dead: Vec<String> = p
            .components
            .iter()
            .filter(|c| candidates.contains(&c.name) && !used.contains(c.name.as_str()))
            .map(|c| c.name.clone())
            .collect();
        if dead.is_empty() {
            return;
        }
        p.components.retain(|c| !dead.contains(&c.name));
    }
}

/// Errors of `validate` and `level_check`, for post-conditions in tests.
pub fn structural_errors(p: &Project) -> Vec<Diagnostic> {
    let mut d = crate::model::validate(p);
    d.extend(crate::model::level_check(p));
    d.retain(Diagnostic::is_error);
    d
}
