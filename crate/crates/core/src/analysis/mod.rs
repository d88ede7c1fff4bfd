//! Static semantics: types, clocks, causality and architecture rules.

mod causality;
mod clocks;
mod rules;
mod types;

pub use causality::{canonical_cycle, causality_check, causality_check_with, dependency_graph, Schedule};
pub use clocks::{clock_check, port_clocks, ClockAssignment};
pub use rules::{
    ccd_welldefined, cluster_flows, deployment_check, faa_conflict_check, is_actuator, ClusterFlow, Conflict,
    TargetProfile, COORDINATION_HINT,
};
pub use types::{typecheck, TypeEnv};

use crate::diag::Diagnostic;
use crate::model::*;
use std::borrow::Cow;
use std::collections::BTreeMap;

/// A flow inside a frame: (owner component or cluster, endpoint).
pub type FlowKey = (String, Endpoint);

/// The block network evaluated for `owner`: its SSD/DFD, or the wrapper
/// network of a cluster.
pub fn frame_network<'a>(p: &'a Project, owner: &str) -> Option<Cow<'a, Network>> {
    if let Some(c) = p.component(owner) {
        return c.def.network().map(Cow::Borrowed);
    }
    p.cluster(owner).map(|cl| Cow::Owned(cl.wrapper_network()))
}

/// Everything the simulator and transformations need from analysis.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub types: TypeEnv,
    pub clocks: ClockAssignment,
    pub schedules: BTreeMap<String, Schedule>,
    pub warnings: Vec<Diagnostic>,
}

impl Analysis {
    pub fn schedule(&self, owner: &str) -> Option<&Schedule> {
        self.schedules.get(owner)
    }
}

/// Validation, level rules, type and clock inference, and causality.
pub fn analyze(p: &Project) -> Result<Analysis, Vec<Diagnostic>> {
    let mut diags = validate(p);
    diags.extend(level_check(p));
    if diags.iter().any(Diagnostic::is_error) {
        return Err(diags);
    }
    let types = typecheck(p)?;
    let clocks = clock_check(p, &types)?;
    let mut schedules = BTreeMap::new();
    let mut errors = Vec::new();
    let owners = p.components.iter().map(|c| c.name.as_str()).chain(p.clusters.iter().map(|c| c.name.as_str()));
    for owner in owners {
        let Some(net) = frame_network(p, owner) else { continue };
        let extra = |b: &Block| -> Vec<Endpoint> {
            let mut refs = Vec::new();
            if let Some(a) = clocks.activation(owner, &b.name) {
                refs.extend(a.flows().into_iter().cloned());
            }
            if let Some((_, outs)) = p.block_ports(b) {
                for o in outs {
                    if let Some(c) = clocks.get(owner, &Endpoint::block(b.name.clone(), o)) {
                        refs.extend(c.flows().into_iter().cloned());
                    }
                }
            }
            refs
        };
        match causality_check_with(owner, &net, &extra) {
            Ok(s) => {
                schedules.insert(owner.to_string(), s);
            }
            Err(d) => errors.push(d),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Analysis { types, clocks, schedules, warnings: diags })
}

/// All diagnostics for a project: analysis errors, actuator conflicts and,
/// at LA level, rate and deployment rules.
pub fn check(p: &Project, profile: &TargetProfile) -> Vec<Diagnostic> {
    let mut out = match analyze(p) {
        Ok(a) => a.warnings,
        Err(d) => return d,
    };
    out.extend(faa_conflict_check(p).iter().map(Conflict::to_diagnostic));
    if p.level == Level::La {
        out.extend(ccd_welldefined(p, profile));
        if p.deployment.is_some() || p.tech.is_some() {
            out.extend(deployment_check(p));
        }
    }
    out
}
