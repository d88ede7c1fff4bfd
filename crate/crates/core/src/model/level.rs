use super::*;
use crate::diag::{code, Diagnostic};
use std::collections::BTreeSet;

/// Flags constructs that are illegal at the project's declared level.
pub fn level_check(project: &Project) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let level = project.level;
    for c in &project.components {
        if level != Level::Faa && c.def == Definition::Unspecified {
            out.push(Diagnostic::error(
                code::LEVEL_UNSPECIFIED,
                &c.name,
                format!("{level} components require a defined behavior"),
            ));
        }
        if level == Level::Faa {
            for p in &c.ports {
                if matches!(p.ty, Some(DataType::Impl(_))) {
                    out.push(Diagnostic::error(
                        code::LEVEL_IMPL_TYPE,
                        format!("{}.{}", c.name, p.name),
                        "implementation types are not available at FAA level",
                    ));
                }
            }
            if let Definition::Std(s) = &c.def {
                for v in s.vars.iter().filter(|v| matches!(v.ty, DataType::Impl(_))) {
                    out.push(Diagnostic::error(
                        code::LEVEL_IMPL_TYPE,
                        format!("{}.{}", c.name, v.name),
                        "implementation types are not available at FAA level",
                    ));
                }
            }
        }
    }
    if level != Level::La {
        for cl in &project.clusters {
            out.push(Diagnostic::error(
                code::LEVEL_CLUSTER,
                &cl.name,
                format!("clusters are LA-level constructs, project is {level}"),
            ));
        }
    } else {
        for cl in &project.clusters {
            if contains_cluster(project, &cl.behavior, &mut BTreeSet::new()) {
                out.push(Diagnostic::error(
                    code::LEVEL_RECURSIVE_CCD,
                    &cl.name,
                    "clusters may not be defined recursively by other clusters",
                ));
            }
        }
    }
    out
}

fn contains_cluster<'a>(p: &'a Project, comp: &'a str, seen: &mut BTreeSet<&'a str>) -> bool {
    if !seen.insert(comp) {
        return false;
    }
    let Some(c) = p.component(comp) else {
        return p.cluster(comp).is_some();
    };
    match &c.def {
        Definition::Ssd(n) | Definition::Dfd(n) => n.blocks.iter().any(|b| match &b.kind {
            BlockKind::Instance { of, .. } => p.cluster(of).is_some() || contains_cluster(p, of, seen),
            _ => false,
        }),
        Definition::Mtd(m) => m.modes.iter().any(|m| contains_cluster(p, &m.behavior, seen)),
        _ => false,
    }
}
