//! Deployment manifest export.

use super::{root_name, TransformError};
use crate::analysis::{analyze, cluster_flows, deployment_check};
use crate::diag::has_errors;
use crate::model::*;
use std::fmt::Write as _;

/// Task table, communication matrix and deadlines of a deployed project.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub project: String,
    pub base_tick_ms: u32,
    pub ecus: Vec<EcuEntry>,
    pub comm: Vec<CommRow>,
    pub deadlines: Vec<Deadline>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcuEntry {
    pub name: String,
    pub tasks: Vec<TaskEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskEntry {
    pub name: String,
    pub period_ms: u32,
    pub priority: i64,
    /// `(block, cluster)` in schedule order of the system network.
    pub invocations: Vec<(String, String)>,
}

/// One inter-ECU signal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CommRow {
    /// `cluster.port` of the producer.
    pub signal: String,
    pub sender: String,
    pub receiver: String,
    pub bus: String,
    pub frame: String,
    pub slot: String,
    pub period_ms: u32,
}

/// Latency budget of a delayed inter-cluster flow.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Deadline {
    /// `block.port` of the producer.
    pub from: String,
    /// `block.port` of the consumer.
    pub to: String,
    pub delays: u32,
    /// Delay span in base ticks: delays times the producer period.
    pub ticks: u32,
    pub ms: u32,
}

/// Builds the manifest of a project whose deployment is consistent.
pub fn export_manifest(p: &Project) -> Result<Manifest, TransformError> {
    let diags = deployment_check(p);
    if has_errors(&diags) {
        return Err(TransformError::UncheckedDeployment(diags));
    }
    let an = analyze(p).map_err(TransformError::InvalidSource)?;
    let root = root_name(p)?;
    let empty_tech = TechArch::default();
    let tech = p.tech.as_ref().unwrap_or(&empty_tech);
    let empty_dep = Deployment::default();
    let dep = p.deployment.as_ref().unwrap_or(&empty_dep);
    let task_of =
        |cluster: &str| dep.cluster_to_task.iter().find(|(c, _)| c == cluster).and_then(|(_, t)| tech.task(t));

    let net = p.component(&root).and_then(|c| c.def.network());
    let order: Vec<String> = match an.schedule(&root) {
        Some(s) => s.order.clone(),
        None => net.map(|n| n.blocks.iter().map(|b| b.name.clone()).collect()).unwrap_or_default(),
    };
    let invocations: Vec<(String, String, String)> = order
        .iter()
        .filter_map(|b| match &net?.block(b)?.kind {
            BlockKind::Instance { of, .. } if p.cluster(of).is_some() => {
                Some((b.clone(), of.clone(), task_of(of)?.name.clone()))
            }
            _ => None,
        })
        .collect();

    let ecus = tech
        .ecus
        .iter()
        .map(|e| EcuEntry {
            name: e.clone(),
            tasks: tech
                .tasks
                .iter()
                .filter(|t| t.ecu == *e)
                .map(|t| TaskEntry {
                    name: t.name.clone(),
                    period_ms: t.period_ms,
                    priority: t.priority,
                    invocations: invocations
                        .iter()
                        .filter(|(_, _, task)| *task == t.name)
                        .map(|(b, c, _)| (b.clone(), c.clone()))
                        .collect(),
                })
                .collect(),
        })
        .collect();

    let mut comm = Vec::new();
    let mut deadlines = Vec::new();
    for f in cluster_flows(p) {
        let prod = p.cluster(&f.producer_cluster).expect("cluster");
        if f.delays > 0 {
            let ticks = f.delays * (prod.period_ms / p.base_tick_ms.max(1)).max(1);
            deadlines.push(Deadline {
                from: format!("{}.{}", f.producer, f.port),
                to: format!("{}.{}", f.consumer, f.consumer_port),
                delays: f.delays,
                ticks,
                ms: ticks * p.base_tick_ms,
            });
        }
        let (Some(tp), Some(tc)) = (task_of(&f.producer_cluster), task_of(&f.consumer_cluster)) else { continue };
        if tp.ecu == tc.ecu {
            continue;
        }
        let m = dep
            .signal_to_frame
            .iter()
            .find(|s| s.cluster == f.producer_cluster && s.port == f.port)
            .expect("checked deployment maps every inter-ECU signal");
        let row = CommRow {
            signal: format!("{}.{}", f.producer_cluster, f.port),
            sender: tp.ecu.clone(),
            receiver: tc.ecu.clone(),
            bus: tech.frame(&m.frame).map(|fr| fr.bus.clone()).unwrap_or_default(),
            frame: m.frame.clone(),
            slot: m.slot.clone(),
            period_ms: prod.period_ms,
        };
        if !comm.contains(&row) {
            comm.push(row);
        }
    }
    comm.sort();
    deadlines.sort();
    deadlines.dedup();
    Ok(Manifest { project: p.name.clone(), base_tick_ms: p.base_tick_ms, ecus, comm, deadlines })
}

impl Manifest {
    /// Line-oriented `key = value` text with a fixed key order.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "manifest = 1");
        let _ = writeln!(w, "project = {}", self.project);
        let _ = writeln!(w, "base_tick_ms = {}", self.base_tick_ms);
        for e in &self.ecus {
            let _ = writeln!(w, "\n[ecu {}]", e.name);
            for t in &e.tasks {
                let _ = writeln!(w, "task {} period_ms = {}", t.name, t.period_ms);
                let _ = writeln!(w, "task {} priority = {}", t.name, t.priority);
                for (k, (b, c)) in t.invocations.iter().enumerate() {
                    let _ = writeln!(w, "task {} invoke {} = {} {}", t.name, k + 1, b, c);
                }
            }
        }
        let _ = writeln!(w, "\n[comm]");
        for r in &self.comm {
            let _ = writeln!(
                w,
                "signal {} = sender {} receiver {} bus {} frame {} slot {} period_ms {}",
                r.signal, r.sender, r.receiver, r.bus, r.frame, r.slot, r.period_ms
            );
        }
        let _ = writeln!(w, "\n[deadlines]");
        for d in &self.deadlines {
            let _ = writeln!(w, "flow {} -> {} = delays {} ticks {} ms {}", d.from, d.to, d.delays, d.ticks, d.ms);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_str;

    fn project(ecu_c: &str, framed: bool) -> Project {
        let src = format!(
            "project M; level LA; base_tick 10; system Top;
             component PB {{ in a : int; out y : int; function {{ y = a; }} }}
             component CB {{ in x : int; out z : int; function {{ z = x; }} }}
             cluster P {{ period 20; in a : int @ every(2); out y : int @ every(2); behavior PB; }}
             cluster C {{ period 10; in x : int @ every(2); out z : int @ every(2); behavior CB; }}
             component Top {{ in a : int @ every(2); out z : int @ every(2); dfd {{ block p : P; channel a -> p.a; block d : delay(0); block c : C; channel p.y -> d.x; channel d.y -> c.x; channel c.z -> z; }} }}
             ecu E1; ecu E2; bus CAN connects E1, E2;
             task T1 on E1 period 10 priority 2; task T2 on {ecu_c} period 10 priority 1;
             frame F on CAN {{ slot s0; slot s1; }}
             deploy P -> T1; deploy C -> T2; {sig}",
            sig = if framed { "signal P.y -> F.s1;" } else { "" }
        );
        parse_str(&src).unwrap_or_else(|d| panic!("{}", crate::diag::render(&d)))
    }

    #[test]
    fn two_ecus_one_row() {
        let m = export_manifest(&project("E2", true)).unwrap();
        assert_eq!(m.comm.len(), 1);
        assert_eq!(m.comm[0].frame, "F");
        assert_eq!(m.comm[0].sender, "E1");
        assert_eq!(m.deadlines, vec![Deadline { from: "p.y".into(), to: "c.x".into(), delays: 1, ticks: 2, ms: 20 }]);
        let text = m.render();
        assert!(text.contains("signal P.y = sender E1 receiver E2 bus CAN frame F slot s1 period_ms 20\n"), "{text}");
        assert!(text.contains("task T2 invoke 1 = c C\n"));
    }

    #[test]
    fn one_ecu_empty_matrix() {
        let m = export_manifest(&project("E1", false)).unwrap();
        assert!(m.comm.is_empty());
        assert_eq!(m.ecus[0].tasks.len(), 2);
    }

    #[test]
    fn unmapped_signal_rejected() {
        assert!(matches!(export_manifest(&project("E2", false)), Err(TransformError::UncheckedDeployment(_))));
    }

    #[test]
    fn render_is_stable() {
        let p = project("E2", true);
        assert_eq!(export_manifest(&p).unwrap().render(), export_manifest(&p).unwrap().render());
    }
}
