//! Architecture rules: actuator conflicts, inter-cluster delays and
//! deployment consistency.

use super::clocks::port_clocks;
use super::TypeEnv;
use crate::diag::{code, Diagnostic};
use crate::model::*;
use std::collections::BTreeMap;

pub const COORDINATION_HINT: &str = "introduce a coordinating functionality";

/// An actuator port written by more than one channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    /// Component whose network contains the writers.
    pub component: String,
    pub actuator: Endpoint,
    pub writers: Vec<Endpoint>,
    pub suggestion: String,
}

impl Conflict {
    pub fn to_diagnostic(&self) -> Diagnostic {
        let writers: Vec<String> = self.writers.iter().map(Endpoint::to_string).collect();
        Diagnostic::warning(
            code::ACTUATOR_CONFLICT,
            format!("{}/{}", self.component, self.actuator),
            format!("{} writers ({}); {}", writers.len(), writers.join(", "), self.suggestion),
        )
    }
}

/// Whether `e` is an actuator port inside `owner`'s network.
pub fn is_actuator(p: &Project, owner: &str, net: &Network, e: &Endpoint) -> bool {
    let port = match e {
        Endpoint::Port(name) => p.signature(owner).and_then(|s| s.iter().find(|q| q.name == *name)),
        Endpoint::Block(b, name) => match net.block(b).map(|b| &b.kind) {
            Some(BlockKind::Instance { of, .. }) => p.signature(of).and_then(|s| s.iter().find(|q| q.name == *name)),
            _ => None,
        },
    };
    port.is_some_and(|q| q.actuator)
}

/// One conflict per actuator port that has two or more writer channels.
pub fn faa_conflict_check(p: &Project) -> Vec<Conflict> {
    let mut out = Vec::new();
    for c in &p.components {
        let Some(net) = c.def.network() else { continue };
        let mut writers: BTreeMap<&Endpoint, Vec<Endpoint>> = BTreeMap::new();
        let mut order: Vec<&Endpoint> = Vec::new();
        for ch in &net.channels {
            for sink in &ch.sinks {
                if is_actuator(p, &c.name, net, sink) {
                    if !writers.contains_key(sink) {
                        order.push(sink);
                    }
                    writers.entry(sink).or_default().push(ch.source.clone());
                }
            }
        }
        for a in order {
            let w = &writers[a];
            if w.len() >= 2 {
                out.push(Conflict {
                    component: c.name.clone(),
                    actuator: a.clone(),
                    writers: w.clone(),
                    suggestion: COORDINATION_HINT.into(),
                });
            }
        }
    }
    out
}

/// Platform-specific well-definedness rules for cluster communication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetProfile {
    pub name: String,
    /// Slower-to-faster communication needs at least one delay.
    pub requires_delay_slow_to_fast: bool,
    /// Faster-to-slower communication may be delay-free.
    pub fast_to_slow_delay_free: bool,
}

impl TargetProfile {
    pub fn osek() -> Self {
        TargetProfile { name: "osek".into(), requires_delay_slow_to_fast: true, fast_to_slow_delay_free: true }
    }

    /// Known profiles: `osek` (default), `strict` (delays in both directions)
    /// and `permissive` (no rate rules).
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "osek" => Some(Self::osek()),
            "strict" => Some(TargetProfile {
                name: "strict".into(),
                requires_delay_slow_to_fast: true,
                fast_to_slow_delay_free: false,
            }),
            "permissive" => Some(TargetProfile {
                name: "permissive".into(),
                requires_delay_slow_to_fast: false,
                fast_to_slow_delay_free: true,
            }),
            _ => None,
        }
    }
}

impl Default for TargetProfile {
    fn default() -> Self {
        Self::osek()
    }
}

/// A flow from one cluster instance to another inside some network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterFlow {
    pub network: String,
    pub producer: String,
    pub producer_cluster: String,
    pub port: String,
    pub consumer: String,
    pub consumer_cluster: String,
    pub consumer_port: String,
    /// Delays on the path: delay blocks, delayed channels.
    pub delays: u32,
}

fn cluster_of<'a>(p: &'a Project, net: &Network, block: &str) -> Option<&'a Cluster> {
    match &net.block(block)?.kind {
        BlockKind::Instance { of, .. } => p.cluster(of),
        _ => None,
    }
}

/// All producer/consumer cluster pairs, following channels through delay,
/// when, hold and merge blocks.
pub fn cluster_flows(p: &Project) -> Vec<ClusterFlow> {
    let mut out = Vec::new();
    for c in &p.components {
        let Some(net) = c.def.network() else { continue };
        for b in &net.blocks {
            let Some(cl) = cluster_of(p, net, &b.name) else { continue };
            for port in cl.ports.iter().filter(|q| q.dir == Direction::Out) {
                let mut sinks = Vec::new();
                trace(p, net, &Endpoint::block(b.name.clone(), port.name.clone()), 0, 0, &mut sinks);
                for (consumer, consumer_port, delays) in sinks {
                    let cc = cluster_of(p, net, &consumer).expect("traced to a cluster");
                    out.push(ClusterFlow {
                        network: c.name.clone(),
                        producer: b.name.clone(),
                        producer_cluster: cl.name.clone(),
                        port: port.name.clone(),
                        consumer,
                        consumer_cluster: cc.name.clone(),
                        consumer_port,
                        delays,
                    });
                }
            }
        }
    }
    out
}

fn trace(p: &Project, net: &Network, from: &Endpoint, delays: u32, depth: usize, out: &mut Vec<(String, String, u32)>) {
    if depth > net.blocks.len() {
        return;
    }
    for ch in net.channels.iter().filter(|ch| ch.source == *from) {
        let d = delays + u32::from(ch.kind != ChannelKind::Instant);
        for sink in &ch.sinks {
            let Endpoint::Block(b, q) = sink else { continue };
            let Some(block) = net.block(b) else { continue };
            match &block.kind {
                BlockKind::Instance { .. } => {
                    if cluster_of(p, net, b).is_some() {
                        out.push((b.clone(), q.clone(), d));
                    }
                }
                BlockKind::Delay { .. } => trace(p, net, &Endpoint::block(b.clone(), "y"), d + 1, depth + 1, out),
                _ => trace(p, net, &Endpoint::block(b.clone(), "y"), d, depth + 1, out),
            }
        }
    }
}

/// Rate rules for inter-cluster flows under a target profile.
pub fn ccd_welldefined(p: &Project, profile: &TargetProfile) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let types = TypeEnv::default();
    for f in cluster_flows(p) {
        let prod = p.cluster(&f.producer_cluster).expect("cluster");
        let cons = p.cluster(&f.consumer_cluster).expect("cluster");
        let path = format!("{}/{}.{}->{}.{}", f.network, f.producer, f.port, f.consumer, f.consumer_port);
        let clock = &port_clocks(p, &types, &prod.name, &prod.ports)[&Endpoint::port(f.port.clone())];
        if clock.period().is_none() {
            out.push(Diagnostic::warning(
                code::APERIODIC_EXEMPT,
                path,
                format!("flow clock {clock} is not periodic; rate rules do not apply"),
            ));
            continue;
        }
        let slow_to_fast = prod.period_ms > cons.period_ms;
        let fast_to_slow = prod.period_ms < cons.period_ms;
        let needs =
            (slow_to_fast && profile.requires_delay_slow_to_fast) || (fast_to_slow && !profile.fast_to_slow_delay_free);
        if needs && f.delays == 0 {
            out.push(Diagnostic::error(
                code::MISSING_DELAY,
                path,
                format!(
                    "{} ms producer feeds {} ms consumer without a delay (profile {})",
                    prod.period_ms, cons.period_ms, profile.name
                ),
            ));
        }
    }
    out
}

/// Mapping of clusters to tasks and of inter-ECU signals to frames.
pub fn deployment_check(p: &Project) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let empty_tech = TechArch::default();
    let tech = p.tech.as_ref().unwrap_or(&empty_tech);
    let empty_dep = Deployment::default();
    let dep = p.deployment.as_ref().unwrap_or(&empty_dep);
    let task_of =
        |cluster: &str| dep.cluster_to_task.iter().find(|(c, _)| c == cluster).and_then(|(_, t)| tech.task(t));
    for cl in &p.clusters {
        match task_of(&cl.name) {
            None => out.push(Diagnostic::error(code::UNMAPPED_CLUSTER, &cl.name, "cluster is not mapped to a task")),
            Some(t) if t.period_ms == 0 || cl.period_ms % t.period_ms != 0 => out.push(Diagnostic::error(
                code::PERIOD_MISMATCH,
                &cl.name,
                format!("task {} period {} ms does not divide cluster period {} ms", t.name, t.period_ms, cl.period_ms),
            )),
            Some(_) => {}
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for f in cluster_flows(p) {
        let (Some(tp), Some(tc)) = (task_of(&f.producer_cluster), task_of(&f.consumer_cluster)) else { continue };
        if tp.ecu == tc.ecu || !seen.insert((f.producer_cluster.clone(), f.port.clone(), tc.ecu.clone())) {
            continue;
        }
        let path = format!("{}.{}", f.producer_cluster, f.port);
        let mapping = dep.signal_to_frame.iter().find(|s| s.cluster == f.producer_cluster && s.port == f.port);
        let Some(m) = mapping else {
            out.push(Diagnostic::error(
                code::UNMAPPED_SIGNAL,
                path,
                format!("signal from {} to {} has no frame slot", tp.ecu, tc.ecu),
            ));
            continue;
        };
        let bus = tech.frame(&m.frame).and_then(|fr| tech.bus(&fr.bus));
        let reaches = bus.is_some_and(|b| b.ecus.contains(&tp.ecu) && b.ecus.contains(&tc.ecu));
        if !reaches {
            out.push(Diagnostic::error(
                code::BUS_UNREACHABLE,
                path,
                format!("frame {} is not on a bus connecting {} and {}", m.frame, tp.ecu, tc.ecu),
            ));
        }
    }
    out
}
