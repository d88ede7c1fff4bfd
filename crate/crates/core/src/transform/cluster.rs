//! Clock-based clustering of the top-level network.

use super::{endpoint_stem, fresh, port_for_flow, root_name, ssd_to_dfd, TransformError};
use crate::analysis::{analyze, cluster_flows};
use crate::diag::{code, Diagnostic};
use crate::model::*;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClusterOptions {
    /// Route every delay-free slow-to-fast flow through a new delay block
    /// with an absent initial buffer.
    pub insert_delays: bool,
}

/// Root flow imported into a group: source, channel kind and clock.
type ImportKey = (Endpoint, ChannelKind, Option<ClockExpr>);

struct Group {
    name: String,
    period: u32,
    net: Network,
    ports: Vec<Port>,
    exports: Vec<(Endpoint, String)>,
    imports: Vec<(ImportKey, String)>,
}

impl Group {
    fn taken(&self, n: &str) -> bool {
        self.ports.iter().any(|q| q.name == n)
    }
}

/// Partitions the instance blocks of the system network by the period of
/// their activation clock. Each partition becomes a cluster `C_<ms>ms`
/// whose behavior is a DFD holding the partition's blocks; flows between
/// partitions go through cluster ports. Blocks without a periodic clock
/// stay at the top level and are reported as warnings.
pub fn cluster_by_clock(p: &Project, opts: ClusterOptions) -> Result<(Project, Vec<Diagnostic>), TransformError> {
    let an = analyze(p).map_err(TransformError::InvalidSource)?;
    let root = root_name(p)?;
    let rc = p.component(&root).ok_or_else(|| TransformError::UnknownComponent(root.clone()))?;
    let Some(net) = rc.def.network() else {
        return Err(TransformError::Unsupported(format!("system '{root}' is not a network")));
    };
    let flat = ssd_to_dfd(net);
    let mut diags = Vec::new();

    // Period of every clusterable block.
    let mut period_of: BTreeMap<&str, u32> = BTreeMap::new();
    for b in &flat.blocks {
        let BlockKind::Instance { of, .. } = &b.kind else { continue };
        let alpha = an.clocks.activation(&root, &b.name);
        let period = match p.cluster(of) {
            Some(cl) => Some((cl.period_ms / p.base_tick_ms.max(1)).max(1)),
            None => alpha.and_then(ClockExpr::period),
        };
        match period {
            Some(n) => {
                period_of.insert(&b.name, n);
            }
            None => diags.push(Diagnostic::warning(
                code::UNCLOCKED_BLOCK,
                format!("{root}/{}", b.name),
                format!(
                    "activation clock {} is not periodic; block left unclustered",
                    alpha.unwrap_or(&ClockExpr::Base)
                ),
            )),
        }
    }

    let mut out = p.clone();
    out.level = Level::La;
    let mut taken: BTreeSet<String> = p
        .components
        .iter()
        .map(|c| c.name.clone())
        .chain(p.clusters.iter().map(|c| c.name.clone()))
        .chain(p.enums.iter().map(|e| e.name.clone()))
        .collect();
    let mut fresh_global = |stem: String| {
        let n = fresh(&stem, &|n| taken.contains(n));
        taken.insert(n.clone());
        n
    };
    let periods: BTreeSet<u32> = period_of.values().copied().collect();
    let mut groups: Vec<Group> = periods
        .iter()
        .map(|&n| Group {
            name: fresh_global(format!("C_{}ms", n * p.base_tick_ms)),
            period: n,
            net: Network::default(),
            ports: Vec::new(),
            exports: Vec::new(),
            imports: Vec::new(),
        })
        .collect();
    let mut assign: BTreeMap<String, usize> =
        period_of.iter().map(|(b, n)| (b.to_string(), periods.iter().position(|x| x == n).expect("period"))).collect();
    // Builtin blocks whose neighbors all sit in one partition join it.
    loop {
        let mut changed = false;
        for b in &flat.blocks {
            if matches!(b.kind, BlockKind::Instance { .. }) || assign.contains_key(&b.name) {
                continue;
            }
            let of = |e: &Endpoint| e.block_name().and_then(|x| assign.get(x)).copied();
            let mut near: BTreeSet<Option<usize>> = BTreeSet::new();
            for ch in &flat.channels {
                if ch.sinks.iter().any(|s| s.block_name() == Some(b.name.as_str())) {
                    near.insert(of(&ch.source));
                }
                if ch.source.block_name() == Some(b.name.as_str()) {
                    near.extend(ch.sinks.iter().map(of));
                }
            }
            if let BlockKind::When(k) | BlockKind::Delay { clock: Some(k), .. } = &b.kind {
                near.extend(k.flows().into_iter().map(of));
            }
            if let (1, Some(Some(g))) = (near.len(), near.first()) {
                assign.insert(b.name.clone(), *g);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let gi = |b: &str| assign.get(b).copied();
    let group_of = |e: &Endpoint| e.block_name().and_then(gi);

    let mut root_net = Network::default();
    for g in &groups {
        root_net.blocks.push(Block { name: g.name.clone(), kind: BlockKind::instance(g.name.clone()) });
    }
    let mut unwrapped = BTreeSet::new();
    for b in &flat.blocks {
        let Some(g) = gi(&b.name) else {
            root_net.blocks.push(b.clone());
            continue;
        };
        let clock = match &b.kind {
            BlockKind::Instance { gate: Some(k), .. }
            | BlockKind::When(k)
            | BlockKind::Delay { clock: Some(k), .. } => Some(k),
            _ => None,
        };
        if clock.is_some_and(|k| k.flows().iter().any(|e| group_of(e) != Some(g))) {
            return Err(TransformError::Unsupported(format!(
                "clock of {root}/{} reads flows outside its cluster",
                b.name
            )));
        }
        let BlockKind::Instance { of, gate } = &b.kind else {
            groups[g].net.blocks.push(b.clone());
            continue;
        };
        let of = match p.cluster(of) {
            Some(cl) => {
                unwrapped.insert(cl.name.clone());
                cl.behavior.clone()
            }
            None => of.clone(),
        };
        groups[g].net.blocks.push(Block { name: b.name.clone(), kind: BlockKind::Instance { of, gate: gate.clone() } });
    }

    // Type and clock of a flow of the flattened network in the original frame.
    let origin = |e: &Endpoint| -> Endpoint {
        match e {
            Endpoint::Block(d, _) if net.block(d).is_none() => flat
                .channels
                .iter()
                .find(|c| c.sinks.contains(&Endpoint::block(d.clone(), "x")))
                .map(|c| c.source.clone())
                .unwrap_or_else(|| e.clone()),
            _ => e.clone(),
        }
    };
    // Name of the flow feeding `e` through any chain of delay blocks.
    let named = |e: &Endpoint| -> String {
        let mut e = e.clone();
        for _ in 0..flat.blocks.len() {
            let Endpoint::Block(d, _) = &e else { break };
            if !matches!(flat.block(d).map(|b| &b.kind), Some(BlockKind::Delay { .. })) {
                break;
            }
            let Some(c) = flat.channels.iter().find(|c| c.sinks.contains(&Endpoint::block(d.clone(), "x"))) else {
                break;
            };
            e = c.source.clone();
        }
        endpoint_stem(&e)
    };
    let port_of = |e: &Endpoint, name: &str, dir: Direction| -> Result<Port, TransformError> {
        let o = origin(e);
        let ty = an.types.get(&root, &o).cloned();
        if ty.is_none() {
            return Err(TransformError::Unsupported(format!("flow {root}/{o} has no type")));
        }
        Ok(port_for_flow(name, dir, ty, an.clocks.get(&root, &o)))
    };

    for ch in &flat.channels {
        let src_g = group_of(&ch.source);
        let (inside, outside): (Vec<&Endpoint>, Vec<&Endpoint>) =
            ch.sinks.iter().partition(|s| src_g.is_some() && group_of(s) == src_g);
        if let Some(k) = &ch.clock {
            let refs: BTreeSet<Option<usize>> = k.flows().iter().map(|e| group_of(e)).collect();
            let ok = refs.is_empty() || (refs.len() == 1 && (outside.is_empty() || refs.contains(&None)));
            if !ok || (!inside.is_empty() && !outside.is_empty() && !refs.is_empty()) {
                return Err(TransformError::Unsupported(format!(
                    "clock of channel from {root}/{} crosses clusters",
                    ch.source
                )));
            }
        }
        if let Some(g) = src_g {
            if !inside.is_empty() {
                groups[g].net.channels.push(Channel {
                    source: ch.source.clone(),
                    sinks: inside.into_iter().cloned().collect(),
                    kind: ch.kind.clone(),
                    clock: ch.clock.clone(),
                });
            }
        }
        if outside.is_empty() {
            continue;
        }
        let source = match src_g {
            None => ch.source.clone(),
            Some(g) => {
                let grp = &mut groups[g];
                let name = match grp.exports.iter().find(|(e, _)| *e == ch.source) {
                    Some((_, n)) => n.clone(),
                    None => {
                        let n = fresh(&endpoint_stem(&ch.source), &|n| grp.taken(n));
                        grp.ports.push(port_of(&ch.source, &n, Direction::Out)?);
                        grp.net.channels.push(Channel::instant(ch.source.clone(), vec![Endpoint::port(n.clone())]));
                        grp.exports.push((ch.source.clone(), n.clone()));
                        n
                    }
                };
                Endpoint::block(grp.name.clone(), name)
            }
        };
        let mut sinks: Vec<Endpoint> = Vec::new();
        for s in outside {
            let Some(h) = group_of(s) else {
                sinks.push(s.clone());
                continue;
            };
            let grp = &mut groups[h];
            let key = (source.clone(), ch.kind.clone(), ch.clock.clone());
            let name = match grp.imports.iter().find(|(k, _)| *k == key) {
                Some((_, n)) => n.clone(),
                None => {
                    let n = fresh(&named(&ch.source), &|n| grp.taken(n));
                    grp.ports.push(port_of(&ch.source, &n, Direction::In)?);
                    grp.net.channels.push(Channel::instant(Endpoint::port(n.clone()), Vec::new()));
                    grp.imports.push((key, n.clone()));
                    n
                }
            };
            let from = Endpoint::port(name.clone());
            grp.net.channels.iter_mut().find(|c| c.source == from).expect("import channel").sinks.push(s.clone());
            let at = Endpoint::block(grp.name.clone(), name);
            if !sinks.contains(&at) {
                sinks.push(at);
            }
        }
        root_net.channels.push(Channel { source, sinks, kind: ch.kind.clone(), clock: ch.clock.clone() });
    }

    // Behaviors before the system, clusters appended.
    let pos = out.components.iter().position(|c| c.name == root).expect("root");
    for g in &groups {
        let behavior = fresh_global(format!("{}_net", g.name));
        out.components
            .insert(pos, ComponentType::new(behavior.clone(), g.ports.clone(), Definition::Dfd(g.net.clone())));
        out.clusters.push(Cluster {
            name: g.name.clone(),
            period_ms: g.period * p.base_tick_ms,
            ports: g.ports.clone(),
            behavior,
        });
    }
    out.component_mut(&root).expect("root").def = Definition::Dfd(root_net);
    let dropped: BTreeSet<String> = unwrapped.into_iter().filter(|c| !still_used(&out, c)).collect();
    out.clusters.retain(|c| !dropped.contains(&c.name));

    if opts.insert_delays {
        insert_delays(&mut out, &root);
    }
    Ok((out, diags))
}

fn still_used(p: &Project, cluster: &str) -> bool {
    p.components
        .iter()
        .filter_map(|c| c.def.network())
        .any(|n| n.blocks.iter().any(|b| matches!(&b.kind, BlockKind::Instance { of, .. } if of == cluster)))
}

/// Splits each delay-free slow-to-fast flow of the system network with a
/// delay block right before the consumer.
fn insert_delays(p: &mut Project, root: &str) {
    let mut targets: Vec<(String, String)> = Vec::new();
    for f in cluster_flows(p) {
        if f.network != root || f.delays > 0 {
            continue;
        }
        let (Some(prod), Some(cons)) = (p.cluster(&f.producer_cluster), p.cluster(&f.consumer_cluster)) else {
            continue;
        };
        let key = (f.consumer, f.consumer_port);
        if prod.period_ms > cons.period_ms && !targets.contains(&key) {
            targets.push(key);
        }
    }
    let Some(Definition::Dfd(net)) = p.component_mut(root).map(|c| &mut c.def) else { return };
    for (consumer, port) in targets {
        let sink = Endpoint::block(consumer.clone(), port.clone());
        let name = fresh(&format!("dly_{consumer}_{port}"), &|n| net.block(n).is_some());
        let Some(ch) = net.channels.iter_mut().find(|c| c.sinks.contains(&sink)) else { continue };
        for s in &mut ch.sinks {
            if *s == sink {
                *s = Endpoint::block(name.clone(), "x");
            }
        }
        net.blocks.push(Block { name: name.clone(), kind: BlockKind::Delay { init: None, clock: None } });
        net.channels.push(Channel::instant(Endpoint::block(name, "y"), vec![sink]));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{ccd_welldefined, TargetProfile};
    use crate::frontend::{parse_str, serialize};
    use crate::sim::{compare_traces, simulate, Comparison, SimOptions};
    use crate::transform::structural_errors;

    // Fast path on every tick, slow path every 10 ticks, one flow each way.
    const SRC: &str = "project T;\nlevel FDA;\nbase_tick 10;\nsystem Top;\n\
        component Inc { in x : int; out y : int; function { y = x + 1; } }\n\
        component Add { in a : int; in b : int; out y : int; function { y = a + b; } }\n\
        component Top { in f : int; in s : int @ every(10); out fy : int; out sy : int @ every(10); \
          dfd { block fast : Inc; block slow : Add; block smp : when(every(10)); block h : hold(0); block mix : Add; \
            channel f -> fast.x; channel s -> slow.a; channel fast.y -> smp.x; channel smp.y -> slow.b; \
            channel slow.y -> h.x, sy; channel h.y -> mix.a; channel fast.y -> mix.b; channel mix.y -> fy; } }\n";

    fn input(n: usize) -> String {
        let mut t = String::from("tick,f,s\n");
        for k in 1..=n {
            let s = if k % 10 == 0 { (k / 10).to_string() } else { "-".into() };
            t.push_str(&format!("{k},{k},{s}\n"));
        }
        t
    }

    // Same model without the slow-to-fast feedback.
    fn one_way() -> String {
        SRC.replace("block mix : Add;", "")
            .replace("channel h.y -> mix.a; channel fast.y -> mix.b; channel mix.y -> fy;", "channel h.y -> fy;")
    }

    #[test]
    fn two_rates_two_clusters() {
        let p = parse_str(&one_way()).unwrap();
        let (q, diags) = cluster_by_clock(&p, ClusterOptions::default()).unwrap();
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(structural_errors(&q), vec![]);
        let names: Vec<_> = q.clusters.iter().map(|c| (c.name.as_str(), c.period_ms)).collect();
        assert_eq!(names, vec![("C_10ms", 10), ("C_100ms", 100)]);
        assert_eq!(parse_str(&serialize(&q).unwrap()).unwrap(), q);
        assert!(ccd_welldefined(&q, &TargetProfile::osek()).iter().all(|d| !d.is_error()));
        let a = simulate(&p, None, &input(40), 40, SimOptions::default()).unwrap();
        let b = simulate(&q, None, &input(40), 40, SimOptions::default()).unwrap();
        assert_eq!(compare_traces(&a, &b).unwrap(), Comparison::Equal, "{}\n{}", a.to_csv(), b.to_csv());
    }

    #[test]
    fn inserted_delays_make_ccd_clean() {
        let p = parse_str(SRC).unwrap();
        let (plain, _) = cluster_by_clock(&p, ClusterOptions::default()).unwrap();
        assert_eq!(ccd_welldefined(&plain, &TargetProfile::osek()).iter().filter(|d| d.is_error()).count(), 1);
        let (q, _) = cluster_by_clock(&p, ClusterOptions { insert_delays: true }).unwrap();
        assert_eq!(structural_errors(&q), vec![]);
        assert!(ccd_welldefined(&q, &TargetProfile::osek()).iter().all(|d| !d.is_error()));
        let Definition::Dfd(n) = &q.component("Top").unwrap().def else { panic!() };
        assert!(n.block("dly_C_10ms_h_y").is_some(), "{:?}", n.blocks);
        // Reference: the source with the same delay placed by hand.
        let shifted = SRC
            .replace("block mix : Add;", "block mix : Add; block dd : delay(-);")
            .replace("channel h.y -> mix.a;", "channel h.y -> dd.x; channel dd.y -> mix.a;");
        let r = parse_str(&shifted).unwrap();
        let a = simulate(&r, None, &input(40), 40, SimOptions::default()).unwrap();
        let b = simulate(&q, None, &input(40), 40, SimOptions::default()).unwrap();
        assert_eq!(compare_traces(&a, &b).unwrap(), Comparison::Equal, "{}\n{}", a.to_csv(), b.to_csv());
    }

    #[test]
    fn unclocked_block_is_reported() {
        let src = "project T;\nlevel FDA;\nbase_tick 10;\nsystem Top;\n\
            component Inc { in x : int; out y : int; function { y = x + 1; } }\n\
            component Top { in e : int @ present(e); out y : int @ present(e); dfd { block i : Inc; channel e -> i.x; channel i.y -> y; } }\n";
        let p = parse_str(src).unwrap();
        let (q, diags) = cluster_by_clock(&p, ClusterOptions::default()).unwrap();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, code::UNCLOCKED_BLOCK);
        assert!(q.clusters.is_empty());
    }
}
