//! SSD hierarchy flattening into a cluster communication network.

use super::{fresh, port_for_flow, prune, root_name, ssd_to_dfd, TransformError};
use crate::analysis::{analyze, Analysis};
use crate::model::*;
use num_integer::Integer;
use std::collections::{BTreeMap, BTreeSet};

/// Nesting depth of SSD instances below `name`.
fn ssd_depth(p: &Project, name: &str, guard: usize) -> usize {
    let Some(Definition::Ssd(n)) = p.component(name).map(|c| &c.def) else { return 0 };
    if guard == 0 {
        return 0;
    }
    n.blocks
        .iter()
        .filter_map(|b| match &b.kind {
            BlockKind::Instance { of, .. } if matches!(p.component(of).map(|c| &c.def), Some(Definition::Ssd(_))) => {
                Some(1 + ssd_depth(p, of, guard - 1))
            }
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// Dissolves the top `depth` SSD levels below the system and turns every
/// remaining top-level instance into a cluster whose ports carry the flow
/// clocks made explicit. Channel delays of dissolved levels become delay
/// blocks, so observable traces are unchanged.
pub fn flatten_to_ccd(p: &Project, depth: usize) -> Result<Project, TransformError> {
    let an = analyze(p).map_err(TransformError::InvalidSource)?;
    let root = root_name(p)?;
    let rc = p.component(&root).ok_or_else(|| TransformError::UnknownComponent(root.clone()))?;
    let Some(net) = rc.def.network() else {
        return Err(TransformError::Unsupported(format!("system '{root}' is not a network")));
    };
    let max = ssd_depth(p, &root, p.components.len());
    if depth > max {
        return Err(TransformError::DepthExceedsHierarchy { depth, max });
    }

    // Current block name -> (owner frame, block name in that frame).
    let mut origin: BTreeMap<String, (String, String)> =
        net.blocks.iter().map(|b| (b.name.clone(), (root.clone(), b.name.clone()))).collect();
    let mut flat = if depth == 0 { net.clone() } else { ssd_to_dfd(net) };
    for b in &flat.blocks {
        origin.entry(b.name.clone()).or_insert_with(|| (root.clone(), b.name.clone()));
    }
    let mut dissolved = BTreeSet::new();
    for _ in 0..depth {
        flat = dissolve_level(p, &an, flat, &mut origin, &mut dissolved)?;
    }

    let mut out = p.clone();
    out.level = Level::La;
    let mut made: Vec<Cluster> = Vec::new();
    for b in &mut flat.blocks {
        let BlockKind::Instance { of, .. } = &mut b.kind else { continue };
        if p.cluster(of).is_some() {
            continue;
        }
        let (owner, orig) = &origin[&b.name];
        let cl = make_cluster(p, &an, of, owner, orig)?;
        let existing = made
            .iter()
            .chain(&out.clusters)
            .find(|c| c.behavior == cl.behavior && c.ports == cl.ports && c.period_ms == cl.period_ms);
        let name = match existing {
            Some(c) => c.name.clone(),
            None => {
                let taken = |n: &str| {
                    out.component(n).is_some() || out.cluster(n).is_some() || made.iter().any(|c| c.name == n)
                };
                let name = fresh(&format!("{of}_Cl"), &taken);
                made.push(Cluster { name: name.clone(), ..cl });
                name
            }
        };
        *of = name;
    }
    out.clusters.extend(made);
    let rc = out.component_mut(&root).expect("root");
    rc.def = match (&rc.def, depth) {
        (Definition::Ssd(_), 0) => Definition::Ssd(flat),
        _ => Definition::Dfd(flat),
    };
    prune(&mut out, &dissolved);
    Ok(out)
}

fn make_cluster(p: &Project, an: &Analysis, of: &str, owner: &str, block: &str) -> Result<Cluster, TransformError> {
    let sig = p.signature(of).ok_or_else(|| TransformError::UnknownComponent(of.into()))?;
    let mut ports = Vec::new();
    let mut period = 0u32;
    for q in sig {
        let ty = an.types.port(of, &q.name).cloned().or_else(|| q.ty.clone());
        if ty.is_none() {
            return Err(TransformError::Unsupported(format!("port {of}.{} has no type", q.name)));
        }
        let clock = an.clocks.get(owner, &Endpoint::block(block, q.name.clone()));
        let port = port_for_flow(&q.name, q.dir, ty, clock);
        if let Some(n) = port.clock.as_ref().and_then(ClockExpr::period) {
            period = period.gcd(&n);
        }
        ports.push(Port { actuator: q.actuator, range: q.range, ..port });
    }
    Ok(Cluster { name: String::new(), period_ms: period.max(1) * p.base_tick_ms, ports, behavior: of.to_string() })
}

fn dissolve_level(
    p: &Project,
    an: &Analysis,
    mut net: Network,
    origin: &mut BTreeMap<String, (String, String)>,
    dissolved: &mut BTreeSet<String>,
) -> Result<Network, TransformError> {
    let targets: Vec<(String, String)> = net
        .blocks
        .iter()
        .filter_map(|b| match &b.kind {
            BlockKind::Instance { of, .. } if matches!(p.component(of).map(|c| &c.def), Some(Definition::Ssd(_))) => {
                Some((b.name.clone(), of.clone()))
            }
            _ => None,
        })
        .collect();
    for (b, of) in targets {
        let (owner, orig) = origin[&b].clone();
        match an.clocks.activation(&owner, &orig) {
            None | Some(ClockExpr::Base) => {}
            Some(k) => {
                return Err(TransformError::Unsupported(format!(
                    "instance {owner}/{orig} runs on clock {k}; only base-clocked subsystems can be dissolved"
                )))
            }
        }
        dissolved.insert(of.clone());
        let inner = ssd_to_dfd(p.component(&of).and_then(|c| c.def.network()).expect("SSD"));
        // Fresh names for inner blocks.
        let mut rename = BTreeMap::new();
        for ib in &inner.blocks {
            let taken = |n: &str| net.blocks.iter().any(|x| x.name == n) || rename.values().any(|v: &String| v == n);
            let name = fresh(&format!("{b}_{}", ib.name), &taken);
            origin.insert(name.clone(), (of.clone(), ib.name.clone()));
            rename.insert(ib.name.clone(), name);
        }
        net.blocks.retain(|x| x.name != b);
        net.blocks
            .extend(inner.blocks.iter().map(|ib| Block { name: rename[&ib.name].clone(), kind: ib.kind.clone() }));

        // Source of each input junction in the outer network.
        let driver = |net: &Network, port: &str| {
            net.channels.iter().find(|c| c.sinks.contains(&Endpoint::block(b.clone(), port))).map(|c| c.source.clone())
        };
        let map_ep = |e: &Endpoint, net: &Network| -> Option<Endpoint> {
            match e {
                Endpoint::Block(ib, q) => Some(Endpoint::block(rename[ib].clone(), q.clone())),
                Endpoint::Port(x) => driver(net, x),
            }
        };
        let outer_net = net.clone();
        for ch in &inner.channels {
            let clock = ch.clock.as_ref().map(|k| k.map_flows(&|e| map_ep(e, &outer_net).unwrap_or_else(|| e.clone())));
            let mut to_ports = Vec::new();
            let mut sinks = Vec::new();
            for s in &ch.sinks {
                match s {
                    Endpoint::Port(o) => to_ports.push(o.clone()),
                    other => sinks.push(map_ep(other, &outer_net).expect("block endpoint")),
                }
            }
            match &ch.source {
                Endpoint::Port(x) => {
                    // Input junction: extend the outer driving channel.
                    if let Some(outer) =
                        net.channels.iter_mut().find(|c| c.sinks.contains(&Endpoint::block(b.clone(), x.clone())))
                    {
                        outer.sinks.extend(sinks);
                    }
                }
                src => {
                    let src = map_ep(src, &outer_net).expect("block endpoint");
                    if !sinks.is_empty() {
                        let c = Channel { source: src.clone(), sinks, kind: ch.kind.clone(), clock: clock.clone() };
                        net.channels.push(c);
                    }
                    // Output junctions: outer readers of b.o now read the inner source.
                    for o in to_ports {
                        let from = Endpoint::block(b.clone(), o);
                        for c in net.channels.iter_mut().filter(|c| c.source == from) {
                            c.source = src.clone();
                        }
                    }
                }
            }
        }
        // Drop the dissolved instance's input sinks.
        for c in &mut net.channels {
            c.sinks.retain(|s| s.block_name() != Some(b.as_str()));
        }
        net.channels.retain(|c| !c.sinks.is_empty() && c.source.block_name() != Some(b.as_str()));
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_str;
    use crate::sim::{compare_traces, simulate, Comparison, SimOptions};
    use crate::transform::structural_errors;

    const SRC: &str = "project T;\nlevel FDA;\nbase_tick 10;\nsystem Top;\n\
        component Inc { in x : int; out y : int; function { y = x + 1; } }\n\
        component Dbl { in x : int; out y : int; function { y = 2 * x; } }\n\
        component Pair { in x : int; out y : int; ssd { sub i : Inc; sub d : Dbl; channel x -> i.x; channel i.y -> d.x; channel d.y -> y; } }\n\
        component Top { in a : int; out b : int; ssd { sub p : Pair; sub q : Inc; channel a -> p.x; channel p.y -> q.x; channel q.y -> b; } }\n";

    fn check_equivalent(depth: usize) -> Project {
        let p = parse_str(SRC).unwrap();
        let q = flatten_to_ccd(&p, depth).unwrap();
        assert_eq!(structural_errors(&q), vec![]);
        analyze(&q).unwrap();
        let input = "tick,a\n1,1\n2,2\n3,3\n4,4\n5,5\n6,6\n7,7\n";
        let a = simulate(&p, None, input, 7, SimOptions::default()).unwrap();
        let b = simulate(&q, None, input, 7, SimOptions::default()).unwrap();
        assert_eq!(compare_traces(&a, &b).unwrap(), Comparison::Equal, "{}\n{}", a.to_csv(), b.to_csv());
        q
    }

    #[test]
    fn depth_zero_keeps_channels() {
        let q = check_equivalent(0);
        assert_eq!(q.clusters.len(), 2);
        assert!(matches!(q.component("Top").unwrap().def, Definition::Ssd(_)));
    }

    #[test]
    fn depth_one_preserves_delays() {
        let q = check_equivalent(1);
        let Definition::Dfd(n) = &q.component("Top").unwrap().def else { panic!() };
        let delays = n.blocks.iter().filter(|b| matches!(b.kind, BlockKind::Delay { .. })).count();
        assert_eq!(delays, 6);
        assert_eq!(q.clusters.iter().map(|c| c.behavior.as_str()).collect::<Vec<_>>(), vec!["Inc", "Dbl"]);
        assert!(q.component("Pair").is_none());
    }

    #[test]
    fn depth_beyond_hierarchy() {
        let p = parse_str(SRC).unwrap();
        assert_eq!(flatten_to_ccd(&p, 2), Err(TransformError::DepthExceedsHierarchy { depth: 2, max: 1 }));
    }
}
