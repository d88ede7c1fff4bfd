//! Instantaneous-dependency graphs, evaluation order and loop detection.

use crate::diag::{code, Diagnostic};
use crate::model::*;
use std::collections::{BTreeSet, VecDeque};

/// Evaluation order of the blocks of one network within a tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub component: String,
    pub order: Vec<String>,
}

/// Clock references of a block that do not appear in its syntax.
pub type ExtraRefs<'a> = &'a dyn Fn(&Block) -> Vec<Endpoint>;

fn syntactic_refs(b: &Block) -> Vec<Endpoint> {
    let clock = match &b.kind {
        BlockKind::Instance { gate: Some(c), .. } | BlockKind::When(c) | BlockKind::Delay { clock: Some(c), .. } => c,
        _ => return Vec::new(),
    };
    clock.flows().into_iter().cloned().collect()
}

/// Adjacency lists (by block index, sorted by target name) of the
/// instantaneous dependencies. Data edges into delay blocks are dropped, as
/// are edges over delayed channels.
pub fn dependency_graph(net: &Network, extra: ExtraRefs) -> Vec<Vec<usize>> {
    let idx = |name: &str| net.blocks.iter().position(|b| b.name == name);
    let mut edges: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); net.blocks.len()];
    for ch in &net.channels {
        if ch.kind != ChannelKind::Instant {
            continue;
        }
        let Some(src) = ch.source.block_name().and_then(idx) else { continue };
        for sink in &ch.sinks {
            let Some(dst) = sink.block_name().and_then(idx) else { continue };
            if !matches!(net.blocks[dst].kind, BlockKind::Delay { .. }) {
                edges[src].insert(dst);
            }
        }
    }
    for (dst, b) in net.blocks.iter().enumerate() {
        for r in syntactic_refs(b).into_iter().chain(extra(b)) {
            if let Some(src) = r.block_name().and_then(idx) {
                if src != dst {
                    edges[src].insert(dst);
                }
            }
        }
    }
    edges
        .into_iter()
        .map(|s| {
            let mut v: Vec<usize> = s.into_iter().collect();
            v.sort_by(|a, b| net.blocks[*a].name.cmp(&net.blocks[*b].name));
            v
        })
        .collect()
}

/// Shortest cycle through the lexicographically smallest block lying on
/// any cycle.
pub fn canonical_cycle(names: &[&str], adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by_key(|&i| names[i]);
    for v in order {
        // BFS from v's successors back to v.
        let mut prev: Vec<Option<usize>> = vec![None; names.len()];
        let mut seen = vec![false; names.len()];
        let mut queue = VecDeque::new();
        for &w in &adj[v] {
            if w == v {
                return Some(vec![v]);
            }
            if !seen[w] {
                seen[w] = true;
                prev[w] = Some(v);
                queue.push_back(w);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if w == v {
                    let mut path = vec![u];
                    let mut cur = u;
                    while let Some(p) = prev[cur] {
                        if p == v {
                            break;
                        }
                        path.push(p);
                        cur = p;
                    }
                    path.push(v);
                    path.reverse();
                    return Some(path);
                }
                if !seen[w] {
                    seen[w] = true;
                    prev[w] = Some(u);
                    queue.push_back(w);
                }
            }
        }
    }
    None
}

/// Topological order with declaration-order tie-breaking, or the loop.
pub fn causality_check_with(owner: &str, net: &Network, extra: ExtraRefs) -> Result<Schedule, Diagnostic> {
    let adj = dependency_graph(net, extra);
    let n = net.blocks.len();
    let mut indeg = vec![0usize; n];
    for outs in &adj {
        for &w in outs {
            indeg[w] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(net.blocks[v].name.clone());
        for &w in &adj[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.insert(w);
            }
        }
    }
    if order.len() == n {
        return Ok(Schedule { component: owner.to_string(), order });
    }
    let names: Vec<&str> = net.blocks.iter().map(|b| b.name.as_str()).collect();
    let cycle = canonical_cycle(&names, &adj).expect("Kahn stalled, so a cycle exists");
    let mut text: Vec<&str> = cycle.iter().map(|&i| names[i]).collect();
    text.push(names[cycle[0]]);
    Err(Diagnostic::error(code::INSTANT_LOOP, owner, format!("instantaneous loop: {}", text.join(" -> "))))
}

/// Causality check using only the references visible in the network.
pub fn causality_check(owner: &str, net: &Network) -> Result<Schedule, Diagnostic> {
    causality_check_with(owner, net, &|_| Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(blocks: &[(&str, BlockKind)], wires: &[(&str, &str, bool)]) -> Network {
        Network {
            blocks: blocks.iter().map(|(n, k)| Block { name: n.to_string(), kind: k.clone() }).collect(),
            channels: wires
                .iter()
                .map(|(a, b, delayed)| Channel {
                    source: Endpoint::block(*a, "y"),
                    sinks: vec![Endpoint::block(*b, "x")],
                    kind: if *delayed { ChannelKind::Delay { init: Literal::Int(0) } } else { ChannelKind::Instant },
                    clock: None,
                })
                .collect(),
        }
    }

    #[test]
    fn self_loop() {
        let n = net(&[("f", BlockKind::instance("F"))], &[("f", "f", false)]);
        let d = causality_check("C", &n).unwrap_err();
        assert_eq!(d.code, code::INSTANT_LOOP);
        assert_eq!(d.message, "instantaneous loop: f -> f");
        let n = net(&[("f", BlockKind::instance("F"))], &[("f", "f", true)]);
        assert_eq!(causality_check("C", &n).unwrap().order, vec!["f"]);
    }

    #[test]
    fn delayed_link_consumer_first() {
        let n = net(
            &[("a", BlockKind::instance("F")), ("b", BlockKind::instance("F"))],
            &[("a", "b", true), ("b", "a", false)],
        );
        assert_eq!(causality_check("C", &n).unwrap().order, vec!["b", "a"]);
    }

    #[test]
    fn delay_block_breaks_loop() {
        let d = BlockKind::Delay { init: Some(Literal::Int(0)), clock: None };
        let n = net(&[("a", BlockKind::instance("F")), ("d", d)], &[("a", "d", false), ("d", "a", false)]);
        assert_eq!(causality_check("C", &n).unwrap().order, vec!["d", "a"]);
    }

    #[test]
    fn canonical_cycle_reported() {
        let n = net(
            &[("z", BlockKind::instance("F")), ("m", BlockKind::instance("F")), ("b", BlockKind::instance("F"))],
            &[("z", "m", false), ("m", "b", false), ("b", "z", false)],
        );
        assert_eq!(causality_check("C", &n).unwrap_err().message, "instantaneous loop: b -> z -> m -> b");
    }
}
