//! Communication-matrix import: `sender,receiver,signal,period_ms` rows
//! become a partial FAA model with unspecified components.

use crate::diag::{code, Diagnostic};
use crate::model::*;
use num_integer::Integer;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub const HEADER: &str = "sender,receiver,signal,period_ms";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommMatrixRow {
    /// 1-based line in the source file, used for diagnostics.
    pub line: usize,
    pub sender: String,
    pub receiver: String,
    pub signal: String,
    pub period_ms: Option<u32>,
}

impl CommMatrixRow {
    pub fn new(sender: &str, receiver: &str, signal: &str, period_ms: Option<u32>) -> Self {
        CommMatrixRow { line: 0, sender: sender.into(), receiver: receiver.into(), signal: signal.into(), period_ms }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImportError {
    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: usize, message: String },
}

fn malformed(line: usize, message: impl Into<String>) -> ImportError {
    ImportError::MalformedRow { line, message: message.into() }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Reads the CSV text. The header row is mandatory; blank lines are skipped.
pub fn parse_comm_matrix(text: &str) -> Result<Vec<CommMatrixRow>, ImportError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.split(',').map(str::trim).eq(HEADER.split(',')) => {}
        Some((i, _)) => return Err(malformed(i + 1, format!("header must be '{HEADER}'"))),
        None => return Ok(Vec::new()),
    }
    let mut rows = Vec::new();
    for (i, l) in lines {
        let line = i + 1;
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(malformed(line, format!("expected 4 fields, found {}", fields.len())));
        }
        let period_ms = match fields[3] {
            "" => None,
            p => match p.parse::<u32>() {
                Ok(v) if v > 0 => Some(v),
                _ => return Err(malformed(line, format!("period '{p}' is not a positive integer"))),
            },
        };
        rows.push(CommMatrixRow {
            line,
            sender: fields[0].into(),
            receiver: fields[1].into(),
            signal: fields[2].into(),
            period_ms,
        });
    }
    Ok(rows)
}

/// Builds an FAA project from matrix rows. The root `System` SSD holds one
/// instance per function, named like the function.
pub fn import_comm_matrix(rows: &[CommMatrixRow]) -> Result<(Project, Vec<Diagnostic>), ImportError> {
    let mut diags = Vec::new();
    for r in rows {
        for f in [&r.sender, &r.receiver, &r.signal] {
            if !is_ident(f) {
                return Err(malformed(r.line, format!("'{f}' is not an identifier")));
            }
        }
        if r.period_ms == Some(0) {
            return Err(malformed(r.line, "period must be positive"));
        }
    }
    // Deduplicate triples and check that each sent signal has one period.
    let mut triples: Vec<&CommMatrixRow> = Vec::new();
    let mut seen: BTreeSet<(&str, &str, &str)> = BTreeSet::new();
    let mut periods: BTreeMap<(&str, &str), Option<u32>> = BTreeMap::new();
    for r in rows {
        match periods.get(&(r.sender.as_str(), r.signal.as_str())) {
            Some(p) if *p != r.period_ms => {
                return Err(malformed(r.line, format!("conflicting period for {}.{}", r.sender, r.signal)));
            }
            _ => {
                periods.insert((&r.sender, &r.signal), r.period_ms);
            }
        }
        if seen.insert((&r.sender, &r.receiver, &r.signal)) {
            triples.push(r);
        } else {
            diags.push(Diagnostic::warning(
                code::DUPLICATE_ROW,
                format!("line {}", r.line),
                format!("duplicate row {} -> {} : {}", r.sender, r.receiver, r.signal),
            ));
        }
    }
    let base = periods.values().flatten().fold(0u32, |g, p| g.gcd(p));
    let clock_of = |p: Option<u32>| p.map(|p| ClockExpr::periodic(p / base));

    let mut p = Project::new("Imported", Level::Faa);
    p.base_tick_ms = base.max(1);
    let mut names: Vec<&str> = Vec::new();
    for r in &triples {
        for n in [r.sender.as_str(), r.receiver.as_str()] {
            if !names.contains(&n) {
                names.push(n);
            }
        }
    }
    let mut ports: BTreeMap<&str, Vec<Port>> = names.iter().map(|n| (*n, Vec::new())).collect();
    for r in &triples {
        let outs = ports.get_mut(r.sender.as_str()).expect("registered");
        if !outs.iter().any(|p| p.dir == Direction::Out && p.name == r.signal) {
            let mut port = Port::output(&r.signal, None);
            port.clock = clock_of(r.period_ms);
            outs.push(port);
        }
    }
    // Receiver port name for each triple.
    let mut sink_port: Vec<String> = Vec::new();
    let mut taken_by: BTreeMap<(&str, String), &str> = BTreeMap::new();
    for r in &triples {
        let list = ports.get_mut(r.receiver.as_str()).expect("registered");
        let mut name = r.signal.clone();
        let clash = |n: &str, list: &Vec<Port>, taken: &BTreeMap<(&str, String), &str>| {
            list.iter().any(|p| p.name == n)
                && taken.get(&(r.receiver.as_str(), n.to_string())) != Some(&r.sender.as_str())
        };
        if clash(&name, list, &taken_by) {
            name = format!("{}_{}", r.sender, r.signal);
            let stem = name.clone();
            let mut k = 2;
            while clash(&name, list, &taken_by) {
                name = format!("{stem}_{k}");
                k += 1;
            }
        }
        if !list.iter().any(|p| p.name == name) {
            let mut port = Port::input(&name, None);
            port.clock = clock_of(r.period_ms);
            list.push(port);
            taken_by.insert((&r.receiver, name.clone()), &r.sender);
        }
        sink_port.push(name);
    }
    let system = if names.contains(&"System") { format!("System_{}", names.len() + 1) } else { "System".into() };
    let mut net = Network::default();
    for n in &names {
        p.components.push(ComponentType::new(*n, ports.remove(n).unwrap_or_default(), Definition::Unspecified));
        net.blocks.push(Block { name: (*n).to_string(), kind: BlockKind::instance(*n) });
    }
    for (r, port) in triples.iter().zip(&sink_port) {
        let mut ch = Channel::ssd(Endpoint::block(&r.sender, &r.signal), vec![Endpoint::block(&r.receiver, port)]);
        ch.clock = clock_of(r.period_ms);
        net.channels.push(ch);
    }
    if !names.is_empty() {
        p.components.push(ComponentType::new(system.clone(), vec![], Definition::Ssd(net)));
        p.system = Some(system);
    }
    Ok((p, diags))
}
