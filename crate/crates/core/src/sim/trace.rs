//! Traces and their CSV form.

use super::value::{parse_value, Msg, Overflow};
use crate::model::DataType;
use thiserror::Error;

/// Messages of a fixed set of flows over ticks `1..=rows.len()`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub flows: Vec<String>,
    pub rows: Vec<Vec<Msg>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("flow sets differ: [{}] vs [{}]", .0.join(","), .1.join(","))]
    FlowSetMismatch(Vec<String>, Vec<String>),
}

/// Outcome of comparing two traces over the same flows.
#[derive(Debug, Clone, PartialEq)]
pub enum Comparison {
    Equal,
    /// First tick (1-based) and flow at which the traces differ.
    Diverge {
        tick: usize,
        flow: String,
        left: Msg,
        right: Msg,
    },
    /// Traces agree on their common prefix but differ in length.
    Length {
        left: usize,
        right: usize,
    },
}

impl Trace {
    pub fn new(flows: Vec<String>) -> Self {
        Trace { flows, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, flow: &str) -> Option<usize> {
        self.flows.iter().position(|f| f == flow)
    }

    /// Message of `flow` at 1-based `tick`.
    pub fn get(&self, tick: usize, flow: &str) -> Option<&Msg> {
        let c = self.column(flow)?;
        self.rows.get(tick.checked_sub(1)?).map(|r| &r[c])
    }

    /// All messages of one flow, in tick order.
    pub fn series(&self, flow: &str) -> Option<Vec<Msg>> {
        let c = self.column(flow)?;
        Some(self.rows.iter().map(|r| r[c].clone()).collect())
    }

    /// `tick,<flow>...` header, `-` for absent messages.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tick");
        for f in &self.flows {
            out.push(',');
            out.push_str(f);
        }
        out.push('\n');
        for (t, row) in self.rows.iter().enumerate() {
            out.push_str(&(t + 1).to_string());
            for m in row {
                out.push(',');
                match m {
                    Some(v) => out.push_str(&v.to_string()),
                    None => out.push('-'),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Reads a trace; `ty` gives the type used to decode each column.
    pub fn from_csv(text: &str, ty: &dyn Fn(&str) -> Option<DataType>, mode: Overflow) -> Result<Trace, TraceError> {
        let bad = |line: usize, message: String| TraceError::Malformed { line, message };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((_, header)) = lines.next() else { return Ok(Trace::default()) };
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"tick") {
            return Err(bad(1, "header must start with 'tick'".into()));
        }
        let flows: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
        let types: Vec<Option<DataType>> = flows.iter().map(|f| ty(f)).collect();
        let mut trace = Trace::new(flows);
        for (i, line) in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != cols.len() {
                return Err(bad(i + 1, format!("expected {} cells, found {}", cols.len(), cells.len())));
            }
            let tick = trace.rows.len() + 1;
            if cells[0].parse::<usize>().ok() != Some(tick) {
                return Err(bad(i + 1, format!("expected tick {tick}")));
            }
            let row = cells[1..]
                .iter()
                .zip(&types)
                .map(|(c, t)| match *c {
                    "-" => Ok(None),
                    c => parse_value(c, t.as_ref(), mode).map(Some).map_err(|e| bad(i + 1, e.to_string())),
                })
                .collect::<Result<_, _>>()?;
            trace.rows.push(row);
        }
        Ok(trace)
    }
}

/// First divergence of two traces over the same flow set.
pub fn compare_traces(a: &Trace, b: &Trace) -> Result<Comparison, TraceError> {
    let mut fa = a.flows.clone();
    let mut fb = b.flows.clone();
    fa.sort();
    fb.sort();
    if fa != fb {
        return Err(TraceError::FlowSetMismatch(a.flows.clone(), b.flows.clone()));
    }
    let map: Vec<usize> = a.flows.iter().map(|f| b.column(f).expect("same flows")).collect();
    for (t, (ra, rb)) in a.rows.iter().zip(&b.rows).enumerate() {
        for (i, &j) in map.iter().enumerate() {
            if ra[i] != rb[j] {
                return Ok(Comparison::Diverge {
                    tick: t + 1,
                    flow: a.flows[i].clone(),
                    left: ra[i].clone(),
                    right: rb[j].clone(),
                });
            }
        }
    }
    Ok(if a.len() == b.len() { Comparison::Equal } else { Comparison::Length { left: a.len(), right: b.len() } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::value::Value;

    fn ints(flow: &str, xs: &[Option<i64>]) -> Trace {
        Trace { flows: vec![flow.into()], rows: xs.iter().map(|x| vec![x.map(Value::Int)]).collect() }
    }

    #[test]
    fn csv_roundtrip() {
        let t = ints("a", &[None, Some(2), Some(-3)]);
        let text = t.to_csv();
        assert_eq!(text, "tick,a\n1,-\n2,2\n3,-3\n");
        assert_eq!(Trace::from_csv(&text, &|_| Some(DataType::Int), Overflow::Trap).unwrap(), t);
    }

    #[test]
    fn divergence_reported() {
        let a = ints("a", &[Some(1), Some(2), Some(3)]);
        let b = ints("a", &[Some(1), Some(2), None]);
        assert_eq!(compare_traces(&a, &a).unwrap(), Comparison::Equal);
        assert_eq!(
            compare_traces(&a, &b).unwrap(),
            Comparison::Diverge { tick: 3, flow: "a".into(), left: Some(Value::Int(3)), right: None }
        );
        assert!(matches!(compare_traces(&a, &ints("b", &[])), Err(TraceError::FlowSetMismatch(..))));
    }

    #[test]
    fn rejects_gaps_in_ticks() {
        let r = Trace::from_csv("tick,a\n1,1\n3,2\n", &|_| None, Overflow::Trap);
        assert!(matches!(r, Err(TraceError::Malformed { line: 3, .. })));
    }
}
