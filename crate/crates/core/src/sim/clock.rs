//! Per-frame clock evaluation.

use super::value::Value;
use crate::model::{ClockExpr, Endpoint};
use std::collections::BTreeMap;

/// Counters and per-tick memo of the clocks of one frame.
///
/// `Every(n, c)` counts the ticks of the frame at which `c` holds and fires
/// on each n-th of them. Each node is evaluated at most once per tick so that
/// counters advance exactly once however often a clock is consulted.
#[derive(Debug, Clone, Default)]
pub struct ClockState {
    counters: BTreeMap<ClockExpr, u64>,
    memo: BTreeMap<ClockExpr, bool>,
}

/// Current message of a flow, `None` when absent or not yet computed.
pub type Lookup<'a> = dyn Fn(&Endpoint) -> Option<&'a Value> + 'a;

impl ClockState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Value of `c` at the current tick.
    pub fn eval<'v>(&mut self, c: &ClockExpr, flow: &Lookup<'v>) -> bool {
        match c {
            ClockExpr::Base => true,
            ClockExpr::Present(e) => flow(e).is_some(),
            ClockExpr::Mode(e, l) => matches!(flow(e), Some(Value::Label(v)) if v == l),
            ClockExpr::Not(x) => !self.eval(x, flow),
            // No short-circuit: nested counters must see every tick.
            ClockExpr::And(xs) => xs.iter().fold(true, |acc, x| self.eval(x, flow) & acc),
            ClockExpr::Or(xs) => xs.iter().fold(false, |acc, x| self.eval(x, flow) | acc),
            ClockExpr::Every(n, sub) => {
                if let Some(&v) = self.memo.get(c) {
                    return v;
                }
                let hit = self.eval(sub, flow);
                let count = self.counters.entry(c.clone()).or_insert(0);
                if hit {
                    *count += 1;
                }
                let v = hit && (*count).is_multiple_of(u64::from((*n).max(1)));
                self.memo.insert(c.clone(), v);
                v
            }
        }
    }

    /// Closes the current tick. `clocks` are evaluated first so that their
    /// counters advance even if nothing consulted them this tick.
    pub fn end_tick<'a, 'v>(&mut self, clocks: impl IntoIterator<Item = &'a ClockExpr>, flow: &Lookup<'v>) {
        for c in clocks {
            self.eval(c, flow);
        }
        self.memo.clear();
    }
}

/// Evaluates a flow-free clock over ticks `1..=n`.
pub fn clock_trace(c: &ClockExpr, n: usize) -> Vec<bool> {
    let mut st = ClockState::new();
    let none: &Lookup = &|_| None;
    (0..n)
        .map(|_| {
            let v = st.eval(c, none);
            st.end_tick([c], none);
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_two() {
        let t = clock_trace(&ClockExpr::periodic(2), 6);
        assert_eq!(t, vec![false, true, false, true, false, true]);
        assert!(clock_trace(&ClockExpr::every(1, ClockExpr::Base), 5).iter().all(|&b| b));
    }

    #[test]
    fn nested_every() {
        let c = ClockExpr::every(3, ClockExpr::every(2, ClockExpr::Base));
        let hits: Vec<usize> = clock_trace(&c, 12).iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i + 1).collect();
        assert_eq!(hits, vec![6, 12]);
    }

    #[test]
    fn memo_keeps_counter_single_step() {
        let c = ClockExpr::periodic(2);
        let mut st = ClockState::new();
        let none: &Lookup = &|_| None;
        assert!(!st.eval(&c, none));
        assert!(!st.eval(&c, none));
        st.end_tick([&c], none);
        assert!(st.eval(&c, none));
    }

    #[test]
    fn presence_and_mode() {
        let v = Value::Label("On".into());
        let e = Endpoint::port("m");
        let look = |x: &Endpoint| if *x == Endpoint::port("m") { Some(&v) } else { None };
        let mut st = ClockState::new();
        assert!(st.eval(&ClockExpr::Present(e.clone()), &look));
        assert!(st.eval(&ClockExpr::Mode(e.clone(), "On".into()), &look));
        assert!(!st.eval(&ClockExpr::Mode(e, "Off".into()), &look));
        assert!(!st.eval(&ClockExpr::Present(Endpoint::port("z")), &look));
    }
}
