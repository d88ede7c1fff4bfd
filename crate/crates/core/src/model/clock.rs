use super::Endpoint;
use num_integer::Integer;
use std::fmt;

/// Boolean per-tick expression deciding when a flow carries a message.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClockExpr {
    /// The base clock: true on every tick.
    Base,
    /// True on each n-th tick at which the sub-clock is true.
    Every(u32, Box<ClockExpr>),
    /// True iff the referenced flow carries a message.
    Present(Endpoint),
    /// True iff the referenced mode-valued flow is present and equals the label.
    Mode(Endpoint, String),
    And(Vec<ClockExpr>),
    Or(Vec<ClockExpr>),
    Not(Box<ClockExpr>),
}

/// Frame information needed to normalize clocks.
pub trait ClockEnv {
    /// Normalized clock of a flow, if already known.
    fn flow_clock(&self, flow: &Endpoint) -> Option<ClockExpr>;
    /// Labels of the enum carried by a flow, for mode-cover simplification.
    fn flow_labels(&self, flow: &Endpoint) -> Option<Vec<String>>;
}

/// Environment that knows nothing; normalization stays purely syntactic.
pub struct NoEnv;

impl ClockEnv for NoEnv {
    fn flow_clock(&self, _: &Endpoint) -> Option<ClockExpr> {
        None
    }
    fn flow_labels(&self, _: &Endpoint) -> Option<Vec<String>> {
        None
    }
}

impl ClockExpr {
    pub fn every(n: u32, sub: ClockExpr) -> Self {
        ClockExpr::Every(n, Box::new(sub))
    }

    pub fn periodic(n: u32) -> Self {
        if n <= 1 {
            ClockExpr::Base
        } else {
            ClockExpr::every(n, ClockExpr::Base)
        }
    }

    pub fn and(a: ClockExpr, b: ClockExpr) -> Self {
        ClockExpr::And(vec![a, b])
    }

    /// Period in base ticks of a normalized periodic clock.
    pub fn period(&self) -> Option<u32> {
        match self {
            ClockExpr::Base => Some(1),
            ClockExpr::Every(n, sub) if **sub == ClockExpr::Base => Some(*n),
            _ => None,
        }
    }

    /// Flows referenced by the expression.
    pub fn flows(&self) -> Vec<&Endpoint> {
        let mut out = Vec::new();
        self.collect_flows(&mut out);
        out
    }

    fn collect_flows<'a>(&'a self, out: &mut Vec<&'a Endpoint>) {
        match self {
            ClockExpr::Base => {}
            ClockExpr::Every(_, c) | ClockExpr::Not(c) => c.collect_flows(out),
            ClockExpr::Present(f) | ClockExpr::Mode(f, _) => out.push(f),
            ClockExpr::And(cs) | ClockExpr::Or(cs) => cs.iter().for_each(|c| c.collect_flows(out)),
        }
    }

    /// Rewrites every flow reference.
    pub fn map_flows(&self, f: &dyn Fn(&Endpoint) -> Endpoint) -> ClockExpr {
        match self {
            ClockExpr::Base => ClockExpr::Base,
            ClockExpr::Every(n, c) => ClockExpr::Every(*n, Box::new(c.map_flows(f))),
            ClockExpr::Not(c) => ClockExpr::Not(Box::new(c.map_flows(f))),
            ClockExpr::Present(e) => ClockExpr::Present(f(e)),
            ClockExpr::Mode(e, l) => ClockExpr::Mode(f(e), l.clone()),
            ClockExpr::And(cs) => ClockExpr::And(cs.iter().map(|c| c.map_flows(f)).collect()),
            ClockExpr::Or(cs) => ClockExpr::Or(cs.iter().map(|c| c.map_flows(f)).collect()),
        }
    }

    /// Canonical form used for clock equality.
    ///
    /// Periodic clocks collapse to `every(p)`, conjunctions of periodic
    /// clocks to `every(lcm)`, presence of a flow becomes that flow's clock,
    /// and a disjunction of all labels of a mode flow becomes the mode
    /// flow's presence.
    pub fn normalize(&self, env: &dyn ClockEnv) -> ClockExpr {
        match self {
            ClockExpr::Base => ClockExpr::Base,
            ClockExpr::Every(n, c) => {
                let sub = c.normalize(env);
                if *n == 1 {
                    return sub;
                }
                match sub.period() {
                    Some(p) => ClockExpr::periodic(p.saturating_mul(*n)),
                    None => ClockExpr::Every(*n, Box::new(sub)),
                }
            }
            ClockExpr::Present(f) => match env.flow_clock(f) {
                Some(k) => k,
                None => ClockExpr::Present(f.clone()),
            },
            // The only label of a mode flow is present whenever the flow is.
            ClockExpr::Mode(f, l) => match env.flow_labels(f) {
                Some(all) if all == [l.clone()] => ClockExpr::Present(f.clone()).normalize(env),
                _ => ClockExpr::Mode(f.clone(), l.clone()),
            },
            ClockExpr::Not(c) => match c.normalize(env) {
                ClockExpr::Not(inner) => *inner,
                other => ClockExpr::Not(Box::new(other)),
            },
            ClockExpr::And(cs) => {
                let mut parts = Vec::new();
                for c in cs {
                    match c.normalize(env) {
                        ClockExpr::And(inner) => parts.extend(inner),
                        other => parts.push(other),
                    }
                }
                conjunction(parts)
            }
            ClockExpr::Or(cs) => {
                let mut parts = Vec::new();
                for c in cs {
                    match c.normalize(env) {
                        ClockExpr::Or(inner) => parts.extend(inner),
                        other => parts.push(other),
                    }
                }
                disjunction(parts, env)
            }
        }
    }
}

fn conjunction(parts: Vec<ClockExpr>) -> ClockExpr {
    let mut period = 1u32;
    let mut rest = Vec::new();
    for p in parts {
        match p.period() {
            Some(k) => period = period.lcm(&k),
            None => rest.push(p),
        }
    }
    if period > 1 {
        rest.push(ClockExpr::periodic(period));
    }
    rest.sort();
    rest.dedup();
    match rest.len() {
        0 => ClockExpr::Base,
        1 => rest.pop().unwrap(),
        _ => ClockExpr::And(rest),
    }
}

fn conjuncts(c: &ClockExpr) -> Vec<ClockExpr> {
    match c {
        ClockExpr::And(cs) => cs.clone(),
        ClockExpr::Base => Vec::new(),
        other => vec![other.clone()],
    }
}

fn disjunction(mut parts: Vec<ClockExpr>, env: &dyn ClockEnv) -> ClockExpr {
    if parts.contains(&ClockExpr::Base) {
        return ClockExpr::Base;
    }
    parts.sort();
    parts.dedup();
    match parts.len() {
        0 => return ClockExpr::Not(Box::new(ClockExpr::Base)),
        1 => return parts.pop().unwrap(),
        _ => {}
    }
    // factor out conjuncts common to every disjunct
    let sets: Vec<Vec<ClockExpr>> = parts.iter().map(conjuncts).collect();
    let common: Vec<ClockExpr> = sets[0].iter().filter(|c| sets.iter().all(|s| s.contains(c))).cloned().collect();
    let residuals: Vec<Vec<ClockExpr>> =
        sets.iter().map(|s| s.iter().filter(|c| !common.contains(c)).cloned().collect()).collect();
    if residuals.iter().any(Vec::is_empty) {
        // absorption: one disjunct is exactly the common part
        return conjunction(common);
    }
    let mut flow: Option<&Endpoint> = None;
    let mut labels = Vec::new();
    for r in &residuals {
        match r.as_slice() {
            [ClockExpr::Mode(f, l)] if flow.is_none_or(|g| g == f) => {
                flow = Some(f);
                labels.push(l.clone());
            }
            _ => {
                flow = None;
                break;
            }
        }
    }
    if let Some(f) = flow {
        if let Some(mut all) = env.flow_labels(f) {
            labels.sort();
            labels.dedup();
            all.sort();
            if labels == all {
                let mut c = common;
                c.push(ClockExpr::Present(f.clone()).normalize(env));
                return ClockExpr::And(c).normalize(env);
            }
        }
    }
    ClockExpr::Or(parts)
}

impl fmt::Display for ClockExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClockExpr::Base => f.write_str("base"),
            ClockExpr::Every(n, c) if **c == ClockExpr::Base => write!(f, "every({n})"),
            ClockExpr::Every(n, c) => write!(f, "every({n}, {c})"),
            ClockExpr::Present(e) => write!(f, "present({e})"),
            ClockExpr::Mode(e, l) => write!(f, "mode({e}, {l})"),
            ClockExpr::Not(c) => write!(f, "not {c}"),
            ClockExpr::And(cs) | ClockExpr::Or(cs) => {
                let op = if matches!(self, ClockExpr::And(_)) { " and " } else { " or " };
                f.write_str("(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ModeEnv;
    impl ClockEnv for ModeEnv {
        fn flow_clock(&self, flow: &Endpoint) -> Option<ClockExpr> {
            match flow {
                Endpoint::Block(b, _) if b == "ctl" || b == "one" => Some(ClockExpr::Base),
                Endpoint::Port(p) if p == "e" => Some(ClockExpr::Present(flow.clone())),
                _ => None,
            }
        }
        fn flow_labels(&self, flow: &Endpoint) -> Option<Vec<String>> {
            match flow {
                Endpoint::Block(b, _) if b == "ctl" => Some(vec!["A".into(), "B".into()]),
                Endpoint::Block(b, _) if b == "one" => Some(vec!["A".into()]),
                _ => None,
            }
        }
    }

    #[test]
    fn nested_every_collapses() {
        let c = ClockExpr::every(3, ClockExpr::every(2, ClockExpr::Base));
        assert_eq!(c.normalize(&NoEnv), ClockExpr::periodic(6));
        assert_eq!(ClockExpr::every(1, ClockExpr::Base).normalize(&NoEnv), ClockExpr::Base);
    }

    #[test]
    fn periodic_conjunction_is_lcm() {
        let c = ClockExpr::And(vec![ClockExpr::periodic(4), ClockExpr::periodic(6), ClockExpr::Base]);
        assert_eq!(c.normalize(&NoEnv), ClockExpr::periodic(12));
    }

    #[test]
    fn mode_cover_collapses_to_mode_flow_clock() {
        let m = Endpoint::block("ctl", "mode");
        let c = ClockExpr::Or(vec![
            ClockExpr::And(vec![ClockExpr::Mode(m.clone(), "A".into()), ClockExpr::periodic(2)]),
            ClockExpr::And(vec![ClockExpr::Mode(m.clone(), "B".into()), ClockExpr::periodic(2)]),
        ]);
        assert_eq!(c.normalize(&ModeEnv), ClockExpr::periodic(2));
        let partial = ClockExpr::Or(vec![ClockExpr::Mode(m.clone(), "A".into())]);
        assert_eq!(partial.normalize(&ModeEnv), ClockExpr::Mode(m, "A".into()));
    }

    #[test]
    fn single_label_mode_is_flow_clock() {
        let c = ClockExpr::Mode(Endpoint::block("one", "mode"), "A".into());
        assert_eq!(c.normalize(&ModeEnv), ClockExpr::Base);
    }

    #[test]
    fn event_presence_is_a_fixpoint() {
        let e = ClockExpr::Present(Endpoint::port("e"));
        assert_eq!(e.normalize(&ModeEnv), e);
        let d = ClockExpr::and(ClockExpr::Base, e.clone());
        assert_eq!(d.normalize(&ModeEnv), e);
    }

    #[test]
    fn display() {
        let c = ClockExpr::And(vec![ClockExpr::periodic(2), ClockExpr::Present(Endpoint::block("a", "b"))]);
        assert_eq!(c.to_string(), "(every(2) and present(a.b))");
    }
}
