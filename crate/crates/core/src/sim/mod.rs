//! Deterministic tick-by-tick execution under message/absent semantics.
//!
//! Ticks are numbered from 1. Each network is a clock frame whose ticks are
//! the ticks at which the network is active; `every` counts within the frame,
//! so gated or inactive subsystems are frozen.

mod clock;
mod engine;
mod expr;
mod random;
mod trace;
mod value;

pub use clock::{clock_trace, ClockState, Lookup};
pub use expr::{compile as compile_expr, CExpr};
pub use random::{random_inputs, InputProfile};
pub use trace::{compare_traces, Comparison, Trace, TraceError};
pub use value::{
    encode, format_q, parse_q, parse_value, q_from_f64, quantize, widen, ArithError, Msg, Num, Overflow, Value, Q,
};

use crate::analysis::{analyze, Analysis};
use crate::diag;
use crate::model::{DataType, Endpoint, Project};
use engine::{Body, Engine, FaultKind, InstState, Src};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("tick {tick}: {path}: {source}")]
    Arithmetic { tick: u64, path: String, source: ArithError },
    #[error("tick {tick}: {path}: simulator invariant violated: {message}")]
    InvariantBreach { tick: u64, path: String, message: String },
    #[error("model not simulable: {0}")]
    Setup(String),
    #[error("input trace: {0}")]
    Input(#[from] TraceError),
}

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    pub overflow: Overflow,
    /// Observed flows: root port names or `block.port`; empty means the
    /// root's output ports.
    pub observe: Vec<String>,
}

enum Obs {
    Out(usize),
    Flow(usize),
}

pub struct Simulator {
    engine: Engine,
    root: usize,
    state: InstState,
    tick: u64,
    input_types: Vec<Option<DataType>>,
    observed: Vec<(String, Obs)>,
}

impl Simulator {
    /// Prepares `root` (the project's system by default) for simulation.
    pub fn new(p: &Project, an: &Analysis, root: Option<&str>, opts: SimOptions) -> Result<Self, SimError> {
        let root_name = root
            .or_else(|| p.system_name())
            .ok_or_else(|| SimError::Setup("no system declared and no root given".into()))?
            .to_string();
        let (engine, root) = Engine::compile(p, an, &root_name, opts.overflow).map_err(SimError::Setup)?;
        let plan = &engine.plans[root];
        let input_types = plan.inputs.iter().map(|q| an.types.port(&root_name, q).cloned()).collect();
        let observed = if opts.observe.is_empty() {
            plan.outputs.iter().enumerate().map(|(i, q)| (q.clone(), Obs::Out(i))).collect()
        } else {
            opts.observe
                .iter()
                .map(|name| Self::resolve(plan, name).map(|o| (name.clone(), o)))
                .collect::<Result<_, _>>()?
        };
        let state = engine.init(root);
        Ok(Simulator { engine, root, state, tick: 0, input_types, observed })
    }

    fn resolve(plan: &engine::CompPlan, name: &str) -> Result<Obs, SimError> {
        if let Some(i) = plan.outputs.iter().position(|q| q == name) {
            return Ok(Obs::Out(i));
        }
        let unknown = || SimError::Setup(format!("cannot observe '{name}'"));
        let Body::Net(net) = &plan.body else { return Err(unknown()) };
        let e = match name.split_once('.') {
            Some((b, q)) => Endpoint::block(b, q),
            None => Endpoint::port(name),
        };
        match (net.slot.get(&e), net.sink.get(&e)) {
            (Some(&i), _) | (None, Some(&Src::Flow(i))) => Ok(Obs::Flow(i)),
            _ => Err(unknown()),
        }
    }

    pub fn inputs(&self) -> &[String] {
        &self.engine.plans[self.root].inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.engine.plans[self.root].outputs
    }

    pub fn observed(&self) -> Vec<String> {
        self.observed.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Number of completed ticks.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn input_type(&self, name: &str) -> Option<&DataType> {
        let i = self.inputs().iter().position(|q| q == name)?;
        self.input_types[i].as_ref()
    }

    /// Executes one tick; `inputs` follow [`Simulator::inputs`]. Returns the
    /// observed messages.
    pub fn step(&mut self, inputs: &[Msg]) -> Result<Vec<Msg>, SimError> {
        let tick = self.tick + 1;
        let mut args = inputs.to_vec();
        args.resize(self.inputs().len(), None);
        let outs = self.engine.step(self.root, &mut self.state, args).map_err(|f| match f.kind {
            FaultKind::Arith(source) => SimError::Arithmetic { tick, path: f.path, source },
            FaultKind::Breach(message) => SimError::InvariantBreach { tick, path: f.path, message },
        })?;
        self.tick = tick;
        let flows = match &self.state {
            InstState::Net(n) => &n.flows[..],
            _ => &[],
        };
        Ok(self
            .observed
            .iter()
            .map(|(_, o)| match o {
                Obs::Out(i) => outs[*i].clone(),
                Obs::Flow(i) => flows[*i].clone(),
            })
            .collect())
    }

    /// Runs `n` ticks. Input columns are matched by port name; inputs
    /// missing from the trace, or beyond its end, are absent.
    pub fn run(&mut self, input: &Trace, n: usize) -> Result<Trace, SimError> {
        let cols: Vec<Option<usize>> = self.inputs().iter().map(|q| input.column(q)).collect();
        let mut out = Trace::new(self.observed());
        for t in 0..n {
            let row = input.rows.get(t);
            let args: Vec<Msg> = cols.iter().map(|c| c.and_then(|c| row.and_then(|r| r[c].clone()))).collect();
            out.rows.push(self.step(&args)?);
        }
        Ok(out)
    }

    /// Reads an input trace using the root's input port types.
    pub fn parse_inputs(&self, csv: &str) -> Result<Trace, SimError> {
        let mode = self.engine.overflow;
        Ok(Trace::from_csv(csv, &|f| self.input_type(f).cloned(), mode)?)
    }
}

/// Analyzes `p` and runs `n` ticks of `root` on the CSV input trace.
pub fn simulate(
    p: &Project,
    root: Option<&str>,
    input_csv: &str,
    n: usize,
    opts: SimOptions,
) -> Result<Trace, SimError> {
    let an = analyze(p).map_err(|d| SimError::Setup(diag::render(&d).trim_end().to_string()))?;
    let mut sim = Simulator::new(p, &an, root, opts)?;
    let input = sim.parse_inputs(input_csv)?;
    sim.run(&input, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_str;

    fn sim(src: &str, input: &str, n: usize) -> Result<String, SimError> {
        let p = parse_str(src).unwrap();
        simulate(&p, None, input, n, SimOptions::default()).map(|t| t.to_csv())
    }

    const HEAD: &str = "project T;\nlevel FDA;\nbase_tick 10;\nsystem S;\n";

    #[test]
    fn when_every_two_samples() {
        let src = format!(
            "{HEAD}component S {{ in a : int; out b : int @ every(2); dfd {{ block w : when(every(2, true)); channel a -> w.x; channel w.y -> b; }} }}"
        );
        let out = sim(&src, "tick,a\n1,1\n2,2\n3,3\n4,4\n5,5\n6,6\n", 6).unwrap();
        assert_eq!(out, "tick,b\n1,-\n2,2\n3,-\n4,4\n5,-\n6,6\n");
    }

    #[test]
    fn delay_shifts_one_tick() {
        let src = format!(
            "{HEAD}component S {{ in a : int; out b : int; dfd {{ block d : delay(7); channel a -> d.x; channel d.y -> b; }} }}"
        );
        let out = sim(&src, "tick,a\n1,1\n2,2\n3,3\n", 3).unwrap();
        assert_eq!(out, "tick,b\n1,7\n2,1\n3,2\n");
    }

    #[test]
    fn function_is_strict() {
        let src = format!(
            "{HEAD}component Add {{ in x : int; in y : int; in z : int; out s : int; function {{ s = x + y + z; }} }}\n\
             component S {{ in a : int; in b : int; in c : int; out s : int; dfd {{ block f : Add; channel a -> f.x; channel b -> f.y; channel c -> f.z; channel f.s -> s; }} }}"
        );
        let out = sim(&src, "tick,a,b,c\n1,1,2,3\n2,1,-,3\n", 2).unwrap();
        assert_eq!(out, "tick,s\n1,6\n2,-\n");
    }

    #[test]
    fn zero_length_run_is_empty() {
        let src = format!("{HEAD}component S {{ in a : int; out b : int; dfd {{ channel a -> b; }} }}");
        assert_eq!(sim(&src, "", 0).unwrap(), "tick,b\n");
    }

    #[test]
    fn division_by_zero_traps() {
        let src = format!(
            "{HEAD}component D {{ in x : int; out y : int; function {{ y = 10 / x; }} }}\n\
             component S {{ in a : int; out b : int; dfd {{ block f : D; channel a -> f.x; channel f.y -> b; }} }}"
        );
        let err = sim(&src, "tick,a\n1,2\n2,0\n", 2).unwrap_err();
        assert!(matches!(err, SimError::Arithmetic { tick: 2, source: ArithError::DivByZero, .. }), "{err}");
    }
}
