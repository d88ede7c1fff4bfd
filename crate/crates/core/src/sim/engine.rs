//! Compiled execution plans and the per-tick step function.

use super::clock::ClockState;
use super::expr::{compile, CExpr};
use super::value::{encode, ArithError, Msg, Num, Overflow, Value};
use crate::analysis::{frame_network, Analysis};
use crate::model::*;
use std::collections::BTreeMap;

/// Failure inside a step, located by instance path.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Fault {
    pub path: String,
    pub kind: FaultKind,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum FaultKind {
    Arith(ArithError),
    Breach(String),
}

impl Fault {
    fn arith(path: impl Into<String>, e: ArithError) -> Self {
        Fault { path: path.into(), kind: FaultKind::Arith(e) }
    }

    fn within(mut self, outer: &str) -> Self {
        self.path = if self.path.is_empty() { outer.to_string() } else { format!("{outer}/{}", self.path) };
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Src {
    Flow(usize),
    /// Delayed channel, by index.
    Delayed(usize),
    None,
}

#[derive(Debug)]
pub(crate) struct CompPlan {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub body: Body,
}

#[derive(Debug)]
pub(crate) enum Body {
    Net(NetPlan),
    Function(Vec<Option<FnOut>>),
    Mtd(MtdPlan),
    Std(StdPlan),
    Silent,
}

#[derive(Debug)]
pub(crate) struct FnOut {
    expr: CExpr,
    reads: Vec<usize>,
    ty: Option<DataType>,
}

#[derive(Debug)]
pub(crate) struct NetPlan {
    pub slot: BTreeMap<Endpoint, usize>,
    pub sink: BTreeMap<Endpoint, Src>,
    nflows: usize,
    inputs: Vec<usize>,
    outputs: Vec<Src>,
    blocks: Vec<BPlan>,
    chans: Vec<DChan>,
    clocks: Vec<ClockExpr>,
}

#[derive(Debug)]
struct DChan {
    src: usize,
    clock: ClockExpr,
    init: Msg,
}

#[derive(Debug)]
enum BPlan {
    Instance { name: String, plan: usize, alpha: ClockExpr, inputs: Vec<Src>, outputs: Vec<usize> },
    When { clock: ClockExpr, x: Src, y: usize },
    Delay { clock: ClockExpr, x: Src, y: usize, init: Msg },
    Hold { x: Src, y: usize, init: Msg },
    Merge { name: String, xs: Vec<Src>, y: usize },
}

#[derive(Debug)]
pub(crate) struct MtdPlan {
    initial: usize,
    modes: Vec<ModePlan>,
    /// Outgoing transitions per mode, in firing order.
    transitions: Vec<Vec<(CExpr, usize)>>,
}

#[derive(Debug)]
struct ModePlan {
    name: String,
    plan: usize,
    /// MTD input index feeding each behavior input.
    ins: Vec<usize>,
    /// Behavior output index producing each MTD output.
    outs: Vec<usize>,
}

#[derive(Debug)]
pub(crate) struct StdPlan {
    initial: usize,
    vars: Vec<Msg>,
    /// Outgoing transitions per state, in firing order.
    transitions: Vec<Vec<StdStep>>,
}

#[derive(Debug)]
struct StdStep {
    guard: CExpr,
    target: usize,
    actions: Vec<(Target, CExpr, Option<DataType>)>,
}

#[derive(Debug, Clone, Copy)]
enum Target {
    Out(usize),
    Var(usize),
}

/// Mutable state of one component instance.
#[derive(Debug, Clone)]
pub(crate) enum InstState {
    Net(NetState),
    Mtd { mode: usize, children: Vec<InstState> },
    Std { state: usize, vars: Vec<Msg> },
    Stateless,
}

#[derive(Debug, Clone)]
pub(crate) struct NetState {
    pub flows: Vec<Msg>,
    blocks: Vec<BState>,
    chans: Vec<Msg>,
    clocks: ClockState,
}

#[derive(Debug, Clone)]
enum BState {
    Child(InstState),
    Buf(Msg),
    None,
}

fn literal(l: &Literal, ty: Option<&DataType>) -> Result<Value, String> {
    encode(&Num::from_literal(l), ty, Overflow::Trap).map_err(|e| format!("initial value {l}: {e}"))
}

pub(crate) struct Engine {
    pub plans: Vec<CompPlan>,
    pub overflow: Overflow,
}

struct Compiler<'a> {
    p: &'a Project,
    an: &'a Analysis,
    plans: Vec<Option<CompPlan>>,
    index: BTreeMap<String, usize>,
}

impl Engine {
    /// Compiles `root` and everything it instantiates.
    pub fn compile(p: &Project, an: &Analysis, root: &str, overflow: Overflow) -> Result<(Engine, usize), String> {
        let mut c = Compiler { p, an, plans: Vec::new(), index: BTreeMap::new() };
        let root = c.plan(root)?;
        let plans = c.plans.into_iter().map(|x| x.expect("compiled")).collect();
        Ok((Engine { plans, overflow }, root))
    }
}

impl Compiler<'_> {
    fn plan(&mut self, name: &str) -> Result<usize, String> {
        if let Some(&i) = self.index.get(name) {
            return Ok(i);
        }
        let i = self.plans.len();
        self.plans.push(None);
        self.index.insert(name.to_string(), i);
        let cp = self.build(name)?;
        self.plans[i] = Some(cp);
        Ok(i)
    }

    fn build(&mut self, name: &str) -> Result<CompPlan, String> {
        let sig = self.p.signature(name).ok_or_else(|| format!("unknown component '{name}'"))?;
        let names = |d: Direction| sig.iter().filter(|q| q.dir == d).map(|q| q.name.clone()).collect::<Vec<_>>();
        let (inputs, outputs) = (names(Direction::In), names(Direction::Out));
        let body = match self.p.component(name).map(|c| &c.def) {
            None | Some(Definition::Ssd(_)) | Some(Definition::Dfd(_)) => {
                let net = frame_network(self.p, name).ok_or_else(|| format!("'{name}' has no network"))?;
                Body::Net(self.net(name, &net, &inputs, &outputs)?)
            }
            Some(Definition::Function(assigns)) => Body::Function(self.function(name, assigns, &inputs, &outputs)),
            Some(Definition::Mtd(m)) => Body::Mtd(self.mtd(m, &inputs, &outputs)?),
            Some(Definition::Std(s)) => Body::Std(self.std(name, s, &inputs, &outputs)?),
            Some(Definition::Unspecified) => Body::Silent,
        };
        Ok(CompPlan { name: name.to_string(), inputs, outputs, body })
    }

    fn function(
        &self,
        owner: &str,
        assigns: &[Assignment],
        inputs: &[String],
        outputs: &[String],
    ) -> Vec<Option<FnOut>> {
        let slot = |n: &str| inputs.iter().position(|x| x == n);
        outputs
            .iter()
            .map(|o| {
                let a = assigns.iter().find(|a| a.target == *o)?;
                let expr = compile(&a.expr, &slot);
                Some(FnOut { reads: expr.reads(), expr, ty: self.an.types.port(owner, o).cloned() })
            })
            .collect()
    }

    fn mtd(&mut self, m: &Mtd, inputs: &[String], outputs: &[String]) -> Result<MtdPlan, String> {
        let mut modes = Vec::new();
        for mode in &m.modes {
            let plan = self.plan(&mode.behavior)?;
            let beh = self.plans[plan].as_ref();
            // A behavior still being compiled means a recursive hierarchy.
            let beh = beh.ok_or_else(|| format!("recursive behavior '{}'", mode.behavior))?;
            let ins = beh
                .inputs
                .iter()
                .map(|q| inputs.iter().position(|x| x == q).ok_or_else(|| format!("behavior input '{q}' not on MTD")))
                .collect::<Result<_, _>>()?;
            let outs = outputs
                .iter()
                .map(|q| {
                    beh.outputs.iter().position(|x| x == q).ok_or_else(|| format!("output '{q}' missing in behavior"))
                })
                .collect::<Result<_, _>>()?;
            modes.push(ModePlan { name: mode.name.clone(), plan, ins, outs });
        }
        let idx = |n: &str| modes.iter().position(|x| x.name == n).ok_or_else(|| format!("unknown mode '{n}'"));
        let slot = |n: &str| inputs.iter().position(|x| x == n);
        let mut transitions: Vec<Vec<(i64, CExpr, usize)>> = (0..modes.len()).map(|_| Vec::new()).collect();
        for t in &m.transitions {
            transitions[idx(&t.source)?].push((t.priority, compile(&t.guard, &slot), idx(&t.target)?));
        }
        let transitions = transitions
            .into_iter()
            .map(|mut ts| {
                ts.sort_by_key(|t| t.0);
                ts.into_iter().map(|(_, g, t)| (g, t)).collect()
            })
            .collect();
        Ok(MtdPlan { initial: idx(&m.initial)?, modes, transitions })
    }

    fn std(&self, owner: &str, s: &Std, inputs: &[String], outputs: &[String]) -> Result<StdPlan, String> {
        let idx = |n: &str| s.states.iter().position(|x| x == n).ok_or_else(|| format!("unknown state '{n}'"));
        let slot = |n: &str| {
            inputs
                .iter()
                .position(|x| x == n)
                .or_else(|| s.vars.iter().position(|v| v.name == n).map(|k| inputs.len() + k))
        };
        let vars = s.vars.iter().map(|v| literal(&v.init, Some(&v.ty)).map(Some)).collect::<Result<_, _>>()?;
        let mut transitions: Vec<Vec<(i64, StdStep)>> = s.states.iter().map(|_| Vec::new()).collect();
        for t in &s.transitions {
            let mut actions = Vec::new();
            for a in &t.actions {
                let (target, ty) = if let Some(j) = outputs.iter().position(|o| *o == a.target) {
                    (Target::Out(j), self.an.types.port(owner, &a.target).cloned())
                } else {
                    let k = s
                        .vars
                        .iter()
                        .position(|v| v.name == a.target)
                        .ok_or_else(|| format!("unknown target '{}'", a.target))?;
                    (Target::Var(k), Some(s.vars[k].ty.clone()))
                };
                actions.push((target, compile(&a.expr, &slot), ty));
            }
            let step = StdStep { guard: compile(&t.guard, &slot), target: idx(&t.target)?, actions };
            transitions[idx(&t.source)?].push((t.priority, step));
        }
        let transitions = transitions
            .into_iter()
            .map(|mut ts| {
                ts.sort_by_key(|t| t.0);
                ts.into_iter().map(|(_, s)| s).collect()
            })
            .collect();
        Ok(StdPlan { initial: idx(&s.initial)?, vars, transitions })
    }

    fn net(&mut self, owner: &str, net: &Network, inputs: &[String], outputs: &[String]) -> Result<NetPlan, String> {
        let (p, an) = (self.p, self.an);
        let mut slot = BTreeMap::new();
        for q in inputs {
            let n = slot.len();
            slot.insert(Endpoint::port(q.clone()), n);
        }
        for b in &net.blocks {
            let (_, outs) = p.block_ports(b).ok_or_else(|| format!("{owner}/{}: unknown block type", b.name))?;
            for q in outs {
                let n = slot.len();
                slot.insert(Endpoint::block(b.name.clone(), q), n);
            }
        }
        let mut sink = BTreeMap::new();
        let mut chans = Vec::new();
        for ch in &net.channels {
            let Some(&src) = slot.get(&ch.source) else { continue };
            let init = match &ch.kind {
                ChannelKind::Instant => None,
                ChannelKind::SsdDelayed { init } => Some(init.as_ref()),
                ChannelKind::Delay { init } => Some(Some(init)),
            };
            let s = match init {
                None => Src::Flow(src),
                Some(init) => {
                    let ty = an.types.get(owner, &ch.source);
                    let init = init.map(|l| literal(l, ty)).transpose()?;
                    let clock = an.clocks.get(owner, &ch.source).cloned().unwrap_or(ClockExpr::Base);
                    chans.push(DChan { src, clock, init });
                    Src::Delayed(chans.len() - 1)
                }
            };
            for e in &ch.sinks {
                sink.insert(e.clone(), s);
            }
        }
        let read = |e: Endpoint| sink.get(&e).copied().unwrap_or(Src::None);
        let order: Vec<&Block> = match an.schedule(owner) {
            Some(s) => s.order.iter().filter_map(|n| net.block(n)).collect(),
            None => net.blocks.iter().collect(),
        };
        let mut blocks = Vec::new();
        let mut clocks: Vec<ClockExpr> = chans.iter().map(|c| c.clock.clone()).collect();
        for b in order {
            let at = |q: &str| Endpoint::block(b.name.clone(), q);
            let y = || slot[&at("y")];
            let bp = match &b.kind {
                BlockKind::Instance { of, .. } => {
                    let plan = self.plan(of)?;
                    let child = self.plans[plan].as_ref().ok_or_else(|| format!("recursive instance of '{of}'"))?;
                    let alpha = an.clocks.activation(owner, &b.name).cloned().unwrap_or(ClockExpr::Base);
                    BPlan::Instance {
                        name: b.name.clone(),
                        plan,
                        alpha,
                        inputs: child.inputs.iter().map(|q| read(at(q))).collect(),
                        outputs: child.outputs.iter().map(|q| slot[&at(q)]).collect(),
                    }
                }
                BlockKind::When(c) => BPlan::When { clock: c.clone(), x: read(at("x")), y: y() },
                BlockKind::Delay { init, .. } => BPlan::Delay {
                    clock: an.clocks.get(owner, &at("y")).cloned().unwrap_or(ClockExpr::Base),
                    x: read(at("x")),
                    y: y(),
                    init: init.as_ref().map(|l| literal(l, an.types.get(owner, &at("y")))).transpose()?,
                },
                BlockKind::Hold { init } => {
                    BPlan::Hold { x: read(at("x")), y: y(), init: Some(literal(init, an.types.get(owner, &at("y")))?) }
                }
                BlockKind::Merge(n) => BPlan::Merge {
                    name: b.name.clone(),
                    xs: (1..=*n).map(|k| read(at(&format!("x{k}")))).collect(),
                    y: y(),
                },
            };
            match &bp {
                BPlan::Instance { alpha: c, .. } | BPlan::When { clock: c, .. } | BPlan::Delay { clock: c, .. } => {
                    clocks.push(c.clone())
                }
                _ => {}
            }
            blocks.push(bp);
        }
        clocks.sort();
        clocks.dedup();
        Ok(NetPlan {
            nflows: slot.len(),
            inputs: inputs.iter().map(|q| slot[&Endpoint::port(q.clone())]).collect(),
            outputs: outputs.iter().map(|q| read(Endpoint::port(q.clone()))).collect(),
            slot,
            sink,
            blocks,
            chans,
            clocks,
        })
    }
}

fn lookup<'a>(plan: &'a NetPlan, flows: &'a [Msg]) -> impl Fn(&Endpoint) -> Option<&'a Value> + 'a {
    move |e: &Endpoint| {
        let i = match plan.slot.get(e) {
            Some(&i) => i,
            None => match plan.sink.get(e) {
                Some(Src::Flow(i)) => *i,
                _ => return None,
            },
        };
        flows[i].as_ref()
    }
}

fn read(plan: &NetPlan, flows: &[Msg], chans: &[Msg], clocks: &mut ClockState, src: Src) -> Msg {
    match src {
        Src::Flow(i) => flows[i].clone(),
        Src::None => None,
        Src::Delayed(k) => {
            if clocks.eval(&plan.chans[k].clock, &lookup(plan, flows)) {
                chans[k].clone()
            } else {
                None
            }
        }
    }
}

impl Engine {
    pub fn init(&self, plan: usize) -> InstState {
        match &self.plans[plan].body {
            Body::Net(n) => InstState::Net(NetState {
                flows: vec![None; n.nflows],
                blocks: n
                    .blocks
                    .iter()
                    .map(|b| match b {
                        BPlan::Instance { plan, .. } => BState::Child(self.init(*plan)),
                        BPlan::Delay { init, .. } | BPlan::Hold { init, .. } => BState::Buf(init.clone()),
                        _ => BState::None,
                    })
                    .collect(),
                chans: n.chans.iter().map(|c| c.init.clone()).collect(),
                clocks: ClockState::new(),
            }),
            Body::Mtd(m) => {
                InstState::Mtd { mode: m.initial, children: m.modes.iter().map(|x| self.init(x.plan)).collect() }
            }
            Body::Std(s) => InstState::Std { state: s.initial, vars: s.vars.clone() },
            Body::Function(_) | Body::Silent => InstState::Stateless,
        }
    }

    /// One tick of component `plan`; `inputs` follow its input port order.
    pub fn step(&self, plan: usize, st: &mut InstState, inputs: Vec<Msg>) -> Result<Vec<Msg>, Fault> {
        let cp = &self.plans[plan];
        match (&cp.body, st) {
            (Body::Net(n), InstState::Net(s)) => self.step_net(n, s, inputs),
            (Body::Function(outs), _) => outs
                .iter()
                .zip(&cp.outputs)
                .map(|(o, name)| {
                    let Some(o) = o else { return Ok(None) };
                    if o.reads.iter().any(|&i| inputs[i].is_none()) {
                        return Ok(None);
                    }
                    let fault = |e| Fault::arith(format!(".{name}"), e);
                    match o.expr.eval(&inputs).map_err(fault)? {
                        None => Ok(None),
                        Some(v) => encode(&v, o.ty.as_ref(), self.overflow).map(Some).map_err(fault),
                    }
                })
                .collect(),
            (Body::Mtd(m), InstState::Mtd { mode, children }) => {
                for (guard, target) in &m.transitions[*mode] {
                    let fire =
                        guard.holds(&inputs).map_err(|e| Fault::arith(format!("mode:{}", m.modes[*mode].name), e))?;
                    if fire {
                        *mode = *target;
                        break;
                    }
                }
                let mp = &m.modes[*mode];
                let args = mp.ins.iter().map(|&i| inputs[i].clone()).collect();
                let outs = self
                    .step(mp.plan, &mut children[*mode], args)
                    .map_err(|f| f.within(&format!("mode:{}", mp.name)))?;
                Ok(mp.outs.iter().map(|&j| outs[j].clone()).collect())
            }
            (Body::Std(s), InstState::Std { state, vars }) => {
                let mut env: Vec<Msg> = inputs;
                let k = env.len();
                env.extend(vars.iter().cloned());
                let mut outs = vec![None; cp.outputs.len()];
                for (i, t) in s.transitions[*state].iter().enumerate() {
                    let fault = |e| Fault::arith(format!("transition#{i}"), e);
                    if !t.guard.holds(&env).map_err(fault)? {
                        continue;
                    }
                    for (target, expr, ty) in &t.actions {
                        let v = match expr.eval(&env).map_err(fault)? {
                            Some(v) => Some(encode(&v, ty.as_ref(), self.overflow).map_err(fault)?),
                            None => None,
                        };
                        match *target {
                            Target::Out(j) => outs[j] = v,
                            Target::Var(j) => {
                                if v.is_some() {
                                    env[k + j] = v;
                                }
                            }
                        }
                    }
                    *state = t.target;
                    break;
                }
                vars.clone_from_slice(&env[k..]);
                Ok(outs)
            }
            (Body::Silent, _) => Ok(vec![None; cp.outputs.len()]),
            _ => Err(Fault {
                path: String::new(),
                kind: FaultKind::Breach(format!("state does not match plan of '{}'", cp.name)),
            }),
        }
    }

    fn step_net(&self, plan: &NetPlan, st: &mut NetState, inputs: Vec<Msg>) -> Result<Vec<Msg>, Fault> {
        let NetState { flows, blocks, chans, clocks } = st;
        flows.iter_mut().for_each(|f| *f = None);
        for (&i, v) in plan.inputs.iter().zip(inputs) {
            flows[i] = v;
        }
        for (bp, bs) in plan.blocks.iter().zip(blocks.iter_mut()) {
            match bp {
                BPlan::Instance { name, plan: child, alpha, inputs, outputs } => {
                    if !clocks.eval(alpha, &lookup(plan, flows)) {
                        continue;
                    }
                    let args = inputs.iter().map(|&s| read(plan, flows, chans, clocks, s)).collect();
                    let BState::Child(cs) = bs else { unreachable!("instance state") };
                    let outs = self.step(*child, cs, args).map_err(|f| f.within(name))?;
                    for (&y, v) in outputs.iter().zip(outs) {
                        flows[y] = v;
                    }
                }
                BPlan::When { clock, x, y } => {
                    let on = clocks.eval(clock, &lookup(plan, flows));
                    let v = read(plan, flows, chans, clocks, *x);
                    flows[*y] = if on { v } else { None };
                }
                BPlan::Delay { clock, y, .. } => {
                    if clocks.eval(clock, &lookup(plan, flows)) {
                        let BState::Buf(b) = bs else { unreachable!("delay state") };
                        flows[*y] = b.clone();
                    }
                }
                BPlan::Hold { x, y, .. } => {
                    let v = read(plan, flows, chans, clocks, *x);
                    let BState::Buf(b) = bs else { unreachable!("hold state") };
                    if v.is_some() {
                        *b = v;
                    }
                    flows[*y] = b.clone();
                }
                BPlan::Merge { name, xs, y } => {
                    let vals: Vec<Msg> = xs.iter().map(|&s| read(plan, flows, chans, clocks, s)).collect();
                    let mut present = vals.into_iter().flatten();
                    flows[*y] = present.next();
                    if present.next().is_some() {
                        return Err(Fault {
                            path: name.clone(),
                            kind: FaultKind::Breach("merge inputs present together".into()),
                        });
                    }
                }
            }
        }
        let outs = plan.outputs.iter().map(|&s| read(plan, flows, chans, clocks, s)).collect();
        for (bp, bs) in plan.blocks.iter().zip(blocks.iter_mut()) {
            if let BPlan::Delay { x, .. } = bp {
                let v = read(plan, flows, chans, clocks, *x);
                if v.is_some() {
                    *bs = BState::Buf(v);
                }
            }
        }
        for (c, buf) in plan.chans.iter().zip(chans.iter_mut()) {
            if flows[c.src].is_some() {
                *buf = flows[c.src].clone();
            }
        }
        clocks.end_tick(&plan.clocks, &lookup(plan, flows));
        Ok(outs)
    }
}
