//! In-memory metamodel: projects, component types, behaviors, clusters and
//! the technical architecture. Everything downstream consumes these types.

mod clock;
mod expr;
mod level;
mod resolve;
mod validate;

pub use clock::{ClockEnv, ClockExpr, NoEnv};
pub use expr::{BinOp, Expr, Func, Literal, UnOp};
pub use level::level_check;
pub use resolve::{resolve, Element, ResolveError};
pub use validate::validate;

use num_rational::Ratio;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Faa,
    Fda,
    La,
}

impl Level {
    pub fn keyword(self) -> &'static str {
        match self {
            Level::Faa => "FAA",
            Level::Fda => "FDA",
            Level::La => "LA",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub name: String,
    pub level: Level,
    /// Duration of one base tick in milliseconds.
    pub base_tick_ms: u32,
    /// Component (or cluster network) simulated and deployed by default.
    pub system: Option<String>,
    pub enums: Vec<EnumDecl>,
    pub components: Vec<ComponentType>,
    pub clusters: Vec<Cluster>,
    pub tech: Option<TechArch>,
    pub deployment: Option<Deployment>,
}

impl Default for Project {
    fn default() -> Self {
        Project {
            name: "Untitled".into(),
            level: Level::Fda,
            base_tick_ms: 1,
            system: None,
            enums: Vec::new(),
            components: Vec::new(),
            clusters: Vec::new(),
            tech: None,
            deployment: None,
        }
    }
}

impl Project {
    pub fn new(name: impl Into<String>, level: Level) -> Self {
        Project { name: name.into(), level, ..Project::default() }
    }

    pub fn component(&self, name: &str) -> Option<&ComponentType> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn component_mut(&mut self, name: &str) -> Option<&mut ComponentType> {
        self.components.iter_mut().find(|c| c.name == name)
    }

    pub fn cluster(&self, name: &str) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.name == name)
    }

    pub fn enum_decl(&self, name: &str) -> Option<&EnumDecl> {
        self.enums.iter().find(|e| e.name == name)
    }

    /// Enum type declaring `label`, if exactly one does.
    pub fn enum_of_label(&self, label: &str) -> Option<&EnumDecl> {
        let mut found = self.enums.iter().filter(|e| e.labels.iter().any(|l| l == label));
        let first = found.next()?;
        if found.next().is_some() {
            None
        } else {
            Some(first)
        }
    }

    /// Ports of a block target (component type or cluster).
    pub fn signature(&self, name: &str) -> Option<&[Port]> {
        if let Some(c) = self.component(name) {
            return Some(&c.ports);
        }
        self.cluster(name).map(|c| c.ports.as_slice())
    }

    /// The root element: explicit `system`, else the last declared component.
    pub fn system_name(&self) -> Option<&str> {
        self.system.as_deref().or_else(|| self.components.last().map(|c| c.name.as_str()))
    }

    /// Direction of `port` on `block`, if the block has such a port.
    pub fn block_port_dir(&self, block: &Block, port: &str) -> Option<Direction> {
        match &block.kind {
            BlockKind::Instance { of, .. } => self.signature(of)?.iter().find(|p| p.name == port).map(|p| p.dir),
            kind => {
                let (ins, outs) = kind.builtin_ports()?;
                if ins.iter().any(|p| p == port) {
                    Some(Direction::In)
                } else if outs.iter().any(|p| p == port) {
                    Some(Direction::Out)
                } else {
                    None
                }
            }
        }
    }

    /// (inputs, outputs) port names of a block.
    pub fn block_ports(&self, block: &Block) -> Option<(Vec<String>, Vec<String>)> {
        match &block.kind {
            BlockKind::Instance { of, .. } => {
                let sig = self.signature(of)?;
                let names = |d: Direction| sig.iter().filter(|p| p.dir == d).map(|p| p.name.clone()).collect();
                Some((names(Direction::In), names(Direction::Out)))
            }
            kind => kind.builtin_ports(),
        }
    }

    pub fn fresh_component_name(&self, stem: &str) -> String {
        let taken = |n: &str| self.component(n).is_some() || self.cluster(n).is_some();
        if !taken(stem) {
            return stem.to_string();
        }
        (2..).map(|i| format!("{stem}_{i}")).find(|n| !taken(n)).expect("unbounded")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumDecl {
    pub name: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IntWidth {
    I8,
    I16,
    I32,
}

impl IntWidth {
    pub fn bits(self) -> u32 {
        match self {
            IntWidth::I8 => 8,
            IntWidth::I16 => 16,
            IntWidth::I32 => 32,
        }
    }

    pub fn min(self) -> i64 {
        -(1i64 << (self.bits() - 1))
    }

    pub fn max(self) -> i64 {
        (1i64 << (self.bits() - 1)) - 1
    }

    pub fn keyword(self) -> &'static str {
        match self {
            IntWidth::I8 => "int8",
            IntWidth::I16 => "int16",
            IntWidth::I32 => "int32",
        }
    }

    /// Two's complement wrap-around into this width.
    pub fn wrap(self, v: i64) -> i64 {
        let bits = self.bits();
        let m = 1i64 << bits;
        let r = v.rem_euclid(m);
        if r > self.max() {
            r - m
        } else {
            r
        }
    }
}

/// Platform-constrained implementation type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImplType {
    Int(IntWidth),
    /// Decoded value = raw * scale + offset.
    Fixed {
        base: IntWidth,
        scale: Ratio<i64>,
        offset: Ratio<i64>,
    },
}

impl ImplType {
    pub fn base(&self) -> IntWidth {
        match self {
            ImplType::Int(w) => *w,
            ImplType::Fixed { base, .. } => *base,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DataType {
    Bool,
    Int,
    Real,
    Enum(String),
    Impl(ImplType),
}

impl DataType {
    pub fn is_numeric(&self) -> bool {
        matches!(self, DataType::Int | DataType::Real | DataType::Impl(_))
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataType::Bool => f.write_str("bool"),
            DataType::Int => f.write_str("int"),
            DataType::Real => f.write_str("real"),
            DataType::Enum(n) => f.write_str(n),
            DataType::Impl(ImplType::Int(w)) => f.write_str(w.keyword()),
            DataType::Impl(ImplType::Fixed { base, scale, offset }) => {
                write!(f, "fixed({}, {}, {})", base.keyword(), format_ratio(*scale), format_ratio(*offset))
            }
        }
    }
}

/// Prints a rational as a terminating decimal when possible, else `n/d`.
pub fn format_ratio(r: Ratio<i64>) -> String {
    let (n, d) = (*r.numer(), *r.denom());
    if d == 1 {
        return n.to_string();
    }
    let mut d2 = d;
    let (mut twos, mut fives) = (0u32, 0u32);
    while d2 % 2 == 0 {
        d2 /= 2;
        twos += 1;
    }
    while d2 % 5 == 0 {
        d2 /= 5;
        fives += 1;
    }
    if d2 != 1 {
        return format!("{n}/{d}");
    }
    let digits = twos.max(fives);
    let scale = 10i128.pow(digits);
    let scaled = n as i128 * scale / d as i128;
    let neg = scaled < 0;
    let abs = scaled.unsigned_abs();
    let int_part = abs / scale as u128;
    let frac = abs % scale as u128;
    format!("{}{}.{:0width$}", if neg { "-" } else { "" }, int_part, frac, width = digits as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub name: String,
    pub dir: Direction,
    /// `None` for dynamically typed ports whose type is inferred.
    pub ty: Option<DataType>,
    /// Clock relative to the instance's activation clock; `None` means the
    /// activation clock itself.
    pub clock: Option<ClockExpr>,
    pub range: Option<(f64, f64)>,
    pub actuator: bool,
}

impl Port {
    pub fn new(name: impl Into<String>, dir: Direction, ty: Option<DataType>) -> Self {
        Port { name: name.into(), dir, ty, clock: None, range: None, actuator: false }
    }

    pub fn input(name: impl Into<String>, ty: Option<DataType>) -> Self {
        Port::new(name, Direction::In, ty)
    }

    pub fn output(name: impl Into<String>, ty: Option<DataType>) -> Self {
        Port::new(name, Direction::Out, ty)
    }

    pub fn with_clock(mut self, clock: ClockExpr) -> Self {
        self.clock = Some(clock);
        self
    }

    /// Event ports are annotated `present(<own name>)` and accept any clock.
    pub fn is_event(&self) -> bool {
        matches!(&self.clock, Some(ClockExpr::Present(Endpoint::Port(p))) if *p == self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentType {
    pub name: String,
    pub ports: Vec<Port>,
    pub def: Definition,
}

impl ComponentType {
    pub fn new(name: impl Into<String>, ports: Vec<Port>, def: Definition) -> Self {
        ComponentType { name: name.into(), ports, def }
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.dir == Direction::In)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.dir == Direction::Out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Definition {
    Unspecified,
    Function(Vec<Assignment>),
    Ssd(Network),
    Dfd(Network),
    Mtd(Mtd),
    Std(Std),
}

impl Definition {
    pub fn keyword(&self) -> &'static str {
        match self {
            Definition::Unspecified => "unspecified",
            Definition::Function(_) => "function",
            Definition::Ssd(_) => "ssd",
            Definition::Dfd(_) => "dfd",
            Definition::Mtd(_) => "mtd",
            Definition::Std(_) => "std",
        }
    }

    pub fn network(&self) -> Option<&Network> {
        match self {
            Definition::Ssd(n) | Definition::Dfd(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub target: String,
    pub expr: Expr,
}

/// Block-and-channel network shared by SSDs (all blocks are component
/// instances, all channels delayed) and DFDs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Network {
    pub blocks: Vec<Block>,
    pub channels: Vec<Channel>,
}

impl Network {
    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub kind: BlockKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockKind {
    /// Instance of a component type or cluster, optionally gated by a clock.
    Instance { of: String, gate: Option<ClockExpr> },
    /// `y = x when c`.
    When(ClockExpr),
    /// Unit delay; `init == None` starts with an absent buffer.
    Delay { init: Option<Literal>, clock: Option<ClockExpr> },
    /// n-ary merge of mode-exclusive flows.
    Merge(usize),
    /// Holds the latest present input on the activation clock.
    Hold { init: Literal },
}

impl BlockKind {
    pub fn instance(of: impl Into<String>) -> Self {
        BlockKind::Instance { of: of.into(), gate: None }
    }

    /// Port names of builtin blocks (inputs, outputs).
    pub fn builtin_ports(&self) -> Option<(Vec<String>, Vec<String>)> {
        match self {
            BlockKind::Instance { .. } => None,
            BlockKind::When(_) | BlockKind::Delay { .. } | BlockKind::Hold { .. } => {
                Some((vec!["x".into()], vec!["y".into()]))
            }
            BlockKind::Merge(n) => Some(((1..=*n).map(|i| format!("x{i}")).collect(), vec!["y".into()])),
        }
    }
}

/// Channel endpoint / flow reference: a port of the enclosing component or a
/// port of a block inside the network.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Port(String),
    Block(String, String),
}

impl Endpoint {
    pub fn port(name: impl Into<String>) -> Self {
        Endpoint::Port(name.into())
    }

    pub fn block(block: impl Into<String>, port: impl Into<String>) -> Self {
        Endpoint::Block(block.into(), port.into())
    }

    /// Block name for block endpoints.
    pub fn block_name(&self) -> Option<&str> {
        match self {
            Endpoint::Block(b, _) => Some(b),
            Endpoint::Port(_) => None,
        }
    }

    /// Port name, on the block or on the enclosing component.
    pub fn port_name(&self) -> &str {
        match self {
            Endpoint::Block(_, p) | Endpoint::Port(p) => p,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Port(p) => f.write_str(p),
            Endpoint::Block(b, p) => write!(f, "{b}.{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    /// SSD channel: one-tick message delay. `init` is emitted first.
    SsdDelayed { init: Option<Literal> },
    /// DFD channel with instantaneous communication.
    Instant,
    /// DFD channel with an explicit unit delay.
    Delay { init: Literal },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub source: Endpoint,
    pub sinks: Vec<Endpoint>,
    pub kind: ChannelKind,
    pub clock: Option<ClockExpr>,
}

impl Channel {
    pub fn instant(source: Endpoint, sinks: Vec<Endpoint>) -> Self {
        Channel { source, sinks, kind: ChannelKind::Instant, clock: None }
    }

    pub fn ssd(source: Endpoint, sinks: Vec<Endpoint>) -> Self {
        Channel { source, sinks, kind: ChannelKind::SsdDelayed { init: None }, clock: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mtd {
    pub initial: String,
    pub modes: Vec<Mode>,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub name: String,
    /// Component type providing the behavior (shared by reference).
    pub behavior: String,
}

/// Lower `priority` values are tried first.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub source: String,
    pub target: String,
    pub priority: i64,
    pub guard: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Std {
    pub initial: String,
    pub states: Vec<String>,
    pub vars: Vec<VarDecl>,
    pub transitions: Vec<StdTransition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub ty: DataType,
    pub init: Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StdTransition {
    pub source: String,
    pub target: String,
    pub priority: i64,
    pub guard: Expr,
    pub actions: Vec<Assignment>,
}

/// Smallest deployable unit: typed, explicitly clocked ports and a behavior.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub name: String,
    pub period_ms: u32,
    pub ports: Vec<Port>,
    pub behavior: String,
}

impl Cluster {
    /// Name of the single behavior instance inside a cluster wrapper.
    pub const BODY: &'static str = "body";

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    /// The cluster seen as a network: one instance of the behavior with each
    /// cluster port wired to the behavior port of the same name.
    pub fn wrapper_network(&self) -> Network {
        let body = Block { name: Self::BODY.into(), kind: BlockKind::instance(&self.behavior) };
        let channels = self
            .ports
            .iter()
            .map(|p| match p.dir {
                Direction::In => Channel::instant(Endpoint::port(&p.name), vec![Endpoint::block(Self::BODY, &p.name)]),
                Direction::Out => Channel::instant(Endpoint::block(Self::BODY, &p.name), vec![Endpoint::port(&p.name)]),
            })
            .collect();
        Network { blocks: vec![body], channels }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TechArch {
    pub ecus: Vec<String>,
    pub buses: Vec<Bus>,
    pub tasks: Vec<Task>,
    pub frames: Vec<Frame>,
}

impl TechArch {
    pub fn task(&self, name: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn frame(&self, name: &str) -> Option<&Frame> {
        self.frames.iter().find(|f| f.name == name)
    }

    pub fn bus(&self, name: &str) -> Option<&Bus> {
        self.buses.iter().find(|b| b.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub name: String,
    pub ecus: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub name: String,
    pub ecu: String,
    pub period_ms: u32,
    pub priority: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub name: String,
    pub bus: String,
    pub slots: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Deployment {
    pub cluster_to_task: Vec<(String, String)>,
    pub signal_to_frame: Vec<SignalMapping>,
}

/// Maps the flow produced at `cluster.port` onto `frame.slot`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMapping {
    pub cluster: String,
    pub port: String,
    pub frame: String,
    pub slot: String,
}
