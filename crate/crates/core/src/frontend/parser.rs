//! Recursive-descent parser for the block-structured `.amd` syntax.
//!
//! The grammar is documented in `docs/dsl.md`. Each file is parsed into a
//! list of top-level items which are then merged into one project.

use super::lexer::{tokenize, Tok, Token};
use crate::model::*;
use num_rational::Ratio;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Top-level declarations of one file, before merging.
#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Project(String),
    Level(Level),
    BaseTick(u32),
    System(String),
    Include(String),
    Enum(EnumDecl),
    Component(ComponentType),
    Cluster(Cluster),
    Ecu(String),
    Bus(Bus),
    Task(Task),
    Frame(Frame),
    Deploy(String, String),
    Signal(SignalMapping),
}

/// An item with the line it starts on.
pub type Located = (usize, Item);

pub fn parse_items(text: &str) -> Result<Vec<Located>, SyntaxError> {
    let toks = tokenize(text).map_err(|e| SyntaxError { line: e.line, col: e.col, message: e.message })?;
    let mut p = Parser { toks, pos: 0 };
    let mut items = Vec::new();
    while !p.at_eof() {
        let line = p.peek().line;
        items.push((line, p.item()?));
    }
    Ok(items)
}

/// Parses a standalone expression (used by tests and tools).
pub fn parse_expr(text: &str) -> Result<Expr, SyntaxError> {
    let toks = tokenize(text).map_err(|e| SyntaxError { line: e.line, col: e.col, message: e.message })?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses a standalone clock expression.
pub fn parse_clock(text: &str) -> Result<ClockExpr, SyntaxError> {
    let toks = tokenize(text).map_err(|e| SyntaxError { line: e.line, col: e.col, message: e.message })?;
    let mut p = Parser { toks, pos: 0 };
    let c = p.clock()?;
    p.expect_eof()?;
    Ok(c)
}

/// Parses an implementation or abstract type.
pub fn parse_type(text: &str) -> Result<DataType, SyntaxError> {
    let toks = tokenize(text).map_err(|e| SyntaxError { line: e.line, col: e.col, message: e.message })?;
    let mut p = Parser { toks, pos: 0 };
    let t = p.data_type()?;
    p.expect_eof()?;
    Ok(t)
}

type PResult<T> = Result<T, SyntaxError>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let t = self.peek();
        Err(SyntaxError { line: t.line, col: t.col, message: message.into() })
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek().tok))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.unexpected(&format!("'{p}'"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.unexpected(&format!("'{kw}'"))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("identifier"),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat_punct("-");
        match self.peek().tok {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => self.unexpected("integer"),
        }
    }

    fn uint(&mut self) -> PResult<u32> {
        match self.peek().tok {
            Tok::Int(v) if (0..=u32::MAX as i64).contains(&v) => {
                self.bump();
                Ok(v as u32)
            }
            _ => self.unexpected("non-negative integer"),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let neg = self.eat_punct("-");
        let v = match &self.peek().tok {
            Tok::Int(v) => *v as f64,
            Tok::Real(r) => r.parse::<f64>().expect("lexer validated"),
            _ => return self.unexpected("number"),
        };
        self.bump();
        Ok(if neg { -v } else { v })
    }

    /// Exact rational from a decimal literal or `n/d`.
    fn ratio(&mut self) -> PResult<Ratio<i64>> {
        let neg = self.eat_punct("-");
        let r = match self.peek().tok.clone() {
            Tok::Int(n) => {
                self.bump();
                if self.eat_punct("/") {
                    let d = self.int()?;
                    if d == 0 {
                        return self.error("zero denominator");
                    }
                    Ratio::new(n, d)
                } else {
                    Ratio::from_integer(n)
                }
            }
            Tok::Real(text) => match decimal_ratio(&text) {
                Some(r) => {
                    self.bump();
                    r
                }
                None => return self.error(format!("'{text}' is not an exact decimal")),
            },
            _ => return self.unexpected("number"),
        };
        Ok(if neg { -r } else { r })
    }

    fn item(&mut self) -> PResult<Item> {
        let kw = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return self.unexpected("declaration"),
        };
        self.bump();
        let item = match kw.as_str() {
            "project" => Item::Project(self.ident()?),
            "level" => {
                let l = match self.ident()?.as_str() {
                    "FAA" => Level::Faa,
                    "FDA" => Level::Fda,
                    "LA" => Level::La,
                    other => return self.error(format!("unknown level '{other}'")),
                };
                Item::Level(l)
            }
            "base_tick" => {
                let t = self.uint()?;
                if t == 0 {
                    return self.error("base tick must be positive");
                }
                Item::BaseTick(t)
            }
            "system" => Item::System(self.ident()?),
            "include" => match &self.peek().tok {
                Tok::Str(s) => {
                    let s = s.clone();
                    self.bump();
                    Item::Include(s)
                }
                _ => return self.unexpected("file name string"),
            },
            "enum" => {
                let name = self.ident()?;
                self.expect_punct("{")?;
                let mut labels = vec![self.ident()?];
                while self.eat_punct(",") {
                    labels.push(self.ident()?);
                }
                self.expect_punct("}")?;
                return Ok(Item::Enum(EnumDecl { name, labels }));
            }
            "component" => return self.component().map(Item::Component),
            "cluster" => return self.cluster().map(Item::Cluster),
            "ecu" => Item::Ecu(self.ident()?),
            "bus" => {
                let name = self.ident()?;
                self.expect_kw("connects")?;
                let mut ecus = vec![self.ident()?];
                while self.eat_punct(",") {
                    ecus.push(self.ident()?);
                }
                Item::Bus(Bus { name, ecus })
            }
            "task" => {
                let name = self.ident()?;
                self.expect_kw("on")?;
                let ecu = self.ident()?;
                self.expect_kw("period")?;
                let period_ms = self.uint()?;
                self.expect_kw("priority")?;
                let priority = self.int()?;
                Item::Task(Task { name, ecu, period_ms, priority })
            }
            "frame" => {
                let name = self.ident()?;
                self.expect_kw("on")?;
                let bus = self.ident()?;
                self.expect_punct("{")?;
                let mut slots = Vec::new();
                while self.eat_kw("slot") {
                    slots.push(self.ident()?);
                    self.expect_punct(";")?;
                }
                self.expect_punct("}")?;
                return Ok(Item::Frame(Frame { name, bus, slots }));
            }
            "deploy" => {
                let c = self.ident()?;
                self.expect_punct("->")?;
                let t = self.ident()?;
                Item::Deploy(c, t)
            }
            "signal" => {
                let cluster = self.ident()?;
                self.expect_punct(".")?;
                let port = self.ident()?;
                self.expect_punct("->")?;
                let frame = self.ident()?;
                self.expect_punct(".")?;
                let slot = self.ident()?;
                Item::Signal(SignalMapping { cluster, port, frame, slot })
            }
            other => {
                self.pos -= 1;
                return self.error(format!("unknown declaration '{other}'"));
            }
        };
        self.expect_punct(";")?;
        Ok(item)
    }

    fn data_type(&mut self) -> PResult<DataType> {
        let name = self.ident()?;
        Ok(match name.as_str() {
            "bool" => DataType::Bool,
            "int" => DataType::Int,
            "real" => DataType::Real,
            "int8" => DataType::Impl(ImplType::Int(IntWidth::I8)),
            "int16" => DataType::Impl(ImplType::Int(IntWidth::I16)),
            "int32" => DataType::Impl(ImplType::Int(IntWidth::I32)),
            "fixed" => {
                self.expect_punct("(")?;
                let base = match self.ident()?.as_str() {
                    "int8" => IntWidth::I8,
                    "int16" => IntWidth::I16,
                    "int32" => IntWidth::I32,
                    other => return self.error(format!("fixed-point base must be int8/int16/int32, not '{other}'")),
                };
                self.expect_punct(",")?;
                let scale = self.ratio()?;
                self.expect_punct(",")?;
                let offset = self.ratio()?;
                self.expect_punct(")")?;
                DataType::Impl(ImplType::Fixed { base, scale, offset })
            }
            _ => DataType::Enum(name),
        })
    }

    fn port(&mut self, dir: Direction) -> PResult<Port> {
        let name = self.ident()?;
        let mut port = Port::new(name, dir, None);
        if self.eat_punct(":") {
            port.ty = Some(self.data_type()?);
        }
        if self.eat_kw("range") {
            self.expect_punct("[")?;
            let lo = self.number()?;
            self.expect_punct(",")?;
            let hi = self.number()?;
            self.expect_punct("]")?;
            port.range = Some((lo, hi));
        }
        if self.eat_punct("@") {
            port.clock = Some(self.clock()?);
        }
        if self.eat_kw("actuator") {
            port.actuator = true;
        }
        self.expect_punct(";")?;
        Ok(port)
    }

    fn component(&mut self) -> PResult<ComponentType> {
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut ports = Vec::new();
        let mut def: Option<Definition> = None;
        loop {
            if self.eat_punct("}") {
                break;
            }
            if self.eat_kw("in") {
                ports.push(self.port(Direction::In)?);
                continue;
            }
            if self.eat_kw("out") {
                ports.push(self.port(Direction::Out)?);
                continue;
            }
            if def.is_some() && !self.at_eof() {
                return self.error("a component has exactly one definition");
            }
            let d = if self.eat_kw("unspecified") {
                self.expect_punct(";")?;
                Definition::Unspecified
            } else if self.eat_kw("function") {
                self.function()?
            } else if self.eat_kw("ssd") {
                Definition::Ssd(self.network(true)?)
            } else if self.eat_kw("dfd") {
                Definition::Dfd(self.network(false)?)
            } else if self.eat_kw("mtd") {
                self.mtd()?
            } else if self.eat_kw("std") {
                self.std()?
            } else {
                return self.unexpected("port, definition or '}'");
            };
            def = Some(d);
        }
        Ok(ComponentType { name, ports, def: def.unwrap_or(Definition::Unspecified) })
    }

    fn function(&mut self) -> PResult<Definition> {
        self.expect_punct("{")?;
        let mut assigns = Vec::new();
        while !self.eat_punct("}") {
            let target = self.ident()?;
            self.expect_punct("=")?;
            let expr = self.expr()?;
            self.expect_punct(";")?;
            assigns.push(Assignment { target, expr });
        }
        Ok(Definition::Function(assigns))
    }

    fn endpoint(&mut self) -> PResult<Endpoint> {
        let a = self.ident()?;
        if self.eat_punct(".") {
            Ok(Endpoint::Block(a, self.ident()?))
        } else {
            Ok(Endpoint::Port(a))
        }
    }

    fn init_value(&mut self) -> PResult<Option<Literal>> {
        if self.is_punct("-") && !matches!(self.peek_at(1), Tok::Int(_) | Tok::Real(_)) {
            self.bump();
            return Ok(None);
        }
        self.literal().map(Some)
    }

    fn literal(&mut self) -> PResult<Literal> {
        let neg = self.eat_punct("-");
        let lit = match self.peek().tok.clone() {
            Tok::Int(v) => Literal::Int(if neg { -v } else { v }),
            Tok::Real(r) => {
                let v: f64 = r.parse().expect("lexer validated");
                Literal::Real(if neg { -v } else { v })
            }
            Tok::Ident(s) if !neg => match s.as_str() {
                "true" => Literal::Bool(true),
                "false" => Literal::Bool(false),
                _ => Literal::Label(s),
            },
            _ => return self.unexpected("literal"),
        };
        self.bump();
        Ok(lit)
    }

    fn network(&mut self, ssd: bool) -> PResult<Network> {
        self.expect_punct("{")?;
        let mut net = Network::default();
        while !self.eat_punct("}") {
            if ssd && self.eat_kw("sub") {
                let name = self.ident()?;
                self.expect_punct(":")?;
                let of = self.ident()?;
                self.expect_punct(";")?;
                net.blocks.push(Block { name, kind: BlockKind::instance(of) });
            } else if !ssd && self.eat_kw("block") {
                let name = self.ident()?;
                self.expect_punct(":")?;
                let kind = self.block_kind()?;
                self.expect_punct(";")?;
                net.blocks.push(Block { name, kind });
            } else if self.eat_kw("channel") {
                let source = self.endpoint()?;
                self.expect_punct("->")?;
                let mut sinks = vec![self.endpoint()?];
                while self.eat_punct(",") {
                    sinks.push(self.endpoint()?);
                }
                let kind = if ssd {
                    let init = if self.eat_kw("init") { Some(self.literal()?) } else { None };
                    ChannelKind::SsdDelayed { init }
                } else if self.eat_kw("delay") {
                    self.expect_punct("(")?;
                    let init = self.literal()?;
                    self.expect_punct(")")?;
                    ChannelKind::Delay { init }
                } else {
                    ChannelKind::Instant
                };
                let clock = if self.eat_punct("@") { Some(self.clock()?) } else { None };
                self.expect_punct(";")?;
                net.channels.push(Channel { source, sinks, kind, clock });
            } else {
                return self.unexpected(if ssd { "'sub', 'channel' or '}'" } else { "'block', 'channel' or '}'" });
            }
        }
        Ok(net)
    }

    fn block_kind(&mut self) -> PResult<BlockKind> {
        let name = self.ident()?;
        let builtin = matches!(self.peek().tok, Tok::Punct("("));
        Ok(match (name.as_str(), builtin) {
            ("when", true) => {
                self.expect_punct("(")?;
                let c = self.clock()?;
                self.expect_punct(")")?;
                BlockKind::When(c)
            }
            ("delay", true) => {
                self.expect_punct("(")?;
                let init = self.init_value()?;
                self.expect_punct(")")?;
                let clock = if self.eat_punct("@") { Some(self.clock()?) } else { None };
                BlockKind::Delay { init, clock }
            }
            ("merge", true) => {
                self.expect_punct("(")?;
                let n = self.uint()? as usize;
                self.expect_punct(")")?;
                BlockKind::Merge(n)
            }
            ("hold", true) => {
                self.expect_punct("(")?;
                let init = self.literal()?;
                self.expect_punct(")")?;
                BlockKind::Hold { init }
            }
            _ => {
                let gate = if self.eat_kw("when") { Some(self.clock()?) } else { None };
                BlockKind::Instance { of: name, gate }
            }
        })
    }

    fn mtd(&mut self) -> PResult<Definition> {
        self.expect_punct("{")?;
        let mut initial = None;
        let mut modes = Vec::new();
        let mut transitions = Vec::new();
        while !self.eat_punct("}") {
            if self.eat_kw("initial") {
                if initial.is_some() {
                    return self.error("exactly one initial mode");
                }
                initial = Some(self.ident()?);
                self.expect_punct(";")?;
            } else if self.eat_kw("mode") {
                let name = self.ident()?;
                self.expect_punct(":")?;
                let behavior = self.ident()?;
                self.expect_punct(";")?;
                modes.push(Mode { name, behavior });
            } else if self.eat_kw("transition") {
                let (source, target, priority, guard) = self.transition_head()?;
                self.expect_punct(";")?;
                transitions.push(Transition { source, target, priority, guard });
            } else {
                return self.unexpected("'initial', 'mode', 'transition' or '}'");
            }
        }
        let Some(initial) = initial else {
            return self.error("MTD lacks an initial mode");
        };
        Ok(Definition::Mtd(Mtd { initial, modes, transitions }))
    }

    fn transition_head(&mut self) -> PResult<(String, String, i64, Expr)> {
        let source = self.ident()?;
        self.expect_punct("->")?;
        let target = self.ident()?;
        self.expect_kw("priority")?;
        let priority = self.int()?;
        let guard = if self.eat_kw("on") { self.expr()? } else { Expr::Lit(Literal::Bool(true)) };
        Ok((source, target, priority, guard))
    }

    fn std(&mut self) -> PResult<Definition> {
        self.expect_punct("{")?;
        let mut initial = None;
        let mut states = Vec::new();
        let mut vars = Vec::new();
        let mut transitions = Vec::new();
        while !self.eat_punct("}") {
            if self.eat_kw("initial") {
                if initial.is_some() {
                    return self.error("exactly one initial state");
                }
                initial = Some(self.ident()?);
                self.expect_punct(";")?;
            } else if self.eat_kw("state") {
                states.push(self.ident()?);
                self.expect_punct(";")?;
            } else if self.eat_kw("var") {
                let name = self.ident()?;
                self.expect_punct(":")?;
                let ty = self.data_type()?;
                self.expect_punct("=")?;
                let init = self.literal()?;
                self.expect_punct(";")?;
                vars.push(VarDecl { name, ty, init });
            } else if self.eat_kw("transition") {
                let (source, target, priority, guard) = self.transition_head()?;
                let mut actions = Vec::new();
                if self.eat_kw("do") {
                    self.expect_punct("{")?;
                    while !self.eat_punct("}") {
                        let target = self.ident()?;
                        self.expect_punct(":=")?;
                        let expr = self.expr()?;
                        self.expect_punct(";")?;
                        actions.push(Assignment { target, expr });
                    }
                }
                self.expect_punct(";")?;
                transitions.push(StdTransition { source, target, priority, guard, actions });
            } else {
                return self.unexpected("'initial', 'state', 'var', 'transition' or '}'");
            }
        }
        let Some(initial) = initial else {
            return self.error("STD lacks an initial state");
        };
        Ok(Definition::Std(Std { initial, states, vars, transitions }))
    }

    fn cluster(&mut self) -> PResult<Cluster> {
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut period = None;
        let mut ports = Vec::new();
        let mut behavior = None;
        while !self.eat_punct("}") {
            if self.eat_kw("period") {
                period = Some(self.uint()?);
                self.expect_punct(";")?;
            } else if self.eat_kw("in") {
                ports.push(self.port(Direction::In)?);
            } else if self.eat_kw("out") {
                ports.push(self.port(Direction::Out)?);
            } else if self.eat_kw("behavior") {
                behavior = Some(self.ident()?);
                self.expect_punct(";")?;
            } else {
                return self.unexpected("'period', port, 'behavior' or '}'");
            }
        }
        match (period, behavior) {
            (Some(period_ms), Some(behavior)) => Ok(Cluster { name, period_ms, ports, behavior }),
            _ => self.error("cluster needs a period and a behavior"),
        }
    }

    // ---- clocks ----

    fn clock(&mut self) -> PResult<ClockExpr> {
        let first = self.clock_and()?;
        if !self.is_kw("or") {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat_kw("or") {
            parts.push(self.clock_and()?);
        }
        Ok(ClockExpr::Or(parts))
    }

    fn clock_and(&mut self) -> PResult<ClockExpr> {
        let first = self.clock_unary()?;
        if !self.is_kw("and") {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat_kw("and") {
            parts.push(self.clock_unary()?);
        }
        Ok(ClockExpr::And(parts))
    }

    fn clock_unary(&mut self) -> PResult<ClockExpr> {
        if self.eat_kw("not") {
            return Ok(ClockExpr::Not(Box::new(self.clock_unary()?)));
        }
        if self.eat_punct("(") {
            let c = self.clock()?;
            self.expect_punct(")")?;
            return Ok(c);
        }
        let kw = self.ident()?;
        match kw.as_str() {
            "base" | "true" => Ok(ClockExpr::Base),
            "every" => {
                self.expect_punct("(")?;
                let n = self.uint()?;
                let sub = if self.eat_punct(",") { self.clock()? } else { ClockExpr::Base };
                self.expect_punct(")")?;
                Ok(ClockExpr::Every(n, Box::new(sub)))
            }
            "present" => {
                self.expect_punct("(")?;
                let e = self.endpoint()?;
                self.expect_punct(")")?;
                Ok(ClockExpr::Present(e))
            }
            "mode" => {
                self.expect_punct("(")?;
                let e = self.endpoint()?;
                self.expect_punct(",")?;
                let l = self.ident()?;
                self.expect_punct(")")?;
                Ok(ClockExpr::Mode(e, l))
            }
            other => {
                self.pos -= 1;
                self.error(format!("unknown clock operator '{other}'"))
            }
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let a = self.expr()?;
            self.expect_kw("else")?;
            let b = self.expr()?;
            return Ok(Expr::If(Box::new(c), Box::new(a), Box::new(b)));
        }
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek().tok else { return None };
        Some(match p {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Mod,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = if self.is_kw("if") { self.expr()? } else { self.binary(prec + 1)? };
            if op.is_comparison() && self.binop().is_some_and(BinOp::is_comparison) {
                return self.error("comparison operators do not chain");
            }
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("-") {
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Lit(Literal::Int(v)) if v >= 0 => Expr::Lit(Literal::Int(-v)),
                Expr::Lit(Literal::Real(v)) if v.is_sign_positive() => Expr::Lit(Literal::Real(-v)),
                other => Expr::Unary(UnOp::Neg, Box::new(other)),
            });
        }
        if self.eat_punct("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().tok.clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Lit(Literal::Int(v)))
            }
            Tok::Real(r) => {
                self.bump();
                Ok(Expr::Lit(Literal::Real(r.parse().expect("lexer validated"))))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) => {
                self.bump();
                match s.as_str() {
                    "true" => return Ok(Expr::Lit(Literal::Bool(true))),
                    "false" => return Ok(Expr::Lit(Literal::Bool(false))),
                    "present" if self.is_punct("(") => {
                        self.bump();
                        let n = self.ident()?;
                        self.expect_punct(")")?;
                        return Ok(Expr::Present(n));
                    }
                    _ => {}
                }
                let func = match s.as_str() {
                    "abs" => Some(Func::Abs),
                    "min" => Some(Func::Min),
                    "max" => Some(Func::Max),
                    _ => None,
                };
                if let (Some(f), true) = (func, self.is_punct("(")) {
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while self.eat_punct(",") {
                        args.push(self.expr()?);
                    }
                    self.expect_punct(")")?;
                    if args.len() != f.arity() {
                        return self.error(format!("{} takes {} argument(s)", f.name(), f.arity()));
                    }
                    return Ok(Expr::Call(f, args));
                }
                Ok(Expr::Var(s))
            }
            _ => self.unexpected("expression"),
        }
    }
}

/// Exact rational value of a decimal literal without exponent.
pub fn decimal_ratio(text: &str) -> Option<Ratio<i64>> {
    if text.contains(['e', 'E']) {
        return None;
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, text),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits = format!("{int}{frac}");
    let num: i64 = digits.parse().ok()?;
    let den = 10i64.checked_pow(frac.len() as u32)?;
    let r = Ratio::new(num, den);
    Some(if neg { -r } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expression_precedence() {
        let e = parse_expr("ch1 + ch2 + ch3").unwrap();
        assert_eq!(e.to_string(), "ch1 + ch2 + ch3");
        let e = parse_expr("a + b * -c > 3 && !present(d)").unwrap();
        assert_eq!(e.to_string(), "a + b * -c > 3 && !present(d)");
        let e = parse_expr("if x > 0 then x else -x").unwrap();
        assert!(matches!(e, Expr::If(..)));
        assert!(parse_expr("a < b < c").is_err());
    }

    #[test]
    fn clock_syntax() {
        assert_eq!(parse_clock("every(2, true)").unwrap(), ClockExpr::every(2, ClockExpr::Base));
        let c = parse_clock("every(3, every(2)) and present(x) or not mode(ctl.mode, A)").unwrap();
        assert!(matches!(c, ClockExpr::Or(ref v) if v.len() == 2));
    }

    #[test]
    fn fixed_type() {
        let t = parse_type("fixed(int16, 0.1, -2.5)").unwrap();
        assert_eq!(
            t,
            DataType::Impl(ImplType::Fixed {
                base: IntWidth::I16,
                scale: Ratio::new(1, 10),
                offset: Ratio::new(-5, 2)
            })
        );
        assert!(parse_type("fixed(int16, 1e-3, 0)").is_err());
    }

    #[test]
    fn unbalanced_brace_reports_line() {
        let err = parse_items("component A {\n  in x : int;\n").unwrap_err();
        assert_eq!(err.line, 3);
    }
}
