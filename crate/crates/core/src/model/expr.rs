use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Real(f64),
    /// Enum label.
    Label(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Real(r) => write!(f, "{r:?}"),
            Literal::Label(l) => f.write_str(l),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 5,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        self.precedence() >= 4
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Min,
    Max,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Abs => 1,
            Func::Min | Func::Max => 2,
        }
    }
}

/// Base-language expression over port and variable names.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Literal),
    Var(String),
    /// `present(x)`: message presence, never absent itself.
    Present(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn int(v: i64) -> Self {
        Expr::Lit(Literal::Int(v))
    }

    pub fn real(v: f64) -> Self {
        Expr::Lit(Literal::Real(v))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Names read as values (strict operands), in first-occurrence order.
    pub fn value_reads(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                if !out.contains(&v.as_str()) {
                    out.push(v.as_str());
                }
            }
        });
        out
    }

    /// Every name referenced, including `present(..)` arguments.
    pub fn names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Var(v) | Expr::Present(v) = e {
                if !out.contains(&v.as_str()) {
                    out.push(v.as_str());
                }
            }
        });
        out
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::Present(_) => {}
            Expr::Unary(_, a) => a.walk(f),
            Expr::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::If(c, a, b) => {
                c.walk(f);
                a.walk(f);
                b.walk(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.walk(f)),
        }
    }

    /// Applies `f` to every literal in place.
    pub fn map_literals(&mut self, f: &mut dyn FnMut(&mut Literal)) {
        match self {
            Expr::Lit(l) => f(l),
            Expr::Var(_) | Expr::Present(_) => {}
            Expr::Unary(_, a) => a.map_literals(f),
            Expr::Binary(_, a, b) => {
                a.map_literals(f);
                b.map_literals(f);
            }
            Expr::If(c, a, b) => {
                c.map_literals(f);
                a.map_literals(f);
                b.map_literals(f);
            }
            Expr::Call(_, args) => args.iter_mut().for_each(|a| a.map_literals(f)),
        }
    }

    /// Renames variable references.
    pub fn rename(&mut self, f: &dyn Fn(&str) -> Option<String>) {
        match self {
            Expr::Var(v) | Expr::Present(v) => {
                if let Some(n) = f(v) {
                    *v = n;
                }
            }
            Expr::Lit(_) => {}
            Expr::Unary(_, a) => a.rename(f),
            Expr::Binary(_, a, b) => {
                a.rename(f);
                b.rename(f);
            }
            Expr::If(c, a, b) => {
                c.rename(f);
                a.rename(f);
                b.rename(f);
            }
            Expr::Call(_, args) => args.iter_mut().for_each(|a| a.rename(f)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::If(..) => 0,
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Unary(..) => 6,
            Expr::Lit(Literal::Int(v)) if *v < 0 => 6,
            Expr::Lit(Literal::Real(v)) if v.is_sign_negative() => 6,
            _ => 7,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(l) => write!(f, "{l}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Present(v) => write!(f, "present({v})"),
            Expr::Unary(op, a) => {
                f.write_str(match op {
                    UnOp::Neg => "-",
                    UnOp::Not => "!",
                })?;
                a.fmt_child(f, 7)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                // comparisons do not chain
                let left_min = if op.is_comparison() { p + 1 } else { p };
                a.fmt_child(f, left_min)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_child(f, p + 1)
            }
            Expr::If(c, a, b) => {
                write!(f, "if {c} then {a} else {b}")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
