//! Expressions compiled to slot indices and evaluated over messages.

use super::value::{abs, arith, compare, negate, ArithError, Msg, Num};
use crate::model::{BinOp, Expr, Func, Literal, UnOp};

#[derive(Debug, Clone, PartialEq)]
pub enum CExpr {
    Lit(Num),
    Var(usize),
    Present(usize),
    Unary(UnOp, Box<CExpr>),
    Binary(BinOp, Box<CExpr>, Box<CExpr>),
    If(Box<CExpr>, Box<CExpr>, Box<CExpr>),
    Call(Func, Vec<CExpr>),
}

/// Resolves names to slots; unresolved names are enum labels.
pub fn compile(e: &Expr, slot: &dyn Fn(&str) -> Option<usize>) -> CExpr {
    let go = |x: &Expr| Box::new(compile(x, slot));
    match e {
        Expr::Lit(l) => CExpr::Lit(Num::from_literal(l)),
        Expr::Var(v) => match slot(v) {
            Some(i) => CExpr::Var(i),
            None => CExpr::Lit(Num::from_literal(&Literal::Label(v.clone()))),
        },
        Expr::Present(v) => match slot(v) {
            Some(i) => CExpr::Present(i),
            None => CExpr::Lit(Num::B(false)),
        },
        Expr::Unary(op, x) => CExpr::Unary(*op, go(x)),
        Expr::Binary(op, a, b) => CExpr::Binary(*op, go(a), go(b)),
        Expr::If(c, a, b) => CExpr::If(go(c), go(a), go(b)),
        Expr::Call(f, args) => CExpr::Call(*f, args.iter().map(|a| compile(a, slot)).collect()),
    }
}

impl CExpr {
    /// Slots read as values.
    pub fn reads(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect(&self, out: &mut Vec<usize>) {
        match self {
            CExpr::Var(i) => out.push(*i),
            CExpr::Lit(_) | CExpr::Present(_) => {}
            CExpr::Unary(_, x) => x.collect(out),
            CExpr::Binary(_, a, b) => {
                a.collect(out);
                b.collect(out);
            }
            CExpr::If(c, a, b) => {
                c.collect(out);
                a.collect(out);
                b.collect(out);
            }
            CExpr::Call(_, xs) => xs.iter().for_each(|x| x.collect(out)),
        }
    }

    /// Evaluates with absent reads as unknown (`None`). Boolean connectives
    /// follow three-valued logic and short-circuit; only the taken branch of
    /// a conditional is evaluated.
    pub fn eval(&self, env: &[Msg]) -> Result<Option<Num>, ArithError> {
        Ok(match self {
            CExpr::Lit(n) => Some(n.clone()),
            CExpr::Var(i) => env[*i].as_ref().map(Num::from_value),
            CExpr::Present(i) => Some(Num::B(env[*i].is_some())),
            CExpr::Unary(op, x) => match x.eval(env)? {
                None => None,
                Some(v) => Some(match op {
                    UnOp::Neg => negate(&v)?,
                    UnOp::Not => Num::B(!v.as_bool()?),
                }),
            },
            CExpr::Binary(BinOp::And, a, b) => match truth(a.eval(env)?)? {
                Some(false) => Some(Num::B(false)),
                left => match (left, truth(b.eval(env)?)?) {
                    (_, Some(false)) => Some(Num::B(false)),
                    (Some(true), Some(true)) => Some(Num::B(true)),
                    _ => None,
                },
            },
            CExpr::Binary(BinOp::Or, a, b) => match truth(a.eval(env)?)? {
                Some(true) => Some(Num::B(true)),
                left => match (left, truth(b.eval(env)?)?) {
                    (_, Some(true)) => Some(Num::B(true)),
                    (Some(false), Some(false)) => Some(Num::B(false)),
                    _ => None,
                },
            },
            CExpr::Binary(op, a, b) => match (a.eval(env)?, b.eval(env)?) {
                (Some(x), Some(y)) if op.is_comparison() => Some(Num::B(compare(*op, &x, &y)?)),
                (Some(x), Some(y)) => Some(arith(*op, &x, &y)?),
                _ => None,
            },
            CExpr::If(c, a, b) => match truth(c.eval(env)?)? {
                None => None,
                Some(true) => a.eval(env)?,
                Some(false) => b.eval(env)?,
            },
            CExpr::Call(f, xs) => {
                let mut args = Vec::with_capacity(xs.len());
                for x in xs {
                    match x.eval(env)? {
                        Some(v) => args.push(v),
                        None => return Ok(None),
                    }
                }
                Some(match f {
                    Func::Abs => abs(&args[0])?,
                    Func::Min => pick(BinOp::Le, args)?,
                    Func::Max => pick(BinOp::Ge, args)?,
                })
            }
        })
    }

    /// Guard semantics: fires only when definitely true.
    pub fn holds(&self, env: &[Msg]) -> Result<bool, ArithError> {
        Ok(truth(self.eval(env)?)? == Some(true))
    }
}

fn truth(v: Option<Num>) -> Result<Option<bool>, ArithError> {
    v.map(|n| n.as_bool()).transpose()
}

fn pick(op: BinOp, mut args: Vec<Num>) -> Result<Num, ArithError> {
    let b = args.pop().expect("binary");
    let a = args.pop().expect("binary");
    Ok(if compare(op, &a, &b)? { a } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_expr;
    use crate::sim::value::Value;

    fn run(src: &str, env: &[Msg]) -> Option<Num> {
        let e = parse_expr(src).unwrap();
        let c = compile(&e, &|n| ["a", "b", "c"].iter().position(|x| *x == n));
        c.eval(env).unwrap()
    }

    #[test]
    fn sum_of_three() {
        let env = [Some(Value::Int(1)), Some(Value::Int(2)), Some(Value::Int(3))];
        assert_eq!(run("a + b + c", &env), Some(Num::I(6)));
    }

    #[test]
    fn kleene_connectives() {
        let env = [None, Some(Value::Bool(false)), Some(Value::Bool(true))];
        assert_eq!(run("a && b", &env), Some(Num::B(false)));
        assert_eq!(run("a || c", &env), Some(Num::B(true)));
        assert_eq!(run("a && c", &env), None);
        assert_eq!(run("present(a) || b", &env), Some(Num::B(false)));
    }

    #[test]
    fn untaken_branch_not_evaluated() {
        let env = [Some(Value::Int(0)), Some(Value::Int(5)), None];
        assert_eq!(run("if a == 0 then 0 else b / a", &env), Some(Num::I(0)));
        let e = compile(&parse_expr("b / a").unwrap(), &|n| ["a", "b"].iter().position(|x| *x == n));
        assert_eq!(e.eval(&env), Err(ArithError::DivByZero));
    }
}
