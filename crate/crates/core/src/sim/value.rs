//! Message values and arithmetic.
//!
//! Flows carry [`Value`]s encoded for their type; fixed-point values keep
//! their raw integer. Expressions compute on [`Num`], where fixed-point
//! operands are decoded to exact rationals and requantized at the target.

use crate::model::{DataType, ImplType, IntWidth, Literal};
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use std::fmt;
use thiserror::Error;

pub type Q = Ratio<i128>;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    /// Abstract `int` and sized integers.
    Int(i64),
    Real(f64),
    Label(String),
    /// Raw fixed-point value; decoded = raw * scale + offset.
    Fixed {
        raw: i64,
        scale: Ratio<i64>,
        offset: Ratio<i64>,
    },
}

/// A message: `None` is the absent value.
pub type Msg = Option<Value>;

impl Value {
    /// Exact decoded value of a fixed-point message.
    pub fn decoded(&self) -> Option<Q> {
        match self {
            Value::Fixed { raw, scale, offset } => Some(Q::from(*raw as i128) * widen(*scale) + widen(*offset)),
            Value::Int(i) => Some(Q::from(*i as i128)),
            _ => None,
        }
    }

    /// Numeric value as binary64, for tolerance comparisons.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Real(r) => Some(*r),
            Value::Int(i) => Some(*i as f64),
            Value::Fixed { .. } => self.decoded().and_then(|q| q.to_f64()),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Label(l) => f.write_str(l),
            Value::Fixed { .. } => f.write_str(&format_q(self.decoded().expect("fixed"))),
        }
    }
}

pub fn widen(r: Ratio<i64>) -> Q {
    Q::new(*r.numer() as i128, *r.denom() as i128)
}

/// Terminating decimal when possible, else `n/d`.
pub fn format_q(q: Q) -> String {
    let (n, d) = (*q.numer(), *q.denom());
    if d == 1 {
        return n.to_string();
    }
    let (mut rest, mut digits) = (d, 0u32);
    let (mut twos, mut fives) = (0u32, 0u32);
    while rest % 2 == 0 {
        rest /= 2;
        twos += 1;
    }
    while rest % 5 == 0 {
        rest /= 5;
        fives += 1;
    }
    if rest != 1 {
        return format!("{n}/{d}");
    }
    digits += twos.max(fives);
    let scale = 10i128.pow(digits);
    let scaled = n * (scale / d);
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    format!("{sign}{}.{:0width$}", abs / scale as u128, abs % scale as u128, width = digits as usize)
}

/// Exact rational of a binary64 value via its shortest decimal text.
pub fn q_from_f64(v: f64) -> Option<Q> {
    if !v.is_finite() {
        return None;
    }
    parse_q(&format!("{v:?}"))
}

/// Exact rational from decimal text (`-12.5`, `3`, `1e-3`).
pub fn parse_q(text: &str) -> Option<Q> {
    let (mant, exp) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (neg, body) = match mant.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits: i128 = format!("{int}{frac}").parse().ok()?;
    let e = exp - frac.len() as i32;
    let pow = 10i128.checked_pow(e.unsigned_abs())?;
    let q = if e >= 0 { Q::from(digits.checked_mul(pow)?) } else { Q::new(digits, pow) };
    Some(if neg { -q } else { q })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("value {0} out of range for {1}")]
    OutOfRange(String, String),
    #[error("{0}")]
    Type(String),
}

/// Runtime operand of expression evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Num {
    B(bool),
    I(i64),
    R(f64),
    Q(Q),
    L(String),
}

impl Num {
    pub fn from_value(v: &Value) -> Num {
        match v {
            Value::Bool(b) => Num::B(*b),
            Value::Int(i) => Num::I(*i),
            Value::Real(r) => Num::R(*r),
            Value::Label(l) => Num::L(l.clone()),
            Value::Fixed { .. } => Num::Q(v.decoded().expect("fixed")),
        }
    }

    pub fn from_literal(l: &Literal) -> Num {
        match l {
            Literal::Bool(b) => Num::B(*b),
            Literal::Int(i) => Num::I(*i),
            Literal::Real(r) => Num::R(*r),
            Literal::Label(s) => Num::L(s.clone()),
        }
    }

    pub fn as_bool(&self) -> Result<bool, ArithError> {
        match self {
            Num::B(b) => Ok(*b),
            other => Err(ArithError::Type(format!("expected bool, found {other:?}"))),
        }
    }

    fn to_q(&self) -> Result<Q, ArithError> {
        match self {
            Num::I(i) => Ok(Q::from(*i as i128)),
            Num::Q(q) => Ok(*q),
            Num::R(r) => q_from_f64(*r).ok_or(ArithError::Overflow),
            other => Err(ArithError::Type(format!("expected number, found {other:?}"))),
        }
    }

    fn to_r(&self) -> Result<f64, ArithError> {
        match self {
            Num::I(i) => Ok(*i as f64),
            Num::R(r) => Ok(*r),
            Num::Q(q) => q.to_f64().ok_or(ArithError::Overflow),
            other => Err(ArithError::Type(format!("expected number, found {other:?}"))),
        }
    }
}

/// Common numeric domain of two operands: exact if either is exact,
/// else binary64 if either is real, else integer.
enum Pair {
    I(i64, i64),
    R(f64, f64),
    Q(Q, Q),
}

fn pair(a: &Num, b: &Num) -> Result<Pair, ArithError> {
    Ok(match (a, b) {
        (Num::I(x), Num::I(y)) => Pair::I(*x, *y),
        (Num::Q(_), _) | (_, Num::Q(_)) => Pair::Q(a.to_q()?, b.to_q()?),
        _ => Pair::R(a.to_r()?, b.to_r()?),
    })
}

fn checked_q(q: Q) -> Result<Q, ArithError> {
    // Keep intermediate rationals far from i128 limits.
    let limit = 1i128 << 100;
    if q.numer().abs() > limit || *q.denom() > limit {
        Err(ArithError::Overflow)
    } else {
        Ok(q)
    }
}

pub fn arith(op: crate::model::BinOp, a: &Num, b: &Num) -> Result<Num, ArithError> {
    use crate::model::BinOp::*;
    Ok(match pair(a, b)? {
        Pair::I(x, y) => Num::I(
            match op {
                Add => x.checked_add(y),
                Sub => x.checked_sub(y),
                Mul => x.checked_mul(y),
                Div if y == 0 => return Err(ArithError::DivByZero),
                Div => x.checked_div(y),
                Mod if y == 0 => return Err(ArithError::DivByZero),
                Mod => x.checked_rem(y),
                _ => unreachable!("not arithmetic"),
            }
            .ok_or(ArithError::Overflow)?,
        ),
        Pair::R(x, y) => Num::R(match op {
            Add => x + y,
            Sub => x - y,
            Mul => x * y,
            Div if y == 0.0 => return Err(ArithError::DivByZero),
            Div => x / y,
            Mod if y == 0.0 => return Err(ArithError::DivByZero),
            Mod => x % y,
            _ => unreachable!("not arithmetic"),
        }),
        Pair::Q(x, y) => Num::Q(checked_q(match op {
            Add => x + y,
            Sub => x - y,
            Mul => x * y,
            Div | Mod if y.is_zero() => return Err(ArithError::DivByZero),
            Div => x / y,
            Mod => x % y,
            _ => unreachable!("not arithmetic"),
        })?),
    })
}

pub fn compare(op: crate::model::BinOp, a: &Num, b: &Num) -> Result<bool, ArithError> {
    use crate::model::BinOp::*;
    use std::cmp::Ordering;
    let ord = match (a, b) {
        (Num::B(x), Num::B(y)) => x.cmp(y),
        (Num::L(x), Num::L(y)) => {
            return match op {
                Eq => Ok(x == y),
                Ne => Ok(x != y),
                _ => Err(ArithError::Type("labels are only compared for equality".into())),
            }
        }
        _ => match pair(a, b)? {
            Pair::I(x, y) => x.cmp(&y),
            Pair::Q(x, y) => x.cmp(&y),
            Pair::R(x, y) => match x.partial_cmp(&y) {
                Some(o) => o,
                None => return Ok(op == Ne),
            },
        },
    };
    Ok(match op {
        Eq => ord == Ordering::Equal,
        Ne => ord != Ordering::Equal,
        Lt => ord == Ordering::Less,
        Le => ord != Ordering::Greater,
        Gt => ord == Ordering::Greater,
        Ge => ord != Ordering::Less,
        _ => unreachable!("not a comparison"),
    })
}

pub fn negate(a: &Num) -> Result<Num, ArithError> {
    Ok(match a {
        Num::I(i) => Num::I(i.checked_neg().ok_or(ArithError::Overflow)?),
        Num::R(r) => Num::R(-r),
        Num::Q(q) => Num::Q(-q),
        other => return Err(ArithError::Type(format!("cannot negate {other:?}"))),
    })
}

pub fn abs(a: &Num) -> Result<Num, ArithError> {
    Ok(match a {
        Num::I(i) => Num::I(i.checked_abs().ok_or(ArithError::Overflow)?),
        Num::R(r) => Num::R(r.abs()),
        Num::Q(q) => Num::Q(q.abs()),
        other => return Err(ArithError::Type(format!("cannot take abs of {other:?}"))),
    })
}

/// Overflow handling for implementation types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Overflow {
    #[default]
    Trap,
    Wrap,
}

fn fit(
    raw: i128,
    w: IntWidth,
    mode: Overflow,
    shown: &dyn Fn() -> String,
    ty: &dyn Fn() -> String,
) -> Result<i64, ArithError> {
    if raw >= w.min() as i128 && raw <= w.max() as i128 {
        return Ok(raw as i64);
    }
    match mode {
        Overflow::Wrap => Ok(w.wrap(raw as i64)),
        Overflow::Trap => Err(ArithError::OutOfRange(shown(), ty())),
    }
}

/// Raw fixed-point value nearest to `v` (ties away from zero).
pub fn quantize(v: Q, scale: Ratio<i64>, offset: Ratio<i64>) -> i128 {
    ((v - widen(offset)) / widen(scale)).round().to_integer()
}

/// Encodes a computed operand as a message of type `ty`.
pub fn encode(n: &Num, ty: Option<&DataType>, mode: Overflow) -> Result<Value, ArithError> {
    let Some(ty) = ty else {
        return Ok(match n {
            Num::B(b) => Value::Bool(*b),
            Num::I(i) => Value::Int(*i),
            Num::R(r) => Value::Real(*r),
            Num::Q(q) => Value::Real(q.to_f64().unwrap_or(f64::NAN)),
            Num::L(l) => Value::Label(l.clone()),
        });
    };
    let mismatch = || ArithError::Type(format!("cannot store {n:?} as {ty}"));
    Ok(match ty {
        DataType::Bool => Value::Bool(n.as_bool().map_err(|_| mismatch())?),
        DataType::Enum(_) => match n {
            Num::L(l) => Value::Label(l.clone()),
            _ => return Err(mismatch()),
        },
        DataType::Real => Value::Real(n.to_r().map_err(|_| mismatch())?),
        DataType::Int => Value::Int(match n {
            Num::I(i) => *i,
            Num::Q(q) => q.round().to_integer().to_i64().ok_or(ArithError::Overflow)?,
            Num::R(r) if r.is_finite() && r.abs() < 9.2e18 => r.round() as i64,
            _ => return Err(mismatch()),
        }),
        DataType::Impl(ImplType::Int(w)) => {
            let q = n.to_q().map_err(|_| mismatch())?;
            let raw = q.round().to_integer();
            Value::Int(fit(raw, *w, mode, &|| format_q(q), &|| ty.to_string())?)
        }
        DataType::Impl(ImplType::Fixed { base, scale, offset }) => {
            let q = n.to_q().map_err(|_| mismatch())?;
            let raw = quantize(q, *scale, *offset);
            Value::Fixed {
                raw: fit(raw, *base, mode, &|| format_q(q), &|| ty.to_string())?,
                scale: *scale,
                offset: *offset,
            }
        }
    })
}

/// Parses a trace cell for a flow of type `ty`.
pub fn parse_value(text: &str, ty: Option<&DataType>, mode: Overflow) -> Result<Value, ArithError> {
    let bad = || ArithError::Type(format!("cannot read '{text}'"));
    let num = if text == "true" || text == "false" {
        Num::B(text == "true")
    } else if let Ok(i) = text.parse::<i64>() {
        Num::I(i)
    } else if text.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
        Num::L(text.to_string())
    } else {
        match ty {
            Some(DataType::Impl(_)) => Num::Q(parse_q(text).ok_or_else(bad)?),
            _ => Num::R(text.parse::<f64>().map_err(|_| bad())?),
        }
    };
    encode(&num, ty, mode)
}
