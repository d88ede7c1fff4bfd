//! Seeded random input traces.

use super::value::{Msg, Value};
use super::{SimError, Trace};
use crate::model::*;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shape of generated inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputProfile {
    /// Probability that an otherwise present message is absent.
    pub absent: f64,
    /// Magnitude bound for numbers of ports without a declared range.
    pub bound: i64,
}

impl Default for InputProfile {
    fn default() -> Self {
        InputProfile { absent: 0.0, bound: 10 }
    }
}

/// Draws `ticks` rows for the input ports of `root` (the system by default).
///
/// Ports with a periodic clock carry messages only on their period; reals
/// are drawn on a 0.1 grid so that fixed-point refinements represent them
/// exactly. The same seed always yields the same trace.
pub fn random_inputs(
    p: &Project,
    root: Option<&str>,
    ticks: usize,
    seed: u64,
    prof: InputProfile,
) -> Result<Trace, SimError> {
    let name = root.or(p.system_name()).ok_or_else(|| SimError::Setup("project has no components".into()))?;
    let ports: Vec<Port> = p
        .signature(name)
        .ok_or_else(|| SimError::Setup(format!("unknown component '{name}'")))?
        .iter()
        .filter(|q| q.dir == Direction::In)
        .cloned()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Trace::new(ports.iter().map(|q| q.name.clone()).collect());
    for tick in 1..=ticks {
        let row = ports.iter().map(|q| draw(p, q, tick, prof, &mut rng)).collect();
        t.rows.push(row);
    }
    Ok(t)
}

fn draw(p: &Project, q: &Port, tick: usize, prof: InputProfile, rng: &mut ChaCha8Rng) -> Msg {
    let period = q.clock.as_ref().map_or(Some(1), ClockExpr::period);
    // Every draw consumes the same number of random values.
    let skip = rng.gen_bool(prof.absent.clamp(0.0, 1.0));
    let on_clock = period.is_none_or(|n| tick.is_multiple_of(n.max(1) as usize));
    let unit = rng.gen_range(0.0..1.0);
    if skip || !on_clock {
        return None;
    }
    let (lo, hi) = match q.range {
        Some((lo, hi)) => (lo, hi),
        None => (-prof.bound as f64, prof.bound as f64),
    };
    let pick = |lo: i64, hi: i64| lo + ((unit * (hi - lo + 1) as f64) as i64).min(hi - lo);
    let ints = (lo.ceil() as i64, hi.floor() as i64);
    Some(match q.ty.as_ref()? {
        DataType::Bool => Value::Bool(unit < 0.5),
        DataType::Int => Value::Int(pick(ints.0, ints.1)),
        DataType::Real => Value::Real(pick((lo * 10.0).ceil() as i64, (hi * 10.0).floor() as i64) as f64 / 10.0),
        DataType::Enum(e) => {
            let labels = &p.enum_decl(e)?.labels;
            Value::Label(labels[((unit * labels.len() as f64) as usize).min(labels.len() - 1)].clone())
        }
        DataType::Impl(ImplType::Int(w)) => {
            Value::Int(pick(ints.0.max(IntWidth::min(*w)), ints.1.min(IntWidth::max(*w))))
        }
        DataType::Impl(ImplType::Fixed { base, scale, offset }) => {
            let raw_of = |v: f64| ((Ratio::from_integer((v * 10.0).round() as i64) / 10 - offset) / scale).to_integer();
            let raw = pick(raw_of(lo).max(IntWidth::min(*base)), raw_of(hi).min(IntWidth::max(*base)));
            Value::Fixed { raw, scale: *scale, offset: *offset }
        }
    })
}
