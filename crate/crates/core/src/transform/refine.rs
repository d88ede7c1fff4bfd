//! Refinement of abstract types to implementation types.

use super::TransformError;
use crate::analysis::{typecheck, TypeEnv};
use crate::diag::{code, Diagnostic};
use crate::frontend::parse_type;
use crate::model::*;
use crate::sim::{format_q, q_from_f64, quantize, widen, Q};
use num_traits::ToPrimitive;

/// Maps every value of abstract type `from` to implementation type `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeRule {
    pub from: DataType,
    pub to: DataType,
}

/// Parsed map file: default rules per abstract type plus per-port
/// overrides `flow Component.port -> type`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RefinementMap {
    pub rules: Vec<TypeRule>,
    pub flows: Vec<((String, String), DataType)>,
}

impl RefinementMap {
    fn default_for(&self, t: &DataType) -> Option<&DataType> {
        self.rules.iter().find(|r| r.from == *t).map(|r| &r.to)
    }

    /// Implementation type of a value of abstract type `t`; types without a
    /// rule (bool, enums, already refined types) are kept.
    pub fn map(&self, t: &DataType) -> DataType {
        self.default_for(t).cloned().unwrap_or_else(|| t.clone())
    }

    fn port(&self, owner: &str, port: &str, inferred: &DataType) -> DataType {
        self.flows
            .iter()
            .find(|((c, q), _)| c == owner && q == port)
            .map(|(_, t)| t.clone())
            .unwrap_or_else(|| self.map(inferred))
    }
}

/// Parses a map file. Lines are `real -> fixed(int16, 0.1, 0)`,
/// `int -> int32` or `flow Comp.port -> int16`; `#` starts a comment.
pub fn parse_refinement_map(text: &str) -> Result<RefinementMap, TransformError> {
    let mut map = RefinementMap::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| TransformError::MapSyntax { line: i + 1, message };
        let (lhs, rhs) = line.split_once("->").ok_or_else(|| err("expected 'type -> type'".into()))?;
        let to = parse_type(rhs.trim()).map_err(|e| err(e.message))?;
        if !matches!(to, DataType::Impl(_)) {
            return Err(err(format!("target '{to}' is not an implementation type")));
        }
        let lhs = lhs.trim();
        if let Some(flow) = lhs.strip_prefix("flow ") {
            let (c, q) = flow
                .trim()
                .split_once('.')
                .ok_or_else(|| err(format!("expected Component.port, got '{}'", flow.trim())))?;
            map.flows.push(((c.to_string(), q.to_string()), to));
        } else {
            let from = parse_type(lhs).map_err(|e| err(e.message))?;
            if !matches!(from, DataType::Int | DataType::Real) {
                return Err(err(format!("only int and real can be refined, not '{from}'")));
            }
            if map.default_for(&from).is_some() {
                return Err(err(format!("duplicate rule for '{from}'")));
            }
            map.rules.push(TypeRule { from, to });
        }
    }
    Ok(map)
}

/// Smallest and largest raw value an implementation type can hold, decoded.
fn span(t: &ImplType) -> (Q, Q) {
    let w = t.base();
    let dec = |raw: i64| match t {
        ImplType::Int(_) => Q::from_integer(raw.into()),
        ImplType::Fixed { scale, offset, .. } => Q::from_integer(raw.into()) * widen(*scale) + widen(*offset),
    };
    (dec(w.min()), dec(w.max()))
}

/// Nearest representable value of `v`, or `None` if it falls outside the
/// raw range.
fn representable(v: Q, t: &ImplType) -> Option<Q> {
    let w = t.base();
    let (raw, dec): (i128, Box<dyn Fn(i128) -> Q>) = match t {
        ImplType::Int(_) => (v.round().to_integer(), Box::new(Q::from_integer)),
        ImplType::Fixed { scale, offset, .. } => {
            let (s, o) = (*scale, *offset);
            (quantize(v, s, o), Box::new(move |r| Q::from_integer(r) * widen(s) + widen(o)))
        }
    };
    (i128::from(w.min())..=i128::from(w.max())).contains(&raw).then(|| dec(raw))
}

fn literal_q(l: &Literal) -> Option<Q> {
    match l {
        Literal::Int(i) => Some(Q::from_integer((*i).into())),
        Literal::Real(r) => q_from_f64(*r),
        _ => None,
    }
}

/// Re-states a stored initial value in type `ty`.
fn refine_literal(l: &Literal, ty: &DataType, path: &str) -> Result<Literal, TransformError> {
    let DataType::Impl(it) = ty else { return Ok(l.clone()) };
    let Some(v) = literal_q(l) else { return Ok(l.clone()) };
    let unrep =
        || TransformError::UnrepresentableConstant { path: path.to_string(), value: l.to_string(), ty: ty.to_string() };
    let q = representable(v, it).ok_or_else(unrep)?;
    Ok(match it {
        ImplType::Int(_) => Literal::Int(q.to_integer().to_i64().ok_or_else(unrep)?),
        ImplType::Fixed { .. } if q.is_integer() => Literal::Int(q.to_integer().to_i64().ok_or_else(unrep)?),
        ImplType::Fixed { .. } => Literal::Real(q.to_f64().ok_or_else(unrep)?),
    })
}

/// Range warnings for a port whose declared range does not fit its type.
fn range_warning(path: &str, q: &Port, ty: &DataType) -> Option<Diagnostic> {
    let (DataType::Impl(it), Some((lo, hi))) = (ty, q.range) else { return None };
    let (min, max) = span(it);
    let (lo_q, hi_q) = (q_from_f64(lo)?, q_from_f64(hi)?);
    (lo_q < min || hi_q > max).then(|| {
        Diagnostic::warning(
            code::RANGE,
            path,
            format!("range [{lo}, {hi}] exceeds {ty}, which spans [{}, {}]", format_q(min), format_q(max)),
        )
    })
}

fn refine_ports(owner: &str, ports: &mut [Port], types: &TypeEnv, map: &RefinementMap, diags: &mut Vec<Diagnostic>) {
    for q in ports {
        let Some(inferred) = types.port(owner, &q.name).cloned().or_else(|| q.ty.clone()) else { continue };
        let ty = map.port(owner, &q.name, &inferred);
        diags.extend(range_warning(&format!("{owner}.{}", q.name), q, &ty));
        q.ty = Some(ty);
    }
}

/// Type of flow `e` in frame `owner` after refinement.
fn flow_type(types: &TypeEnv, map: &RefinementMap, owner: &str, net: &Network, e: &Endpoint) -> Option<DataType> {
    let inferred = types.get(owner, e)?;
    let explicit = match e {
        Endpoint::Port(q) => Some((owner.to_string(), q.clone())),
        Endpoint::Block(b, q) => match &net.block(b)?.kind {
            BlockKind::Instance { of, .. } => Some((of.clone(), q.clone())),
            _ => None,
        },
    };
    Some(match explicit {
        Some((c, q)) => map.port(&c, &q, inferred),
        None => map.map(inferred),
    })
}

/// Gives every port an implementation type according to `map` and restates
/// stored initial values (delays, holds, channel and variable inits) in
/// their refined type. Expression constants stay exact. The result is at
/// level La.
pub fn refine_types(p: &Project, map: &RefinementMap) -> Result<(Project, Vec<Diagnostic>), TransformError> {
    let types = typecheck(p).map_err(TransformError::InvalidSource)?;
    for ((c, q), _) in &map.flows {
        let known = p.component(c).and_then(|x| x.port(q)).is_some() || p.cluster(c).and_then(|x| x.port(q)).is_some();
        if !known {
            return Err(TransformError::UnknownComponent(format!("{c}.{q}")));
        }
    }
    let mut out = p.clone();
    out.level = Level::La;
    let mut diags = Vec::new();

    for c in &mut out.components {
        refine_ports(&c.name, &mut c.ports, &types, map, &mut diags);
        let owner = c.name.clone();
        match &mut c.def {
            Definition::Std(s) => {
                for v in &mut s.vars {
                    let ty = map.map(&v.ty);
                    v.init = refine_literal(&v.init, &ty, &format!("{owner}.{}", v.name))?;
                    v.ty = ty;
                }
            }
            Definition::Ssd(net) | Definition::Dfd(net) => {
                let snapshot = net.clone();
                for b in &mut net.blocks {
                    let y = Endpoint::block(b.name.clone(), "y");
                    let path = format!("{owner}/{}", b.name);
                    match &mut b.kind {
                        BlockKind::Delay { init: Some(l), .. } | BlockKind::Hold { init: l } => {
                            if let Some(ty) = flow_type(&types, map, &owner, &snapshot, &y) {
                                *l = refine_literal(l, &ty, &path)?;
                            }
                        }
                        _ => {}
                    }
                }
                for ch in &mut net.channels {
                    let path = format!("{owner}/{}", ch.source);
                    let ty = flow_type(&types, map, &owner, &snapshot, &ch.source);
                    match (&mut ch.kind, ty) {
                        (ChannelKind::SsdDelayed { init: Some(l) }, Some(ty))
                        | (ChannelKind::Delay { init: l }, Some(ty)) => {
                            *l = refine_literal(l, &ty, &path)?;
                        }
                        _ => {}
                    }
                }
            }
            _ => {}
        }
    }
    for cl in &mut out.clusters {
        refine_ports(&cl.name, &mut cl.ports, &types, map, &mut diags);
    }
    Ok((out, diags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze;
    use crate::frontend::{parse_str, serialize};
    use crate::sim::{simulate, SimOptions};

    const SRC: &str = "project T;\nlevel FDA;\nbase_tick 10;\nsystem Top;\n\
        component Half { in x : real range [-20, 20]; out y : real; function { y = x * 0.5; } }\n\
        component Top { in x : real; in n : int; out y : real; out m : int; \
          dfd { block h : Half; block d : delay(0.25); channel x -> h.x; channel h.y -> d.x; channel d.y -> y; channel n -> m; } }\n";

    #[test]
    fn map_file_syntax() {
        let m = parse_refinement_map("# defaults\nreal -> fixed(int16, 0.1, 0)\nint -> int16\nflow Top.m -> int32\n")
            .unwrap();
        assert_eq!(m.rules.len(), 2);
        assert_eq!(m.flows[0].0, ("Top".to_string(), "m".to_string()));
        assert!(matches!(parse_refinement_map("real => int16"), Err(TransformError::MapSyntax { line: 1, .. })));
        assert!(matches!(parse_refinement_map("\nreal -> int"), Err(TransformError::MapSyntax { line: 2, .. })));
        assert!(matches!(parse_refinement_map("bool -> int8"), Err(TransformError::MapSyntax { .. })));
    }

    #[test]
    fn refined_model_checks_and_quantizes_inits() {
        let p = parse_str(SRC).unwrap();
        let m = parse_refinement_map(
            "real -> fixed(int16, 0.1, 0)\nint -> int16\nflow Top.n -> int32\nflow Top.m -> int32\n",
        )
        .unwrap();
        let (q, diags) = refine_types(&p, &m).unwrap();
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(q.level, Level::La);
        analyze(&q).unwrap();
        let Definition::Dfd(n) = &q.component("Top").unwrap().def else { panic!() };
        // 0.25 is a tie between 0.2 and 0.3 and rounds away from zero.
        assert_eq!(n.block("d").unwrap().kind, BlockKind::Delay { init: Some(Literal::Real(0.3)), clock: None });
        assert_eq!(
            q.component("Top").unwrap().port("m").unwrap().ty,
            Some(DataType::Impl(ImplType::Int(IntWidth::I32)))
        );
        assert_eq!(parse_str(&serialize(&q).unwrap()).unwrap(), q);

        let t = simulate(&q, None, "tick,x,n\n1,1.0,3\n2,2.2,4\n", 2, SimOptions::default()).unwrap();
        assert_eq!(t.to_csv(), "tick,y,m\n1,0.3,3\n2,0.5,4\n");
    }

    #[test]
    fn range_warning_and_unrepresentable_init() {
        let p = parse_str(SRC).unwrap();
        let m = parse_refinement_map("real -> fixed(int8, 0.1, 0)\n").unwrap();
        let (_, diags) = refine_types(&p, &m).unwrap();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, code::RANGE);
        assert_eq!(diags[0].path, "Half.x");

        let big = SRC.replace("delay(0.25)", "delay(100.0)");
        let p = parse_str(&big).unwrap();
        assert!(matches!(refine_types(&p, &m), Err(TransformError::UnrepresentableConstant { .. })));
    }
}
