//! JSON encoding and decoding of sequences, space specs, and result
//! reports. All numbers travel as exact strings: terminating decimals when
//! the denominator allows it, "p/q" otherwise. Every emitted document
//! carries `"schema": "seqspace/1"`.

use num_bigint::BigUint;
use num_traits::Num;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::limits::{AxiomResidualReport, LimitEstimate, SandwichReport};
use crate::scalar::{format_rat, format_rat_directed, parse_rat, Rat, RatInterval};
use crate::seq::{Base, InjectionSpec, Sequence, Tail};
use crate::spaces::{Membership, NormResult, PsiAxiomReport, PsiBase, PsiSpec, SpaceSpec};
use crate::verify::VerificationReport;
use crate::witness::{GarlingWitness, OscillationWitness, RenormReport, WeightedL1Report};

pub const SCHEMA: &str = "seqspace/1";

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn as_str<'a>(v: &'a Value, field: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| bad(format!("field '{field}' must be a string")))
}

fn get<'a>(v: &'a Value, field: &str) -> Result<&'a Value> {
    v.get(field).ok_or_else(|| bad(format!("missing field '{field}'")))
}

fn rat_field(v: &Value, field: &str) -> Result<Rat> {
    parse_rat(as_str(get(v, field)?, field)?)
}

fn rat_list(v: &Value, field: &str) -> Result<Vec<Rat>> {
    get(v, field)?
        .as_array()
        .ok_or_else(|| bad(format!("field '{field}' must be an array")))?
        .iter()
        .map(|e| parse_rat(e.as_str().ok_or_else(|| bad(format!("'{field}' entries must be strings")))?))
        .collect()
}

/// A certified interval as a ["lo","hi"] pair of decimal strings. Point
/// intervals keep the exact representation ("1/3" when non-terminating);
/// proper intervals are rounded outward so the emitted pair still encloses
/// the true value.
pub fn interval_json(v: &RatInterval) -> Value {
    if v.is_point() {
        let s = format_rat(&v.lo);
        json!([s.clone(), s])
    } else {
        json!([
            format_rat_directed(&v.lo, 60, false),
            format_rat_directed(&v.hi, 60, true),
        ])
    }
}

// -- sequences ----------------------------------------------------------------

pub fn parse_sequence(v: &Value) -> Result<Sequence<Rat>> {
    let kind = as_str(get(v, "kind")?, "kind")?;
    match kind {
        "finite" => {
            let entries = get(v, "entries")?
                .as_array()
                .ok_or_else(|| bad("'entries' must be an array"))?
                .iter()
                .map(|e| {
                    let pair = e.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                        bad("each entry must be an [index, value] pair")
                    })?;
                    let idx = pair[0]
                        .as_u64()
                        .ok_or_else(|| bad("entry index must be a positive integer"))?;
                    let val = parse_rat(
                        pair[1].as_str().ok_or_else(|| bad("entry value must be a string"))?,
                    )?;
                    Ok((idx, val))
                })
                .collect::<Result<Vec<_>>>()?;
            Sequence::finite(entries)
        }
        "periodic" => Sequence::periodic(rat_list(v, "pattern")?),
        "catalog" => match as_str(get(v, "name")?, "name")? {
            "harmonic" => Ok(Sequence::harmonic()),
            other => Err(bad(format!("unknown catalog entry '{other}'"))),
        },
        "blocks" => {
            let blocks = get(v, "blocks")?
                .as_array()
                .ok_or_else(|| bad("'blocks' must be an array"))?
                .iter()
                .map(|e| {
                    let pair = e.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                        bad("each block must be a [value, count] pair")
                    })?;
                    let val = parse_rat(
                        pair[0].as_str().ok_or_else(|| bad("block value must be a string"))?,
                    )?;
                    let count = match &pair[1] {
                        Value::Number(n) => BigUint::from(
                            n.as_u64().ok_or_else(|| bad("block count must be positive"))?,
                        ),
                        Value::String(s) => BigUint::from_str_radix(s, 10)
                            .map_err(|_| bad("block count must be a big-integer string"))?,
                        _ => return Err(bad("block count must be an integer or string")),
                    };
                    Ok((val, count))
                })
                .collect::<Result<Vec<_>>>()?;
            let tail = match v.get("tail") {
                None => Tail::Zero,
                Some(Value::String(s)) if s == "zero" => Tail::Zero,
                Some(t) => {
                    if let Some(c) = t.get("const") {
                        let c = parse_rat(as_str(c, "const")?)?;
                        Tail::Periodic(vec![c])
                    } else if t.get("periodic").is_some() {
                        Tail::Periodic(rat_list(t, "periodic")?)
                    } else {
                        return Err(bad("tail must be \"zero\", {\"const\":…} or {\"periodic\":…}"));
                    }
                }
            };
            Ok(Sequence::from_parts(Vec::new(), Base::Blocks { blocks, tail }))
        }
        // representation extensions (documented in the README)
        "harmonic-like" => {
            let coeff = rat_field(v, "coeff")?;
            let offset = get(v, "offset")?
                .as_u64()
                .ok_or_else(|| bad("'offset' must be a nonnegative integer"))?;
            Ok(Sequence::harmonic_like(coeff, offset))
        }
        "patched" => {
            let base = parse_sequence(get(v, "base")?)?;
            if !base.patch().is_empty() {
                return Err(bad("'base' of a patched sequence must itself be unpatched"));
            }
            let patch = get(v, "patch")?
                .as_array()
                .ok_or_else(|| bad("'patch' must be an array"))?
                .iter()
                .map(|e| {
                    let pair = e.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                        bad("each patch entry must be an [index, value] pair")
                    })?;
                    let idx = pair[0]
                        .as_u64()
                        .filter(|&i| i >= 1)
                        .ok_or_else(|| bad("patch index must be a positive integer"))?;
                    let val = parse_rat(
                        pair[1].as_str().ok_or_else(|| bad("patch value must be a string"))?,
                    )?;
                    Ok((idx, val))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Sequence::from_parts(patch, base.base().clone()))
        }
        other => Err(bad(format!("unknown sequence kind '{other}'"))),
    }
}

pub fn emit_sequence(x: &Sequence<Rat>) -> Value {
    let base_json = |b: &Base<Rat>| -> Value {
        match b {
            Base::Zero => json!({"kind": "finite", "entries": []}),
            Base::Periodic(p) => json!({
                "kind": "periodic",
                "pattern": p.iter().map(format_rat).collect::<Vec<_>>(),
            }),
            Base::Harmonic { coeff, offset } => {
                if coeff.eq(&Rat::from_integer(1.into())) && *offset == 0 {
                    json!({"kind": "catalog", "name": "harmonic"})
                } else {
                    json!({
                        "kind": "harmonic-like",
                        "coeff": format_rat(coeff),
                        "offset": offset,
                    })
                }
            }
            Base::Blocks { blocks, tail } => {
                let bl: Vec<Value> = blocks
                    .iter()
                    .map(|(v, c)| json!([format_rat(v), c.to_string()]))
                    .collect();
                let t = match tail {
                    Tail::Zero => json!("zero"),
                    Tail::Periodic(p) => json!({
                        "periodic": p.iter().map(format_rat).collect::<Vec<_>>(),
                    }),
                };
                json!({"kind": "blocks", "blocks": bl, "tail": t})
            }
        }
    };
    if x.patch().is_empty() {
        return base_json(x.base());
    }
    if matches!(x.base(), Base::Zero) {
        let entries: Vec<Value> =
            x.patch().iter().map(|(i, v)| json!([i, format_rat(v)])).collect();
        return json!({"kind": "finite", "entries": entries});
    }
    let patch: Vec<Value> = x.patch().iter().map(|(i, v)| json!([i, format_rat(v)])).collect();
    json!({"kind": "patched", "patch": patch, "base": base_json(x.base())})
}

// -- specs --------------------------------------------------------------------

pub fn parse_psi(v: &Value) -> Result<PsiSpec> {
    match as_str(get(v, "family")?, "family")? {
        "log" => {
            let base = as_str(get(v, "base")?, "base")?;
            if base == "e" {
                Ok(PsiSpec::LogBase(PsiBase::E))
            } else {
                Ok(PsiSpec::LogBase(PsiBase::Rational(parse_rat(base)?)))
            }
        }
        "table" => Ok(PsiSpec::Table(rat_list(v, "values")?)),
        other => Err(bad(format!("unknown psi family '{other}'"))),
    }
}

pub fn emit_psi(psi: &PsiSpec) -> Value {
    match psi {
        PsiSpec::LogBase(PsiBase::E) => json!({"family": "log", "base": "e"}),
        PsiSpec::LogBase(PsiBase::Rational(b)) => json!({"family": "log", "base": format_rat(b)}),
        PsiSpec::Table(values) => json!({
            "family": "table",
            "values": values.iter().map(format_rat).collect::<Vec<_>>(),
        }),
    }
}

pub fn parse_space(v: &Value) -> Result<SpaceSpec> {
    match as_str(get(v, "space")?, "space")? {
        "lp" => Ok(SpaceSpec::Lp(rat_field(v, "p")?)),
        "linf" => Ok(SpaceSpec::Linf),
        "garling" => Ok(SpaceSpec::Garling),
        "wl1" => {
            let w = match v.get("weights") {
                Some(w) => parse_sequence(w)?,
                None => match crate::witness::weighted_l1_space() {
                    SpaceSpec::WeightedL1(w) => w,
                    _ => unreachable!(),
                },
            };
            Ok(SpaceSpec::WeightedL1(w))
        }
        "marcinkiewicz" => Ok(SpaceSpec::Marcinkiewicz(parse_psi(get(v, "psi")?)?)),
        other => Err(bad(format!("unknown space '{other}'"))),
    }
}

/// Compact command-line syntax: lp:2, linf, garling, wl1,
/// marcinkiewicz:log2 / marcinkiewicz:loge / marcinkiewicz:log:3/2.
pub fn parse_space_shorthand(s: &str) -> Result<SpaceSpec> {
    if let Some(p) = s.strip_prefix("lp:") {
        return Ok(SpaceSpec::Lp(parse_rat(p)?));
    }
    match s {
        "linf" => Ok(SpaceSpec::Linf),
        "garling" => Ok(SpaceSpec::Garling),
        "wl1" => parse_space(&json!({"space": "wl1"})),
        _ => {
            if let Some(psi) = s.strip_prefix("marcinkiewicz:") {
                Ok(SpaceSpec::Marcinkiewicz(parse_psi_shorthand(psi)?))
            } else {
                Err(bad(format!("unknown space shorthand '{s}'")))
            }
        }
    }
}

pub fn parse_psi_shorthand(s: &str) -> Result<PsiSpec> {
    match s {
        "loge" | "log:e" => Ok(PsiSpec::log_e()),
        "log2" => Ok(PsiSpec::log2()),
        _ => {
            if let Some(b) = s.strip_prefix("log:") {
                Ok(PsiSpec::LogBase(PsiBase::Rational(parse_rat(b)?)))
            } else {
                Err(bad(format!("unknown psi shorthand '{s}'")))
            }
        }
    }
}

pub fn parse_injection(v: &Value) -> Result<InjectionSpec> {
    if let Some(name) = v.as_str() {
        return match name {
            "dilation2" => Ok(InjectionSpec::Dilation2),
            "evens-to-all" => Ok(InjectionSpec::EvensToAll),
            "odds-to-all" => Ok(InjectionSpec::OddsToAll),
            "interleave-with-zeros" => Ok(InjectionSpec::InterleaveWithZeros),
            _ => Err(bad(format!("unknown named injection '{name}'"))),
        };
    }
    if let Some(k) = v.get("shift") {
        let k = k.as_u64().ok_or_else(|| bad("'shift' must be a nonnegative integer"))?;
        return Ok(InjectionSpec::Shift(k));
    }
    let map_of = |field: &str| -> Result<Vec<u64>> {
        get(v, field)?
            .as_array()
            .ok_or_else(|| bad(format!("'{field}' must be an array")))?
            .iter()
            .map(|e| e.as_u64().ok_or_else(|| bad("map entries must be positive integers")))
            .collect()
    };
    if v.get("permutation").is_some() {
        return Ok(InjectionSpec::FinitePermutation(map_of("permutation")?));
    }
    if v.get("injection").is_some() {
        return Ok(InjectionSpec::FiniteInjection(map_of("injection")?));
    }
    Err(bad("expected a named injection, {\"shift\":k}, {\"permutation\":[…]} or {\"injection\":[…]}"))
}

// -- results ------------------------------------------------------------------

fn with_schema(mut m: Map<String, Value>) -> Value {
    m.insert("schema".into(), json!(SCHEMA));
    Value::Object(m)
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("json! object"),
    }
}

pub fn emit_norm(r: &NormResult) -> Value {
    with_schema(obj(json!({
        "space": r.space,
        "divergent": r.divergent,
        "exact": r.exact,
        "value": r.value.as_ref().map(interval_json),
        "certificate": r.certificate,
    })))
}

pub fn emit_membership(m: &Membership) -> Value {
    match m {
        Membership::Member(r) => {
            let mut o = obj(emit_norm(r));
            o.insert("member".into(), json!(true));
            Value::Object(o)
        }
        Membership::NonMember(reason) => with_schema(obj(json!({
            "member": false,
            "reason": reason,
        }))),
        Membership::Unknown(iv) => with_schema(obj(json!({
            "member": "unknown",
            "value": interval_json(iv),
        }))),
    }
}

pub fn emit_limit(e: &LimitEstimate) -> Value {
    with_schema(obj(json!({
        "method": e.method,
        "value": interval_json(&e.value),
        "exact": e.exact,
        "window_average": e.window_average.as_ref().map(interval_json),
        "residual": e.residual.as_ref().map(format_rat),
        "residual_bound": e.residual_bound.as_ref().map(format_rat),
    })))
}

pub fn emit_axiom_report(r: &AxiomResidualReport) -> Value {
    with_schema(obj(json!({
        "method": r.method,
        "shift_residual": format_rat(&r.shift_residual),
        "positivity_ok": r.positivity_ok,
        "norm_bound_excess": format_rat(&r.norm_bound_excess),
        "convergent_agreement": r.convergent_agreement.as_ref().map(format_rat),
        "product_rule_residual": r.product_rule_residual.as_ref().map(format_rat),
    })))
}

pub fn emit_sandwich(r: &SandwichReport) -> Value {
    with_schema(obj(json!({
        "n_checked": r.n_checked,
        "violations": r.violations,
        "holds": r.holds,
        "max_slack_left": format_rat(&r.max_slack_left),
        "max_slack_right": format_rat(&r.max_slack_right),
    })))
}

pub fn emit_psi_report(r: &PsiAxiomReport) -> Value {
    let pairs = |v: &[(u64, RatInterval)]| -> Vec<Value> {
        v.iter().map(|(n, iv)| json!({"n": n, "value": interval_json(iv)})).collect()
    };
    with_schema(obj(json!({
        "psi1": interval_json(&r.psi1),
        "monotone_certified": r.monotone_certified,
        "monotonicity_violation": format_rat(&r.monotonicity_violation),
        "decay": pairs(&r.decay),
        "doubling": pairs(&r.doubling),
        "tends_to_infinity": r.tends_to_infinity,
    })))
}

pub fn emit_wl1_report(r: &WeightedL1Report) -> Value {
    with_schema(obj(json!({
        "norm_e1": format_rat(&r.norm_e1),
        "norm_e2": format_rat(&r.norm_e2),
        "norms_differ": r.norms_differ,
        "swap_membership_trials": r.swap_membership_trials,
        "swap_membership_ok": r.swap_membership_ok,
    })))
}

pub fn emit_renorm_report(r: &RenormReport) -> Value {
    with_schema(obj(json!({
        "norm_ones": format_rat(&r.norm_ones),
        "gamma_alternating": format_rat(&r.gamma_alternating),
        "norm_alternating": format_rat(&r.norm_alternating),
        "norm_rearranged": format_rat(&r.norm_rearranged),
        "splitting_verified": r.splitting_verified,
        "consistent": r.consistent,
    })))
}

pub fn emit_garling_witness(w: &GarlingWitness) -> Value {
    with_schema(obj(json!({
        "m": w.m,
        "norm_x": interval_json(&w.norm_x),
        "norm_y": interval_json(&w.norm_y),
        "harmonic_lower": format_rat(&w.harmonic_lower),
        "analytic_upper": interval_json(&w.analytic_upper),
        "norm_x_matches": w.norm_x_matches,
        "upper_holds": w.upper_holds,
        "distinct": w.distinct,
    })))
}

pub fn emit_oscillation_witness(w: &OscillationWitness) -> Value {
    let stages: Vec<Value> = w
        .stages
        .iter()
        .map(|s| {
            json!({
                "k": s.k,
                "N_k": s.n_k.to_string(),
                "c_k": interval_json(&s.c_k),
                "T_k": s.t_k.to_string(),
                "ratio": interval_json(&s.ratio),
            })
        })
        .collect();
    with_schema(obj(json!({
        "psi": emit_psi(&w.psi),
        "precision": w.prec.0,
        "stages": stages,
        "sup_bound": interval_json(&w.sup_bound),
    })))
}

pub fn emit_oscillation_report(r: &crate::witness::OscillationReport) -> Value {
    with_schema(obj(json!({
        "ok": r.ok,
        "failures": r.failures,
        "max_candidate_ratio": interval_json(&r.max_candidate_ratio),
        "oscillation_gap": format_rat(&r.oscillation_gap),
        "candidates_checked": r.candidates_checked,
    })))
}

pub fn emit_verification_report(r: &VerificationReport) -> Value {
    let failures: Vec<Value> = r
        .failures
        .iter()
        .map(|f| json!({"seed": f.seed, "digest": f.digest, "residual": f.residual}))
        .collect();
    with_schema(obj(json!({
        "suite": r.suite,
        "trials": r.trials,
        "failures": failures,
        "max_residual": r.max_residual.as_ref().map(format_rat),
        "inverted": r.inverted,
        "passed": r.passed,
    })))
}

/// CSV export of a ratio trajectory: n, s_n, psi_n, ratio (directed
/// midpoint strings).
pub fn ratio_csv(rows: &[(u64, RatInterval, RatInterval, RatInterval)]) -> String {
    let mut out = String::from("n,s_n,psi_n,ratio\n");
    const CAP: usize = 1_000_000;
    for (n, s, p, r) in rows.iter().take(CAP) {
        out.push_str(&format!(
            "{n},{},{},{}\n",
            format_rat_directed(&s.midpoint(), 20, true),
            format_rat_directed(&p.midpoint(), 20, true),
            format_rat_directed(&r.midpoint(), 20, true),
        ));
    }
    if rows.len() > CAP {
        out.push_str("# truncated at 1000000 rows\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rat;

    fn roundtrip(v: Value) {
        let x = parse_sequence(&v).unwrap();
        let v2 = emit_sequence(&x);
        let y = parse_sequence(&v2).unwrap();
        assert!(x.seq_eq(&y), "{v} vs {v2}");
    }

    #[test]
    fn sequence_roundtrips() {
        roundtrip(json!({"kind": "finite", "entries": [[2, "5"], [4, "2"]]}));
        roundtrip(json!({"kind": "periodic", "pattern": ["1", "0"]}));
        roundtrip(json!({"kind": "catalog", "name": "harmonic"}));
        roundtrip(json!({"kind": "blocks", "blocks": [["3", 2], ["1", "100000000000000000000"]], "tail": "zero"}));
        roundtrip(json!({"kind": "blocks", "blocks": [["3", 2]], "tail": {"const": "1/2"}}));
        roundtrip(json!({"kind": "harmonic-like", "coeff": "2/3", "offset": 4}));
        roundtrip(json!({"kind": "patched", "patch": [[3, "9"]], "base": {"kind": "periodic", "pattern": ["1", "0"]}}));
    }

    #[test]
    fn space_parsing() {
        assert_eq!(
            parse_space_shorthand("lp:2").unwrap(),
            SpaceSpec::Lp(parse_rat("2").unwrap())
        );
        assert!(matches!(parse_space_shorthand("garling").unwrap(), SpaceSpec::Garling));
        assert!(matches!(
            parse_space_shorthand("marcinkiewicz:log2").unwrap(),
            SpaceSpec::Marcinkiewicz(PsiSpec::LogBase(PsiBase::Rational(_)))
        ));
        assert!(parse_space_shorthand("nope").is_err());
    }

    #[test]
    fn norm_json_has_schema() {
        let x = Sequence::finite(vec![(1, parse_rat("1").unwrap())]).unwrap();
        let r = crate::spaces::norm(&SpaceSpec::Linf, &x, crate::scalar::Prec::DEFAULT).unwrap();
        let v = emit_norm(&r);
        assert_eq!(v["schema"], "seqspace/1");
        assert_eq!(v["value"][0], "1");
        assert_eq!(v["exact"], true);
    }

    #[test]
    fn injection_parsing() {
        assert!(matches!(parse_injection(&json!("dilation2")).unwrap(), InjectionSpec::Dilation2));
        assert!(matches!(
            parse_injection(&json!({"shift": 2})).unwrap(),
            InjectionSpec::Shift(2)
        ));
        assert!(matches!(
            parse_injection(&json!({"permutation": [2, 1]})).unwrap(),
            InjectionSpec::FinitePermutation(_)
        ));
    }
}
