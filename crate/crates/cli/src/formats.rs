//! JSON and JSONL formats for descriptors, sequence streams and reports.

use std::io::{BufRead, Write};

use num_bigint::BigUint;
use serde_json::{json, Map, Value};
use statlim_core::arith::Q;
use statlim_core::forge::SeqMeta;
use statlim_core::ideals::Columns;
use statlim_core::measure::Weights;
use statlim_core::probe::{SpectrumReport, UProfile};
use statlim_core::{IdealSpec, IndexSet, Interval, RClosedSet, RFSigma, Submeasure};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("invalid rational {0:?}")]
    Rational(String),
    #[error("invalid descriptor: {0}")]
    Descriptor(String),
    #[error("line {line}: {reason}")]
    Stream { line: usize, reason: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn bad(msg: impl Into<String>) -> FormatError {
    FormatError::Descriptor(msg.into())
}

/// `"p/q"`, `"p"` or a JSON integer.
pub fn parse_rational(v: &Value) -> Result<Q, FormatError> {
    match v {
        Value::String(s) => parse_rational_str(s),
        Value::Number(n) => match n.as_i64() {
            Some(i) => Ok(Q::from_integer(i.into())),
            None => Err(FormatError::Rational(n.to_string())),
        },
        other => Err(FormatError::Rational(other.to_string())),
    }
}

pub fn parse_rational_str(s: &str) -> Result<Q, FormatError> {
    let err = || FormatError::Rational(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: num_bigint::BigInt = n.trim().parse().map_err(|_| err())?;
            let d: num_bigint::BigInt = d.trim().parse().map_err(|_| err())?;
            if d == 0.into() {
                return Err(err());
            }
            Ok(Q::new(n, d))
        }
        None => Ok(Q::from_integer(s.parse().map_err(|_| err())?)),
    }
}

/// Canonical `"p/q"` form; integers print as `"p/1"`.
pub fn rational_str(q: &Q) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn closed_set_from_json(v: &Value) -> Result<RClosedSet, FormatError> {
    let parts = v
        .get("parts")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("closed set needs a \"parts\" array"))?;
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        let pair = p.as_array().filter(|a| a.len() == 2).ok_or_else(|| bad("each part is a [lo, hi] pair"))?;
        let lo = parse_rational(&pair[0])?;
        let hi = parse_rational(&pair[1])?;
        out.push(Interval::new(lo, hi).map_err(|e| bad(e.to_string()))?);
    }
    Ok(RClosedSet::normalize(out))
}

pub fn closed_set_to_json(s: &RClosedSet) -> Value {
    let parts: Vec<Value> = s
        .parts()
        .iter()
        .map(|p| json!([rational_str(p.lo()), rational_str(p.hi())]))
        .collect();
    json!({ "parts": parts })
}

pub fn fsigma_from_json(v: &Value) -> Result<RFSigma, FormatError> {
    let layers = v
        .get("layers")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("F-sigma set needs a \"layers\" array"))?;
    let layers = layers.iter().map(closed_set_from_json).collect::<Result<Vec<_>, _>>()?;
    Ok(RFSigma::new(layers))
}

pub fn fsigma_to_json(s: &RFSigma) -> Value {
    json!({ "layers": s.layers().iter().map(closed_set_to_json).collect::<Vec<_>>() })
}

fn single_entry(v: &Value) -> Result<(&str, &Value), FormatError> {
    let obj = v.as_object().ok_or_else(|| bad(format!("expected an object, got {v}")))?;
    if obj.len() != 1 {
        return Err(bad(format!("expected exactly one variant key, got {}", obj.len())));
    }
    let (k, inner) = obj.iter().next().expect("one entry");
    Ok((k.as_str(), inner))
}

fn u64_field(v: &Value, key: &str) -> Result<u64, FormatError> {
    v.get(key).and_then(Value::as_u64).ok_or_else(|| bad(format!("missing integer field {key:?}")))
}

fn big_value(v: &Value) -> Result<BigUint, FormatError> {
    match v {
        Value::Number(n) => n.as_u64().map(BigUint::from).ok_or_else(|| bad(format!("not a natural: {n}"))),
        Value::String(s) => s.parse().map_err(|_| bad(format!("not a natural: {s:?}"))),
        other => Err(bad(format!("not a natural: {other}"))),
    }
}

fn big_field(v: &Value, key: &str) -> Result<BigUint, FormatError> {
    big_value(v.get(key).ok_or_else(|| bad(format!("missing field {key:?}")))?)
}

fn children(v: &Value) -> Result<Vec<IndexSet>, FormatError> {
    v.as_array()
        .ok_or_else(|| bad("expected an array of descriptors"))?
        .iter()
        .map(index_set_from_json)
        .collect()
}

fn inner_field(v: &Value, key: &str) -> Result<Box<IndexSet>, FormatError> {
    Ok(Box::new(index_set_from_json(v.get(key).ok_or_else(|| bad(format!("missing field {key:?}")))?)?))
}

pub fn index_set_from_json(v: &Value) -> Result<IndexSet, FormatError> {
    let (tag, body) = single_entry(v)?;
    let err = |e: statlim_core::nset::NSetError| bad(e.to_string());
    Ok(match tag {
        "empty" => IndexSet::Empty,
        "all" => IndexSet::All,
        "squares" => IndexSet::Squares,
        "finite" => {
            let elems = body
                .as_array()
                .ok_or_else(|| bad("finite takes an array of naturals"))?
                .iter()
                .map(|e| e.as_u64().ok_or_else(|| bad(format!("not a natural: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            IndexSet::finite(elems).map_err(err)?
        }
        "ap" => IndexSet::ap(u64_field(body, "residue")?, u64_field(body, "modulus")?).map_err(err)?,
        "scaledOdd" => {
            let k = body.as_u64().ok_or_else(|| bad("scaledOdd takes a natural"))?;
            IndexSet::ScaledOdd(u32::try_from(k).map_err(|_| bad("scaledOdd exponent too large"))?)
        }
        "powerMultiples" => {
            let e = u32::try_from(u64_field(body, "exponent")?).map_err(|_| bad("exponent too large"))?;
            IndexSet::power_multiples(u64_field(body, "base")?, e).map_err(err)?
        }
        "powers" => IndexSet::powers(body.as_u64().ok_or_else(|| bad("powers takes a base"))?).map_err(err)?,
        "window" => IndexSet::Window { inner: inner_field(body, "inner")?, lo: big_field(body, "lo")?, hi: big_field(body, "hi")? },
        "factorialFilter" => IndexSet::FactorialFilter {
            inner: inner_field(body, "inner")?,
            selector: inner_field(body, "selector")?,
        },
        "union" => IndexSet::Union(children(body)?),
        "intersect" => IndexSet::Intersect(children(body)?),
        "diff" => {
            let mut cs = children(body)?.into_iter();
            let first = cs.next().ok_or_else(|| bad("diff needs at least one child"))?;
            cs.fold(first, IndexSet::diff)
        }
        "tail" => IndexSet::Tail { inner: inner_field(body, "inner")?, cutoff: big_field(body, "cutoff")? },
        other => return Err(bad(format!("unknown index set variant {other:?}"))),
    })
}

pub fn index_set_to_json(s: &IndexSet) -> Value {
    match s {
        IndexSet::Empty => json!({"empty": {}}),
        IndexSet::All => json!({"all": {}}),
        IndexSet::Squares => json!({"squares": {}}),
        IndexSet::Finite(v) => json!({ "finite": v }),
        IndexSet::Ap { residue, modulus } => json!({"ap": {"residue": residue, "modulus": modulus}}),
        IndexSet::ScaledOdd(k) => json!({ "scaledOdd": k }),
        IndexSet::PowerMultiples { base, exponent } => json!({"powerMultiples": {"base": base, "exponent": exponent}}),
        IndexSet::Powers(b) => json!({ "powers": b }),
        IndexSet::Window { inner, lo, hi } => {
            json!({"window": {"inner": index_set_to_json(inner), "lo": lo.to_string(), "hi": hi.to_string()}})
        }
        IndexSet::FactorialFilter { inner, selector } => {
            json!({"factorialFilter": {"inner": index_set_to_json(inner), "selector": index_set_to_json(selector)}})
        }
        IndexSet::Union(cs) => json!({"union": cs.iter().map(index_set_to_json).collect::<Vec<_>>()}),
        IndexSet::Intersect(cs) => json!({"intersect": cs.iter().map(index_set_to_json).collect::<Vec<_>>()}),
        IndexSet::Diff(a, b) => json!({"diff": [index_set_to_json(a), index_set_to_json(b)]}),
        IndexSet::Tail { inner, cutoff } => {
            json!({"tail": {"inner": index_set_to_json(inner), "cutoff": cutoff.to_string()}})
        }
    }
}

pub fn submeasure_from_json(v: &Value) -> Result<Submeasure, FormatError> {
    let (tag, body) = single_entry(v)?;
    match tag {
        "density" => Ok(Submeasure::Density),
        "counting" => Ok(Submeasure::Counting),
        "summable" => match body.get("weights").and_then(Value::as_str) {
            Some("harmonic") => Ok(Submeasure::Summable(Weights::Harmonic)),
            other => Err(bad(format!("unsupported weights {other:?}"))),
        },
        other => Err(bad(format!("unknown submeasure {other:?}"))),
    }
}

pub fn submeasure_to_json(phi: &Submeasure) -> Value {
    match phi {
        Submeasure::Density => json!({"density": {}}),
        Submeasure::Counting => json!({"counting": {}}),
        Submeasure::Summable(Weights::Harmonic) => json!({"summable": {"weights": "harmonic"}}),
    }
}

pub fn ideal_from_json(v: &Value) -> Result<IdealSpec, FormatError> {
    let (tag, body) = single_entry(v)?;
    let phi = || submeasure_from_json(body.get("phi").ok_or_else(|| bad("missing \"phi\""))?);
    match tag {
        "fin" => Ok(IdealSpec::Fin),
        "analyticP" => IdealSpec::analytic_p(phi()?).map_err(|e| bad(e.to_string())),
        "fsigma" => IdealSpec::fsigma(phi()?).map_err(|e| bad(e.to_string())),
        "finTimesFin" => match body.get("columns").and_then(Value::as_str) {
            Some("dyadic") => Ok(IdealSpec::FinTimesFin(Columns::Dyadic)),
            other => Err(bad(format!("unsupported columns {other:?}"))),
        },
        other => Err(bad(format!("unknown ideal {other:?}"))),
    }
}

pub fn ideal_to_json(i: &IdealSpec) -> Value {
    match i {
        IdealSpec::Fin => json!({"fin": {}}),
        IdealSpec::AnalyticP(p) => json!({"analyticP": {"phi": submeasure_to_json(p)}}),
        IdealSpec::FSigma(p) => json!({"fsigma": {"phi": submeasure_to_json(p)}}),
        IdealSpec::FinTimesFin(Columns::Dyadic) => json!({"finTimesFin": {"columns": "dyadic"}}),
    }
}

pub fn header_record(meta: &SeqMeta, n: u64) -> Value {
    let inputs: Map<String, Value> = meta.inputs.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    json!({
        "construction": meta.construction,
        "inputs": inputs,
        "partition": meta.partition,
        "count": n,
    })
}

/// Header record plus one `{"n": …, "x": "p/q"}` line per term.
pub fn write_jsonl<W: Write>(mut out: W, meta: &SeqMeta, values: impl Iterator<Item = Q>) -> Result<(), FormatError> {
    let values: Vec<Q> = values.collect();
    serde_json::to_writer(&mut out, &header_record(meta, values.len() as u64))?;
    out.write_all(b"\n")?;
    for (i, x) in values.iter().enumerate() {
        writeln!(out, "{{\"n\":{},\"x\":\"{}\"}}", i + 1, rational_str(x))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a JSONL stream; an optional header record (no `"n"` key) is
/// skipped and terms must appear in order `n = 1, 2, …`.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<Q>, FormatError> {
    let mut values = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let stream_err = |reason: String| FormatError::Stream { line: lineno, reason };
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).map_err(|e| stream_err(e.to_string()))?;
        let Some(n) = v.get("n") else {
            if lineno == 1 && v.get("construction").is_some() {
                continue;
            }
            return Err(stream_err("record without \"n\"".to_string()));
        };
        let n = n.as_u64().ok_or_else(|| stream_err("\"n\" is not a natural".to_string()))?;
        if n != values.len() as u64 + 1 {
            return Err(stream_err(format!("expected n = {}, got {n}", values.len() + 1)));
        }
        let x = v.get("x").ok_or_else(|| stream_err("record without \"x\"".to_string()))?;
        values.push(parse_rational(x).map_err(|e| stream_err(e.to_string()))?);
    }
    if values.is_empty() {
        return Err(FormatError::Stream { line: 0, reason: "stream has no terms".to_string() });
    }
    Ok(values)
}

fn f64_of(q: &Q) -> f64 {
    statlim_core::arith::q_to_f64(q)
}

/// CSV with columns `grid_point, ordinary, cluster_estimate, limit_witness_density`.
pub fn write_spectrum_csv<W: Write>(out: W, report: &SpectrumReport) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["grid_point", "ordinary", "cluster_estimate", "limit_witness_density"])
        .map_err(csv_io)?;
    for p in &report.points {
        let witness = p.witness_strength.as_ref().map(|s| format!("{:.6}", f64_of(s))).unwrap_or_default();
        w.write_record([
            rational_str(&p.point),
            p.ordinary.to_string(),
            format!("{:.6}", f64_of(&p.cluster_estimate)),
            witness,
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> FormatError {
    FormatError::Io(std::io::Error::other(e))
}

pub fn uprofile_to_json(p: &UProfile) -> Value {
    json!({
        "center": rational_str(&p.center),
        "radii": p.radii.iter().map(rational_str).collect::<Vec<_>>(),
        "estimates": p.estimates.iter().map(f64_of).collect::<Vec<_>>(),
        "prefix": p.prefix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statlim_core::arith::{q, qi};

    #[test]
    fn rationals() {
        assert_eq!(parse_rational(&json!("3/4")).unwrap(), q(3, 4));
        assert_eq!(parse_rational(&json!("-2")).unwrap(), qi(-2));
        assert_eq!(parse_rational(&json!(5)).unwrap(), qi(5));
        assert_eq!(parse_rational(&json!("6/8")).unwrap(), q(3, 4));
        assert!(parse_rational(&json!("1/0")).is_err());
        assert!(parse_rational(&json!("x")).is_err());
        assert_eq!(rational_str(&qi(1)), "1/1");
    }

    #[test]
    fn closed_set_example() {
        let v = json!({"parts": [["0", "1"], ["2", "2"]]});
        let s = closed_set_from_json(&v).unwrap();
        assert_eq!(s.parts().len(), 2);
        assert_eq!(closed_set_from_json(&closed_set_to_json(&s)).unwrap(), s);
        assert!(closed_set_from_json(&json!({"parts": [["1", "0"]]})).is_err());
    }

    #[test]
    fn index_set_example() {
        let v = json!({"diff": [{"scaledOdd": 2}, {"squares": {}}]});
        let s = index_set_from_json(&v).unwrap();
        assert_eq!(s.count_to(40), 3);
        assert_eq!(index_set_to_json(&s), v);
        assert!(index_set_from_json(&json!({"bogus": 1})).is_err());
        assert!(index_set_from_json(&json!({"ap": {"residue": 1, "modulus": 0}})).is_err());
    }

    #[test]
    fn submeasures_and_ideals() {
        for v in [json!({"density": {}}), json!({"summable": {"weights": "harmonic"}}), json!({"counting": {}})] {
            assert_eq!(submeasure_to_json(&submeasure_from_json(&v).unwrap()), v);
        }
        let i = json!({"fsigma": {"phi": {"summable": {"weights": "harmonic"}}}});
        assert_eq!(ideal_to_json(&ideal_from_json(&i).unwrap()), i);
        assert!(ideal_from_json(&json!({"analyticP": {"phi": {"counting": {}}}})).is_err());
        assert!(ideal_from_json(&json!({"finTimesFin": {"columns": "dyadic"}})).is_ok());
    }

    #[test]
    fn stream_round_trip() {
        let meta = statlim_core::forge::nonclosed_demo().meta().clone();
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &meta, [q(1, 2), qi(0), q(-3, 7)].into_iter()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap() == "{\"n\":1,\"x\":\"1/2\"}");
        assert_eq!(read_jsonl(&buf[..]).unwrap(), vec![q(1, 2), qi(0), q(-3, 7)]);
        assert!(matches!(read_jsonl(&b"{\"n\":2,\"x\":\"1\"}\n"[..]), Err(FormatError::Stream { line: 1, .. })));
        assert!(read_jsonl(&b"not json\n"[..]).is_err());
    }
}
