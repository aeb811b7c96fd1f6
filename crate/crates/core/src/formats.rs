//! JSON artifacts handed between pipeline stages.
//!
//! Exact values are always strings (`"p/q"` or decimal integers). Output is
//! canonical: object keys sorted, two-space indentation, trailing newline.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde_json::{json, Map, Value};

use crate::asymptotics::Comparison;
use crate::engine::{MaxPmf, RationalSequence};
use crate::error::{Error, Result};
use crate::eval::{EvaluationResult, Value as Sample};
use crate::guess::RecurrenceOperator;
use crate::poly::IntPolynomial;
use crate::problem::ProblemSpec;
use crate::rational::{format_rational, parse_int, parse_rational};
use crate::real::Fixed;
use crate::sim::{SimConfig, SimResult, RNG_ALGORITHM};

/// Recursively sorts object keys.
fn canonical(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let sorted: BTreeMap<String, Value> =
                map.into_iter().map(|(k, v)| (k, canonical(v))).collect();
            Value::Object(sorted.into_iter().collect::<Map<_, _>>())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonical).collect()),
        other => other,
    }
}

pub fn to_canonical_string(value: Value) -> String {
    let mut out = serde_json::to_string_pretty(&canonical(value)).expect("json values serialize");
    out.push('\n');
    out
}

fn parse(text: &str) -> Result<Map<String, Value>> {
    match serde_json::from_str(text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Error::Format("top level is not an object".into())),
        Err(e) => Err(Error::Format(e.to_string())),
    }
}

fn field<'a>(map: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    map.get(key)
        .ok_or_else(|| Error::Format(format!("missing field `{key}`")))
}

fn uint_field(map: &Map<String, Value>, key: &str) -> Result<u64> {
    field(map, key)?
        .as_u64()
        .ok_or_else(|| Error::Format(format!("`{key}` is not a non-negative integer")))
}

fn spec_fields(map: &Map<String, Value>) -> Result<ProblemSpec> {
    let n = u32::try_from(uint_field(map, "n")?).map_err(|_| Error::Format("n too large".into()))?;
    let r = u32::try_from(uint_field(map, "r")?).map_err(|_| Error::Format("r too large".into()))?;
    ProblemSpec::new(n, r)
}

fn strings<'a>(value: &'a Value, key: &str) -> Result<Vec<&'a str>> {
    value
        .as_array()
        .ok_or_else(|| Error::Format(format!("`{key}` is not an array")))?
        .iter()
        .map(|v| {
            v.as_str()
                .ok_or_else(|| Error::Format(format!("`{key}` entries must be strings")))
        })
        .collect()
}

fn rationals(value: &Value, key: &str) -> Result<Vec<BigRational>> {
    strings(value, key)?
        .into_iter()
        .map(|s| parse_rational(s).map_err(|e| Error::Format(format!("`{key}`: {e}"))))
        .collect()
}

fn rational_strings(values: &[BigRational]) -> Vec<String> {
    values.iter().map(format_rational).collect()
}

pub fn sequence_to_json(seq: &RationalSequence) -> String {
    to_canonical_string(json!({
        "n": seq.n,
        "r": seq.r,
        "values": rational_strings(&seq.values),
    }))
}

pub fn sequence_from_json(text: &str) -> Result<RationalSequence> {
    let map = parse(text)?;
    let spec = spec_fields(&map)?;
    Ok(RationalSequence::new(spec, rationals(field(&map, "values")?, "values")?))
}

pub fn pmf_to_json(spec: ProblemSpec, pmf: &MaxPmf) -> String {
    let entries: Map<String, Value> = pmf
        .entries
        .iter()
        .map(|(m, p)| (m.to_string(), Value::String(format_rational(p))))
        .collect();
    to_canonical_string(json!({
        "n": spec.n,
        "r": spec.r,
        "T": pmf.round,
        "pmf": entries,
    }))
}

pub fn pmf_from_json(text: &str) -> Result<(ProblemSpec, MaxPmf)> {
    let map = parse(text)?;
    let spec = spec_fields(&map)?;
    let round = uint_field(&map, "T")?;
    let table = field(&map, "pmf")?
        .as_object()
        .ok_or_else(|| Error::Format("`pmf` is not an object".into()))?;
    let mut entries = BTreeMap::new();
    for (m, p) in table {
        let m: u64 = m
            .parse()
            .map_err(|_| Error::Format(format!("pmf key `{m}` is not an integer")))?;
        let p = p
            .as_str()
            .ok_or_else(|| Error::Format("pmf values must be strings".into()))?;
        entries.insert(m, parse_rational(p).map_err(|e| Error::Format(e.to_string()))?);
    }
    Ok((spec, MaxPmf { round, entries }))
}

pub fn recurrence_to_json(op: &RecurrenceOperator) -> String {
    let polys: Vec<Vec<String>> = op
        .polys
        .iter()
        .map(|p| p.coeffs().iter().map(ToString::to_string).collect())
        .collect();
    to_canonical_string(json!({
        "n": op.n,
        "r": op.r,
        "order": op.order(),
        "degree": op.degree(),
        "validFrom": op.valid_from,
        "polys": polys,
        "initial": rational_strings(&op.initial),
    }))
}

pub fn recurrence_from_json(text: &str) -> Result<RecurrenceOperator> {
    let map = parse(text)?;
    let spec = spec_fields(&map)?;
    let polys_value = field(&map, "polys")?
        .as_array()
        .ok_or_else(|| Error::Format("`polys` is not an array".into()))?;
    let mut polys = Vec::with_capacity(polys_value.len());
    for p in polys_value {
        let coeffs = strings(p, "polys")?
            .into_iter()
            .map(|s| parse_int(s).map_err(|e| Error::Format(format!("`polys`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        polys.push(IntPolynomial::new(coeffs));
    }
    let op = RecurrenceOperator {
        n: spec.n,
        r: spec.r,
        polys,
        valid_from: uint_field(&map, "validFrom")?,
        initial: rationals(field(&map, "initial")?, "initial")?,
    };
    if op.polys.is_empty() || op.polys[0].is_zero() {
        return Err(Error::Format("leading polynomial is zero".into()));
    }
    let order = uint_field(&map, "order")? as usize;
    let degree = uint_field(&map, "degree")? as usize;
    if order != op.order() || degree != op.degree() {
        return Err(Error::Format(format!(
            "declared order/degree {order}/{degree} disagree with polys ({}/{})",
            op.order(),
            op.degree()
        )));
    }
    if op.initial.len() as u64 != op.valid_from {
        return Err(Error::Format(format!(
            "validFrom {} needs {} initial values, found {}",
            op.valid_from,
            op.valid_from,
            op.initial.len()
        )));
    }
    Ok(op)
}

/// Decimal digits that a `bits`-bit fixed-point value carries.
pub fn decimal_capacity(bits: u32) -> usize {
    (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 1
}

pub fn samples_to_json(spec: ProblemSpec, result: &EvaluationResult, bits: u32) -> String {
    let samples: Vec<Value> = result
        .values
        .iter()
        .map(|(t, v)| {
            let mut entry = Map::new();
            entry.insert("T".into(), json!(t));
            match v {
                Sample::Exact(q) => {
                    entry.insert("kind".into(), json!("exact"));
                    entry.insert("value".into(), json!(format_rational(q)));
                }
                Sample::Float(x) => {
                    entry.insert("kind".into(), json!("float"));
                    entry.insert("value".into(), json!(x.to_decimal(decimal_capacity(x.bits()))));
                }
            }
            if let Some(d) = result.agreed_digits.get(t) {
                entry.insert("agreedDigits".into(), json!(d));
            }
            Value::Object(entry)
        })
        .collect();
    to_canonical_string(json!({
        "n": spec.n,
        "r": spec.r,
        "bits": bits,
        "samples": samples,
    }))
}

/// One evaluated sample read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub t: u64,
    pub value: BigRational,
    pub exact: bool,
    pub agreed_digits: Option<u32>,
}

impl SampleRecord {
    pub fn to_fixed(&self, bits: u32) -> Fixed {
        Fixed::from_rational(&self.value, bits)
    }
}

pub fn parse_decimal(text: &str) -> Result<BigRational> {
    let bad = || Error::Format(format!("`{text}` is not a decimal number"));
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() || !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: num_bigint::BigInt = format!("{whole}{frac}").parse().map_err(|_| bad())?;
    let scale = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
    let q = BigRational::new(digits, scale);
    Ok(if negative { -q } else { q })
}

pub fn samples_from_json(text: &str) -> Result<(ProblemSpec, u32, Vec<SampleRecord>)> {
    let map = parse(text)?;
    let spec = spec_fields(&map)?;
    let bits = uint_field(&map, "bits")? as u32;
    let list = field(&map, "samples")?
        .as_array()
        .ok_or_else(|| Error::Format("`samples` is not an array".into()))?;
    let mut out = Vec::with_capacity(list.len());
    for entry in list {
        let entry = entry
            .as_object()
            .ok_or_else(|| Error::Format("sample entries must be objects".into()))?;
        let kind = field(entry, "kind")?.as_str().unwrap_or_default();
        let value = field(entry, "value")?
            .as_str()
            .ok_or_else(|| Error::Format("sample value must be a string".into()))?;
        let (value, exact) = match kind {
            "exact" => (parse_rational(value).map_err(|e| Error::Format(e.to_string()))?, true),
            "float" => (parse_decimal(value)?, false),
            other => return Err(Error::Format(format!("unknown sample kind `{other}`"))),
        };
        out.push(SampleRecord {
            t: uint_field(entry, "T")?,
            value,
            exact,
            agreed_digits: entry
                .get("agreedDigits")
                .and_then(Value::as_u64)
                .map(|d| d as u32),
        });
    }
    Ok((spec, bits, out))
}

/// Inexact reals are written as decimal strings with a fixed digit count.
fn real(value: f64, digits: usize) -> Value {
    if value.is_finite() {
        Value::String(format!("{value:.digits$}"))
    } else {
        Value::Null
    }
}

fn scientific(value: f64) -> Value {
    if value.is_finite() {
        Value::String(format!("{value:.3e}"))
    } else {
        Value::Null
    }
}

pub fn comparison_value(c: &Comparison) -> Value {
    json!({
        "n": c.n,
        "r": c.r,
        "C_measured": c.c_measured,
        "errorBar": scientific(c.error_bar),
        "C_heuristic": real(c.c_heuristic, 12),
        "C_exact": c.c_exact.map_or(Value::Null, |v| real(v, 12)),
        "absGap": scientific(c.abs_gap),
        "relGap": scientific(c.rel_gap),
    })
}

pub fn comparisons_to_json(rows: &[Comparison]) -> String {
    to_canonical_string(Value::Array(rows.iter().map(comparison_value).collect()))
}

pub fn sim_result_to_json(config: &SimConfig, result: &SimResult) -> String {
    let histogram: Map<String, Value> = result
        .histogram
        .iter()
        .map(|(m, c)| (m.to_string(), json!(c)))
        .collect();
    to_canonical_string(json!({
        "config": {
            "n": config.spec.n,
            "r": config.spec.r,
            "T": config.rounds,
            "samples": config.samples,
            "seed": config.seed.to_string(),
        },
        "rng": RNG_ALGORITHM,
        "meanMax": real(result.mean_max, 9),
        "centered": real(result.centered(config), 9),
        "stdError": real(result.std_error, 9),
        "histogram": histogram,
    }))
}
