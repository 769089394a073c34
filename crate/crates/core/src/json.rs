//! JSON encodings shared by every module.
//!
//! Elements are arrays of `{"coeff": "p/q", "gens": [i, …]}`; a pure scalar
//! may also be written as a bare rational string such as `"3/4"`, which is the
//! form the encoder emits for scalars.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result, ResultExt};
use crate::grassmann::{Grassmann, Rational};

pub fn rational_to_string(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Malformed(format!("`{s}` is not a rational of the form p or p/q"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

pub fn element_to_json(x: &Grassmann) -> Value {
    if x.is_scalar() {
        return Value::String(rational_to_string(&x.body()));
    }
    Value::Array(
        x.terms()
            .map(|(gens, c)| json!({"coeff": rational_to_string(c), "gens": gens}))
            .collect(),
    )
}

pub fn element_from_json(v: &Value, num_generators: usize) -> Result<Grassmann> {
    match v {
        Value::String(s) => Ok(Grassmann::scalar(num_generators, parse_rational(s)?)),
        Value::Number(n) if n.is_i64() => {
            Ok(Grassmann::from_int(num_generators, n.as_i64().unwrap_or_default()))
        }
        Value::Array(items) => {
            let mut terms = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                let obj = item
                    .as_object()
                    .ok_or_else(|| Error::Malformed("term must be an object".into()))
                    .at(format!("[{i}]"))?;
                let coeff = match obj.get("coeff") {
                    Some(Value::String(s)) => parse_rational(s),
                    Some(Value::Number(n)) if n.is_i64() => {
                        Ok(Rational::from_integer(n.as_i64().unwrap_or_default().into()))
                    }
                    _ => Err(Error::Malformed("missing rational `coeff`".into())),
                }
                .at(format!("[{i}]"))?;
                let gens = obj
                    .get("gens")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Malformed("missing `gens` array".into()))
                    .at(format!("[{i}]"))?
                    .iter()
                    .map(|g| {
                        g.as_u64()
                            .map(|g| g as usize)
                            .ok_or_else(|| Error::Malformed("generator index must be a nonnegative integer".into()))
                    })
                    .collect::<Result<Vec<_>>>()
                    .at(format!("[{i}]"))?;
                terms.push((gens, coeff));
            }
            Grassmann::from_terms(num_generators, terms)
        }
        _ => Err(Error::Malformed("element must be an array of terms or a rational string".into())),
    }
}

/// Largest generator index mentioned anywhere inside `v`, plus one.
pub fn infer_num_generators(v: &Value) -> usize {
    fn walk(v: &Value, best: &mut usize) {
        match v {
            Value::Object(map) => {
                if let (Some(Value::Array(gens)), true) = (map.get("gens"), map.contains_key("coeff")) {
                    for g in gens.iter().filter_map(Value::as_u64) {
                        *best = (*best).max(g as usize + 1);
                    }
                }
                map.values().for_each(|x| walk(x, best));
            }
            Value::Array(items) => items.iter().for_each(|x| walk(x, best)),
            _ => {}
        }
    }
    let mut best = 0;
    walk(v, &mut best);
    best
}

/// Reads the `num_generators` field of a document, falling back to inference.
pub fn num_generators_of(doc: &Value) -> Result<usize> {
    match doc.get("num_generators") {
        Some(v) => v
            .as_u64()
            .map(|n| n as usize)
            .ok_or_else(|| Error::Malformed("`num_generators` must be a nonnegative integer".into())),
        None => Ok(infer_num_generators(doc)),
    }
}

pub(crate) fn field<'a>(obj: &'a Value, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::Malformed(format!("missing field `{name}`")))
}

pub(crate) fn int_field(obj: &Value, name: &str) -> Result<i64> {
    field(obj, name)?
        .as_i64()
        .ok_or_else(|| Error::Malformed(format!("field `{name}` must be an integer")))
}

pub(crate) fn array_field<'a>(obj: &'a Value, name: &str) -> Result<&'a Vec<Value>> {
    field(obj, name)?
        .as_array()
        .ok_or_else(|| Error::Malformed(format!("field `{name}` must be an array")))
}

pub(crate) fn object(entries: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    for (k, v) in entries {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}
