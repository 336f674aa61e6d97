//! JSON instance format, approval ballots and the FT JSON format.
//!
//! Instance JSON:
//!
//! ```json
//! {"m": 3, "n": 1, "k": 2, "costs": [[0, 1, "1/2"]], "weights": {"kind": "harmonic"}, "metric": null}
//! ```
//!
//! `weights.kind` is one of `harmonic`, `geometric` (`p`), `top_r` (`r`) or
//! `custom` (`values`). `k` may also be given inside `weights`; `m` and `n`
//! are optional and checked when present. Numbers may be JSON numbers, read
//! as exact decimals, or `"p/q"` strings.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{Instance, Parameter, WeightFamily, WeightVector};
use crate::reduce::{FtClient, FtInstance};
use crate::scalar::{parse_rational, Scalar};

fn parse_number(v: &Value, what: &str) -> Result<BigRational> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(Error::Parse(format!("{what}: expected a number, got {v}"))),
    };
    parse_rational(&text).ok_or_else(|| Error::Parse(format!("{what}: cannot read {text:?} as a rational")))
}

fn field<'a>(obj: &'a Value, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::Parse(format!("missing field {key:?}")))
}

fn parse_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|x| x.to_usize())
        .ok_or_else(|| Error::Parse(format!("{what}: expected a nonnegative integer, got {v}")))
}

/// JSON value of an exact number: an integer, a short decimal when that reads
/// back to the same rational, else a `"p/q"` string.
pub fn rational_to_json(r: &BigRational) -> Value {
    if r.is_integer() {
        if let Some(i) = r.to_integer().to_i64() {
            return json!(i);
        }
    }
    let f = r.as_f64();
    if f.is_finite() {
        let v = json!(f);
        if parse_rational(&v.to_string()).as_ref() == Some(r) {
            return v;
        }
    }
    Value::String(r.to_string())
}

/// `k` may sit inside `weights` or at the top level of the instance.
fn weights_from_json<S: Scalar>(w: &Value, outer_k: Option<&Value>) -> Result<WeightVector<S>> {
    let k = || -> Result<usize> {
        match w.get("k").or(outer_k) {
            Some(v) => parse_usize(v, "k"),
            None => Err(Error::Parse("missing field \"k\"".into())),
        }
    };
    let kind = field(w, "kind")?
        .as_str()
        .ok_or_else(|| Error::Parse("weights.kind must be a string".into()))?;
    match kind {
        "harmonic" => WeightVector::harmonic(k()?),
        "geometric" => WeightVector::geometric(
            parse_number(field(w, "p")?, "weights.p")?,
            k()?,
        ),
        "top_r" => WeightVector::top_r(
            parse_usize(field(w, "r")?, "weights.r")?,
            k()?,
        ),
        "custom" => {
            let values = field(w, "values")?
                .as_array()
                .ok_or_else(|| Error::Parse("weights.values must be an array".into()))?
                .iter()
                .enumerate()
                .map(|(i, v)| parse_number(v, &format!("weights.values[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            if let Some(k) = outer_k {
                if parse_usize(k, "k")? != values.len() {
                    return Err(Error::Parse(format!("k = {k} but {} weight values", values.len())));
                }
            }
            WeightVector::custom_exact(values)
        }
        other => Err(Error::Parse(format!("unknown weight kind {other:?}"))),
    }
}

fn weights_to_json<S: Scalar>(w: &WeightVector<S>) -> Value {
    match (w.family(), w.exact()) {
        (WeightFamily::Harmonic, _) => json!({"kind": "harmonic"}),
        (WeightFamily::TopR(r), _) => json!({"kind": "top_r", "r": r}),
        (WeightFamily::Geometric(Parameter::Exact(p)), _) => json!({"kind": "geometric", "p": rational_to_json(p)}),
        (_, Some(exact)) => json!({"kind": "custom", "values": exact.iter().map(rational_to_json).collect::<Vec<_>>()}),
        (_, None) => json!({"kind": "custom", "values": w.values().iter().map(|v| json!(v.as_f64())).collect::<Vec<_>>()}),
    }
}

pub fn instance_from_value<S: Scalar>(v: &Value) -> Result<Instance<S>> {
    let costs: Vec<Vec<S>> = field(v, "costs")?
        .as_array()
        .ok_or_else(|| Error::Parse("costs must be an array of rows".into()))?
        .iter()
        .enumerate()
        .map(|(j, row)| {
            row.as_array()
                .ok_or_else(|| Error::Parse(format!("costs[{j}] must be an array")))?
                .iter()
                .enumerate()
                .map(|(i, c)| parse_number(c, &format!("costs[{j}][{i}]")).map(|r| S::from_rational(&r)))
                .collect()
        })
        .collect::<Result<_>>()?;
    let m = match v.get("m") {
        Some(m) => parse_usize(m, "m")?,
        None => costs.first().map_or(0, Vec::len),
    };
    if let Some(n) = v.get("n") {
        if parse_usize(n, "n")? != costs.len() {
            return Err(Error::Parse(format!("n = {n} but {} cost rows", costs.len())));
        }
    }
    let metric = v.get("metric").and_then(Value::as_bool);
    Instance::new(m, costs, weights_from_json(field(v, "weights")?, v.get("k"))?, metric)
}

pub fn instance_from_json<S: Scalar>(text: &str) -> Result<Instance<S>> {
    instance_from_value(&serde_json::from_str(text)?)
}

pub fn instance_to_value<S: Scalar>(inst: &Instance<S>) -> Value {
    let costs: Vec<Vec<Value>> = inst
        .costs()
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| {
                    if S::EXACT {
                        rational_to_json(&c.to_rational().expect("exact"))
                    } else {
                        json!(c.as_f64())
                    }
                })
                .collect()
        })
        .collect();
    json!({
        "m": inst.num_facilities(),
        "n": inst.num_clients(),
        "k": inst.k(),
        "costs": costs,
        "weights": weights_to_json(inst.weights()),
        "metric": inst.metric(),
    })
}

pub fn instance_to_json<S: Scalar>(inst: &Instance<S>) -> String {
    serde_json::to_string_pretty(&instance_to_value(inst)).expect("serialisable")
}

/// One ballot per line: space-separated approved candidate indices. Blank
/// lines are empty ballots and are rejected unless `allow_empty`.
pub fn parse_ballots(text: &str, num_candidates: usize, allow_empty: bool) -> Result<Vec<Vec<usize>>> {
    let mut ballots = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let ballot: Vec<usize> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("line {}: bad candidate {tok:?}", line_no + 1)))
            })
            .collect::<Result<_>>()?;
        if ballot.is_empty() && !allow_empty {
            return Err(Error::Parse(format!(
                "line {}: empty ballot (pass --allow-empty to accept)",
                line_no + 1
            )));
        }
        if let Some(&c) = ballot.iter().find(|&&c| c >= num_candidates) {
            return Err(Error::Parse(format!(
                "line {}: candidate {c} out of range 0..{num_candidates}",
                line_no + 1
            )));
        }
        ballots.push(ballot);
    }
    if ballots.is_empty() {
        return Err(Error::Parse("no ballots".into()));
    }
    Ok(ballots)
}

/// Largest candidate index mentioned plus one.
pub fn candidates_in(text: &str) -> usize {
    text.split_whitespace()
        .filter_map(|t| t.parse::<usize>().ok())
        .max()
        .map_or(0, |c| c + 1)
}

pub fn ft_to_value(ft: &FtInstance) -> Value {
    let clients: Vec<Value> = ft
        .clients()
        .iter()
        .map(|c| {
            json!({
                "costs": c.costs.iter().map(rational_to_json).collect::<Vec<_>>(),
                "r": c.requirement,
                "mult": c.multiplicity.to_string(),
            })
        })
        .collect();
    json!({"m": ft.num_facilities(), "k": ft.k(), "q": ft.q().to_string(), "clients": clients})
}

pub fn ft_to_json(ft: &FtInstance) -> String {
    serde_json::to_string_pretty(&ft_to_value(ft)).expect("serialisable")
}

pub fn ft_from_json(text: &str) -> Result<FtInstance> {
    let v: Value = serde_json::from_str(text)?;
    let m = parse_usize(field(&v, "m")?, "m")?;
    let k = parse_usize(field(&v, "k")?, "k")?;
    let big = |x: &Value, what: &str| -> Result<BigUint> {
        x.as_str()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("{what}: expected a decimal string")))
    };
    let q = match v.get("q") {
        Some(q) => big(q, "q")?,
        None => BigUint::from(1u32),
    };
    let clients = field(&v, "clients")?
        .as_array()
        .ok_or_else(|| Error::Parse("clients must be an array".into()))?
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let costs = field(c, "costs")?
                .as_array()
                .ok_or_else(|| Error::Parse(format!("clients[{j}].costs must be an array")))?
                .iter()
                .map(|x| parse_number(x, &format!("clients[{j}].costs")))
                .collect::<Result<_>>()?;
            Ok(FtClient {
                costs,
                requirement: parse_usize(field(c, "r")?, "r")?,
                multiplicity: big(field(c, "mult")?, "mult")?,
                origin: None,
            })
        })
        .collect::<Result<_>>()?;
    FtInstance::new(m, k, clients, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{gen_random, CostMode};
    use crate::reduce::reduce_owa_to_ft;

    #[test]
    fn instance_round_trip() {
        let text = r#"{"costs": [[0, 1, "1/3"], [0.25, 2, 1]], "k": 2, "weights": {"kind": "geometric", "p": "1/2"}}"#;
        let inst: Instance<BigRational> = instance_from_json(text).unwrap();
        assert_eq!(inst.num_facilities(), 3);
        assert_eq!(inst.costs()[0][2], BigRational::new(1.into(), 3.into()));
        assert_eq!(inst.costs()[1][0], BigRational::new(1.into(), 4.into()));
        let back: Instance<BigRational> = instance_from_json(&instance_to_json(&inst)).unwrap();
        assert_eq!(back, inst);

        let f = gen_random(4, 3, WeightVector::<f64>::top_r(2, 3).unwrap(), CostMode::Metric, 1).unwrap();
        let back: Instance<f64> = instance_from_json(&instance_to_json(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn instance_errors() {
        assert!(instance_from_json::<f64>(r#"{"costs": [[1]], "weights": {"kind": "nope", "k": 1}}"#).is_err());
        assert!(instance_from_json::<f64>(r#"{"costs": [[1]], "weights": {"kind": "harmonic", "k": 2}}"#).is_err());
        assert!(instance_from_json::<f64>(r#"{"costs": [["x"]], "weights": {"kind": "harmonic", "k": 1}}"#).is_err());
        assert!(instance_from_json::<f64>("[").is_err());
        assert!(instance_from_json::<f64>(r#"{"costs": [[1]], "weights": {"kind": "harmonic"}}"#).is_err());
        assert!(instance_from_json::<f64>(r#"{"n": 2, "k": 1, "costs": [[1]], "weights": {"kind": "harmonic"}}"#).is_err());
    }

    #[test]
    fn ballots() {
        assert_eq!(parse_ballots("0 1\n2\n", 3, false).unwrap(), vec![vec![0, 1], vec![2]]);
        assert!(parse_ballots("0 1\n\n2\n", 3, false).is_err());
        assert_eq!(parse_ballots("0 1\n\n2\n", 3, true).unwrap().len(), 3);
        assert!(parse_ballots("0 5\n", 3, false).is_err());
        assert!(parse_ballots("0 x\n", 3, false).is_err());
        assert!(parse_ballots("", 3, true).is_err());
        assert_eq!(candidates_in("0 4\n2\n"), 5);
    }

    #[test]
    fn ft_round_trip() {
        let inst = gen_random(4, 2, WeightVector::<BigRational>::harmonic(3).unwrap(), CostMode::NonMetric, 2).unwrap();
        let ft = reduce_owa_to_ft(&inst).unwrap();
        let text = ft_to_json(&ft);
        assert!(text.contains("\"mult\": \"3\""));
        let back = ft_from_json(&text).unwrap();
        assert_eq!(back.clients().len(), ft.clients().len());
        assert_eq!(back.q(), ft.q());
        assert_eq!(back.clients()[0].costs, ft.clients()[0].costs);
    }
}
