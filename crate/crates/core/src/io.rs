//! JSON documents for instances and price vectors.
//!
//! Numbers are exact: strings holding integers, decimals (`"4.4"`) or fractions
//! (`"22/5"`), plain JSON integers, or `[numerator, denominator]` pairs. JSON floats are
//! refused because they are already rounded. Module ids and graph vertices are 1-based.
//!
//! ```json
//! {"n": 3, "values": ["1", "2", "3/2"], "costs": ["0.1", "0.2", "0.3"], "budget": "1",
//!  "matroid": {"kind": "partition", "blocks": [[1, 2], [3]], "caps": [1, 1]}}
//! ```

use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::matroid::{Family, Matroid};
use crate::model::{Instance, ModelError, PriceVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("field `{field}`: {problem}")]
    Field { field: String, problem: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn field_err(field: impl Into<String>, problem: impl Into<String>) -> IoError {
    IoError::Field {
        field: field.into(),
        problem: problem.into(),
    }
}

fn parse_scalar(v: &Value, field: &str) -> Result<Scalar, IoError> {
    match v {
        Value::String(s) => s.parse().map_err(|e| field_err(field, format!("{e}"))),
        Value::Number(num) => match num.as_i64() {
            Some(k) => Ok(Scalar::from_int(k)),
            None => Err(field_err(field, format!("{num} is not exact; write it as a string"))),
        },
        Value::Array(pair) if pair.len() == 2 => {
            let num = pair[0]
                .as_i64()
                .ok_or_else(|| field_err(field, "pair entries must be integers"))?;
            let den = pair[1]
                .as_i64()
                .ok_or_else(|| field_err(field, "pair entries must be integers"))?;
            if den == 0 {
                return Err(field_err(field, "zero denominator"));
            }
            Ok(Scalar::ratio(num, den))
        }
        _ => Err(field_err(field, "expected a number string, integer or [num, den] pair")),
    }
}

fn parse_scalars(v: Option<&Value>, field: &str) -> Result<Vec<Scalar>, IoError> {
    let arr = v
        .and_then(Value::as_array)
        .ok_or_else(|| field_err(field, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(k, x)| parse_scalar(x, &format!("{field}[{k}]")))
        .collect()
}

fn parse_usize(v: Option<&Value>, field: &str) -> Result<usize, IoError> {
    v.and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| field_err(field, "expected a nonnegative integer"))
}

fn one_based(v: &Value, field: &str, limit: usize) -> Result<usize, IoError> {
    match v.as_u64() {
        Some(k) if k >= 1 && (k as usize) <= limit => Ok(k as usize - 1),
        _ => Err(field_err(field, format!("expected an id in 1..={limit}"))),
    }
}

fn parse_matroid(v: Option<&Value>, n: usize) -> Result<Matroid, IoError> {
    let obj = v
        .and_then(Value::as_object)
        .ok_or_else(|| field_err("matroid", "expected an object"))?;
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| field_err("matroid.kind", "expected a string"))?;
    let m = match kind {
        "free" => Matroid::free(n),
        "uniform" => Matroid::uniform(n, parse_usize(obj.get("k"), "matroid.k")?),
        "partition" => {
            let blocks = obj
                .get("blocks")
                .and_then(Value::as_array)
                .ok_or_else(|| field_err("matroid.blocks", "expected an array of arrays"))?;
            let blocks = blocks
                .iter()
                .enumerate()
                .map(|(b, block)| {
                    let field = format!("matroid.blocks[{b}]");
                    block
                        .as_array()
                        .ok_or_else(|| field_err(&field, "expected an array"))?
                        .iter()
                        .map(|e| one_based(e, &field, n))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let caps = obj
                .get("caps")
                .and_then(Value::as_array)
                .ok_or_else(|| field_err("matroid.caps", "expected an array"))?
                .iter()
                .enumerate()
                .map(|(k, c)| parse_usize(Some(c), &format!("matroid.caps[{k}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Matroid::partition(n, blocks, caps).map_err(|e| field_err("matroid", e.to_string()))?
        }
        "graphic" => {
            let vertices = parse_usize(obj.get("vertices"), "matroid.vertices")?;
            let edges = obj
                .get("edges")
                .and_then(Value::as_array)
                .ok_or_else(|| field_err("matroid.edges", "expected an array of vertex pairs"))?
                .iter()
                .enumerate()
                .map(|(k, e)| {
                    let field = format!("matroid.edges[{k}]");
                    match e.as_array().map(Vec::as_slice) {
                        Some([u, w]) => Ok((one_based(u, &field, vertices)?, one_based(w, &field, vertices)?)),
                        _ => Err(field_err(&field, "expected a vertex pair")),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            if edges.len() != n {
                return Err(field_err(
                    "matroid.edges",
                    format!("expected {n} edges, found {}", edges.len()),
                ));
            }
            Matroid::graphic(vertices, edges).map_err(|e| field_err("matroid", e.to_string()))?
        }
        other => return Err(field_err("matroid.kind", format!("unknown kind `{other}`"))),
    };
    Ok(m)
}

fn parse_json(bytes: &[u8]) -> Result<Value, IoError> {
    serde_json::from_slice(bytes).map_err(|e| IoError::Json(e.to_string()))
}

/// Parses an instance document. All instance invariants are enforced, including
/// `c(i) <= B`.
pub fn load_instance(bytes: &[u8]) -> Result<Instance, IoError> {
    let doc = parse_json(bytes)?;
    let obj = doc
        .as_object()
        .ok_or_else(|| field_err("<root>", "expected an object"))?;
    let n = parse_usize(obj.get("n"), "n")?;
    let values = parse_scalars(obj.get("values"), "values")?;
    let costs = parse_scalars(obj.get("costs"), "costs")?;
    if values.len() != n {
        return Err(field_err(
            "values",
            format!("expected {n} entries, found {}", values.len()),
        ));
    }
    if costs.len() != n {
        return Err(field_err(
            "costs",
            format!("expected {n} entries, found {}", costs.len()),
        ));
    }
    let budget = parse_scalar(obj.get("budget").unwrap_or(&Value::Null), "budget")?;
    let matroid = parse_matroid(obj.get("matroid"), n)?;
    Ok(Instance::new(values, costs, budget, matroid)?)
}

fn strings(xs: &[Scalar]) -> Vec<String> {
    xs.iter().map(Scalar::to_string).collect()
}

/// JSON description of a matroid with 1-based ids.
pub fn matroid_json(m: &Matroid) -> Value {
    match m.family() {
        Family::Free => json!({"kind": "free"}),
        Family::Uniform { k } => json!({"kind": "uniform", "k": k}),
        Family::Partition { blocks, caps, .. } => {
            let blocks: Vec<Vec<usize>> = blocks.iter().map(|b| b.iter().map(|e| e + 1).collect()).collect();
            json!({"kind": "partition", "blocks": blocks, "caps": caps})
        }
        Family::Graphic { vertices, edges } => {
            let edges: Vec<[usize; 2]> = edges.iter().map(|&(u, w)| [u + 1, w + 1]).collect();
            json!({"kind": "graphic", "vertices": vertices, "edges": edges})
        }
    }
}

#[derive(Serialize)]
struct InstanceDoc {
    n: usize,
    values: Vec<String>,
    costs: Vec<String>,
    budget: String,
    matroid: Value,
}

/// Serializes an instance with every number as a lowest-terms string.
pub fn save_instance(inst: &Instance) -> Vec<u8> {
    let doc = InstanceDoc {
        n: inst.n(),
        values: strings(inst.values()),
        costs: strings(inst.costs()),
        budget: inst.budget().to_string(),
        matroid: matroid_json(inst.matroid()),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("instance documents always serialize");
    out.push(b'\n');
    out
}

/// Parses `{"prices": [...]}` or a bare array, checking the length against `n`.
pub fn load_prices(bytes: &[u8], n: usize) -> Result<PriceVector, IoError> {
    let doc = parse_json(bytes)?;
    let arr = match &doc {
        Value::Object(obj) => obj.get("prices"),
        arr @ Value::Array(_) => Some(arr),
        _ => None,
    };
    let prices = parse_scalars(arr, "prices")?;
    if prices.len() != n {
        return Err(field_err(
            "prices",
            format!("expected {n} entries, found {}", prices.len()),
        ));
    }
    Ok(PriceVector(prices))
}

pub fn save_prices(p: &PriceVector) -> Vec<u8> {
    let mut obj = Map::new();
    obj.insert("prices".into(), json!(strings(p.as_slice())));
    let mut out = serde_json::to_vec_pretty(&Value::Object(obj)).expect("price documents always serialize");
    out.push(b'\n');
    out
}

/// Exact fraction strings for a list of scalars.
pub fn scalar_strings(xs: &[Scalar]) -> Vec<String> {
    strings(xs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_budget_is_exact() {
        let doc = br#"{"n": 2, "values": ["1", "3"], "costs": ["0", "5/2"], "budget": "4.4",
                      "matroid": {"kind": "free"}}"#;
        let inst = load_instance(doc).unwrap();
        assert_eq!(inst.budget(), &Scalar::ratio(22, 5));
        assert_eq!(inst.cost(1), &Scalar::ratio(5, 2));
    }

    #[test]
    fn alternative_number_forms() {
        let doc = br#"{"n": 2, "values": [1, [3, 2]], "costs": ["0", "0"], "budget": 1,
                      "matroid": {"kind": "uniform", "k": 1}}"#;
        let inst = load_instance(doc).unwrap();
        assert_eq!(inst.value(1), &Scalar::ratio(3, 2));
    }

    #[test]
    fn floats_are_refused() {
        let doc = br#"{"n": 1, "values": [0.5], "costs": ["0"], "budget": "1", "matroid": {"kind": "free"}}"#;
        let err = load_instance(doc).unwrap_err();
        assert!(
            matches!(err, IoError::Field { ref field, .. } if field == "values[0]"),
            "{err}"
        );
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let doc = br#"{"n": 1, "values": ["1"], "costs": ["2"], "budget": "1", "matroid": {"kind": "free"}}"#;
        assert!(matches!(
            load_instance(doc),
            Err(IoError::Model(ModelError::CostAboveBudget { index: 0, .. }))
        ));
        let doc = br#"{"n": 2, "values": ["1"], "costs": ["0", "0"], "budget": "1", "matroid": {"kind": "free"}}"#;
        assert!(matches!(load_instance(doc), Err(IoError::Field { ref field, .. }) if field == "values"));
        let doc = br#"{"n": 2, "values": ["1", "1"], "costs": ["0", "0"], "budget": "1",
                      "matroid": {"kind": "partition", "blocks": [[1, 3]], "caps": [1]}}"#;
        assert!(matches!(load_instance(doc), Err(IoError::Field { ref field, .. }) if field == "matroid.blocks[0]"));
        assert!(matches!(load_instance(b"{"), Err(IoError::Json(_))));
    }

    #[test]
    fn graphic_round_trip() {
        let doc = br#"{"n": 3, "values": ["1", "2", "3"], "costs": ["0", "0", "1/3"], "budget": "2",
                      "matroid": {"kind": "graphic", "vertices": 3, "edges": [[1, 2], [2, 3], [1, 3]]}}"#;
        let inst = load_instance(doc).unwrap();
        assert!(!inst.matroid().independent(&[0, 1, 2]));
        let saved = save_instance(&inst);
        assert_eq!(load_instance(&saved).unwrap(), inst);
        assert_eq!(save_instance(&load_instance(&saved).unwrap()), saved);
    }

    #[test]
    fn prices_round_trip() {
        let p = PriceVector(vec![Scalar::ratio(1, 3), Scalar::from_int(2)]);
        let bytes = save_prices(&p);
        assert_eq!(load_prices(&bytes, 2).unwrap(), p);
        assert_eq!(load_prices(br#"["1/3", "2"]"#, 2).unwrap(), p);
        assert!(load_prices(&bytes, 3).is_err());
    }
}
