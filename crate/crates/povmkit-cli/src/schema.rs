//! JSON file formats for measurements, channels, and reports.
//!
//! All complex entries are written as `[re, im]` pairs, row-major, under a
//! `schema` version tag. Numbers are accepted either as JSON numbers or as
//! decimal strings; emission uses JSON numbers (round-trip exact via the
//! shortest-representation printer) unless `exact` is requested, which
//! switches to 17-significant-digit decimal strings.

use povmkit_core::mat::{c, Mat};
use povmkit_core::povm::Povm;
use serde_json::{json, Map, Value};

pub const SCHEMA_POVM: &str = "povm/1";
pub const SCHEMA_CHANNEL: &str = "channel/1";
pub const SCHEMA_REPORT: &str = "report/1";

/// Structural problem in an input document: wrong JSON shape, missing or
/// mistyped field, inconsistent counts. Distinct from semantic invalidity
/// (a well-formed file whose operators fail the measurement contract).
#[derive(Debug)]
pub struct SchemaError(pub String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for SchemaError {}

fn err<T>(path: &str, what: &str) -> Result<T, SchemaError> {
    Err(SchemaError(format!("{path}: {what}")))
}

pub fn obj<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, SchemaError> {
    v.as_object().map_or_else(|| err(path, "expected an object"), Ok)
}

pub fn field<'a>(m: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, SchemaError> {
    m.get(key).map_or_else(|| err(path, &format!("missing field `{key}`")), Ok)
}

pub fn arr<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, SchemaError> {
    v.as_array().map_or_else(|| err(path, "expected an array"), Ok)
}

pub fn string(v: &Value, path: &str) -> Result<String, SchemaError> {
    v.as_str().map_or_else(|| err(path, "expected a string"), |s| Ok(s.to_string()))
}

pub fn dimension(v: &Value, path: &str) -> Result<usize, SchemaError> {
    match v.as_u64() {
        Some(n) if n >= 1 && n <= 1 << 20 => Ok(n as usize),
        _ => err(path, "expected a positive integer"),
    }
}

/// A numeric entry: a JSON number, or a decimal string (the `exact` form).
pub fn number(v: &Value, path: &str) -> Result<f64, SchemaError> {
    let x = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    };
    match x {
        Some(x) if x.is_finite() => Ok(x),
        _ => err(path, "expected a finite number (or a decimal string)"),
    }
}

/// 17 significant digits round-trips every finite f64 exactly.
pub fn number_value(x: f64, exact: bool) -> Value {
    if exact {
        Value::String(format!("{x:.16e}"))
    } else {
        serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
    }
}

fn pair(v: &Value, path: &str) -> Result<(f64, f64), SchemaError> {
    let a = arr(v, path)?;
    if a.len() != 2 {
        return err(path, "expected a [re, im] pair");
    }
    Ok((number(&a[0], path)?, number(&a[1], path)?))
}

/// Row-major complex matrix from a flat array of [re, im] pairs.
pub fn matrix_from(v: &Value, rows: usize, cols: usize, path: &str) -> Result<Mat, SchemaError> {
    let a = arr(v, path)?;
    if a.len() != rows * cols {
        return err(path, &format!("expected {} [re, im] pairs, found {}", rows * cols, a.len()));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (k, e) in a.iter().enumerate() {
        let (re, im) = pair(e, &format!("{path}[{k}]"))?;
        data.push(c(re, im));
    }
    Ok(Mat::from_data(rows, cols, data))
}

pub fn matrix_value(m: &Mat, exact: bool) -> Value {
    Value::Array(
        m.data()
            .iter()
            .map(|z| Value::Array(vec![number_value(z.re, exact), number_value(z.im, exact)]))
            .collect(),
    )
}

/// Measurement file contents after structural parsing; the operators still
/// await the semantic validity check.
#[derive(Debug)]
pub struct PovmFile {
    pub dim: usize,
    pub elements: Vec<Mat>,
    pub labels: Vec<String>,
}

pub fn parse_povm(v: &Value, path: &str) -> Result<PovmFile, SchemaError> {
    let m = obj(v, path)?;
    let schema = string(field(m, "schema", path)?, &format!("{path}.schema"))?;
    if schema != SCHEMA_POVM {
        return err(&format!("{path}.schema"), &format!("expected \"{SCHEMA_POVM}\", found \"{schema}\""));
    }
    let dim = dimension(field(m, "dim", path)?, &format!("{path}.dim"))?;
    let els = arr(field(m, "elements", path)?, &format!("{path}.elements"))?;
    if els.is_empty() {
        return err(&format!("{path}.elements"), "expected at least one element");
    }
    let mut elements = Vec::with_capacity(els.len());
    for (i, e) in els.iter().enumerate() {
        elements.push(matrix_from(e, dim, dim, &format!("{path}.elements[{i}]"))?);
    }
    let labels = match m.get("labels") {
        None | Some(Value::Null) => (0..elements.len()).map(|i| format!("{i}")).collect(),
        Some(l) => {
            let la = arr(l, &format!("{path}.labels"))?;
            if la.len() != elements.len() {
                return err(
                    &format!("{path}.labels"),
                    &format!("{} labels for {} elements", la.len(), elements.len()),
                );
            }
            la.iter()
                .enumerate()
                .map(|(i, s)| string(s, &format!("{path}.labels[{i}]")))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    Ok(PovmFile { dim, elements, labels })
}

pub fn povm_value(p: &Povm, exact: bool) -> Value {
    json!({
        "schema": SCHEMA_POVM,
        "dim": p.dim(),
        "elements": p.elements().iter().map(|e| matrix_value(e, exact)).collect::<Vec<_>>(),
        "labels": p.labels(),
    })
}

/// Channel file contents: Kraus operators of a completely positive map
/// X ↦ Σ K†XK from din×din to dout×dout operators.
#[derive(Debug)]
pub struct ChannelFile {
    pub din: usize,
    pub dout: usize,
    pub kraus: Vec<Mat>,
}

pub fn parse_channel(v: &Value, path: &str) -> Result<ChannelFile, SchemaError> {
    let m = obj(v, path)?;
    let schema = string(field(m, "schema", path)?, &format!("{path}.schema"))?;
    if schema != SCHEMA_CHANNEL {
        return err(
            &format!("{path}.schema"),
            &format!("expected \"{SCHEMA_CHANNEL}\", found \"{schema}\""),
        );
    }
    let din = dimension(field(m, "din", path)?, &format!("{path}.din"))?;
    let dout = dimension(field(m, "dout", path)?, &format!("{path}.dout"))?;
    let ks = arr(field(m, "kraus", path)?, &format!("{path}.kraus"))?;
    if ks.is_empty() {
        return err(&format!("{path}.kraus"), "expected at least one Kraus operator");
    }
    let mut kraus = Vec::with_capacity(ks.len());
    for (i, k) in ks.iter().enumerate() {
        kraus.push(matrix_from(k, din, dout, &format!("{path}.kraus[{i}]"))?);
    }
    Ok(ChannelFile { din, dout, kraus })
}

pub fn channel_value(ch: &povmkit_core::channel::Channel, exact: bool) -> Value {
    json!({
        "schema": SCHEMA_CHANNEL,
        "din": ch.din(),
        "dout": ch.dout(),
        "kraus": ch.kraus().iter().map(|k| matrix_value(k, exact)).collect::<Vec<_>>(),
    })
}

/// Canonical document rendering: sorted keys (serde_json maps are ordered),
/// two-space indentation, trailing newline. Byte-identical for identical
/// inputs, which is what makes fixture files reproducible.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use povmkit_core::fixtures::sic2;

    #[test]
    fn povm_round_trip_is_exact() {
        let p = sic2();
        for exact in [false, true] {
            let v = povm_value(&p, exact);
            let parsed = parse_povm(&v, "$").unwrap();
            assert_eq!(parsed.dim, 2);
            assert_eq!(parsed.elements.len(), 4);
            for (a, b) in parsed.elements.iter().zip(p.elements()) {
                assert_eq!(a.sub(b).max_abs(), 0.0, "round trip must be bit-exact");
            }
        }
    }

    #[test]
    fn decimal_strings_parse_as_numbers() {
        for x in [0.0, 1.0, -1.0, 1.234e-7, std::f64::consts::PI, 1.0 / 3.0, -2.5e17] {
            for exact in [false, true] {
                let v = number_value(x, exact);
                assert_eq!(number(&v, "$").unwrap(), x, "round trip of {x} (exact={exact})");
            }
        }
        assert!(number(&json!("wat"), "$").is_err());
        assert!(number(&json!(null), "$").is_err());
    }

    #[test]
    fn structural_errors_carry_paths() {
        let bad = json!({"schema": SCHEMA_POVM, "dim": 2, "elements": [[[1.0, 0.0]]]});
        let e = parse_povm(&bad, "$").unwrap_err();
        assert!(e.0.contains("$.elements[0]"), "{e}");
        assert!(e.0.contains("expected 4"), "{e}");
    }
}
