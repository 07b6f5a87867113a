use serde_json::{Number, Value};
use sha2::{Digest, Sha256};

/// Largest integer an f64 represents exactly.
const EXACT_INT: f64 = 9_007_199_254_740_992.0;

fn normalize(value: &Value) -> Value {
    match value {
        Value::Number(n) => {
            if n.is_u64() || n.is_i64() {
                let f = n.as_f64().unwrap_or(0.0);
                if f.abs() < EXACT_INT {
                    // 2 and 2.0 hash alike
                    return Value::Number(Number::from(f as i64));
                }
                return value.clone();
            }
            let f = n.as_f64().unwrap_or(0.0);
            if f.fract() == 0.0 && f.abs() < EXACT_INT {
                Value::Number(Number::from(f as i64))
            } else {
                Number::from_f64(f).map_or(Value::Null, Value::Number)
            }
        }
        Value::Array(items) => Value::Array(items.iter().map(normalize).collect()),
        // serde_json maps are ordered by key, so serialisation sorts keys
        Value::Object(map) => Value::Object(map.iter().map(|(k, v)| (k.clone(), normalize(v))).collect()),
        other => other.clone(),
    }
}

/// Canonical text of a JSON document: sorted keys, no whitespace,
/// integral numbers written without a fraction.
pub fn canonical_json(value: &Value) -> String {
    normalize(value).to_string()
}

/// SHA-256 of the canonical job text, hex encoded.
pub fn request_hash(job: &Value) -> String {
    hex::encode(Sha256::digest(canonical_json(job).as_bytes()))
}
