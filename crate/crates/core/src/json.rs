//! Stable JSON emission: sorted keys, large magnitudes as decimal strings.

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Magnitude from which numbers are written as strings.
pub const STRING_THRESHOLD: f64 = 1e15;

fn stringify_large(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                if u as f64 >= STRING_THRESHOLD {
                    return Value::String(u.to_string());
                }
            } else if let Some(i) = n.as_i64() {
                if (i as f64).abs() >= STRING_THRESHOLD {
                    return Value::String(i.to_string());
                }
            } else if let Some(f) = n.as_f64() {
                if f.abs() >= STRING_THRESHOLD {
                    return Value::String(format!("{f:e}"));
                }
            }
            Value::Number(n)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(stringify_large).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, stringify_large(v))).collect()),
        other => other,
    }
}

/// Value tree with sorted keys and large numbers replaced by strings.
pub fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    let raw = serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))?;
    Ok(stringify_large(raw))
}

/// Pretty, key-sorted JSON text.
pub fn to_string<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&to_value(v)?).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Compact, key-sorted JSON text (used for hashing).
pub fn to_compact<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(&to_value(v)?).map_err(|e| Error::Io(e.to_string()))
}

/// Hex SHA-256 of the compact stable JSON form.
pub fn sha256_of<T: Serialize>(v: &T) -> Result<String> {
    use sha2::{Digest, Sha256};
    Ok(hex::encode(Sha256::digest(to_compact(v)?.as_bytes())))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

impl NumOrStr {
    fn into_f64<E: serde::de::Error>(self) -> std::result::Result<f64, E> {
        match self {
            NumOrStr::Num(v) => Ok(v),
            NumOrStr::Str(s) => s.parse().map_err(|_| E::custom(format!("not a number: {s}"))),
        }
    }
}

/// Deserializers accepting either JSON numbers or numeric strings.
pub mod lenient {
    use super::*;

    pub fn f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        NumOrStr::deserialize(d)?.into_f64()
    }

    pub fn vec<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        Vec::<NumOrStr>::deserialize(d)?.into_iter().map(NumOrStr::into_f64).collect()
    }

    pub fn vec2<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<f64>>, D::Error> {
        Vec::<Vec<NumOrStr>>::deserialize(d)?
            .into_iter()
            .map(|row| row.into_iter().map(NumOrStr::into_f64).collect())
            .collect()
    }
}
