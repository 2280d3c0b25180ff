//! Serialization of command results: JSON with floats rounded to a fixed
//! number of significant digits.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::Value;
use sigcert_core::round_sig;

pub const SIGNIFICANT_DIGITS: usize = 12;

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(|x| round_sig(x, SIGNIFICANT_DIGITS)).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to [`SIGNIFICANT_DIGITS`].
pub fn to_json<T: serde::Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_are_rounded_and_integers_kept() {
        let v = serde_json::json!({"a": 0.1 + 0.2, "b": [1.0 / 3.0, 7], "c": "x"});
        let s = to_json(&v).unwrap();
        assert!(s.contains("0.3,") || s.contains("0.3\n"));
        assert!(s.contains("0.333333333333"));
        assert!(!s.contains("0.3333333333333"));
        assert!(s.contains('7'));
    }
}
