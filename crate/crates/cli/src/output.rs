//! Serialized outputs. Every float is rounded to 12 significant digits and
//! every document carries the seed.

use cost_core::Quantity;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::Failure;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Top-level JSON document written by every subcommand.
#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope {
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub result: Value,
}

pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

pub fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x))) {
                *n = x;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_value(x: &impl Serialize) -> Result<Value, Failure> {
    let mut v = serde_json::to_value(x)?;
    round_value(&mut v);
    Ok(v)
}

/// Rounds every float in `x`, so that computation sees exactly what a
/// replay of the output would see.
pub fn normalize<T: Serialize + serde::de::DeserializeOwned>(x: &T) -> Result<T, Failure> {
    Ok(serde_json::from_value(to_value(x)?)?)
}

pub fn render_json(command: &str, seed: u64, config: Value, result: Value) -> Result<String, Failure> {
    let env = Envelope {
        command: command.to_string(),
        seed,
        config,
        result,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

pub fn num(x: f64) -> String {
    round_sig(x).to_string()
}

pub fn qty(q: Quantity) -> String {
    match q {
        Quantity::Value(x) => num(x),
        Quantity::Undefined => q.to_string(),
    }
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with a trailing `seed` column.
pub fn render_csv(header: &[&str], rows: &[Vec<String>], seed: u64) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head: Vec<&str> = header.to_vec();
    head.push("seed");
    w.write_record(&head)?;
    let seed = seed.to_string();
    for row in rows {
        w.write_record(row.iter().map(String::as_str).chain([seed.as_str()]))?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?)
}
