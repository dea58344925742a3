//! CSV and JSON rendering. Both are deterministic for a given input.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// Twelve significant digits, fixed-point in the ordinary range and
/// scientific outside it.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

pub fn fmt_value(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => fmt_num(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Header plus one line per row; every row must carry the header's keys.
pub fn csv(header: &[&str], rows: &[BTreeMap<String, Value>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = header
            .iter()
            .map(|h| escape(&row.get(*h).map(fmt_value).unwrap_or_default()))
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Pretty JSON with keys in sorted order.
pub fn json<T: Serialize>(value: &T) -> String {
    // Round-tripping through Value sorts every map, since serde_json's
    // map is a BTreeMap without the preserve_order feature.
    let v = serde_json::to_value(value).expect("serializable");
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(24.0), "24.0000000000");
        assert_eq!(fmt_num(120.781_432_225_874_2), "120.781432226");
        assert_eq!(fmt_num(1.5e-7), "1.50000000000e-7");
        assert_eq!(fmt_num(0.0), "0");
    }

    #[test]
    fn csv_quotes_commas() {
        let mut row = BTreeMap::new();
        row.insert("a".to_string(), Value::from("x,y"));
        row.insert("b".to_string(), Value::from(2.5));
        assert_eq!(csv(&["a", "b"], &[row]), "a,b\n\"x,y\",2.50000000000\n");
    }
}
