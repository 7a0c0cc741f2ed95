//! Number formatting shared by the CSV and JSON writers: 12 significant
//! digits, infinities as `"inf"`.

use fprw::ext::round_sig;
use fprw::Ext;
use serde_json::Value;

pub fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == 0.0 {
        "0".into()
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{}", round_sig(x))
    }
}

pub fn fmt_ext(x: Ext) -> String {
    fmt_f64(x.to_f64())
}

pub fn json_f64(x: f64) -> Value {
    // + 0.0 turns -0 into 0
    match serde_json::Number::from_f64(round_sig(x) + 0.0) {
        Some(n) => Value::Number(n),
        None => Value::String(fmt_f64(x)),
    }
}

/// Rounds every float in `v` to 12 significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            *v = json_f64(n.as_f64().unwrap_or(f64::NAN));
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}
