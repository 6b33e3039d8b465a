//! Fixed-width decimal output (17 significant digits, `.` separator).
//!
//! JSON numbers go through [`serde_json::value::RawValue`] so the text is
//! exactly what [`sci17`] prints, independent of locale or float printer.

use serde::Serializer;
use serde_json::value::RawValue;

/// `x` with 17 significant digits in scientific notation; `NaN`/`inf` as text.
pub fn sci17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn raw(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() {
        sci17(x)
    } else {
        "null".to_string()
    };
    RawValue::from_string(text).expect("valid JSON number")
}

pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&raw(*x), s)
}

pub fn ser_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&raw(*x))?;
    }
    seq.end()
}

pub fn ser_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_f64(v, s),
        None => s.serialize_none(),
    }
}

/// Joins numbers as one CSV row.
pub fn csv_row(xs: &[f64]) -> String {
    xs.iter().map(|x| sci17(*x)).collect::<Vec<_>>().join(",")
}
