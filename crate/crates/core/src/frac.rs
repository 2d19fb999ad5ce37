//! Exact rational frequencies, serialized as `"p/q"` strings.

use num_rational::Rational64;
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{domain, Result};

/// Formats as `p/q`, keeping the denominator even when it is 1.
pub fn format(r: &Rational64) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q` or a bare integer `p`.
pub fn parse(s: &str) -> Result<Rational64> {
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: i64 = p
        .parse()
        .map_err(|_| domain(format!("bad rational numerator in {s:?}")))?;
    let q: i64 = q
        .parse()
        .map_err(|_| domain(format!("bad rational denominator in {s:?}")))?;
    if q == 0 {
        return Err(domain(format!("zero denominator in {s:?}")));
    }
    Ok(Rational64::new(p, q))
}

pub fn to_f64(r: &Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub(crate) fn serialize<S: Serializer>(r: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format(r))
}

pub(crate) fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational64, D::Error> {
    let s = String::deserialize(d)?;
    parse(&s).map_err(serde::de::Error::custom)
}
