//! Numbers given as decimals or exact rationals `p/q`.

use crate::error::{Error, Result};

pub fn parse_number(s: &str) -> Result<f64> {
    let t = s.trim();
    let bad = |m: &str| Error::Parse { context: format!("number '{t}'"), message: m.into() };
    let v = if let Some((p, q)) = t.split_once('/') {
        let p: f64 = p.trim().parse().map_err(|_| bad("numerator is not a number"))?;
        let q: f64 = q.trim().parse().map_err(|_| bad("denominator is not a number"))?;
        if q == 0.0 {
            return Err(bad("zero denominator"));
        }
        p / q
    } else {
        t.parse().map_err(|_| bad("not a decimal or p/q rational"))?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad("not finite"))
    }
}

/// Comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_number).collect()
}
