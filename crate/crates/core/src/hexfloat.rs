//! Exact `f64` <-> hex-float string conversion.
//!
//! Serialized datasets and checkpoints must round-trip to the exact bit
//! pattern, so floats are written as C99-style hex literals
//! (`-0x1.921fb54442d18p+1`) rather than decimal.

use crate::error::{Error, Result};

const MANTISSA_MASK: u64 = (1 << 52) - 1;

/// Encode a double as a canonical hex-float string.
pub fn encode_f64(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & MANTISSA_MASK;
    if exp_bits == 0 {
        if mantissa == 0 {
            return format!("{sign}0x0p+0");
        }
        // subnormal: 0.mantissa * 2^-1022
        return format!("{sign}0x0.{mantissa:013x}p-1022");
    }
    let exp = exp_bits - 1023;
    format!("{sign}0x1.{mantissa:013x}p{exp:+}")
}

/// Decode a string produced by [`encode_f64`] back to the identical bits.
pub fn decode_f64(s: &str) -> Result<f64> {
    let bad = |msg: &str| Error::Parse(format!("hex float {s:?}: {msg}"));
    match s {
        "nan" => return Ok(f64::NAN),
        "inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let (neg, rest) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let rest = rest
        .strip_prefix("0x")
        .ok_or_else(|| bad("missing 0x prefix"))?;
    let (mant_str, exp_str) = rest.split_once('p').ok_or_else(|| bad("missing exponent"))?;
    let exp: i64 = exp_str
        .parse()
        .map_err(|_| bad("unparseable exponent"))?;

    let sign_bit = if neg { 1u64 << 63 } else { 0 };
    let bits = match mant_str.split_once('.') {
        None => {
            if mant_str != "0" || exp != 0 {
                return Err(bad("only 0x0p+0 may omit the fraction"));
            }
            sign_bit
        }
        Some((lead, frac)) => {
            if frac.len() != 13 {
                return Err(bad("fraction must be 13 hex digits"));
            }
            let mantissa = u64::from_str_radix(frac, 16).map_err(|_| bad("bad fraction"))?;
            match lead {
                "1" => {
                    if !(-1022..=1023).contains(&exp) {
                        return Err(bad("normal exponent out of range"));
                    }
                    sign_bit | (((exp + 1023) as u64) << 52) | mantissa
                }
                "0" => {
                    if exp != -1022 {
                        return Err(bad("subnormal exponent must be -1022"));
                    }
                    sign_bit | mantissa
                }
                _ => return Err(bad("leading digit must be 0 or 1")),
            }
        }
    };
    Ok(f64::from_bits(bits))
}
