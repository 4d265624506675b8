//! Hexadecimal floating-point strings (`0x1.8p+1` = 3.0), for coordinate
//! files that must round-trip bit-exactly through any JSON tooling.

use crate::{Error, Result};

/// Formats a finite `f64` as `[-]0x1.<hex>p<exp>` (or `0x0.<hex>p-1022` for
/// subnormals, `0x0p+0` for zero). Trailing zero nibbles are dropped.
pub fn format(value: f64) -> String {
    let bits = value.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    if exp_bits == 0x7ff {
        return if mantissa == 0 {
            format!("{sign}inf")
        } else {
            "nan".to_string()
        };
    }
    let (lead, exp) = match (exp_bits, mantissa) {
        (0, 0) => return format!("{sign}0x0p+0"),
        (0, _) => (0, -1022),
        _ => (1, exp_bits - 1023),
    };
    let mut frac = format!("{mantissa:013x}");
    while frac.ends_with('0') {
        frac.pop();
    }
    let exp_sign = if exp >= 0 { "+" } else { "-" };
    if frac.is_empty() {
        format!("{sign}0x{lead}p{exp_sign}{}", exp.abs())
    } else {
        format!("{sign}0x{lead}.{frac}p{exp_sign}{}", exp.abs())
    }
}

/// Parses the strings produced by [`format`], plus any hexadecimal float of
/// the form `[+-]0x<hex>[.<hex>]p[+-]<dec>` that is exactly representable.
pub fn parse(text: &str) -> Result<f64> {
    let bad = |why: &str| Error::UndefinedInput(format!("hex float {text:?}: {why}"));
    let (negative, rest) = match text.as_bytes().first() {
        Some(b'-') => (true, &text[1..]),
        Some(b'+') => (false, &text[1..]),
        _ => (false, text),
    };
    let rest = rest
        .strip_prefix("0x")
        .or_else(|| rest.strip_prefix("0X"))
        .ok_or_else(|| bad("missing 0x prefix"))?;
    let (digits, exp) = rest
        .split_once(['p', 'P'])
        .ok_or_else(|| bad("missing binary exponent"))?;
    let exp: i64 = exp.parse().map_err(|_| bad("bad exponent"))?;
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad("no digits"));
    }
    // Accumulate up to 64 significant bits; anything beyond must be zero.
    let mut mant: u128 = 0;
    let mut shift: i64 = 0;
    for (is_frac, ch) in int_part
        .chars()
        .map(|c| (false, c))
        .chain(frac_part.chars().map(|c| (true, c)))
    {
        let d = ch.to_digit(16).ok_or_else(|| bad("bad digit"))? as u128;
        if mant >> 120 != 0 {
            if d != 0 {
                return Err(bad("too many significant digits"));
            }
            if !is_frac {
                shift += 4;
            }
            continue;
        }
        mant = (mant << 4) | d;
        if is_frac {
            shift -= 4;
        }
    }
    let exp = exp + shift;
    if mant == 0 {
        return Ok(if negative { -0.0 } else { 0.0 });
    }
    // value = mant * 2^exp; normalize to 53 bits without rounding.
    let top = 127 - mant.leading_zeros() as i64; // index of highest set bit
    let unbiased = top + exp;
    let value = if unbiased >= -1022 {
        if unbiased > 1023 {
            return Err(bad("overflow"));
        }
        let drop = top - 52;
        let m53 = if drop >= 0 {
            if mant & ((1u128 << drop) - 1) != 0 {
                return Err(bad("not exactly representable"));
            }
            (mant >> drop) as u64
        } else {
            (mant << (-drop)) as u64
        };
        let bits = (((unbiased + 1023) as u64) << 52) | (m53 & ((1u64 << 52) - 1));
        f64::from_bits(bits)
    } else {
        // subnormal: value = m * 2^-1074
        let drop = -1074 - exp;
        if drop < 0 {
            // unbiased < -1022 keeps the shifted value below 2^52.
            f64::from_bits((mant << -drop) as u64)
        } else {
            if drop >= 128 || mant & ((1u128 << drop) - 1) != 0 {
                return Err(bad("not exactly representable"));
            }
            f64::from_bits((mant >> drop) as u64)
        }
    };
    Ok(if negative { -value } else { value })
}
