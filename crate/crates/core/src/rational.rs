//! Exact rationals for thresholds and ratios.

use num_rational::Ratio;
use num_traits::ToPrimitive;

/// Small exact rational used for causal strengths, thresholds and ratios.
pub type Rational = Ratio<i64>;

/// Parses `"9/10"`, `"0.9"`, `"1"` or `".95"` into an exact rational.
///
/// Decimal input is converted digit by digit, so `"0.9"` is exactly `9/10`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse().ok()?;
        let den: i64 = den.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        return Some(Ratio::new(num, den));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    if frac_part.len() > 15 {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: i64 = if digits.is_empty() {
        0
    } else {
        digits.parse().ok()?
    };
    let denom = 10_i64.checked_pow(frac_part.len() as u32)?;
    let value = Ratio::new(numer, denom);
    Some(if negative { -value } else { value })
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Renders `n/d`, or just `n` for integers.
pub fn format_rational(value: &Rational) -> String {
    if *value.denom() == 1 {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}
