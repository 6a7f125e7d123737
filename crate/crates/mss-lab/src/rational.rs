//! Exact rational lengths.
//!
//! All metric distances, chunk sizes and game costs in this crate are exact
//! rationals. Desk-scale instances keep numerators tiny, so `i64` ratios
//! suffice for lengths; the chunk-size machinery in `adversary::refined`
//! uses `BigRational` internally where denominators can compound.

use num::rational::Ratio;
use num::{BigRational, FromPrimitive, ToPrimitive, Zero};

pub type Len = Ratio<i64>;

/// Integer length.
pub fn len(n: i64) -> Len {
    Ratio::from_integer(n)
}

/// Fraction `n/d`.
pub fn frac(n: i64, d: i64) -> Len {
    Ratio::new(n, d)
}

pub fn to_f64(x: Len) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn big(x: Len) -> BigRational {
    BigRational::new((*x.numer()).into(), (*x.denom()).into())
}

pub fn big_int(n: i64) -> BigRational {
    BigRational::from_i64(n).unwrap()
}

/// Lossy conversion back to `Len`; panics if the value does not fit.
pub fn big_to_len(x: &BigRational) -> Len {
    let n = x.numer().to_i64().expect("rational numerator out of i64 range");
    let d = x.denom().to_i64().expect("rational denominator out of i64 range");
    Ratio::new(n, d)
}

pub fn big_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Formats as `n` or `n/d`.
pub fn format_len(x: Len) -> String {
    if x.denom() == &1 {
        format!("{}", x.numer())
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `n` or `n/d`.
pub fn parse_len(s: &str) -> crate::Result<Len> {
    let s = s.trim();
    let parse_i64 = |t: &str| {
        t.trim()
            .parse::<i64>()
            .map_err(|_| crate::Error::Parse(format!("bad rational: {s:?}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_i64(d)?;
            if d == 0 {
                return Err(crate::Error::Parse(format!("zero denominator: {s:?}")));
            }
            Ok(Ratio::new(parse_i64(n)?, d))
        }
        None => {
            // Accept plain decimals like "0.25" for CLI convenience.
            if let Some((int, fr)) = s.split_once('.') {
                let scale = 10i64.pow(fr.len() as u32);
                let int = if int.is_empty() { 0 } else { parse_i64(int)? };
                let fr_v = parse_i64(fr)?;
                let sign = if s.trim_start().starts_with('-') { -1 } else { 1 };
                return Ok(len(int) + frac(sign * fr_v.abs(), scale));
            }
            Ok(Ratio::from_integer(parse_i64(s)?))
        }
    }
}

/// Largest integer `k >= 0` with `k*k <= n`.
pub fn isqrt(n: i64) -> i64 {
    if n <= 0 {
        return 0;
    }
    let mut k = (n as f64).sqrt() as i64;
    while (k + 1) * (k + 1) <= n {
        k += 1;
    }
    while k * k > n {
        k -= 1;
    }
    k
}

/// Largest integer `k >= 0` with `alpha * k^2 <= 1`.
pub fn base_level(alpha: Len) -> u32 {
    assert!(alpha > Len::zero(), "alpha must be positive");
    // alpha*k^2 <= 1  <=>  numer*k^2 <= denom
    let n = *alpha.numer();
    let d = *alpha.denom();
    let mut k = isqrt(d / n.max(1));
    while alpha * len(k + 1) * len(k + 1) <= len(1) {
        k += 1;
    }
    while k > 0 && alpha * len(k) * len(k) > len(1) {
        k -= 1;
    }
    k as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_len("7/2").unwrap(), frac(7, 2));
        assert_eq!(parse_len("3").unwrap(), len(3));
        assert_eq!(parse_len("0.25").unwrap(), frac(1, 4));
        assert_eq!(parse_len("-1.5").unwrap(), frac(-3, 2));
        assert_eq!(format_len(frac(6, 4)), "3/2");
        assert_eq!(format_len(len(5)), "5");
        assert!(parse_len("x").is_err());
        assert!(parse_len("1/0").is_err());
    }

    #[test]
    fn base_level_thresholds() {
        assert_eq!(base_level(len(1)), 1); // 1*1 <= 1 < 1*4
        assert_eq!(base_level(len(2)), 0); // 2*1 > 1
        assert_eq!(base_level(frac(1, 4)), 2); // 4/4 = 1 <= 1, 9/4 > 1
        assert_eq!(base_level(frac(1, 16)), 4);
        assert_eq!(base_level(frac(1, 17)), 4); // 16/17 <= 1, 25/17 > 1
    }

    #[test]
    fn isqrt_small() {
        for n in 0..200i64 {
            let k = isqrt(n);
            assert!(k * k <= n && (k + 1) * (k + 1) > n, "n={n} k={k}");
        }
    }
}
