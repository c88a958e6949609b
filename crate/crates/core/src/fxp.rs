//! Signed Q3.29 fixed point, bit-exact with the accelerator datapath.
//!
//! Three integer bits (sign included) and 29 fraction bits in an `i32`.
//! Addition wraps like a plain hardware adder and multiplication truncates
//! toward negative infinity after a 64-bit product.

use std::fmt;
use std::ops::{Add, Mul, Neg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FRAC_BITS: u32 = 29;
const SCALE: f64 = (1u64 << FRAC_BITS) as f64;

/// Q3.29 scalar. `raw * 2^-29` is the represented value.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fx32(i32);

impl Fx32 {
    pub const ZERO: Fx32 = Fx32(0);
    pub const ONE: Fx32 = Fx32(1 << FRAC_BITS);
    pub const NEG_ONE: Fx32 = Fx32(-(1 << FRAC_BITS));
    pub const MIN: Fx32 = Fx32(i32::MIN);
    pub const MAX: Fx32 = Fx32(i32::MAX);
    /// Smallest positive step, 2^-29.
    pub const EPSILON: Fx32 = Fx32(1);

    pub const fn from_raw(raw: i32) -> Self {
        Fx32(raw)
    }

    pub const fn raw(self) -> i32 {
        self.0
    }

    pub const fn to_bits(self) -> u32 {
        self.0 as u32
    }

    /// Round-to-nearest-even encode of a real in `[-4.0, 4.0)`.
    pub fn encode(x: f64) -> Result<Self> {
        if !x.is_finite() || !(-4.0..4.0).contains(&x) {
            return Err(Error::Range { value: x });
        }
        // x * 2^29 is exact in binary floating point; only the rounding step loses bits.
        let scaled = (x * SCALE).round_ties_even();
        if scaled > i32::MAX as f64 {
            return Err(Error::Range { value: x });
        }
        Ok(Fx32(scaled as i32))
    }

    /// Exact encode of a decimal literal such as `"0.15"` or `"-1.25"`.
    ///
    /// Rounds the exact rational value half-to-even, so the result does not
    /// depend on the binary approximation of the literal.
    pub fn from_decimal_str(s: &str) -> Result<Self> {
        let bad = || Error::Decimal(s.to_string());
        let t = s.trim();
        let (negative, body) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let frac_part = frac_part.trim_end_matches('0');
        let int_part = int_part.trim_start_matches('0');
        if int_part.len() > 1 {
            return Err(Error::Range {
                value: t.parse().unwrap_or(f64::NAN),
            });
        }
        if frac_part.len() > 29 {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: u128 = if digits.is_empty() {
            0
        } else {
            digits.parse().map_err(|_| bad())?
        };
        let denom = 10u128.pow(frac_part.len() as u32);
        let scaled = numer << FRAC_BITS;
        let (q, r) = (scaled / denom, scaled % denom);
        let round_up = match (2 * r).cmp(&denom) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => q & 1 == 1,
            std::cmp::Ordering::Less => false,
        };
        let magnitude = q + round_up as u128;
        let raw = if negative {
            -(magnitude as i128)
        } else {
            magnitude as i128
        };
        let value = raw as f64 / SCALE;
        i32::try_from(raw).map(Fx32).map_err(|_| Error::Range { value })
    }

    /// Exact decimal expansion of the value; parses back to the same raw.
    pub fn to_decimal_string(self) -> String {
        let magnitude = (self.0 as i64).unsigned_abs();
        let int = magnitude >> FRAC_BITS;
        let frac = (magnitude & ((1 << FRAC_BITS) - 1)) as u128 * 5u128.pow(FRAC_BITS);
        let sign = if self.0 < 0 { "-" } else { "" };
        if frac == 0 {
            return format!("{sign}{int}");
        }
        let digits = format!("{frac:029}");
        format!("{sign}{int}.{}", digits.trim_end_matches('0'))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE
    }

    /// Two's-complement add that also reports whether the sum wrapped.
    pub const fn overflowing_add(self, rhs: Fx32) -> (Fx32, bool) {
        let (raw, wrapped) = self.0.overflowing_add(rhs.0);
        (Fx32(raw), wrapped)
    }

    /// Three-bit threshold comparator: true iff the value is at least 1.0.
    ///
    /// Bit 31 set means negative; otherwise bit 30 or bit 29 set means the
    /// integer part is non-zero.
    pub const fn spike_check(self) -> bool {
        let bits = self.to_bits();
        bits & 0x8000_0000 == 0 && bits & 0x6000_0000 != 0
    }

    /// Subtract the 1.0 threshold after a spike.
    pub const fn soft_reset(self) -> Fx32 {
        Fx32(self.0.wrapping_sub(Self::ONE.0))
    }
}

impl Add for Fx32 {
    type Output = Fx32;

    /// Wrapping add.
    fn add(self, rhs: Fx32) -> Fx32 {
        Fx32(self.0.wrapping_add(rhs.0))
    }
}

impl Mul for Fx32 {
    type Output = Fx32;

    /// 64-bit product, arithmetic shift right by 29, low 32 bits kept.
    fn mul(self, rhs: Fx32) -> Fx32 {
        Fx32(((self.0 as i64 * rhs.0 as i64) >> FRAC_BITS) as i32)
    }
}

impl Neg for Fx32 {
    type Output = Fx32;

    fn neg(self) -> Fx32 {
        Fx32(self.0.wrapping_neg())
    }
}

impl fmt::Debug for Fx32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fx32({} = {:#010x})", self.to_f64(), self.to_bits())
    }
}

impl fmt::Display for Fx32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f64(), f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(x: f64) -> Fx32 {
        Fx32::encode(x).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(fx(1.0).raw(), 0x2000_0000);
        assert_eq!(fx(0.0).raw(), 0);
        // round(0.15 * 2^29) = round(80530636.8)
        assert_eq!(fx(0.15).raw(), 80_530_637);
        assert_eq!(fx(-4.0).raw(), i32::MIN);
        assert_eq!(fx(4.0 - 1.0 / SCALE), Fx32::MAX);
    }

    #[test]
    fn encode_rejects_out_of_range() {
        for x in [4.0, -4.0 - 1e-9, 17.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(Fx32::encode(x), Err(Error::Range { .. })), "{x}");
        }
        // Rounds up to exactly 4.0, which does not fit.
        assert!(Fx32::encode(4.0 - 1.0 / (4.0 * SCALE)).is_err());
    }

    #[test]
    fn encode_rounds_half_to_even() {
        let half = 0.5 / SCALE;
        assert_eq!(fx(half).raw(), 0);
        assert_eq!(fx(3.0 * half).raw(), 2);
        assert_eq!(fx(5.0 * half).raw(), 2);
        assert_eq!(fx(-3.0 * half).raw(), -2);
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(Fx32::from_decimal_str("0.15").unwrap().raw(), 80_530_637);
        assert_eq!(Fx32::from_decimal_str("1").unwrap(), Fx32::ONE);
        assert_eq!(Fx32::from_decimal_str("-1.0").unwrap(), Fx32::NEG_ONE);
        assert_eq!(Fx32::from_decimal_str(".5").unwrap(), fx(0.5));
        assert_eq!(Fx32::from_decimal_str("0.8").unwrap(), fx(0.8));
        assert_eq!(Fx32::from_decimal_str("-4").unwrap(), Fx32::MIN);
        assert!(Fx32::from_decimal_str("4").is_err());
        assert!(Fx32::from_decimal_str("0.1.2").is_err());
        assert!(Fx32::from_decimal_str("").is_err());
        assert!(Fx32::from_decimal_str("1e3").is_err());
        assert!(matches!(Fx32::from_decimal_str("12.5"), Err(Error::Range { .. })));
    }

    #[test]
    fn decimal_string_round_trips() {
        for raw in [0, 1, -1, 80_530_637, i32::MIN, i32::MAX, 0x2000_0000, -0x1234_5678] {
            let x = Fx32::from_raw(raw);
            let s = x.to_decimal_string();
            assert_eq!(Fx32::from_decimal_str(&s).unwrap(), x, "{s}");
        }
        assert_eq!(Fx32::ONE.to_decimal_string(), "1");
        assert_eq!(Fx32::encode(-0.75).unwrap().to_decimal_string(), "-0.75");
    }

    #[test]
    fn add_examples() {
        assert_eq!(fx(1.0) + fx(-1.0), Fx32::ZERO);
        assert_eq!((fx(0.5) + fx(0.25)).raw(), 0x1800_0000);
        let (sum, wrapped) = Fx32::MAX.overflowing_add(fx(0.5));
        assert!(wrapped);
        assert!(sum.raw() < 0);
        assert_eq!(sum.raw(), (i32::MAX as i64 + 0x1000_0000 - (1i64 << 32)) as i32);
        assert!(!fx(1.0).overflowing_add(fx(2.0)).1);
    }

    #[test]
    fn mul_examples() {
        assert_eq!(fx(0.5) * fx(0.5), fx(0.25));
        let b = fx(0.15);
        let x = fx(0.8);
        let oracle = ((80_530_637i64 * x.raw() as i64) >> 29) as i32;
        assert_eq!((b * x).raw(), oracle);
        assert!(((b * x).to_f64() - 0.12).abs() <= 2f64.powi(-28));
        // truncation is toward negative infinity
        assert_eq!((Fx32::from_raw(-1) * fx(0.5)).raw(), -1);
        assert_eq!((Fx32::from_raw(1) * fx(0.5)).raw(), 0);
    }

    #[test]
    fn spike_check_examples() {
        assert!(Fx32::from_raw(0x2000_0000).spike_check());
        assert!(!Fx32::from_raw(0x1FFF_FFFF).spike_check());
        assert!(!Fx32::from_raw(-1).spike_check());
        assert!(Fx32::from_raw(0x4000_0000).spike_check());
        assert!(Fx32::MAX.spike_check());
        assert!(!Fx32::MIN.spike_check());
    }

    #[test]
    fn soft_reset_examples() {
        assert_eq!(fx(1.0).soft_reset(), Fx32::ZERO);
        assert_eq!(fx(1.5).soft_reset(), fx(0.5));
        let twice = fx(2.0).soft_reset();
        assert_eq!(twice, fx(1.0));
        assert!(twice.spike_check());
    }
}
