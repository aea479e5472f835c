//! Fixed-point token arithmetic.
//!
//! All $BASED and Pepecoin quantities are integer counts of 10^-9 token
//! units, so every value in the published emission and pricing tables is
//! representable exactly and golden tests never see floating-point drift.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Base units per whole token (10^-9 resolution).
pub const BASE_UNITS_PER_TOKEN: u64 = 1_000_000_000;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum TokenError {
    #[error("token amount overflow")]
    Overflow,
    #[error("token amount underflow (would be negative)")]
    Underflow,
    #[error("invalid fraction {0}: must be finite and non-negative")]
    InvalidFraction(f64),
    #[error("invalid token literal {literal:?}: {reason}")]
    InvalidLiteral { literal: String, reason: String },
    #[error("weights are all zero or empty")]
    DegenerateWeights,
}

/// An exact, non-negative quantity of tokens in base units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TokenAmount(u64);

impl TokenAmount {
    pub const ZERO: TokenAmount = TokenAmount(0);

    pub const fn from_base_units(units: u64) -> Self {
        TokenAmount(units)
    }

    /// Whole-token constructor; panics on overflow (only used with small
    /// protocol constants).
    pub const fn from_tokens(tokens: u64) -> Self {
        TokenAmount(tokens * BASE_UNITS_PER_TOKEN)
    }

    pub const fn base_units(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Value as f64 whole tokens; lossy above 2^53 base units, for
    /// reporting and weighting only.
    pub fn as_tokens_f64(self) -> f64 {
        self.0 as f64 / BASE_UNITS_PER_TOKEN as f64
    }

    pub fn checked_add(self, rhs: TokenAmount) -> Result<TokenAmount, TokenError> {
        self.0
            .checked_add(rhs.0)
            .map(TokenAmount)
            .ok_or(TokenError::Overflow)
    }

    pub fn checked_sub(self, rhs: TokenAmount) -> Result<TokenAmount, TokenError> {
        self.0
            .checked_sub(rhs.0)
            .map(TokenAmount)
            .ok_or(TokenError::Underflow)
    }

    pub fn checked_mul(self, factor: u64) -> Result<TokenAmount, TokenError> {
        self.0
            .checked_mul(factor)
            .map(TokenAmount)
            .ok_or(TokenError::Overflow)
    }

    pub fn saturating_sub(self, rhs: TokenAmount) -> TokenAmount {
        TokenAmount(self.0.saturating_sub(rhs.0))
    }

    /// floor(self * fraction), computed exactly.
    ///
    /// The f64 is decomposed into its mantissa and exponent so the product
    /// is taken in 128-bit integer arithmetic; the only rounding involved
    /// is the caller's original choice of f64 value. Accepts any finite
    /// fraction >= 0 (values above 1 are allowed, e.g. growth factors).
    pub fn mul_frac_floor(self, fraction: f64) -> Result<TokenAmount, TokenError> {
        if !fraction.is_finite() || fraction < 0.0 {
            return Err(TokenError::InvalidFraction(fraction));
        }
        if self.0 == 0 || fraction == 0.0 {
            return Ok(TokenAmount::ZERO);
        }
        let bits = fraction.to_bits();
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac_bits = bits & ((1u64 << 52) - 1);
        // fraction = mantissa * 2^exp
        let (mantissa, exp) = if exp_bits == 0 {
            (frac_bits, -1074i64)
        } else {
            (frac_bits | (1u64 << 52), exp_bits - 1075)
        };
        let product = self.0 as u128 * mantissa as u128;
        let shifted = if exp >= 0 {
            let exp = exp as u32;
            if exp >= 128 || product.leading_zeros() < exp {
                return Err(TokenError::Overflow);
            }
            product << exp
        } else {
            let shift = (-exp) as u32;
            if shift >= 128 {
                0
            } else {
                product >> shift
            }
        };
        u64::try_from(shifted)
            .map(TokenAmount)
            .map_err(|_| TokenError::Overflow)
    }

    /// floor(self * numerator / denominator) in 128-bit arithmetic.
    pub fn mul_ratio_floor(self, numerator: u64, denominator: u64) -> Result<TokenAmount, TokenError> {
        if denominator == 0 {
            return Err(TokenError::InvalidFraction(f64::INFINITY));
        }
        let value = self.0 as u128 * numerator as u128 / denominator as u128;
        u64::try_from(value).map(TokenAmount).map_err(|_| TokenError::Overflow)
    }
}

impl Add for TokenAmount {
    type Output = TokenAmount;
    fn add(self, rhs: TokenAmount) -> TokenAmount {
        TokenAmount(self.0 + rhs.0)
    }
}

impl AddAssign for TokenAmount {
    fn add_assign(&mut self, rhs: TokenAmount) {
        self.0 += rhs.0;
    }
}

impl Sub for TokenAmount {
    type Output = TokenAmount;
    fn sub(self, rhs: TokenAmount) -> TokenAmount {
        TokenAmount(self.0 - rhs.0)
    }
}

impl SubAssign for TokenAmount {
    fn sub_assign(&mut self, rhs: TokenAmount) {
        self.0 -= rhs.0;
    }
}

impl Sum for TokenAmount {
    fn sum<I: Iterator<Item = TokenAmount>>(iter: I) -> TokenAmount {
        iter.fold(TokenAmount::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Display for TokenAmount {
    /// Decimal token rendering with trailing zeros trimmed: "10", "2.5",
    /// "0.01953125".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / BASE_UNITS_PER_TOKEN;
        let frac = self.0 % BASE_UNITS_PER_TOKEN;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let digits = format!("{frac:09}");
            write!(f, "{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl FromStr for TokenAmount {
    type Err = TokenError;

    /// Parses a decimal token literal with up to nine fractional digits,
    /// exactly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| TokenError::InvalidLiteral {
            literal: s.to_string(),
            reason: reason.to_string(),
        };
        let s_trim = s.trim();
        if s_trim.is_empty() {
            return Err(bad("empty"));
        }
        let (whole_str, frac_str) = match s_trim.split_once('.') {
            Some((w, fr)) => (w, fr),
            None => (s_trim, ""),
        };
        if frac_str.len() > 9 {
            return Err(bad("more than 9 fractional digits"));
        }
        if whole_str.is_empty() && frac_str.is_empty() {
            return Err(bad("no digits"));
        }
        let whole: u64 = if whole_str.is_empty() {
            0
        } else {
            whole_str.parse().map_err(|_| bad("invalid whole part"))?
        };
        let frac: u64 = if frac_str.is_empty() {
            0
        } else {
            let padded = format!("{frac_str:0<9}");
            padded.parse().map_err(|_| bad("invalid fractional part"))?
        };
        whole
            .checked_mul(BASE_UNITS_PER_TOKEN)
            .and_then(|w| w.checked_add(frac))
            .map(TokenAmount)
            .ok_or(TokenError::Overflow)
    }
}

impl Serialize for TokenAmount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TokenAmount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = TokenAmount;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a decimal token string or non-negative integer")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<TokenAmount, E> {
                v.parse().map_err(|e| E::custom(e))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<TokenAmount, E> {
                TokenAmount::from_tokens(1)
                    .checked_mul(v)
                    .map_err(|e| E::custom(e))
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

/// Splits `total` across `weights` with floor quotas plus largest-remainder
/// correction, so the outputs always sum to `total` exactly.
///
/// Weight ties during remainder distribution resolve to the lower index.
/// Entries with zero weight receive nothing (unless every weight is zero,
/// which is an error).
pub fn apportion(total: TokenAmount, weights: &[f64]) -> Result<Vec<TokenAmount>, TokenError> {
    if weights.is_empty() {
        return Err(TokenError::DegenerateWeights);
    }
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(TokenError::InvalidFraction(w));
        }
    }
    let weight_sum: f64 = weights.iter().sum();
    if weight_sum <= 0.0 {
        return Err(TokenError::DegenerateWeights);
    }

    let mut quotas = Vec::with_capacity(weights.len());
    let mut remainders = Vec::with_capacity(weights.len());
    let total_f = total.base_units() as f64;
    for &w in weights {
        if w == 0.0 {
            quotas.push(0u64);
            remainders.push(0.0);
            continue;
        }
        let share = w / weight_sum;
        let quota = total.mul_frac_floor(share)?.base_units();
        quotas.push(quota);
        remainders.push(total_f * share - quota as f64);
    }

    let assigned: u128 = quotas.iter().map(|&q| q as u128).sum();
    let mut deficit = total.base_units() as i128 - assigned as i128;

    if deficit > 0 {
        // Hand out the leftover units to the largest fractional remainders.
        let mut order: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        order.sort_by(|&a, &b| {
            remainders[b]
                .partial_cmp(&remainders[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut cursor = 0;
        while deficit > 0 {
            quotas[order[cursor % order.len()]] += 1;
            cursor += 1;
            deficit -= 1;
        }
    } else if deficit < 0 {
        // Floating-point quota overshoot; claw back from the smallest remainders.
        let mut order: Vec<usize> = (0..weights.len()).filter(|&i| quotas[i] > 0).collect();
        order.sort_by(|&a, &b| {
            remainders[a]
                .partial_cmp(&remainders[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.cmp(&a))
        });
        let mut cursor = 0;
        while deficit < 0 && cursor < order.len() * 2 {
            let idx = order[cursor % order.len()];
            if quotas[idx] > 0 {
                quotas[idx] -= 1;
                deficit += 1;
            }
            cursor += 1;
        }
    }

    debug_assert_eq!(
        quotas.iter().map(|&q| q as u128).sum::<u128>(),
        total.base_units() as u128
    );
    Ok(quotas.into_iter().map(TokenAmount::from_base_units).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_trims_trailing_zeros() {
        assert_eq!(TokenAmount::from_tokens(10).to_string(), "10");
        assert_eq!("2.5".parse::<TokenAmount>().unwrap().to_string(), "2.5");
        assert_eq!(
            "0.01953125".parse::<TokenAmount>().unwrap().to_string(),
            "0.01953125"
        );
        assert_eq!(TokenAmount::from_base_units(1).to_string(), "0.000000001");
    }

    #[test]
    fn parse_is_exact() {
        assert_eq!(
            "0.01953125".parse::<TokenAmount>().unwrap().base_units(),
            19_531_250
        );
        assert_eq!("61593.75".parse::<TokenAmount>().unwrap().base_units(), 61_593_750_000_000);
        assert_eq!(".5".parse::<TokenAmount>().unwrap().base_units(), 500_000_000);
        assert!("1.0000000001".parse::<TokenAmount>().is_err());
        assert!("".parse::<TokenAmount>().is_err());
        assert!("-1".parse::<TokenAmount>().is_err());
        assert!("abc".parse::<TokenAmount>().is_err());
    }

    #[test]
    fn roundtrip_display_parse() {
        let mut rng = crate::util::SplitMix64::new(7);
        for _ in 0..2000 {
            let amount = TokenAmount::from_base_units(rng.next_u64() >> 4);
            let back: TokenAmount = amount.to_string().parse().unwrap();
            assert_eq!(amount, back);
        }
    }

    #[test]
    fn mul_frac_floor_matches_exact_rationals() {
        let t = TokenAmount::from_base_units(100);
        assert_eq!(t.mul_frac_floor(0.75).unwrap().base_units(), 75);
        assert_eq!(t.mul_frac_floor(0.0).unwrap().base_units(), 0);
        assert_eq!(t.mul_frac_floor(1.0).unwrap().base_units(), 100);
        // 1 base unit * 0.75 floors to zero.
        assert_eq!(
            TokenAmount::from_base_units(1).mul_frac_floor(0.75).unwrap().base_units(),
            0
        );
        // Huge amounts stay exact for dyadic fractions.
        let big = TokenAmount::from_base_units(31_536_000_000_000_000);
        assert_eq!(
            big.mul_frac_floor(1.0 / 1024.0).unwrap().base_units(),
            30_796_875_000_000
        );
        assert!(t.mul_frac_floor(-0.1).is_err());
        assert!(t.mul_frac_floor(f64::NAN).is_err());
    }

    #[test]
    fn mul_frac_floor_growth_factor() {
        let t = TokenAmount::from_tokens(10_000);
        // 10k * 0.19 (f64 value is a hair above 0.19) floors to exactly 1900.
        assert_eq!(
            t.mul_frac_floor(0.19).unwrap(),
            TokenAmount::from_tokens(1_900)
        );
        assert!(TokenAmount::from_base_units(u64::MAX)
            .mul_frac_floor(3.0)
            .is_err());
    }

    #[test]
    fn apportion_conserves_total() {
        let mut rng = crate::util::SplitMix64::new(11);
        for _ in 0..500 {
            let n = 1 + (rng.next_u64() % 12) as usize;
            let mut weights: Vec<f64> = (0..n).map(|_| rng.next_f64() * 10.0).collect();
            if weights.iter().all(|&w| w == 0.0) {
                weights[0] = 1.0;
            }
            let total = TokenAmount::from_base_units(rng.next_u64() >> 20);
            let parts = apportion(total, &weights).unwrap();
            let sum: TokenAmount = parts.iter().copied().sum();
            assert_eq!(sum, total);
            for (part, &w) in parts.iter().zip(&weights) {
                if w == 0.0 {
                    assert!(part.is_zero());
                }
            }
        }
    }

    #[test]
    fn apportion_proportional_and_ties() {
        let parts = apportion(TokenAmount::from_tokens(10), &[1.0, 3.0]).unwrap();
        assert_eq!(parts[0], "2.5".parse().unwrap());
        assert_eq!(parts[1], "7.5".parse().unwrap());
        // Remainder of 1 unit with equal weights goes to the lower index.
        let parts = apportion(TokenAmount::from_base_units(3), &[1.0, 1.0]).unwrap();
        assert_eq!(parts[0].base_units(), 2);
        assert_eq!(parts[1].base_units(), 1);
        assert!(apportion(TokenAmount::from_tokens(1), &[0.0, 0.0]).is_err());
        assert!(apportion(TokenAmount::from_tokens(1), &[]).is_err());
    }
}
