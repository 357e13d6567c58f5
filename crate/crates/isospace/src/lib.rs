//! Exact analysis of finite games on isomorphically constrained probability
//! spaces.
//!
//! A constraint on a probability space can be read two ways. As a *limit*,
//! it selects the subset of distributions satisfying it: values of payoffs
//! and information measures survive, but the ambient gradients do not mean
//! anything on the subset. As an *isomorphism*, it produces a new, smaller
//! parameter space in its own right, with its own tangent directions — and
//! gradients, Fisher information, and equilibrium analysis computed there
//! genuinely differ from limits of their unconstrained counterparts. This
//! crate implements the second reading, exactly.
//!
//! The pieces:
//!
//! - [`poly`]: rational-coefficient polynomials over move indicators and
//!   free parameters — the carrier for payoffs, probabilities, expectations
//!   and their exact gradients.
//! - [`probspace`]: factorised finite probability spaces, constraint sets,
//!   and resolution into reduced parameter spaces.
//! - [`infomeasures`]: entropy, mutual information, Fisher information, and
//!   closed-form maximum-likelihood estimation on resolved spaces.
//! - [`corrgeom`]: correlation coefficients of binary pairs, the r± surfaces
//!   realising a prescribed correlation, and their permissible regions.
//! - [`gamemodel`]: game definitions (moves, observation structure,
//!   payoffs), behavioural spaces derived from them, and expected payoffs.
//! - [`solver`]: equilibrium computation on constrained spaces, cross-space
//!   comparison tables, objective maximisation, and verification suites.
//! - [`catalog`]: the canonical games and space families the binary
//!   analyses, tables, and regression tests are built on.

pub mod catalog;
pub mod corrgeom;
mod error;
pub mod gamemodel;
pub mod infomeasures;
pub mod poly;
pub mod probspace;
pub mod solver;

pub use error::Error;

/// Arbitrary-precision rational — the scalar type for every exact
/// computation in the crate.
pub type Rat = num_rational::BigRational;

/// `n / d` as an exact rational.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

/// An integer as an exact rational.
pub fn rint(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// Nearest-float conversion (used at the boundary to numeric code).
pub fn rat_to_f64(x: &Rat) -> f64 {
    num_traits::ToPrimitive::to_f64(x).expect("rational representable as f64")
}

/// Parse an exact rational from an integer (`3`), fraction (`-2/7`), or
/// decimal (`0.25`, `1e-3`) literal. Decimals are read exactly: `0.1` is
/// 1/10, not the nearest binary float.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    use num_bigint::BigInt;
    use num_traits::Zero;
    let bad = || Error::invalid(format!("cannot parse {s:?} as a rational"));
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rat::new(n, d));
    }
    if let Ok(n) = t.parse::<BigInt>() {
        return Ok(Rat::from_integer(n));
    }
    let (mant, exp) = match t.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let neg = mant.starts_with('-');
    let mant = mant.trim_start_matches(['+', '-']);
    let (int_part, frac_part) = match mant.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mant, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let mut r = Rat::from_integer(n);
    let ten = rint(10);
    let shift = exp - frac_part.len() as i32;
    for _ in 0..shift.abs() {
        if shift > 0 {
            r *= &ten;
        } else {
            r /= &ten;
        }
    }
    if neg {
        r = -r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals_parse_exactly() {
        assert_eq!(parse_rat("3").unwrap(), rint(3));
        assert_eq!(parse_rat("-2/7").unwrap(), rat(-2, 7));
        assert_eq!(parse_rat("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_rat("1.0").unwrap(), rint(1));
        assert_eq!(parse_rat("2.5e-3").unwrap(), rat(1, 400));
        assert_eq!(parse_rat("-0.75").unwrap(), rat(-3, 4));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("abc").is_err());
    }
}
