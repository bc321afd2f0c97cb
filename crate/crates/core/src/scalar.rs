//! Coefficient scalars.
//!
//! All combinatorial structure (coproducts, antipodes, renormalisation
//! tables) lives over exact rationals [`Q`]. Grid paths are generic in the
//! scalar so the same code runs in exact mode (polynomial drivers with
//! rational coefficients) and float mode (sampled drivers).

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

/// Exact rational coefficients.
pub type Q = BigRational;

/// p/d as a [`Q`].
pub fn q(p: i64, d: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(d))
}

/// Integer as a [`Q`].
pub fn q_int(p: i64) -> Q {
    Q::from(BigInt::from(p))
}

/// Parses "p", "p/q", or a plain decimal like "0.24" into an exact rational.
pub fn q_parse(text: &str) -> Result<Q> {
    let s = text.trim();
    let bad = |m: &str| Error::Parse { offset: 0, message: format!("{m}: {s:?}") };
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad("bad numerator"))?;
        let d: BigInt = den.trim().parse().map_err(|_| bad("bad denominator"))?;
        if d.is_zero() {
            return Err(bad("zero denominator"));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let sign = if int.trim_start().starts_with('-') { -1 } else { 1 };
        let i: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad("bad integer part"))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("bad fractional part"));
        }
        let f: BigInt = frac.parse().map_err(|_| bad("bad fractional part"))?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(Q::from(i) + Q::new(f * sign, scale));
    }
    let n: BigInt = s.parse().map_err(|_| bad("bad integer"))?;
    Ok(Q::from(n))
}

/// Renders a rational as "p" or "p/q".
pub fn q_render(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Operations every coefficient field used by the grid-path code must
/// provide. `EXACT` distinguishes fields where checks must come out exactly
/// zero from floating point, where a tolerance applies.
pub trait Scalar: Clone + PartialEq + std::fmt::Debug + 'static {
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn from_q(r: &Q) -> Self;
    fn to_f64(&self) -> f64;
    /// Deterministic textual form used in serialized outputs.
    fn render(&self) -> String;
    /// Inverse of [`render`](Scalar::render); also accepts the other mode's
    /// form so exact dumps load in float mode.
    fn parse(text: &str) -> Result<Self>;
}

impl Scalar for Q {
    const EXACT: bool = true;

    fn zero() -> Self {
        <Q as Zero>::zero()
    }
    fn one() -> Self {
        <Q as One>::one()
    }
    fn is_zero(&self) -> bool {
        <Q as Zero>::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn from_q(r: &Q) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        // Falls back to a quotient of f64s when the parts overflow, which is
        // accurate enough for reporting.
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
    fn render(&self) -> String {
        q_render(self)
    }
    fn parse(text: &str) -> Result<Self> {
        q_parse(text)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn from_q(r: &Q) -> Self {
        Scalar::to_f64(r)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn render(&self) -> String {
        // {:?} is the shortest representation that round-trips.
        format!("{self:?}")
    }
    fn parse(text: &str) -> Result<Self> {
        let s = text.trim();
        if let Ok(v) = s.parse::<f64>() {
            return Ok(v);
        }
        q_parse(s).map(|r| Scalar::to_f64(&r))
    }
}

/// Magnitude used when reporting defects generically.
pub fn abs_f64<S: Scalar>(x: &S) -> f64 {
    x.to_f64().abs()
}

/// |x| as a rational, for exact comparisons.
pub fn q_abs(x: &Q) -> Q {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integer_fraction_and_decimal_forms() {
        assert_eq!(q_parse("3").unwrap(), q_int(3));
        assert_eq!(q_parse("-7/2").unwrap(), q(-7, 2));
        assert_eq!(q_parse("0.24").unwrap(), q(6, 25));
        assert_eq!(q_parse("-0.5").unwrap(), q(-1, 2));
        assert!(q_parse("1/0").is_err());
        assert!(q_parse("x").is_err());
    }

    #[test]
    fn renders_without_unit_denominator() {
        assert_eq!(q_render(&q(4, 2)), "2");
        assert_eq!(q_render(&q(-6, 25)), "-6/25");
    }

    #[test]
    fn float_render_round_trips() {
        let x = 0.1f64 + 0.2f64;
        let s = Scalar::render(&x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }
}
