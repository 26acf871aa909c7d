//! Exact rational scalars and small helpers used by the exact-arithmetic
//! layers (stoichiometry, elementary vectors, certificates).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Rat = BigRational;

/// Rational from a machine integer.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Rational n/d.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Parses an unsigned rational literal: "2", "3/2".
pub fn parse_rat(text: &str) -> Option<Rat> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Rat::new(n, d))
    } else {
        let n: BigInt = text.parse().ok()?;
        Some(Rat::from_integer(n))
    }
}

/// Nearest-value conversion to f64.
pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational from a finite f64.
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// Formats a rational as "n" or "n/d".
pub fn rat_to_string(x: &Rat) -> String {
    if x.denom() == &BigInt::from(1) {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Rescales a rational vector to integral coprime entries with the first
/// nonzero entry positive. The zero vector is returned unchanged.
pub fn canonicalize(v: &[Rat]) -> Vec<Rat> {
    let mut den = BigInt::from(1);
    for x in v {
        den = den.lcm(x.denom());
    }
    let mut ints: Vec<BigInt> = v.iter().map(|x| (x * Rat::from_integer(den.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(&x.abs());
    }
    if !g.is_zero() {
        for x in &mut ints {
            *x = &*x / &g;
        }
    }
    if let Some(first) = ints.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in &mut ints {
                *x = -&*x;
            }
        }
    }
    ints.into_iter().map(Rat::from_integer).collect()
}

/// Sign of a rational as -1, 0, or 1.
pub fn sign(x: &Rat) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integers_and_fractions() {
        assert_eq!(parse_rat("2").unwrap(), rat(2));
        assert_eq!(parse_rat("3/2").unwrap(), ratio(3, 2));
        assert_eq!(parse_rat(" 10/4 ").unwrap(), ratio(5, 2));
        assert!(parse_rat("1/0").is_none());
        assert!(parse_rat("x").is_none());
        assert!(parse_rat("1.5").is_none());
    }

    #[test]
    fn canonical_scaling() {
        let v = vec![ratio(-1, 2), rat(1), ratio(-3, 2)];
        let c = canonicalize(&v);
        assert_eq!(c, vec![rat(1), rat(-2), rat(3)]);

        let z = vec![rat(0), rat(0)];
        assert_eq!(canonicalize(&z), z);
    }

    #[test]
    fn formatting() {
        assert_eq!(rat_to_string(&ratio(3, 2)), "3/2");
        assert_eq!(rat_to_string(&rat(-7)), "-7");
    }
}
