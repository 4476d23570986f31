//! Exact scalars: rationals and the cyclotomic field `Q(xi_p)`.
//!
//! Elements of `Q(xi_p)` are stored in the power basis `1, xi, ..., xi^(p-2)`
//! reduced modulo the cyclotomic polynomial `1 + x + ... + x^(p-1)`. For
//! `p = 2` the field collapses to `Q` with `xi = -1`.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, One, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Formats a rational as `a` or `a/b`.
pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational `{s}`"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::DivisionByZero);
            }
            Ok(Rat::new(n, d))
        }
        None => Ok(Rat::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

pub fn is_prime(p: u32) -> bool {
    p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// Element of `Q(xi_p)` in canonical reduced form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cyclo {
    p: u32,
    coeffs: Vec<Rat>,
}

impl Cyclo {
    pub fn zero(p: u32) -> Self {
        debug_assert!(is_prime(p));
        Cyclo { p, coeffs: vec![Rat::zero(); (p - 1) as usize] }
    }

    pub fn one(p: u32) -> Self {
        Self::from_rat(p, Rat::one())
    }

    pub fn from_rat(p: u32, r: Rat) -> Self {
        let mut c = Self::zero(p);
        c.coeffs[0] = r;
        c
    }

    pub fn from_int(p: u32, n: i64) -> Self {
        Self::from_rat(p, rat_int(n))
    }

    /// Builds an element from power-basis coefficients of any length,
    /// reducing with `xi^p = 1` and the cyclotomic relation.
    pub fn from_coeffs(p: u32, raw: Vec<Rat>) -> Self {
        let pu = p as usize;
        let mut folded = vec![Rat::zero(); pu];
        for (k, c) in raw.into_iter().enumerate() {
            folded[k % pu] += c;
        }
        let top = folded.pop().unwrap();
        if !top.is_zero() {
            for c in folded.iter_mut() {
                *c -= &top;
            }
        }
        Cyclo { p, coeffs: folded }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    /// `xi^k` for any integer `k`.
    pub fn xi_pow(p: u32, k: i64) -> Self {
        let k = k.rem_euclid(p as i64) as usize;
        let mut raw = vec![Rat::zero(); p as usize];
        raw[k] = Rat::one();
        Self::from_coeffs(p, raw)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    /// Returns the rational value when the element lies in `Q`.
    pub fn as_rational(&self) -> Option<Rat> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert_eq!(self.p, o.p);
        Cyclo { p: self.p, coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        debug_assert_eq!(self.p, o.p);
        Cyclo { p: self.p, coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect() }
    }

    pub fn neg(&self) -> Self {
        Cyclo { p: self.p, coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        debug_assert_eq!(self.p, o.p);
        if self.p == 2 {
            return Cyclo { p: 2, coeffs: vec![&self.coeffs[0] * &o.coeffs[0]] };
        }
        let n = self.coeffs.len();
        let mut raw = vec![Rat::zero(); 2 * n - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    raw[i + j] += a * b;
                }
            }
        }
        Self::from_coeffs(self.p, raw)
    }

    pub fn mul_rat(&self, r: &Rat) -> Self {
        Cyclo { p: self.p, coeffs: self.coeffs.iter().map(|a| a * r).collect() }
    }

    /// Image under the Galois automorphism `xi -> xi^k`.
    pub fn galois(&self, k: i64) -> Self {
        let mut acc = Self::zero(self.p);
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                acc = acc.add(&Self::xi_pow(self.p, k * i as i64).mul_rat(c));
            }
        }
        acc
    }

    /// Field norm down to `Q`.
    pub fn norm(&self) -> Rat {
        let mut prod = self.clone();
        for k in 2..self.p as i64 {
            prod = prod.mul(&self.galois(k));
        }
        prod.as_rational().expect("norm of a cyclotomic element is rational")
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let mut others = Self::one(self.p);
        for k in 2..self.p as i64 {
            others = others.mul(&self.galois(k));
        }
        let n = self.mul(&others).as_rational().expect("norm is rational");
        Ok(others.mul_rat(&n.recip()))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.p);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn parse(p: u32, s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty cyclotomic literal".into()));
        }
        let mut raw = vec![Rat::zero(); p as usize];
        for term in s.split(" + ") {
            let term = term.trim();
            let (coef, power) = match term.split_once("*x") {
                Some((c, rest)) => {
                    let k = match rest.strip_prefix('^') {
                        Some(k) => k.parse::<usize>().map_err(|_| Error::Parse(format!("bad power in `{term}`")))?,
                        None if rest.is_empty() => 1,
                        None => return Err(Error::Parse(format!("bad term `{term}`"))),
                    };
                    (parse_rat(c)?, k)
                }
                None if term == "x" => (Rat::one(), 1),
                None => (parse_rat(term)?, 0),
            };
            raw[power % p as usize] += coef;
        }
        Ok(Self::from_coeffs(p, raw))
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| match k {
                0 => fmt_rat(c),
                1 => format!("{}*x", fmt_rat(c)),
                _ => format!("{}*x^{k}", fmt_rat(c)),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyclo<{}>({})", self.p, self)
    }
}

/// Uniform interface for coefficient rings of windowed series: exact
/// scalars and truncated jet polynomials. Constructors take `self` as a
/// template so context (prime, jet ring) carries over.
pub trait Coeff: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero_like(&self) -> Self;
    fn constant_like(&self, c: &Cyclo) -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn negated(&self) -> Self;
    fn scaled(&self, c: &Cyclo) -> Self;
    /// Multiplicative inverse when the element is a unit.
    fn try_inv(&self) -> Result<Self>;
    fn prime(&self) -> u32;

    fn one_like(&self) -> Self {
        self.constant_like(&Cyclo::one(self.prime()))
    }
}

impl Coeff for Cyclo {
    fn zero_like(&self) -> Self {
        Cyclo::zero(self.p)
    }
    fn constant_like(&self, c: &Cyclo) -> Self {
        c.clone()
    }
    fn is_zero(&self) -> bool {
        Cyclo::is_zero(self)
    }
    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn minus(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn times(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn negated(&self) -> Self {
        self.neg()
    }
    fn scaled(&self, c: &Cyclo) -> Self {
        self.mul(c)
    }
    fn try_inv(&self) -> Result<Self> {
        self.inv()
    }
    fn prime(&self) -> u32 {
        self.p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xi(p: u32) -> Cyclo {
        Cyclo::xi_pow(p, 1)
    }

    #[test]
    fn xi_times_xi_squared_is_one() {
        assert!(xi(3).mul(&Cyclo::xi_pow(3, 2)).is_one());
    }

    #[test]
    fn one_plus_xi_times_one_plus_xi_squared() {
        let a = Cyclo::one(3).add(&xi(3));
        let b = Cyclo::one(3).add(&Cyclo::xi_pow(3, 2));
        assert!(a.mul(&b).is_one());
    }

    #[test]
    fn inverse_of_xi_p5() {
        assert_eq!(xi(5).inv().unwrap(), Cyclo::xi_pow(5, 4));
    }

    #[test]
    fn inverse_of_zero_fails() {
        assert!(matches!(Cyclo::zero(7).inv(), Err(Error::DivisionByZero)));
    }

    #[test]
    fn rationality() {
        let s = Cyclo::one(3).add(&xi(3)).add(&Cyclo::xi_pow(3, 2));
        assert_eq!(s.as_rational(), Some(Rat::zero()));
        assert_eq!(xi(3).as_rational(), None);
        let r = Cyclo::from_rat(2, rat(-7, 3));
        assert_eq!(r.as_rational(), Some(rat(-7, 3)));
        assert_eq!(xi(2), Cyclo::from_int(2, -1));
    }

    #[test]
    fn root_product_identity() {
        for p in [2u32, 3, 5, 7] {
            let mut prod = Cyclo::one(p);
            for i in 1..p as i64 {
                prod = prod.mul(&Cyclo::one(p).sub(&Cyclo::xi_pow(p, i)));
            }
            assert_eq!(prod, Cyclo::from_int(p, p as i64), "p = {p}");
        }
    }

    #[test]
    fn character_sums() {
        for p in [2u32, 3, 5, 7] {
            for j in -20i64..=20 {
                let mut s = Cyclo::zero(p);
                for i in 0..p as i64 {
                    s = s.add(&Cyclo::xi_pow(p, i * j));
                }
                let want = if j.rem_euclid(p as i64) == 0 { p as i64 } else { 0 };
                assert_eq!(s, Cyclo::from_int(p, want));
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let a = Cyclo::from_coeffs(5, vec![rat(1, 2), rat(0, 1), rat(-3, 1), rat(7, 4)]);
        let s = a.to_string();
        assert_eq!(s, "1/2 + -3*x^2 + 7/4*x^3");
        assert_eq!(Cyclo::parse(5, &s).unwrap(), a);
        assert_eq!(Cyclo::parse(3, "x").unwrap(), xi(3));
        assert!(Cyclo::parse(3, "1/0").is_err());
    }

    #[test]
    fn norms() {
        assert_eq!(xi(5).norm(), rat(1, 1));
        assert_eq!(Cyclo::one(3).sub(&xi(3)).norm(), rat(3, 1));
    }
}
