//! Exact Grassmann algebra over the rationals.
//!
//! An element is a finite sum of monomials `c · e_{i1} e_{i2} … e_{ik}` with
//! `i1 < i2 < … < ik`. Monomials are stored as bit masks, so a generator set
//! holds at most [`MAX_GENERATORS`] odd generators.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub const MAX_GENERATORS: usize = 63;

pub fn rat(numer: i64, denom: i64) -> Rational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    BigRational::from_integer(BigInt::from(value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_len(len: u32) -> Parity {
        if len % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn add(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Sign of `e_A · e_B` after sorting into increasing order, or `None` when a
/// generator repeats.
fn blade_sign(a: u64, b: u64) -> Option<bool> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> j).count_ones();
        rest &= rest - 1;
    }
    Some(swaps % 2 == 1)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Grassmann {
    num_generators: usize,
    terms: BTreeMap<u64, Rational>,
}

impl Grassmann {
    pub fn zero(num_generators: usize) -> Self {
        Grassmann {
            num_generators,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(num_generators: usize) -> Self {
        Self::scalar(num_generators, Rational::one())
    }

    pub fn scalar(num_generators: usize, value: Rational) -> Self {
        let mut out = Self::zero(num_generators);
        if !value.is_zero() {
            out.terms.insert(0, value);
        }
        out
    }

    pub fn from_int(num_generators: usize, value: i64) -> Self {
        Self::scalar(num_generators, int(value))
    }

    /// The odd generator `e_index`.
    pub fn generator(num_generators: usize, index: usize) -> Result<Self> {
        Self::monomial(num_generators, Rational::one(), &[index])
    }

    /// `coeff · e_{gens[0]} e_{gens[1]} …`, with `gens` in any order; the sign
    /// of the sorting permutation is applied and repeated generators give zero.
    pub fn monomial(num_generators: usize, coeff: Rational, gens: &[usize]) -> Result<Self> {
        if num_generators > MAX_GENERATORS {
            return Err(Error::TooManyGenerators(num_generators));
        }
        let mut out = Self::scalar(num_generators, coeff);
        for &g in gens {
            if g >= num_generators {
                return Err(Error::GeneratorOutOfRange {
                    index: g,
                    num_generators,
                });
            }
            out = out.mul_unchecked(&Grassmann {
                num_generators,
                terms: BTreeMap::from([(1u64 << g, Rational::one())]),
            });
        }
        Ok(out)
    }

    /// Builds an element from `(strictly increasing gens, coeff)` pairs.
    pub fn from_terms<I>(num_generators: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, Rational)>,
    {
        if num_generators > MAX_GENERATORS {
            return Err(Error::TooManyGenerators(num_generators));
        }
        let mut out = Self::zero(num_generators);
        for (gens, coeff) in terms {
            if gens.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Malformed(format!(
                    "multi-index {gens:?} is not strictly increasing"
                )));
            }
            let mut mask = 0u64;
            for &g in &gens {
                if g >= num_generators {
                    return Err(Error::GeneratorOutOfRange {
                        index: g,
                        num_generators,
                    });
                }
                mask |= 1 << g;
            }
            out.add_term(mask, coeff);
        }
        Ok(out)
    }

    fn add_term(&mut self, mask: u64, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(mask).or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&mask);
        }
    }

    pub fn num_generators(&self) -> usize {
        self.num_generators
    }

    /// `(multi-index, coefficient)` pairs in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, &Rational)> + '_ {
        self.terms.iter().map(|(&mask, c)| (mask_to_gens(mask), c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&0).is_some_and(|c| c.is_one())
    }

    /// Coefficient of the empty monomial.
    pub fn body(&self) -> Rational {
        self.terms.get(&0).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn soul(&self) -> Self {
        let mut out = self.clone();
        out.terms.remove(&0);
        out
    }

    pub fn is_scalar(&self) -> bool {
        self.terms.keys().all(|&m| m == 0)
    }

    pub fn parity(&self) -> Result<Parity> {
        let mut seen: Option<Parity> = None;
        for &mask in self.terms.keys() {
            let p = Parity::of_len(mask.count_ones());
            match seen {
                None => seen = Some(p),
                Some(q) if q != p => return Err(Error::MixedParity),
                _ => {}
            }
        }
        Ok(seen.unwrap_or(Parity::Even))
    }

    /// True when every term has parity `p`; zero has both parities.
    pub fn has_parity(&self, p: Parity) -> bool {
        self.terms
            .keys()
            .all(|m| Parity::of_len(m.count_ones()) == p)
    }

    /// Grade involution: negates the odd part.
    pub fn involution(&self) -> Self {
        let mut out = self.clone();
        for (mask, c) in out.terms.iter_mut() {
            if mask.count_ones() % 2 == 1 {
                *c = -c.clone();
            }
        }
        out
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        if factor.is_zero() {
            return Self::zero(self.num_generators);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= factor;
        }
        out
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.num_generators == other.num_generators {
            Ok(())
        } else {
            Err(Error::GeneratorMismatch {
                left: self.num_generators,
                right: other.num_generators,
            })
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (&m, c) in &other.terms {
            out.add_term(m, c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (&m, c) in &other.terms {
            out.add_term(m, -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.num_generators);
        for (&ma, ca) in &self.terms {
            for (&mb, cb) in &other.terms {
                if let Some(negative) = blade_sign(ma, mb) {
                    let c = ca * cb;
                    out.add_term(ma | mb, if negative { -c } else { c });
                }
            }
        }
        out
    }

    /// Two-sided inverse via `body⁻¹ · Σ (−n)^k` where `self = body · (1 + n)`.
    pub fn invert(&self) -> Result<Self> {
        let body = self.body();
        if body.is_zero() {
            return Err(Error::NotInvertible);
        }
        let inv_body = body.recip();
        let nil = self.soul().scale(&inv_body);
        let mut sum = Self::one(self.num_generators);
        let mut power = Self::one(self.num_generators);
        loop {
            power = -power.mul_unchecked(&nil);
            if power.is_zero() {
                break;
            }
            sum = sum.checked_add(&power)?;
        }
        Ok(sum.scale(&inv_body))
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut out = Self::one(self.num_generators);
        for _ in 0..exp {
            out = out.mul_unchecked(self);
        }
        out
    }

    /// Largest monomial degree present, or `None` for zero.
    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.count_ones()).max()
    }
}

fn mask_to_gens(mut mask: u64) -> Vec<usize> {
    let mut gens = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        gens.push(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
    gens
}

impl fmt::Debug for Grassmann {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grassmann[{}]({})", self.num_generators, self)
    }
}

impl fmt::Display for Grassmann {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (&mask, c)) in self.terms.iter().enumerate() {
            let (neg, abs) = (c.is_negative(), c.abs());
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if mask == 0 {
                write!(f, "{abs}")?;
            } else {
                if !abs.is_one() {
                    write!(f, "{abs}*")?;
                }
                let names: Vec<String> = mask_to_gens(mask).iter().map(|g| format!("e{g}")).collect();
                write!(f, "{}", names.join(""))?;
            }
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&Grassmann> for &Grassmann {
            type Output = Grassmann;
            /// Panics on a generator-count mismatch; use the `checked_*` form to handle it.
            fn $method(self, rhs: &Grassmann) -> Grassmann {
                self.$checked(rhs).expect("Grassmann operands use different generator sets")
            }
        }
        impl $tr<Grassmann> for Grassmann {
            type Output = Grassmann;
            fn $method(self, rhs: Grassmann) -> Grassmann {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Grassmann> for Grassmann {
            type Output = Grassmann;
            fn $method(self, rhs: &Grassmann) -> Grassmann {
                (&self).$method(rhs)
            }
        }
        impl $tr<Grassmann> for &Grassmann {
            type Output = Grassmann;
            fn $method(self, rhs: Grassmann) -> Grassmann {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for Grassmann {
    type Output = Grassmann;
    fn neg(mut self) -> Grassmann {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Neg for &Grassmann {
    type Output = Grassmann;
    fn neg(self) -> Grassmann {
        -self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Grassmann {
        Grassmann::generator(n, i).unwrap()
    }

    #[test]
    fn sign_rule() {
        let (a1, a2) = (e(3, 1), e(3, 2));
        let a12 = Grassmann::monomial(3, int(1), &[1, 2]).unwrap();
        assert_eq!(&a1 * &a2, a12);
        assert_eq!(&a2 * &a1, -a12);
        assert!((&a1 * &a1).is_zero());
    }

    #[test]
    fn monomial_sorts_with_sign() {
        let m = Grassmann::monomial(4, int(1), &[3, 0, 2]).unwrap();
        // e3 e0 e2 = - e0 e3 e2 = e0 e2 e3
        assert_eq!(m, Grassmann::monomial(4, int(1), &[0, 2, 3]).unwrap());
        assert!(Grassmann::monomial(4, int(1), &[1, 1]).unwrap().is_zero());
    }

    #[test]
    fn nilpotent_product_cancels() {
        let n = 3;
        let a12 = &e(n, 1) * &e(n, 2);
        let one = Grassmann::one(n);
        assert!((&(&one + &a12) * &(&one - &a12)).is_one());
    }

    #[test]
    fn inverses() {
        let n = 3;
        let two = Grassmann::from_int(n, 2);
        assert_eq!(two.invert().unwrap(), Grassmann::scalar(n, rat(1, 2)));
        let a12 = &e(n, 1) * &e(n, 2);
        let x = &Grassmann::one(n) + &a12;
        assert_eq!(x.invert().unwrap(), &Grassmann::one(n) - &a12);
        assert_eq!(e(n, 1).invert(), Err(Error::NotInvertible));
        let y = &two + &a12;
        assert_eq!(y.invert().unwrap().body(), rat(1, 2));
    }

    #[test]
    fn parity_and_body() {
        let n = 3;
        let a12 = &e(n, 1) * &e(n, 2);
        let x = &Grassmann::from_int(n, 3) + &a12;
        assert_eq!(x.parity(), Ok(Parity::Even));
        assert_eq!(x.body(), int(3));
        assert_eq!(a12.body(), int(0));
        assert_eq!(e(n, 1).parity(), Ok(Parity::Odd));
        let mixed = &Grassmann::one(n) + &e(n, 1);
        assert_eq!(mixed.parity(), Err(Error::MixedParity));
    }

    #[test]
    fn mismatched_generators_rejected() {
        let a = Grassmann::one(2);
        let b = Grassmann::one(3);
        assert_eq!(
            a.checked_mul(&b),
            Err(Error::GeneratorMismatch { left: 2, right: 3 })
        );
        assert!(a.checked_add(&b).is_err());
    }

    #[test]
    fn from_terms_validates() {
        assert!(Grassmann::from_terms(3, [(vec![2, 1], int(1))]).is_err());
        assert!(Grassmann::from_terms(3, [(vec![3], int(1))]).is_err());
        let z = Grassmann::from_terms(3, [(vec![1], int(1)), (vec![1], int(-1))]).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn display() {
        let n = 3;
        let x = &Grassmann::from_int(n, 3) - &(&e(n, 0) * &e(n, 2)).scale(&rat(2, 3));
        assert_eq!(x.to_string(), "3 - 2/3*e0e2");
    }
}
