//! Polynomials in the indeterminate q with exact rational coefficients.
//!
//! Stored as a rational content times a primitive integer polynomial
//! (coefficient gcd 1, positive leading coefficient). Products of
//! primitive polynomials are primitive, so multiplication runs on plain
//! big integers with no per-coefficient normalization.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// A polynomial in q over the rationals, indexed so that `coeff(j)` is the
/// coefficient of `q^j`.
///
/// Canonical form: the zero polynomial has zero content and an empty
/// integer part; otherwise the integer part is primitive with positive
/// leading coefficient. Equality is decidable and coefficient-wise.
#[derive(Clone)]
pub struct QPoly {
    content: BigRational,
    prim: Vec<BigInt>,
}

fn vec_content(v: &[BigInt]) -> BigInt {
    let mut g = BigInt::zero();
    for c in v {
        if !c.is_zero() {
            g = num_integer::Integer::gcd(&g, c);
            if g.is_one() {
                break;
            }
        }
    }
    g
}

impl QPoly {
    fn normalized(content: BigRational, mut prim: Vec<BigInt>) -> Self {
        while prim.last().is_some_and(Zero::is_zero) {
            prim.pop();
        }
        if prim.is_empty() || content.is_zero() {
            return QPoly::zero();
        }
        let mut g = vec_content(&prim);
        if prim.last().unwrap().is_negative() {
            g = -g;
        }
        if !g.is_one() {
            for c in prim.iter_mut() {
                *c = &*c / &g;
            }
        }
        QPoly {
            content: content * BigRational::from_integer(g),
            prim,
        }
    }

    /// Builds a polynomial from rational coefficients (index j holds the
    /// coefficient of q^j), trimming trailing zeros.
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return QPoly::zero();
        }
        // common denominator, then integer normalization
        let mut denom = BigInt::one();
        for c in &coeffs {
            denom = num_integer::Integer::lcm(&denom, c.denom());
        }
        let ints: Vec<BigInt> = coeffs
            .iter()
            .map(|c| c.numer() * (&denom / c.denom()))
            .collect();
        QPoly::normalized(
            BigRational::new(BigInt::one(), denom),
            ints,
        )
    }

    pub fn zero() -> Self {
        QPoly {
            content: BigRational::zero(),
            prim: Vec::new(),
        }
    }

    pub fn one() -> Self {
        QPoly::constant(BigRational::one())
    }

    /// The indeterminate q.
    pub fn q() -> Self {
        QPoly::monomial(BigRational::one(), 1)
    }

    pub fn constant(c: BigRational) -> Self {
        if c.is_zero() {
            return QPoly::zero();
        }
        QPoly {
            content: c,
            prim: vec![BigInt::one()],
        }
    }

    /// `c * q^k`.
    pub fn monomial(c: BigRational, k: usize) -> Self {
        if c.is_zero() {
            return QPoly::zero();
        }
        let mut prim = vec![BigInt::zero(); k + 1];
        prim[k] = BigInt::one();
        QPoly { content: c, prim }
    }

    /// Convenience constructor from integer coefficients, ascending in q.
    pub fn from_integers(coeffs: &[i64]) -> Self {
        QPoly::normalized(
            BigRational::one(),
            coeffs.iter().map(|&c| BigInt::from(c)).collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.prim.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.prim.len() == 1 && self.prim[0].is_one() && self.content.is_one()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.prim.len().checked_sub(1)
    }

    /// Coefficient of q^k (zero beyond the stored length).
    pub fn coeff(&self, k: usize) -> BigRational {
        match self.prim.get(k) {
            Some(c) if !c.is_zero() => &self.content * BigRational::from_integer(c.clone()),
            _ => BigRational::zero(),
        }
    }

    /// All coefficients, ascending in q.
    pub fn coeffs(&self) -> Vec<BigRational> {
        (0..self.prim.len()).map(|k| self.coeff(k)).collect()
    }

    pub fn leading(&self) -> Option<BigRational> {
        self.prim
            .last()
            .map(|c| &self.content * BigRational::from_integer(c.clone()))
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(|c| c.is_one())
    }

    /// Scales so the leading coefficient is 1 (zero stays zero).
    pub fn make_monic(&self) -> QPoly {
        match self.prim.last() {
            None => QPoly::zero(),
            Some(lc) => QPoly {
                content: BigRational::new(BigInt::one(), lc.clone()),
                prim: self.prim.clone(),
            },
        }
    }

    pub fn scale(&self, c: &BigRational) -> QPoly {
        if c.is_zero() || self.is_zero() {
            return QPoly::zero();
        }
        QPoly {
            content: &self.content * c,
            prim: self.prim.clone(),
        }
    }

    pub fn add_ref(&self, rhs: &QPoly) -> QPoly {
        self.add_scaled(rhs, false)
    }

    pub fn sub_ref(&self, rhs: &QPoly) -> QPoly {
        self.add_scaled(rhs, true)
    }

    fn add_scaled(&self, rhs: &QPoly, negate: bool) -> QPoly {
        if self.is_zero() {
            return if negate { rhs.neg_ref() } else { rhs.clone() };
        }
        if rhs.is_zero() {
            return self.clone();
        }
        // c1 A + c2 B = g (u A + v B) with integers u, v
        let (c1, c2) = (&self.content, &rhs.content);
        let denom = c1.denom() * c2.denom();
        let n1 = c1.numer() * c2.denom();
        let n2 = c2.numer() * c1.denom();
        let g = num_integer::Integer::gcd(&n1, &n2);
        let u = &n1 / &g;
        let mut v = &n2 / &g;
        if negate {
            v = -v;
        }
        let n = self.prim.len().max(rhs.prim.len());
        let zero = BigInt::zero();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let a = self.prim.get(k).unwrap_or(&zero);
            let b = rhs.prim.get(k).unwrap_or(&zero);
            out.push(a * &u + b * &v);
        }
        QPoly::normalized(BigRational::new(g, denom), out)
    }

    pub fn mul_ref(&self, rhs: &QPoly) -> QPoly {
        if self.is_zero() || rhs.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.prim.len() + rhs.prim.len() - 1];
        for (i, a) in self.prim.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.prim.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        // the product of primitive polynomials is primitive
        QPoly {
            content: &self.content * &rhs.content,
            prim: out,
        }
    }

    pub fn neg_ref(&self) -> QPoly {
        if self.is_zero() {
            return QPoly::zero();
        }
        QPoly {
            content: -self.content.clone(),
            prim: self.prim.clone(),
        }
    }

    pub fn pow(&self, n: u32) -> QPoly {
        let mut out = QPoly::one();
        for _ in 0..n {
            out = out.mul_ref(self);
        }
        out
    }

    /// Euclidean division: returns `(quotient, remainder)` with
    /// `self = quotient * divisor + remainder` and
    /// `deg remainder < deg divisor`. The inner loop runs on integers:
    /// plain long division when the divisor's integer part is
    /// unit-headed, pseudo-division (dividend pre-scaled by lc^k)
    /// otherwise.
    pub fn divrem(&self, divisor: &QPoly) -> Result<(QPoly, QPoly)> {
        let dd = divisor
            .degree()
            .ok_or(Error::DivisionByZero("polynomial division"))?;
        if self.prim.len() < dd + 1 {
            return Ok((QPoly::zero(), self.clone()));
        }
        let lc = divisor.prim.last().unwrap();
        let qlen = self.prim.len() - dd;
        // lc^qlen * A = Q * B + R over the integers
        let scale_back = if lc.is_one() {
            BigRational::one()
        } else {
            BigRational::new(BigInt::one(), lc.pow(qlen as u32))
        };
        let mut rem: Vec<BigInt> = if lc.is_one() {
            self.prim.clone()
        } else {
            let s = lc.pow(qlen as u32);
            self.prim.iter().map(|c| c * &s).collect()
        };
        let mut quot = vec![BigInt::zero(); qlen];
        for i in (0..qlen).rev() {
            let c = std::mem::take(&mut rem[i + dd]);
            if c.is_zero() {
                continue;
            }
            let c = &c / lc; // exact: the dividend was pre-scaled
            for (j, d) in divisor.prim.iter().enumerate().take(dd) {
                if !d.is_zero() {
                    rem[i + j] -= &c * d;
                }
            }
            quot[i] = c;
        }
        rem.truncate(dd);
        let qscale = &self.content / &divisor.content * &scale_back;
        Ok((
            QPoly::normalized(qscale, quot),
            QPoly::normalized(&self.content * &scale_back, rem),
        ))
    }

    /// Exact division; errors if the remainder is nonzero.
    pub fn div_exact(&self, divisor: &QPoly) -> Result<QPoly> {
        let (q, r) = self.divrem(divisor)?;
        if r.is_zero() {
            Ok(q)
        } else {
            Err(Error::InvalidParameter(
                "polynomial division left a remainder".to_string(),
            ))
        }
    }

    /// Monic gcd via the Euclidean algorithm on primitive integer parts
    /// (contents are irrelevant to divisibility over the rationals).
    pub fn gcd(a: &QPoly, b: &QPoly) -> QPoly {
        let unit_content = |p: &QPoly| QPoly {
            content: BigRational::one(),
            prim: p.prim.clone(),
        };
        let mut a = unit_content(a);
        let mut b = unit_content(b);
        if a.prim.len() < b.prim.len() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let (_, r) = a.divrem(&b).expect("divisor is nonzero");
            a = std::mem::replace(&mut b, unit_content(&r));
        }
        a.make_monic()
    }

    /// Horner evaluation at a double-precision point.
    pub fn eval_f64(&self, q0: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.prim.iter().rev() {
            acc = acc * q0 + c.to_f64().unwrap_or(f64::NAN);
        }
        acc * self.content.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact Horner evaluation at a rational point.
    pub fn eval_rational(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.prim.iter().rev() {
            acc = acc * x + BigRational::from_integer(c.clone());
        }
        acc * &self.content
    }

    /// True when every coefficient is a nonnegative integer.
    pub fn has_nonneg_integer_coeffs(&self) -> bool {
        if self.is_zero() {
            return true;
        }
        if self.content.is_negative() {
            return false;
        }
        self.prim.iter().all(|c| {
            !c.is_negative() && (&self.content * BigRational::from_integer(c.clone())).is_integer()
        })
    }
}

impl PartialEq for QPoly {
    fn eq(&self, other: &Self) -> bool {
        self.content == other.content && self.prim == other.prim
    }
}

impl Eq for QPoly {}

impl Add for QPoly {
    type Output = QPoly;
    fn add(self, rhs: QPoly) -> QPoly {
        self.add_ref(&rhs)
    }
}

impl Sub for QPoly {
    type Output = QPoly;
    fn sub(self, rhs: QPoly) -> QPoly {
        self.sub_ref(&rhs)
    }
}

impl Mul for QPoly {
    type Output = QPoly;
    fn mul(self, rhs: QPoly) -> QPoly {
        self.mul_ref(&rhs)
    }
}

impl Neg for QPoly {
    type Output = QPoly;
    fn neg(self) -> QPoly {
        self.neg_ref()
    }
}

impl fmt::Display for QPoly {
    /// Compact ascending rendering: `1+2q+2q^2+q^3`, matching the table
    /// format used by the CLI.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for k in 0..self.prim.len() {
            let c = self.coeff(k);
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, "-")?;
            } else {
                write!(f, "+")?;
            }
            let coeff_str = if mag.is_one() && k > 0 {
                String::new()
            } else if mag.is_integer() {
                format!("{}", mag.numer())
            } else {
                format!("({}/{})", mag.numer(), mag.denom())
            };
            match k {
                0 => write!(f, "{}", if coeff_str.is_empty() { "1" } else { &coeff_str })?,
                1 => write!(f, "{}q", coeff_str)?,
                _ => write!(f, "{}q^{}", coeff_str, k)?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QPoly({})", self)
    }
}
