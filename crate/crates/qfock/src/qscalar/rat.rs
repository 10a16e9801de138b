//! Rational functions in q: quotients of [`QPoly`] in canonical form.

use num_bigint::BigInt;
use num_rational::BigRational;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::poly::QPoly;
use super::NumScalar;
use crate::error::{Error, Result};

/// A rational function in q over the rationals.
///
/// Canonical form: `gcd(num, den) = 1`, `den` monic and nonzero; the zero
/// element is `0/1`. Canonicalization runs after every operation so that
/// identity checks reduce to structural equality.
#[derive(Clone, PartialEq, Eq)]
pub struct QRat {
    num: QPoly,
    den: QPoly,
}

impl QRat {
    pub fn new(num: QPoly, den: QPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero("rational function denominator"));
        }
        Ok(Self::reduced(num, den))
    }

    fn reduced(num: QPoly, den: QPoly) -> Self {
        if num.is_zero() {
            return QRat {
                num: QPoly::zero(),
                den: QPoly::one(),
            };
        }
        let (mut num, mut den) = if den.is_one() {
            (num, den)
        } else {
            let g = QPoly::gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                (
                    num.div_exact(&g).expect("gcd divides numerator"),
                    den.div_exact(&g).expect("gcd divides denominator"),
                )
            }
        };
        if !den.is_monic() {
            let lc_inv = den.leading().unwrap().recip();
            num = num.scale(&lc_inv);
            den = den.scale(&lc_inv);
        }
        QRat { num, den }
    }

    pub fn from_poly(p: QPoly) -> Self {
        QRat {
            num: p,
            den: QPoly::one(),
        }
    }

    pub fn zero() -> Self {
        QRat::from_poly(QPoly::zero())
    }

    pub fn one() -> Self {
        QRat::from_poly(QPoly::one())
    }

    /// The indeterminate q as a rational function.
    pub fn q() -> Self {
        QRat::from_poly(QPoly::q())
    }

    pub fn constant(c: BigRational) -> Self {
        QRat::from_poly(QPoly::constant(c))
    }

    pub fn from_integer(n: i64) -> Self {
        QRat::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        QRat::constant(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn numerator(&self) -> &QPoly {
        &self.num
    }

    pub fn denominator(&self) -> &QPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// True when the denominator is 1.
    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// The underlying polynomial when the denominator is 1.
    pub fn as_poly(&self) -> Option<&QPoly> {
        self.is_polynomial().then_some(&self.num)
    }

    pub fn add_ref(&self, rhs: &QRat) -> QRat {
        if self.is_polynomial() && rhs.is_polynomial() {
            return QRat::from_poly(self.num.add_ref(&rhs.num));
        }
        let num = self
            .num
            .mul_ref(&rhs.den)
            .add_ref(&rhs.num.mul_ref(&self.den));
        let den = self.den.mul_ref(&rhs.den);
        QRat::reduced(num, den)
    }

    pub fn sub_ref(&self, rhs: &QRat) -> QRat {
        self.add_ref(&rhs.neg_ref())
    }

    pub fn mul_ref(&self, rhs: &QRat) -> QRat {
        if self.is_zero() || rhs.is_zero() {
            return QRat::zero();
        }
        if self.is_polynomial() && rhs.is_polynomial() {
            return QRat::from_poly(self.num.mul_ref(&rhs.num));
        }
        // Cross-cancel: operands are canonical, so the result of the
        // cross-reduced product is already in lowest terms.
        let g1 = QPoly::gcd(&self.num, &rhs.den);
        let g2 = QPoly::gcd(&rhs.num, &self.den);
        let n1 = self.num.div_exact(&g1).expect("gcd divides");
        let d2 = rhs.den.div_exact(&g1).expect("gcd divides");
        let n2 = rhs.num.div_exact(&g2).expect("gcd divides");
        let d1 = self.den.div_exact(&g2).expect("gcd divides");
        let mut num = n1.mul_ref(&n2);
        let mut den = d1.mul_ref(&d2);
        if !den.is_monic() {
            let lc_inv = den.leading().unwrap().recip();
            num = num.scale(&lc_inv);
            den = den.scale(&lc_inv);
        }
        QRat { num, den }
    }

    pub fn neg_ref(&self) -> QRat {
        QRat {
            num: self.num.neg_ref(),
            den: self.den.clone(),
        }
    }

    pub fn try_div(&self, rhs: &QRat) -> Result<QRat> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero("rational function"));
        }
        let flipped = QRat::reduced(rhs.den.clone(), rhs.num.clone());
        Ok(self.mul_ref(&flipped))
    }

    pub fn recip(&self) -> Result<QRat> {
        QRat::one().try_div(self)
    }

    pub fn pow(&self, n: u32) -> QRat {
        let mut out = QRat::one();
        for _ in 0..n {
            out = out.mul_ref(self);
        }
        out
    }

    /// Numeric value at q = q0; errors if the denominator vanishes there.
    pub fn eval_f64(&self, q0: f64) -> Result<f64> {
        let den = self.den.eval_f64(q0);
        if den == 0.0 || !den.is_finite() {
            return Err(Error::PoleAt { q0 });
        }
        let v = self.num.eval_f64(q0) / den;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::PoleAt { q0 })
        }
    }
}

/// Evaluates a rational function in q at a fixed numeric q0, returning it
/// as a (real-valued) numeric scalar.
pub fn qrat_eval(x: &QRat, q0: f64) -> Result<NumScalar> {
    Ok(NumScalar::new(x.eval_f64(q0)?, 0.0))
}

impl Add for QRat {
    type Output = QRat;
    fn add(self, rhs: QRat) -> QRat {
        self.add_ref(&rhs)
    }
}

impl Sub for QRat {
    type Output = QRat;
    fn sub(self, rhs: QRat) -> QRat {
        self.sub_ref(&rhs)
    }
}

impl Mul for QRat {
    type Output = QRat;
    fn mul(self, rhs: QRat) -> QRat {
        self.mul_ref(&rhs)
    }
}

impl Neg for QRat {
    type Output = QRat;
    fn neg(self) -> QRat {
        self.neg_ref()
    }
}

impl From<QPoly> for QRat {
    fn from(p: QPoly) -> Self {
        QRat::from_poly(p)
    }
}

impl fmt::Display for QRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for QRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QRat({})", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(coeffs: &[i64]) -> QRat {
        QRat::from_poly(QPoly::from_integers(coeffs))
    }

    #[test]
    fn self_division_is_one() {
        let a = poly(&[1, -1]); // 1-q
        assert!(a.try_div(&a).unwrap().is_one());
    }

    #[test]
    fn geometric_division() {
        // (1-q^2)/(1-q) = 1+q
        let num = poly(&[1, 0, -1]);
        let den = poly(&[1, -1]);
        assert_eq!(num.try_div(&den).unwrap(), poly(&[1, 1]));
    }

    #[test]
    fn division_by_zero_reported() {
        assert!(matches!(
            poly(&[1]).try_div(&QRat::zero()),
            Err(Error::DivisionByZero(_))
        ));
    }

    #[test]
    fn canonical_monic_denominator() {
        // (1+q) / (2-2q) -> ((1/2)+(1/2)q)/(1-q): denominator must be monic
        let r = poly(&[1, 1]).try_div(&poly(&[2, -2])).unwrap();
        assert!(r.denominator().is_monic());
        assert_eq!(
            r.mul_ref(&poly(&[2, -2])),
            poly(&[1, 1]),
            "round trip through the monic rescaling"
        );
    }

    #[test]
    fn eval_examples() {
        // 1+q+q^2 at 0 and 1
        let p = poly(&[1, 1, 1]);
        assert_eq!(p.eval_f64(0.0).unwrap(), 1.0);
        assert_eq!(p.eval_f64(1.0).unwrap(), 3.0);
        // (1-q^3)/(1-q) at 0.5 = 1.75
        let r = poly(&[1, 0, 0, -1]).try_div(&poly(&[1, -1])).unwrap();
        assert_eq!(r.eval_f64(0.5).unwrap(), 1.75);
    }

    #[test]
    fn pole_detected() {
        // 1/(1-q) at q = 1
        let r = poly(&[1]).try_div(&poly(&[1, -1])).unwrap();
        assert!(matches!(r.eval_f64(1.0), Err(Error::PoleAt { .. })));
    }

    #[test]
    fn exact_cancellation() {
        // a*b/b = a for structured a, b
        let a = poly(&[3, 0, 1]);
        let b = poly(&[1, 2, 2, 1]);
        assert_eq!(a.mul_ref(&b).try_div(&b).unwrap(), a);
    }
}
