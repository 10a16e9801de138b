//! Scalar domains.
//!
//! Everything downstream is generic over a [`QScalar`]: either an exact
//! rational function in the indeterminate q ([`QRat`]), or a complex double
//! at a fixed numeric q ([`NumScalar`]). The [`QMode`] trait carries the
//! choice of domain together with the value of q itself.

mod poly;
mod rat;

pub use poly::QPoly;
pub use rat::{qrat_eval, QRat};

use num_complex::Complex64;
use num_traits::{One, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::report::Mode;

/// Complex double-precision scalar used by the numeric domain.
pub type NumScalar = Complex64;

/// Field operations shared by the two scalar domains.
///
/// Values are immutable; all operations are pure, so scalars are free to
/// cross thread boundaries.
pub trait QScalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    /// Whether equality of values is decidable (exact domain) rather than
    /// approximate (floating point).
    const EXACT: bool;

    fn from_integer(n: i64) -> Self;

    fn try_div(&self, rhs: &Self) -> Result<Self>;

    /// Complex conjugate; the identity on the exact domain, whose scalars
    /// are rational functions with rational coefficients.
    fn conjugate(&self) -> Self;

    /// Magnitude used for defect reporting: `None` in the exact domain
    /// (defects there are either zero or reported symbolically).
    fn defect_norm(&self) -> Option<f64>;
}

impl Zero for QRat {
    fn zero() -> Self {
        QRat::zero()
    }
    fn is_zero(&self) -> bool {
        QRat::is_zero(self)
    }
}

impl One for QRat {
    fn one() -> Self {
        QRat::one()
    }
    fn is_one(&self) -> bool {
        QRat::is_one(self)
    }
}

impl QScalar for QRat {
    const EXACT: bool = true;

    fn from_integer(n: i64) -> Self {
        QRat::from_integer(n)
    }

    fn try_div(&self, rhs: &Self) -> Result<Self> {
        QRat::try_div(self, rhs)
    }

    fn conjugate(&self) -> Self {
        self.clone()
    }

    fn defect_norm(&self) -> Option<f64> {
        None
    }
}

impl QScalar for NumScalar {
    const EXACT: bool = false;

    fn from_integer(n: i64) -> Self {
        NumScalar::new(n as f64, 0.0)
    }

    fn try_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero("numeric scalar"));
        }
        let v = self / rhs;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::DivisionByZero("numeric scalar overflow"))
        }
    }

    fn conjugate(&self) -> Self {
        self.conj()
    }

    fn defect_norm(&self) -> Option<f64> {
        Some(self.norm())
    }
}

/// A scalar domain together with the value of q living in it.
pub trait QMode: Clone + fmt::Debug + Send + Sync + 'static {
    type Scalar: QScalar;

    /// q itself, as a scalar of the domain.
    fn q(&self) -> Self::Scalar;

    fn mode(&self) -> Mode;

    /// The numeric value of q, when there is one.
    fn numeric_q(&self) -> Option<f64>;
}

/// Exact mode: scalars are rational functions in the indeterminate q.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactQ;

impl QMode for ExactQ {
    type Scalar = QRat;

    fn q(&self) -> QRat {
        QRat::q()
    }

    fn mode(&self) -> Mode {
        Mode::Exact
    }

    fn numeric_q(&self) -> Option<f64> {
        None
    }
}

/// Numeric mode at a fixed q ∈ [0, 1]. q = 1 is the classical limit;
/// operations whose defining expressions divide by (1 - q) reject it
/// explicitly instead of evaluating a singular formula.
#[derive(Clone, Copy, Debug)]
pub struct NumericQ {
    q0: f64,
}

impl NumericQ {
    pub fn new(q0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q0) {
            return Err(Error::InvalidParameter(format!(
                "q must lie in [0, 1], got {q0}"
            )));
        }
        Ok(NumericQ { q0 })
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn is_classical(&self) -> bool {
        self.q0 == 1.0
    }
}

impl QMode for NumericQ {
    type Scalar = NumScalar;

    fn q(&self) -> NumScalar {
        NumScalar::new(self.q0, 0.0)
    }

    fn mode(&self) -> Mode {
        Mode::Numeric
    }

    fn numeric_q(&self) -> Option<f64> {
        Some(self.q0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn small_rational() -> impl Strategy<Value = BigRational> {
        (-6i64..=6, 1i64..=4).prop_map(|(n, d)| {
            BigRational::new(BigInt::from(n), BigInt::from(d))
        })
    }

    fn small_poly() -> impl Strategy<Value = QPoly> {
        proptest::collection::vec(small_rational(), 0..5).prop_map(QPoly::new)
    }

    fn small_rat() -> impl Strategy<Value = QRat> {
        (small_poly(), small_poly())
            .prop_filter("nonzero denominator", |(_, d)| !d.is_zero())
            .prop_map(|(n, d)| QRat::new(n, d).unwrap())
    }

    proptest! {
        #[test]
        fn ring_axioms(a in small_rat(), b in small_rat(), c in small_rat()) {
            let assoc_l = a.add_ref(&b).add_ref(&c);
            let assoc_r = a.add_ref(&b.add_ref(&c));
            prop_assert_eq!(assoc_l, assoc_r);

            let dist_l = a.mul_ref(&b.add_ref(&c));
            let dist_r = a.mul_ref(&b).add_ref(&a.mul_ref(&c));
            prop_assert_eq!(dist_l, dist_r);

            let comm_l = a.mul_ref(&b);
            let comm_r = b.mul_ref(&a);
            prop_assert_eq!(comm_l, comm_r);
        }

        #[test]
        fn exact_cancellation(a in small_rat(), b in small_rat()) {
            prop_assume!(!b.is_zero());
            prop_assert_eq!(a.mul_ref(&b).try_div(&b).unwrap(), a);
        }

        #[test]
        fn eval_commutes_with_arithmetic(a in small_rat(), b in small_rat(), qi in 0u8..=10) {
            let q0 = qi as f64 / 10.0;
            // Skip points too close to a pole of either operand or the result.
            let sum = a.add_ref(&b);
            let prod = a.mul_ref(&b);
            let ok = |r: &QRat| r.denominator().eval_f64(q0).abs() > 1e-6;
            prop_assume!(ok(&a) && ok(&b) && ok(&sum) && ok(&prod));
            let (av, bv) = (a.eval_f64(q0).unwrap(), b.eval_f64(q0).unwrap());
            let sv = sum.eval_f64(q0).unwrap();
            let pv = prod.eval_f64(q0).unwrap();
            let scale_s = 1.0f64.max(av.abs() + bv.abs());
            let scale_p = 1.0f64.max(av.abs() * bv.abs());
            prop_assert!((sv - (av + bv)).abs() <= 1e-12 * scale_s);
            prop_assert!((pv - av * bv).abs() <= 1e-12 * scale_p);
        }
    }

    #[test]
    fn qrat_eval_returns_numeric_scalar() {
        let r = QRat::from_poly(QPoly::from_integers(&[1, 1, 1]));
        assert_eq!(qrat_eval(&r, 0.5).unwrap(), NumScalar::new(1.75, 0.0));
    }
}
