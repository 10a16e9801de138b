//! q-combinatorial primitives: q-integers, q-factorials, q-Pochhammer
//! symbols, and the q-exponential in series and product form.
//!
//! The q-integer convention used throughout: `[0]_q = 0` and
//! `[n]_q = 1 + q + ... + q^{n-1}` for n >= 1, so that the q-factorial's
//! empty product gives `[0]_q! = 1`. Computing q-integers as literal sums
//! (rather than `(1-q^n)/(1-q)`) keeps every formula finite at q = 1,
//! where they collapse to the classical values n, n!, and e^z.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::qscalar::{NumScalar, NumericQ, QMode};

/// Default truncation order for exact-mode contexts.
pub const DEFAULT_EXACT_ORDER: usize = 32;
/// Default truncation order for numeric-mode contexts.
pub const DEFAULT_NUMERIC_ORDER: usize = 64;
/// Default tolerance for truncating numeric tail sums and products.
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;

/// Evaluation context: the scalar mode (exact, or numeric at q0), the
/// series truncation order N, and the numeric tail tolerance.
#[derive(Clone, Debug)]
pub struct QContext<M: QMode> {
    pub mode: M,
    order: usize,
    tail_tol: f64,
}

impl QContext<crate::qscalar::ExactQ> {
    pub fn exact(order: usize) -> Self {
        QContext {
            mode: crate::qscalar::ExactQ,
            order,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

impl QContext<NumericQ> {
    pub fn numeric(q0: f64, order: usize) -> Result<Self> {
        Ok(QContext {
            mode: NumericQ::new(q0)?,
            order,
            tail_tol: DEFAULT_TAIL_TOL,
        })
    }

    pub fn q0(&self) -> f64 {
        self.mode.q0()
    }
}

impl<M: QMode> QContext<M> {
    pub fn with_tail_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    /// Truncation order N; series carry N+1 coefficients.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// q as a scalar of the context's domain.
    pub fn q(&self) -> M::Scalar {
        self.mode.q()
    }
}

/// The q-integer `[n]_q`: 0 for n = 0, else `1 + q + ... + q^{n-1}`
/// (Horner form, exact at q = 1 where it returns n).
pub fn q_int<M: QMode>(n: u32, ctx: &QContext<M>) -> M::Scalar {
    let q = ctx.q();
    let mut acc = M::Scalar::zero();
    for _ in 0..n {
        acc = acc * q.clone() + M::Scalar::one();
    }
    acc
}

/// The q-factorial `[n]_q! = [1]_q [2]_q ... [n]_q`, with `[0]_q! = 1`.
pub fn q_factorial<M: QMode>(n: u32, ctx: &QContext<M>) -> M::Scalar {
    let mut acc = M::Scalar::one();
    for k in 1..=n {
        acc = acc * q_int(k, ctx);
    }
    acc
}

/// Finite q-Pochhammer symbol `(a; q)_n = prod_{j=0}^{n-1} (1 - a q^j)`.
pub fn pochhammer<M: QMode>(a: &M::Scalar, n: u32, ctx: &QContext<M>) -> M::Scalar {
    let q = ctx.q();
    let mut acc = M::Scalar::one();
    let mut aq = a.clone();
    for _ in 0..n {
        acc = acc * (M::Scalar::one() - aq.clone());
        aq = aq * q.clone();
    }
    acc
}

/// A truncated evaluation: the value together with the number of terms
/// (or factors) consumed and a bound on the discarded tail.
#[derive(Clone, Copy, Debug)]
pub struct Truncated<T> {
    pub value: T,
    pub terms: usize,
    pub tail_bound: f64,
}

const MAX_TERMS: usize = 200_000;

/// Infinite q-Pochhammer symbol `(a; q)_inf`, truncated once the remaining
/// factors differ from 1 by less than the context's tail tolerance.
/// Requires numeric mode with q0 < 1.
pub fn pochhammer_inf(a: NumScalar, ctx: &QContext<NumericQ>) -> Result<Truncated<NumScalar>> {
    let q0 = ctx.q0();
    if ctx.mode.is_classical() {
        return Err(Error::Unsupported(
            "infinite q-Pochhammer product requires q < 1".to_string(),
        ));
    }
    let mut value = NumScalar::one();
    let mut aq = a;
    let mut terms = 0;
    while aq.norm() >= ctx.tail_tol() {
        value *= NumScalar::one() - aq;
        aq *= q0;
        terms += 1;
        if terms > MAX_TERMS {
            return Err(Error::Divergent {
                terms,
                context: "infinite q-Pochhammer product".to_string(),
            });
        }
    }
    // Remaining factors satisfy |1 - a q^j| in [1 - |a|q^j, 1 + |a|q^j];
    // their product deviates from 1 by at most ~ |a| q^J / (1 - q).
    let tail_bound = if q0 < 1.0 { aq.norm() / (1.0 - q0) } else { 0.0 };
    Ok(Truncated {
        value,
        terms,
        tail_bound,
    })
}

/// Evaluation method for the q-exponential.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpMethod {
    /// Power series `sum z^k / [k]_q!` with a geometric tail certificate.
    Series,
    /// Infinite product `1 / (z(1-q); q)_inf`; requires q < 1.
    Product,
}

fn check_exp_domain(z: NumScalar, q0: f64) -> Result<()> {
    if q0 < 1.0 {
        let radius = 1.0 / (1.0 - q0);
        if z.norm() >= radius {
            return Err(Error::Domain(format!(
                "|z| = {} outside the disk of radius 1/(1-q) = {}",
                z.norm(),
                radius
            )));
        }
    }
    Ok(())
}

/// The q-exponential `E_q(z) = sum_k z^k/[k]_q! = 1/((z(1-q); q)_inf)`,
/// the reproducing kernel generator. At q = 0 it is `1/(1-z)`; at q = 1
/// the series produces `e^z`.
pub fn eq_exp(
    z: NumScalar,
    ctx: &QContext<NumericQ>,
    method: ExpMethod,
) -> Result<Truncated<NumScalar>> {
    let q0 = ctx.q0();
    check_exp_domain(z, q0)?;
    match method {
        ExpMethod::Series => {
            let tol = ctx.tail_tol();
            let mut sum = NumScalar::one();
            let mut term = NumScalar::one();
            let mut k = 0u32;
            loop {
                k += 1;
                let qk: NumScalar = q_int(k, ctx);
                term = term * z / qk;
                sum += term;
                // Term ratios |z|/[k+1]_q decrease in k, so once the next
                // ratio r is below 1 the tail is bounded by |t_k| r/(1-r).
                let r = z.norm() / q_int(k + 1, ctx).re;
                if r < 1.0 {
                    let tail = term.norm() * r / (1.0 - r);
                    if tail <= tol * sum.norm().max(1.0) {
                        return Ok(Truncated {
                            value: sum,
                            terms: k as usize + 1,
                            tail_bound: tail,
                        });
                    }
                }
                if k as usize > MAX_TERMS {
                    return Err(Error::Divergent {
                        terms: k as usize,
                        context: "q-exponential series".to_string(),
                    });
                }
            }
        }
        ExpMethod::Product => {
            if ctx.mode.is_classical() {
                return Err(Error::Unsupported(
                    "product form of the q-exponential requires q < 1".to_string(),
                ));
            }
            let p = pochhammer_inf(z * (1.0 - q0), ctx)?;
            if p.value.is_zero() {
                return Err(Error::Domain(
                    "q-exponential pole: (z(1-q); q)_inf vanished".to_string(),
                ));
            }
            let value = p.value.finv();
            Ok(Truncated {
                value,
                terms: p.terms,
                tail_bound: p.tail_bound * value.norm(),
            })
        }
    }
}

/// Residual of the functional equation
/// `E_q(qz) = (1 - z(1-q)) E_q(z)`, evaluated via the series form.
pub fn eq_functional_check(z: NumScalar, ctx: &QContext<NumericQ>) -> Result<f64> {
    let q0 = ctx.q0();
    let lhs = eq_exp(z * q0, ctx, ExpMethod::Series)?.value;
    let rhs = (NumScalar::one() - z * (1.0 - q0)) * eq_exp(z, ctx, ExpMethod::Series)?.value;
    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qscalar::{ExactQ, QPoly, QRat};

    fn exact_ctx() -> QContext<ExactQ> {
        QContext::exact(16)
    }

    fn poly(coeffs: &[i64]) -> QRat {
        QRat::from_poly(QPoly::from_integers(coeffs))
    }

    #[test]
    fn q_int_exact() {
        let ctx = exact_ctx();
        assert_eq!(q_int(0, &ctx), QRat::zero());
        assert_eq!(q_int(1, &ctx), QRat::one());
        assert_eq!(q_int(3, &ctx), poly(&[1, 1, 1]));
    }

    #[test]
    fn q_int_numeric() {
        let ctx = QContext::numeric(0.5, 8).unwrap();
        assert_eq!(q_int(4, &ctx).re, 1.875);
        let classical = QContext::numeric(1.0, 8).unwrap();
        assert_eq!(q_int(7, &classical).re, 7.0);
        let hardy = QContext::numeric(0.0, 8).unwrap();
        assert_eq!(q_int(5, &hardy).re, 1.0);
    }

    #[test]
    fn q_factorial_exact_matches_product() {
        let ctx = exact_ctx();
        // [3]_q! = (1+q)(1+q+q^2) = 1+2q+2q^2+q^3
        assert_eq!(q_factorial(3, &ctx), poly(&[1, 2, 2, 1]));
        assert_eq!(q_factorial(0, &ctx), QRat::one());
    }

    #[test]
    fn q_factorial_classical_limits() {
        let one = QContext::numeric(1.0, 8).unwrap();
        assert_eq!(q_factorial(5, &one).re, 120.0);
        let zero = QContext::numeric(0.0, 8).unwrap();
        for n in 0..6 {
            assert_eq!(q_factorial(n, &zero).re, 1.0);
        }
    }

    #[test]
    fn q_factorial_degree_and_positivity() {
        let ctx = exact_ctx();
        for n in 0..10u32 {
            let f = q_factorial(n, &ctx);
            let p = f.as_poly().expect("factorials are polynomials");
            let expected_deg = (n * n.saturating_sub(1) / 2) as usize;
            assert_eq!(p.degree().unwrap_or(0), expected_deg, "degree of [{n}]_q!");
            assert!(p.has_nonneg_integer_coeffs());
        }
    }

    #[test]
    fn q_int_recursion() {
        // [n+1]_q = 1 + q [n]_q, structurally.
        let ctx = exact_ctx();
        for n in 0..12u32 {
            let lhs = q_int(n + 1, &ctx);
            let rhs = QRat::one().add_ref(&QRat::q().mul_ref(&q_int(n, &ctx)));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn pochhammer_small_cases() {
        let ctx = exact_ctx();
        let a = QRat::q();
        assert!(pochhammer(&a, 0, &ctx).is_one());
        // (a;q)_2 = (1-a)(1-aq) with a = q: (1-q)(1-q^2)
        let expect = poly(&[1, -1]).mul_ref(&poly(&[1, 0, -1]));
        assert_eq!(pochhammer(&a, 2, &ctx), expect);
    }

    #[test]
    fn pochhammer_inf_frozen_value() {
        // (q;q)_inf at q = 0.5; frozen from a truncated-product oracle
        // running until the factors differ from 1 by less than 1e-16.
        let ctx = QContext::numeric(0.5, 8).unwrap().with_tail_tol(1e-16);
        let p = pochhammer_inf(NumScalar::new(0.5, 0.0), &ctx).unwrap();
        assert!((p.value.re - 0.2887880950866024).abs() < 1e-12);
        assert!(p.terms > 0 && p.tail_bound < 1e-14);
    }

    #[test]
    fn pochhammer_inf_rejects_exactish_cases() {
        let classical = QContext::numeric(1.0, 8).unwrap();
        assert!(matches!(
            pochhammer_inf(NumScalar::one(), &classical),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn eq_exp_hardy_and_fock_limits() {
        let hardy = QContext::numeric(0.0, 8).unwrap();
        let z = NumScalar::new(0.5, 0.0);
        let v = eq_exp(z, &hardy, ExpMethod::Series).unwrap().value;
        assert!((v.re - 2.0).abs() < 1e-13);

        let fock = QContext::numeric(1.0, 8).unwrap();
        let v = eq_exp(NumScalar::new(1.25, 0.0), &fock, ExpMethod::Series)
            .unwrap()
            .value;
        assert!((v.re - 1.25f64.exp()).abs() < 1e-13);
    }

    #[test]
    fn eq_exp_at_zero_is_one() {
        for q0 in [0.0, 0.3, 0.7, 1.0] {
            let ctx = QContext::numeric(q0, 8).unwrap();
            let v = eq_exp(NumScalar::zero(), &ctx, ExpMethod::Series)
                .unwrap()
                .value;
            assert_eq!(v, NumScalar::one());
        }
    }

    #[test]
    fn eq_exp_series_vs_product() {
        for q0 in [0.1, 0.5, 0.9] {
            let ctx = QContext::numeric(q0, 8).unwrap();
            let z = NumScalar::new(0.8 / (1.0 - q0), 0.1);
            if z.norm() >= 1.0 / (1.0 - q0) {
                continue;
            }
            let s = eq_exp(z, &ctx, ExpMethod::Series).unwrap().value;
            let p = eq_exp(z, &ctx, ExpMethod::Product).unwrap().value;
            assert!(
                (s - p).norm() <= 1e-12 * s.norm(),
                "series/product disagreement at q={q0}: {s} vs {p}"
            );
        }
    }

    #[test]
    fn eq_exp_domain_error() {
        let ctx = QContext::numeric(0.5, 8).unwrap();
        assert!(matches!(
            eq_exp(NumScalar::new(2.5, 0.0), &ctx, ExpMethod::Series),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn functional_equation_residuals() {
        // z = 0: both sides are 1.
        let ctx = QContext::numeric(0.5, 8).unwrap();
        assert_eq!(eq_functional_check(NumScalar::zero(), &ctx).unwrap(), 0.0);
        // q = 0: E_0(z) = 1/(1-z) and the relation collapses to an identity.
        let hardy = QContext::numeric(0.0, 8).unwrap();
        let r = eq_functional_check(NumScalar::new(0.4, 0.2), &hardy).unwrap();
        assert!(r <= 1e-13);
        // q = 0.5, z = 1.0 (inside the radius-2 disk).
        let r = eq_functional_check(NumScalar::new(1.0, 0.0), &ctx).unwrap();
        let scale = eq_exp(NumScalar::new(1.0, 0.0), &ctx, ExpMethod::Series)
            .unwrap()
            .value
            .norm();
        assert!(r <= 1e-12 * scale);
    }

    #[test]
    fn weight_monotonicity() {
        // [n+1]_q! >= [n]_q! >= 1 for q in (0, 1].
        for q0 in [0.1, 0.5, 0.9, 1.0] {
            let ctx = QContext::numeric(q0, 8).unwrap();
            let mut prev = 1.0;
            for n in 0..24u32 {
                let w = q_factorial(n, &ctx).re;
                assert!(w >= 1.0 && w >= prev, "monotonicity at q={q0}, n={n}");
                prev = w;
            }
        }
    }
}
