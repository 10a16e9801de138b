//! Truncated formal power series in z and the operators acting on them.
//!
//! Operators are materialized as dense (N+1)x(N+1) matrices over the
//! context's scalar domain, column m holding the image of the monomial
//! z^m. Keeping a single matrix representation means adjoints (in the
//! `spaces` module) and realizations are pure matrix transforms.
//!
//! Truncation semantics: an operator with degree shift +1 drops the
//! overflow coefficient of the top monomial, so identity checks always
//! take an explicit `margin` of top columns to exclude. Exactness
//! bookkeeping on series is conservative: applying an operator with
//! degree shift d lowers `exact_to` by |d|.

use num_traits::{One, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::qnum::{q_factorial, q_int, QContext};
use crate::qscalar::{QMode, QScalar};
use crate::report::{Defect, Report};

/// Default tolerance for declaring a numeric-mode identity to hold.
pub const DEFAULT_NUMERIC_IDENTITY_TOL: f64 = 1e-12;

/// Coefficients (c_0, ..., c_N) of a power series in z, together with the
/// largest index up to which they are exact for the represented function.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries<S: QScalar> {
    coeffs: Vec<S>,
    exact_to: i32,
}

impl<S: QScalar> TruncatedSeries<S> {
    /// The zero series at truncation order N.
    pub fn zero(order: usize) -> Self {
        TruncatedSeries {
            coeffs: vec![S::zero(); order + 1],
            exact_to: order as i32,
        }
    }

    /// The monomial z^k.
    pub fn monomial(order: usize, k: usize) -> Result<Self> {
        if k > order {
            return Err(Error::InvalidParameter(format!(
                "monomial degree {k} exceeds truncation order {order}"
            )));
        }
        let mut s = TruncatedSeries::zero(order);
        s.coeffs[k] = S::one();
        Ok(s)
    }

    /// A polynomial from explicit coefficients (fully exact).
    pub fn polynomial(order: usize, coeffs: &[S]) -> Result<Self> {
        if coeffs.len() > order + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} coefficients exceed truncation order {}",
                coeffs.len(),
                order
            )));
        }
        let mut s = TruncatedSeries::zero(order);
        s.coeffs[..coeffs.len()].clone_from_slice(coeffs);
        Ok(s)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &S {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Index up to which coefficients are exact; -1 when none are trusted.
    pub fn exact_to(&self) -> i32 {
        self.exact_to
    }

    pub fn with_exact_to(mut self, exact_to: i32) -> Self {
        self.exact_to = exact_to.min(self.order() as i32);
        self
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_order(rhs)?;
        Ok(TruncatedSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
            exact_to: self.exact_to.min(rhs.exact_to),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_order(rhs)?;
        Ok(TruncatedSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
            exact_to: self.exact_to.min(rhs.exact_to),
        })
    }

    pub fn scale(&self, c: &S) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|a| a.clone() * c.clone()).collect(),
            exact_to: self.exact_to,
        }
    }

    /// Coefficient-wise map that preserves degrees (and hence exactness).
    pub fn map_indexed(&self, f: impl Fn(usize, &S) -> S) -> Self {
        TruncatedSeries {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| f(k, c))
                .collect(),
            exact_to: self.exact_to,
        }
    }

    /// Horner evaluation at a point of the same scalar domain.
    pub fn eval(&self, z: &S) -> S {
        let mut acc = S::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z.clone() + c.clone();
        }
        acc
    }

    fn check_order(&self, rhs: &Self) -> Result<()> {
        if self.order() != rhs.order() {
            return Err(Error::InvalidParameter(format!(
                "series orders differ: {} vs {}",
                self.order(),
                rhs.order()
            )));
        }
        Ok(())
    }
}

/// A linear operator on truncated series, stored densely; column m is the
/// image of z^m. `degree_shift` records how the operator moves degrees
/// (-1 for backward shifts, +1 for multiplication by z, 0 for diagonal).
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesOperator<S: QScalar> {
    order: usize,
    degree_shift: i32,
    entries: Vec<S>, // row-major (order+1) x (order+1)
}

impl<S: QScalar> SeriesOperator<S> {
    pub fn zero(order: usize, degree_shift: i32) -> Self {
        SeriesOperator {
            order,
            degree_shift,
            entries: vec![S::zero(); (order + 1) * (order + 1)],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut op = SeriesOperator::zero(order, 0);
        for n in 0..=order {
            op.set_entry(n, n, S::one());
        }
        op
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn degree_shift(&self) -> i32 {
        self.degree_shift
    }

    pub fn entry(&self, row: usize, col: usize) -> &S {
        &self.entries[row * (self.order + 1) + col]
    }

    pub fn set_entry(&mut self, row: usize, col: usize, value: S) {
        self.entries[row * (self.order + 1) + col] = value;
    }

    /// Applies the operator; `exact_to` drops by |degree_shift|.
    pub fn apply(&self, f: &TruncatedSeries<S>) -> Result<TruncatedSeries<S>> {
        if f.order() != self.order {
            return Err(Error::InvalidParameter(format!(
                "operator order {} does not match series order {}",
                self.order,
                f.order()
            )));
        }
        let n = self.order + 1;
        let mut out = vec![S::zero(); n];
        for (c, fc) in f.coeffs().iter().enumerate() {
            if fc.is_zero() {
                continue;
            }
            for (r, slot) in out.iter_mut().enumerate() {
                let e = self.entry(r, c);
                if !e.is_zero() {
                    *slot = slot.clone() + e.clone() * fc.clone();
                }
            }
        }
        let exact_to = (f.exact_to() - self.degree_shift.abs()).max(-1);
        Ok(TruncatedSeries {
            coeffs: out,
            exact_to: exact_to.min(self.order as i32),
        })
    }

    /// Matrix product: `compose(a, b)` applies `b` first, then `a`.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.order != rhs.order {
            return Err(Error::InvalidParameter(format!(
                "operator orders differ: {} vs {}",
                self.order, rhs.order
            )));
        }
        let n = self.order + 1;
        let shift = (self.degree_shift + rhs.degree_shift)
            .clamp(-(self.order as i32), self.order as i32);
        let mut out: SeriesOperator<S> = SeriesOperator::zero(self.order, shift);
        for r in 0..n {
            for k in 0..n {
                let a = self.entry(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let b = rhs.entry(k, c);
                    if !b.is_zero() {
                        let cur = out.entry(r, c).clone();
                        out.set_entry(r, c, cur + a.clone() * b.clone());
                    }
                }
            }
        }
        Ok(out)
    }

    /// n-fold composition; `power(A, 0)` is the identity.
    pub fn power(&self, n: u32) -> Result<Self> {
        let mut out = SeriesOperator::identity(self.order);
        for _ in 0..n {
            out = self.compose(&out)?;
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.combine(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.combine(rhs, |a, b| a - b)
    }

    fn combine(&self, rhs: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        if self.order != rhs.order {
            return Err(Error::InvalidParameter(format!(
                "operator orders differ: {} vs {}",
                self.order, rhs.order
            )));
        }
        let shift = if self.degree_shift == rhs.degree_shift {
            self.degree_shift
        } else {
            0
        };
        Ok(SeriesOperator {
            order: self.order,
            degree_shift: shift,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| f(a.clone(), b.clone()))
                .collect(),
        })
    }

    pub fn scale(&self, c: &S) -> Self {
        SeriesOperator {
            order: self.order,
            degree_shift: self.degree_shift,
            entries: self
                .entries
                .iter()
                .map(|a| a.clone() * c.clone())
                .collect(),
        }
    }

    /// Scans columns `0..=order-margin`, returning the worst nonzero entry
    /// (exact mode: the first nonzero; numeric: the largest magnitude).
    pub fn worst_entry_up_to(&self, margin: usize) -> (bool, f64, Option<S>) {
        let last_col = self.order.saturating_sub(margin);
        let mut all_zero = true;
        let mut max_norm = 0.0f64;
        let mut worst: Option<S> = None;
        for c in 0..=last_col {
            for r in 0..=self.order {
                let e = self.entry(r, c);
                if e.is_zero() {
                    continue;
                }
                all_zero = false;
                match e.defect_norm() {
                    Some(m) => {
                        if m > max_norm {
                            max_norm = m;
                            worst = Some(e.clone());
                        }
                    }
                    None => {
                        if worst.is_none() {
                            worst = Some(e.clone());
                        }
                    }
                }
            }
        }
        (all_zero, max_norm, worst)
    }
}

/// Backward shift R_0: z^n -> z^{n-1}, constants to 0.
pub fn op_r0<M: QMode>(ctx: &QContext<M>) -> SeriesOperator<M::Scalar> {
    let mut op = SeriesOperator::zero(ctx.order(), -1);
    for n in 1..=ctx.order() {
        op.set_entry(n - 1, n, M::Scalar::one());
    }
    op
}

/// Jackson derivative R_q: z^n -> [n]_q z^{n-1}. At q = 1 the entries are
/// the classical n, i.e. the operator is the derivative.
pub fn op_rq<M: QMode>(ctx: &QContext<M>) -> SeriesOperator<M::Scalar> {
    let mut op = SeriesOperator::zero(ctx.order(), -1);
    for n in 1..=ctx.order() {
        op.set_entry(n - 1, n, q_int(n as u32, ctx));
    }
    op
}

/// Dilation Λ_q: f(z) -> f(qz), i.e. z^n -> q^n z^n.
pub fn op_lambda<M: QMode>(ctx: &QContext<M>) -> SeriesOperator<M::Scalar> {
    let mut op = SeriesOperator::zero(ctx.order(), 0);
    let q = ctx.q();
    let mut qn = M::Scalar::one();
    for n in 0..=ctx.order() {
        op.set_entry(n, n, qn.clone());
        qn = qn * q.clone();
    }
    op
}

/// Multiplication by z: z^n -> z^{n+1}; the top coefficient is dropped.
pub fn op_mz<M: QMode>(ctx: &QContext<M>) -> SeriesOperator<M::Scalar> {
    let mut op = SeriesOperator::zero(ctx.order(), 1);
    for n in 0..ctx.order() {
        op.set_entry(n + 1, n, M::Scalar::one());
    }
    op
}

/// Classical derivative ∂: z^n -> n z^{n-1}.
pub fn op_derivative<M: QMode>(ctx: &QContext<M>) -> SeriesOperator<M::Scalar> {
    let mut op = SeriesOperator::zero(ctx.order(), -1);
    for n in 1..=ctx.order() {
        op.set_entry(n - 1, n, M::Scalar::from_integer(n as i64));
    }
    op
}

/// Jackson antiderivative: z^l -> z^{l+1}/[l+1]_q, matching the q-integral
/// of monomials over [0, z]. The top column is dropped by truncation.
pub fn op_jackson_antiderivative<M: QMode>(ctx: &QContext<M>) -> SeriesOperator<M::Scalar> {
    let mut op = SeriesOperator::zero(ctx.order(), 1);
    for l in 0..ctx.order() {
        let inv = M::Scalar::one()
            .try_div(&q_int(l as u32 + 1, ctx))
            .expect("[l+1]_q is nonzero for q in [0,1]");
        op.set_entry(l + 1, l, inv);
    }
    op
}

/// Composition as a free function (applies `b` first).
pub fn op_compose<S: QScalar>(
    a: &SeriesOperator<S>,
    b: &SeriesOperator<S>,
) -> Result<SeriesOperator<S>> {
    a.compose(b)
}

/// n-fold power as a free function.
pub fn op_power<S: QScalar>(a: &SeriesOperator<S>, n: u32) -> Result<SeriesOperator<S>> {
    a.power(n)
}

/// Catalog of exact operator identities on truncated series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesIdentity {
    /// `R_q M_z - q M_z R_q = I` (the q-commutator).
    QCommutator,
    /// `R_q^n = prod_{k=1}^n (1 - q^k Λ_q) / (1-q)^n · R_0^n`.
    IteratedPowers { n: u32 },
    /// `R_0 Λ_q = q Λ_q R_0`.
    R0LambdaIntertwine,
    /// `R_q = (1 - q Λ_q) R_0 / (1-q)`.
    RqFactored,
}

impl SeriesIdentity {
    pub fn name(&self) -> &'static str {
        match self {
            SeriesIdentity::QCommutator => "Q_COMMUTATOR",
            SeriesIdentity::IteratedPowers { .. } => "ITERATED_POWERS",
            SeriesIdentity::R0LambdaIntertwine => "R0_LAMBDA_INTERTWINE",
            SeriesIdentity::RqFactored => "RQ_FACTORED",
        }
    }

    /// Top columns excluded by default: 1 where M_z truncation can reach
    /// the checked block, n for the n-th iterated power, else 0.
    pub fn default_margin(&self) -> usize {
        match self {
            SeriesIdentity::QCommutator => 1,
            SeriesIdentity::IteratedPowers { n } => *n as usize,
            SeriesIdentity::R0LambdaIntertwine | SeriesIdentity::RqFactored => 0,
        }
    }
}

pub(crate) fn one_minus_q<M: QMode>(ctx: &QContext<M>) -> Result<M::Scalar> {
    let v = M::Scalar::one() - ctx.q();
    if v.is_zero() {
        return Err(Error::Unsupported(
            "identity divides by (1-q), undefined at q = 1".to_string(),
        ));
    }
    Ok(v)
}

/// Builds the defect operator LHS - RHS for a series identity.
fn series_defect<M: QMode>(
    id: SeriesIdentity,
    ctx: &QContext<M>,
) -> Result<SeriesOperator<M::Scalar>> {
    let q = ctx.q();
    match id {
        SeriesIdentity::QCommutator => {
            let rq = op_rq(ctx);
            let mz = op_mz(ctx);
            let lhs = rq.compose(&mz)?.sub(&mz.compose(&rq)?.scale(&q))?;
            lhs.sub(&SeriesOperator::identity(ctx.order()))
        }
        SeriesIdentity::IteratedPowers { n } => {
            let rq = op_rq(ctx);
            let lhs = rq.power(n)?;
            let lambda = op_lambda(ctx);
            let ident = SeriesOperator::identity(ctx.order());
            let mut product = ident.clone();
            let mut qk = M::Scalar::one();
            for _ in 1..=n {
                qk = qk * q.clone();
                let factor = ident.sub(&lambda.scale(&qk))?;
                product = product.compose(&factor)?;
            }
            let rhs_unscaled = product.compose(&op_r0(ctx).power(n)?)?;
            let denom = one_minus_q(ctx)?;
            let mut denom_pow = M::Scalar::one();
            for _ in 0..n {
                denom_pow = denom_pow * denom.clone();
            }
            let scale = M::Scalar::one().try_div(&denom_pow)?;
            lhs.sub(&rhs_unscaled.scale(&scale))
        }
        SeriesIdentity::R0LambdaIntertwine => {
            let r0 = op_r0(ctx);
            let lambda = op_lambda(ctx);
            r0.compose(&lambda)?
                .sub(&lambda.compose(&r0)?.scale(&q))
        }
        SeriesIdentity::RqFactored => {
            let rq = op_rq(ctx);
            let lambda = op_lambda(ctx);
            let ident = SeriesOperator::identity(ctx.order());
            let rhs_unscaled = ident.sub(&lambda.scale(&q))?.compose(&op_r0(ctx))?;
            let scale = M::Scalar::one().try_div(&one_minus_q(ctx)?)?;
            rq.sub(&rhs_unscaled.scale(&scale))
        }
    }
}

/// Builds a report from a defect operator scan.
pub(crate) fn report_from_defect<M: QMode>(
    name: &str,
    defect: &SeriesOperator<M::Scalar>,
    ctx: &QContext<M>,
    margin: usize,
    tol: f64,
    details: serde_json::Value,
) -> Report {
    let (all_zero, max_norm, worst) = defect.worst_entry_up_to(margin);
    let (holds, max_defect) = if M::Scalar::EXACT {
        (
            all_zero,
            match worst {
                None => Defect::zero_symbolic(),
                Some(w) => Defect::Symbolic(w.to_string()),
            },
        )
    } else {
        (max_norm <= tol, Defect::Magnitude(max_norm))
    };
    Report::new(name, ctx.mode.mode(), ctx.mode.numeric_q(), ctx.order())
        .with_margin(margin)
        .with_outcome(holds, max_defect)
        .with_details(details)
}

/// Verifies one catalog identity, comparing entries on columns
/// `0..=N-margin`. Exact mode demands a literally zero defect; numeric
/// mode compares magnitudes against `tol` (default 1e-12).
pub fn verify_series_identity<M: QMode>(
    id: SeriesIdentity,
    ctx: &QContext<M>,
    margin: Option<usize>,
    tol: Option<f64>,
) -> Result<Report> {
    if let SeriesIdentity::IteratedPowers { n } = id {
        if !M::Scalar::EXACT && ctx.mode.numeric_q() == Some(1.0) {
            return Err(Error::Unsupported(
                "iterated-powers identity divides by (1-q), undefined at q = 1".to_string(),
            ));
        }
        if n as usize > ctx.order() {
            return Err(Error::InvalidParameter(format!(
                "iterated power n = {n} exceeds truncation order {}",
                ctx.order()
            )));
        }
    }
    let margin = margin.unwrap_or_else(|| id.default_margin());
    let tol = tol.unwrap_or(DEFAULT_NUMERIC_IDENTITY_TOL);
    let defect = series_defect(id, ctx)?;
    let details = match id {
        SeriesIdentity::IteratedPowers { n } => json!({
            "n": n,
            "checked_columns": [0, ctx.order().saturating_sub(margin)],
        }),
        _ => json!({
            "checked_columns": [0, ctx.order().saturating_sub(margin)],
        }),
    };
    Ok(report_from_defect(
        id.name(),
        &defect,
        ctx,
        margin,
        tol,
        details,
    ))
}

/// Recovers Taylor coefficients through the resolvent formula
/// `c_n = (R_q^n f)(0) / [n]_q!`; the result matches `f.coeffs()` up to
/// `f.exact_to()` and is independent of q.
pub fn coefficient_recovery<M: QMode>(
    f: &TruncatedSeries<M::Scalar>,
    ctx: &QContext<M>,
) -> Result<Vec<M::Scalar>> {
    if f.order() != ctx.order() {
        return Err(Error::InvalidParameter(
            "series order does not match context".to_string(),
        ));
    }
    let rq = op_rq(ctx);
    let mut out = Vec::with_capacity(ctx.order() + 1);
    let mut cur = f.clone();
    for n in 0..=ctx.order() {
        let c0 = cur.coeff(0).clone();
        out.push(c0.try_div(&q_factorial(n as u32, ctx))?);
        if n < ctx.order() {
            cur = rq.apply(&cur)?;
        }
    }
    Ok(out)
}
