//! Weighted Hilbert spaces on the truncated monomial basis.
//!
//! A [`WeightedSpace`] is a weight sequence w_n > 0 with
//! `<e_n, e_m> = w_n δ_{nm}`: the q-weighted space uses w_n = [n]_q!, the
//! squared-weight space w_n = ([n]_q!)², and the Hardy space w_n = 1.
//! Adjoints are computed from the defining relation
//! `<T* e_a, e_b> = <e_a, T e_b>`, which on weighted monomials is the pure
//! matrix transform `(T*)_{ba} = conj(T_{ab}) w_a / w_b`.

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::qnum::{eq_exp, pochhammer_inf, q_factorial, q_int, ExpMethod, QContext, Truncated};
use crate::qscalar::{NumScalar, NumericQ, QMode, QScalar};
use crate::report::{Defect, Report};
use crate::series::{
    op_derivative, op_jackson_antiderivative, op_mz, op_r0, op_rq, report_from_defect,
    SeriesOperator, TruncatedSeries, DEFAULT_NUMERIC_IDENTITY_TOL,
};

/// Which weight sequence a space carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// w_n = [n]_q! (kernel generated by the q-exponential).
    H2Q,
    /// w_n = ([n]_q!)² (squared weights).
    F2Q,
    /// w_n = 1 (Hardy space).
    Hardy,
}

/// A weighted sequence space over the truncated monomial basis.
///
/// Besides the weights themselves, the space keeps the step factors
/// w_{n+1}/w_n (small scalars like [n+1]_q or its square); weight ratios
/// are assembled from them, which keeps adjoint entries exact-small in
/// the rational domain and overflow-free in the numeric one.
#[derive(Clone, Debug)]
pub struct WeightedSpace<S: QScalar> {
    kind: SpaceKind,
    weights: Vec<S>,
    steps: Vec<S>,
}

impl<S: QScalar> WeightedSpace<S> {
    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weight(&self, n: usize) -> &S {
        &self.weights[n]
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// The exact ratio w_a / w_b as a product of step factors.
    pub fn weight_ratio(&self, a: usize, b: usize) -> Result<S> {
        let prod = |lo: usize, hi: usize| -> S {
            let mut acc = S::one();
            for s in &self.steps[lo..hi] {
                acc = acc * s.clone();
            }
            acc
        };
        if a >= b {
            Ok(prod(b, a))
        } else {
            S::one().try_div(&prod(a, b))
        }
    }
}

fn build_space<M: QMode>(kind: SpaceKind, ctx: &QContext<M>) -> WeightedSpace<M::Scalar> {
    let step = |n: u32| {
        let g = q_int(n + 1, ctx);
        match kind {
            SpaceKind::H2Q => g,
            SpaceKind::F2Q => g.clone() * g,
            SpaceKind::Hardy => M::Scalar::one(),
        }
    };
    let steps: Vec<M::Scalar> = (0..ctx.order() as u32).map(step).collect();
    let mut weights = Vec::with_capacity(ctx.order() + 1);
    weights.push(M::Scalar::one());
    for s in &steps {
        let prev = weights.last().unwrap().clone();
        weights.push(prev * s.clone());
    }
    WeightedSpace {
        kind,
        weights,
        steps,
    }
}

/// The space with weights [n]_q!.
pub fn h2q<M: QMode>(ctx: &QContext<M>) -> WeightedSpace<M::Scalar> {
    build_space(SpaceKind::H2Q, ctx)
}

/// The space with weights ([n]_q!)².
pub fn f2q<M: QMode>(ctx: &QContext<M>) -> WeightedSpace<M::Scalar> {
    build_space(SpaceKind::F2Q, ctx)
}

/// The Hardy space (unit weights).
pub fn hardy<M: QMode>(ctx: &QContext<M>) -> WeightedSpace<M::Scalar> {
    build_space(SpaceKind::Hardy, ctx)
}

/// `<f, g> = sum_n f_n conj(g_n) w_n` over the truncated basis.
pub fn inner_product<S: QScalar>(
    f: &TruncatedSeries<S>,
    g: &TruncatedSeries<S>,
    sp: &WeightedSpace<S>,
) -> Result<S> {
    if f.order() != g.order() || f.order() != sp.order() {
        return Err(Error::InvalidParameter(
            "inner product requires matching truncation orders".to_string(),
        ));
    }
    let mut acc = S::zero();
    for n in 0..=f.order() {
        let fg = f.coeff(n).clone() * g.coeff(n).conjugate();
        if !fg.is_zero() {
            acc = acc + fg * sp.weight(n).clone();
        }
    }
    Ok(acc)
}

/// Partial membership sum `sum_{n<=N} w_n |a_n|^2` — a diagnostic for the
/// square-summability criterion, not a convergence proof.
pub fn membership_partial(
    f: &TruncatedSeries<NumScalar>,
    sp: &WeightedSpace<NumScalar>,
) -> Result<f64> {
    if f.order() != sp.order() {
        return Err(Error::InvalidParameter(
            "membership sum requires matching truncation orders".to_string(),
        ));
    }
    Ok((0..=f.order())
        .map(|n| sp.weight(n).re * f.coeff(n).norm_sqr())
        .sum())
}

/// The two reproducing kernels: K1 with factorial weights (values of the
/// q-exponential) and K2 with squared factorial weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelId {
    K1Q,
    K2Q,
}

/// Kernel evaluation `K(z, w)` by series summation with a geometric tail
/// certificate.
pub fn kernel_eval(
    kid: KernelId,
    z: NumScalar,
    w: NumScalar,
    ctx: &QContext<NumericQ>,
) -> Result<Truncated<NumScalar>> {
    let x = z * w.conj();
    match kid {
        KernelId::K1Q => eq_exp(x, ctx, ExpMethod::Series),
        KernelId::K2Q => {
            let q0 = ctx.q0();
            if q0 < 1.0 {
                let radius = 1.0 / (1.0 - q0);
                let radius2 = radius * radius;
                if x.norm() >= radius2 {
                    return Err(Error::Domain(format!(
                        "|z conj(w)| = {} outside the K2 series radius {}",
                        x.norm(),
                        radius2
                    )));
                }
            }
            let tol = ctx.tail_tol();
            let mut sum = NumScalar::one();
            let mut term = NumScalar::one();
            let mut k = 0u32;
            loop {
                k += 1;
                let qk: NumScalar = q_int(k, ctx);
                term = term * x / (qk * qk);
                sum += term;
                let r1 = q_int(k + 1, ctx).re;
                let r = x.norm() / (r1 * r1);
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
                if k > 200_000 {
                    return Err(Error::Divergent {
                        terms: k as usize,
                        context: "K2 kernel series".to_string(),
                    });
                }
            }
        }
    }
}

/// The kernel section K(·, w) as a truncated series in z: coefficient n
/// is conj(w)^n / w_n.
pub fn kernel_section(
    kid: KernelId,
    w: NumScalar,
    ctx: &QContext<NumericQ>,
) -> Result<TruncatedSeries<NumScalar>> {
    let mut coeffs = Vec::with_capacity(ctx.order() + 1);
    let mut wn = NumScalar::one();
    for n in 0..=ctx.order() {
        let f = q_factorial(n as u32, ctx);
        let weight = match kid {
            KernelId::K1Q => f,
            KernelId::K2Q => f * f,
        };
        coeffs.push(wn / weight);
        wn *= w.conj();
    }
    TruncatedSeries::polynomial(ctx.order(), &coeffs)
}

/// Adjoint with respect to the space's weighted inner product:
/// `(T*)_{ba} = conj(T_{ab}) w_a / w_b`. In exact mode the weight ratio is
/// an exact rational function.
pub fn adjoint<S: QScalar>(
    t: &SeriesOperator<S>,
    sp: &WeightedSpace<S>,
) -> Result<SeriesOperator<S>> {
    if t.order() != sp.order() {
        return Err(Error::InvalidParameter(
            "adjoint requires matching truncation orders".to_string(),
        ));
    }
    let n = t.order();
    let mut out = SeriesOperator::zero(n, -t.degree_shift());
    for a in 0..=n {
        for b in 0..=n {
            let e = t.entry(a, b);
            if e.is_zero() {
                continue;
            }
            let ratio = sp.weight_ratio(a, b)?;
            out.set_entry(b, a, e.conjugate() * ratio);
        }
    }
    Ok(out)
}

/// Brute-force adjoint: builds the full Gram matrix from `inner_product`
/// (assuming nothing about its diagonal structure) and solves the matrix
/// equation `G X = T^H G` coming from the defining relation. Used as an
/// independent oracle against [`adjoint`] at small orders.
pub fn adjoint_bruteforce(
    t: &SeriesOperator<NumScalar>,
    sp: &WeightedSpace<NumScalar>,
) -> Result<DMatrix<NumScalar>> {
    let n = t.order() + 1;
    if sp.order() + 1 != n {
        return Err(Error::InvalidParameter(
            "adjoint requires matching truncation orders".to_string(),
        ));
    }
    let mut gram = DMatrix::<NumScalar>::zeros(n, n);
    for a in 0..n {
        let ea = TruncatedSeries::monomial(t.order(), a)?;
        for b in 0..n {
            let eb = TruncatedSeries::monomial(t.order(), b)?;
            gram[(a, b)] = inner_product(&ea, &eb, sp)?;
        }
    }
    let tm = DMatrix::<NumScalar>::from_fn(n, n, |r, c| *t.entry(r, c));
    let rhs = tm.adjoint() * &gram;
    gram.lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem("Gram matrix"))
}

/// Note attached to reports about the adjoint of the q-difference operator
/// in the squared-weight space.
pub const RQSTAR_NOTE: &str = "adjoint(R_q) in the squared-weight space acts as \
e_n -> e_{n+1}/[n+1]_q, i.e. it coincides with the q-antiderivative; the closed form \
e_{n+1}/[n]_q sometimes quoted for it fails the defining inner-product relation \
(and is singular at n = 0 under the [0]_q = 0 convention), so the implementation \
derives the adjoint from the inner product and cross-checks it by a dense solve.";

/// Catalog of adjoint/structural identities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpaceIdentity {
    /// adjoint(R_q) = M_z in the factorial-weight space.
    RqStarEqMz,
    /// adjoint(∂) = M_z ∂ adjoint(R_0), with coefficient (k+1)/[k+1]_q.
    DStarStructure,
    /// adjoint(M_z) = R_q M_z R_0 in the factorial-weight space.
    MzStarFactored,
    /// I - adjoint(R_q) R_q = C*C in the squared-weight space.
    StructuralF2q,
    /// The operator e_l -> e_{l+1}/[l+1]_q is an isometry of the
    /// squared-weight space.
    R0StarIsometryF2q,
    /// adjoint(R_q) in the squared-weight space equals the Jackson
    /// antiderivative.
    RqStarIsIntegrationF2q,
    /// `<f, K(., w)> = f(w)` (numeric; seeded random polynomials).
    EvalReproducing { seed: u64 },
    /// R_q f = λ f for f = 1/((λ(1-q)z; q)_inf) (numeric; finite
    /// difference application of R_q).
    RqEigenfunction { lambda: f64 },
    /// R_q K1(., w) = conj(w) K1(., w) (numeric; finite difference).
    KernelShiftEigen,
}

impl SpaceIdentity {
    pub fn name(&self) -> &'static str {
        match self {
            SpaceIdentity::RqStarEqMz => "RQSTAR_EQ_MZ",
            SpaceIdentity::DStarStructure => "DSTAR_STRUCTURE",
            SpaceIdentity::MzStarFactored => "MZSTAR_FACTORED",
            SpaceIdentity::StructuralF2q => "STRUCTURAL_F2Q",
            SpaceIdentity::R0StarIsometryF2q => "R0STAR_ISOMETRY_F2Q",
            SpaceIdentity::RqStarIsIntegrationF2q => "RQSTAR_IS_INTEGRATION_F2Q",
            SpaceIdentity::EvalReproducing { .. } => "EVAL_REPRODUCING",
            SpaceIdentity::RqEigenfunction { .. } => "RQ_EIGENFUNCTION",
            SpaceIdentity::KernelShiftEigen => "KERNEL_SHIFT_EIGEN",
        }
    }

    /// Default top-column margin: the maximal upward degree shift in the
    /// identity's operator words.
    pub fn default_margin(&self) -> usize {
        match self {
            SpaceIdentity::RqStarEqMz
            | SpaceIdentity::MzStarFactored
            | SpaceIdentity::R0StarIsometryF2q
            | SpaceIdentity::RqStarIsIntegrationF2q => 1,
            SpaceIdentity::DStarStructure => 2,
            SpaceIdentity::StructuralF2q => 0,
            _ => 0,
        }
    }
}

/// The rank-one operator C*C (projection onto the constants; C f = f(0)).
fn cstar_c<S: QScalar>(order: usize) -> SeriesOperator<S> {
    let mut op = SeriesOperator::zero(order, 0);
    op.set_entry(0, 0, S::one());
    op
}

/// Verifies a structural identity ((a)–(f) of the catalog) in either mode,
/// or one of the analytic checks ((g)–(i)) in numeric mode.
pub fn verify_space_identity<M: QMode>(
    id: SpaceIdentity,
    ctx: &QContext<M>,
    margin: Option<usize>,
    tol: Option<f64>,
) -> Result<Report> {
    let margin = margin.unwrap_or_else(|| id.default_margin());
    let tol = tol.unwrap_or(DEFAULT_NUMERIC_IDENTITY_TOL);
    match id {
        SpaceIdentity::RqStarEqMz => {
            let sp = h2q(ctx);
            let defect = adjoint(&op_rq(ctx), &sp)?.sub(&op_mz(ctx))?;
            Ok(report_from_defect(
                id.name(),
                &defect,
                ctx,
                margin,
                tol,
                json!({"space": "H2Q"}),
            ))
        }
        SpaceIdentity::DStarStructure => {
            let sp = h2q(ctx);
            let dstar = adjoint(&op_derivative(ctx), &sp)?;
            let rhs = op_mz(ctx)
                .compose(&op_derivative(ctx))?
                .compose(&adjoint(&op_r0(ctx), &sp)?)?;
            let defect = dstar.sub(&rhs)?;
            let mut report = report_from_defect(
                id.name(),
                &defect,
                ctx,
                margin,
                tol,
                json!({"space": "H2Q", "coefficient_rule": "(k+1)/[k+1]_q"}),
            );
            // Also pin the subdiagonal coefficients of adjoint(∂) directly.
            let mut coeff_ok = true;
            for k in 0..ctx.order() {
                let expect = M::Scalar::from_integer(k as i64 + 1)
                    .try_div(&q_int(k as u32 + 1, ctx))?;
                let got = dstar.entry(k + 1, k).clone();
                let diff = got - expect;
                match diff.defect_norm() {
                    Some(m) => coeff_ok &= m <= tol,
                    None => coeff_ok &= diff.is_zero(),
                }
            }
            report.holds &= coeff_ok;
            Ok(report)
        }
        SpaceIdentity::MzStarFactored => {
            let sp = h2q(ctx);
            let rhs = op_rq(ctx).compose(&op_mz(ctx))?.compose(&op_r0(ctx))?;
            let defect = adjoint(&op_mz(ctx), &sp)?.sub(&rhs)?;
            Ok(report_from_defect(
                id.name(),
                &defect,
                ctx,
                margin,
                tol,
                json!({"space": "H2Q"}),
            ))
        }
        SpaceIdentity::StructuralF2q => {
            let sp = f2q(ctx);
            let rq = op_rq(ctx);
            let lhs = SeriesOperator::identity(ctx.order())
                .sub(&adjoint(&rq, &sp)?.compose(&rq)?)?;
            let defect = lhs.sub(&cstar_c(ctx.order()))?;
            Ok(report_from_defect(
                id.name(),
                &defect,
                ctx,
                margin,
                tol,
                json!({
                    "space": "F2Q",
                    "defect_is": "rank-one projection onto e_0",
                }),
            ))
        }
        SpaceIdentity::R0StarIsometryF2q => {
            // The operator in question is e_l -> e_{l+1}/[l+1]_q, i.e. the
            // adjoint of R_0 taken in the factorial-weight space; the claim
            // is that it is isometric for the squared weights.
            let v = adjoint(&op_r0(ctx), &h2q(ctx))?;
            let sp = f2q(ctx);
            let defect = adjoint(&v, &sp)?
                .compose(&v)?
                .sub(&SeriesOperator::identity(ctx.order()))?;
            Ok(report_from_defect(
                id.name(),
                &defect,
                ctx,
                margin,
                tol,
                json!({
                    "space": "F2Q",
                    "operator": "e_l -> e_{l+1}/[l+1]_q",
                    "check": "V* V = I on the squared-weight space",
                }),
            ))
        }
        SpaceIdentity::RqStarIsIntegrationF2q => {
            let sp = f2q(ctx);
            let defect = adjoint(&op_rq(ctx), &sp)?.sub(&op_jackson_antiderivative(ctx))?;
            Ok(report_from_defect(
                id.name(),
                &defect,
                ctx,
                margin,
                tol,
                json!({"space": "F2Q", "note": RQSTAR_NOTE}),
            ))
        }
        SpaceIdentity::EvalReproducing { seed } => {
            let nctx = require_numeric(ctx)?;
            verify_eval_reproducing(&nctx, seed, tol)
        }
        SpaceIdentity::RqEigenfunction { lambda } => {
            let nctx = require_numeric(ctx)?;
            verify_rq_eigenfunction(&nctx, lambda, tol)
        }
        SpaceIdentity::KernelShiftEigen => {
            let nctx = require_numeric(ctx)?;
            verify_kernel_shift_eigen(&nctx, tol)
        }
    }
}

fn require_numeric<M: QMode>(ctx: &QContext<M>) -> Result<QContext<NumericQ>> {
    match ctx.mode.numeric_q() {
        Some(q0) => Ok(QContext::numeric(q0, ctx.order())?.with_tail_tol(ctx.tail_tol())),
        None => Err(Error::Unsupported(
            "this identity is checked numerically; use a numeric context".to_string(),
        )),
    }
}

/// Reproducing property `<f, K(., w)> = f(w)` for seeded random
/// polynomials of degree <= N/2 and |w| <= 0.5/(1-q).
fn verify_eval_reproducing(ctx: &QContext<NumericQ>, seed: u64, tol: f64) -> Result<Report> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let q0 = ctx.q0();
    let w_radius = if q0 < 1.0 { 0.5 / (1.0 - q0) } else { 0.5 };
    let sp = h2q(ctx);
    let deg = ctx.order() / 2;
    let mut max_resid = 0.0f64;
    let mut checks = 0usize;
    for _ in 0..5 {
        let coeffs: Vec<NumScalar> = (0..=deg)
            .map(|_| NumScalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = TruncatedSeries::polynomial(ctx.order(), &coeffs)?;
        for k in 0..8 {
            let theta = std::f64::consts::TAU * (k as f64) / 8.0;
            let w = NumScalar::from_polar(w_radius * 0.9, theta);
            let section = kernel_section(KernelId::K1Q, w, ctx)?;
            let ip = inner_product(&f, &section, &sp)?;
            let direct = f.eval(&w);
            max_resid = max_resid.max((ip - direct).norm());
            checks += 1;
        }
    }
    Ok(Report::new(
        "EVAL_REPRODUCING",
        ctx.mode.mode(),
        ctx.mode.numeric_q(),
        ctx.order(),
    )
    .with_outcome(max_resid <= tol, Defect::Magnitude(max_resid))
    .with_details(json!({
        "seed": seed,
        "polynomials": 5,
        "degree": deg,
        "w_points": 8,
        "w_radius": w_radius * 0.9,
        "checks": checks,
    })))
}

/// Applies the q-difference quotient `(f(z) - f(qz)) / ((1-q) z)` directly,
/// exercising the divided-difference definition on non-polynomial data.
fn finite_difference_rq(
    f: &dyn Fn(NumScalar) -> Result<NumScalar>,
    z: NumScalar,
    q0: f64,
) -> Result<NumScalar> {
    if q0 >= 1.0 {
        return Err(Error::Unsupported(
            "finite-difference R_q needs q < 1".to_string(),
        ));
    }
    Ok((f(z)? - f(z * q0)?) / (z * (1.0 - q0)))
}

/// Eigenfunction check: f(z) = 1/((λ(1-q) z; q)_inf) satisfies R_q f = λ f.
fn verify_rq_eigenfunction(ctx: &QContext<NumericQ>, lambda: f64, tol: f64) -> Result<Report> {
    let q0 = ctx.q0();
    if q0 >= 1.0 {
        return Err(Error::Unsupported(
            "eigenfunction check applies R_q as a finite difference; q must be < 1".to_string(),
        ));
    }
    let f = |z: NumScalar| -> Result<NumScalar> {
        let p = pochhammer_inf(z * (lambda * (1.0 - q0)), ctx)?;
        Ok(p.value.finv())
    };
    let mut max_resid = 0.0f64;
    let mut points = 0usize;
    for r in [0.3, 0.9, 1.5] {
        for k in 0..8 {
            let theta = std::f64::consts::TAU * (k as f64) / 8.0;
            let z = NumScalar::from_polar(r, theta);
            // Stay away from the product's zeros.
            if (lambda * (1.0 - q0)).abs() * z.norm() >= 0.95 {
                continue;
            }
            let lhs = finite_difference_rq(&f, z, q0)?;
            let rhs = f(z)? * lambda;
            max_resid = max_resid.max((lhs - rhs).norm());
            points += 1;
        }
    }
    Ok(Report::new(
        "RQ_EIGENFUNCTION",
        ctx.mode.mode(),
        ctx.mode.numeric_q(),
        ctx.order(),
    )
    .with_outcome(max_resid <= tol, Defect::Magnitude(max_resid))
    .with_details(json!({
        "lambda": lambda,
        "grid_radii": [0.3, 0.9, 1.5],
        "points": points,
        "application": "finite difference (f(z)-f(qz))/((1-q)z)",
    })))
}

/// Kernel shift: `R_q K1(., w) = conj(w) K1(., w)`, applied as a finite
/// difference in z.
fn verify_kernel_shift_eigen(ctx: &QContext<NumericQ>, tol: f64) -> Result<Report> {
    let q0 = ctx.q0();
    if q0 >= 1.0 {
        return Err(Error::Unsupported(
            "kernel shift check applies R_q as a finite difference; q must be < 1".to_string(),
        ));
    }
    let radius = 1.0 / (1.0 - q0);
    let mut max_resid = 0.0f64;
    let mut points = 0usize;
    for (rw, rz) in [(0.3, 0.5), (0.5, 0.8), (0.8, 0.6)] {
        for k in 0..6 {
            let theta = std::f64::consts::TAU * (k as f64) / 6.0;
            let w = NumScalar::from_polar(rw * radius.sqrt() * 0.9, theta);
            let z0 = NumScalar::from_polar(rz * radius.sqrt() * 0.9, theta / 2.0 + 0.3);
            let g = |z: NumScalar| -> Result<NumScalar> {
                Ok(eq_exp(z * w.conj(), ctx, ExpMethod::Series)?.value)
            };
            let lhs = finite_difference_rq(&g, z0, q0)?;
            let rhs = w.conj() * g(z0)?;
            max_resid = max_resid.max((lhs - rhs).norm());
            points += 1;
        }
    }
    Ok(Report::new(
        "KERNEL_SHIFT_EIGEN",
        ctx.mode.mode(),
        ctx.mode.numeric_q(),
        ctx.order(),
    )
    .with_outcome(max_resid <= tol, Defect::Magnitude(max_resid))
    .with_details(json!({
        "points": points,
        "application": "finite difference (g(z)-g(qz))/((1-q)z) on g = K1(., w)",
    })))
}

/// The intertwining map: z^n -> z^n/[n]_q!, coefficient-wise.
pub fn tq_map<M: QMode>(
    f: &TruncatedSeries<M::Scalar>,
    ctx: &QContext<M>,
) -> Result<TruncatedSeries<M::Scalar>> {
    if f.order() != ctx.order() {
        return Err(Error::InvalidParameter(
            "series order does not match context".to_string(),
        ));
    }
    let factorials: Vec<M::Scalar> = (0..=ctx.order())
        .map(|n| q_factorial(n as u32, ctx))
        .collect();
    Ok(f.map_indexed(|n, c| {
        c.try_div(&factorials[n])
            .expect("q-factorials are nonzero")
    }))
}

/// T_q as an operator matrix (diagonal 1/[n]_q!).
pub fn tq_operator<M: QMode>(ctx: &QContext<M>) -> SeriesOperator<M::Scalar> {
    let mut op = SeriesOperator::zero(ctx.order(), 0);
    for n in 0..=ctx.order() {
        let inv = M::Scalar::one()
            .try_div(&q_factorial(n as u32, ctx))
            .expect("q-factorials are nonzero");
        op.set_entry(n, n, inv);
    }
    op
}

/// Verifies that T_q intertwines R_q with R_0 (`R_q T_q = T_q R_0`) and is
/// an isometry from unit weights into the squared weights. Returns the
/// two reports in that order.
pub fn verify_tq<M: QMode>(ctx: &QContext<M>, tol: Option<f64>) -> Result<Vec<Report>> {
    let tol = tol.unwrap_or(DEFAULT_NUMERIC_IDENTITY_TOL);
    let t = tq_operator(ctx);
    let defect = op_rq(ctx).compose(&t)?.sub(&t.compose(&op_r0(ctx))?)?;
    let intertwine = report_from_defect(
        "TQ_INTERTWINE",
        &defect,
        ctx,
        1,
        tol,
        json!({"relation": "R_q T_q = T_q R_0"}),
    );

    // Isometry: <T e_n, T e_m> over the squared weights equals δ_{nm}.
    let sp = f2q(ctx);
    let mut holds = true;
    let mut max_norm = 0.0f64;
    let mut worst: Option<M::Scalar> = None;
    for n in 0..=ctx.order() {
        let en = TruncatedSeries::monomial(ctx.order(), n)?;
        let tn = t.apply(&en)?;
        for m in n..=ctx.order() {
            let em = TruncatedSeries::monomial(ctx.order(), m)?;
            let tm = t.apply(&em)?;
            let ip = inner_product(&tn, &tm, &sp)?;
            let expect = if n == m {
                M::Scalar::one()
            } else {
                M::Scalar::zero()
            };
            let diff = ip - expect;
            match diff.defect_norm() {
                Some(v) => {
                    if v > max_norm {
                        max_norm = v;
                        worst = Some(diff.clone());
                    }
                    holds &= v <= tol;
                }
                None => {
                    if !diff.is_zero() {
                        holds = false;
                        worst.get_or_insert(diff);
                    }
                }
            }
        }
    }
    let max_defect = if M::Scalar::EXACT {
        match worst {
            None => Defect::zero_symbolic(),
            Some(wv) => Defect::Symbolic(wv.to_string()),
        }
    } else {
        Defect::Magnitude(max_norm)
    };
    let isometry = Report::new(
        "TQ_ISOMETRY",
        ctx.mode.mode(),
        ctx.mode.numeric_q(),
        ctx.order(),
    )
    .with_outcome(holds, max_defect)
    .with_details(json!({"target": "orthonormal images in the squared-weight space"}));

    Ok(vec![intertwine, isometry])
}

/// Which Gram matrix to test for positivity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramKernel {
    K1Q,
    K2Q,
    /// The difference K1 - K2 (contractive inclusion of the
    /// squared-weight space).
    K1MinusK2,
}

/// Minimum eigenvalue of the Hermitian Gram matrix of kernel sections at
/// the given points. The matrix is Hermitized before the eigensolve to
/// shed roundoff asymmetry.
pub fn gram_psd_check(
    kernel: GramKernel,
    points: &[NumScalar],
    ctx: &QContext<NumericQ>,
) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidParameter(
            "gram check needs at least one point".to_string(),
        ));
    }
    let n = points.len();
    let mut g = DMatrix::<NumScalar>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let entry = match kernel {
                GramKernel::K1Q => kernel_eval(KernelId::K1Q, points[i], points[j], ctx)?.value,
                GramKernel::K2Q => kernel_eval(KernelId::K2Q, points[i], points[j], ctx)?.value,
                GramKernel::K1MinusK2 => {
                    kernel_eval(KernelId::K1Q, points[i], points[j], ctx)?.value
                        - kernel_eval(KernelId::K2Q, points[i], points[j], ctx)?.value
                }
            };
            g[(i, j)] = entry;
        }
    }
    let herm = (&g + g.adjoint()) * NumScalar::new(0.5, 0.0);
    let eigs = herm.symmetric_eigenvalues();
    Ok(eigs.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Largest singular value of multiplication-by-z in orthonormalized
/// factorial-weight coordinates at the context's order. Bounded by
/// 1/(1-q); the truncated value increases monotonically with N.
pub fn mz_norm_bound(ctx: &QContext<NumericQ>) -> Result<f64> {
    let q0 = ctx.q0();
    if q0 >= 1.0 {
        return Err(Error::Unsupported(
            "the multiplication operator is unbounded at q = 1".to_string(),
        ));
    }
    let n = ctx.order();
    // M_z ẽ_n = sqrt([n+1]_q) ẽ_{n+1} on the orthonormal basis
    // ẽ_n = e_n / sqrt([n]_q!).
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    for k in 0..n {
        m[(k + 1, k)] = q_int(k as u32 + 1, ctx).re.sqrt();
    }
    let svals = m.singular_values();
    Ok(svals.iter().cloned().fold(0.0f64, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qscalar::{ExactQ, QPoly, QRat};

    fn ectx() -> QContext<ExactQ> {
        QContext::exact(16)
    }

    fn rat(coeffs: &[i64]) -> QRat {
        QRat::from_poly(QPoly::from_integers(coeffs))
    }

    #[test]
    fn weights_match_conventions() {
        let ctx = ectx();
        let h = h2q(&ctx);
        let f = f2q(&ctx);
        let hardy_sp = hardy(&ctx);
        assert!(h.weight(0).is_one() && f.weight(0).is_one());
        // w_2 = (1+q) in H2Q, (1+q)^2 in F2Q
        assert_eq!(h.weight(2), &rat(&[1, 1]));
        assert_eq!(f.weight(2), &rat(&[1, 1]).mul_ref(&rat(&[1, 1])));
        assert!(hardy_sp.weight(7).is_one());
    }

    #[test]
    fn inner_product_examples() {
        let ctx = ectx();
        let z2 = TruncatedSeries::monomial(ctx.order(), 2).unwrap();
        let z3 = TruncatedSeries::monomial(ctx.order(), 3).unwrap();
        // <z^2, z^2> in the factorial-weight space is [2]_q! = 1+q
        let ip = inner_product(&z2, &z2, &h2q(&ctx)).unwrap();
        assert_eq!(ip, q_factorial(2, &ctx));
        assert_eq!(ip, rat(&[1, 1]));
        // orthogonality
        assert!(inner_product(&z2, &z3, &f2q(&ctx)).unwrap().is_zero());
        // numeric F2Q at q = 0.5: ([2]_{0.5}!)^2 = 1.5^2
        let nctx = QContext::numeric(0.5, 16).unwrap();
        let z2n: TruncatedSeries<NumScalar> = TruncatedSeries::monomial(16, 2).unwrap();
        let ip = inner_product(&z2n, &z2n, &f2q(&nctx)).unwrap();
        assert!((ip.re - 2.25).abs() < 1e-15);
    }

    #[test]
    fn membership_diagnostic() {
        let nctx = QContext::numeric(0.5, 64).unwrap();
        let sp = h2q(&nctx);
        let zero = TruncatedSeries::zero(64);
        assert_eq!(membership_partial(&zero, &sp).unwrap(), 0.0);
        let e3: TruncatedSeries<NumScalar> = TruncatedSeries::monomial(64, 3).unwrap();
        let w3 = q_factorial(3, &nctx).re;
        assert!((membership_partial(&e3, &sp).unwrap() - w3).abs() < 1e-14);
        // a_n = ((1-q) 0.9)^n against a direct-summation oracle
        let q0 = 0.5;
        let coeffs: Vec<NumScalar> = (0..=64)
            .map(|n| NumScalar::new(((1.0 - q0) * 0.9f64).powi(n), 0.0))
            .collect();
        let f = TruncatedSeries::polynomial(64, &coeffs).unwrap();
        let got = membership_partial(&f, &sp).unwrap();
        let oracle: f64 = (0..=64)
            .map(|n| q_factorial(n as u32, &nctx).re * coeffs[n].norm_sqr())
            .sum();
        assert!((got - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
    }

    #[test]
    fn kernel_limits() {
        // K1 at q=0 is the Szegő kernel 1/(1 - z w̄)
        let hardy_ctx = QContext::numeric(0.0, 16).unwrap();
        let z = NumScalar::new(0.4, 0.1);
        let w = NumScalar::new(0.3, -0.2);
        let v = kernel_eval(KernelId::K1Q, z, w, &hardy_ctx).unwrap().value;
        let direct = (NumScalar::one() - z * w.conj()).finv();
        assert!((v - direct).norm() < 1e-13);
        // K1(z, 0) = 1
        let any = QContext::numeric(0.7, 16).unwrap();
        let v = kernel_eval(KernelId::K1Q, z, NumScalar::zero(), &any)
            .unwrap()
            .value;
        assert_eq!(v, NumScalar::one());
        // K2 at q=1, z=w=1: sum 1/(n!)^2 = 2.2795853023360673 (modified
        // Bessel I_0(2); frozen from a direct series oracle)
        let fock = QContext::numeric(1.0, 16).unwrap();
        let v = kernel_eval(KernelId::K2Q, NumScalar::one(), NumScalar::one(), &fock)
            .unwrap()
            .value;
        assert!((v.re - 2.2795853023360673).abs() < 1e-13);
    }

    #[test]
    fn adjoint_matches_known_actions() {
        let ctx = ectx();
        let h = h2q(&ctx);
        // adjoint(R_q, H2Q) = M_z on all columns (both top columns vanish)
        let rqstar = adjoint(&op_rq(&ctx), &h).unwrap();
        let mz = op_mz(&ctx);
        for c in 0..=ctx.order() {
            for r in 0..=ctx.order() {
                assert_eq!(rqstar.entry(r, c), mz.entry(r, c), "entry ({r},{c})");
            }
        }
        // adjoint(R_0, H2Q): e_l -> e_{l+1}/[l+1]_q
        let r0star = adjoint(&op_r0(&ctx), &h).unwrap();
        for l in 0..ctx.order() {
            let expect = QRat::one().try_div(&q_int(l as u32 + 1, &ctx)).unwrap();
            assert_eq!(r0star.entry(l + 1, l), &expect);
        }
        // adjoint of the identity is the identity in any space
        let idop = SeriesOperator::<QRat>::identity(ctx.order());
        assert_eq!(adjoint(&idop, &f2q(&ctx)).unwrap(), idop);
    }

    #[test]
    fn adjoint_is_involutive_and_pairs_inner_products() {
        let ctx = ectx();
        for sp in [h2q(&ctx), f2q(&ctx), hardy(&ctx)] {
            for op in [op_rq(&ctx), op_mz(&ctx), op_derivative(&ctx)] {
                let a = adjoint(&op, &sp).unwrap();
                let aa = adjoint(&a, &sp).unwrap();
                assert_eq!(aa, op, "involution in {:?}", sp.kind());
            }
        }
        // <T f, g> = <f, T* g> for polynomials away from the top band
        let sp = h2q(&ctx);
        let t = op_mz(&ctx);
        let tstar = adjoint(&t, &sp).unwrap();
        let f = TruncatedSeries::polynomial(
            ctx.order(),
            &[rat(&[1]), rat(&[0, 1]), rat(&[2]), rat(&[-3])],
        )
        .unwrap();
        let g = TruncatedSeries::polynomial(
            ctx.order(),
            &[rat(&[0]), rat(&[5]), rat(&[1, 1]), rat(&[7])],
        )
        .unwrap();
        let lhs = inner_product(&t.apply(&f).unwrap(), &g, &sp).unwrap();
        let rhs = inner_product(&f, &tstar.apply(&g).unwrap(), &sp).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn structural_identities_exact() {
        let ctx = QContext::exact(16);
        for id in [
            SpaceIdentity::RqStarEqMz,
            SpaceIdentity::DStarStructure,
            SpaceIdentity::MzStarFactored,
            SpaceIdentity::StructuralF2q,
            SpaceIdentity::R0StarIsometryF2q,
            SpaceIdentity::RqStarIsIntegrationF2q,
        ] {
            let report = verify_space_identity(id, &ctx, None, None).unwrap();
            assert!(report.holds, "{}: {:?}", id.name(), report);
            assert_eq!(report.max_defect, Defect::zero_symbolic(), "{}", id.name());
        }
    }

    #[test]
    fn structural_defect_is_rank_one() {
        // I - R_q* R_q: e_0 -> e_0 and e_n -> 0 for n >= 1.
        let ctx = ectx();
        let sp = f2q(&ctx);
        let rq = op_rq(&ctx);
        let prod = adjoint(&rq, &sp).unwrap().compose(&rq).unwrap();
        let e0 = TruncatedSeries::monomial(ctx.order(), 0).unwrap();
        assert!(prod.apply(&e0).unwrap().coeffs().iter().all(QRat::is_zero));
        for n in 1..ctx.order() {
            let en = TruncatedSeries::monomial(ctx.order(), n).unwrap();
            let out = prod.apply(&en).unwrap();
            assert!(out.coeff(n).is_one(), "R_q* R_q e_{n}");
        }
    }

    #[test]
    fn hardy_specialization_at_q0() {
        // At q = 0 the structure identity collapses to ∂* = M_z ∂ M_z.
        let ctx = QContext::numeric(0.0, 16).unwrap();
        let sp = h2q(&ctx);
        let dstar = adjoint(&op_derivative(&ctx), &sp).unwrap();
        let rhs = op_mz(&ctx)
            .compose(&op_derivative(&ctx))
            .unwrap()
            .compose(&op_mz(&ctx))
            .unwrap();
        let defect = dstar.sub(&rhs).unwrap();
        let (_, max_norm, _) = defect.worst_entry_up_to(2);
        assert!(max_norm <= 1e-14);
        // and (a), (b), (c) all hold numerically at q = 0
        for id in [
            SpaceIdentity::RqStarEqMz,
            SpaceIdentity::DStarStructure,
            SpaceIdentity::MzStarFactored,
        ] {
            assert!(
                verify_space_identity(id, &ctx, None, None).unwrap().holds,
                "{}",
                id.name()
            );
        }
    }

    #[test]
    fn tq_checks() {
        let ctx = QContext::exact(16);
        let reports = verify_tq(&ctx, None).unwrap();
        assert!(reports.iter().all(|r| r.holds), "{:?}", reports);
        // T_q z^3 = z^3 / [3]_q!
        let z3 = TruncatedSeries::monomial(ctx.order(), 3).unwrap();
        let t = tq_map(&z3, &ctx).unwrap();
        let expect = QRat::one().try_div(&q_factorial(3, &ctx)).unwrap();
        assert_eq!(t.coeff(3), &expect);
        // q = 0: T_q is the identity
        let hardy_ctx = QContext::numeric(0.0, 16).unwrap();
        let f: TruncatedSeries<NumScalar> = TruncatedSeries::monomial(16, 5).unwrap();
        let tf = tq_map(&f, &hardy_ctx).unwrap();
        assert_eq!(tf.coeff(5).re, 1.0);
    }

    #[test]
    fn bruteforce_adjoint_agrees_with_formula() {
        let ctx = QContext::numeric(0.6, 8).unwrap();
        let sp = f2q(&ctx);
        let rq = op_rq(&ctx);
        let x = adjoint_bruteforce(&rq, &sp).unwrap();
        let formula = adjoint(&rq, &sp).unwrap();
        for r in 0..=8 {
            for c in 0..=8 {
                let d = (x[(r, c)] - formula.entry(r, c)).norm();
                assert!(d <= 1e-12, "entry ({r},{c}) differs by {d}");
            }
        }
        // and the action is e_n -> e_{n+1}/[n+1]_q
        for n in 0..8 {
            let expect = 1.0 / q_int(n as u32 + 1, &ctx).re;
            assert!((x[(n + 1, n)].re - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn gram_psd_single_point() {
        let ctx = QContext::numeric(0.5, 32).unwrap();
        let eig = gram_psd_check(GramKernel::K1Q, &[NumScalar::zero()], &ctx).unwrap();
        assert!((eig - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mz_norm_examples() {
        // q = 0: the shift is an isometry, norm 1.
        let ctx = QContext::numeric(0.0, 32).unwrap();
        let v = mz_norm_bound(&ctx).unwrap();
        assert!(v <= 1.0 + 1e-12 && v > 0.99);
        // q = 0.5: bounded by 2, increasing in N.
        let mut prev = 0.0;
        for n in [16, 32, 64] {
            let ctx = QContext::numeric(0.5, n).unwrap();
            let v = mz_norm_bound(&ctx).unwrap();
            assert!(v <= 2.0 + 1e-10, "norm {v} exceeds 2 at N={n}");
            assert!(v >= prev - 1e-12, "norm not monotone at N={n}");
            prev = v;
        }
    }

    #[test]
    fn analytic_checks_numeric() {
        let ctx = QContext::numeric(0.5, 32).unwrap();
        let g = verify_space_identity(
            SpaceIdentity::EvalReproducing { seed: 0 },
            &ctx,
            None,
            Some(1e-10),
        )
        .unwrap();
        assert!(g.holds, "{:?}", g);
        let h = verify_space_identity(
            SpaceIdentity::RqEigenfunction { lambda: 0.4 },
            &ctx,
            None,
            Some(1e-10),
        )
        .unwrap();
        assert!(h.holds, "{:?}", h);
        let i = verify_space_identity(SpaceIdentity::KernelShiftEigen, &ctx, None, Some(1e-10))
            .unwrap();
        assert!(i.holds, "{:?}", i);
    }

    #[test]
    fn analytic_checks_need_numeric_mode() {
        let ctx = QContext::exact(8);
        assert!(matches!(
            verify_space_identity(SpaceIdentity::KernelShiftEigen, &ctx, None, None),
            Err(Error::Unsupported(_))
        ));
    }
}
