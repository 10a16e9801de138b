//! The q-Jackson integral, the q-integral transform and its convolution
//! structure, moment identities, and the radial measure series.
//!
//! The transform works on functions sampled at the geometric grid
//! x_k = q^{k+1}/(1-q), k = 0..K, which fills (0, q/(1-q)]. All sums are
//! truncated under the context's tail tolerance with the truncation index
//! and a tail estimate recorded. Everything here is numeric with
//! q strictly inside (0, 1) (the grid itself degenerates at the
//! endpoints); the Jackson integral alone also accepts q = 0.

use serde_json::json;

use crate::error::{Error, Result};
use crate::qnum::{pochhammer_inf, q_factorial, QContext, Truncated};
use crate::qscalar::{NumScalar, NumericQ, QMode};
use crate::report::{Defect, Report};

const MIN_GRID: usize = 64;
const HARD_MAX_TERMS: usize = 1 << 20;

fn require_interior_q(ctx: &QContext<NumericQ>) -> Result<f64> {
    let q0 = ctx.q0();
    if q0 <= 0.0 || q0 >= 1.0 {
        return Err(Error::Unsupported(format!(
            "grid transform requires q strictly inside (0, 1), got {q0}"
        )));
    }
    Ok(q0)
}

/// Number of grid points: enough that q^K falls below the tail tolerance,
/// never fewer than 64.
fn grid_len(q0: f64, tail_tol: f64) -> usize {
    let k = (tail_tol.ln() / q0.ln()).ceil();
    (k as usize).max(MIN_GRID)
}

/// A real-valued function sampled on the geometric grid
/// x_k = q^{k+1}/(1-q).
#[derive(Clone, Debug)]
pub struct GridFunction {
    q0: f64,
    values: Vec<f64>,
}

impl GridFunction {
    /// Samples `f` on the grid; the grid length is chosen from the
    /// context's tail tolerance. Errors if any sample is non-finite.
    pub fn sample(ctx: &QContext<NumericQ>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let q0 = require_interior_q(ctx)?;
        let len = grid_len(q0, ctx.tail_tol());
        let mut values = Vec::with_capacity(len);
        let mut x = q0 / (1.0 - q0);
        for _ in 0..len {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::Domain(format!(
                    "grid sample is not finite at x = {x}"
                )));
            }
            values.push(v);
            x *= q0;
        }
        Ok(GridFunction { q0, values })
    }

    /// The constant function.
    pub fn constant(ctx: &QContext<NumericQ>, c: f64) -> Result<Self> {
        GridFunction::sample(ctx, |_| c)
    }

    /// The reciprocal q-exponential on the grid, computed through the
    /// product form: at x_k the argument satisfies x_k (1-q) = q^{k+1}, so
    /// the value is the infinite Pochhammer product at q^{k+1}.
    pub fn eq_exp_reciprocal(ctx: &QContext<NumericQ>) -> Result<Self> {
        let q0 = require_interior_q(ctx)?;
        let len = grid_len(q0, ctx.tail_tol());
        let mut values = Vec::with_capacity(len);
        let mut arg = q0;
        for _ in 0..len {
            let p = pochhammer_inf(NumScalar::new(arg, 0.0), ctx)?;
            values.push(p.value.re);
            arg *= q0;
        }
        Ok(GridFunction { q0, values })
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The k-th grid point q^{k+1}/(1-q).
    pub fn grid_point(&self, k: usize) -> f64 {
        self.q0.powi(k as i32 + 1) / (1.0 - self.q0)
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// The q-Jackson integral `(1-q) a sum_k q^k f(q^k a)` over [0, a],
/// truncated once the summands stay below the tail tolerance; errors if
/// the summands fail to decay (the weighted series must converge
/// absolutely).
pub fn jackson_integral(
    f: impl Fn(f64) -> f64,
    a: f64,
    ctx: &QContext<NumericQ>,
) -> Result<Truncated<f64>> {
    let q0 = ctx.q0();
    if q0 >= 1.0 {
        return Err(Error::Unsupported(
            "the Jackson integral requires q < 1".to_string(),
        ));
    }
    let tol = ctx.tail_tol();
    let mut sum = 0.0f64;
    let mut qk = 1.0f64;
    let mut small_streak = 0usize;
    let mut terms = 0usize;
    let tail_bound;
    loop {
        let t = qk * f(qk * a);
        if !t.is_finite() {
            return Err(Error::Divergent {
                terms,
                context: "Jackson integral summand is not finite".to_string(),
            });
        }
        sum += t;
        terms += 1;
        if t.abs() <= tol * sum.abs().max(1.0) {
            small_streak += 1;
            if small_streak >= 4 && terms >= 8 {
                tail_bound = if q0 > 0.0 {
                    t.abs() * q0 / (1.0 - q0)
                } else {
                    0.0
                };
                break;
            }
        } else {
            small_streak = 0;
        }
        if terms >= HARD_MAX_TERMS {
            return Err(Error::Divergent {
                terms,
                context: "Jackson integral summands did not decay".to_string(),
            });
        }
        qk *= q0;
        if qk == 0.0 {
            // q = 0 (or underflow): only finitely many nonzero summands.
            tail_bound = 0.0;
            break;
        }
    }
    Ok(Truncated {
        value: (1.0 - q0) * a * sum,
        terms,
        tail_bound,
    })
}

/// The q-integral transform at a positive integer argument s:
/// `sum_k q^k (q^k/(1-q))^{s-1} f(q^{k+1}/(1-q))`. Integer arguments are
/// the only ones used by the moment identities; non-integer powers of the
/// grid would need a branch-cut convention that is deliberately not
/// chosen here.
pub fn mq_transform(f: &GridFunction, s: u32, ctx: &QContext<NumericQ>) -> Result<Truncated<f64>> {
    let q0 = require_interior_q(ctx)?;
    if (f.q0 - q0).abs() > f64::EPSILON {
        return Err(Error::GridMismatch(format!(
            "grid built at q = {} used with context q = {}",
            f.q0, q0
        )));
    }
    if s < 1 {
        return Err(Error::InvalidParameter(
            "transform argument must be a positive integer".to_string(),
        ));
    }
    let tol = ctx.tail_tol();
    let base = 1.0 / (1.0 - q0);
    let mut sum = 0.0f64;
    let mut qk = 1.0f64; // q^k
    let mut terms = 0usize;
    let mut last_bound = 0.0f64;
    let sup = f.sup_norm();
    for k in 0..f.len() {
        let xk = qk * base; // q^k/(1-q)
        let t = qk * xk.powi(s as i32 - 1) * f.value(k);
        sum += t;
        terms += 1;
        last_bound = qk * xk.powi(s as i32 - 1) * sup;
        if last_bound <= tol * sum.abs().max(1.0) && k >= 8 {
            break;
        }
        qk *= q0;
    }
    // Remaining summands are dominated by a geometric series with ratio
    // q^s <= q.
    let tail_bound = last_bound * q0 / (1.0 - q0);
    Ok(Truncated {
        value: sum,
        terms,
        tail_bound,
    })
}

/// Grid convolution: `(f1 ∘ f2)` at the m-th grid point is
/// `sum_{k=0}^m f1(x_k) f2(x_{m-k})`.
pub fn grid_convolution(f1: &GridFunction, f2: &GridFunction) -> Result<GridFunction> {
    if (f1.q0 - f2.q0).abs() > f64::EPSILON || f1.len() != f2.len() {
        return Err(Error::GridMismatch(
            "convolution requires identical grids".to_string(),
        ));
    }
    let n = f1.len();
    let mut values = vec![0.0f64; n];
    for (m, slot) in values.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..=m {
            acc += f1.value(k) * f2.value(m - k);
        }
        *slot = acc;
    }
    Ok(GridFunction {
        q0: f1.q0,
        values,
    })
}

/// Checks the squared-weight density moment identity
/// `(1/(1-q))^n M_q(E^{-1} ∘ E^{-1})(n+1) = ([n]_q!)²` and reports the
/// relative error.
pub fn density_moment_check(n: u32, ctx: &QContext<NumericQ>, tol: f64) -> Result<Report> {
    let q0 = require_interior_q(ctx)?;
    let e_inv = GridFunction::eq_exp_reciprocal(ctx)?;
    let conv = grid_convolution(&e_inv, &e_inv)?;
    let t = mq_transform(&conv, n + 1, ctx)?;
    let value = (1.0 - q0).powi(-(n as i32)) * t.value;
    let f = q_factorial(n, ctx).re;
    let expected = f * f;
    let rel = (value - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
    Ok(Report::new(
        "DENSITY_MOMENT",
        ctx.mode.mode(),
        ctx.mode.numeric_q(),
        ctx.order(),
    )
    .with_outcome(rel <= tol, Defect::Magnitude(rel))
    .with_details(json!({
        "n": n,
        "value": value,
        "expected": expected,
        "terms": t.terms,
        "tail_bound": t.tail_bound,
    })))
}

/// Radial series of the measure on the disk of radius 1/(1-q): radii
/// r_k = q^{k/2}/sqrt(1-q) with weights `(q;q)_inf q^k/(q;q)_k`. The
/// weights are positive and sum to 1 (total mass).
#[derive(Clone, Debug)]
pub struct MeasureSeries {
    q0: f64,
    radii: Vec<f64>,
    weights: Vec<f64>,
}

impl MeasureSeries {
    pub fn new(ctx: &QContext<NumericQ>) -> Result<Self> {
        let q0 = require_interior_q(ctx)?;
        let len = grid_len(q0, ctx.tail_tol());
        let qq_inf = pochhammer_inf(NumScalar::new(q0, 0.0), ctx)?.value.re;
        let mut radii = Vec::with_capacity(len);
        let mut weights = Vec::with_capacity(len);
        let mut qk = 1.0f64; // q^k
        let mut poch_k = 1.0f64; // (q;q)_k
        for k in 0..len {
            if k > 0 {
                poch_k *= 1.0 - qk; // now (q;q)_k with qk = q^k
            }
            radii.push((qk / (1.0 - q0)).sqrt());
            weights.push(qq_inf * qk / poch_k);
            qk *= q0;
        }
        Ok(MeasureSeries {
            q0,
            radii,
            weights,
        })
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn radius(&self, k: usize) -> f64 {
        self.radii[k]
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `<z^n, z^m>` under the radial measure: the angular integral contributes
/// δ_{nm} analytically, the radial part is
/// `(q;q)_inf sum_k q^{(n+1)k}/(q;q)_k / (1-q)^n`, which equals [n]_q!.
pub fn measure_inner_product(
    n: u32,
    m: u32,
    ctx: &QContext<NumericQ>,
) -> Result<Truncated<f64>> {
    let q0 = require_interior_q(ctx)?;
    if n != m {
        return Ok(Truncated {
            value: 0.0,
            terms: 0,
            tail_bound: 0.0,
        });
    }
    let tol = ctx.tail_tol();
    let qq_inf = pochhammer_inf(NumScalar::new(q0, 0.0), ctx)?.value.re;
    let ratio = q0.powi(n as i32 + 1);
    let mut sum = 0.0f64;
    let mut num = 1.0f64; // q^{(n+1)k}
    let mut qk = 1.0f64; // q^k
    let mut poch_k = 1.0f64; // (q;q)_k
    let mut terms = 0usize;
    let last;
    loop {
        if terms > 0 {
            qk *= q0;
            poch_k *= 1.0 - qk;
        }
        let t = num / poch_k;
        sum += t;
        terms += 1;
        num *= ratio;
        // (q;q)_k decreases to (q;q)_inf > 0, so the terms are dominated
        // by a geometric series with ratio q^{n+1}.
        if t.abs() <= tol * sum.abs().max(1.0) && terms >= 8 {
            last = t.abs();
            break;
        }
        if terms >= HARD_MAX_TERMS {
            return Err(Error::Divergent {
                terms,
                context: "measure radial series".to_string(),
            });
        }
    }
    let scale = qq_inf / (1.0 - q0).powi(n as i32);
    Ok(Truncated {
        value: scale * sum,
        terms,
        tail_bound: scale * last * ratio / (1.0 - ratio),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnum::{q_factorial, q_int};
    use crate::series::{op_jackson_antiderivative, TruncatedSeries};

    fn ctx(q0: f64) -> QContext<NumericQ> {
        QContext::numeric(q0, 16).unwrap()
    }

    #[test]
    fn jackson_monomials() {
        // ∫_0^1 x d_q x = 1/(1+q) = 2/3 at q = 0.5
        let c = ctx(0.5);
        let v = jackson_integral(|x| x, 1.0, &c).unwrap();
        assert!((v.value - 2.0 / 3.0).abs() < 1e-14);
        // ∫_0^1 x^2 d_q x = 1/(1+q+q^2) = 1/1.75
        let v = jackson_integral(|x| x * x, 1.0, &c).unwrap();
        assert!((v.value - 1.0 / 1.75).abs() < 1e-14);
        // constant: ∫_0^a 1 = a
        let v = jackson_integral(|_| 1.0, 0.7, &c).unwrap();
        assert!((v.value - 0.7).abs() < 1e-14);
    }

    #[test]
    fn jackson_divergence_detected() {
        // f(x) = 1/x makes every summand equal: no decay.
        let c = ctx(0.5);
        assert!(matches!(
            jackson_integral(|x| 1.0 / x, 1.0, &c),
            Err(Error::Divergent { .. })
        ));
    }

    #[test]
    fn jackson_matches_antiderivative_endpoint() {
        // Two code paths: the grid sum vs the operator z^l -> z^{l+1}/[l+1]_q
        // evaluated at the endpoint.
        for q0 in [0.1, 0.5, 0.9] {
            let c = QContext::numeric(q0, 16).unwrap();
            let anti = op_jackson_antiderivative(&c);
            for l in 0..=6usize {
                for a in [0.3, 1.0] {
                    let grid = jackson_integral(|x| x.powi(l as i32), a, &c).unwrap();
                    let mono: TruncatedSeries<NumScalar> =
                        TruncatedSeries::monomial(16, l).unwrap();
                    let poly = anti.apply(&mono).unwrap();
                    let direct = poly.eval(&NumScalar::new(a, 0.0)).re;
                    assert!(
                        (grid.value - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                        "q={q0}, l={l}, a={a}: {} vs {}",
                        grid.value,
                        direct
                    );
                }
            }
        }
    }

    #[test]
    fn transform_of_constant_is_geometric() {
        // f ≡ 1, s = 1: sum q^k = 1/(1-q)
        let c = ctx(0.5);
        let f = GridFunction::constant(&c, 1.0).unwrap();
        let v = mq_transform(&f, 1, &c).unwrap();
        assert!((v.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn moment_identity() {
        // M_q(E^{-1})(n+1) = [n]_q!
        for q0 in [0.1, 0.5, 0.9] {
            let c = QContext::numeric(q0, 16).unwrap();
            let e_inv = GridFunction::eq_exp_reciprocal(&c).unwrap();
            for n in 0..=10u32 {
                let got = mq_transform(&e_inv, n + 1, &c).unwrap().value;
                let expect = q_factorial(n, &c).re;
                assert!(
                    (got - expect).abs() <= 1e-10 * expect,
                    "q={q0} n={n}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn moment_closed_form_crosscheck() {
        // (q;q)_inf/(1-q)^n sum_k q^{(n+1)k}/(q;q)_k computed independently
        let q0 = 0.5;
        let c = ctx(q0);
        let e_inv = GridFunction::eq_exp_reciprocal(&c).unwrap();
        for n in [0u32, 3, 7] {
            let got = mq_transform(&e_inv, n + 1, &c).unwrap().value;
            let qq_inf = pochhammer_inf(NumScalar::new(q0, 0.0), &c).unwrap().value.re;
            let mut sum = 0.0;
            let mut poch = 1.0;
            for k in 0..200 {
                if k > 0 {
                    poch *= 1.0 - q0.powi(k);
                }
                sum += q0.powi((n as i32 + 1) * k) / poch;
            }
            let closed = qq_inf / (1.0 - q0).powi(n as i32) * sum;
            assert!((got - closed).abs() <= 1e-11 * closed.abs());
        }
    }

    #[test]
    fn convolution_cases() {
        let c = ctx(0.5);
        // f1 = f2 ≡ 1: (f1∘f2)(x_m) = m+1
        let one = GridFunction::constant(&c, 1.0).unwrap();
        let conv = grid_convolution(&one, &one).unwrap();
        for m in 0..6 {
            assert_eq!(conv.value(m), (m + 1) as f64);
        }
        // spike at k = 0: single surviving summand picks out f1 at x_m
        let f1 = GridFunction::sample(&c, |x| 1.0 + x * x).unwrap();
        let spike_values: Vec<f64> = (0..f1.len()).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
        let spike = GridFunction {
            q0: 0.5,
            values: spike_values,
        };
        let conv = grid_convolution(&f1, &spike).unwrap();
        for m in 0..8 {
            assert_eq!(conv.value(m), f1.value(m));
        }
    }

    #[test]
    fn convolution_identity_for_transforms() {
        // M_q(f1) M_q(f2) = (1/(1-q))^n M_q(f1∘f2) at s = n+1
        let q0 = 0.5;
        let c = ctx(q0);
        let fns: Vec<GridFunction> = vec![
            GridFunction::constant(&c, 1.0).unwrap(),
            GridFunction::eq_exp_reciprocal(&c).unwrap(),
            GridFunction::sample(&c, |x| 1.0 - 0.5 * x).unwrap(),
        ];
        for f1 in &fns {
            for f2 in &fns {
                let conv = grid_convolution(f1, f2).unwrap();
                for n in 0..=8u32 {
                    let lhs = mq_transform(f1, n + 1, &c).unwrap().value
                        * mq_transform(f2, n + 1, &c).unwrap().value;
                    let rhs = (1.0 - q0).powi(-(n as i32))
                        * mq_transform(&conv, n + 1, &c).unwrap().value;
                    assert!(
                        (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                        "n={n}: {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn density_moments() {
        let c = ctx(0.5);
        for (n, expect) in [(0u32, 1.0), (2, 2.25)] {
            let report = density_moment_check(n, &c, 1e-8).unwrap();
            assert!(report.holds, "n={n}: {:?}", report);
            let v = report.details["value"].as_f64().unwrap();
            assert!((v - expect).abs() <= 1e-9 * expect.max(1.0));
        }
    }

    #[test]
    fn measure_matches_factorials() {
        for q0 in [0.1, 0.5, 0.9] {
            let c = QContext::numeric(q0, 16).unwrap();
            for n in 0..=10u32 {
                let got = measure_inner_product(n, n, &c).unwrap().value;
                let expect = q_factorial(n, &c).re;
                assert!(
                    (got - expect).abs() <= 1e-10 * expect,
                    "q={q0} n={n}: {got} vs {expect}"
                );
            }
        }
        // orthogonality
        let c = ctx(0.5);
        assert_eq!(measure_inner_product(2, 5, &c).unwrap().value, 0.0);
        // n = m = 3 at q = 0.5: [3]_{0.5}! = 1 * 1.5 * 1.75
        let v = measure_inner_product(3, 3, &c).unwrap().value;
        assert!((v - 2.625).abs() < 1e-12);
    }

    #[test]
    fn measure_total_mass_is_one() {
        for q0 in [0.1, 0.5, 0.9] {
            let c = QContext::numeric(q0, 16).unwrap();
            let ms = MeasureSeries::new(&c).unwrap();
            assert!(ms.weights.iter().all(|w| *w > 0.0));
            assert!(
                (ms.total_mass() - 1.0).abs() <= 1e-12,
                "mass at q={q0}: {}",
                ms.total_mass()
            );
            // radii decrease toward 0
            assert!(ms.radii.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn interior_q_enforced() {
        let c = ctx(0.5);
        let f = GridFunction::constant(&c, 1.0).unwrap();
        let bad = QContext::numeric(0.0, 16).unwrap();
        assert!(GridFunction::constant(&bad, 1.0).is_err());
        assert!(mq_transform(&f, 0, &c).is_err());
        // q-int sanity used in the expected values above
        assert_eq!(q_int(2, &c).re, 1.5);
    }
}
