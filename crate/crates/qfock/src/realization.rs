//! Co-isometric realization on the truncated orthonormalized
//! squared-weight space, and its transfer function.
//!
//! On the orthonormal basis ẽ_n = z^n/[n]_q! the q-difference operator
//! acts as the pure down-shift A ẽ_n = ẽ_{n-1} (independently of q), and
//! evaluation at the origin is the row C = (1, 0, ..., 0). The column
//! [A; C] is an exact isometry of the truncated space, so the defect
//! Δ = I - [A; C][A; C]* is a rank-one projection; its square root
//! supplies the completion [B; D] making [[A, B], [C, D]] co-isometric.
//!
//! The transfer function S(z) = D + zC(I - zA)^{-1}B of the *truncated*
//! model is not the transfer function of the untruncated system: here A is
//! nilpotent and S turns out to be a monomial of modulus |z|^{N+1}, which
//! is checked, not assumed.

use nalgebra::DMatrix;
use num_traits::Zero;
use serde_json::json;

use crate::error::{Error, Result};
use crate::qnum::{q_factorial, QContext};
use crate::qscalar::{NumScalar, NumericQ, QMode};
use crate::report::{Defect, Report};
use crate::series::op_rq;

/// Tolerance used when classifying defect eigenvalues and checking
/// co-isometry residuals.
pub const PSD_TOL: f64 = 1e-12;

/// The block system (A, B, C, D) on the truncated orthonormalized space
/// plus a d-dimensional defect port.
#[derive(Clone, Debug)]
pub struct RealizationSystem {
    order: usize,
    q0: f64,
    a: DMatrix<NumScalar>,
    b: DMatrix<NumScalar>,
    c: DMatrix<NumScalar>,
    d: DMatrix<NumScalar>,
    defect_eigenvalues: Vec<f64>,
}

impl RealizationSystem {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn state_dim(&self) -> usize {
        self.order + 1
    }

    /// Rank of the defect (number of port columns).
    pub fn defect_rank(&self) -> usize {
        self.b.ncols()
    }

    /// Eigenvalues of the defect operator, descending.
    pub fn defect_eigenvalues(&self) -> &[f64] {
        &self.defect_eigenvalues
    }

    pub fn a(&self) -> &DMatrix<NumScalar> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<NumScalar> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<NumScalar> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<NumScalar> {
        &self.d
    }

    /// Multiplies the port block by a unimodular phase, the unitary
    /// freedom left by the square-root completion. Downstream residuals
    /// are invariant under this.
    pub fn with_port_phase(&self, phase: f64) -> RealizationSystem {
        let u = NumScalar::from_polar(1.0, phase);
        let mut out = self.clone();
        out.b *= u;
        out.d *= u;
        out
    }

    /// Max-norm residual of the co-isometry relation MM* = I for the
    /// assembled block matrix M = [[A, B], [C, D]].
    pub fn coisometry_residual(&self) -> f64 {
        let n = self.state_dim();
        let d = self.defect_rank();
        let mut m = DMatrix::<NumScalar>::zeros(n + 1, n + d);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a);
        m.view_mut((0, n), (n, d)).copy_from(&self.b);
        m.view_mut((n, 0), (1, n)).copy_from(&self.c);
        m.view_mut((n, n), (1, d)).copy_from(&self.d);
        let prod = &m * m.adjoint();
        let mut resid = 0.0f64;
        for r in 0..n + 1 {
            for c in 0..n + 1 {
                let expect = if r == c {
                    NumScalar::new(1.0, 0.0)
                } else {
                    NumScalar::new(0.0, 0.0)
                };
                resid = resid.max((prod[(r, c)] - expect).norm());
            }
        }
        resid
    }
}

/// Builds the co-isometric system at the context's order. The defect of
/// the column isometry is eigendecomposed; eigenvalues below -PSD_TOL are
/// rejected, those above PSD_TOL contribute scaled eigenvector columns to
/// the port block.
pub fn build_realization(ctx: &QContext<NumericQ>) -> Result<RealizationSystem> {
    let q0 = ctx.q0();
    if q0 >= 1.0 {
        return Err(Error::Unsupported(
            "realization requires q in [0, 1)".to_string(),
        ));
    }
    let n = ctx.order() + 1;

    // A = matrix of R_q in the orthonormal coordinates ẽ_n = z^n/[n]_q!:
    // R_q ẽ_k = (1/[k]!) Σ_m M_{mk} e_m, so A_{mk} = M_{mk} [m]_q!/[k]_q!
    // with M taken from the series module. On the subdiagonal this is
    // [k]_q [k-1]_q!/[k]_q! = 1: the pure down-shift, independent of q.
    let rq = op_rq(ctx);
    let fact: Vec<f64> = (0..n).map(|k| q_factorial(k as u32, ctx).re).collect();
    let mut a = DMatrix::<NumScalar>::zeros(n, n);
    for m in 0..n {
        for k in 0..n {
            let e = rq.entry(m, k);
            if !e.is_zero() {
                a[(m, k)] = e * (fact[m] / fact[k]);
            }
        }
    }

    // C = evaluation at 0: ẽ_0 = 1, all higher basis vectors vanish there.
    let mut c = DMatrix::<NumScalar>::zeros(1, n);
    c[(0, 0)] = NumScalar::new(1.0, 0.0);

    // Defect Δ = I_{n+1} - [A; C][A; C]*.
    let mut col = DMatrix::<NumScalar>::zeros(n + 1, n);
    col.view_mut((0, 0), (n, n)).copy_from(&a);
    col.view_mut((n, 0), (1, n)).copy_from(&c);
    let mut delta = DMatrix::<NumScalar>::identity(n + 1, n + 1) - &col * col.adjoint();
    // Hermitize to shed roundoff asymmetry before the eigensolve.
    delta = (&delta + delta.adjoint()) * NumScalar::new(0.5, 0.0);

    let eig = nalgebra::SymmetricEigen::new(delta);
    let mut pairs: Vec<(f64, usize)> = eig
        .eigenvalues
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());

    if let Some(&(min_eig, _)) = pairs.last() {
        if min_eig < -PSD_TOL {
            return Err(Error::DefectNotPsd {
                min_eigenvalue: min_eig,
            });
        }
    }

    let kept: Vec<(f64, usize)> = pairs.iter().cloned().filter(|(v, _)| *v > PSD_TOL).collect();
    let d_rank = kept.len();
    let mut b = DMatrix::<NumScalar>::zeros(n, d_rank);
    let mut d = DMatrix::<NumScalar>::zeros(1, d_rank);
    for (j, (val, idx)) in kept.iter().enumerate() {
        let v = eig.eigenvectors.column(*idx);
        let s = val.sqrt();
        for r in 0..n {
            b[(r, j)] = v[r] * s;
        }
        d[(0, j)] = v[n] * s;
    }

    Ok(RealizationSystem {
        order: ctx.order(),
        q0,
        a,
        b,
        c,
        d,
        defect_eigenvalues: pairs.into_iter().map(|(v, _)| v).collect(),
    })
}

/// Transfer function value S(z) = D + zC(I - zA)^{-1}B as a 1 x d row.
pub fn eval_sq_row(sys: &RealizationSystem, z: NumScalar) -> Result<DMatrix<NumScalar>> {
    let n = sys.state_dim();
    let lhs = DMatrix::<NumScalar>::identity(n, n) - sys.a.clone() * z;
    let x = lhs
        .lu()
        .solve(&sys.b)
        .ok_or(Error::SingularSystem("resolvent solve (I - zA)"))?;
    Ok(sys.d.clone() + (&sys.c * x) * z)
}

/// Scalar transfer function for the rank-one defect case.
pub fn eval_sq(sys: &RealizationSystem, z: NumScalar) -> Result<NumScalar> {
    let row = eval_sq_row(sys, z)?;
    if row.ncols() != 1 {
        return Err(Error::InvalidParameter(format!(
            "transfer function is matrix-valued (defect rank {})",
            row.ncols()
        )));
    }
    Ok(row[(0, 0)])
}

/// Residual of the kernel identity
/// `(1 - S(z) S(w)*) / (1 - z conj(w)) = C (I - zA)^{-1} (I - conj(w) A*)^{-1} C*`
/// at one pair of disk points.
pub fn verify_schur_kernel(
    sys: &RealizationSystem,
    z: NumScalar,
    w: NumScalar,
) -> Result<f64> {
    let zw = z * w.conj();
    if (NumScalar::new(1.0, 0.0) - zw).norm() < 1e-12 {
        return Err(Error::Domain(
            "kernel identity is singular at z conj(w) = 1".to_string(),
        ));
    }
    let n = sys.state_dim();
    let ident = DMatrix::<NumScalar>::identity(n, n);

    let sz = eval_sq_row(sys, z)?;
    let sw = eval_sq_row(sys, w)?;
    let ss = (&sz * sw.adjoint())[(0, 0)];
    let lhs = (NumScalar::new(1.0, 0.0) - ss) / (NumScalar::new(1.0, 0.0) - zw);

    let cstar = sys.c.adjoint();
    let right = (&ident - sys.a.adjoint() * w.conj())
        .lu()
        .solve(&cstar)
        .ok_or(Error::SingularSystem("resolvent solve (I - wA)*"))?;
    let full = (&ident - sys.a.clone() * z)
        .lu()
        .solve(&right)
        .ok_or(Error::SingularSystem("resolvent solve (I - zA)"))?;
    let rhs = (&sys.c * full)[(0, 0)];

    Ok((lhs - rhs).norm() / rhs.norm().max(1.0))
}

/// Summary of the realization checks at one q, used by the verification
/// suite: co-isometry residual, defect spectrum, the kernel identity on a
/// grid, the Schur bound, the |z|^{N+1} modulus pattern, and phase
/// invariance of the kernel residual.
pub fn realization_reports(ctx: &QContext<NumericQ>, seed: u64) -> Result<Vec<Report>> {
    use rand::{Rng, SeedableRng};
    let sys = build_realization(ctx)?;
    let q0 = sys.q0();
    let order = sys.order();
    let mut reports = Vec::new();

    let coiso = sys.coisometry_residual();
    let spectrum_ok = sys
        .defect_eigenvalues()
        .iter()
        .all(|v| v.abs() <= PSD_TOL || (v - 1.0).abs() <= PSD_TOL);
    reports.push(
        Report::new("REALIZATION_COISOMETRY", ctx.mode.mode(), Some(q0), order)
            .with_outcome(
                coiso <= PSD_TOL && sys.defect_rank() == 1 && spectrum_ok,
                Defect::Magnitude(coiso),
            )
            .with_details(json!({
                "N": order,
                "q": q0,
                "defect_rank": sys.defect_rank(),
                "coisometry_residual": coiso,
                "defect_spectrum_in_01": spectrum_ok,
            })),
    );

    // Kernel identity on a 10x10 grid with |z|, |w| <= 0.95.
    let grid: Vec<NumScalar> = (0..10)
        .map(|k| {
            let r = 0.95 * (k as f64 + 1.0) / 10.0;
            let theta = std::f64::consts::TAU * (k as f64) / 10.0 + 0.1;
            NumScalar::from_polar(r, theta)
        })
        .collect();
    let mut kernel_max = 0.0f64;
    for z in &grid {
        for w in &grid {
            kernel_max = kernel_max.max(verify_schur_kernel(&sys, *z, *w)?);
        }
    }
    reports.push(
        Report::new("REALIZATION_SCHUR_KERNEL", ctx.mode.mode(), Some(q0), order)
            .with_outcome(kernel_max <= 1e-10, Defect::Magnitude(kernel_max))
            .with_details(json!({
                "N": order,
                "q": q0,
                "grid": "10x10, |z|,|w| <= 0.95",
                "kernel_residual_max": kernel_max,
            })),
    );

    // Schur bound |S(z)| <= 1 on a 100-point disk grid, and the truncated
    // model's |S(z)| = |z|^{N+1} pattern.
    let mut bound_max = 0.0f64;
    let mut modulus_defect = 0.0f64;
    for k in 0..100 {
        let r = (k as f64 + 1.0) / 100.0;
        let theta = std::f64::consts::TAU * (k as f64) / 100.0;
        let z = NumScalar::from_polar(r, theta);
        let s = eval_sq(&sys, z)?;
        bound_max = bound_max.max(s.norm());
        modulus_defect = modulus_defect.max((s.norm() - r.powi(order as i32 + 1)).abs());
    }
    reports.push(
        Report::new("REALIZATION_SCHUR_BOUND", ctx.mode.mode(), Some(q0), order)
            .with_outcome(bound_max <= 1.0 + 1e-12, Defect::Magnitude((bound_max - 1.0).max(0.0)))
            .with_details(json!({"max_modulus": bound_max, "points": 100})),
    );
    reports.push(
        Report::new("REALIZATION_SQ_MODULUS", ctx.mode.mode(), Some(q0), order)
            .with_outcome(modulus_defect <= 1e-12, Defect::Magnitude(modulus_defect))
            .with_details(json!({
                "pattern": "|S(z)| = |z|^{N+1} for the truncated down-shift model",
            })),
    );

    // Phase invariance of the kernel residual under B -> uB.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut phase_defect = 0.0f64;
    let probe: Vec<(NumScalar, NumScalar)> = (0..5)
        .map(|_| {
            (
                NumScalar::from_polar(rng.gen_range(0.1..0.9), rng.gen_range(0.0..6.28)),
                NumScalar::from_polar(rng.gen_range(0.1..0.9), rng.gen_range(0.0..6.28)),
            )
        })
        .collect();
    for phase in [rng.gen_range(0.0..6.28), rng.gen_range(0.0..6.28)] {
        let rotated = sys.with_port_phase(phase);
        for (z, w) in &probe {
            let r0 = verify_schur_kernel(&sys, *z, *w)?;
            let r1 = verify_schur_kernel(&rotated, *z, *w)?;
            phase_defect = phase_defect.max((r0 - r1).abs());
        }
    }
    reports.push(
        Report::new("REALIZATION_PHASE_INVARIANCE", ctx.mode.mode(), Some(q0), order)
            .with_outcome(phase_defect <= 1e-12, Defect::Magnitude(phase_defect))
            .with_details(json!({"seed": seed, "phases": 2, "probe_pairs": 5})),
    );

    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(q0: f64, order: usize) -> QContext<NumericQ> {
        QContext::numeric(q0, order).unwrap()
    }

    #[test]
    fn a_is_the_down_shift_for_any_q() {
        for q0 in [0.0, 0.5, 0.9] {
            let sys = build_realization(&ctx(q0, 12)).unwrap();
            for m in 0..=12 {
                for k in 0..=12 {
                    let expect = if k >= 1 && m == k - 1 { 1.0 } else { 0.0 };
                    assert!(
                        (sys.a()[(m, k)].re - expect).abs() < 1e-13,
                        "A[{m},{k}] at q={q0}"
                    );
                }
            }
        }
    }

    #[test]
    fn defect_is_rank_one_projection() {
        let sys = build_realization(&ctx(0.5, 16)).unwrap();
        assert_eq!(sys.defect_rank(), 1);
        for v in sys.defect_eigenvalues() {
            assert!(v.abs() <= 1e-12 || (v - 1.0).abs() <= 1e-12, "eig {v}");
        }
        // B is supported on the top state vector, D = 0.
        assert!(sys.d()[(0, 0)].norm() <= 1e-10);
        let b = sys.b();
        for r in 0..sys.state_dim() - 1 {
            assert!(b[(r, 0)].norm() <= 1e-10, "B[{r}]");
        }
        assert!((b[(sys.state_dim() - 1, 0)].norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn coisometry_residual_small() {
        for q0 in [0.0, 0.5, 0.9] {
            let sys = build_realization(&ctx(q0, 24)).unwrap();
            assert!(sys.coisometry_residual() <= 1e-12, "q = {q0}");
        }
    }

    #[test]
    fn sq_at_zero_is_d() {
        let sys = build_realization(&ctx(0.3, 12)).unwrap();
        let s0 = eval_sq(&sys, NumScalar::new(0.0, 0.0)).unwrap();
        assert!((s0 - sys.d()[(0, 0)]).norm() <= 1e-15);
    }

    #[test]
    fn sq_modulus_pattern() {
        let sys = build_realization(&ctx(0.5, 10)).unwrap();
        for (r, theta) in [(0.3, 0.7), (0.8, 2.1), (0.99, 4.4)] {
            let z = NumScalar::from_polar(r, theta);
            let s = eval_sq(&sys, z).unwrap();
            assert!(
                (s.norm() - r.powi(11)).abs() <= 1e-12,
                "modulus at r={r}: {} vs {}",
                s.norm(),
                r.powi(11)
            );
        }
    }

    #[test]
    fn kernel_identity_constant_term() {
        // z = w = 0: both sides reduce to 1 - |D|^2 vs CC*.
        let sys = build_realization(&ctx(0.5, 12)).unwrap();
        let r = verify_schur_kernel(&sys, NumScalar::new(0.0, 0.0), NumScalar::new(0.0, 0.0))
            .unwrap();
        assert!(r <= 1e-14);
    }

    #[test]
    fn kernel_identity_diagonal_matches_geometric_sum() {
        // At w = z the right-hand side is sum_{k=0}^N |z|^{2k}.
        let sys = build_realization(&ctx(0.0, 8)).unwrap();
        let z = NumScalar::from_polar(0.7, 1.1);
        let n = sys.state_dim();
        let ident = DMatrix::<NumScalar>::identity(n, n);
        let cstar = sys.c().adjoint();
        let right = (&ident - sys.a().adjoint() * z.conj())
            .lu()
            .solve(&cstar)
            .unwrap();
        let full = (&ident - sys.a().clone() * z).lu().solve(&right).unwrap();
        let rhs = (sys.c() * full)[(0, 0)];
        let direct: f64 = (0..n).map(|k| z.norm_sqr().powi(k as i32)).sum();
        assert!((rhs.re - direct).abs() <= 1e-12 * direct);
        assert!(rhs.im.abs() <= 1e-13);
    }

    #[test]
    fn suite_reports_hold() {
        let reports = realization_reports(&ctx(0.5, 16), 0).unwrap();
        assert_eq!(reports.len(), 5);
        for r in &reports {
            assert!(r.holds, "{}: {:?}", r.identity, r);
        }
    }
}
