//! q-Stirling numbers S(n,k) arising from the expansion
//! `(M_z R_q)^n = sum_{k=1}^n S(n,k) M_z^k R_q^k`.
//!
//! Two independent routes are provided: the triangular recursion, and an
//! operator-expansion oracle that applies the operators from the `series`
//! module to monomials and solves the resulting triangular system. At
//! q = 1 the numbers coincide with the classical Stirling numbers of the
//! second kind.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnum::QContext;
use crate::qscalar::{ExactQ, QPoly, QRat};
use crate::series::{op_mz, op_rq};

/// Triangular table of S(n,k) for 1 <= k <= n <= n_max.
#[derive(Clone, Debug, PartialEq)]
pub struct StirlingTable {
    n_max: usize,
    rows: Vec<Vec<QPoly>>, // rows[n-1][k-1] = S(n,k)
}

impl StirlingTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn entry(&self, n: usize, k: usize) -> Option<&QPoly> {
        self.rows.get(n - 1).and_then(|row| row.get(k - 1))
    }

    pub fn row(&self, n: usize) -> &[QPoly] {
        &self.rows[n - 1]
    }
}

/// Fills the table via the recursion
/// `S(1,1) = 1`, `S(n,n) = q^{n-1} S(n-1,n-1)`, `S(n,1) = 1`, and
/// `S(n,k) = [k]_q S(n-1,k) + q^{k-1} S(n-1,k-1)` for 2 <= k <= n-1.
pub fn stirling_recursive(n_max: usize) -> Result<StirlingTable> {
    if n_max < 1 {
        return Err(Error::InvalidParameter(
            "stirling table needs n_max >= 1".to_string(),
        ));
    }
    let q_int_poly = |k: usize| QPoly::from_integers(&vec![1; k]);
    let mut rows: Vec<Vec<QPoly>> = vec![vec![QPoly::one()]];
    for n in 2..=n_max {
        let prev = &rows[n - 2];
        let mut row = Vec::with_capacity(n);
        for k in 1..=n {
            let value = if k == 1 {
                QPoly::one()
            } else if k == n {
                prev[n - 2].mul_ref(&QPoly::monomial(BigRational::from_integer(1.into()), n - 1))
            } else {
                let carry = q_int_poly(k).mul_ref(&prev[k - 1]);
                let lift = prev[k - 2]
                    .mul_ref(&QPoly::monomial(BigRational::from_integer(1.into()), k - 1));
                carry.add_ref(&lift)
            };
            row.push(value);
        }
        rows.push(row);
    }
    Ok(StirlingTable { n_max, rows })
}

/// Independent oracle for row n: applies `(M_z R_q)^n` and `M_z^k R_q^k`
/// to the monomials z^m (via the series operator matrices, never
/// hand-coded eigenvalues) and solves the triangular system
/// `sum_k S(n,k) d_k(m) = [m]_q^n` over m = 1..n.
pub fn stirling_oracle_row(n: usize, ctx: &QContext<ExactQ>) -> Result<Vec<QRat>> {
    if n < 1 {
        return Err(Error::InvalidParameter("row index must be >= 1".to_string()));
    }
    if 2 * n > ctx.order() {
        return Err(Error::InvalidParameter(format!(
            "oracle for n = {n} needs a series context of order >= {}",
            2 * n
        )));
    }
    let mz = op_mz(ctx);
    let rq = op_rq(ctx);
    let mzrq = mz.compose(&rq)?;
    let lhs_op = mzrq.power(n as u32)?;

    // d[k-1][m-1] = diagonal entry of M_z^k R_q^k at (m, m)
    let mut d = Vec::with_capacity(n);
    for k in 1..=n {
        let op = mz.power(k as u32)?.compose(&rq.power(k as u32)?)?;
        let diag: Vec<QRat> = (1..=n).map(|m| op.entry(m, m).clone()).collect();
        d.push(diag);
    }

    let mut solved: Vec<QRat> = Vec::with_capacity(n);
    for m in 1..=n {
        let target = lhs_op.entry(m, m).clone();
        let mut acc = target;
        for k in 1..m {
            acc = acc.sub_ref(&solved[k - 1].mul_ref(&d[k - 1][m - 1]));
        }
        let pivot = &d[m - 1][m - 1];
        if pivot.is_zero() {
            return Err(Error::SingularSystem(
                "q-falling factorial pivot vanished",
            ));
        }
        solved.push(acc.try_div(pivot)?);
    }
    Ok(solved)
}

/// Classical second-kind Stirling recursion, used as the q = 1 cross-check.
pub fn classical_stirling2(n_max: usize) -> Vec<Vec<u64>> {
    let mut rows: Vec<Vec<u64>> = vec![vec![1]];
    for n in 2..=n_max {
        let prev = &rows[n - 2];
        let mut row = Vec::with_capacity(n);
        for k in 1..=n {
            let carry = if k <= prev.len() { k as u64 * prev[k - 1] } else { 0 };
            let lift = if k >= 2 { prev[k - 2] } else { 0 };
            row.push(carry + lift);
        }
        rows.push(row);
    }
    rows
}

/// Renders the table as text, one row per line, cells joined by " | ",
/// monomials in ascending q-power order.
pub fn render_text(table: &StirlingTable) -> String {
    table
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(" | ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// One table cell in the JSON schema: coefficients ascending in q starting
/// at `min_power`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StirlingCell {
    pub coeffs: Vec<u64>,
    pub min_power: usize,
}

/// JSON form of a table: `{"n_max": int, "rows": [[cell]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StirlingJson {
    pub n_max: usize,
    pub rows: Vec<Vec<StirlingCell>>,
}

pub fn to_json(table: &StirlingTable) -> Result<StirlingJson> {
    let rows = table
        .rows
        .iter()
        .map(|row| row.iter().map(cell_from_poly).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(StirlingJson {
        n_max: table.n_max,
        rows,
    })
}

pub fn from_json(doc: &StirlingJson) -> Result<StirlingTable> {
    if doc.rows.len() != doc.n_max {
        return Err(Error::InvalidParameter(format!(
            "stirling document claims n_max = {} but has {} rows",
            doc.n_max,
            doc.rows.len()
        )));
    }
    let rows = doc
        .rows
        .iter()
        .map(|row| row.iter().map(poly_from_cell).collect())
        .collect();
    Ok(StirlingTable {
        n_max: doc.n_max,
        rows,
    })
}

fn cell_from_poly(p: &QPoly) -> Result<StirlingCell> {
    let min_power = p
        .coeffs()
        .iter()
        .position(|c| !c.is_zero())
        .unwrap_or(0);
    let coeffs = p.coeffs()[min_power..]
        .iter()
        .map(|c| {
            if !c.is_integer() || c.is_negative() {
                return Err(Error::InvalidParameter(
                    "stirling coefficients must be nonnegative integers".to_string(),
                ));
            }
            c.to_integer().to_u64().ok_or_else(|| {
                Error::InvalidParameter(
                    "stirling coefficient exceeds the JSON integer range".to_string(),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StirlingCell { coeffs, min_power })
}

fn poly_from_cell(cell: &StirlingCell) -> QPoly {
    let mut coeffs = vec![BigRational::zero(); cell.min_power];
    coeffs.extend(
        cell.coeffs
            .iter()
            .map(|&c| BigRational::from_integer(BigInt::from(c))),
    );
    QPoly::new(coeffs)
}

/// Degree of S(n,k) in q: `k(k-1)/2 + (n-k)(k-1)`, a consequence of the
/// recursion used as its own oracle in tests.
pub fn expected_degree(n: usize, k: usize) -> usize {
    k * (k - 1) / 2 + (n - k) * (k - 1)
}
