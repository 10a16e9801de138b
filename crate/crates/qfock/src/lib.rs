//! Dual-mode q-calculus on truncated power series.
//!
//! The crate works in one of two scalar domains, selected by the context:
//!
//! - **exact**: scalars are rational functions in the indeterminate q with
//!   exact rational coefficients; identities verify with literally zero
//!   defect.
//! - **numeric**: scalars are complex doubles at a fixed q in [0, 1];
//!   identities verify against explicit tolerances, and truncated sums
//!   carry tail certificates.
//!
//! Modules:
//! - [`qscalar`]: the two scalar domains and the mode machinery.
//! - [`qnum`]: q-integers, q-factorials, q-Pochhammer symbols, the
//!   q-exponential.
//! - [`series`]: truncated power series, the operator algebra (backward
//!   shift, Jackson derivative, dilation, multiplication, antiderivative),
//!   and the exact operator identity catalog.
//! - [`stirling`]: q-Stirling numbers with recursion and operator oracle.
//! - [`spaces`]: weighted Hilbert spaces, kernels, adjoints, and the
//!   structural identity catalog.
//! - [`transform`]: the q-Jackson integral, the q-integral transform and
//!   its convolution structure, moment identities, and the radial measure
//!   series.
//! - [`realization`]: the co-isometric operator matrix on the truncated
//!   orthonormalized space and its transfer function.
//! - [`suites`]: batteries of verification reports used by the CLI.

pub mod error;
pub mod qnum;
pub mod qscalar;
pub mod report;
pub mod series;
pub mod spaces;
pub mod stirling;
pub mod transform;
pub mod realization;
pub mod suites;

pub use error::{Error, Result};
pub use qnum::QContext;
pub use qscalar::{ExactQ, NumScalar, NumericQ, QMode, QPoly, QRat, QScalar};
pub use report::{Defect, Mode, Report};
