//! Dense and sparse linear algebra primitives.
//!
//! Dense factorizations are unblocked and column-major; the matrices they see
//! are small (stencil systems, reduced systems) or factored once per model
//! (kernel Gram matrices), so clarity wins over blocking. The sparse direct
//! solver wraps `faer`'s supernodal LU behind a CSR type and a solve/transpose
//! pair; everything downstream of it is deterministic because factorization and
//! solves run sequentially.

mod dense;
mod eigen;
mod pivoted;
mod sparse;

pub use dense::{Cholesky, DenseMatrix, LuFactor};
pub use eigen::{extreme_spd_eigen, Extreme};
pub use pivoted::{pivoted_gram_select, GramSelection, PivotedCholesky};
pub use sparse::{CsrMatrix, SparseLu};
