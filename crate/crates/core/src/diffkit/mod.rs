//! Exact forward-mode derivatives of scalar fields `f(x, y)` and a
//! finite-difference diagnostic.

mod dual;
mod fd;
mod jet;

pub use dual::{Dual, Dual1, Dual2, Dual3, Nested, Real};
pub use fd::{fd_check, FdReport};
pub use jet::{jet_eval, Jet, ScalarField};
