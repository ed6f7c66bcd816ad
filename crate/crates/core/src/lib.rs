//! Exact computations around self-similar actions of compact open subgroups
//! of `SL(n, Q_p)`.
//!
//! * [`padic`]: truncated p-adic scalars and matrices with certified precision.
//! * [`congruence`]: `SL(n, Z_p)`, congruence subgroups, coset transversals.
//! * [`virtual_endo`]: conjugation by a diagonal p-power matrix as a virtual
//!   endomorphism, with invariance and normality searches.
//! * [`selfsim`]: the action on the rooted tree of cosets compiled from a
//!   transversal and a virtual endomorphism.
//! * [`building`]: the lattice model of the Bruhat–Tits building of
//!   `SL(n, Q_p)`, orbit displacement and the apartment figure.
//! * [`anisotropic`]: quaternion division algebras over `Q_p`, the reduced
//!   norm and the conjugation-invariant filtration of `SL(1, D)`.

pub mod anisotropic;
pub mod building;
pub mod congruence;
pub mod error;
pub mod padic;
pub mod sample;
pub mod selfsim;
pub mod virtual_endo;

pub use error::{Error, ErrorKind, Result};
