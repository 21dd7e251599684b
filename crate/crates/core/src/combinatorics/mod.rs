//! Constructive splitting of Q-points with self-checking certificates.
//!
//! [`split_point`] produces a coarser Q-point `S` with large separation
//! relative to `diam(T)` and small distance to `T`; [`key_chain`] refines
//! `Q⟦t⟧` into `T` through a sequence of such splittings. Both return
//! certificates whose inequalities are re-checked after construction, with
//! the tiny constants compared in log-space.

mod beta;
mod chain;
mod split_point;

pub use beta::{beta, beta_tilde, LogValue};
pub use chain::{key_chain, ChainCertificate, ChainStep};
pub use split_point::{split_point, SplitCertificate};
