//! Numerical laboratory for two-dimensional stationary Q-valued maps.
//!
//! The crate is organised bottom-up:
//!
//! * [`aq`]: the metric space of unordered Q-tuples (`QPoint`), the
//!   assignment distance, supports, and balanced splitting.
//! * [`combinatorics`]: constructive splitting of a single Q-point and the
//!   chain of successively finer splittings, each returned with a
//!   machine-checked certificate.
//! * [`grid`]: Q-valued fields on uniform 1-D/2-D grids: Dirichlet energy,
//!   first variations, Hopf differential, conformalization, frequency,
//!   blow-ups, decomposition and singular-set diagnostics.
//! * [`minimizer`]: discrete critical points of the energy with prescribed
//!   boundary data.
//! * [`io`]: JSON/CSV file formats.

pub mod aq;
pub mod campaign;
pub mod combinatorics;
pub mod error;
pub mod grid;
pub mod io;
pub mod minimizer;
pub mod numeric;
pub mod oracle;

pub use error::{Error, Result};
