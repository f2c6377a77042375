//! Numerical toolkit for quantum chaos diagnostics on exactly solvable
//! models: Loschmidt echoes, out-of-time-order correlators, and Krylov
//! complexity, with classical oracles for cross-validation.

// index-based loops are deliberate in the numeric kernels: the index is the
// mathematical object (basis label, lattice site, Fourier mode)
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod echo;
pub mod error;
pub mod hilbert;
pub mod krylov;
pub mod models;
pub mod otoc;
pub mod propagate;
pub mod semiclassic;
pub mod series;

pub use error::{Error, Result};
pub use hilbert::{DenseOperator, QuantumState, RngStream, C64};
pub use series::{ComplexSeries, TimeSeries};
