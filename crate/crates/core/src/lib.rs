//! Spin-boson dynamics with matrix product states on a site-split lattice.
//!
//! Each bosonic site of local dimension `d_b` is replaced by two sites of
//! dimension `sqrt(d_b)`; the MPO is split by an SVD of its site tensors and
//! the state is evolved with TDVP.

pub mod chain;
pub mod ed;
pub mod env;
pub mod error;
pub mod krylov;
pub mod mpo;
pub mod mps;
pub mod ops;
pub mod series;
pub mod tdvp;
pub mod tensor;

pub use num_complex::Complex64 as C64;

pub use chain::{chain_coefficients, ChainCoefficients, HoppingVariant, SpectralBath};
pub use error::{Error, Result};
pub use mpo::{build_spin_boson_mpo, split_full_mpo, Mpo, SplitIndexMap, SplitMpo};
pub use mps::{LatticeLayout, Mps, ProductStateSpec};
pub use series::{Observable, TimeSeries, TimeSeriesRow};
pub use tdvp::{evolve, Scheme, TdvpConfig};
pub use tensor::{contract, DenseTensor, Truncation};
