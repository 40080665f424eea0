//! Almost-circular random normal matrix ensembles.
//!
//! Finite-n correlation kernels built from radial monomial norms, the
//! analytic scaling limits under free, interpolated and hard-wall boundary
//! conditions, exact extreme-modulus laws, an exact moduli sampler and Ward
//! residual checks.

pub mod cli;
pub mod config;
pub mod error;
pub mod extremes;
pub mod finitekernel;
pub mod limits;
pub mod output;
pub mod potentials;
pub mod quad;
pub mod radialnorms;
pub mod sampler;
pub mod special;
pub mod ward;

pub use error::{Error, Result};
