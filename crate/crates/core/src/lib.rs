//! Link-level Monte Carlo simulation of MU-MIMO downlinks with outdated CSIT.
//!
//! The crate covers channel and training models ([`channel`], [`csi`]), the
//! retrospective interference alignment protocol ([`mat`]), a zero-forcing
//! baseline ([`lzfb`]), multi-user schedulers ([`sched`]) and the experiment
//! harness ([`harness`]).

pub mod channel;
pub mod csi;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod lzfb;
pub mod mat;
pub mod rng;
pub mod sched;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CVector = nalgebra::DVector<C64>;
pub type CMatrix = nalgebra::DMatrix<C64>;
