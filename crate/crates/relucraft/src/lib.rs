//! Constructive ReLU network toolkit.
//!
//! Networks are built from explicit layer lists and combined with the basic
//! calculus (identity, composition, parallelization, linear combination).
//! Every constructor returns the network together with a [`BoundCertificate`]
//! pairing the measured size, width and depth with the bound the construction
//! promises. On top of the calculus sit exact min/max networks, the sawtooth,
//! square and multiplication gadgets, a CPWL compiler, simplicial hat-basis
//! networks, quantitative approximators and a linear-region counter.
//!
//! [`BoundCertificate`]: calculus::BoundCertificate

pub mod approx;
pub mod calculus;
pub mod cpwl;
mod error;
pub mod minmax;
pub mod net;
pub mod numeric;
pub mod regions;
pub mod simplicial;
pub mod testkit;
pub mod yarotsky;

pub use error::{Error, Result};
pub use net::{Layer, NetworkMetrics, ReluNetwork, SparseMatrix};
