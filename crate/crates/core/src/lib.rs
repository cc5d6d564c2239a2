//! Exact model reduction for discrete-time conditional quantum evolutions.

pub mod algebra;
pub mod cli;
pub mod equivalence;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod observability;
pub mod operator;
pub mod random;
pub mod reduction;
pub mod superop;
pub mod trajectories;
pub mod zoo;

pub use error::{Error, Result};
pub use model::{ConditionalEvolution, Instrument, OutputMap};
pub use operator::{hs_inner, orthonormalize, Operator, OperatorSubspace, Pauli, DEFAULT_TOL};
pub use superop::{compose, ChannelReport, Superoperator};
