//! Linear-programming outer bounds on the admissible rate of exact-repair
//! distributed storage systems.
//!
//! The pipeline builds the Shannon (polymatroid) LP over the joint entropies
//! of the source, storage and repair variables of an `(n, k, d, alpha, beta)`
//! instance, shrinks it with functional-dependence closure and node-relabeling
//! symmetry, and solves it in exact rational arithmetic. The [`verify`] module
//! checks the symmetry identities on explicit distributions and codes.

pub mod constraints;
pub mod entset;
pub mod error;
pub mod lp;
pub mod model;
pub mod rational;
pub mod reduce;
pub mod verify;

pub use error::{Error, Result};
pub use model::{enumerate_universe, max_flow_bound, DssParams, Universe, VarId};
pub use rational::Rational;
