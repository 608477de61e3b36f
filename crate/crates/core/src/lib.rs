//! Information systems, i-webs and their lambda-models.

pub mod completion;
pub mod corpus;
pub mod dsl;
pub mod error;
pub mod fo_axioms;
pub mod interp;
pub mod kernel;
pub mod lambda;
pub mod token;
pub mod ultra;
pub mod webs;

pub use error::{Error, Result};
pub use kernel::{closure, InfoSys, Membership, PointApprox, Sys};
pub use token::{ConSet, Token};
