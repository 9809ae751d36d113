//! Transfer operators, saltus decompositions and susceptibility functions of
//! piecewise expanding unimodal maps.

pub mod error;
pub mod quad;
pub mod response;
pub mod saltus;
pub mod smooth;
pub mod susceptibility;
pub mod transfer;
pub mod unimodal;

pub use error::{Error, Result};
