pub mod error;
pub mod fixture;
pub mod hierarchy;
pub mod quadrature;
pub mod quasiinterp;
pub mod random;
pub mod spline;
pub mod tensor;
pub mod testfn;
pub mod univariate;

pub use error::{Error, Result};
