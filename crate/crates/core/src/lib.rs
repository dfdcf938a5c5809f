// `!(x > 0.0)` is how NaN gets rejected along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod forward;
pub mod inverse;
pub mod kernel;
pub mod oracle;
pub mod quadrature;
pub mod sensitivity;
pub mod spectral;

pub use error::{Error, Result};
