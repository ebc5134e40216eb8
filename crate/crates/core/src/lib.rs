//! Elliptic zeta values, divisor series and the elliptic gamma function.

pub mod divisor;
pub mod gamma;
pub mod harness;
pub mod numerics;
pub mod zeta_values;

pub use divisor::*;
pub use gamma::*;
pub use harness::*;
pub use numerics::*;
pub use zeta_values::*;
