//! Numerical laboratory for fractional derivatives induced by radial
//! weights on the unit disc, the Volterra-type operators they generate, and
//! the function-space norms those operators are measured against.
//!
//! Conventions used throughout:
//! * `dA = dx dy / π`, so the disc has area one;
//! * the tail of a weight is `μ̂(r) = ∫_r^1 μ(s) ds`;
//! * moments are `μ_x = ∫_0^1 s^x μ(s) ds`, and the fractional derivative
//!   `D^μ` multiplies the `n`-th Taylor coefficient by `1/μ_{2n+1}`.

pub mod disc_geometry;
pub mod error;
pub mod experiments;
pub mod estimate;
pub mod expr;
pub mod quadrature;
pub mod radial_weight;
pub mod special;
pub mod space_norms;
pub mod summation;
pub mod taylor;
pub mod volterra;
pub mod weight_class;

pub use error::{Error, Result};
pub use estimate::{NormEstimate, Status, Truncation};
pub use radial_weight::RadialWeight;
