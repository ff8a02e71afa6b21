//! Complex-valued automatic differentiation with Wirtinger derivatives.
//!
//! Every primitive knows its pair `(∂_z f, ∂_z̄ f)`. From those pairs the
//! engine builds
//!
//! - forward mode ([`forward::jvp`]): tangents propagate as
//!   `∂_z f · z′ + ∂_z̄ f · conj(z′)`, the derivative of `f` viewed as a real
//!   map on `(Re z, Im z)`;
//! - reverse mode ([`reverse::vjp`], [`reverse::grad`]): cotangents propagate
//!   as `conj(∂_z f)ᵀ f̄ + (∂_z̄ f)ᵀ conj(f̄)`, under either gradient
//!   [`Convention`](tensor::Convention).
//!
//! The [`oracle`] module rebuilds both products from finite differences of the
//! underlying real map, and [`expr`] compiles text such as `z^5*conj(z)^4`
//! into a [`graph::Graph`].
//!
//! ```
//! use wirtinger_core::{compile, builtin_registry, reverse::grad, tensor::*};
//!
//! let f = compile("0.5*z^2", "z", &builtin_registry()).unwrap();
//! let z = ComplexTensor::scalar(ComplexScalar::new(1.0, 1.0));
//! let plus = grad(&f, &z, Convention::Plus).unwrap();
//! let minus = grad(&f, &z, Convention::Minus).unwrap();
//! assert_eq!(plus.as_scalar(), Some(ComplexScalar::new(1.0, -1.0)));
//! assert_eq!(minus.as_scalar(), Some(ComplexScalar::new(1.0, 1.0)));
//! ```

pub mod error;
pub mod expr;
pub mod forward;
pub mod graph;
pub mod optimize;
pub mod oracle;
pub mod primitives;
pub mod reverse;
pub mod tensor;

pub use error::{Error, Result};
pub use expr::compile;
pub use primitives::builtin_registry;
