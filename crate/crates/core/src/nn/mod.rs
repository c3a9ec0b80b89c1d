//! Minimal reverse-mode automatic differentiation core.
//!
//! [`Tensor`] is a dense row-major array, [`Graph`] a gradient tape, and
//! [`Params`] a named parameter set that binds into graphs and feeds the
//! [`Adam`] optimizer. Everything is generic over the float width: models
//! run at `f32`, gradient verification at `f64`.

mod adam;
mod graph;
mod params;
mod tensor;

pub use adam::Adam;
pub use graph::{Gradients, Graph, Value};
pub use params::{embedding_init, glorot, uniform, Binding, ParamId, Params};
pub use tensor::Tensor;
