//! Minimal feed-forward network engine: dense layers, ReLU/tanh, backprop, Adam.

mod adam;
mod mlp;
mod serialize;

pub use adam::{AdamConfig, AdamState};
pub use mlp::{half_squared_error, Activation, ForwardTrace, Gradients, Mlp};
pub use serialize::MlpDocument;
