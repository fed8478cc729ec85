//! Minimal reverse-mode differentiable layers for the classical parts of
//! the models: feature extractors, heads, loss and optimizer.

pub mod adam;
pub mod layers;
pub mod loss;
pub mod stack;
pub mod tensor;

pub use adam::{adam_step, AdamState};
pub use layers::Layer;
pub use loss::bce_with_logits;
pub use stack::{build_head, build_preprocessor, HeadKind, InputShape, LayerStack, Preproc};
pub use tensor::{Param, Tensor};
