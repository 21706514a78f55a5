//! Toy-scale MLP training with tied-weight synthetic-data augmentation.

pub mod data;
pub mod mlp;
pub mod sgd;
pub mod synth;

pub use data::{gen_blobs, load_csv, load_idx, Dataset};
pub use mlp::{
    argmax, cross_entropy, mlp_backward, mlp_forward, softmax, Activations, DropoutMasks,
    Gradients, MlpParams,
};
pub use sgd::{evaluate, label_agreement, train_epoch, EpochMetrics, TrainConfig};
pub use synth::{regularizer_grad, shadow_synthesize, smooth3x3, SourceLayer, SynthOptions};
