//! Explanation generation: tokenization, attribute-infused inputs, fusion,
//! the encoder-decoder model, and beam-search decoding.

pub mod beam;
pub mod fusion;
pub mod inputs;
pub mod model;
pub mod tokenizer;

pub use beam::generate;
pub use fusion::{coda_attention, FusedEncoding};
pub use inputs::{build_input_c1, build_input_c2, strip_input_suffix, AttributePosition};
pub use model::{
    train_generator, DecodeParams, GenConfig, GenExample, GeneratedExplanation, GenerationModel,
    Infusion, TrainingLog,
};
pub use tokenizer::{Tokenizer, SEP_TOKEN};
