//! Research toolkit for toxicity-attribute-infused explanation generation
//! on implicit-hate posts: corpus handling, a six-head toxicity regressor,
//! attribute thresholding, an attribute/KG-infused encoder-decoder with
//! beam-search decoding, KG tuple retrieval auditing, generation metrics,
//! and significance analysis.
//!
//! Numeric code is generic over the scalar type; the aliases below pin the
//! common concrete choices.

pub mod analysis;
pub mod attributes;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod generator;
pub mod kg;
pub mod nn;
pub mod regressor;
pub mod scalar;

pub use error::{Result, ToxgenError};
pub use scalar::Scalar;

/// Double-precision generator, the default for training and decoding.
pub type GenerationModelF64 = generator::GenerationModel<f64>;
/// Single-precision generator for memory-constrained runs.
pub type GenerationModelF32 = generator::GenerationModel<f32>;
/// Double-precision toxicity regressor.
pub type RegressorF64 = regressor::Regressor<f64>;
/// Single-precision toxicity regressor.
pub type RegressorF32 = regressor::Regressor<f32>;
