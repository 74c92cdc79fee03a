//! Answer-aware question generation with a graph-to-sequence model: deep
//! alignment, static or learned passage graphs, a bidirectional gated graph
//! encoder and a copy/coverage decoder, trained with cross-entropy and then
//! self-critical policy gradient.

pub mod alignment;
pub mod autodiff;
pub mod biggnn;
pub mod config;
pub mod data;
pub mod decoder;
pub mod error;
pub mod graph;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod toy;
pub mod training;

pub use config::{Config, Precision};
pub use error::{Error, Result};
pub use model::Graph2Seq;
pub use scalar::Scalar;

pub type Tensor32 = autodiff::Tensor<f32>;
pub type Tensor64 = autodiff::Tensor<f64>;
pub type Model32 = Graph2Seq<f32>;
pub type Model64 = Graph2Seq<f64>;
pub type Trainer32 = training::Trainer<f32>;
pub type Trainer64 = training::Trainer<f64>;
