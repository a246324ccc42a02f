//! Stability forecasting from sliding-window modal analysis.
//!
//! Windows of multichannel measurements are decomposed with DMD, turned into a
//! five-layer dynamic adjacency tensor, and fed through a graph-convolved LSTM
//! that outputs an instability probability.

pub mod adjacency;
pub mod cache;
pub mod config;
pub mod data;
pub mod dataset;
pub mod dmd;
pub mod experiment;
pub mod error;
pub mod linalg;
pub mod lti;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod selection;
pub mod training;
pub mod window;

pub use error::{DramnError, Result};
