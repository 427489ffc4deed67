//! Toolkit for fMRI visual question answering studies: forges controlled
//! QA datasets from structured image annotations, scores prediction runs
//! with the full VQA/captioning metric protocol, and attributes decoding
//! accuracy to brain clusters via randomized masking and ridge regression.

pub mod annotation;
pub mod annotator;
pub mod cli;
pub mod config;
pub mod attribution;
pub mod dataset;
pub mod error;
pub mod forge;
pub mod manifest;
pub mod metrics;
pub mod stats;
pub(crate) mod util;

pub use error::{Error, Result};
