//! Channel-level Shapley explanations for multi-channel volumetric
//! segmentation models.

pub mod adapter;
pub mod cluster;
pub mod metrics;
pub mod pipeline;
pub mod shapley;
pub mod stats;
pub mod synthetic;
pub mod volume;
