// `!(x > 0.0)` is used on purpose so that NaN arguments are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod pipeline;
pub mod stats;
pub mod synth;
