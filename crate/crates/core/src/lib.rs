//! Tracking by natural language with an adaptive switch between local
//! template tracking and global grounding.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`], [`frame`], [`types`] and [`io`]: boxes, images, sequence
//!   records and the on-disk formats.
//! - [`synth`]: deterministic moving-shape sequences with challenge attributes
//!   and template-grammar sentences.
//! - [`nn`]: a small differentiable substrate (dense, GRU, Adagrad, gradient
//!   checking) that every trainable model here is built on.
//! - [`localtrack`]: a normalized-cross-correlation local tracker.
//! - [`ground`]: sentence embedding, grid grounding head and template attention.
//! - [`switcher`]: the learned failure detector gating local/global search.
//! - [`eval`]: precision / success / normalized precision and reporting.
//! - [`pipeline`]: inference settings, benchmark orchestration and config.

pub mod error;
pub mod eval;
pub mod frame;
pub mod ground;
pub mod geometry;
pub mod io;
pub mod localtrack;
pub mod nn;
pub mod pipeline;
pub mod switcher;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use frame::{crop_resize, Frame, Modality, Patch};
pub use geometry::{center_error, iou, BoundingBox};
pub use types::{
    Attribute, LanguageSentence, MetricCurve, SequenceRecord, TrackerObservation,
    OBSERVATION_STRIDE,
};
