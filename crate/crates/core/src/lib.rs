//! Localized Nakagami parametric imaging of ultrasound envelope data.
//!
//! The crate covers the full path from RF frames to shape/scale maps:
//! [`envelope`] detection, [`nakagami`] fitting, parametric [`mapping`] with
//! fixed, compounded and multiscale windows, synthetic [`phantom`]s with known
//! truth, and [`evaluation`] against that truth.

pub mod envelope;
pub mod evaluation;
pub mod grids;
pub mod mapping;
pub mod nakagami;
pub mod phantom;
pub mod rng;
pub mod special;

pub use grids::{Image2D, ImageKind};
pub use nakagami::{NakagamiParams, SampleSet};
