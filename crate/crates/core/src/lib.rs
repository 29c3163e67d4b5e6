//! Aspect-ratio constrained photo collage generation.
//!
//! Collage construction is a short sequential decision process: a
//! recurrent actor-critic agent rearranges a strip-packed initial layout
//! (pair switches), then nudges individual images (position, layer,
//! rotation), while a multi-patch aesthetic evaluator scores every
//! intermediate collage and an automatic cropper keeps it on the requested
//! aspect ratio.

pub mod aesthetic;
pub mod agent;
pub mod config;
pub mod env;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod synth;

pub use error::{CollageError, Result};
