//! Selective super-resolution for large aerial and satellite images.
//!
//! A low-resolution image is cut into square patches, each patch is scored
//! by how many strong-gradient pixels it contains, and only the highest
//! scoring fraction is sent through the SRCNN engine. Everything else is
//! enlarged with bicubic interpolation, and the patches are put back
//! together in place.

pub mod bench;
pub mod cli;
pub mod error;
pub mod image;
pub mod metrics;
pub mod patch_grid;
pub mod pipeline;
pub mod saliency;
pub mod upscale;

pub use error::{Error, Result};
pub use image::{Image, LumaChromaImage};
