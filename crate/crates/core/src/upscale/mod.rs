//! Upscaling backends behind one interface.

pub mod bicubic;
pub mod srcnn;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::patch_grid::PatchGrid;

pub use bicubic::bicubic_upscale;
pub use srcnn::{srcnn_load_weights, srcnn_upscale, SrcnnWeights};

/// Enlarges a single-channel patch by an integer factor.
///
/// Implementations must return exactly `(w * factor) x (h * factor)` samples
/// in `[0, 255]` and be deterministic for fixed inputs. `index` is the patch's
/// position in its grid; most backends ignore it.
pub trait Upscaler: Sync {
    fn id(&self) -> &str;

    fn upscale(&self, index: usize, patch: &Image, factor: usize) -> Result<Image>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Bicubic;

impl Upscaler for Bicubic {
    fn id(&self) -> &str {
        "bicubic"
    }

    fn upscale(&self, _index: usize, patch: &Image, factor: usize) -> Result<Image> {
        patch.require_single_channel()?;
        bicubic_upscale(patch, factor)
    }
}

#[derive(Clone, Debug)]
pub struct Srcnn {
    pub weights: SrcnnWeights,
}

impl Srcnn {
    pub fn new(weights: SrcnnWeights) -> Self {
        Srcnn { weights }
    }
}

impl Upscaler for Srcnn {
    fn id(&self) -> &str {
        "srcnn"
    }

    fn upscale(&self, _index: usize, patch: &Image, factor: usize) -> Result<Image> {
        srcnn_upscale(patch, factor, &self.weights)
    }
}

/// Returns the ground-truth high-resolution patch for an index.
pub fn oracle_upscale(patch_index: usize, ground_truth: &PatchGrid) -> Result<Image> {
    ground_truth
        .patches()
        .get(patch_index)
        .cloned()
        .ok_or(Error::IndexOutOfRange {
            index: patch_index,
            len: ground_truth.len(),
        })
}

/// Test backend that looks up the true high-resolution patch instead of
/// estimating it.
#[derive(Clone, Debug)]
pub struct Oracle {
    ground_truth: PatchGrid,
}

impl Oracle {
    /// `ground_truth` must be the high-resolution image (single channel)
    /// tiled with the low-resolution patch size times the upscale factor.
    pub fn new(ground_truth: PatchGrid) -> Self {
        Oracle { ground_truth }
    }
}

impl Upscaler for Oracle {
    fn id(&self) -> &str {
        "oracle"
    }

    fn upscale(&self, index: usize, patch: &Image, factor: usize) -> Result<Image> {
        let hr = oracle_upscale(index, &self.ground_truth)?;
        if hr.width() != patch.width() * factor || hr.height() != patch.height() * factor {
            return Err(Error::DimensionMismatch(format!(
                "ground-truth patch is {}x{}, expected {}x{}",
                hr.width(),
                hr.height(),
                patch.width() * factor,
                patch.height() * factor
            )));
        }
        Ok(hr)
    }
}
