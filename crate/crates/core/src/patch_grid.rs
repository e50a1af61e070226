//! Non-overlapping square tiling and jigsaw reassembly.

use crate::error::{common_divisors, Error, Result};
use crate::image::Image;

/// Geometry of a tiling: `cols x rows` patches of `patch_size` pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridShape {
    pub patch_size: usize,
    pub cols: usize,
    pub rows: usize,
}

impl GridShape {
    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(col, row)` of patch `index` in row-major order.
    pub fn position(&self, index: usize) -> (usize, usize) {
        (index % self.cols, index / self.cols)
    }
}

/// Row-major list of `s x s` patches copied out of a source image.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchGrid {
    shape: GridShape,
    source_width: usize,
    source_height: usize,
    patches: Vec<Image>,
}

impl PatchGrid {
    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn patch_size(&self) -> usize {
        self.shape.patch_size
    }

    pub fn cols(&self) -> usize {
        self.shape.cols
    }

    pub fn rows(&self) -> usize {
        self.shape.rows
    }

    pub fn source_width(&self) -> usize {
        self.source_width
    }

    pub fn source_height(&self) -> usize {
        self.source_height
    }

    pub fn patches(&self) -> &[Image] {
        &self.patches
    }

    pub fn into_patches(self) -> Vec<Image> {
        self.patches
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
}

/// Patch sizes that tile a `width x height` image exactly.
pub fn valid_patch_sizes(width: usize, height: usize) -> Vec<usize> {
    common_divisors(width, height, 1)
}

/// Cuts `img` into `s x s` patches, row-major.
pub fn tile(img: &Image, s: usize) -> Result<PatchGrid> {
    if s == 0 {
        return Err(Error::InvalidArgument("patch size must be positive".into()));
    }
    let (w, h, c) = (img.width(), img.height(), img.channels());
    if w % s != 0 || h % s != 0 {
        return Err(Error::NotDivisible {
            width: w,
            height: h,
            divisor: s,
            valid: valid_patch_sizes(w, h),
        });
    }
    let shape = GridShape {
        patch_size: s,
        cols: w / s,
        rows: h / s,
    };
    let patches = (0..shape.len())
        .map(|i| {
            let (col, row) = shape.position(i);
            let mut data = Vec::with_capacity(s * s * c);
            for ch in 0..c {
                let plane = img.plane(ch);
                for y in row * s..(row + 1) * s {
                    data.extend_from_slice(&plane[y * w + col * s..y * w + (col + 1) * s]);
                }
            }
            Image::from_raw_unchecked(s, s, c, data)
        })
        .collect();
    Ok(PatchGrid {
        shape,
        source_width: w,
        source_height: h,
        patches,
    })
}

/// Places each patch at its grid rectangle scaled by `upscale`. Patches must
/// all be `(s * upscale)` square with the same channel count.
pub fn fuse(shape: &GridShape, patches: &[Image], upscale: usize) -> Result<Image> {
    if upscale == 0 {
        return Err(Error::InvalidArgument("upscale must be positive".into()));
    }
    if patches.len() != shape.len() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} patches for a {}x{} grid, got {}",
            shape.len(),
            shape.cols,
            shape.rows,
            patches.len()
        )));
    }
    let side = shape.patch_size * upscale;
    let channels = patches.first().map_or(1, Image::channels);
    for (i, p) in patches.iter().enumerate() {
        if p.width() != side || p.height() != side || p.channels() != channels {
            return Err(Error::DimensionMismatch(format!(
                "patch {i} is {}x{}x{}, expected {side}x{side}x{channels}",
                p.width(),
                p.height(),
                p.channels()
            )));
        }
    }
    let (w, h) = (shape.cols * side, shape.rows * side);
    let mut data = vec![0.0; w * h * channels];
    for (i, p) in patches.iter().enumerate() {
        let (col, row) = shape.position(i);
        for ch in 0..channels {
            let dst = &mut data[ch * w * h..(ch + 1) * w * h];
            for (py, src) in p.plane(ch).chunks_exact(side).enumerate() {
                let y = row * side + py;
                let x = col * side;
                dst[y * w + x..y * w + x + side].copy_from_slice(src);
            }
        }
    }
    Ok(Image::from_raw_unchecked(w, h, channels, data))
}
