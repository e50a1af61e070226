//! Gradient-magnitude edge maps and edge-content ranking of patches.

use crate::error::{Error, Result};
use crate::image::Image;

/// Default gradient-magnitude threshold for 8-bit data.
pub const DEFAULT_THRESHOLD: f64 = 100.0;

/// Binary edge map; `true` marks an edge point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl EdgeMap {
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Encodes the map as a 1-bit grayscale PNG (edge points white).
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let stride = self.width.div_ceil(8);
        let mut raw = vec![0u8; stride * self.height];
        for (y, row) in self.bits.chunks_exact(self.width).enumerate() {
            for (x, &b) in row.iter().enumerate() {
                if b {
                    raw[y * stride + x / 8] |= 0x80 >> (x % 8);
                }
            }
        }
        crate::image::write_png(
            self.width,
            self.height,
            png::ColorType::Grayscale,
            png::BitDepth::One,
            &raw,
        )
    }
}

/// Central-difference gradient magnitude thresholded at `threshold`
/// (strictly greater). Borders replicate the nearest sample.
pub fn edge_map(patch_luma: &Image, threshold: f64) -> Result<EdgeMap> {
    patch_luma.require_single_channel()?;
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "threshold must be a non-negative number, got {threshold}"
        )));
    }
    let (w, h) = (patch_luma.width(), patch_luma.height());
    let p = patch_luma.data();
    let mut bits = Vec::with_capacity(w * h);
    for y in 0..h {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(h - 1);
        for x in 0..w {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(w - 1);
            let gx = (p[y * w + right] - p[y * w + left]) / 2.0;
            let gy = (p[down * w + x] - p[up * w + x]) / 2.0;
            bits.push((gx * gx + gy * gy).sqrt() > threshold);
        }
    }
    Ok(EdgeMap {
        width: w,
        height: h,
        bits,
    })
}

pub fn edge_count(map: &EdgeMap) -> usize {
    map.bits.iter().filter(|&&b| b).count()
}

/// Per-patch edge counts and the patch order by decreasing count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeRanking {
    pub counts: Vec<usize>,
    pub order: Vec<usize>,
}

impl EdgeRanking {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Orders patches by count, descending; ties keep ascending index.
pub fn rank_patches(counts: &[usize]) -> Result<EdgeRanking> {
    if counts.is_empty() {
        return Err(Error::Empty("patch counts"));
    }
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    Ok(EdgeRanking {
        counts: counts.to_vec(),
        order,
    })
}
