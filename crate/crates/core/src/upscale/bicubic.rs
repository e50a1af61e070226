//! Separable bicubic resampling with the Keys kernel (a = -0.5).
//!
//! Destination pixel centres are mapped back to source coordinates with the
//! half-pixel convention: `src = (dst + 0.5) / factor - 0.5` when enlarging
//! and `src = (dst + 0.5) * factor - 0.5` when reducing. Taps that fall
//! outside the plane are clamped to the nearest edge sample. The horizontal
//! pass runs first, then the vertical pass; the final result is clamped to
//! `[0, 255]`.

use crate::error::{Error, Result};
use crate::image::Image;

pub const KEYS_A: f64 = -0.5;

/// Keys cubic convolution kernel.
#[inline]
pub fn keys_weight(d: f64) -> f64 {
    let a = KEYS_A;
    let d = d.abs();
    if d <= 1.0 {
        ((a + 2.0) * d - (a + 3.0)) * d * d + 1.0
    } else if d < 2.0 {
        ((a * d - 5.0 * a) * d + 8.0 * a) * d - 4.0 * a
    } else {
        0.0
    }
}

/// The four taps contributing to one destination sample along an axis.
#[derive(Clone, Copy, Debug)]
struct Taps {
    first: isize,
    weights: [f64; 4],
}

impl Taps {
    fn at(src: f64) -> Taps {
        let base = src.floor();
        let t = src - base;
        Taps {
            first: base as isize - 1,
            weights: [
                keys_weight(t + 1.0),
                keys_weight(t),
                keys_weight(1.0 - t),
                keys_weight(2.0 - t),
            ],
        }
    }

    #[inline]
    fn index(&self, k: usize, len: usize) -> usize {
        (self.first + k as isize).clamp(0, len as isize - 1) as usize
    }
}

#[derive(Clone, Copy, Debug)]
enum Mapping {
    Enlarge(usize),
    Reduce(usize),
}

impl Mapping {
    fn taps(self, dst_len: usize) -> Vec<Taps> {
        (0..dst_len)
            .map(|d| {
                let centre = d as f64 + 0.5;
                let src = match self {
                    Mapping::Enlarge(f) => centre / f as f64 - 0.5,
                    Mapping::Reduce(f) => centre * f as f64 - 0.5,
                };
                Taps::at(src)
            })
            .collect()
    }
}

fn resample(
    src: &[f64],
    width: usize,
    height: usize,
    out_w: usize,
    out_h: usize,
    map: Mapping,
) -> Vec<f64> {
    debug_assert_eq!(src.len(), width * height);
    let xt = map.taps(out_w);
    let yt = map.taps(out_h);

    let mut horiz = vec![0.0; height * out_w];
    for (row, out_row) in src.chunks_exact(width).zip(horiz.chunks_exact_mut(out_w)) {
        for (o, t) in out_row.iter_mut().zip(&xt) {
            let mut acc = 0.0;
            for k in 0..4 {
                acc += t.weights[k] * row[t.index(k, width)];
            }
            *o = acc;
        }
    }

    let mut out = vec![0.0; out_w * out_h];
    for (out_row, t) in out.chunks_exact_mut(out_w).zip(&yt) {
        let rows = [0, 1, 2, 3].map(|k| {
            let y = t.index(k, height);
            &horiz[y * out_w..(y + 1) * out_w]
        });
        for (x, o) in out_row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (w, r) in t.weights.iter().zip(&rows) {
                acc += w * r[x];
            }
            *o = acc.clamp(0.0, 255.0);
        }
    }
    out
}

/// Enlarges one plane by an integer factor.
pub fn upscale_plane(src: &[f64], width: usize, height: usize, factor: usize) -> Vec<f64> {
    resample(
        src,
        width,
        height,
        width * factor,
        height * factor,
        Mapping::Enlarge(factor),
    )
}

/// Reduces one plane by an integer factor. `out_w * factor == width` is
/// expected.
pub(crate) fn resample_plane(
    src: &[f64],
    width: usize,
    height: usize,
    out_w: usize,
    out_h: usize,
) -> Vec<f64> {
    debug_assert_eq!(width % out_w, 0);
    resample(
        src,
        width,
        height,
        out_w,
        out_h,
        Mapping::Reduce(width / out_w),
    )
}

/// Bicubic enlargement of every channel of `patch` by `factor`.
pub fn bicubic_upscale(patch: &Image, factor: usize) -> Result<Image> {
    if factor < 2 {
        return Err(Error::InvalidArgument(format!(
            "upscale factor must be at least 2, got {factor}"
        )));
    }
    let (w, h) = checked_scaled(patch, factor)?;
    let mut data = Vec::with_capacity(w * h * patch.channels());
    for c in 0..patch.channels() {
        data.extend(upscale_plane(
            patch.plane(c),
            patch.width(),
            patch.height(),
            factor,
        ));
    }
    Ok(Image::from_raw_unchecked(w, h, patch.channels(), data))
}

pub(crate) fn checked_scaled(img: &Image, factor: usize) -> Result<(usize, usize)> {
    let overflow = || Error::DimensionOverflow {
        width: img.width(),
        height: img.height(),
        factor,
    };
    let w = img.width().checked_mul(factor).ok_or_else(overflow)?;
    let h = img.height().checked_mul(factor).ok_or_else(overflow)?;
    w.checked_mul(h)
        .and_then(|n| n.checked_mul(img.channels()))
        .ok_or_else(overflow)?;
    Ok((w, h))
}
