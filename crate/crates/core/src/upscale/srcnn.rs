//! Three-layer SRCNN inference (9x9 -> 128, 3x3 -> 64, 5x5 -> 1).
//!
//! The network refines a bicubic enlargement of the patch. Convolutions are
//! valid (no implicit padding), so the enlarged patch is replicate-padded by
//! the receptive-field loss of 7 pixels per side and the output keeps the
//! enlarged size exactly.
//!
//! Evaluation streams over output rows: each layer keeps a ring of the rows
//! the next layer needs, and every row is computed as an im2col matrix times
//! the layer's weight matrix. The accumulation order of any output sample
//! depends only on the architecture, never on scheduling.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::upscale::bicubic::bicubic_upscale;

/// `(out_channels, in_channels, kernel_size)` for each layer.
pub const ARCHITECTURE: [(usize, usize, usize); 3] = [(128, 1, 9), (64, 128, 3), (1, 64, 5)];

/// Pixels lost per side by the three valid convolutions.
pub const RECEPTIVE_PAD: usize =
    (ARCHITECTURE[0].2 + ARCHITECTURE[1].2 + ARCHITECTURE[2].2 - 3) / 2;

const MAGIC: &[u8; 4] = b"SRW1";

/// One convolution layer. Kernel values are stored in
/// `(out, in, row, col)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel_size: usize,
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(out_channels: usize, in_channels: usize, kernel_size: usize) -> Self {
        ConvLayer {
            out_channels,
            in_channels,
            kernel_size,
            kernel: vec![0.0; out_channels * in_channels * kernel_size * kernel_size],
            bias: vec![0.0; out_channels],
        }
    }

    fn taps(&self) -> usize {
        self.in_channels * self.kernel_size * self.kernel_size
    }

    #[inline]
    pub fn index(&self, out: usize, inp: usize, row: usize, col: usize) -> usize {
        ((out * self.in_channels + inp) * self.kernel_size + row) * self.kernel_size + col
    }
}

/// Validated weights for the fixed three-layer architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct SrcnnWeights {
    layers: [ConvLayer; 3],
}

impl SrcnnWeights {
    pub fn new(layers: [ConvLayer; 3]) -> Result<Self> {
        for (i, (layer, &(out, inp, k))) in layers.iter().zip(ARCHITECTURE.iter()).enumerate() {
            if (layer.out_channels, layer.in_channels, layer.kernel_size) != (out, inp, k) {
                return Err(Error::ArchitectureMismatch(format!(
                    "layer {} is {}x{}x{k2}x{k2}, expected {out}x{inp}x{k}x{k}",
                    i + 1,
                    layer.out_channels,
                    layer.in_channels,
                    k2 = layer.kernel_size
                )));
            }
            if layer.kernel.len() != out * inp * k * k || layer.bias.len() != out {
                return Err(Error::ArchitectureMismatch(format!(
                    "layer {} has {} kernel values and {} biases",
                    i + 1,
                    layer.kernel.len(),
                    layer.bias.len()
                )));
            }
            if layer
                .kernel
                .iter()
                .chain(&layer.bias)
                .any(|v| !v.is_finite())
            {
                return Err(Error::NonFiniteParameter { layer: i + 1 });
            }
        }
        Ok(SrcnnWeights { layers })
    }

    /// All-zero kernels and biases.
    pub fn zeros() -> Self {
        SrcnnWeights {
            layers: ARCHITECTURE.map(|(o, i, k)| ConvLayer::zeros(o, i, k)),
        }
    }

    /// Weights whose network reproduces its input: channel 0 of every layer
    /// carries a centred delta tap, everything else is zero.
    pub fn identity() -> Self {
        let mut w = Self::zeros();
        for layer in &mut w.layers {
            let c = layer.kernel_size / 2;
            let idx = layer.index(0, 0, c, c);
            layer.kernel[idx] = 1.0;
        }
        w
    }

    /// A hand-built network that applies an unsharp mask to the bicubic
    /// input: `x + amount * (x - blur(x))`, where `blur` is a normalized 5x5
    /// Gaussian with standard deviation `sigma`. Useful as a deterministic
    /// stand-in for trained weights: it costs exactly as much to evaluate and
    /// recovers some of the detail bicubic interpolation smooths away.
    pub fn unsharp(amount: f64, sigma: f64) -> Self {
        let mut w = Self::identity();
        let last = &mut w.layers[2];
        let k = last.kernel_size;
        let c = (k / 2) as f64;
        let mut blur = vec![0.0; k * k];
        for (i, v) in blur.iter_mut().enumerate() {
            let (dy, dx) = ((i / k) as f64 - c, (i % k) as f64 - c);
            *v = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
        }
        let sum: f64 = blur.iter().sum();
        for (i, b) in blur.iter().enumerate() {
            let delta = if i == k * k / 2 { 1.0 } else { 0.0 };
            // Narrow to f32 here so the in-memory network equals its SRW1 form.
            last.kernel[i] = f64::from(((1.0 + amount) * delta - amount * b / sum) as f32);
        }
        w
    }

    pub fn layers(&self) -> &[ConvLayer; 3] {
        &self.layers
    }

    /// Parses an SRW1 weight file image.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::BadWeights("bad magic, expected SRW1".into()));
        }
        let count = r.u32()? as usize;
        if count != 3 {
            return Err(Error::ArchitectureMismatch(format!(
                "expected 3 layers, file declares {count}"
            )));
        }
        let mut layers = Vec::with_capacity(3);
        for (i, &(out, inp, k)) in ARCHITECTURE.iter().enumerate() {
            let dims = [r.u32()?, r.u32()?, r.u32()?, r.u32()?].map(|v| v as usize);
            if dims != [out, inp, k, k] {
                return Err(Error::ArchitectureMismatch(format!(
                    "layer {} declares {:?}, expected {:?}",
                    i + 1,
                    dims,
                    [out, inp, k, k]
                )));
            }
            let kernel = r.f32s(out * inp * k * k)?;
            let bias = r.f32s(out)?;
            layers.push(ConvLayer {
                out_channels: out,
                in_channels: inp,
                kernel_size: k,
                kernel,
                bias,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::BadWeights(format!(
                "{} trailing bytes after layer 3",
                bytes.len() - r.pos
            )));
        }
        let layers: [ConvLayer; 3] = layers.try_into().expect("three layers parsed");
        Self::new(layers)
    }

    /// Serializes to SRW1. Values are narrowed to `f32`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&3u32.to_le_bytes());
        for l in &self.layers {
            for d in [l.out_channels, l.in_channels, l.kernel_size, l.kernel_size] {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &v in l.kernel.iter().chain(&l.bias) {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Loads and validates an SRW1 weight file.
pub fn srcnn_load_weights(path: impl AsRef<Path>) -> Result<SrcnnWeights> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::WeightsNotFound(path.to_path_buf())
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    SrcnnWeights::from_bytes(&bytes)
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::BadWeights(format!("truncated file at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 4)?;
        Ok(raw
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
            .collect())
    }
}

/// Bicubic enlargement followed by the three-layer network, on a
/// single-channel patch.
pub fn srcnn_upscale(patch: &Image, factor: usize, weights: &SrcnnWeights) -> Result<Image> {
    patch.require_single_channel()?;
    let up = bicubic_upscale(patch, factor)?;
    let (w, h) = (up.width(), up.height());
    let pad = RECEPTIVE_PAD;
    let (pw, ph) = (w + 2 * pad, h + 2 * pad);

    let mut padded = vec![0.0; pw * ph];
    let src = up.data();
    for (py, row) in padded.chunks_exact_mut(pw).enumerate() {
        let sy = py.saturating_sub(pad).min(h - 1);
        let srow = &src[sy * w..(sy + 1) * w];
        for (px, v) in row.iter_mut().enumerate() {
            *v = srow[px.saturating_sub(pad).min(w - 1)] / 255.0;
        }
    }

    let out = forward(weights, &padded, pw, ph);
    debug_assert_eq!(out.len(), w * h);
    let data = out
        .into_iter()
        .map(|v| (v * 255.0).clamp(0.0, 255.0))
        .collect();
    Ok(Image::from_raw_unchecked(w, h, 1, data))
}

/// Rows of one layer's activations kept for the next layer. Row `r` lives in
/// slot `r % slots`; each slot holds `channels * width` values, channel-major.
struct RowRing {
    width: usize,
    channels: usize,
    slots: Vec<Vec<f64>>,
}

impl RowRing {
    fn new(slots: usize, channels: usize, width: usize) -> Self {
        RowRing {
            width,
            channels,
            slots: vec![vec![0.0; channels * width]; slots],
        }
    }

    fn slot(&self, row: usize) -> &[f64] {
        &self.slots[row % self.slots.len()]
    }

    fn slot_mut(&mut self, row: usize) -> &mut [f64] {
        let n = self.slots.len();
        &mut self.slots[row % n]
    }
}

fn forward(weights: &SrcnnWeights, input: &[f64], width: usize, height: usize) -> Vec<f64> {
    let [l1, l2, l3] = weights.layers();
    let w1 = width - (l1.kernel_size - 1);
    let w2 = w1 - (l2.kernel_size - 1);
    let w3 = w2 - (l3.kernel_size - 1);
    let h2 = height - (l1.kernel_size - 1) - (l2.kernel_size - 1);

    let mut ring1 = RowRing::new(l2.kernel_size, l1.out_channels, w1);
    let mut ring2 = RowRing::new(l3.kernel_size, l2.out_channels, w2);
    let mut out_row = vec![0.0; w3];
    let mut out = Vec::with_capacity(w3 * (h2 - (l3.kernel_size - 1)));
    let mut col = Vec::new();
    let mut next_l1 = 0;

    for r2 in 0..h2 {
        while next_l1 < r2 + l2.kernel_size {
            let rows: Vec<&[f64]> = (0..l1.kernel_size)
                .map(|k| &input[(next_l1 + k) * width..(next_l1 + k + 1) * width])
                .collect();
            conv_row(
                l1,
                &rows,
                width,
                w1,
                &mut col,
                ring1.slot_mut(next_l1),
                true,
            );
            next_l1 += 1;
        }
        {
            let rows: Vec<&[f64]> = (0..l2.kernel_size).map(|k| ring1.slot(r2 + k)).collect();
            let dst = &mut ring2.slots[r2 % l3.kernel_size];
            conv_row(l2, &rows, ring1.width, w2, &mut col, dst, true);
        }
        if r2 + 1 >= l3.kernel_size {
            let top = r2 + 1 - l3.kernel_size;
            let rows: Vec<&[f64]> = (0..l3.kernel_size).map(|k| ring2.slot(top + k)).collect();
            conv_row(l3, &rows, ring2.width, w3, &mut col, &mut out_row, false);
            out.extend_from_slice(&out_row);
        }
    }
    debug_assert_eq!(ring1.channels, l2.in_channels);
    debug_assert_eq!(ring2.channels, l3.in_channels);
    out
}

/// One output row of a valid convolution. `rows[k]` is input row `y + k`,
/// laid out channel-major with `in_width` samples per channel. The result is
/// written channel-major into `dst`.
fn conv_row(
    layer: &ConvLayer,
    rows: &[&[f64]],
    in_width: usize,
    out_width: usize,
    col: &mut Vec<f64>,
    dst: &mut [f64],
    relu: bool,
) {
    let k = layer.kernel_size;
    let taps = layer.taps();
    col.resize(taps * out_width, 0.0);

    // im2col: row (ic, ky, kx) of the matrix holds input[ic][y + ky][x + kx].
    let mut r = 0;
    for ic in 0..layer.in_channels {
        for row in rows.iter().take(k) {
            let src = &row[ic * in_width..(ic + 1) * in_width];
            for kx in 0..k {
                col[r * out_width..(r + 1) * out_width].copy_from_slice(&src[kx..kx + out_width]);
                r += 1;
            }
        }
    }

    let dst = &mut dst[..layer.out_channels * out_width];
    // SAFETY: the matrices are dense row-major buffers sized m*k, k*n and
    // m*n, matching the strides passed.
    unsafe {
        matrixmultiply::dgemm(
            layer.out_channels,
            taps,
            out_width,
            1.0,
            layer.kernel.as_ptr(),
            taps as isize,
            1,
            col.as_ptr(),
            out_width as isize,
            1,
            0.0,
            dst.as_mut_ptr(),
            out_width as isize,
            1,
        );
    }
    for (row, &b) in dst.chunks_exact_mut(out_width).zip(&layer.bias) {
        for v in row {
            *v += b;
            if relu && *v < 0.0 {
                *v = 0.0;
            }
        }
    }
}
