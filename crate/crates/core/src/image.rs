//! Planar floating-point images, 8-bit PNG I/O, BT.601 colour conversion and
//! low-resolution synthesis.

use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Read};
use std::path::Path;

use crate::error::{Error, Result};
use crate::upscale::bicubic;

/// Largest decoded buffer accepted from a PNG, in bytes.
const PNG_DECODE_LIMIT: usize = 1 << 31;

/// A planar image with 1 or 3 channels and samples in `[0, 255]`.
///
/// Samples are stored channel-major: all of channel 0 row by row, then
/// channel 1, and so on.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from planar samples. Samples are clamped to `[0, 255]`;
    /// NaN or infinite samples are rejected.
    pub fn new(width: usize, height: usize, channels: usize, mut data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::InvalidImage("sample count overflows".into()))?;
        if data.len() != expected {
            return Err(Error::InvalidImage(format!(
                "expected {expected} samples for {width}x{height}x{channels}, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite sample".into()));
        }
        clamp_samples(&mut data);
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    /// Single-channel image filled with `value`.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Image::new(width, height, 1, vec![value; width * height])
    }

    /// Single-channel image with samples produced by `f(x, y)`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Image::new(width, height, 1, data)
    }

    /// Stacks single-channel planes of equal size into one image.
    pub fn from_planes(planes: &[&Image]) -> Result<Self> {
        let first = planes.first().ok_or(Error::Empty("plane list"))?;
        let mut data = Vec::with_capacity(first.data.len() * planes.len());
        for p in planes {
            if p.channels != 1 {
                return Err(Error::ChannelCount {
                    expected: 1,
                    actual: p.channels,
                });
            }
            if p.width != first.width || p.height != first.height {
                return Err(Error::DimensionMismatch(format!(
                    "plane {}x{} vs {}x{}",
                    p.width, p.height, first.width, first.height
                )));
            }
            data.extend_from_slice(&p.data);
        }
        Image::new(first.width, first.height, planes.len(), data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[channel * n..(channel + 1) * n]
    }

    /// Copies one channel out as a single-channel image.
    pub fn channel(&self, channel: usize) -> Image {
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.plane(channel).to_vec(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, channel: usize) -> f64 {
        self.data[(channel * self.height + y) * self.width + x]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn from_raw_unchecked(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Image {
        debug_assert_eq!(data.len(), width * height * channels);
        Image {
            width,
            height,
            channels,
            data,
        }
    }

    pub(crate) fn require_single_channel(&self) -> Result<()> {
        if self.channels != 1 {
            return Err(Error::ChannelCount {
                expected: 1,
                actual: self.channels,
            });
        }
        Ok(())
    }
}

pub(crate) fn clamp_samples(data: &mut [f64]) {
    for v in data {
        *v = v.clamp(0.0, 255.0);
    }
}

/// Luminance plane plus optional chroma planes.
#[derive(Clone, Debug, PartialEq)]
pub struct LumaChromaImage {
    pub luma: Image,
    pub chroma: Option<(Image, Image)>,
}

impl LumaChromaImage {
    /// Splits any supported image: grayscale becomes luma only, RGB is
    /// converted to YCbCr.
    pub fn decompose(img: &Image) -> Result<Self> {
        match img.channels() {
            1 => Ok(LumaChromaImage {
                luma: img.clone(),
                chroma: None,
            }),
            _ => rgb_to_ycbcr(img),
        }
    }

    /// Inverse of [`LumaChromaImage::decompose`].
    pub fn recompose(&self) -> Result<Image> {
        match &self.chroma {
            None => Ok(self.luma.clone()),
            Some(_) => ycbcr_to_rgb(self),
        }
    }

    pub fn width(&self) -> usize {
        self.luma.width()
    }

    pub fn height(&self) -> usize {
        self.luma.height()
    }
}

/// Full-range BT.601 RGB to YCbCr.
pub fn rgb_to_ycbcr(img: &Image) -> Result<LumaChromaImage> {
    if img.channels() != 3 {
        return Err(Error::ChannelCount {
            expected: 3,
            actual: img.channels(),
        });
    }
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let n = r.len();
    let mut y = Vec::with_capacity(n);
    let mut cb = Vec::with_capacity(n);
    let mut cr = Vec::with_capacity(n);
    for i in 0..n {
        let (r, g, b) = (r[i], g[i], b[i]);
        y.push(0.299 * r + 0.587 * g + 0.114 * b);
        cb.push(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b);
        cr.push(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b);
    }
    let (w, h) = (img.width(), img.height());
    Ok(LumaChromaImage {
        luma: Image::new(w, h, 1, y)?,
        chroma: Some((Image::new(w, h, 1, cb)?, Image::new(w, h, 1, cr)?)),
    })
}

/// Full-range BT.601 YCbCr to RGB.
pub fn ycbcr_to_rgb(ycc: &LumaChromaImage) -> Result<Image> {
    let (cb, cr) = ycc.chroma.as_ref().ok_or(Error::ChannelCount {
        expected: 3,
        actual: 1,
    })?;
    let y = &ycc.luma;
    if !y.same_shape(cb) || !y.same_shape(cr) {
        return Err(Error::DimensionMismatch(
            "luma and chroma planes differ in size".into(),
        ));
    }
    let (yp, cbp, crp) = (y.data(), cb.data(), cr.data());
    let n = yp.len();
    let mut out = vec![0.0; 3 * n];
    for i in 0..n {
        let (l, u, v) = (yp[i], cbp[i] - 128.0, crp[i] - 128.0);
        out[i] = l + 1.402 * v;
        out[n + i] = l - 0.344136 * u - 0.714136 * v;
        out[2 * n + i] = l + 1.772 * u;
    }
    Image::new(y.width(), y.height(), 3, out)
}

/// Reads an 8-bit grayscale or RGB PNG.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    decode_png(&bytes)
}

/// Decodes an in-memory 8-bit grayscale or RGB PNG.
pub fn decode_png(bytes: &[u8]) -> Result<Image> {
    let mut decoder = png::Decoder::new_with_limits(
        Cursor::new(bytes),
        png::Limits {
            bytes: PNG_DECODE_LIMIT,
        },
    );
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Decode(e.to_string()))?;
    let info = reader.info();
    let (width, height) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => {
            return Err(Error::Unsupported(format!(
                "color type {other:?}; only 8-bit grayscale or RGB without alpha is accepted"
            )))
        }
    };
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Unsupported(format!(
            "bit depth {:?}; only 8-bit samples are accepted",
            info.bit_depth
        )));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Decode("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Decode(e.to_string()))?;
    let buf = &buf[..frame.buffer_size()];

    let n = width * height;
    let mut data = vec![0.0; n * channels];
    for (i, px) in buf.chunks_exact(channels).enumerate().take(n) {
        for (c, &v) in px.iter().enumerate() {
            data[c * n + i] = f64::from(v);
        }
    }
    Image::new(width, height, channels, data)
}

/// Quantizes a sample to 8 bits: clamp, then round half away from zero.
#[inline]
pub fn quantize(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// Encodes an image as an 8-bit PNG in memory.
pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let n = img.width() * img.height();
    let c = img.channels();
    let mut raw = vec![0u8; n * c];
    for ch in 0..c {
        for (i, &v) in img.plane(ch).iter().enumerate() {
            raw[i * c + ch] = quantize(v);
        }
    }
    let color = if c == 1 {
        png::ColorType::Grayscale
    } else {
        png::ColorType::Rgb
    };
    write_png(img.width(), img.height(), color, png::BitDepth::Eight, &raw)
}

pub(crate) fn write_png(
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    raw: &[u8],
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(
            BufWriter::new(&mut out),
            u32::try_from(width).map_err(|_| Error::Encode("width exceeds u32".into()))?,
            u32::try_from(height).map_err(|_| Error::Encode("height exceeds u32".into()))?,
        );
        encoder.set_color(color);
        encoder.set_depth(depth);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer
            .write_image_data(raw)
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer.finish().map_err(|e| Error::Encode(e.to_string()))?;
    }
    Ok(out)
}

/// Writes an image as an 8-bit PNG.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Synthesizes a low-resolution image by bicubic downsampling each channel
/// by an integer `scale`.
pub fn degrade(hr: &Image, scale: usize) -> Result<Image> {
    if scale < 2 {
        return Err(Error::InvalidArgument(format!(
            "degrade scale must be at least 2, got {scale}"
        )));
    }
    if !hr.width().is_multiple_of(scale) || !hr.height().is_multiple_of(scale) {
        return Err(Error::NotDivisible {
            width: hr.width(),
            height: hr.height(),
            divisor: scale,
            valid: crate::error::common_divisors(hr.width(), hr.height(), 2)
                .into_iter()
                .take(16)
                .collect(),
        });
    }
    let (w, h) = (hr.width() / scale, hr.height() / scale);
    let mut data = Vec::with_capacity(w * h * hr.channels());
    for c in 0..hr.channels() {
        data.extend(bicubic::resample_plane(
            hr.plane(c),
            hr.width(),
            hr.height(),
            w,
            h,
        ));
    }
    Ok(Image::from_raw_unchecked(w, h, hr.channels(), data))
}
