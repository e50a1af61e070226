//! MSE, PSNR and SSIM between a reference and a test image.
//!
//! All accumulation is in `f64`. SSIM uses an 11x11 Gaussian window
//! (sigma 1.5, weights summing to 1) at every valid position and averages
//! the per-window scores.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::image::{Image, LumaChromaImage};

pub const PEAK: f64 = 255.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Output rows per parallel SSIM band. Fixed so the result never depends on
/// the thread count.
const SSIM_BAND: usize = 32;

fn check_pair(reference: &Image, test: &Image) -> Result<()> {
    reference.require_single_channel()?;
    test.require_single_channel()?;
    if reference.width() != test.width() || reference.height() != test.height() {
        return Err(Error::DimensionMismatch(format!(
            "reference {}x{} vs test {}x{}",
            reference.width(),
            reference.height(),
            test.width(),
            test.height()
        )));
    }
    Ok(())
}

pub fn mse(reference: &Image, test: &Image) -> Result<f64> {
    check_pair(reference, test)?;
    Ok(mse_unchecked(reference.data(), test.data()))
}

fn mse_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    sum / a.len() as f64
}

/// `10 log10(255^2 / mse)`; infinite when the MSE is zero.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    mse(reference, test).map(psnr_from_mse)
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let c = (SSIM_WINDOW / 2) as f64;
    let mut g = [0.0; SSIM_WINDOW];
    for (i, v) in g.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.map(|v| v / s)
}

pub fn ssim(reference: &Image, test: &Image) -> Result<f64> {
    check_pair(reference, test)?;
    let (w, h) = (reference.width(), reference.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let g = gaussian_taps();
    let (x, y) = (reference.data(), test.data());
    let out_w = w - SSIM_WINDOW + 1;
    let out_h = h - SSIM_WINDOW + 1;
    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);

    // Horizontal pass over one input row for the five moment maps.
    let horizontal = |row: usize| -> [Vec<f64>; 5] {
        let xr = &x[row * w..(row + 1) * w];
        let yr = &y[row * w..(row + 1) * w];
        let mut m: [Vec<f64>; 5] = Default::default();
        for v in &mut m {
            v.reserve_exact(out_w);
        }
        for ox in 0..out_w {
            let mut s = [0.0; 5];
            for (k, &gk) in g.iter().enumerate() {
                let (a, b) = (xr[ox + k], yr[ox + k]);
                s[0] += gk * a;
                s[1] += gk * b;
                s[2] += gk * (a * a);
                s[3] += gk * (b * b);
                s[4] += gk * (a * b);
            }
            for (v, si) in m.iter_mut().zip(s) {
                v.push(si);
            }
        }
        m
    };

    let band_sums: Vec<f64> = (0..out_h.div_ceil(SSIM_BAND))
        .into_par_iter()
        .map(|band| {
            let top = band * SSIM_BAND;
            let bottom = (top + SSIM_BAND).min(out_h);
            let rows: Vec<[Vec<f64>; 5]> =
                (top..bottom + SSIM_WINDOW - 1).map(horizontal).collect();
            let mut band_sum = 0.0;
            for oy in top..bottom {
                let mut row_sum = 0.0;
                for ox in 0..out_w {
                    let mut s = [0.0; 5];
                    for (k, &gk) in g.iter().enumerate() {
                        let r = &rows[oy - top + k];
                        for (si, ri) in s.iter_mut().zip(r) {
                            *si += gk * ri[ox];
                        }
                    }
                    let [mx, my, exx, eyy, exy] = s;
                    let vx = exx - mx * mx;
                    let vy = eyy - my * my;
                    let cov = exy - mx * my;
                    row_sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                        / ((mx * mx + my * my + c1) * (vx + vy + c2));
                }
                band_sum += row_sum;
            }
            band_sum
        })
        .collect();

    let total: f64 = band_sums.iter().sum();
    Ok(total / (out_w * out_h) as f64)
}

/// MSE, PSNR and SSIM of one comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    #[serde(serialize_with = "ser_metric")]
    pub mse: f64,
    #[serde(serialize_with = "ser_psnr")]
    pub psnr_db: f64,
    #[serde(serialize_with = "ser_metric")]
    pub ssim: f64,
}

/// Which samples the metrics compare for colour inputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum MetricSpace {
    /// BT.601 luminance only.
    #[default]
    Luma,
    /// Average over the R, G and B channels.
    RgbMean,
}

impl MetricsReport {
    /// Metrics on single-channel images.
    pub fn compute(reference: &Image, test: &Image) -> Result<Self> {
        let mse = mse(reference, test)?;
        Ok(MetricsReport {
            mse,
            psnr_db: psnr_from_mse(mse),
            ssim: ssim(reference, test)?,
        })
    }

    /// Metrics on images of any supported channel count.
    ///
    /// For `RgbMean` the MSE is the mean of per-channel MSEs (equivalently the
    /// MSE over all samples), PSNR follows from it, and SSIM is the mean of
    /// per-channel SSIMs.
    pub fn evaluate(reference: &Image, test: &Image, space: MetricSpace) -> Result<Self> {
        if !reference.same_shape(test) {
            return Err(Error::DimensionMismatch(format!(
                "reference {}x{}x{} vs test {}x{}x{}",
                reference.width(),
                reference.height(),
                reference.channels(),
                test.width(),
                test.height(),
                test.channels()
            )));
        }
        if reference.channels() == 1 {
            return Self::compute(reference, test);
        }
        match space {
            MetricSpace::Luma => Self::compute(
                &LumaChromaImage::decompose(reference)?.luma,
                &LumaChromaImage::decompose(test)?.luma,
            ),
            MetricSpace::RgbMean => {
                let n = reference.channels() as f64;
                let (mut mse_sum, mut ssim_sum) = (0.0, 0.0);
                for c in 0..reference.channels() {
                    let (r, t) = (reference.channel(c), test.channel(c));
                    mse_sum += mse(&r, &t)?;
                    ssim_sum += ssim(&r, &t)?;
                }
                let mse = mse_sum / n;
                Ok(MetricsReport {
                    mse,
                    psnr_db: psnr_from_mse(mse),
                    ssim: ssim_sum / n,
                })
            }
        }
    }
}

/// Rounds to the 4 decimal places metrics are reported with.
pub fn round_to_4(v: f64) -> f64 {
    round_to(v, 4)
}

pub(crate) fn round_to(v: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (v * scale).round() / scale
}

pub(crate) fn ser_metric<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_to(*v, 4))
}

pub(crate) fn ser_psnr<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(round_to(*v, 4))
    }
}
