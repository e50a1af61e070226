//! Shared fixtures and brute-force reference implementations for the
//! integration tests. Nothing here calls into the optimized code paths it is
//! used to check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selsr::upscale::srcnn::{ConvLayer, SrcnnWeights, ARCHITECTURE};
use selsr::Image;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut impl Rng, w: usize, h: usize, channels: usize) -> Image {
    let data = (0..w * h * channels)
        .map(|_| rng.gen_range(0.0..=255.0))
        .collect();
    Image::new(w, h, channels, data).unwrap()
}

pub fn random_u8_image(rng: &mut impl Rng, w: usize, h: usize, channels: usize) -> Image {
    let data = (0..w * h * channels)
        .map(|_| f64::from(rng.gen::<u8>()))
        .collect();
    Image::new(w, h, channels, data).unwrap()
}

/// Left half: smooth diagonal gradient. Right half: a mix of fine checker
/// blocks, oriented sinusoids and thin lines.
pub fn synthetic_hr(w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        if x < w / 2 {
            40.0 + 120.0 * (xf + yf) / (w + h) as f64
        } else {
            let checker = if ((x / 3) + (y / 3)) % 2 == 0 {
                60.0
            } else {
                -60.0
            };
            let wave = 45.0 * (xf * 0.9 + yf * 0.4).sin() + 30.0 * (yf * 1.3 - xf * 0.2).cos();
            let line = if (x + 2 * y) % 17 < 2 { 50.0 } else { 0.0 };
            (128.0 + checker + wave + line).clamp(0.0, 255.0)
        }
    })
    .unwrap()
}

pub fn random_weights(rng: &mut impl Rng) -> SrcnnWeights {
    let layers = ARCHITECTURE.map(|(o, i, k)| {
        let fan_in = (i * k * k) as f64;
        let scale = (2.0 / fan_in).sqrt();
        let mut l = ConvLayer::zeros(o, i, k);
        for v in &mut l.kernel {
            *v = f64::from((rng.gen_range(-1.0..1.0) * scale) as f32);
        }
        for v in &mut l.bias {
            *v = f64::from(rng.gen_range(-0.05..0.05f64) as f32);
        }
        l
    });
    // Centre the output around mid-gray so clamping rarely hides errors.
    let mut w = layers;
    w[2].bias[0] = 0.5;
    SrcnnWeights::new(w).unwrap()
}

/// Textbook valid convolution with replicate padding, four nested loops per
/// layer, in f64. Input is the already-enlarged patch in [0, 255].
pub fn naive_srcnn(enlarged: &Image, weights: &SrcnnWeights) -> Vec<f64> {
    let pad = 7usize;
    let (w, h) = (enlarged.width(), enlarged.height());
    let (pw, ph) = (w + 2 * pad, h + 2 * pad);
    let mut act: Vec<Vec<f64>> = vec![vec![0.0; pw * ph]];
    for y in 0..ph {
        for x in 0..pw {
            let sx = (x as isize - pad as isize).clamp(0, w as isize - 1) as usize;
            let sy = (y as isize - pad as isize).clamp(0, h as isize - 1) as usize;
            act[0][y * pw + x] = enlarged.get(sx, sy, 0) / 255.0;
        }
    }
    let (mut cw, mut ch) = (pw, ph);
    for (li, layer) in weights.layers().iter().enumerate() {
        let k = layer.kernel_size;
        let (ow, oh) = (cw - k + 1, ch - k + 1);
        let mut next = vec![vec![0.0; ow * oh]; layer.out_channels];
        for (oc, plane) in next.iter_mut().enumerate() {
            for y in 0..oh {
                for x in 0..ow {
                    let mut s = layer.bias[oc];
                    for (ic, inp) in act.iter().enumerate() {
                        for ky in 0..k {
                            for kx in 0..k {
                                s += layer.kernel[layer.index(oc, ic, ky, kx)]
                                    * inp[(y + ky) * cw + x + kx];
                            }
                        }
                    }
                    if li < 2 {
                        s = s.max(0.0);
                    }
                    plane[y * ow + x] = s;
                }
            }
        }
        act = next;
        cw = ow;
        ch = oh;
    }
    assert_eq!((cw, ch), (w, h));
    act[0]
        .iter()
        .map(|v| (v * 255.0).clamp(0.0, 255.0))
        .collect()
}

pub fn naive_mse(a: &Image, b: &Image) -> f64 {
    let mut s = 0.0;
    for y in 0..a.height() {
        for x in 0..a.width() {
            let d = a.get(x, y, 0) - b.get(x, y, 0);
            s += d * d;
        }
    }
    s / (a.width() * a.height()) as f64
}

/// Per-window SSIM with an explicit 2-D Gaussian and direct moments.
pub fn naive_ssim(a: &Image, b: &Image) -> f64 {
    let n = 11usize;
    let sigma = 1.5f64;
    let mut win = vec![0.0; n * n];
    for (i, v) in win.iter_mut().enumerate() {
        let (dy, dx) = ((i / n) as f64 - 5.0, (i % n) as f64 - 5.0);
        *v = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
    }
    let total: f64 = win.iter().sum();
    win.iter_mut().for_each(|v| *v /= total);
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let (w, h) = (a.width(), a.height());
    let mut acc = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - n {
        for x0 in 0..=w - n {
            let (mut mx, mut my) = (0.0, 0.0);
            for j in 0..n {
                for i in 0..n {
                    let g = win[j * n + i];
                    mx += g * a.get(x0 + i, y0 + j, 0);
                    my += g * b.get(x0 + i, y0 + j, 0);
                }
            }
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for j in 0..n {
                for i in 0..n {
                    let g = win[j * n + i];
                    let dx = a.get(x0 + i, y0 + j, 0) - mx;
                    let dy = b.get(x0 + i, y0 + j, 0) - my;
                    vx += g * dx * dx;
                    vy += g * dy * dy;
                    cov += g * dx * dy;
                }
            }
            acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    acc / count as f64
}
