mod common;

use selsr::image::degrade;
use selsr::upscale::bicubic_upscale;
use selsr::Image;

/// Kernel straight from its piecewise definition.
fn keys(d: f64) -> f64 {
    let a = -0.5;
    let d = d.abs();
    if d <= 1.0 {
        (a + 2.0) * d * d * d - (a + 3.0) * d * d + 1.0
    } else if d < 2.0 {
        a * d * d * d - 5.0 * a * d * d + 8.0 * a * d - 4.0 * a
    } else {
        0.0
    }
}

/// One output sample at a time: rows of four horizontal taps, then the
/// vertical combination.
fn scalar_upscale(img: &Image, factor: usize) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::new();
    for oy in 0..h * factor {
        let sy = (oy as f64 + 0.5) / factor as f64 - 0.5;
        let y0 = sy.floor();
        for ox in 0..w * factor {
            let sx = (ox as f64 + 0.5) / factor as f64 - 0.5;
            let x0 = sx.floor();
            let mut acc = 0.0;
            for j in -1i64..=2 {
                let yy = (y0 as i64 + j).clamp(0, h as i64 - 1) as usize;
                let wy = keys(sy - (y0 + j as f64));
                let mut row = 0.0;
                for i in -1i64..=2 {
                    let xx = (x0 as i64 + i).clamp(0, w as i64 - 1) as usize;
                    row += keys(sx - (x0 + i as f64)) * img.get(xx, yy, 0);
                }
                acc += wy * row;
            }
            out.push(acc.clamp(0.0, 255.0));
        }
    }
    out
}

#[test]
fn four_by_four_matches_scalar_reference_bitwise() {
    let img = Image::new(
        4,
        4,
        1,
        vec![
            12.0, 200.0, 33.0, 90.0, 255.0, 0.0, 17.5, 64.0, 128.0, 129.0, 250.0, 3.0, 77.0, 31.0,
            180.0, 222.0,
        ],
    )
    .unwrap();
    let fast = bicubic_upscale(&img, 2).unwrap();
    let reference = scalar_upscale(&img, 2);
    for (a, b) in fast.data().iter().zip(&reference) {
        assert_eq!(a.to_bits(), b.to_bits(), "{a} vs {b}");
    }
}

#[test]
fn random_patches_match_scalar_reference() {
    let mut rng = common::rng(3);
    for factor in [2usize, 3, 4] {
        let img = common::random_image(&mut rng, 13, 9, 1);
        let fast = bicubic_upscale(&img, factor).unwrap();
        let reference = scalar_upscale(&img, factor);
        for (a, b) in fast.data().iter().zip(&reference) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn degrade_large_image_dimensions() {
    // Only the geometry matters here; keep the content trivial.
    let hr = Image::filled(6000, 4800, 90.0).unwrap();
    let lr = degrade(&hr, 2).unwrap();
    assert_eq!((lr.width(), lr.height()), (3000, 2400));
}

#[test]
fn degrade_is_per_channel() {
    let mut rng = common::rng(5);
    let hr = common::random_image(&mut rng, 8, 6, 3);
    let lr = degrade(&hr, 2).unwrap();
    for c in 0..3 {
        assert_eq!(lr.channel(c), degrade(&hr.channel(c), 2).unwrap());
    }
}
