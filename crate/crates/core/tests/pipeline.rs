mod common;

use proptest::prelude::*;
use selsr::image::degrade;
use selsr::metrics::psnr;
use selsr::patch_grid::{fuse, tile};
use selsr::pipeline::{plan_allocation, predicted_time_advantage, run, topk_count, RunConfig};
use selsr::saliency::rank_patches;
use selsr::upscale::{bicubic_upscale, Bicubic, Oracle, Srcnn, SrcnnWeights};
use selsr::Image;

fn config(s: usize, p: f64) -> RunConfig {
    RunConfig {
        factor: 2,
        patch_size: s,
        topk: p,
        threshold: 100.0,
    }
}

fn oracle_for(hr: &Image, s: usize) -> Oracle {
    Oracle::new(tile(hr, s * 2).unwrap())
}

fn rect_mse(a: &Image, b: &Image, x0: usize, y0: usize, side: usize) -> f64 {
    let mut sum = 0.0;
    for y in y0..y0 + side {
        for x in x0..x0 + side {
            let d = a.get(x, y, 0) - b.get(x, y, 0);
            sum += d * d;
        }
    }
    sum / (side * side) as f64
}

#[test]
fn allocation_examples() {
    let ranking = rank_patches(&vec![1; 720]).unwrap();
    assert_eq!(plan_allocation(&ranking, 60.0).unwrap().k, 432);

    let ranking = rank_patches(&[4, 9, 7]).unwrap();
    let plan = plan_allocation(&ranking, 50.0).unwrap();
    assert_eq!(plan.k, 2);
    assert_eq!(plan.deep_indices, vec![1, 2]);
    assert_eq!(plan.cheap_indices, vec![0]);

    let none = plan_allocation(&ranking, 0.0).unwrap();
    assert!(none.deep_indices.is_empty());
    let all = plan_allocation(&ranking, 100.0).unwrap();
    assert!(all.cheap_indices.is_empty());

    for p in [-1.0, 100.5, f64::NAN] {
        assert!(plan_allocation(&ranking, p).is_err());
    }
}

#[test]
fn half_up_rounding_boundaries() {
    // p * N / 100 lands exactly on .5 for these pairs.
    assert_eq!(topk_count(10, 25.0), 3);
    assert_eq!(topk_count(2, 25.0), 1);
    assert_eq!(topk_count(6, 75.0), 5);
    assert_eq!(topk_count(180, 60.0), 108);
}

#[test]
fn predicted_advantage_examples() {
    let adv = predicted_time_advantage(71.91, 0.10, 60.0).unwrap();
    assert!((adv - 28.724).abs() < 1e-9, "{adv}");
    assert_eq!(predicted_time_advantage(71.91, 0.10, 100.0).unwrap(), 0.0);
    assert!((predicted_time_advantage(71.91, 0.10, 0.0).unwrap() - 71.81).abs() < 1e-12);
    assert!(predicted_time_advantage(1.0, 1.0, 101.0).is_err());
    assert!(predicted_time_advantage(-1.0, 1.0, 50.0).is_err());
}

#[test]
fn p_zero_is_per_patch_bicubic() {
    let hr = common::synthetic_hr(200, 200);
    let lr = degrade(&hr, 2).unwrap();
    let (out, report) = run(
        &lr,
        &config(25, 0.0),
        &Srcnn::new(SrcnnWeights::identity()),
        None,
    )
    .unwrap();
    let grid = tile(&lr, 25).unwrap();
    let ups: Vec<Image> = grid
        .patches()
        .iter()
        .map(|p| bicubic_upscale(p, 2).unwrap())
        .collect();
    assert_eq!(out, fuse(&grid.shape(), &ups, 2).unwrap());
    assert_eq!(report.counts.patches_deep, 0);
    assert_eq!(report.counts.patches_cheap, 16);
    assert!(report.metrics.is_none());
}

#[test]
fn p_hundred_identity_network_matches_bicubic() {
    let hr = common::synthetic_hr(160, 120);
    let lr = degrade(&hr, 2).unwrap();
    let (deep, r) = run(
        &lr,
        &config(20, 100.0),
        &Srcnn::new(SrcnnWeights::identity()),
        None,
    )
    .unwrap();
    let (cheap, _) = run(&lr, &config(20, 0.0), &Bicubic, None).unwrap();
    assert_eq!(r.counts.patches_deep, r.counts.patches_total);
    for (a, b) in deep.data().iter().zip(cheap.data()) {
        assert!((a - b).abs() <= 1e-3);
    }
}

#[test]
fn oracle_backend_zeroes_deep_patch_error() {
    let hr = common::synthetic_hr(400, 400);
    let lr = degrade(&hr, 2).unwrap();
    let oracle = oracle_for(&hr, 100);
    let (base, r0) = run(&lr, &config(100, 0.0), &oracle, Some(&hr)).unwrap();
    let (out, r60) = run(&lr, &config(100, 60.0), &oracle, Some(&hr)).unwrap();
    assert_eq!(r60.counts.patches_total, 4);
    assert_eq!(r60.counts.patches_deep, 2);

    let luma = tile(&lr, 100).unwrap();
    let (_, ranking) = selsr::pipeline::analyze(&luma, 100.0).unwrap();
    let plan = plan_allocation(&ranking, 60.0).unwrap();
    let mut total = 0.0;
    for i in 0..4 {
        let (c, r) = luma.shape().position(i);
        let e = rect_mse(&hr, &out, c * 200, r * 200, 200);
        if plan.is_deep(i) {
            assert_eq!(e, 0.0, "deep patch {i}");
        } else {
            assert_eq!(e, rect_mse(&hr, &base, c * 200, r * 200, 200));
        }
        total += e / 4.0;
    }
    assert!((total - r60.metrics.unwrap().mse).abs() < 1e-9);
    assert!(psnr(&hr, &out).unwrap() > psnr(&hr, &base).unwrap());
    assert!(r60.metrics.unwrap().psnr_db > r0.metrics.unwrap().psnr_db);

    let (full, r100) = run(&lr, &config(100, 100.0), &oracle, Some(&hr)).unwrap();
    assert_eq!(full, hr);
    assert!(r100.metrics.unwrap().psnr_db.is_infinite());
}

#[test]
fn rgb_input_keeps_colour() {
    let mut rng = common::rng(61);
    let lr = common::random_image(&mut rng, 40, 40, 3);
    let (out, report) = run(
        &lr,
        &config(20, 50.0),
        &Srcnn::new(SrcnnWeights::identity()),
        None,
    )
    .unwrap();
    assert_eq!((out.width(), out.height(), out.channels()), (80, 80, 3));
    assert_eq!(report.counts.patches_deep, 2);
    let (bic, _) = run(&lr, &config(20, 0.0), &Bicubic, None).unwrap();
    for (a, b) in out.data().iter().zip(bic.data()) {
        assert!((a - b).abs() <= 1e-3);
    }
}

#[test]
fn output_independent_of_thread_count() {
    let mut rng = common::rng(62);
    let weights = common::random_weights(&mut rng);
    let lr = degrade(&common::synthetic_hr(96, 96), 2).unwrap();
    let deep = Srcnn::new(weights);
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let (a, ra) = one.install(|| run(&lr, &config(12, 40.0), &deep, None).unwrap());
    let (b, rb) = four.install(|| run(&lr, &config(12, 40.0), &deep, None).unwrap());
    assert_eq!(a, b);
    assert_eq!(ra.counts, rb.counts);
    assert_eq!(ra.config, rb.config);
}

#[test]
fn patch_regions_are_independent() {
    let mut rng = common::rng(63);
    let lr = common::random_image(&mut rng, 30, 30, 1);
    let mut changed = lr.data().to_vec();
    // Overwrite patch 4 (centre of the 3x3 grid).
    for y in 10..20 {
        for x in 10..20 {
            changed[y * 30 + x] = 0.0;
        }
    }
    let changed = Image::new(30, 30, 1, changed).unwrap();
    let deep = Srcnn::new(SrcnnWeights::unsharp(0.6, 1.0));
    for p in [0.0, 100.0] {
        let (a, _) = run(&lr, &config(10, p), &deep, None).unwrap();
        let (b, _) = run(&changed, &config(10, p), &deep, None).unwrap();
        for y in 0..60 {
            for x in 0..60 {
                let in_centre = (20..40).contains(&x) && (20..40).contains(&y);
                if !in_centre {
                    assert_eq!(a.get(x, y, 0), b.get(x, y, 0));
                }
            }
        }
    }
}

#[test]
fn report_json_shape() {
    let hr = common::synthetic_hr(80, 80);
    let lr = degrade(&hr, 2).unwrap();
    let (_, report) = run(&lr, &config(20, 60.0), &Bicubic, Some(&hr)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    let keys = |o: &serde_json::Value| {
        let mut k: Vec<String> = o.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    };
    assert_eq!(keys(&v), ["config", "counts", "metrics", "timings_s"]);
    assert_eq!(
        keys(&v["config"]),
        ["backend", "factor", "p", "patch_size", "threshold"]
    );
    assert_eq!(keys(&v["metrics"]), ["mse", "psnr_db", "ssim"]);
    assert_eq!(
        keys(&v["timings_s"]),
        [
            "cheap_upscale_total",
            "deep_upscale_total",
            "edge_analysis",
            "fusion",
            "wall_total"
        ]
    );
    assert_eq!(
        keys(&v["counts"]),
        ["patches_cheap", "patches_deep", "patches_total"]
    );
    assert_eq!(v["counts"]["patches_total"], 4);
    assert_eq!(v["counts"]["patches_deep"], 2);
    assert_eq!(v["config"]["backend"], "bicubic");

    let mse = v["metrics"]["mse"].as_f64().unwrap();
    assert_eq!(mse, (mse * 1e4).round() / 1e4);
    let wall = v["timings_s"]["wall_total"].as_f64().unwrap();
    assert_eq!(wall, (wall * 1e3).round() / 1e3);

    let (_, bare) = run(&lr, &config(20, 60.0), &Bicubic, None).unwrap();
    assert!(!bare.to_json().contains("metrics"));
}

#[test]
fn single_thread_wall_time_bounds_stages() {
    let lr = degrade(&common::synthetic_hr(120, 120), 2).unwrap();
    let deep = Srcnn::new(SrcnnWeights::unsharp(0.6, 1.0));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let (_, r) = pool.install(|| run(&lr, &config(20, 50.0), &deep, None).unwrap());
    let t = r.timings_s;
    assert!(t.deep_upscale_total > 0.0);
    for stage in [
        t.edge_analysis,
        t.fusion,
        t.deep_upscale_total + t.cheap_upscale_total,
    ] {
        assert!(t.wall_total >= stage);
    }
}

#[test]
fn rejects_bad_inputs() {
    let lr = Image::filled(30, 20, 10.0).unwrap();
    assert!(run(&lr, &config(7, 50.0), &Bicubic, None).is_err());
    assert!(run(&lr, &config(10, 150.0), &Bicubic, None).is_err());
    let wrong_ref = Image::filled(30, 20, 10.0).unwrap();
    assert!(run(&lr, &config(10, 50.0), &Bicubic, Some(&wrong_ref)).is_err());
    let mut c = config(10, 50.0);
    c.factor = 1;
    assert!(run(&lr, &c, &Bicubic, None).is_err());
}

proptest! {
    #[test]
    fn allocation_monotone_in_p(counts in proptest::collection::vec(0usize..50, 1..120), p1 in 0.0f64..=100.0, p2 in 0.0f64..=100.0) {
        let ranking = rank_patches(&counts).unwrap();
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let a = plan_allocation(&ranking, lo).unwrap();
        let b = plan_allocation(&ranking, hi).unwrap();
        prop_assert!(a.deep_indices.iter().all(|i| b.deep_indices.contains(i)));
        prop_assert_eq!(a.deep_indices.len() + a.cheap_indices.len(), counts.len());
    }
}

#[test]
fn large_image_default_counts() {
    // 3000x2400 low-resolution input at the default patch size and Top-K.
    // Bicubic stands in for the deep backend to keep the test fast.
    let lr = Image::from_fn(3000, 2400, |x, y| ((x / 7 + y / 5) % 200) as f64).unwrap();
    let (out, report) = run(&lr, &RunConfig::default(), &Bicubic, None).unwrap();
    assert_eq!((out.width(), out.height()), (6000, 4800));
    assert_eq!(report.counts.patches_total, 180);
    assert_eq!(report.counts.patches_deep, 108);
    assert_eq!(report.counts.patches_cheap, 72);
}
