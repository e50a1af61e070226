//! Patch-size x Top-K sweep producing one CSV row per combination.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::{degrade, Image};
use crate::pipeline::{predicted_time_advantage, run, RunConfig, RunReport};
use crate::upscale::Upscaler;

pub const CSV_HEADER: [&str; 10] = [
    "patch_size",
    "topk_percent",
    "psnr_db",
    "ssim",
    "mse",
    "wall_total_s",
    "deep_busy_s",
    "cheap_busy_s",
    "patches_deep",
    "patches_total",
];

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub patch_sizes: Vec<usize>,
    pub topk: Vec<f64>,
    pub repeats: usize,
    pub factor: usize,
    pub threshold: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            patch_sizes: vec![100, 200, 300],
            topk: vec![20.0, 40.0, 60.0, 80.0],
            repeats: 10,
            factor: 2,
            threshold: crate::saliency::DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub patch_size: usize,
    pub topk_percent: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub mse: f64,
    pub wall_total_s: f64,
    pub deep_busy_s: f64,
    pub cheap_busy_s: f64,
    pub patches_deep: usize,
    pub patches_total: usize,
}

impl BenchRow {
    fn csv_record(&self) -> [String; 10] {
        let psnr = if self.psnr_db.is_infinite() {
            "inf".to_string()
        } else {
            format!("{:.4}", self.psnr_db)
        };
        [
            self.patch_size.to_string(),
            format_percent(self.topk_percent),
            psnr,
            format!("{:.4}", self.ssim),
            format!("{:.4}", self.mse),
            format!("{:.3}", self.wall_total_s),
            format!("{:.3}", self.deep_busy_s),
            format!("{:.3}", self.cheap_busy_s),
            self.patches_deep.to_string(),
            self.patches_total.to_string(),
        ]
    }

    /// Busy time of the row's configuration (deep plus cheap).
    pub fn busy_total(&self) -> f64 {
        self.deep_busy_s + self.cheap_busy_s
    }
}

fn format_percent(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{p:.0}")
    } else {
        p.to_string()
    }
}

/// Mean busy times of the all-cheap and all-deep runs at one patch size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Endpoints {
    pub patch_size: usize,
    pub cheap_full_s: f64,
    pub deep_full_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub endpoints: Vec<Endpoints>,
    /// Patch sizes that could not tile the low-resolution image, with reason.
    pub skipped: Vec<(usize, String)>,
}

impl BenchResult {
    /// `(predicted, measured)` time advantage of a row over the all-deep run.
    pub fn advantage(&self, row: &BenchRow) -> Option<(f64, f64)> {
        let ep = self
            .endpoints
            .iter()
            .find(|e| e.patch_size == row.patch_size)?;
        let predicted =
            predicted_time_advantage(ep.deep_full_s, ep.cheap_full_s, row.topk_percent).ok()?;
        Some((predicted, ep.deep_full_s - row.busy_total()))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Encode(e.to_string());
        w.write_record(CSV_HEADER).map_err(err)?;
        for row in &self.rows {
            w.write_record(row.csv_record()).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Encode(e.to_string()))
    }
}

struct Averaged {
    last: RunReport,
    wall: f64,
    deep: f64,
    cheap: f64,
}

fn repeat_runs(
    lr: &Image,
    hr: &Image,
    config: &RunConfig,
    deep: &dyn Upscaler,
    repeats: usize,
) -> Result<Averaged> {
    let (mut wall, mut deep_t, mut cheap_t) = (0.0, 0.0, 0.0);
    let mut last = None;
    for _ in 0..repeats {
        let (_, report) = run(lr, config, deep, Some(hr))?;
        wall += report.timings_s.wall_total;
        deep_t += report.timings_s.deep_upscale_total;
        cheap_t += report.timings_s.cheap_upscale_total;
        last = Some(report);
    }
    let n = repeats as f64;
    Ok(Averaged {
        last: last.expect("at least one repeat"),
        wall: wall / n,
        deep: deep_t / n,
        cheap: cheap_t / n,
    })
}

/// Degrades `hr` by the configured factor, then for every patch size runs
/// the all-cheap and all-deep endpoints followed by each Top-K value, each
/// `repeats` times. One untimed warm-up run precedes all measurements.
///
/// `make_deep` builds the deep backend for a patch size. `on_row` sees each
/// row as it is produced.
pub fn sweep(
    hr: &Image,
    config: &BenchConfig,
    make_deep: &dyn Fn(usize) -> Result<Box<dyn Upscaler>>,
    on_row: &mut dyn FnMut(&BenchRow),
) -> Result<BenchResult> {
    if config.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    if config.topk.is_empty() || config.patch_sizes.is_empty() {
        return Err(Error::Empty("patch size or top-k list"));
    }
    let lr = degrade(hr, config.factor)?;
    let mut result = BenchResult::default();
    let mut warmed = false;

    for &s in &config.patch_sizes {
        if s == 0 || lr.width() % s != 0 || lr.height() % s != 0 {
            result.skipped.push((
                s,
                format!(
                    "low-resolution image {}x{} is not divisible by patch size {s}",
                    lr.width(),
                    lr.height()
                ),
            ));
            continue;
        }
        let deep = make_deep(s)?;
        let run_cfg = |p: f64| RunConfig {
            factor: config.factor,
            patch_size: s,
            topk: p,
            threshold: config.threshold,
        };
        if !warmed {
            run(&lr, &run_cfg(config.topk[0]), deep.as_ref(), None)?;
            warmed = true;
        }

        let cheap = repeat_runs(&lr, hr, &run_cfg(0.0), deep.as_ref(), config.repeats)?;
        let full = repeat_runs(&lr, hr, &run_cfg(100.0), deep.as_ref(), config.repeats)?;
        result.endpoints.push(Endpoints {
            patch_size: s,
            cheap_full_s: cheap.deep + cheap.cheap,
            deep_full_s: full.deep + full.cheap,
        });

        for &p in &config.topk {
            let avg = repeat_runs(&lr, hr, &run_cfg(p), deep.as_ref(), config.repeats)?;
            let m = avg.last.metrics.expect("reference supplied");
            let row = BenchRow {
                patch_size: s,
                topk_percent: p,
                psnr_db: m.psnr_db,
                ssim: m.ssim,
                mse: m.mse,
                wall_total_s: avg.wall,
                deep_busy_s: avg.deep,
                cheap_busy_s: avg.cheap,
                patches_deep: avg.last.counts.patches_deep,
                patches_total: avg.last.counts.patches_total,
            };
            on_row(&row);
            result.rows.push(row);
        }
    }
    Ok(result)
}
