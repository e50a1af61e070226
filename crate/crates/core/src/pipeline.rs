//! End-to-end selective super-resolution: tile, rank by edge content, send
//! the top `p` percent of patches to the deep backend and the rest to
//! bicubic, then fuse.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::image::{Image, LumaChromaImage};
use crate::metrics::{MetricSpace, MetricsReport};
use crate::patch_grid::{fuse, tile, PatchGrid};
use crate::saliency::{edge_count, edge_map, rank_patches, EdgeMap, EdgeRanking};
use crate::upscale::{bicubic_upscale, Bicubic, Srcnn, SrcnnWeights, Upscaler};

/// Split of patch indices between the deep and the cheap backend.
#[derive(Clone, Debug, PartialEq)]
pub struct AllocationPlan {
    /// Deep patches in ranking order.
    pub deep_indices: Vec<usize>,
    /// Cheap patches in ranking order.
    pub cheap_indices: Vec<usize>,
    pub p: f64,
    pub k: usize,
    is_deep: Vec<bool>,
}

impl AllocationPlan {
    pub fn is_deep(&self, index: usize) -> bool {
        self.is_deep[index]
    }

    pub fn total(&self) -> usize {
        self.is_deep.len()
    }
}

fn check_percentage(p: f64) -> Result<()> {
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "percentage must lie in [0, 100], got {p}"
        )));
    }
    Ok(())
}

/// `round(p * n / 100)` with halves rounded up.
pub fn topk_count(n: usize, p: f64) -> usize {
    let k = (p * n as f64 / 100.0 + 0.5).floor() as usize;
    k.min(n)
}

pub fn plan_allocation(ranking: &EdgeRanking, p: f64) -> Result<AllocationPlan> {
    check_percentage(p)?;
    let n = ranking.order.len();
    let k = topk_count(n, p);
    let (deep, cheap) = ranking.order.split_at(k);
    let mut is_deep = vec![false; n];
    for &i in deep {
        is_deep[i] = true;
    }
    Ok(AllocationPlan {
        deep_indices: deep.to_vec(),
        cheap_indices: cheap.to_vec(),
        p,
        k,
        is_deep,
    })
}

/// Time saved by sending `p` percent of the image through the deep backend
/// instead of all of it, assuming cost scales linearly with area.
pub fn predicted_time_advantage(t_deep_full: f64, t_cheap_full: f64, p: f64) -> Result<f64> {
    check_percentage(p)?;
    if !(t_deep_full >= 0.0 && t_cheap_full >= 0.0) {
        return Err(Error::InvalidArgument(
            "timings must be non-negative".into(),
        ));
    }
    let f = p / 100.0;
    Ok(t_deep_full - (f * t_deep_full + (1.0 - f) * t_cheap_full))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub factor: usize,
    pub patch_size: usize,
    /// Percentage of patches sent to the deep backend.
    pub topk: f64,
    pub threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            factor: 2,
            patch_size: 200,
            topk: 60.0,
            threshold: crate::saliency::DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub patch_size: usize,
    pub p: f64,
    pub threshold: f64,
    pub factor: usize,
    pub backend: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    #[serde(serialize_with = "ser_secs")]
    pub edge_analysis: f64,
    #[serde(serialize_with = "ser_secs")]
    pub cheap_upscale_total: f64,
    #[serde(serialize_with = "ser_secs")]
    pub deep_upscale_total: f64,
    #[serde(serialize_with = "ser_secs")]
    pub fusion: f64,
    #[serde(serialize_with = "ser_secs")]
    pub wall_total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub patches_total: usize,
    pub patches_deep: usize,
    pub patches_cheap: usize,
}

/// Configuration, metrics, timings and patch counts of one run.
///
/// Deep and cheap totals are summed per-patch busy times; `wall_total` is
/// elapsed real time of the whole run, so under parallel execution the busy
/// totals may exceed it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    pub timings_s: Timings,
    pub counts: Counts,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Deep plus cheap busy time.
    pub fn busy_total(&self) -> f64 {
        self.timings_s.deep_upscale_total + self.timings_s.cheap_upscale_total
    }
}

fn ser_secs<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(crate::metrics::round_to(*v, 3))
}

/// Edge maps and ranking for a grid of luminance patches.
pub fn analyze(luma: &PatchGrid, threshold: f64) -> Result<(Vec<EdgeMap>, EdgeRanking)> {
    let maps = luma
        .patches()
        .par_iter()
        .map(|p| edge_map(p, threshold))
        .collect::<Result<Vec<_>>>()?;
    let counts: Vec<usize> = maps.iter().map(edge_count).collect();
    Ok((maps, rank_patches(&counts)?))
}

struct PatchResult {
    luma: Image,
    chroma: Option<(Image, Image)>,
    deep: Duration,
    cheap: Duration,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// Runs the selective pipeline with `deep` as the expensive backend.
///
/// Luminance patches are routed by the allocation plan; chroma planes of
/// colour inputs are always enlarged with bicubic.
pub fn run(
    lr: &Image,
    config: &RunConfig,
    deep: &dyn Upscaler,
    hr_reference: Option<&Image>,
) -> Result<(Image, RunReport)> {
    check_percentage(config.topk)?;
    if config.factor < 2 {
        return Err(Error::InvalidArgument(format!(
            "upscale factor must be at least 2, got {}",
            config.factor
        )));
    }
    if let Some(hr) = hr_reference {
        let expected = (lr.width() * config.factor, lr.height() * config.factor);
        if (hr.width(), hr.height()) != expected || hr.channels() != lr.channels() {
            return Err(Error::DimensionMismatch(format!(
                "reference is {}x{}x{}, expected {}x{}x{}",
                hr.width(),
                hr.height(),
                hr.channels(),
                expected.0,
                expected.1,
                lr.channels()
            )));
        }
    }

    let wall = Instant::now();
    let ycc = LumaChromaImage::decompose(lr)?;
    let luma = tile(&ycc.luma, config.patch_size)?;
    let chroma = match &ycc.chroma {
        Some((cb, cr)) => Some((tile(cb, config.patch_size)?, tile(cr, config.patch_size)?)),
        None => None,
    };

    let (analysis, edge_time) = timed(|| analyze(&luma, config.threshold));
    let (_, ranking) = analysis?;
    let plan = plan_allocation(&ranking, config.topk)?;

    let factor = config.factor;
    let results = (0..luma.len())
        .into_par_iter()
        .map(|i| -> Result<PatchResult> {
            let patch = &luma.patches()[i];
            let mut deep_t = Duration::ZERO;
            let mut cheap_t = Duration::ZERO;
            let up = if plan.is_deep(i) {
                let (r, t) = timed(|| deep.upscale(i, patch, factor));
                deep_t += t;
                r?
            } else {
                let (r, t) = timed(|| Bicubic.upscale(i, patch, factor));
                cheap_t += t;
                r?
            };
            let chroma = match &chroma {
                Some((cb, cr)) => {
                    let (r, t) = timed(|| -> Result<(Image, Image)> {
                        Ok((
                            bicubic_upscale(&cb.patches()[i], factor)?,
                            bicubic_upscale(&cr.patches()[i], factor)?,
                        ))
                    });
                    cheap_t += t;
                    Some(r?)
                }
                None => None,
            };
            Ok(PatchResult {
                luma: up,
                chroma,
                deep: deep_t,
                cheap: cheap_t,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let deep_total: Duration = results.iter().map(|r| r.deep).sum();
    let cheap_total: Duration = results.iter().map(|r| r.cheap).sum();

    let (output, fusion_time) = timed(|| -> Result<Image> {
        let shape = luma.shape();
        let mut lumas = Vec::with_capacity(results.len());
        let mut cbs = Vec::new();
        let mut crs = Vec::new();
        for r in results {
            lumas.push(r.luma);
            if let Some((cb, cr)) = r.chroma {
                cbs.push(cb);
                crs.push(cr);
            }
        }
        let fused = LumaChromaImage {
            luma: fuse(&shape, &lumas, factor)?,
            chroma: if chroma.is_some() {
                Some((fuse(&shape, &cbs, factor)?, fuse(&shape, &crs, factor)?))
            } else {
                None
            },
        };
        fused.recompose()
    });
    let output = output?;
    let wall_total = wall.elapsed();

    let metrics = match hr_reference {
        Some(hr) => Some(MetricsReport::evaluate(hr, &output, MetricSpace::Luma)?),
        None => None,
    };

    let report = RunReport {
        config: ConfigEcho {
            patch_size: config.patch_size,
            p: config.topk,
            threshold: config.threshold,
            factor,
            backend: deep.id().to_string(),
        },
        metrics,
        timings_s: Timings {
            edge_analysis: edge_time.as_secs_f64(),
            cheap_upscale_total: cheap_total.as_secs_f64(),
            deep_upscale_total: deep_total.as_secs_f64(),
            fusion: fusion_time.as_secs_f64(),
            wall_total: wall_total.as_secs_f64(),
        },
        counts: Counts {
            patches_total: plan.total(),
            patches_deep: plan.k,
            patches_cheap: plan.total() - plan.k,
        },
    };
    Ok((output, report))
}

/// [`run`] with the SRCNN engine as the deep backend.
pub fn run_srcnn(
    lr: &Image,
    config: &RunConfig,
    weights: &SrcnnWeights,
    hr_reference: Option<&Image>,
) -> Result<(Image, RunReport)> {
    run(lr, config, &Srcnn::new(weights.clone()), hr_reference)
}
