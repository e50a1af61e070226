//! Command-line surface. Machine-readable output (PNG, JSON, CSV) goes to
//! files or stdout; human-readable summaries go to stderr.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::bench::{sweep, BenchConfig};
use crate::image::{degrade, load_image, save_image, LumaChromaImage};
use crate::metrics::{MetricSpace, MetricsReport};
use crate::patch_grid::tile;
use crate::pipeline::{analyze, run, RunConfig};
use crate::upscale::{srcnn_load_weights, Srcnn, Upscaler};

#[derive(Debug, Parser)]
#[command(
    name = "selsr",
    version,
    about = "Selective super-resolution of large images"
)]
pub struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true, env = "SELSR_THREADS")]
    pub threads: Option<usize>,

    /// Reserved. The pipeline is deterministic and uses no randomness.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a low-resolution image by bicubic downsampling.
    Degrade(DegradeArgs),
    /// Super-resolve an image, routing edge-rich patches to SRCNN.
    Sr(SrArgs),
    /// Compare two images (MSE, PSNR, SSIM) and print JSON.
    Eval(EvalArgs),
    /// Sweep patch sizes and Top-K percentages; write a CSV table.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long, default_value_t = 2)]
    pub scale: usize,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SrArgs {
    /// SRW1 weight file.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub patch_size: usize,
    /// Percentage of patches sent to SRCNN.
    #[arg(long, default_value_t = 60.0)]
    pub topk: f64,
    /// Gradient-magnitude threshold for edge points.
    #[arg(long, default_value_t = 100.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 2)]
    pub scale: usize,
    /// Where to write the JSON run report (stdout if omitted).
    #[arg(long = "report")]
    pub report_path: Option<PathBuf>,
    /// High-resolution reference; enables metrics in the report.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Directory for per-patch 1-bit edge map PNGs.
    #[arg(long)]
    pub dump_edge_maps: Option<PathBuf>,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value_t = MetricSpace::Luma)]
    pub metric_space: MetricSpace,
    pub reference: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 200, 300])]
    pub patch_sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [20.0f64, 40.0, 60.0, 80.0])]
    pub topk: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// CSV destination.
    #[arg(long = "output")]
    pub output_csv: PathBuf,
    /// High-resolution input image.
    pub input_hr: PathBuf,
}

/// Parses nothing; executes an already parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    let threads = match cli.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building worker pool")?;
    pool.install(|| match cli.command {
        Command::Degrade(a) => cmd_degrade(&a),
        Command::Sr(a) => cmd_sr(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Bench(a) => cmd_bench(&a),
    })
}

pub fn cmd_degrade(args: &DegradeArgs) -> Result<()> {
    let hr = load_image(&args.input)?;
    let lr = degrade(&hr, args.scale)?;
    save_image(&lr, &args.output)?;
    println!(
        "{}x{} -> {}x{}",
        hr.width(),
        hr.height(),
        lr.width(),
        lr.height()
    );
    Ok(())
}

pub fn cmd_sr(args: &SrArgs) -> Result<()> {
    let process = Instant::now();
    let weights = srcnn_load_weights(&args.weights)?;
    let lr = load_image(&args.input)?;
    let reference = args.reference.as_ref().map(load_image).transpose()?;
    let config = RunConfig {
        factor: args.scale,
        patch_size: args.patch_size,
        topk: args.topk,
        threshold: args.threshold,
    };

    if let Some(dir) = &args.dump_edge_maps {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let luma = LumaChromaImage::decompose(&lr)?.luma;
        let (maps, _) = analyze(&tile(&luma, args.patch_size)?, args.threshold)?;
        for (i, m) in maps.iter().enumerate() {
            let path = dir.join(format!("edge_{i:05}.png"));
            fs::write(&path, m.to_png()?).with_context(|| format!("writing {}", path.display()))?;
        }
    }

    let (out, report) = run(&lr, &config, &Srcnn::new(weights), reference.as_ref())?;
    save_image(&out, &args.output)?;
    let json = report.to_json();
    match &args.report_path {
        Some(p) => fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{json}"),
    }
    eprintln!(
        "{}x{} -> {}x{}: {}/{} patches deep, pipeline {:.3} s, process {:.3} s",
        lr.width(),
        lr.height(),
        out.width(),
        out.height(),
        report.counts.patches_deep,
        report.counts.patches_total,
        report.timings_s.wall_total,
        process.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let reference = load_image(&args.reference)?;
    let test = load_image(&args.test)?;
    let report = MetricsReport::evaluate(&reference, &test, args.metric_space)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let process = Instant::now();
    let weights = srcnn_load_weights(&args.weights)?;
    let hr = load_image(&args.input_hr)?;
    let config = BenchConfig {
        patch_sizes: args.patch_sizes.clone(),
        topk: args.topk.clone(),
        repeats: args.repeats,
        ..BenchConfig::default()
    };
    let deep = Srcnn::new(weights);
    let make_deep =
        |_s: usize| -> crate::error::Result<Box<dyn Upscaler>> { Ok(Box::new(deep.clone())) };
    let mut progress = |row: &crate::bench::BenchRow| {
        eprintln!(
            "s={} p={}%: psnr {:.4} dB, ssim {:.4}, busy {:.3} s, wall {:.3} s",
            row.patch_size,
            row.topk_percent,
            row.psnr_db,
            row.ssim,
            row.busy_total(),
            row.wall_total_s
        );
    };
    let result = sweep(&hr, &config, &make_deep, &mut progress)?;
    for (s, reason) in &result.skipped {
        eprintln!("warning: skipping patch size {s}: {reason}");
    }

    let file = File::create(&args.output_csv)
        .with_context(|| format!("creating {}", args.output_csv.display()))?;
    let mut out = BufWriter::new(file);
    result.write_csv(&mut out)?;
    out.flush()?;

    for row in &result.rows {
        if let Some((predicted, measured)) = result.advantage(row) {
            eprintln!(
                "s={} p={}%: time advantage predicted {:.3} s, measured {:.3} s",
                row.patch_size, row.topk_percent, predicted, measured
            );
        }
    }
    eprintln!(
        "{} rows written to {}; process time {:.3} s",
        result.rows.len(),
        args.output_csv.display(),
        process.elapsed().as_secs_f64()
    );
    Ok(())
}
