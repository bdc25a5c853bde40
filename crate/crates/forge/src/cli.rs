//! Command-line interface.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use illusion_forge_core::fusion::Strategy;
use illusion_forge_core::illusions::{generate, IllusionFamily, IllusionParams};
use illusion_forge_core::raster::{rasterize, RasterImage};

use crate::config::{Axis, Overrides, RunConfig};
use crate::pipeline;
use crate::plot::svg_montage;
use crate::png_io::write_png;

#[derive(Debug, Parser)]
#[command(name = "illusion-forge", version, about = "Geometric illusion datasets, label fusion training and accuracy fits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a dataset and its manifest.
    Gen(Common),
    /// Render one illusory/control pair, or all five families with --montage.
    Preview(PreviewArgs),
    /// Train one network per seed and aggregate the metrics.
    Train(Common),
    /// Score saved parameters (or an untrained network) on the test split.
    Eval(EvalArgs),
    /// Fit accuracy against strength or perception difference.
    Fit(Common),
    /// Per-bin generation and training followed by a fit.
    Sweep(Common),
}

#[derive(Debug, Clone, Args, Default)]
pub struct Common {
    /// TOML run configuration; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Input directory: a dataset for train/eval, sweep outputs for fit.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Master seed for generation and first training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of training seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Strategy>,
    /// Comma-separated family names.
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    pub families: Option<Vec<IllusionFamily>>,
    /// Pairs per family.
    #[arg(long)]
    pub pairs: Option<u32>,
    /// Strength value or `lo,hi` range.
    #[arg(long, value_parser = parse_range)]
    pub strength: Option<(f64, f64)>,
    /// Perception-difference value or `lo,hi` range.
    #[arg(long, value_parser = parse_range)]
    pub diff: Option<(f64, f64)>,
    /// Number of evenly spaced strength bins.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "ILLUSION_FORGE_THREADS")]
    pub jobs: Option<usize>,
    /// Side of the trainer input: 224, 56 or 32.
    #[arg(long)]
    pub resolution: Option<u32>,
    /// Fit axis: strength or perception_diff.
    #[arg(long, value_parser = parse_axis)]
    pub x: Option<Axis>,
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Parameter file written by `train`.
    #[arg(long, conflicts_with = "untrained", required_unless_present = "untrained")]
    pub params: Option<PathBuf>,
    /// Score a freshly initialized network instead.
    #[arg(long)]
    pub untrained: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PreviewArgs {
    #[arg(value_parser = parse_family)]
    pub family: IllusionFamily,
    #[arg(allow_negative_numbers = true)]
    pub strength: f64,
    #[arg(allow_negative_numbers = true)]
    pub diff: f64,
    pub seed: u64,
    #[arg(long, default_value = "preview")]
    pub out: PathBuf,
    /// Render every family with these parameters plus an SVG grid.
    #[arg(long)]
    pub montage: bool,
}

fn parse_mode(s: &str) -> Result<Strategy, String> {
    Strategy::from_name(s).ok_or_else(|| format!("unknown mode `{s}`; expected base, single, multi or mix"))
}

fn parse_family(s: &str) -> Result<IllusionFamily, String> {
    IllusionFamily::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = IllusionFamily::ALL.iter().map(|f| f.name()).collect();
        format!("unknown family `{s}`; expected one of {}", names.join(", "))
    })
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    Axis::from_name(s).ok_or_else(|| format!("unknown axis `{s}`; expected strength or perception_diff"))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    let (lo, hi) = match parts.as_slice() {
        [v] => (num(v)?, num(v)?),
        [a, b] => (num(a)?, num(b)?),
        _ => return Err("expected a value or `lo,hi`".into()),
    };
    if !((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi) {
        return Err(format!("{s} must satisfy 0 <= lo <= hi <= 1"));
    }
    Ok((lo, hi))
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            data: self.data.clone(),
            jobs: self.jobs,
            seed: self.seed,
            seeds: self.seeds,
            mode: self.mode,
            families: self.families.clone(),
            pairs: self.pairs,
            strength: self.strength,
            diff: self.diff,
            bins: self.bins,
            resolution: self.resolution,
            x: self.x,
            degree: self.degree,
        }
    }

    /// The config file (or defaults) with flags applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(&self.overrides());
        Ok(cfg)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(c) => {
            let cfg = c.resolve()?;
            let report = pipeline::generate(&cfg)?;
            for (family, (pos, neg)) in &report.per_family {
                println!("{family}: {pos} positive, {neg} negative");
            }
            println!("total: {} images in {}", report.records.len(), cfg.out.display());
        }
        Command::Preview(p) => preview(&p)?,
        Command::Train(c) => {
            let cfg = c.resolve()?;
            let (results, agg) = pipeline::train_seeds(&cfg)?;
            for r in &results {
                println!("seed {}: {}", r.seed, describe(&r.metrics));
            }
            if let Some(s) = agg.top1 {
                println!("top1 {:.4} ± {:.4} (max {:.4})", s.mean, s.std, s.max);
            }
            if let Some(s) = agg.illusion_accuracy {
                println!("illusion accuracy {:.4} ± {:.4} (max {:.4})", s.mean, s.std, s.max);
            }
        }
        Command::Eval(e) => {
            let cfg = e.common.resolve()?;
            let report = pipeline::eval(&cfg, if e.untrained { None } else { e.params.as_deref() })?;
            println!("{}", describe(&report.metrics));
            if let Some(m) = report.illusion_majority_share {
                println!("majority baseline {m:.4}");
            }
        }
        Command::Fit(c) => {
            let cfg = c.resolve()?;
            let r = pipeline::fit(&cfg)?;
            report_fit(&r);
        }
        Command::Sweep(c) => {
            let mut cfg = c.resolve()?;
            if let Some(p) = c.pairs {
                cfg.sweep.pairs_per_family = p;
            }
            let (points, r) = pipeline::sweep(&cfg)?;
            println!("{} points over {} bins", points.points.len(), cfg.sweep.bins.len());
            report_fit(&r);
        }
    }
    Ok(())
}

fn describe(m: &illusion_forge_core::trainer::Metrics) -> String {
    let mut parts = vec![format!("n={}", m.n_samples)];
    if let Some(v) = m.top1 {
        parts.push(format!("top1={v:.4}"));
    }
    if let Some(v) = m.top5 {
        parts.push(format!("top5={v:.4}"));
    }
    if let Some(v) = m.illusion_accuracy {
        parts.push(format!("illusion_acc={v:.4}"));
    }
    parts.join(" ")
}

fn report_fit(r: &pipeline::FitReport) {
    let f = &r.fit;
    println!("degree {} R²={:.4} p={:.1e}", f.degree, f.r_squared, f.p_value);
    println!("coefficients {:?}", f.coefficients);
    if let Some(v) = f.r {
        println!("pearson r={v:.4}");
    }
    if let Some(v) = f.vertex {
        println!("vertex at {} = {v:.4}", r.axis.name());
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        bail!("invalid value for `{name}`: {v} is outside [0, 1]");
    }
    Ok(())
}

/// Renders the pair for `family`, returning (illusory, control, side by side).
fn render_pair(family: IllusionFamily, s: f64, d: f64, seed: u64) -> Result<[RasterImage; 3]> {
    let pair = generate(&IllusionParams::new(family, s, d, seed)?)?;
    let top = rasterize(&pair.illusory)?;
    let bottom = rasterize(&pair.control)?;
    let mut both = RasterImage::filled(top.width() * 2, top.height(), [255, 255, 255]);
    both.blit(&top, 0, 0);
    both.blit(&bottom, top.width(), 0);
    Ok([top, bottom, both])
}

pub fn preview(p: &PreviewArgs) -> Result<()> {
    check_unit("strength", p.strength)?;
    check_unit("diff", p.diff)?;
    std::fs::create_dir_all(&p.out)?;
    let families = if p.montage { IllusionFamily::ALL.to_vec() } else { vec![p.family] };
    let mut columns = Vec::new();
    for f in families {
        let [top, bottom, both] = render_pair(f, p.strength, p.diff, p.seed)?;
        let name = |suffix: &str| format!("{}_{suffix}.png", f.name());
        write_png(&p.out.join(name("illusory")), &top)?;
        write_png(&p.out.join(name("control")), &bottom)?;
        write_png(&p.out.join(name("pair")), &both)?;
        println!("{}", p.out.join(name("pair")).display());
        columns.push((f.name().to_string(), name("illusory"), name("control")));
    }
    if p.montage {
        let path = p.out.join("montage.svg");
        std::fs::write(&path, svg_montage(&columns, 224))?;
        println!("{}", path.display());
    }
    Ok(())
}

/// Entry point shared by the binary and the tests: exit code 0 on success,
/// 1 with the error chain on stderr otherwise.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
