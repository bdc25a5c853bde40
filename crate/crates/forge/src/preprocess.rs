//! Turning rendered images into trainer inputs.

use std::path::Path;

use anyhow::Result;
use illusion_forge_core::dataset::{SampleRecord, Source};
use illusion_forge_core::fusion::SampleOrigin;
use illusion_forge_core::raster::{downsample, RasterImage};
use illusion_forge_core::trainer::{binary_origin, Samples};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::build::with_pool;
use crate::png_io::read_png;

/// Grayscale (0.299/0.587/0.114 luma), box-downsampled to `size`×`size`, and
/// scaled to [0, 1] as ink coverage: white is 0, black is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocSpec {
    pub size: u32,
}

impl Default for PreprocSpec {
    fn default() -> Self {
        Self { size: 56 }
    }
}

impl PreprocSpec {
    pub fn dim(&self) -> usize {
        (self.size * self.size) as usize
    }
}

pub fn features(img: &RasterImage, spec: PreprocSpec) -> Result<Vec<f32>> {
    let small;
    let img = if img.width() == spec.size && img.height() == spec.size {
        img
    } else {
        small = downsample(img, spec.size)?;
        &small
    };
    Ok(img.luma().into_iter().map(|l| (1.0 - l / 255.0) as f32).collect())
}

/// How manifest labels map onto training targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelView {
    /// Illusion presence as a plain two-class problem.
    Binary,
    /// Illusion samples as binary presence, target samples as object class.
    Fusion,
}

pub fn origin_of(record: &SampleRecord, view: LabelView) -> SampleOrigin {
    match (record.source, view) {
        (Source::Illusion, LabelView::Binary) => binary_origin(record.label == 1),
        (Source::Illusion, LabelView::Fusion) => SampleOrigin::Illusion(record.label == 1),
        (Source::Target, _) => SampleOrigin::Target(record.label as usize),
    }
}

/// Loads and preprocesses every record; paths are relative to `root`.
pub fn load_samples(root: &Path, records: &[SampleRecord], spec: PreprocSpec, view: LabelView, jobs: usize) -> Result<Samples> {
    load_samples_from(&|_: &SampleRecord| root.to_path_buf(), records, spec, view, jobs)
}

/// Like [`load_samples`] with a per-record dataset root, for manifests that
/// mix records from several directories.
pub fn load_samples_from(
    root_of: &(dyn Fn(&SampleRecord) -> std::path::PathBuf + Sync),
    records: &[SampleRecord],
    spec: PreprocSpec,
    view: LabelView,
    jobs: usize,
) -> Result<Samples> {
    let rows = with_pool(jobs, || {
        records
            .par_iter()
            .map(|r| -> Result<Vec<f32>> { features(&read_png(&root_of(r).join(&r.path))?, spec) })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut samples = Samples::new(spec.dim());
    for (r, row) in records.iter().zip(rows) {
        samples.push(&row, origin_of(r, view));
    }
    Ok(samples)
}
