//! Rendering datasets to disk.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use illusion_forge_core::dataset::{plan_build, DatasetSpec, PlannedSample, SampleRecord};
use illusion_forge_core::illusions::generate;
use illusion_forge_core::raster::{rasterize, RasterImage};
use illusion_forge_core::toy::ToyTask;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::manifest::{write_manifest, MANIFEST_FILE};
use crate::png_io::write_png;

/// Runs `f` on a pool of `jobs` workers (0 = one per core).
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(f))
}

/// Renders the scene a planned sample refers to: the illusory member of its
/// pair for label 1, the control for label 0.
pub fn render_planned(p: &PlannedSample) -> Result<RasterImage> {
    let pair = generate(&p.params)?;
    let scene = if p.record.is_positive() { &pair.illusory } else { &pair.control };
    Ok(rasterize(scene)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub records: Vec<SampleRecord>,
    /// Family name -> (positives, negatives).
    pub per_family: BTreeMap<String, (usize, usize)>,
}

impl BuildReport {
    pub fn from_records(records: Vec<SampleRecord>) -> Self {
        let mut per_family = BTreeMap::new();
        for r in &records {
            let name = r.family.map_or("target", |f| f.name()).to_string();
            let e: &mut (usize, usize) = per_family.entry(name).or_default();
            if r.is_positive() {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
        Self { records, per_family }
    }

    pub fn positives(&self) -> usize {
        self.per_family.values().map(|c| c.0).sum()
    }

    pub fn negatives(&self) -> usize {
        self.per_family.values().map(|c| c.1).sum()
    }
}

/// Renders every planned sample under `root/<family>/<label>/<id>.png` and
/// writes `root/manifest.jsonl` sorted by id.
pub fn build(spec: &DatasetSpec, root: &Path, jobs: usize) -> Result<BuildReport> {
    let planned = plan_build(spec)?;
    for f in &spec.families {
        for label in ["0", "1"] {
            let dir = root.join(f.name()).join(label);
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    with_pool(jobs, || {
        planned.par_iter().try_for_each(|p| -> Result<()> {
            let img = render_planned(p)?;
            write_png(&root.join(&p.record.path), &img)?;
            Ok(())
        })
    })??;
    let records: Vec<SampleRecord> = planned.into_iter().map(|p| p.record).collect();
    write_manifest(&root.join(MANIFEST_FILE), &records)?;
    Ok(BuildReport::from_records(records))
}

/// Writes a folder-per-class toy target set under `root/<class>/<index>.png`
/// plus a manifest, and returns the records.
pub fn write_toy_targets(task: ToyTask, per_class: usize, seed: u64, root: &Path, jobs: usize) -> Result<Vec<SampleRecord>> {
    let n = task.n_classes();
    for c in 0..n {
        fs::create_dir_all(root.join(class_dir(c)))?;
    }
    let jobs_list: Vec<(usize, u64)> = (0..n).flat_map(|c| (0..per_class as u64).map(move |i| (c, i))).collect();
    let mut records = with_pool(jobs, || {
        jobs_list
            .par_iter()
            .map(|&(c, i)| -> Result<SampleRecord> {
                let rel = format!("{}/{i}.png", class_dir(c));
                let img = rasterize(&task.scene(c, i, seed))?;
                write_png(&root.join(&rel), &img)?;
                Ok(SampleRecord::target(c as u32, i, rel))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    records.sort_by_key(|r| r.id);
    write_manifest(&root.join(MANIFEST_FILE), &records)?;
    Ok(records)
}

fn class_dir(c: usize) -> String {
    format!("{c:03}")
}

/// Indexes any folder-per-class image directory: sub-directories sorted by
/// name become classes 0..n, PNG files inside each sorted by name.
pub fn load_class_folders(root: &Path) -> Result<Vec<SampleRecord>> {
    let mut classes: Vec<PathBuf> = fs::read_dir(root)
        .with_context(|| format!("reading {}", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    classes.sort();
    if classes.is_empty() {
        bail!("no class folders under {}", root.display());
    }
    let mut records = Vec::new();
    for (c, dir) in classes.iter().enumerate() {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
            .collect();
        files.sort();
        for (i, f) in files.iter().enumerate() {
            let rel = f.strip_prefix(root)?.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            records.push(SampleRecord::target(c as u32, i as u64, rel));
        }
    }
    Ok(records)
}

/// SHA-256 over every file below `root`: sorted relative paths and contents.
pub fn digest_tree(root: &Path) -> Result<String> {
    let mut files = Vec::new();
    collect_files(root, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(root)?.to_string_lossy().replace('\\', "/");
        h.update(rel.as_bytes());
        h.update([0]);
        let bytes = fs::read(&f)?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for e in fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use illusion_forge_core::illusions::IllusionFamily;

    #[test]
    fn small_build_layout() {
        let dir = tempfile::tempdir().unwrap();
        let spec = DatasetSpec { families: vec![IllusionFamily::MullerLyer], pairs_per_family: 3, ..Default::default() };
        let rep = build(&spec, dir.path(), 1).unwrap();
        assert_eq!((rep.positives(), rep.negatives()), (3, 3));
        for r in &rep.records {
            let expected = format!("muller_lyer/{}/{}.png", r.label, r.id);
            assert_eq!(r.path, expected);
            assert!(dir.path().join(&r.path).is_file());
        }
    }

    #[test]
    fn class_folders_indexed_in_name_order() {
        let dir = tempfile::tempdir().unwrap();
        let recs = write_toy_targets(ToyTask::Blobs { n_classes: 3 }, 2, 0, dir.path(), 1).unwrap();
        assert_eq!(recs.len(), 6);
        let loaded = load_class_folders(dir.path()).unwrap();
        let mut a: Vec<_> = loaded.iter().map(|r| (r.label, r.path.clone())).collect();
        let mut b: Vec<_> = recs.iter().map(|r| (r.label, r.path.clone())).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}
