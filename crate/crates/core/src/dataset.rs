//! Manifest records and the pure parts of dataset assembly: build planning,
//! strength binning, target-set mixing and stratified splitting.
//!
//! Nothing here touches the filesystem; writing images and manifests is the
//! job of the `illusion-forge` crate.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::illusions::{IllusionFamily, IllusionParams};

/// SplitMix64 finalizer; used to derive independent seeds and sort keys.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds several words into one seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED_u64, |acc, &p| mix64(acc ^ mix64(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Illusion,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    Train,
    Test,
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub id: u64,
    /// Path relative to the dataset root, `/`-separated.
    pub path: String,
    pub source: Source,
    /// Illusion family; serialized as `"target"` for target samples.
    #[serde(serialize_with = "ser_family", deserialize_with = "de_family")]
    pub family: Option<IllusionFamily>,
    /// Binary presence for illusion samples, class index for target samples.
    pub label: u32,
    pub strength: Option<f64>,
    pub perception_diff: Option<f64>,
    pub split: Split,
}

fn ser_family<S: Serializer>(f: &Option<IllusionFamily>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(f.map_or("target", IllusionFamily::name))
}

fn de_family<'de, D: Deserializer<'de>>(d: D) -> Result<Option<IllusionFamily>, D::Error> {
    let name = String::deserialize(d)?;
    if name == "target" {
        return Ok(None);
    }
    IllusionFamily::from_name(&name)
        .map(Some)
        .ok_or_else(|| serde::de::Error::custom(format!("unknown family {name:?}")))
}

const TARGET_ID_TAG: u64 = 1 << 62;

/// Id of an illusion sample; the two members of a pair differ only in bit 0.
pub fn illusion_id(family: IllusionFamily, pair: u64, label: bool) -> u64 {
    ((family.index() as u64 + 1) << 40) | (pair << 1) | label as u64
}

pub fn target_id(class: u32, index: u64) -> u64 {
    TARGET_ID_TAG | ((class as u64) << 32) | index
}

/// Id of the other member of an illusion pair.
pub fn mate_id(id: u64) -> u64 {
    id ^ 1
}

impl SampleRecord {
    pub fn illusion(params: &IllusionParams, pair: u64, label: bool) -> Self {
        let id = illusion_id(params.family, pair, label);
        Self {
            id,
            path: format!("{}/{}/{}.png", params.family.name(), label as u8, id),
            source: Source::Illusion,
            family: Some(params.family),
            label: label as u32,
            strength: Some(params.strength),
            perception_diff: Some(params.perception_diff),
            split: Split::Train,
        }
    }

    pub fn target(class: u32, index: u64, path: String) -> Self {
        Self {
            id: target_id(class, index),
            path,
            source: Source::Target,
            family: None,
            label: class,
            strength: None,
            perception_diff: None,
            split: Split::Train,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.source == Source::Illusion && self.label == 1
    }

    /// Key shared by both members of an illusion pair.
    fn pair_key(&self) -> u64 {
        match self.source {
            Source::Illusion => self.id >> 1,
            Source::Target => self.id,
        }
    }

    fn family_key(&self) -> String {
        self.family.map_or_else(|| "target".to_string(), |f| f.name().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),
    #[error("train fraction {fraction} leaves stratum {stratum} with {train} train / {test} test samples")]
    InvalidFraction { fraction: f64, stratum: String, train: usize, test: usize },
    #[error("sample {id} has no strength matching any bin")]
    UnbinnableSample { id: u64 },
    #[error("need {needed} {what} samples, only {available} available")]
    InsufficientSamples { what: &'static str, needed: usize, available: usize },
    #[error("manifest is empty")]
    EmptyManifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum StrengthSampling {
    Uniform { lo: f64, hi: f64 },
    /// Pairs cycle through the listed values in order.
    Bins { values: Vec<f64> },
}

impl StrengthSampling {
    /// The nine-bin protocol: s = 0.1, 0.2, ..., 0.9.
    pub fn nine_bins() -> Self {
        StrengthSampling::Bins { values: nine_bin_centers() }
    }
}

pub fn nine_bin_centers() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSpec {
    pub families: Vec<IllusionFamily>,
    pub pairs_per_family: u32,
    /// Share of positives among each family's samples.
    pub positive_share: f64,
    pub strength: StrengthSampling,
    pub diff_lo: f64,
    pub diff_hi: f64,
    pub master_seed: u64,
    pub train_fraction: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            families: IllusionFamily::ALL.to_vec(),
            pairs_per_family: 200,
            positive_share: 0.5,
            strength: StrengthSampling::Uniform { lo: 0.0, hi: 1.0 },
            diff_lo: 0.1,
            diff_hi: 0.9,
            master_seed: 0,
            train_fraction: 0.8,
        }
    }
}

fn unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: &str| Err(DatasetError::InvalidSpec(m.to_string()));
        if self.families.is_empty() {
            return bad("no families");
        }
        if self.pairs_per_family == 0 {
            return bad("pairs_per_family must be > 0");
        }
        if !(self.positive_share > 0.0 && self.positive_share < 1.0) {
            return bad("positive_share must lie in (0, 1)");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        if !(unit(self.diff_lo) && unit(self.diff_hi) && self.diff_lo <= self.diff_hi) {
            return bad("perception-difference range must satisfy 0 <= lo <= hi <= 1");
        }
        match &self.strength {
            StrengthSampling::Uniform { lo, hi } if !(unit(*lo) && unit(*hi) && lo <= hi) => {
                bad("strength range must satisfy 0 <= lo <= hi <= 1")
            }
            StrengthSampling::Bins { values } if values.is_empty() || !values.iter().all(|v| unit(*v)) => {
                bad("strength bins must be non-empty and inside [0, 1]")
            }
            _ => Ok(()),
        }
    }

    /// (positives, negatives) per family.
    pub fn per_family_counts(&self) -> (usize, usize) {
        let total = 2 * self.pairs_per_family as usize;
        let pos = round_half_up(self.positive_share * total as f64);
        (pos, total - pos)
    }
}

/// A sample to be rendered: its manifest row and its generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedSample {
    pub record: SampleRecord,
    pub params: IllusionParams,
}

/// Draws the parameters of pair `pair` of `family`.
pub fn pair_params(spec: &DatasetSpec, family: IllusionFamily, pair: u64) -> IllusionParams {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[spec.master_seed, family.index() as u64, pair]));
    let strength = match &spec.strength {
        StrengthSampling::Uniform { lo, hi } => sample_range(&mut rng, *lo, *hi),
        StrengthSampling::Bins { values } => values[pair as usize % values.len()],
    };
    let perception_diff = sample_range(&mut rng, spec.diff_lo, spec.diff_hi);
    let layout_seed = rng.random();
    IllusionParams { family, strength, perception_diff, layout_seed }
}

fn sample_range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Every sample a build will produce, sorted by id, with splits assigned.
pub fn plan_build(spec: &DatasetSpec) -> Result<Vec<PlannedSample>, DatasetError> {
    spec.validate()?;
    let (n_pos, n_neg) = spec.per_family_counts();
    let n_pairs = n_pos.max(n_neg) as u64;
    let mut families = spec.families.clone();
    families.sort();
    families.dedup();

    let mut planned = Vec::with_capacity(families.len() * (n_pos + n_neg));
    for &family in &families {
        for pair in 0..n_pairs {
            let params = pair_params(spec, family, pair);
            if (pair as usize) < n_pos {
                planned.push(PlannedSample { record: SampleRecord::illusion(&params, pair, true), params });
            }
            if (pair as usize) < n_neg {
                planned.push(PlannedSample { record: SampleRecord::illusion(&params, pair, false), params });
            }
        }
    }
    planned.sort_by_key(|p| p.record.id);

    let records: Vec<SampleRecord> = planned.iter().map(|p| p.record.clone()).collect();
    let (train, _) = split(&records, spec.train_fraction, spec.master_seed)?;
    let train_ids: alloc::collections::BTreeSet<u64> = train.iter().map(|r| r.id).collect();
    for p in &mut planned {
        p.record.split = if train_ids.contains(&p.record.id) { Split::Train } else { Split::Test };
    }
    Ok(planned)
}

/// `floor(x + 0.5)`; ties go up (away from zero for the non-negative values used here).
pub fn round_half_up(x: f64) -> usize {
    libm::floor(x + 0.5).max(0.0) as usize
}

/// Tolerance when matching a sample's strength to a bin centre.
pub const BIN_TOLERANCE: f64 = 1e-9;

/// Partitions `records` by strength; `result[i]` holds the samples at `bins[i]`.
pub fn bin_by_strength(records: &[SampleRecord], bins: &[f64]) -> Result<Vec<Vec<SampleRecord>>, DatasetError> {
    let mut out: Vec<Vec<SampleRecord>> = bins.iter().map(|_| Vec::new()).collect();
    for r in records {
        let s = r.strength.ok_or(DatasetError::UnbinnableSample { id: r.id })?;
        let i = bins
            .iter()
            .position(|&b| libm::fabs(s - b) <= BIN_TOLERANCE)
            .ok_or(DatasetError::UnbinnableSample { id: r.id })?;
        out[i].push(r.clone());
    }
    Ok(out)
}

/// How to blend an illusion pool into a target manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixPlan {
    /// Share of illusion samples in the combined manifest.
    pub illusion_fraction: f64,
    /// Share of positives among the drawn illusion samples.
    pub positive_share: f64,
}

impl Default for MixPlan {
    fn default() -> Self {
        Self { illusion_fraction: 0.10, positive_share: 0.40 }
    }
}

/// (positives, negatives) to draw for a target manifest of `n_target` samples.
///
/// With `f < 1` the illusion count is `round(f * T / (1 - f))` so that the
/// illusion share of the result is `f` to within one sample. `f = 1` draws
/// as many as the pool allows at the requested positive share.
pub fn mix_quota(plan: &MixPlan, n_target: usize, pool_pos: usize, pool_neg: usize) -> (usize, usize) {
    let f = plan.illusion_fraction;
    let share = plan.positive_share;
    let n_ill = if f >= 1.0 {
        let by_pos = if share > 0.0 { pool_pos as f64 / share } else { f64::INFINITY };
        let by_neg = if share < 1.0 { pool_neg as f64 / (1.0 - share) } else { f64::INFINITY };
        libm::floor(by_pos.min(by_neg)) as usize
    } else {
        round_half_up(f * n_target as f64 / (1.0 - f))
    };
    let n_pos = round_half_up(share * n_ill as f64).min(n_ill);
    (n_pos, n_ill - n_pos)
}

/// Draws illusion samples without replacement and appends them to the
/// target manifest, which keeps its order; the drawn samples follow sorted
/// by id. Different seeds give different draws.
pub fn mix(
    target: &[SampleRecord],
    illusion: &[SampleRecord],
    plan: &MixPlan,
    seed: u64,
) -> Result<Vec<SampleRecord>, DatasetError> {
    if !(unit(plan.illusion_fraction) && unit(plan.positive_share)) {
        return Err(DatasetError::InvalidSpec("mix fractions must lie in [0, 1]".to_string()));
    }
    if target.is_empty() || illusion.is_empty() {
        return Err(DatasetError::EmptyManifest);
    }
    let mut pos: Vec<&SampleRecord> = illusion.iter().filter(|r| r.is_positive()).collect();
    let mut neg: Vec<&SampleRecord> =
        illusion.iter().filter(|r| r.source == Source::Illusion && r.label == 0).collect();
    let (n_pos, n_neg) = mix_quota(plan, target.len(), pos.len(), neg.len());
    if n_pos > pos.len() {
        return Err(DatasetError::InsufficientSamples { what: "positive", needed: n_pos, available: pos.len() });
    }
    if n_neg > neg.len() {
        return Err(DatasetError::InsufficientSamples { what: "negative", needed: n_neg, available: neg.len() });
    }

    let mut drawn: Vec<SampleRecord> = Vec::with_capacity(n_pos + n_neg);
    for (pool, k, salt) in [(&mut pos, n_pos, 1u64), (&mut neg, n_neg, 0u64)] {
        pool.sort_by_key(|r| r.id);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, salt]));
        // Partial Fisher-Yates.
        for i in 0..k {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        drawn.extend(pool[..k].iter().map(|r| (*r).clone()));
    }
    drawn.sort_by_key(|r| r.id);
    let mut out = target.to_vec();
    out.append(&mut drawn);
    Ok(out)
}

/// Stratified split by (family, label). Within each stratum samples are
/// ordered by a seeded hash of their pair key, so both members of an
/// illusion pair land on the same side whenever both are present. Raises
/// `InvalidFraction` if any stratum would end up with an empty side.
pub fn split(
    records: &[SampleRecord],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<SampleRecord>, Vec<SampleRecord>), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction {
            fraction: train_fraction,
            stratum: "*".to_string(),
            train: 0,
            test: 0,
        });
    }
    let mut strata: BTreeMap<(String, u32), Vec<&SampleRecord>> = BTreeMap::new();
    for r in records {
        strata.entry((r.family_key(), r.label)).or_default().push(r);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for ((family, label), mut members) in strata {
        let salt = derive_seed(&[seed, family.bytes().fold(0u64, |h, b| mix64(h ^ b as u64))]);
        members.sort_by_key(|r| (mix64(salt ^ r.pair_key()), r.id));
        let m = members.len();
        let n_train = round_half_up(train_fraction * m as f64).min(m);
        if n_train == 0 || n_train == m {
            return Err(DatasetError::InvalidFraction {
                fraction: train_fraction,
                stratum: format!("{family}/{label}"),
                train: n_train,
                test: m - n_train,
            });
        }
        for (i, r) in members.into_iter().enumerate() {
            let mut r = r.clone();
            if i < n_train {
                r.split = Split::Train;
                train.push(r);
            } else {
                r.split = Split::Test;
                test.push(r);
            }
        }
    }
    train.sort_by_key(|r| r.id);
    test.sort_by_key(|r| r.id);
    Ok((train, test))
}
