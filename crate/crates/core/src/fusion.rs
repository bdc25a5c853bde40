//! Label spaces and losses for the four supervision strategies.
//!
//! | strategy | heads        | object head            | illusion head |
//! |----------|--------------|------------------------|---------------|
//! | Base     | `[n]`        | object classes         | -             |
//! | Single   | `[n + 2]`    | classes, then non-illusion (`n`), illusion (`n + 1`) | - |
//! | Multi    | `[n, 2]`     | object classes         | absent / present |
//! | Mix      | `[n + 1, 2]` | classes plus an "illusion" class at `n` | absent / present |
//!
//! Heads that do not apply to a sample are masked: they contribute zero loss
//! and zero gradient. In Multi a target image only supervises the object head
//! and an illusion image only the binary head. In Mix an illusory image also
//! trains the appended object class, while a control image trains the binary
//! head alone.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Base,
    Single,
    Multi,
    Mix,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Base, Strategy::Single, Strategy::Multi, Strategy::Mix];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Base => "base",
            Strategy::Single => "single",
            Strategy::Multi => "multi",
            Strategy::Mix => "mix",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(s))
    }
}

/// A strategy together with the number of object classes `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FusionMode {
    pub strategy: Strategy,
    pub n_classes: usize,
}

impl FusionMode {
    pub fn new(strategy: Strategy, n_classes: usize) -> Self {
        Self { strategy, n_classes }
    }

    pub fn head_dims(&self) -> Vec<usize> {
        head_dims(*self)
    }

    /// Index of the binary illusion head, if the strategy has one.
    pub fn illusion_head(&self) -> Option<usize> {
        match self.strategy {
            Strategy::Multi | Strategy::Mix => Some(1),
            _ => None,
        }
    }
}

pub fn head_dims(mode: FusionMode) -> Vec<usize> {
    let n = mode.n_classes;
    match mode.strategy {
        Strategy::Base => vec![n],
        Strategy::Single => vec![n + 2],
        Strategy::Multi => vec![n, 2],
        Strategy::Mix => vec![n + 1, 2],
    }
}

/// Where a training sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleOrigin {
    /// Object class `k` of the target dataset.
    Target(usize),
    /// Illusion image; `true` for the illusory member of a pair.
    Illusion(bool),
}

/// Per-head class index, `None` where the head is masked.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FusionLabel {
    pub heads: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FusionError {
    #[error("class {class} out of range for {n} classes")]
    InvalidClass { class: usize, n: usize },
    #[error("target index {index} out of range for {len} logits")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("expected head sizes {expected:?}, got {actual:?}")]
    ShapeMismatch { expected: Vec<usize>, actual: Vec<usize> },
    #[error("label does not fit the {0:?} label space")]
    LabelMismatch(Strategy),
    #[error("empty batch")]
    EmptyBatch,
}

pub fn encode_label(mode: FusionMode, origin: SampleOrigin) -> Result<FusionLabel, FusionError> {
    let n = mode.n_classes;
    if let SampleOrigin::Target(k) = origin {
        if k >= n {
            return Err(FusionError::InvalidClass { class: k, n });
        }
    }
    let heads = match (mode.strategy, origin) {
        (Strategy::Base, SampleOrigin::Target(k)) => vec![Some(k)],
        (Strategy::Base, SampleOrigin::Illusion(_)) => return Err(FusionError::LabelMismatch(Strategy::Base)),
        (Strategy::Single, SampleOrigin::Target(k)) => vec![Some(k)],
        (Strategy::Single, SampleOrigin::Illusion(b)) => vec![Some(n + b as usize)],
        (Strategy::Multi, SampleOrigin::Target(k)) => vec![Some(k), None],
        (Strategy::Multi, SampleOrigin::Illusion(b)) => vec![None, Some(b as usize)],
        (Strategy::Mix, SampleOrigin::Target(k)) => vec![Some(k), None],
        (Strategy::Mix, SampleOrigin::Illusion(true)) => vec![Some(n), Some(1)],
        (Strategy::Mix, SampleOrigin::Illusion(false)) => vec![None, Some(0)],
    };
    Ok(FusionLabel { heads })
}

/// Natural log of Σ exp(z), computed with max subtraction.
pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logits.iter().map(|&z| libm::exp(z - m)).sum();
    m + libm::log(s)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&z| libm::exp(z - m)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Returns `-log softmax(logits)[target]` and its gradient
/// `softmax(logits) - onehot(target)`.
pub fn cross_entropy(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>), FusionError> {
    if target >= logits.len() {
        return Err(FusionError::IndexOutOfRange { index: target, len: logits.len() });
    }
    let loss = log_sum_exp(logits) - logits[target];
    let mut grad = softmax(logits);
    grad[target] -= 1.0;
    // Rounding can leave a tiny negative value in the saturated limit.
    Ok((loss.max(0.0), grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub total: f64,
    /// Per-head loss; `None` for masked heads.
    pub components: Vec<Option<f64>>,
    /// Gradient of `total` with respect to each head's logits.
    pub gradients: Vec<Vec<f64>>,
}

fn check_shapes(mode: FusionMode, head_logits: &[Vec<f64>]) -> Result<(), FusionError> {
    let expected = head_dims(mode);
    let actual: Vec<usize> = head_logits.iter().map(Vec::len).collect();
    if expected != actual {
        return Err(FusionError::ShapeMismatch { expected, actual });
    }
    Ok(())
}

pub fn loss(mode: FusionMode, head_logits: &[Vec<f64>], label: &FusionLabel) -> Result<LossReport, FusionError> {
    check_shapes(mode, head_logits)?;
    if label.heads.len() != head_logits.len() || label.heads.iter().all(Option::is_none) {
        return Err(FusionError::LabelMismatch(mode.strategy));
    }
    let mut total = 0.0;
    let mut components = Vec::with_capacity(head_logits.len());
    let mut gradients = Vec::with_capacity(head_logits.len());
    for (logits, target) in head_logits.iter().zip(&label.heads) {
        match *target {
            Some(t) => {
                let (l, g) = cross_entropy(logits, t)?;
                total += l;
                components.push(Some(l));
                gradients.push(g);
            }
            None => {
                components.push(None);
                gradients.push(vec![0.0; logits.len()]);
            }
        }
    }
    Ok(LossReport { total, components, gradients })
}

/// Mean loss over a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchLoss {
    /// Mean total, mean per-head component (masked samples count as zero),
    /// and per-head gradient averaged over samples.
    pub mean: LossReport,
    /// Gradient of the mean total with respect to each sample's logits,
    /// i.e. the per-sample gradient divided by the batch size.
    pub per_sample: Vec<Vec<Vec<f64>>>,
}

pub fn batch_loss(mode: FusionMode, batch: &[(Vec<Vec<f64>>, FusionLabel)]) -> Result<BatchLoss, FusionError> {
    if batch.is_empty() {
        return Err(FusionError::EmptyBatch);
    }
    let reports = batch
        .iter()
        .map(|(logits, label)| loss(mode, logits, label))
        .collect::<Result<Vec<_>, _>>()?;
    let b = batch.len() as f64;
    let dims = head_dims(mode);

    let totals: Vec<f64> = reports.iter().map(|r| r.total).collect();
    let components = (0..dims.len())
        .map(|h| {
            let vals: Vec<f64> = reports.iter().map(|r| r.components[h].unwrap_or(0.0)).collect();
            if reports.iter().all(|r| r.components[h].is_none()) {
                None
            } else {
                Some(pairwise_sum(&vals) / b)
            }
        })
        .collect();
    let gradients = dims
        .iter()
        .enumerate()
        .map(|(h, &dim)| {
            (0..dim)
                .map(|j| {
                    let col: Vec<f64> = reports.iter().map(|r| r.gradients[h][j]).collect();
                    pairwise_sum(&col) / b
                })
                .collect()
        })
        .collect();
    let per_sample = reports
        .into_iter()
        .map(|r| r.gradients.into_iter().map(|g| g.into_iter().map(|v| v / b).collect()).collect())
        .collect();
    Ok(BatchLoss {
        mean: LossReport { total: pairwise_sum(&totals) / b, components, gradients },
        per_sample,
    })
}

/// Sum with pairwise (cascade) reduction.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// The object-class logits of a prediction: the first `n` entries of head 0.
pub fn object_logits(mode: FusionMode, head_logits: &[Vec<f64>]) -> Vec<f64> {
    head_logits[0][..mode.n_classes].to_vec()
}

/// Binary illusion decision implied by a prediction, for strategies that have
/// one. Single compares the `n + 1` (illusion) logit against `n`
/// (non-illusion); Multi and Mix use the binary head.
pub fn illusion_decision(mode: FusionMode, head_logits: &[Vec<f64>]) -> Option<bool> {
    let n = mode.n_classes;
    match mode.strategy {
        Strategy::Base => None,
        Strategy::Single => Some(head_logits[0][n + 1] > head_logits[0][n]),
        Strategy::Multi | Strategy::Mix => Some(head_logits[1][1] > head_logits[1][0]),
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
