//! Per-section codebook training (segment initialization + Lloyd refinement) and
//! nearest-neighbor quantization scoring.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{self, FusionSpec, SectionStats};
use crate::signal::{FeatureMatrix, FeatureSetId, UserId};
use crate::vectors::{squared_euclidean, VectorSet};

/// A set of `L` centroids of dimension `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    centroids: VectorSet,
}

impl Codebook {
    pub fn new(centroids: VectorSet) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::input("codebook needs at least one centroid"));
        }
        if centroids.as_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::input("codebook centroids must be finite"));
        }
        Ok(Self { centroids })
    }

    pub fn size(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids.dim()
    }

    pub fn centroids(&self) -> &VectorSet {
        &self.centroids
    }

    /// Index of the nearest centroid and its distance. Ties go to the lowest index.
    #[inline]
    pub fn nearest(&self, v: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, c) in self.centroids.rows().enumerate() {
            let d = squared_euclidean(v, c);
            if d < best.1 {
                best = (j, d);
            }
        }
        (best.0, best.1.sqrt())
    }
}

/// Training parameters of a user model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub sections: usize,
    pub codebook_size: usize,
    pub feature_set: FeatureSetId,
    pub lloyd_max_iters: usize,
    pub lloyd_rel_tol: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            sections: 1,
            codebook_size: 128,
            feature_set: FeatureSetId::FS6,
            lloyd_max_iters: 50,
            lloyd_rel_tol: 1e-4,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sections == 0 {
            return Err(Error::config("sections must be at least 1"));
        }
        if self.codebook_size == 0 {
            return Err(Error::config("codebook_size must be at least 1"));
        }
        if self.lloyd_rel_tol.is_nan() || self.lloyd_rel_tol < 0.0 {
            return Err(Error::config("lloyd_rel_tol must be non-negative"));
        }
        Ok(())
    }
}

/// An enrolled user: one codebook per temporal section.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionedModel {
    pub user_id: UserId,
    pub sections: Vec<Codebook>,
    pub config: ModelConfig,
    pub train_stats: Option<SectionStats>,
    /// User-dependent fusion weights, when the fusion strategy calls for them.
    pub user_weights: Option<FusionSpec>,
}

impl SectionedModel {
    pub fn section_count(&self) -> usize {
        self.sections.len()
    }

    pub fn dim(&self) -> usize {
        self.sections[0].dim()
    }

    /// Total number of stored centroid vectors.
    pub fn stored_vectors(&self) -> usize {
        self.sections.iter().map(Codebook::size).sum()
    }
}

/// Splits `len` items into `sections` contiguous ranges; boundary `s` is at
/// `floor(s * len / sections)`.
pub fn split_sections(len: usize, sections: usize) -> Result<Vec<Range<usize>>> {
    if sections == 0 {
        return Err(Error::config("section count must be at least 1"));
    }
    if sections > len {
        return Err(Error::config(format!(
            "cannot split {len} vectors into {sections} sections"
        )));
    }
    Ok((0..sections)
        .map(|s| s * len / sections..(s + 1) * len / sections)
        .collect())
}

/// Outcome of one codebook training run.
#[derive(Debug, Clone)]
pub struct TrainedCodebook {
    pub codebook: Codebook,
    /// Squared-error distortion after initialization, then after every accepted update.
    pub distortion_history: Vec<f64>,
    /// Set when the requested size exceeded the number of training vectors.
    pub clamped_from: Option<usize>,
}

impl TrainedCodebook {
    pub fn final_distortion(&self) -> f64 {
        *self
            .distortion_history
            .last()
            .expect("history is never empty")
    }
}

/// Assigns every vector to its nearest centroid; returns assignments and the total
/// squared-error distortion.
fn assign(vectors: &VectorSet, cb: &Codebook) -> (Vec<usize>, f64) {
    let mut total = 0.0;
    let labels = vectors
        .rows()
        .map(|v| {
            let (j, d) = cb.nearest(v);
            total += d * d;
            j
        })
        .collect();
    (labels, total)
}

fn cell_means(vectors: &VectorSet, labels: &[usize], previous: &Codebook) -> Codebook {
    let dim = vectors.dim();
    let l = previous.size();
    let mut sums = vec![0.0; l * dim];
    let mut counts = vec![0usize; l];
    for (v, &j) in vectors.rows().zip(labels) {
        counts[j] += 1;
        for (s, x) in sums[j * dim..(j + 1) * dim].iter_mut().zip(v) {
            *s += x;
        }
    }
    let mut centroids = previous.centroids.clone();
    for j in 0..l {
        // empty cells keep their previous centroid
        if counts[j] > 0 {
            let n = counts[j] as f64;
            for (c, s) in centroids.row_mut(j).iter_mut().zip(&sums[j * dim..]) {
                *c = s / n;
            }
        }
    }
    Codebook { centroids }
}

/// Trains a codebook of `size` centroids.
///
/// The training sequence is cut into `size` equal-length segments whose means seed
/// the centroids; Lloyd iterations then refine them until the relative improvement of
/// the squared-error distortion drops below `rel_tol` or `max_iters` updates ran.
pub fn train_codebook(
    vectors: &VectorSet,
    size: usize,
    max_iters: usize,
    rel_tol: f64,
) -> Result<TrainedCodebook> {
    if vectors.is_empty() {
        return Err(Error::input("cannot train a codebook on zero vectors"));
    }
    if size == 0 {
        return Err(Error::config("codebook size must be at least 1"));
    }
    let (size, clamped_from) = if size > vectors.len() {
        log::warn!(
            "codebook size {size} clamped to {} training vectors",
            vectors.len()
        );
        (vectors.len(), Some(size))
    } else {
        (size, None)
    };

    let dim = vectors.dim();
    let mut init = VectorSet::with_capacity(dim, size);
    let mut mean = vec![0.0; dim];
    for seg in split_sections(vectors.len(), size)? {
        mean.iter_mut().for_each(|m| *m = 0.0);
        let n = seg.len() as f64;
        for i in seg {
            for (m, x) in mean.iter_mut().zip(vectors.row(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        init.push(&mean)?;
    }
    let mut codebook = Codebook::new(init)?;

    let (mut labels, mut distortion) = assign(vectors, &codebook);
    let mut history = vec![distortion];
    for _ in 0..max_iters {
        if distortion == 0.0 {
            break;
        }
        let candidate = cell_means(vectors, &labels, &codebook);
        let (next_labels, next) = assign(vectors, &candidate);
        if next > distortion {
            // only reachable through rounding once converged
            break;
        }
        let improvement = (distortion - next) / distortion;
        codebook = candidate;
        labels = next_labels;
        distortion = next;
        history.push(distortion);
        if improvement < rel_tol {
            break;
        }
    }

    Ok(TrainedCodebook {
        codebook,
        distortion_history: history,
        clamped_from,
    })
}

/// Sum over `vectors` of the distance to the nearest centroid, and the number of
/// vectors quantized.
pub fn nner_distortion(vectors: &VectorSet, cb: &Codebook) -> Result<(f64, usize)> {
    if vectors.is_empty() {
        return Err(Error::input("no vectors to quantize"));
    }
    if vectors.dim() != cb.dim() {
        return Err(Error::input(format!(
            "vector dimension {} does not match codebook dimension {}",
            vectors.dim(),
            cb.dim()
        )));
    }
    let total = vectors.rows().map(|v| cb.nearest(v).1).sum();
    Ok((total, vectors.len()))
}

/// Same as [`nner_distortion`] for a row range of a matrix, without copying.
fn nner_rows(m: &FeatureMatrix, rows: Range<usize>, cb: &Codebook) -> f64 {
    rows.map(|i| cb.nearest(m.row(i)).1).sum()
}

/// Trains a user model from `K` training signatures.
///
/// Section `s` of every training signature is concatenated, in signature order, into
/// the training sequence of codebook `s`.
pub fn train_user_model(
    user_id: UserId,
    train: &[FeatureMatrix],
    cfg: &ModelConfig,
) -> Result<SectionedModel> {
    cfg.validate()?;
    let first = train
        .first()
        .ok_or_else(|| Error::input("at least one training signature is required"))?;
    if let Some(bad) = train.iter().find(|m| m.feature_set() != cfg.feature_set) {
        return Err(Error::input(format!(
            "training signature uses {} but the model is configured for {}",
            bad.feature_set(),
            cfg.feature_set
        )));
    }
    debug_assert_eq!(first.dim(), cfg.feature_set.dim());

    let splits = train
        .iter()
        .map(|m| split_sections(m.len(), cfg.sections))
        .collect::<Result<Vec<_>>>()?;

    let mut sections = Vec::with_capacity(cfg.sections);
    for s in 0..cfg.sections {
        let mut seq = VectorSet::new(first.dim());
        for (m, ranges) in train.iter().zip(&splits) {
            seq.extend_from(m.vectors(), ranges[s].clone())?;
        }
        let trained = train_codebook(
            &seq,
            cfg.codebook_size,
            cfg.lloyd_max_iters,
            cfg.lloyd_rel_tol,
        )?;
        sections.push(trained.codebook);
    }

    Ok(SectionedModel {
        user_id,
        sections,
        config: cfg.clone(),
        train_stats: None,
        user_weights: None,
    })
}

/// Per-section breakdown of a model score.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionScores {
    /// Per-vector normalized distortions `d_s`.
    pub normalized: Vec<f64>,
    /// Raw distortion sums and the vector counts they were taken over.
    pub raw: Vec<(f64, usize)>,
    /// Vector-to-centroid distances computed.
    pub distance_evals: usize,
}

/// Per-section distortions of `test` against `model`, normalized by section length.
pub fn section_distortions(test: &FeatureMatrix, model: &SectionedModel) -> Result<SectionScores> {
    if test.feature_set() != model.config.feature_set {
        return Err(Error::input(format!(
            "test signature uses {} but the model expects {}",
            test.feature_set(),
            model.config.feature_set
        )));
    }
    let ranges = split_sections(test.len(), model.section_count())?;
    let mut normalized = Vec::with_capacity(ranges.len());
    let mut raw = Vec::with_capacity(ranges.len());
    let mut distance_evals = 0;
    for (range, cb) in ranges.into_iter().zip(&model.sections) {
        let count = range.len();
        let sum = nner_rows(test, range, cb);
        distance_evals += count * cb.size();
        raw.push((sum, count));
        normalized.push(sum / count as f64);
    }
    Ok(SectionScores {
        normalized,
        raw,
        distance_evals,
    })
}

/// Match score of `test` against `model` (lower is more genuine), with the
/// per-section distortions it was fused from.
///
/// Weighted strategies without explicit weights fall back to the model's
/// user-dependent weights.
pub fn model_score(
    test: &FeatureMatrix,
    model: &SectionedModel,
    fusion: &FusionSpec,
) -> Result<(f64, Vec<f64>)> {
    let sections = section_distortions(test, model)?;
    let spec = resolve_fusion(model, fusion)?;
    let score = fusion::combine(&sections.normalized, spec)?;
    Ok((score, sections.normalized))
}

pub(crate) fn resolve_fusion<'a>(
    model: &'a SectionedModel,
    fusion: &'a FusionSpec,
) -> Result<&'a FusionSpec> {
    if fusion.strategy.is_weighted() && fusion.weights.is_none() {
        match &model.user_weights {
            Some(w) if w.strategy == fusion.strategy => Ok(w),
            _ => Err(Error::config(format!(
                "{} fusion needs weights but user {} has none",
                fusion.strategy, model.user_id
            ))),
        }
    } else {
        Ok(fusion)
    }
}

/// Distance evaluations needed to quantize `test_len` vectors against a model whose
/// per-section codebooks are all of size `codebook_size`.
pub fn distance_evaluations(test_len: usize, codebook_size: usize) -> usize {
    test_len * codebook_size
}
