//! Slope-constrained dynamic time warping baseline with multi-template scoring.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::FeatureMatrix;
use crate::vectors::{euclidean, VectorSet};

/// How the K per-template distances are reduced to one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum TemplateCombiner {
    #[default]
    Min,
    Mean,
    Median,
}

impl fmt::Display for TemplateCombiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemplateCombiner::Min => "MIN",
            TemplateCombiner::Mean => "MEAN",
            TemplateCombiner::Median => "MEDIAN",
        })
    }
}

impl FromStr for TemplateCombiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MIN" => Ok(TemplateCombiner::Min),
            "MEAN" => Ok(TemplateCombiner::Mean),
            "MEDIAN" => Ok(TemplateCombiner::Median),
            _ => Err(Error::config(format!("unknown template combiner {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DtwConfig {
    /// Endpoint relaxation in samples. `None` uses `max(1, round(0.02 * J))`.
    pub epsilon: Option<usize>,
    pub use_parallelogram: bool,
    pub combiner: TemplateCombiner,
}

impl Default for DtwConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            use_parallelogram: true,
            combiner: TemplateCombiner::Min,
        }
    }
}

impl DtwConfig {
    /// Configuration without any global constraint: every start and end cell of the
    /// grid border is admissible and the parallelogram is off.
    pub fn unconstrained(ref_len: usize) -> Self {
        Self {
            epsilon: Some(ref_len.max(1)),
            use_parallelogram: false,
            combiner: TemplateCombiner::Min,
        }
    }

    pub fn effective_epsilon(&self, ref_len: usize) -> Result<usize> {
        match self.epsilon {
            Some(0) => Err(Error::config("epsilon must be at least 1")),
            Some(e) => Ok(e),
            None => Ok(((0.02 * ref_len as f64).round() as usize).max(1)),
        }
    }
}

/// Cost of one alignment together with its instrumentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtwOutcome {
    /// Best relaxed-endpoint path cost divided by the test length; `+inf` if no
    /// admissible path exists.
    pub cost: f64,
    /// Number of local distances evaluated.
    pub distance_evals: usize,
}

/// Column interval `[lo, hi]` of row `i` inside the slope-1/2..2 parallelogram
/// anchored at both corners, widened by `eps`. Empty when `lo > hi`.
fn parallelogram_row(i: usize, rows: usize, cols: usize, eps: usize) -> (usize, usize) {
    let (i, n, m, e) = (i as i64, rows as i64 - 1, cols as i64 - 1, eps as i64);
    let rest = n - i;
    // from the start corner: (i - e) / 2 <= j <= 2 i + e
    let lo_start = (i - e + 1).div_euclid(2);
    let hi_start = 2 * i + e;
    // from the end corner: (rest - e) / 2 <= m - j <= 2 rest + e
    let lo_end = m - (2 * rest + e);
    let hi_end = m - (rest - e + 1).div_euclid(2);
    let lo = lo_start.max(lo_end).max(0);
    let hi = hi_start.min(hi_end).min(m);
    if lo > hi {
        (1, 0)
    } else {
        (lo as usize, hi as usize)
    }
}

/// Aligns `test` (rows `i`) against `reference` (columns `j`).
///
/// Each step advances one test vector and zero, one or two reference vectors, so the
/// predecessors of `(i, j)` are `(i-1, j)`, `(i-1, j-1)` and `(i-1, j-2)`. Paths may
/// start on the first `eps` cells of the first row or column and end on the last
/// `eps + 1` cells of the last row or column.
pub fn dtw_align(test: &VectorSet, reference: &VectorSet, cfg: &DtwConfig) -> Result<DtwOutcome> {
    if test.is_empty() || reference.is_empty() {
        return Err(Error::input("cannot align an empty sequence"));
    }
    if test.dim() != reference.dim() {
        return Err(Error::input(format!(
            "dimension mismatch: test {} vs reference {}",
            test.dim(),
            reference.dim()
        )));
    }
    let rows = test.len();
    let cols = reference.len();
    let eps = cfg.effective_epsilon(cols)?;
    let bounds = |i: usize| {
        if cfg.use_parallelogram {
            parallelogram_row(i, rows, cols, eps)
        } else {
            (0, cols - 1)
        }
    };

    let mut prev = vec![f64::INFINITY; cols];
    let mut cur = vec![f64::INFINITY; cols];
    let mut evals = 0usize;
    let mut best = f64::INFINITY;
    let end_col_from = (cols - 1).saturating_sub(eps);
    let end_row_from = (rows - 1).saturating_sub(eps);

    for i in 0..rows {
        cur.iter_mut().for_each(|c| *c = f64::INFINITY);
        let (lo, hi) = bounds(i);
        if lo <= hi {
            let a = test.row(i);
            for j in lo..=hi {
                let is_start = (i == 0 && j < eps) || (j == 0 && i < eps);
                let pred = if i == 0 {
                    f64::INFINITY
                } else {
                    let mut p = prev[j];
                    if j >= 1 {
                        p = p.min(prev[j - 1]);
                    }
                    if j >= 2 {
                        p = p.min(prev[j - 2]);
                    }
                    p
                };
                let base = if is_start { 0.0 } else { pred };
                if base.is_finite() {
                    evals += 1;
                    cur[j] = base + euclidean(a, reference.row(j));
                }
            }
        }
        if i == rows - 1 {
            for &c in &cur[end_col_from..] {
                best = best.min(c);
            }
        }
        if i >= end_row_from {
            best = best.min(cur[cols - 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    if best.is_infinite() {
        log::warn!(
            "no admissible warping path between lengths {rows} and {cols} (eps {eps}, parallelogram {})",
            cfg.use_parallelogram
        );
    }
    Ok(DtwOutcome {
        cost: best / rows as f64,
        distance_evals: evals,
    })
}

/// DTW distance between two feature matrices.
pub fn dtw_distance(a: &FeatureMatrix, b: &FeatureMatrix, cfg: &DtwConfig) -> Result<f64> {
    Ok(dtw_align(a.vectors(), b.vectors(), cfg)?.cost)
}

/// Reduces per-template distances with `combiner`.
pub fn combine_templates(distances: &[f64], combiner: TemplateCombiner) -> Result<f64> {
    if distances.is_empty() {
        return Err(Error::input("at least one template distance is required"));
    }
    Ok(match combiner {
        TemplateCombiner::Min => distances.iter().copied().fold(f64::INFINITY, f64::min),
        TemplateCombiner::Mean => distances.iter().sum::<f64>() / distances.len() as f64,
        TemplateCombiner::Median => {
            let mut v = distances.to_vec();
            v.sort_by(f64::total_cmp);
            let n = v.len();
            if n % 2 == 1 {
                v[n / 2]
            } else {
                (v[n / 2 - 1] + v[n / 2]) / 2.0
            }
        }
    })
}

/// Scores `test` against `K` reference signatures and combines the K distances.
pub fn multi_template_score(
    test: &FeatureMatrix,
    refs: &[FeatureMatrix],
    cfg: &DtwConfig,
) -> Result<f64> {
    Ok(multi_template_outcome(test, refs, cfg)?.cost)
}

/// Like [`multi_template_score`] but also reports the total distance evaluations.
pub fn multi_template_outcome(
    test: &FeatureMatrix,
    refs: &[FeatureMatrix],
    cfg: &DtwConfig,
) -> Result<DtwOutcome> {
    let outcomes = refs
        .iter()
        .map(|r| dtw_align(test.vectors(), r.vectors(), cfg))
        .collect::<Result<Vec<_>>>()?;
    let costs: Vec<f64> = outcomes.iter().map(|o| o.cost).collect();
    Ok(DtwOutcome {
        cost: combine_templates(&costs, cfg.combiner)?,
        distance_evals: outcomes.iter().map(|o| o.distance_evals).sum(),
    })
}
