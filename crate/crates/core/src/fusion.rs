//! Section score fusion and the estimation of weighted-sum coefficients.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::FeatureMatrix;
use crate::vq::{section_distortions, SectionedModel};

/// Floor added before taking logarithms in the product rule.
pub const LOG_FLOOR: f64 = 1e-12;

const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FusionStrategy {
    Min,
    Max,
    Sum,
    Product,
    /// Sum of the extreme values, `min + max`.
    Sev,
    /// Weights inversely proportional to the training-score deviation.
    Wsd,
    /// Weights proportional to the training-score mean.
    Wshm,
    /// Weights inversely proportional to the training-score mean.
    Wslm,
    /// Weights inversely proportional to per-section random-forgery EER (development set).
    Wsre,
    /// Weights inversely proportional to per-section skilled-forgery EER (development set).
    Wsse,
    /// User-dependent weights from per-user section EERs.
    Wsue,
    /// User-dependent weights from per-user section EER thresholds.
    Wsut,
}

impl FusionStrategy {
    pub const ALL: [FusionStrategy; 12] = [
        FusionStrategy::Min,
        FusionStrategy::Max,
        FusionStrategy::Sum,
        FusionStrategy::Product,
        FusionStrategy::Sev,
        FusionStrategy::Wsd,
        FusionStrategy::Wshm,
        FusionStrategy::Wslm,
        FusionStrategy::Wsre,
        FusionStrategy::Wsse,
        FusionStrategy::Wsue,
        FusionStrategy::Wsut,
    ];

    pub fn is_weighted(self) -> bool {
        matches!(
            self,
            FusionStrategy::Wsd
                | FusionStrategy::Wshm
                | FusionStrategy::Wslm
                | FusionStrategy::Wsre
                | FusionStrategy::Wsse
                | FusionStrategy::Wsue
                | FusionStrategy::Wsut
        )
    }

    /// Weighted strategies whose coefficients differ per enrolled user.
    pub fn is_user_dependent(self) -> bool {
        matches!(
            self,
            FusionStrategy::Wsd
                | FusionStrategy::Wshm
                | FusionStrategy::Wslm
                | FusionStrategy::Wsue
                | FusionStrategy::Wsut
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            FusionStrategy::Min => "MIN",
            FusionStrategy::Max => "MAX",
            FusionStrategy::Sum => "SUM",
            FusionStrategy::Product => "PRODUCT",
            FusionStrategy::Sev => "SEV",
            FusionStrategy::Wsd => "WSD",
            FusionStrategy::Wshm => "WSHM",
            FusionStrategy::Wslm => "WSLM",
            FusionStrategy::Wsre => "WSRE",
            FusionStrategy::Wsse => "WSSE",
            FusionStrategy::Wsue => "WSUE",
            FusionStrategy::Wsut => "WSUT",
        }
    }
}

impl fmt::Display for FusionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FusionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FusionStrategy::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown fusion strategy {s:?}")))
    }
}

/// A fusion rule plus the section weights weighted rules need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionSpec {
    pub strategy: FusionStrategy,
    /// Explicit weights for weighted strategies. Without them the weights are
    /// estimated per user or on the development users.
    pub weights: Option<Vec<f64>>,
}

impl Default for FusionSpec {
    fn default() -> Self {
        Self::unweighted(FusionStrategy::Sum)
    }
}

impl FusionSpec {
    pub fn unweighted(strategy: FusionStrategy) -> Self {
        Self {
            strategy,
            weights: None,
        }
    }

    pub fn weighted(strategy: FusionStrategy, weights: Vec<f64>) -> Result<Self> {
        let spec = Self {
            strategy,
            weights: Some(weights),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(w) = &self.weights {
            if w.is_empty() {
                return Err(Error::config("weight vector is empty"));
            }
            if w.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(Error::config("weights must be finite and non-negative"));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::config(format!("weights sum to {total}, not 1")));
            }
        }
        Ok(())
    }
}

/// Mean and population deviation of per-section training distortions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionStats {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Number of training signatures the statistics were taken over.
    pub samples: usize,
}

/// Scores every training signature against the model section by section and
/// summarizes the distortions.
pub fn train_section_stats(
    model: &SectionedModel,
    train: &[FeatureMatrix],
) -> Result<SectionStats> {
    if train.is_empty() {
        return Err(Error::input(
            "section statistics need at least one signature",
        ));
    }
    let per_sig = train
        .iter()
        .map(|m| section_distortions(m, model).map(|s| s.normalized))
        .collect::<Result<Vec<_>>>()?;
    Ok(stats_from_distances(&per_sig))
}

/// Per-section mean and population standard deviation of `rows[t][s]`.
pub fn stats_from_distances(rows: &[Vec<f64>]) -> SectionStats {
    let t = rows.len() as f64;
    let sections = rows[0].len();
    let mu: Vec<f64> = (0..sections)
        .map(|s| rows.iter().map(|r| r[s]).sum::<f64>() / t)
        .collect();
    let sigma = (0..sections)
        .map(|s| (rows.iter().map(|r| (r[s] - mu[s]).powi(2)).sum::<f64>() / t).sqrt())
        .collect();
    SectionStats {
        mu,
        sigma,
        samples: rows.len(),
    }
}

/// What a weighted strategy estimates its coefficients from.
#[derive(Debug, Clone, Copy)]
pub enum WeightInputs<'a> {
    Stats(&'a SectionStats),
    /// Per-section equal error rates (fractions).
    SectionEers(&'a [f64]),
    /// Per-section EER operating thresholds.
    Thresholds(&'a [f64]),
}

/// `c_i = v_i / sum(v)`; all-zero input gives uniform weights.
fn proportional(values: &[f64]) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    if total == 0.0 {
        return vec![1.0 / values.len() as f64; values.len()];
    }
    values.iter().map(|v| v / total).collect()
}

/// `c_i = (1/v_i) / sum(1/v)`. Zero entries take the whole mass, split evenly,
/// which is the limit of the formula as those entries go to zero.
fn inverse_proportional(values: &[f64]) -> Vec<f64> {
    let zeros = values.iter().filter(|v| **v == 0.0).count();
    if zeros > 0 {
        let share = 1.0 / zeros as f64;
        return values
            .iter()
            .map(|v| if *v == 0.0 { share } else { 0.0 })
            .collect();
    }
    let inv: Vec<f64> = values.iter().map(|v| 1.0 / v).collect();
    let total: f64 = inv.iter().sum();
    inv.iter().map(|v| v / total).collect()
}

/// Computes the `sections` weights of a weighted strategy.
pub fn compute_weights(
    strategy: FusionStrategy,
    inputs: WeightInputs<'_>,
    sections: usize,
) -> Result<Vec<f64>> {
    use FusionStrategy::*;
    let values: &[f64] = match (strategy, inputs) {
        (Wsd, WeightInputs::Stats(s)) => &s.sigma,
        (Wshm | Wslm, WeightInputs::Stats(s)) => &s.mu,
        (Wsre | Wsse | Wsue, WeightInputs::SectionEers(e)) => e,
        (Wsut, WeightInputs::Thresholds(t)) => t,
        (s, i) if s.is_weighted() => {
            return Err(Error::config(format!(
                "{s} weights cannot be computed from {i:?}"
            )))
        }
        (s, _) => return Err(Error::config(format!("{s} does not use weights"))),
    };
    if values.len() != sections {
        return Err(Error::config(format!(
            "{} weight inputs given for {sections} sections",
            values.len()
        )));
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::input(format!(
            "{strategy} weight inputs must be finite and non-negative: {values:?}"
        )));
    }
    Ok(match strategy {
        Wshm => proportional(values),
        _ => inverse_proportional(values),
    })
}

/// Fuses per-section distortions into one score.
pub fn combine(d: &[f64], spec: &FusionSpec) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::input("nothing to combine"));
    }
    let min = || d.iter().copied().fold(f64::INFINITY, f64::min);
    let max = || d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(match spec.strategy {
        FusionStrategy::Min => min(),
        FusionStrategy::Max => max(),
        FusionStrategy::Sum => d.iter().sum(),
        FusionStrategy::Product => d.iter().map(|v| (v + LOG_FLOOR).ln()).sum(),
        FusionStrategy::Sev => min() + max(),
        s => {
            let w = spec
                .weights
                .as_ref()
                .ok_or_else(|| Error::config(format!("{s} fusion requires weights")))?;
            if w.len() != d.len() {
                return Err(Error::config(format!(
                    "{} weights for {} sections",
                    w.len(),
                    d.len()
                )));
            }
            w.iter().zip(d).map(|(c, v)| c * v).sum()
        }
    })
}
