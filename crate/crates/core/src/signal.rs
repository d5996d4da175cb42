//! Raw pen trajectories and their conversion into normalized feature matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectors::VectorSet;

/// Enrolled identity. Ordering is used for identification tie-breaks.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SignatureKind {
    #[default]
    Genuine,
    SkilledForgery,
    RandomForgery,
}

/// One pen sample. `t` is expressed in sample-index units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub p: f64,
    pub azimuth: f64,
    pub altitude: f64,
}

impl Sample {
    fn is_finite(&self) -> bool {
        [self.t, self.x, self.y, self.p, self.azimuth, self.altitude]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// A captured signature. Metadata other than the samples and the sampling rate is
/// assigned by whoever loads the signature (manifest, importer or generator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSignature {
    pub samples: Vec<Sample>,
    pub sample_rate_hz: f64,
    pub user_id: UserId,
    pub kind: SignatureKind,
    pub session: u32,
    pub index: u32,
    /// Pen button status per sample, when the source records one (SVC).
    pub pen_status: Option<Vec<u8>>,
}

impl RawSignature {
    pub fn new(samples: Vec<Sample>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
            user_id: UserId::default(),
            kind: SignatureKind::Genuine,
            session: 0,
            index: 0,
            pen_status: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks the structural invariants: non-empty, finite, strictly increasing time.
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::input("signature has no samples"));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::input(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::input(format!("sample {i} has a non-finite channel")));
            }
            if i > 0 && s.t <= self.samples[i - 1].t {
                return Err(Error::input(format!(
                    "timestamps must be strictly increasing (sample {i})"
                )));
            }
        }
        if let Some(status) = &self.pen_status {
            if status.len() != self.samples.len() {
                return Err(Error::input("pen status length differs from sample count"));
            }
        }
        Ok(())
    }

    /// Checks channel ranges of a typical pen tablet.
    pub fn check_tablet_ranges(&self) -> Result<()> {
        const RANGES: [(&str, f64, f64); 5] = [
            ("x", 0.0, 12700.0),
            ("y", 0.0, 9700.0),
            ("pressure", 0.0, 1024.0),
            ("azimuth", 0.0, 3600.0),
            ("altitude", 300.0, 900.0),
        ];
        for (i, s) in self.samples.iter().enumerate() {
            let values = [s.x, s.y, s.p, s.azimuth, s.altitude];
            for ((name, lo, hi), v) in RANGES.iter().zip(values) {
                if v < *lo || v > *hi {
                    return Err(Error::input(format!(
                        "sample {i}: {name}={v} outside [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A single feature-vector component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
    Pressure,
    Azimuth,
    Altitude,
    Dx,
    Dy,
    Dp,
    Time,
}

/// The six feature sets used for feature selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum FeatureSetId {
    FS1,
    FS2,
    FS3,
    FS4,
    FS5,
    #[default]
    FS6,
}

impl FeatureSetId {
    pub const ALL: [FeatureSetId; 6] = [
        FeatureSetId::FS1,
        FeatureSetId::FS2,
        FeatureSetId::FS3,
        FeatureSetId::FS4,
        FeatureSetId::FS5,
        FeatureSetId::FS6,
    ];

    pub fn components(self) -> &'static [Component] {
        use Component::*;
        match self {
            FeatureSetId::FS1 => &[X, Y, Pressure, Azimuth, Altitude],
            FeatureSetId::FS2 => &[X, Y, Dx, Dy],
            FeatureSetId::FS3 => &[X, Y, Pressure, Dx, Dy, Dp],
            FeatureSetId::FS4 => &[X, Y, Pressure, Dx, Dy],
            FeatureSetId::FS5 => &[X, Y, Dx, Dy, Dp],
            FeatureSetId::FS6 => &[X, Y, Dx, Dy, Dp, Time],
        }
    }

    pub fn dim(self) -> usize {
        self.components().len()
    }
}

impl fmt::Display for FeatureSetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for FeatureSetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureSetId::ALL
            .into_iter()
            .find(|fs| fs.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown feature set {s:?}")))
    }
}

/// Preprocessed per-sample feature vectors of one signature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    vectors: VectorSet,
    feature_set: FeatureSetId,
    pub user_id: UserId,
    pub kind: SignatureKind,
    pub index: u32,
}

impl FeatureMatrix {
    /// Wraps already-computed vectors. The dimension must match the feature set.
    pub fn new(vectors: VectorSet, feature_set: FeatureSetId) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::input("feature matrix must have at least one row"));
        }
        if vectors.dim() != feature_set.dim() {
            return Err(Error::input(format!(
                "{feature_set} expects dimension {}, got {}",
                feature_set.dim(),
                vectors.dim()
            )));
        }
        Ok(Self {
            vectors,
            feature_set,
            user_id: UserId::default(),
            kind: SignatureKind::Genuine,
            index: 0,
        })
    }

    pub fn vectors(&self) -> &VectorSet {
        &self.vectors
    }

    pub fn feature_set(&self) -> FeatureSetId {
        self.feature_set
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }

    /// Column `c` copied out.
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.vectors.rows().map(|r| r[c]).collect()
    }
}

/// Z-normalizes a series with the population standard deviation.
///
/// A series with zero spread maps to all zeros.
pub fn znorm(series: &[f64]) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::input("cannot z-normalize an empty series"));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("series contains non-finite values"));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = series.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    // Rounding in `mean` leaves a residual of a few ulps on constant input.
    if std <= 1e-12 * scale {
        return Ok(vec![0.0; series.len()]);
    }
    Ok(series.iter().map(|v| (v - mean) / std).collect())
}

/// Backward first difference; the first element is zero.
fn backward_diff(series: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    out.push(0.0);
    out.extend(series.windows(2).map(|w| w[1] - w[0]));
    out
}

/// Translates a coordinate series so that its mean is at the origin.
///
/// Computed as `(n*v - sum) / n` so that integer-valued tablet coordinates shifted by
/// an integer offset produce bit-identical results.
fn center(series: &[f64]) -> Vec<f64> {
    let n = series.len() as f64;
    let sum: f64 = series.iter().sum();
    series.iter().map(|v| (n * v - sum) / n).collect()
}

/// Converts a raw signature into the normalized feature matrix for `fs`.
///
/// Steps: center of mass to the origin, backward differences of x, y and pressure,
/// column assembly (time is the 0-based sample index), then per-column z-norm.
pub fn preprocess(sig: &RawSignature, fs: FeatureSetId) -> Result<FeatureMatrix> {
    sig.validate()?;
    let n = sig.samples.len();
    let xs = center(&sig.samples.iter().map(|s| s.x).collect::<Vec<_>>());
    let ys = center(&sig.samples.iter().map(|s| s.y).collect::<Vec<_>>());
    let ps: Vec<f64> = sig.samples.iter().map(|s| s.p).collect();

    let mut columns = Vec::with_capacity(fs.dim());
    for comp in fs.components() {
        let raw = match comp {
            Component::X => xs.clone(),
            Component::Y => ys.clone(),
            Component::Pressure => ps.clone(),
            Component::Azimuth => sig.samples.iter().map(|s| s.azimuth).collect(),
            Component::Altitude => sig.samples.iter().map(|s| s.altitude).collect(),
            Component::Dx => backward_diff(&xs),
            Component::Dy => backward_diff(&ys),
            Component::Dp => backward_diff(&ps),
            Component::Time => (0..n).map(|i| i as f64).collect(),
        };
        columns.push(znorm(&raw)?);
    }

    let mut vectors = VectorSet::with_capacity(fs.dim(), n);
    let mut row = vec![0.0; fs.dim()];
    for i in 0..n {
        for (slot, col) in row.iter_mut().zip(&columns) {
            *slot = col[i];
        }
        vectors.push(&row)?;
    }
    let mut m = FeatureMatrix::new(vectors, fs)?;
    m.user_id = sig.user_id;
    m.kind = sig.kind;
    m.index = sig.index;
    Ok(m)
}
