//! On-line signature verification and identification with multi-section vector
//! quantization, plus a dynamic time warping baseline.
//!
//! A signature is a time series of pen samples. It is turned into a sequence of
//! z-normalized feature vectors, split into sections, and each section of a user's
//! training signatures is summarized by its own codebook. A test signature is scored
//! by its per-section quantization distortion against a claimed user's codebooks and
//! the section scores are fused into one value. Lower scores mean a better match.

pub mod corpus;
pub mod dtw;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod fusion;
pub mod signal;
pub mod vectors;
pub mod vq;

pub use dtw::{dtw_align, dtw_distance, DtwConfig, DtwOutcome, TemplateCombiner};
pub use error::{Error, Result};
pub use eval::{
    eer, eer_general, eer_individual, far_frr, identify, DetCurve, EerPoint, ForgeryFilter,
    ForgeryKind, ScoreSet,
};
pub use fusion::{
    combine, compute_weights, FusionSpec, FusionStrategy, SectionStats, WeightInputs,
};
pub use signal::{
    preprocess, znorm, FeatureMatrix, FeatureSetId, RawSignature, Sample, SignatureKind, UserId,
};
pub use vectors::VectorSet;
pub use vq::{
    model_score, nner_distortion, split_sections, train_codebook, train_user_model, Codebook,
    ModelConfig, SectionedModel,
};
