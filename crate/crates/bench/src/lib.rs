//! Shared fixtures for the matcher benchmarks.

use msvq_core::corpus::{generate_synthetic_corpus, SyntheticSpec};
use msvq_core::{
    preprocess, train_user_model, FeatureMatrix, FeatureSetId, ModelConfig, SectionedModel,
};

/// One enrolled user and a genuine test signature to score against it.
pub struct Fixture {
    pub references: Vec<FeatureMatrix>,
    pub test: FeatureMatrix,
    pub model: SectionedModel,
}

/// Builds a fixture from a small synthetic corpus with prototypes of exactly `len` samples.
pub fn fixture(len: usize, references: usize, codebook_size: usize, sections: usize) -> Fixture {
    let spec = SyntheticSpec {
        n_users: 1,
        genuine_per_user: references + 1,
        skilled_per_user: 0,
        min_len: len,
        max_len: len,
        ..SyntheticSpec::default()
    };
    let corpus = generate_synthetic_corpus(&spec).expect("valid synthetic spec");
    let user = &corpus.corpus.users[0];
    let fs = FeatureSetId::default();
    let mut feats: Vec<FeatureMatrix> = user
        .genuine
        .iter()
        .map(|s| preprocess(s, fs).expect("synthetic signatures are well formed"))
        .collect();
    let test = feats.pop().expect("at least one signature");
    let config = ModelConfig {
        sections,
        codebook_size,
        ..ModelConfig::default()
    };
    let model = train_user_model(user.user_id, &feats, &config).expect("trainable model");
    Fixture {
        references: feats,
        test,
        model,
    }
}
