//! Signature files, corpus layout, synthetic data, evaluation protocols and model
//! persistence.

mod manifest;
mod model_file;
mod protocol;
mod sigfile;
mod svc;
mod synthetic;

pub use manifest::{
    Corpus, CorpusManifest, ManifestUser, UserLayout, UserSignatures, MANIFEST_FILE,
};
pub use model_file::{load_model, model_from_str, model_to_string, save_model, MODEL_MAGIC};
pub use protocol::{
    build_protocol, build_trials, identification_trials, ExperimentProtocol, ProtocolCounts,
    SignatureRef, Trial, TrialLabel,
};
pub use sigfile::{
    parse_signature, parse_signature_file, write_signature, write_signature_file, SIG_MAGIC,
};
pub use svc::{import_svc, parse_svc};
pub use synthetic::{
    generate_synthetic_corpus, prototype_distance, SyntheticCorpus, SyntheticSpec,
};
