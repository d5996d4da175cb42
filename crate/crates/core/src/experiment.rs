//! End-to-end experiments: enrollment, trial scoring, error rates and the cost
//! measurements behind the analytic benchmark.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    build_trials, generate_synthetic_corpus, identification_trials, Corpus, ExperimentProtocol,
    ProtocolCounts, SignatureRef, SyntheticSpec, Trial, TrialLabel, UserLayout,
};
use crate::dtw::{multi_template_outcome, DtwConfig};
use crate::error::{Error, Result};
use crate::eval::{
    eer_general, eer_individual, far_frr, DetCurve, ForgeryFilter, ForgeryKind, ScoreSet,
};
use crate::fusion::{
    combine, compute_weights, train_section_stats, FusionSpec, FusionStrategy, WeightInputs,
};
use crate::signal::{preprocess, FeatureMatrix, FeatureSetId, UserId};
use crate::vq::{
    resolve_fusion, section_distortions, train_user_model, ModelConfig, SectionedModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    #[default]
    Vq,
    Dtw,
}

impl std::fmt::Display for Matcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Matcher::Vq => "vq",
            Matcher::Dtw => "dtw",
        })
    }
}

impl std::str::FromStr for Matcher {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vq" => Ok(Matcher::Vq),
            "dtw" => Ok(Matcher::Dtw),
            _ => Err(Error::config(format!("unknown matcher {s:?}"))),
        }
    }
}

/// Everything that determines the outcome of an experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub matcher: Matcher,
    pub model: ModelConfig,
    pub fusion: FusionSpec,
    pub dtw: DtwConfig,
    pub protocol: ExperimentProtocol,
    pub synthetic: SyntheticSpec,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.fusion.validate()?;
        self.protocol.validate()?;
        self.synthetic.validate()?;
        if let Some(w) = &self.fusion.weights {
            if !self.fusion.strategy.is_weighted() {
                return Err(Error::config(format!(
                    "{} fusion takes no weights",
                    self.fusion.strategy
                )));
            }
            if w.len() != self.model.sections {
                return Err(Error::config(format!(
                    "{} fusion weights given for {} sections",
                    w.len(),
                    self.model.sections
                )));
            }
        }
        self.dtw.effective_epsilon(1)?;
        Ok(())
    }
}

/// Feature matrices of one user's signatures.
#[derive(Debug, Clone)]
pub struct UserFeatures {
    pub user_id: UserId,
    pub genuine: Vec<FeatureMatrix>,
    pub skilled: Vec<FeatureMatrix>,
}

/// A whole corpus turned into feature matrices.
#[derive(Debug, Clone)]
pub struct FeatureCorpus {
    pub users: Vec<UserFeatures>,
    index: BTreeMap<UserId, usize>,
}

impl FeatureCorpus {
    pub fn extract(corpus: &Corpus, fs: FeatureSetId) -> Result<Self> {
        let users = corpus
            .users
            .par_iter()
            .map(|u| {
                let conv = |sigs: &[crate::signal::RawSignature]| {
                    sigs.iter()
                        .map(|s| preprocess(s, fs))
                        .collect::<Result<Vec<_>>>()
                };
                Ok(UserFeatures {
                    user_id: u.user_id,
                    genuine: conv(&u.genuine)?,
                    skilled: conv(&u.skilled)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(users)
    }

    pub fn new(users: Vec<UserFeatures>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (k, u) in users.iter().enumerate() {
            if index.insert(u.user_id, k).is_some() {
                return Err(Error::input(format!("user {} appears twice", u.user_id)));
            }
        }
        Ok(Self { users, index })
    }

    pub fn layout(&self) -> Vec<UserLayout> {
        self.users
            .iter()
            .map(|u| UserLayout {
                user_id: u.user_id,
                genuine: u.genuine.len(),
                skilled: u.skilled.len(),
            })
            .collect()
    }

    /// Position of `user` in [`FeatureCorpus::users`].
    pub fn position(&self, user: UserId) -> Result<usize> {
        self.index
            .get(&user)
            .copied()
            .ok_or_else(|| Error::input(format!("unknown user {user}")))
    }

    pub fn signature(&self, r: SignatureRef) -> Result<&FeatureMatrix> {
        let u = &self.users[self.position(r.owner)?];
        let list = if r.skilled { &u.skilled } else { &u.genuine };
        list.get(r.index).ok_or_else(|| {
            Error::input(format!(
                "user {} has no {} signature {}",
                r.owner,
                if r.skilled { "skilled" } else { "genuine" },
                r.index
            ))
        })
    }

    /// The training signatures of every user, in user order.
    pub fn training_sets(&self, protocol: &ExperimentProtocol) -> Result<Vec<Vec<FeatureMatrix>>> {
        self.users
            .iter()
            .map(|u| {
                protocol
                    .train
                    .iter()
                    .map(|&i| {
                        u.genuine.get(i).cloned().ok_or_else(|| {
                            Error::input(format!(
                                "user {} has no genuine signature {i} for training",
                                u.user_id
                            ))
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

/// Trains one model per user, in user order, with training statistics and, for
/// user-dependent weighted fusion, the user's section weights.
pub fn enroll_all(
    training: &[Vec<FeatureMatrix>],
    user_ids: &[UserId],
    cfg: &ModelConfig,
    fusion: &FusionSpec,
) -> Result<Vec<SectionedModel>> {
    if training.len() != user_ids.len() {
        return Err(Error::input("one training set per user is required"));
    }
    let mut models = user_ids
        .par_iter()
        .zip(training)
        .map(|(&id, train)| {
            let mut m = train_user_model(id, train, cfg)?;
            m.train_stats = Some(train_section_stats(&m, train)?);
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    if fusion.strategy.is_user_dependent() && fusion.weights.is_none() {
        let weights = models
            .par_iter()
            .enumerate()
            .map(|(k, m)| user_weights(k, m, training, fusion.strategy))
            .collect::<Result<Vec<_>>>()?;
        for (m, w) in models.iter_mut().zip(weights) {
            m.user_weights = Some(w);
        }
    }
    Ok(models)
}

/// Section weights of one user. Weights driven by error rates treat the user's own
/// training signatures as genuine and the other users' as impostors.
fn user_weights(
    own: usize,
    model: &SectionedModel,
    training: &[Vec<FeatureMatrix>],
    strategy: FusionStrategy,
) -> Result<FusionSpec> {
    use FusionStrategy::*;
    let sections = model.section_count();
    let weights = match strategy {
        Wsd | Wshm | Wslm => {
            let stats = model
                .train_stats
                .as_ref()
                .ok_or_else(|| Error::input("model lacks training statistics"))?;
            compute_weights(strategy, WeightInputs::Stats(stats), sections)?
        }
        Wsue | Wsut => {
            if training.len() < 2 {
                return Err(Error::config(format!(
                    "{strategy} fusion needs at least two users"
                )));
            }
            let mut per_section = vec![ScoreSet::default(); sections];
            for (k, sigs) in training.iter().enumerate() {
                for sig in sigs {
                    let d = section_distortions(sig, model)?.normalized;
                    for (set, v) in per_section.iter_mut().zip(d) {
                        if k == own {
                            set.push_genuine(model.user_id, v);
                        } else {
                            set.push_impostor(model.user_id, v, ForgeryKind::Random);
                        }
                    }
                }
            }
            let points = per_section
                .iter()
                .map(|s| eer_general(s, ForgeryFilter::All))
                .collect::<Result<Vec<_>>>()?;
            if strategy == Wsue {
                let eers: Vec<f64> = points.iter().map(|p| p.eer).collect();
                compute_weights(strategy, WeightInputs::SectionEers(&eers), sections)?
            } else {
                let thresholds: Vec<f64> = points.iter().map(|p| p.threshold.max(0.0)).collect();
                compute_weights(strategy, WeightInputs::Thresholds(&thresholds), sections)?
            }
        }
        other => {
            return Err(Error::config(format!(
                "{other} weights are not user dependent"
            )))
        }
    };
    FusionSpec::weighted(strategy, weights)
}

/// Weights shared by all users, estimated from per-section error rates on the
/// development users: random forgeries for WSRE, skilled forgeries for WSSE.
pub fn development_weights(
    features: &FeatureCorpus,
    models: &[SectionedModel],
    protocol: &ExperimentProtocol,
    strategy: FusionStrategy,
) -> Result<FusionSpec> {
    let kind = match strategy {
        FusionStrategy::Wsre => ForgeryKind::Random,
        FusionStrategy::Wsse => ForgeryKind::Skilled,
        other => {
            return Err(Error::config(format!(
                "{other} weights do not come from development users"
            )))
        }
    };
    let layout = features.layout();
    let (dev, _) = protocol.partition(&layout)?;
    if dev.is_empty() {
        return Err(Error::config(format!(
            "{strategy} fusion needs development users (protocol.dev_users)"
        )));
    }
    let trials: Vec<Trial> = build_trials(dev, protocol)?
        .into_iter()
        .filter(|t| matches!(t.label, TrialLabel::Genuine) || t.label == TrialLabel::Impostor(kind))
        .collect();
    let rows = trials
        .par_iter()
        .map(|t| {
            let model = &models[features.position(t.model_user)?];
            Ok(section_distortions(features.signature(t.test)?, model)?.normalized)
        })
        .collect::<Result<Vec<_>>>()?;
    let sections = models
        .first()
        .map(|m| m.section_count())
        .ok_or_else(|| Error::input("no models"))?;
    let mut per_section = vec![ScoreSet::default(); sections];
    for (t, row) in trials.iter().zip(rows) {
        for (set, v) in per_section.iter_mut().zip(row) {
            match t.label {
                TrialLabel::Genuine => set.push_genuine(t.model_user, v),
                TrialLabel::Impostor(k) => set.push_impostor(t.model_user, v, k),
            }
        }
    }
    let eers = per_section
        .iter()
        .map(|s| eer_general(s, ForgeryFilter::All).map(|p| p.eer))
        .collect::<Result<Vec<_>>>()?;
    FusionSpec::weighted(
        strategy,
        compute_weights(strategy, WeightInputs::SectionEers(&eers), sections)?,
    )
}

/// Enrolls every user of `corpus` with `workers` threads. Shared development-set
/// weights are attached to every model as its weights.
pub fn enroll_corpus(
    corpus: &Corpus,
    cfg: &ExperimentConfig,
    workers: usize,
) -> Result<Vec<SectionedModel>> {
    cfg.validate()?;
    with_workers(workers, || {
        let features = FeatureCorpus::extract(corpus, cfg.model.feature_set)?;
        let training = features.training_sets(&cfg.protocol)?;
        let ids: Vec<UserId> = features.users.iter().map(|u| u.user_id).collect();
        let mut models = enroll_all(&training, &ids, &cfg.model, &cfg.fusion)?;
        if matches!(
            cfg.fusion.strategy,
            FusionStrategy::Wsre | FusionStrategy::Wsse
        ) && cfg.fusion.weights.is_none()
        {
            let shared =
                development_weights(&features, &models, &cfg.protocol, cfg.fusion.strategy)?;
            for m in &mut models {
                m.user_weights = Some(shared.clone());
            }
        }
        Ok(models)
    })
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))?
        .install(f)
}

/// Scores test signatures against enrolled users.
pub enum Scorer<'a> {
    Vq {
        models: &'a [SectionedModel],
        fusion: &'a FusionSpec,
    },
    Dtw {
        references: &'a [Vec<FeatureMatrix>],
        config: &'a DtwConfig,
    },
}

impl Scorer<'_> {
    /// Score of `test` against the user at position `user`, and the number of
    /// distances evaluated.
    pub fn score(&self, user: usize, test: &FeatureMatrix) -> Result<(f64, usize)> {
        match self {
            Scorer::Vq { models, fusion } => {
                let model = &models[user];
                let sections = section_distortions(test, model)?;
                let spec = resolve_fusion(model, fusion)?;
                Ok((
                    combine(&sections.normalized, spec)?,
                    sections.distance_evals,
                ))
            }
            Scorer::Dtw { references, config } => {
                let out = multi_template_outcome(test, &references[user], config)?;
                let cost = if out.cost.is_finite() {
                    out.cost
                } else {
                    // no admissible alignment: worst possible match
                    f64::MAX
                };
                Ok((cost, out.distance_evals))
            }
        }
    }
}

/// Scores every trial; results are in trial order whatever the thread count.
pub fn score_trials(
    features: &FeatureCorpus,
    scorer: &Scorer<'_>,
    trials: &[Trial],
) -> Result<Vec<(f64, usize)>> {
    trials
        .par_iter()
        .map(|t| {
            scorer.score(
                features.position(t.model_user)?,
                features.signature(t.test)?,
            )
        })
        .collect()
}

/// Closed-set identification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Identification {
    pub correct: usize,
    pub total: usize,
}

impl Identification {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Assigns each probe to the candidate with the lowest score, ties to the lowest id.
pub fn identify_probes(
    features: &FeatureCorpus,
    scorer: &Scorer<'_>,
    candidates: &[UserId],
    probes: &[SignatureRef],
) -> Result<Vec<UserId>> {
    let positions = candidates
        .iter()
        .map(|&u| features.position(u).map(|p| (u, p)))
        .collect::<Result<Vec<_>>>()?;
    probes
        .par_iter()
        .map(|p| {
            let test = features.signature(*p)?;
            let mut best: Option<(f64, UserId)> = None;
            for &(user, pos) in &positions {
                let (s, _) = scorer.score(pos, test)?;
                let better = match best {
                    None => true,
                    Some((b, u)) => s < b || (s == b && user < u),
                };
                if better {
                    best = Some((s, user));
                }
            }
            best.map(|(_, u)| u)
                .ok_or_else(|| Error::input("identification needs at least one candidate"))
        })
        .collect()
}

/// EERs (fractions) under user-specific and shared thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EerPair {
    pub individual: f64,
    pub general: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EerTable {
    pub random: Option<EerPair>,
    pub skilled: Option<EerPair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub counts: ProtocolCounts,
    pub scores: ScoreSet,
    pub table: EerTable,
    pub identification: Identification,
    pub det_random: Option<DetCurve>,
    pub det_skilled: Option<DetCurve>,
    /// Distances evaluated while scoring the verification trials.
    pub distance_evals: u64,
    /// Fusion rule applied, with the shared weights when they were estimated.
    pub fusion: FusionSpec,
}

/// Machine-readable digest of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub trials: ProtocolCounts,
    pub eer: EerTable,
    pub identification: Identification,
    pub identification_rate: f64,
    pub distance_evals: u64,
}

fn eer_pair(scores: &ScoreSet, kind: ForgeryKind) -> Result<Option<(EerPair, DetCurve)>> {
    if !scores.impostor.iter().any(|s| s.kind == kind) || scores.genuine.is_empty() {
        return Ok(None);
    }
    let filter = ForgeryFilter::Only(kind);
    let curve = far_frr(scores, filter)?;
    let general = crate::eval::eer(&curve)?.eer;
    let individual = eer_individual(scores, filter)?.mean;
    Ok(Some((
        EerPair {
            individual,
            general,
        },
        curve,
    )))
}

/// Runs the verification and identification protocol on `corpus` with `workers`
/// scoring threads. The report does not depend on `workers`.
pub fn run_experiment(
    corpus: &Corpus,
    cfg: &ExperimentConfig,
    workers: usize,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    with_workers(workers, || run_in_pool(corpus, cfg))
}

fn run_in_pool(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let features = FeatureCorpus::extract(corpus, cfg.model.feature_set)?;
    let layout = features.layout();
    let (_, test_users) = cfg.protocol.partition(&layout)?;
    let trials = build_trials(test_users, &cfg.protocol)?;
    let probes = identification_trials(test_users, &cfg.protocol)?;
    let candidates: Vec<UserId> = test_users.iter().map(|u| u.user_id).collect();
    let training = features.training_sets(&cfg.protocol)?;

    let models;
    let mut fusion = cfg.fusion.clone();
    let scorer = match cfg.matcher {
        Matcher::Vq => {
            let ids: Vec<UserId> = features.users.iter().map(|u| u.user_id).collect();
            models = enroll_all(&training, &ids, &cfg.model, &cfg.fusion)?;
            if matches!(fusion.strategy, FusionStrategy::Wsre | FusionStrategy::Wsse)
                && fusion.weights.is_none()
            {
                fusion = development_weights(&features, &models, &cfg.protocol, fusion.strategy)?;
            }
            Scorer::Vq {
                models: &models,
                fusion: &fusion,
            }
        }
        Matcher::Dtw => Scorer::Dtw {
            references: &training,
            config: &cfg.dtw,
        },
    };

    let results = score_trials(&features, &scorer, &trials)?;
    let mut scores = ScoreSet::default();
    let mut distance_evals = 0u64;
    for (t, (s, evals)) in trials.iter().zip(results) {
        match t.label {
            TrialLabel::Genuine => scores.push_genuine(t.model_user, s),
            TrialLabel::Impostor(k) => scores.push_impostor(t.model_user, s, k),
        }
        distance_evals += evals as u64;
    }

    let decided = identify_probes(&features, &scorer, &candidates, &probes)?;
    let identification = Identification {
        correct: probes
            .iter()
            .zip(&decided)
            .filter(|(p, d)| p.owner == **d)
            .count(),
        total: probes.len(),
    };

    let random = eer_pair(&scores, ForgeryKind::Random)?;
    let skilled = eer_pair(&scores, ForgeryKind::Skilled)?;
    Ok(ExperimentReport {
        counts: ProtocolCounts::of(&trials),
        table: EerTable {
            random: random.as_ref().map(|r| r.0),
            skilled: skilled.as_ref().map(|r| r.0),
        },
        det_random: random.map(|r| r.1),
        det_skilled: skilled.map(|r| r.1),
        scores,
        identification,
        distance_evals,
        fusion,
    })
}

impl ExperimentReport {
    pub fn summary(&self) -> ExperimentSummary {
        ExperimentSummary {
            trials: self.counts,
            eer: self.table,
            identification: self.identification,
            identification_rate: self.identification.rate(),
            distance_evals: self.distance_evals,
        }
    }

    /// Result table with one row for `cfg`: EER in percent for random and skilled
    /// forgeries under individual and general thresholds.
    pub fn table_text(&self, cfg: &ExperimentConfig) -> String {
        let (conf, size) = match cfg.matcher {
            Matcher::Dtw => ("DTW".to_string(), "-".to_string()),
            Matcher::Vq if cfg.model.sections == 1 => {
                ("1 Section".to_string(), cfg.model.codebook_size.to_string())
            }
            Matcher::Vq => (
                format!("{} S. ({})", cfg.model.sections, cfg.fusion.strategy),
                cfg.model.codebook_size.to_string(),
            ),
        };
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.2} %", 100.0 * v));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14}{:<9}{:<26}{:<26}",
            "VQ Conf.", "CB Size", "Random", "Skilled"
        );
        let _ = writeln!(
            out,
            "{:<14}{:<9}{:<13}{:<13}{:<13}{:<13}",
            "", "", "Ind. Thres.", "Gen. Thres.", "Ind. Thres.", "Gen. Thres."
        );
        let _ = writeln!(
            out,
            "{:<14}{:<9}{:<13}{:<13}{:<13}{:<13}",
            conf,
            size,
            pct(self.table.random.map(|p| p.individual)),
            pct(self.table.random.map(|p| p.general)),
            pct(self.table.skilled.map(|p| p.individual)),
            pct(self.table.skilled.map(|p| p.general)),
        );
        out.lines()
            .map(str::trim_end)
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }
}

/// Distance evaluations and stored vectors counted while actually matching one test
/// signature of `test_len` samples against `templates` references of `ref_len`
/// samples, and against a codebook model trained on those references.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MeasuredCosts {
    pub dtw_distance_evals: usize,
    pub vq_distance_evals: usize,
    pub dtw_stored_vectors: usize,
    pub vq_stored_vectors: usize,
}

pub fn measure_costs(
    templates: usize,
    test_len: usize,
    ref_len: usize,
    codebook_size: usize,
    sections: usize,
    seed: u64,
) -> Result<MeasuredCosts> {
    if [templates, test_len, ref_len, codebook_size, sections].contains(&0) {
        return Err(Error::input("all benchmark dimensions must be positive"));
    }
    // without jitter every genuine signature has exactly the prototype length
    let fixed = |len: usize, count: usize, seed: u64| SyntheticSpec {
        seed,
        n_users: 1,
        genuine_per_user: count,
        skilled_per_user: 0,
        min_len: len.max(8),
        max_len: len.max(8),
        genuine_jitter: 0.0,
        ..SyntheticSpec::default()
    };
    let fs = FeatureSetId::default();
    let refs_corpus = generate_synthetic_corpus(&fixed(ref_len, templates, seed))?;
    let test_corpus = generate_synthetic_corpus(&fixed(test_len, 1, seed.wrapping_add(1)))?;
    let trim = |m: FeatureMatrix, len: usize| -> Result<FeatureMatrix> {
        FeatureMatrix::new(m.vectors().slice(0..len.min(m.len())), m.feature_set())
    };
    let refs = refs_corpus.corpus.users[0]
        .genuine
        .iter()
        .map(|s| trim(preprocess(s, fs)?, ref_len))
        .collect::<Result<Vec<_>>>()?;
    let test = trim(
        preprocess(&test_corpus.corpus.users[0].genuine[0], fs)?,
        test_len,
    )?;

    let dtw = multi_template_outcome(&test, &refs, &DtwConfig::default())?;
    let cfg = ModelConfig {
        sections,
        codebook_size,
        feature_set: fs,
        ..ModelConfig::default()
    };
    let model = train_user_model(UserId(0), &refs, &cfg)?;
    let vq = section_distortions(&test, &model)?;
    Ok(MeasuredCosts {
        dtw_distance_evals: dtw.distance_evals,
        vq_distance_evals: vq.distance_evals,
        dtw_stored_vectors: refs.iter().map(|r| r.len()).sum(),
        vq_stored_vectors: model.stored_vectors(),
    })
}
