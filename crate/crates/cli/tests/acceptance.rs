//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Every check compares the library against an independent oracle written here, a
//! closed-form value, or a measurement on the synthetic corpus.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use msvq_core::corpus::{
    build_protocol, generate_synthetic_corpus, model_to_string, prototype_distance, CorpusManifest,
    ExperimentProtocol, ManifestUser, SyntheticSpec,
};
use msvq_core::eval::{benchmark_counts, required_test_size, SignificanceQuery};
use msvq_core::experiment::{measure_costs, run_experiment, ExperimentConfig, ExperimentReport};
use msvq_core::fusion::{stats_from_distances, WeightInputs};
use msvq_core::{
    combine, compute_weights, dtw_align, model_score, nner_distortion, preprocess, train_codebook,
    train_user_model, Codebook, DtwConfig, FeatureSetId, FusionSpec, FusionStrategy, ModelConfig,
    UserId, VectorSet,
};

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn random_set(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> VectorSet {
    let data = (0..rows * dim)
        .map(|_| rng.random_range(-5.0..5.0))
        .collect();
    VectorSet::from_flat(dim, data).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Nearest-neighbour distortion by exhaustive scan.
fn nner_oracle(vectors: &VectorSet, centroids: &VectorSet) -> f64 {
    let mut total = 0.0;
    for v in vectors.rows() {
        let mut best = f64::INFINITY;
        for c in centroids.rows() {
            best = best.min(dist(v, c));
        }
        total += best;
    }
    total
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let dim = rng.random_range(1..=3);
        let rows = rng.random_range(1..=8);
        let size = rng.random_range(1..=4);
        let v = random_set(&mut rng, rows, dim);
        let c = random_set(&mut rng, size, dim);
        let (got, n) = nner_distortion(&v, &Codebook::new(c.clone()).unwrap()).unwrap();
        let want = nner_oracle(&v, &c);
        check!(
            n == rows,
            "case {case}: counted {n} vectors, expected {rows}"
        );
        check!(got == want, "case {case}: {got} != brute force {want}");
    }
    Ok("1000 random instances equal brute force exactly".into())
}

/// Minimum path cost over every admissible warping path, listed one by one.
fn dtw_oracle(a: &VectorSet, b: &VectorSet) -> f64 {
    let (rows, cols) = (a.len(), b.len());
    let eps = cols;
    fn extend(
        path: &mut Vec<(usize, usize)>,
        rows: usize,
        cols: usize,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let (i, j) = *path.last().unwrap();
        out.push(path.clone());
        if i + 1 == rows {
            return;
        }
        for step in 0..=2 {
            if j + step < cols {
                path.push((i + 1, j + step));
                extend(path, rows, cols, out);
                path.pop();
            }
        }
    }
    let mut paths = Vec::new();
    let starts = (0..cols.min(eps))
        .map(|j| (0, j))
        .chain((1..rows.min(eps)).map(|i| (i, 0)));
    for s in starts {
        extend(&mut vec![s], rows, cols, &mut paths);
    }
    let ends = |&(i, j): &(usize, usize)| {
        (i == rows - 1 && j + eps + 1 >= cols) || (j == cols - 1 && i + eps + 1 >= rows)
    };
    paths
        .iter()
        .filter(|p| ends(p.last().unwrap()))
        .map(|p| {
            p.iter()
                .fold(0.0, |acc, &(i, j)| acc + dist(a.row(i), b.row(j)))
        })
        .fold(f64::INFINITY, f64::min)
        / rows as f64
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..500 {
        let dim = rng.random_range(1..=2);
        let (rows, cols) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let a = random_set(&mut rng, rows, dim);
        let b = random_set(&mut rng, cols, dim);
        let got = dtw_align(&a, &b, &DtwConfig::unconstrained(b.len()))
            .unwrap()
            .cost;
        let want = dtw_oracle(&a, &b);
        check!(got == want, "case {case}: {got} != enumeration {want}");
    }
    Ok("500 random instances equal path enumeration exactly".into())
}

fn squared_distortion(vectors: &VectorSet, centroids: &VectorSet) -> f64 {
    vectors
        .rows()
        .map(|v| {
            centroids
                .rows()
                .map(|c| dist(v, c).powi(2))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Means of `size` consecutive equal-length segments.
fn segment_means(vectors: &VectorSet, size: usize) -> VectorSet {
    let n = vectors.len();
    let mut out = VectorSet::new(vectors.dim());
    for s in 0..size {
        let (lo, hi) = (s * n / size, (s + 1) * n / size);
        let mut mean = vec![0.0; vectors.dim()];
        for i in lo..hi {
            for (m, x) in mean.iter_mut().zip(vectors.row(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= (hi - lo) as f64);
        out.push(&mean).unwrap();
    }
    out
}

fn criterion_3() -> Outcome {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut iterations = 0;
    for run in 0..200 {
        let dim = rng.random_range(1..=6);
        let rows = rng.random_range(4..=300);
        let size = rng.random_range(1..=rows.min(32));
        let v = random_set(&mut rng, rows, dim);
        let trained = train_codebook(&v, size, 50, 0.0).unwrap();
        let h = &trained.distortion_history;
        iterations += h.len() - 1;
        for w in h.windows(2) {
            check!(
                w[1] <= w[0] + TOL * w[0].max(1.0),
                "run {run}: distortion rose {} -> {}",
                w[0],
                w[1]
            );
        }
        let initial = squared_distortion(&v, &segment_means(&v, size));
        let last = squared_distortion(&v, trained.codebook.centroids());
        check!(
            (h[0] - initial).abs() <= TOL * initial.max(1.0),
            "run {run}: recorded initial distortion {} vs recomputed {initial}",
            h[0]
        );
        check!(
            last <= initial + TOL * initial.max(1.0),
            "run {run}: final {last} > initial {initial}"
        );
    }
    Ok(format!(
        "200 runs, {iterations} Lloyd updates, never increasing"
    ))
}

fn criterion_4() -> Outcome {
    let (k, i, j, l) = (5, 454, 454, 16);
    let b = benchmark_counts(k, i, j, l, 1).unwrap();
    check!(
        (b.speedup_ratio - 47.3).abs() <= 0.1,
        "speedup {}",
        b.speedup_ratio
    );
    let m = measure_costs(k, i, j, l, 1, 20_110_405).unwrap();
    let model_dtw = (k * i * j) as f64 / 3.0;
    let ratio = m.dtw_distance_evals as f64 / model_dtw;
    check!(
        (ratio - 1.0).abs() <= 0.2,
        "DTW evaluations {} are {ratio:.3} of K*I*J/3",
        m.dtw_distance_evals
    );
    check!(
        m.vq_distance_evals == i * l,
        "VQ evaluations {} != I*L",
        m.vq_distance_evals
    );

    let out = Command::new(env!("CARGO_BIN_EXE_msvq"))
        .args(["bench", "--K", "5", "--J", "454", "--L", "16"])
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    check!(
        out.status.success(),
        "bench failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    check!(
        text.contains("47.29"),
        "bench report lacks the speedup:\n{text}"
    );
    Ok(format!(
        "speedup {:.2}, DTW measured/analytic {ratio:.3}, VQ {} = I*L",
        b.speedup_ratio, m.vq_distance_evals
    ))
}

fn criterion_5() -> Outcome {
    let corpus = generate_synthetic_corpus(&SyntheticSpec {
        n_users: 1,
        genuine_per_user: 5,
        skilled_per_user: 0,
        ..SyntheticSpec::default()
    })
    .unwrap()
    .corpus;
    let train: Vec<_> = corpus.users[0]
        .genuine
        .iter()
        .map(|s| preprocess(s, FeatureSetId::FS6).unwrap())
        .collect();
    for (s, l) in [(1, 16), (2, 32), (3, 32), (1, 128)] {
        let cfg = ModelConfig {
            sections: s,
            codebook_size: l,
            ..ModelConfig::default()
        };
        let model = train_user_model(UserId(0), &train, &cfg).unwrap();
        let text = model_to_string(&model);
        let start = text
            .lines()
            .position(|x| x == "centroids")
            .ok_or("no centroid block")?;
        let end = text
            .lines()
            .position(|x| x == "end")
            .ok_or("no end marker")?;
        let rows = end - start - 1;
        check!(rows == s * l, "S={s} L={l}: {rows} centroid rows");
        check!(
            model.stored_vectors() == s * l,
            "S={s} L={l}: {} stored",
            model.stored_vectors()
        );
    }
    let m = measure_costs(5, 454, 454, 128, 1, 7).unwrap();
    check!(
        m.dtw_stored_vectors == 5 * 454,
        "DTW stores {}",
        m.dtw_stored_vectors
    );
    let b = benchmark_counts(5, 454, 454, 128, 1).unwrap();
    check!(
        b.storage_dtw == 5 * 454,
        "analytic DTW storage {}",
        b.storage_dtw
    );
    check!(
        (b.data_reduction - 17.7).abs() <= 0.05,
        "data reduction {}",
        b.data_reduction
    );
    Ok(format!(
        "S*L rows in every model file, K*J = 2270 reference vectors, reduction {:.2}",
        b.data_reduction
    ))
}

fn criterion_6() -> Outcome {
    let per_unit = -(0.05f64).ln() / (0.2 * 0.2);
    check!(
        (per_unit - 74.89).abs() < 0.01,
        "-ln(0.05)/0.04 = {per_unit}"
    );
    for p in [0.0089, 0.01, 0.02, 0.05, 0.1, 0.0023] {
        let (exact, simplified) = required_test_size(SignificanceQuery {
            alpha: 0.05,
            beta: 0.2,
            p_hat: p,
        })
        .unwrap();
        check!(
            exact == (per_unit / p).ceil() as u64,
            "p={p}: exact {exact}"
        );
        check!(
            simplified == (100.0 / p).ceil() as u64,
            "p={p}: simplified {simplified}"
        );
        check!(exact <= simplified, "p={p}: {exact} > {simplified}");
    }
    let (_, n) = required_test_size(SignificanceQuery {
        alpha: 0.05,
        beta: 0.2,
        p_hat: 0.0089,
    })
    .unwrap();
    let rel = (n as f64 - 11_250.0).abs() / 11_250.0;
    check!(rel <= 0.01, "N = {n} is {rel:.4} away from 11250");
    Ok(format!(
        "N = {n} for p = 0.89 %, {:.2} % from 11250 trials",
        100.0 * rel
    ))
}

fn manifest(users: usize, genuine: usize, skilled: usize) -> CorpusManifest {
    CorpusManifest {
        source: "counting".into(),
        sample_rate_hz: 100.0,
        users: (0..users)
            .map(|u| ManifestUser {
                user_id: UserId(u as u32),
                genuine: (0..genuine).map(|i| format!("g{i}.sig").into()).collect(),
                skilled: (0..skilled).map(|i| format!("s{i}.sig").into()).collect(),
            })
            .collect(),
    }
}

fn counts(trials: &[msvq_core::corpus::Trial]) -> (usize, usize, usize) {
    let c = msvq_core::corpus::ProtocolCounts::of(trials);
    (c.genuine, c.skilled, c.random)
}

fn criterion_7() -> Outcome {
    let big = build_protocol(&manifest(250, 25, 25), &ExperimentProtocol::default()).unwrap();
    check!(
        counts(&big) == (5000, 6250, 311_250),
        "P=250: {:?}",
        counts(&big)
    );
    let small_protocol = ExperimentProtocol {
        genuine_test: (5..20).collect(),
        skilled_count: Some(20),
        ..ExperimentProtocol::default()
    };
    let small = build_protocol(&manifest(40, 25, 25), &small_protocol).unwrap();
    check!(
        counts(&small) == (600, 800, 7800),
        "P=40: {:?}",
        counts(&small)
    );
    Ok("5000/6250/311250 and 600/800/7800".into())
}

fn synthetic_run(fs: FeatureSetId) -> ExperimentReport {
    let cfg = ExperimentConfig {
        model: ModelConfig {
            sections: 1,
            codebook_size: 64,
            feature_set: fs,
            ..ModelConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let corpus = generate_synthetic_corpus(&cfg.synthetic).unwrap().corpus;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    run_experiment(&corpus, &cfg, workers).unwrap()
}

fn criterion_8() -> Outcome {
    let spec = SyntheticSpec::default();
    check!(
        spec.genuine_jitter < spec.forgery_dynamic_distortion,
        "generator not calibrated"
    );
    let synthetic = generate_synthetic_corpus(&spec).unwrap();
    for (u, proto) in synthetic.corpus.users.iter().zip(&synthetic.prototypes) {
        let mean = |sigs: &[msvq_core::RawSignature]| {
            sigs.iter()
                .map(|s| prototype_distance(s, proto))
                .sum::<f64>()
                / sigs.len() as f64
        };
        let (g, f) = (mean(&u.genuine), mean(&u.skilled));
        check!(
            g < f,
            "user {}: genuine {g:.1} not closer to prototype than forgeries {f:.1}",
            u.user_id
        );
    }

    let r = synthetic_run(FeatureSetId::FS6);
    let random = r.table.random.ok_or("no random-forgery trials")?;
    let skilled = r.table.skilled.ok_or("no skilled-forgery trials")?;
    check!(
        r.identification.rate() == 1.0,
        "identification {:?}",
        r.identification
    );
    check!(
        random.individual == 0.0,
        "random individual EER {}",
        random.individual
    );
    check!(
        skilled.individual > random.individual && skilled.general > random.general,
        "skilled {skilled:?} not above random {random:?}"
    );
    check!(
        random.individual <= random.general && skilled.individual <= skilled.general,
        "individual above general: random {random:?}, skilled {skilled:?}"
    );
    Ok(format!(
        "identification {}/{}, random EER {:.2} %/{:.2} %, skilled EER {:.2} %/{:.2} % (ind./gen.)",
        r.identification.correct,
        r.identification.total,
        100.0 * random.individual,
        100.0 * random.general,
        100.0 * skilled.individual,
        100.0 * skilled.general
    ))
}

fn criterion_9() -> Outcome {
    let fs1 = synthetic_run(FeatureSetId::FS1)
        .table
        .skilled
        .ok_or("no skilled trials")?;
    let fs6 = synthetic_run(FeatureSetId::FS6)
        .table
        .skilled
        .ok_or("no skilled trials")?;
    check!(
        fs1.individual >= fs6.individual,
        "individual: FS1 {} < FS6 {}",
        fs1.individual,
        fs6.individual
    );
    check!(
        fs1.general >= fs6.general,
        "general: FS1 {} < FS6 {}",
        fs1.general,
        fs6.general
    );
    Ok(format!(
        "skilled EER FS1 {:.2} %/{:.2} % vs FS6 {:.2} %/{:.2} %",
        100.0 * fs1.individual,
        100.0 * fs1.general,
        100.0 * fs6.individual,
        100.0 * fs6.general
    ))
}

fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = k;
        }
    }
    best
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for case in 0..100 {
        let sections = rng.random_range(1..=5);
        let rows: Vec<Vec<f64>> = (0..rng.random_range(1..=8))
            .map(|_| (0..sections).map(|_| rng.random_range(0.0..3.0)).collect())
            .collect();
        let stats = stats_from_distances(&rows);
        let eers: Vec<f64> = (0..sections).map(|_| rng.random_range(0.0..0.5)).collect();
        let thresholds: Vec<f64> = (0..sections).map(|_| rng.random_range(0.0..2.0)).collect();
        for strategy in FusionStrategy::ALL.into_iter().filter(|s| s.is_weighted()) {
            let input = match strategy {
                FusionStrategy::Wsd | FusionStrategy::Wshm | FusionStrategy::Wslm => {
                    WeightInputs::Stats(&stats)
                }
                FusionStrategy::Wsut => WeightInputs::Thresholds(&thresholds),
                _ => WeightInputs::SectionEers(&eers),
            };
            let w = compute_weights(strategy, input, sections).unwrap();
            let total: f64 = w.iter().sum();
            check!(
                (total - 1.0).abs() <= 1e-9,
                "case {case}: {strategy} weights sum to {total}"
            );
        }
    }

    for case in 0..100 {
        let sections = rng.random_range(1..=4);
        let users = rng.random_range(2..=20);
        let scores: Vec<Vec<f64>> = (0..users)
            .map(|_| (0..sections).map(|_| rng.random_range(0.0..4.0)).collect())
            .collect();
        let sum = FusionSpec::unweighted(FusionStrategy::Sum);
        let uniform =
            FusionSpec::weighted(FusionStrategy::Wsre, vec![1.0 / sections as f64; sections])
                .unwrap();
        let a: Vec<f64> = scores.iter().map(|d| combine(d, &sum).unwrap()).collect();
        let b: Vec<f64> = scores
            .iter()
            .map(|d| combine(d, &uniform).unwrap())
            .collect();
        check!(
            argmin(&a) == argmin(&b),
            "case {case}: SUM picks {} but the uniform mean picks {}",
            argmin(&a),
            argmin(&b)
        );
    }

    let corpus = generate_synthetic_corpus(&SyntheticSpec {
        n_users: 3,
        genuine_per_user: 8,
        skilled_per_user: 2,
        ..SyntheticSpec::default()
    })
    .unwrap()
    .corpus;
    let cfg = ModelConfig {
        codebook_size: 32,
        ..ModelConfig::default()
    };
    for u in &corpus.users {
        let train: Vec<_> = u.genuine[..5]
            .iter()
            .map(|s| preprocess(s, FeatureSetId::FS6).unwrap())
            .collect();
        let model = train_user_model(u.user_id, &train, &cfg).unwrap();
        let mut pooled = VectorSet::new(6);
        for m in &train {
            pooled.extend_from(m.vectors(), 0..m.len()).unwrap();
        }
        let flat = train_codebook(&pooled, 32, cfg.lloyd_max_iters, cfg.lloyd_rel_tol).unwrap();
        for sig in u.genuine[5..].iter().chain(&u.skilled) {
            let test = preprocess(sig, FeatureSetId::FS6).unwrap();
            let (d, n) = nner_distortion(test.vectors(), &flat.codebook).unwrap();
            for strategy in [
                FusionStrategy::Sum,
                FusionStrategy::Min,
                FusionStrategy::Max,
            ] {
                let (s, _) = model_score(&test, &model, &FusionSpec::unweighted(strategy)).unwrap();
                check!(
                    s.to_bits() == (d / n as f64).to_bits(),
                    "user {}: {strategy} {s} vs {}",
                    u.user_id,
                    d / n as f64
                );
            }
        }
    }
    Ok(
        "weights normalized, SUM and uniform mean agree on 100 sets, S=1 equals single codebook"
            .into(),
    )
}

fn run_eval(dir: &Path, extra: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_msvq"))
        .args(["--codebook-size", "64"])
        .args(extra)
        .arg("eval")
        .arg("--out")
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "eval failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(())
}

fn same_tree(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = std::fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut other: Vec<_> = std::fs::read_dir(b)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    other.sort();
    if names != other {
        return Err(format!("file sets differ: {names:?} vs {other:?}"));
    }
    for n in &names {
        let x = std::fs::read(a.join(n)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(n)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{} differs", n.to_string_lossy()));
        }
    }
    Ok(names.len())
}

fn criterion_11() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (one, eight, again) = (
        tmp.path().join("w1"),
        tmp.path().join("w8"),
        tmp.path().join("cfg"),
    );
    run_eval(&one, &["--workers", "1"])?;
    run_eval(&eight, &["--workers", "8"])?;
    let files = same_tree(&one, &eight)?;
    let embedded = one.join("effective_config.toml");
    run_eval(
        &again,
        &["--config", embedded.to_str().unwrap(), "--workers", "3"],
    )?;
    same_tree(&one, &again)?;
    Ok(format!("{files} result files identical for 1 and 8 workers and for a rerun from the embedded config"))
}

struct Criterion {
    name: &'static str,
    run: fn() -> Outcome,
    limit: Option<Duration>,
}

fn main() {
    let criteria = [
        Criterion {
            name: "nearest-neighbour distortion oracle",
            run: criterion_1,
            limit: Some(Duration::from_secs(5)),
        },
        Criterion {
            name: "DTW path enumeration oracle",
            run: criterion_2,
            limit: Some(Duration::from_secs(10)),
        },
        Criterion {
            name: "Lloyd monotonicity",
            run: criterion_3,
            limit: None,
        },
        Criterion {
            name: "DTW/VQ speedup",
            run: criterion_4,
            limit: None,
        },
        Criterion {
            name: "model storage",
            run: criterion_5,
            limit: None,
        },
        Criterion {
            name: "test-set sizing",
            run: criterion_6,
            limit: None,
        },
        Criterion {
            name: "protocol trial counts",
            run: criterion_7,
            limit: None,
        },
        Criterion {
            name: "synthetic end-to-end",
            run: criterion_8,
            limit: Some(Duration::from_secs(60)),
        },
        Criterion {
            name: "feature-set ordering",
            run: criterion_9,
            limit: None,
        },
        Criterion {
            name: "fusion algebra",
            run: criterion_10,
            limit: None,
        },
        Criterion {
            name: "determinism across workers",
            run: criterion_11,
            limit: None,
        },
    ];
    // failures are reported on the criterion line, not as panic dumps
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            }
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} criterion {:>2} {}: {detail} [{elapsed:.2?}]",
            k + 1,
            c.name
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
