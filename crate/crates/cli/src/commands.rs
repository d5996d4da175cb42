use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use msvq_core::corpus::{
    generate_synthetic_corpus, import_svc, load_model, parse_signature_file, save_model, Corpus,
    CorpusManifest,
};
use msvq_core::eval::{benchmark_counts, BenchmarkCounts};
use msvq_core::experiment::{
    enroll_corpus, measure_costs, run_experiment, ExperimentSummary, MeasuredCosts,
};
use msvq_core::vq::section_distortions;
use msvq_core::{model_score, preprocess, FusionSpec, RawSignature, SectionedModel};

use crate::config::{RunConfig, EFFECTIVE_CONFIG_FILE};

pub const RESULTS_FILE: &str = "results.toml";
pub const TABLE_FILE: &str = "table.txt";
pub const SCORES_FILE: &str = "scores.tsv";
pub const DET_RANDOM_FILE: &str = "det_random.tsv";
pub const DET_SKILLED_FILE: &str = "det_skilled.tsv";
pub const BENCH_FILE: &str = "bench.toml";
const MODEL_EXT: &str = "msvq";

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write_effective_config(cfg: &RunConfig, dir: &Path) -> Result<()> {
    write(&dir.join(EFFECTIVE_CONFIG_FILE), &cfg.to_toml()?)
}

/// The effective configuration as `#`-prefixed lines for text outputs.
fn config_header(cfg: &RunConfig) -> Result<String> {
    let mut out = String::from("# effective configuration\n");
    for line in cfg.to_toml()?.lines() {
        let _ = writeln!(out, "{}", format!("# {line}").trim_end());
    }
    Ok(out)
}

fn load_corpus(cfg: &RunConfig) -> Result<Corpus> {
    match &cfg.corpus {
        Some(dir) => {
            let manifest = CorpusManifest::load(dir)?;
            manifest.validate()?;
            Ok(manifest.read_corpus(dir)?)
        }
        None => Ok(generate_synthetic_corpus(&cfg.synthetic)?.corpus),
    }
}

fn read_signature(path: &Path) -> Result<RawSignature> {
    let svc = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("svc"));
    Ok(if svc {
        import_svc(path)?
    } else {
        parse_signature_file(path)?
    })
}

pub fn synth(cfg: &RunConfig, out: &Path) -> Result<()> {
    let generated = generate_synthetic_corpus(&cfg.synthetic)?;
    let corpus = &generated.corpus;
    corpus.write(out)?;
    write_effective_config(cfg, out)?;
    let genuine: usize = corpus.users.iter().map(|u| u.genuine.len()).sum();
    let skilled: usize = corpus.users.iter().map(|u| u.skilled.len()).sum();
    println!(
        "wrote {} users, {genuine} genuine signatures and {skilled} skilled forgeries to {}",
        corpus.users.len(),
        out.display()
    );
    Ok(())
}

fn model_file_name(model: &SectionedModel) -> String {
    format!("u{:04}.{MODEL_EXT}", model.user_id.0)
}

pub fn enroll(cfg: &RunConfig, out: &Path, workers: usize) -> Result<()> {
    let corpus = load_corpus(cfg)?;
    let models = enroll_corpus(&corpus, &cfg.experiment(), workers)?;
    create_dir(out)?;
    for m in &models {
        save_model(m, out.join(model_file_name(m)))?;
    }
    write_effective_config(cfg, out)?;
    let stored: usize = models.iter().map(|m| m.stored_vectors()).sum();
    println!(
        "enrolled {} users ({} sections x {} centroids, {stored} stored vectors) into {}",
        models.len(),
        cfg.model.sections,
        cfg.model.codebook_size,
        out.display()
    );
    Ok(())
}

fn fusion_for(cfg: &RunConfig, model: &SectionedModel) -> FusionSpec {
    // an enrolled weighted model carries its own weights
    match &model.user_weights {
        Some(w) if cfg.fusion.strategy == w.strategy => w.clone(),
        _ => cfg.fusion.clone(),
    }
}

pub fn verify(
    cfg: &RunConfig,
    model_path: &Path,
    signature: &Path,
    threshold: Option<f64>,
) -> Result<()> {
    let model = load_model(model_path)?;
    let sig = read_signature(signature)?;
    let test = preprocess(&sig, model.config.feature_set)?;
    let fusion = fusion_for(cfg, &model);
    let (score, sections) = model_score(&test, &model, &fusion)?;
    println!("user\t{}", model.user_id);
    println!("fusion\t{}", fusion.strategy);
    println!("score\t{score}");
    for (s, d) in sections.iter().enumerate() {
        println!("section{}\t{d}", s + 1);
    }
    println!(
        "distance_evals\t{}",
        section_distortions(&test, &model)?.distance_evals
    );
    if let Some(t) = threshold {
        println!("decision\t{}", if score <= t { "accept" } else { "reject" });
    }
    Ok(())
}

fn load_models(dir: &Path) -> Result<Vec<SectionedModel>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .with_context(|| format!("cannot list {}", dir.display()))?;
    paths.retain(|p| p.extension().is_some_and(|e| e == MODEL_EXT));
    paths.sort();
    if paths.is_empty() {
        bail!("no .{MODEL_EXT} model files in {}", dir.display());
    }
    paths.iter().map(|p| Ok(load_model(p)?)).collect()
}

pub fn identify(cfg: &RunConfig, dir: &Path, signature: &Path, top: usize) -> Result<()> {
    let models = load_models(dir)?;
    let sig = read_signature(signature)?;
    let mut ranked = models
        .iter()
        .map(|m| {
            let test = preprocess(&sig, m.config.feature_set)?;
            let (score, _) = model_score(&test, m, &fusion_for(cfg, m))?;
            Ok((score, m.user_id))
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    println!("rank\tuser\tscore");
    for (k, (score, user)) in ranked.iter().take(top.max(1)).enumerate() {
        println!("{}\t{user}\t{score}", k + 1);
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    config: &'a RunConfig,
    /// Fusion applied, with shared weights when they were estimated.
    fusion: &'a FusionSpec,
    summary: ExperimentSummary,
}

pub fn eval(cfg: &RunConfig, out: &Path, workers: usize) -> Result<()> {
    let corpus = load_corpus(cfg)?;
    let exp = cfg.experiment();
    let report = run_experiment(&corpus, &exp, workers)?;
    create_dir(out)?;
    let header = config_header(cfg)?;

    let mut table = report.table_text(&exp);
    let id = report.identification;
    let _ = writeln!(
        table,
        "\nIdentification rate: {:.2} % ({}/{})",
        100.0 * id.rate(),
        id.correct,
        id.total
    );
    write(&out.join(TABLE_FILE), &format!("{header}{table}"))?;
    write(
        &out.join(SCORES_FILE),
        &format!("{header}{}", report.scores.to_tsv()),
    )?;
    for (name, det) in [
        (DET_RANDOM_FILE, &report.det_random),
        (DET_SKILLED_FILE, &report.det_skilled),
    ] {
        if let Some(det) = det {
            write(&out.join(name), &format!("{header}{}", det.to_tsv()))?;
        }
    }
    let results = EvalOutput {
        config: cfg,
        fusion: &report.fusion,
        summary: report.summary(),
    };
    write(
        &out.join(RESULTS_FILE),
        &toml::to_string(&results).context("cannot serialize results")?,
    )?;
    write_effective_config(cfg, out)?;

    let c = report.counts;
    println!(
        "{} genuine, {} skilled and {} random-forgery trials",
        c.genuine, c.skilled, c.random
    );
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct BenchOutput<'a> {
    config: &'a RunConfig,
    analytic: BenchmarkCounts,
    measured: MeasuredCosts,
}

pub fn bench(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let b = &cfg.bench;
    let analytic = benchmark_counts(
        b.templates,
        b.test_len,
        b.ref_len,
        b.codebook_size,
        b.sections,
    )?;
    let measured = measure_costs(
        b.templates,
        b.test_len,
        b.ref_len,
        b.codebook_size,
        b.sections,
        cfg.synthetic.seed,
    )?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "Cost model (K={}, I={}, J={}, L={}, S={})",
        b.templates, b.test_len, b.ref_len, b.codebook_size, b.sections
    );
    let _ = writeln!(
        text,
        "  DTW distance evaluations  K*I*J/3   {:.1}",
        analytic.dtw_distance_evals
    );
    let _ = writeln!(
        text,
        "  VQ distance evaluations   I*L       {:.0}",
        analytic.vq_distance_evals
    );
    let _ = writeln!(
        text,
        "  speedup                   K*J/(3L)  {:.2}",
        analytic.speedup_ratio
    );
    let _ = writeln!(text, "Storage per user (vectors)");
    let _ = writeln!(
        text,
        "  DTW references            K*J       {}",
        analytic.storage_dtw
    );
    let _ = writeln!(
        text,
        "  single codebook           L         {}",
        analytic.storage_vq
    );
    let _ = writeln!(
        text,
        "  sectioned codebooks       S*L       {}",
        analytic.storage_msvq
    );
    let _ = writeln!(
        text,
        "  data reduction            K*J/L     {:.2}",
        analytic.data_reduction
    );
    let _ = writeln!(text, "Measured on synthetic signatures");
    let _ = writeln!(
        text,
        "  DTW distance evaluations  {} ({:.3} of model)",
        measured.dtw_distance_evals,
        measured.dtw_distance_evals as f64 / analytic.dtw_distance_evals
    );
    let _ = writeln!(
        text,
        "  VQ distance evaluations   {} ({:.3} of model)",
        measured.vq_distance_evals,
        measured.vq_distance_evals as f64 / analytic.vq_distance_evals
    );
    let _ = writeln!(
        text,
        "  measured speedup          {:.2}",
        measured.dtw_distance_evals as f64 / measured.vq_distance_evals as f64
    );
    let _ = writeln!(
        text,
        "  stored vectors            DTW {} / VQ {}",
        measured.dtw_stored_vectors, measured.vq_stored_vectors
    );
    print!("{text}");
    if let Some(dir) = out {
        create_dir(dir)?;
        let report = BenchOutput {
            config: cfg,
            analytic,
            measured,
        };
        write(
            &dir.join(BENCH_FILE),
            &toml::to_string(&report).context("cannot serialize benchmark report")?,
        )?;
        write_effective_config(cfg, dir)?;
    }
    Ok(())
}
