//! `MSVQv1` model files: a small key/value header followed by the centroid rows of
//! every section. Only centroids are stored, never training vectors.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fusion::{FusionSpec, FusionStrategy, SectionStats};
use crate::signal::{FeatureSetId, UserId};
use crate::vectors::VectorSet;
use crate::vq::{Codebook, ModelConfig, SectionedModel};

pub const MODEL_MAGIC: &str = "MSVQv1";

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn model_to_string(model: &SectionedModel) -> String {
    let cfg = &model.config;
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC}");
    let _ = writeln!(out, "user_id {}", model.user_id);
    let _ = writeln!(out, "feature_set {}", cfg.feature_set);
    let _ = writeln!(out, "dim {}", model.dim());
    let _ = writeln!(out, "sections {}", model.section_count());
    let _ = writeln!(out, "codebook_size {}", cfg.codebook_size);
    let _ = writeln!(out, "lloyd_max_iters {}", cfg.lloyd_max_iters);
    let _ = writeln!(out, "lloyd_rel_tol {}", cfg.lloyd_rel_tol);
    let sizes: Vec<String> = model
        .sections
        .iter()
        .map(|c| c.size().to_string())
        .collect();
    let _ = writeln!(out, "section_sizes {}", sizes.join(" "));
    match &model.user_weights {
        Some(FusionSpec {
            strategy,
            weights: Some(w),
        }) => {
            let _ = writeln!(out, "weights {strategy} {}", join(w));
        }
        _ => out.push_str("weights none\n"),
    }
    match &model.train_stats {
        Some(s) => {
            let _ = writeln!(
                out,
                "stats {} mu {} sigma {}",
                s.samples,
                join(&s.mu),
                join(&s.sigma)
            );
        }
        None => out.push_str("stats none\n"),
    }
    out.push_str("centroids\n");
    for cb in &model.sections {
        for row in cb.centroids().rows() {
            let _ = writeln!(out, "{}", join(row));
        }
    }
    out.push_str("end\n");
    out
}

struct Reader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    path: &'a Path,
    last_line: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        match self.lines.next() {
            Some((i, l)) => {
                self.last_line = i + 1;
                Ok((i + 1, l))
            }
            None => Err(self.err(self.last_line + 1, "truncated model file")),
        }
    }

    /// Reads `key v1 v2 ...` and returns the values.
    fn field(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.next()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(n, format!("expected `{key}`")));
        }
        Ok((n, parts.collect()))
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (n, v) = self.field(key)?;
        match v.as_slice() {
            [one] => one
                .parse()
                .map_err(|_| self.err(n, format!("bad value for `{key}`"))),
            _ => Err(self.err(n, format!("`{key}` takes one value"))),
        }
    }

    fn floats(&self, n: usize, parts: &[&str]) -> Result<Vec<f64>> {
        parts
            .iter()
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| self.err(n, format!("bad number {p:?}")))
            })
            .collect()
    }
}

pub fn model_from_str(text: &str, path: &Path) -> Result<SectionedModel> {
    let mut r = Reader {
        lines: text.lines().enumerate().peekable(),
        path,
        last_line: 0,
    };
    let (n, magic) = r.next()?;
    if magic.trim() != MODEL_MAGIC {
        return Err(r.err(
            n,
            format!(
                "unsupported model format {:?}, expected {MODEL_MAGIC}",
                magic.trim()
            ),
        ));
    }
    let user_id = UserId(r.scalar("user_id")?);
    let fs_name: String = r.scalar("feature_set")?;
    let feature_set: FeatureSetId = fs_name
        .parse()
        .map_err(|_| r.err(r.last_line, "unknown feature set"))?;
    let dim: usize = r.scalar("dim")?;
    let sections: usize = r.scalar("sections")?;
    let codebook_size: usize = r.scalar("codebook_size")?;
    let lloyd_max_iters: usize = r.scalar("lloyd_max_iters")?;
    let lloyd_rel_tol: f64 = r.scalar("lloyd_rel_tol")?;
    if dim != feature_set.dim() {
        return Err(r.err(
            r.last_line,
            format!("dim {dim} does not match {feature_set}"),
        ));
    }

    let (n, sizes) = r.field("section_sizes")?;
    let sizes = sizes
        .iter()
        .map(|s| s.parse::<usize>().map_err(|_| r.err(n, "bad section size")))
        .collect::<Result<Vec<_>>>()?;
    if sizes.len() != sections || sections == 0 || sizes.contains(&0) {
        return Err(r.err(n, "section sizes do not match the section count"));
    }

    let (n, w) = r.field("weights")?;
    let user_weights = match w.as_slice() {
        ["none"] => None,
        [name, rest @ ..] => {
            let strategy: FusionStrategy = name
                .parse()
                .map_err(|_| r.err(n, "unknown fusion strategy"))?;
            let weights = r.floats(n, rest)?;
            if weights.len() != sections {
                return Err(r.err(n, "weight count does not match the section count"));
            }
            Some(FusionSpec::weighted(strategy, weights).map_err(|e| r.err(n, e.to_string()))?)
        }
        [] => return Err(r.err(n, "`weights` needs a value")),
    };

    let (n, s) = r.field("stats")?;
    let train_stats = match s.as_slice() {
        ["none"] => None,
        [t, "mu", rest @ ..] if rest.len() == 2 * sections + 1 && rest[sections] == "sigma" => {
            let samples = t.parse().map_err(|_| r.err(n, "bad sample count"))?;
            Some(SectionStats {
                mu: r.floats(n, &rest[..sections])?,
                sigma: r.floats(n, &rest[sections + 1..])?,
                samples,
            })
        }
        _ => return Err(r.err(n, "malformed `stats` line")),
    };

    let (n, rest) = r.field("centroids")?;
    if !rest.is_empty() {
        return Err(r.err(n, "unexpected values after `centroids`"));
    }
    let mut codebooks = Vec::with_capacity(sections);
    for &size in &sizes {
        let mut set = VectorSet::with_capacity(dim, size);
        for _ in 0..size {
            let (n, line) = r.next()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != dim {
                return Err(r.err(
                    n,
                    format!("centroid row has {} values, expected {dim}", parts.len()),
                ));
            }
            set.push(&r.floats(n, &parts)?)?;
        }
        codebooks.push(Codebook::new(set).map_err(|e| r.err(r.last_line, e.to_string()))?);
    }
    let (n, end) = r.next()?;
    if end.trim() != "end" {
        return Err(r.err(n, "expected `end` after the centroid rows"));
    }

    Ok(SectionedModel {
        user_id,
        sections: codebooks,
        config: ModelConfig {
            sections,
            codebook_size,
            feature_set,
            lloyd_max_iters,
            lloyd_rel_tol,
        },
        train_stats,
        user_weights,
    })
}

pub fn save_model(model: &SectionedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SectionedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text, path)
}
