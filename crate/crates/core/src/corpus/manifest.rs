use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sigfile::{parse_signature_file, write_signature_file};
use crate::error::{Error, Result};
use crate::signal::{RawSignature, SignatureKind, UserId};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Files of one enrolled user, relative to the manifest directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestUser {
    pub user_id: UserId,
    pub genuine: Vec<PathBuf>,
    pub skilled: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub source: String,
    pub sample_rate_hz: f64,
    pub users: Vec<ManifestUser>,
}

/// Per-user signature counts, all that trial enumeration needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UserLayout {
    pub user_id: UserId,
    pub genuine: usize,
    pub skilled: usize,
}

impl CorpusManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for u in &self.users {
            if !seen.insert(u.user_id) {
                return Err(Error::input(format!("duplicate user id {}", u.user_id)));
            }
        }
        Ok(())
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

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: CorpusManifest = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.clone(),
            message: e.to_string(),
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let path = dir.as_ref().join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Reads every listed signature file.
    pub fn read_corpus(&self, dir: impl AsRef<Path>) -> Result<Corpus> {
        let dir = dir.as_ref();
        let users = self
            .users
            .iter()
            .map(|u| {
                let read = |files: &[PathBuf], kind: SignatureKind| {
                    files
                        .iter()
                        .enumerate()
                        .map(|(i, f)| {
                            let mut sig = parse_signature_file(dir.join(f))?;
                            sig.user_id = u.user_id;
                            sig.kind = kind;
                            sig.index = i as u32;
                            Ok(sig)
                        })
                        .collect::<Result<Vec<_>>>()
                };
                Ok(UserSignatures {
                    user_id: u.user_id,
                    genuine: read(&u.genuine, SignatureKind::Genuine)?,
                    skilled: read(&u.skilled, SignatureKind::SkilledForgery)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Corpus {
            source: self.source.clone(),
            sample_rate_hz: self.sample_rate_hz,
            users,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserSignatures {
    pub user_id: UserId,
    pub genuine: Vec<RawSignature>,
    /// Skilled forgeries of this user's signature.
    pub skilled: Vec<RawSignature>,
}

/// A fully loaded corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub source: String,
    pub sample_rate_hz: f64,
    pub users: Vec<UserSignatures>,
}

impl Corpus {
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

    pub fn user(&self, id: UserId) -> Option<&UserSignatures> {
        self.users.iter().find(|u| u.user_id == id)
    }

    /// Writes one SIGv1 file per signature plus the manifest into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<CorpusManifest> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut users = Vec::with_capacity(self.users.len());
        for u in &self.users {
            let rel = PathBuf::from(format!("u{:04}", u.user_id.0));
            let udir = dir.join(&rel);
            std::fs::create_dir_all(&udir).map_err(|e| Error::io(&udir, e))?;
            let write = |sigs: &[RawSignature], prefix: &str| {
                sigs.iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let name = rel.join(format!("{prefix}{:02}.sig", i + 1));
                        write_signature_file(s, dir.join(&name))?;
                        Ok(name)
                    })
                    .collect::<Result<Vec<_>>>()
            };
            let genuine = write(&u.genuine, "g")?;
            let skilled = write(&u.skilled, "s")?;
            users.push(ManifestUser {
                user_id: u.user_id,
                genuine,
                skilled,
            });
        }
        let manifest = CorpusManifest {
            source: self.source.clone(),
            sample_rate_hz: self.sample_rate_hz,
            users,
        };
        manifest.save(dir)?;
        Ok(manifest)
    }
}
