//! Enumeration of verification and identification trials.

use serde::{Deserialize, Serialize};

use super::manifest::{CorpusManifest, UserLayout};
use crate::error::{Error, Result};
use crate::eval::ForgeryKind;
use crate::signal::UserId;

/// Which signatures train the models and which are used as tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentProtocol {
    /// Genuine-signature indices used for enrollment.
    pub train: Vec<usize>,
    /// Genuine-signature indices used as genuine verification trials.
    pub genuine_test: Vec<usize>,
    /// Genuine-signature indices used for identification.
    pub identification_test: Vec<usize>,
    /// Number of skilled forgeries per user; `None` uses all available.
    pub skilled_count: Option<usize>,
    /// Genuine signatures taken from every other user as random forgeries.
    pub random_per_other_user: usize,
    /// The first `dev_users` users form the development set; the rest are tested.
    pub dev_users: usize,
}

impl Default for ExperimentProtocol {
    fn default() -> Self {
        Self {
            train: (0..5).collect(),
            genuine_test: (5..25).collect(),
            identification_test: (20..25).collect(),
            skilled_count: None,
            random_per_other_user: 5,
            dev_users: 0,
        }
    }
}

impl ExperimentProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.train.is_empty() {
            return Err(Error::config(
                "protocol needs at least one training signature",
            ));
        }
        if let Some(i) = self.genuine_test.iter().find(|i| self.train.contains(i)) {
            return Err(Error::config(format!(
                "genuine signature {i} is used for both training and testing"
            )));
        }
        if let Some(i) = self
            .identification_test
            .iter()
            .find(|i| self.train.contains(i))
        {
            return Err(Error::config(format!(
                "genuine signature {i} is used for both training and identification"
            )));
        }
        Ok(())
    }

    /// Splits users into (development, test) partitions.
    pub fn partition<'a, T>(&self, users: &'a [T]) -> Result<(&'a [T], &'a [T])> {
        if self.dev_users >= users.len() && !users.is_empty() {
            return Err(Error::config(format!(
                "{} development users leave no test users out of {}",
                self.dev_users,
                users.len()
            )));
        }
        Ok(users.split_at(self.dev_users.min(users.len())))
    }
}

/// Identifies one stored signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignatureRef {
    pub owner: UserId,
    pub skilled: bool,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialLabel {
    Genuine,
    Impostor(ForgeryKind),
}

/// One verification attempt: `test` presented as `model_user`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Trial {
    pub model_user: UserId,
    pub test: SignatureRef,
    pub label: TrialLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ProtocolCounts {
    pub genuine: usize,
    pub skilled: usize,
    pub random: usize,
}

impl ProtocolCounts {
    pub fn of(trials: &[Trial]) -> Self {
        let mut c = ProtocolCounts::default();
        for t in trials {
            match t.label {
                TrialLabel::Genuine => c.genuine += 1,
                TrialLabel::Impostor(ForgeryKind::Skilled) => c.skilled += 1,
                TrialLabel::Impostor(ForgeryKind::Random) => c.random += 1,
            }
        }
        c
    }
}

fn check_counts(users: &[UserLayout], protocol: &ExperimentProtocol) -> Result<()> {
    protocol.validate()?;
    let needed_genuine = protocol
        .train
        .iter()
        .chain(&protocol.genuine_test)
        .copied()
        .max()
        .map_or(0, |m| m + 1)
        .max(protocol.random_per_other_user);
    for u in users {
        if u.genuine < needed_genuine {
            return Err(Error::input(format!(
                "user {} has {} genuine signatures, protocol needs {needed_genuine}",
                u.user_id, u.genuine
            )));
        }
        if let Some(k) = protocol.skilled_count {
            if u.skilled < k {
                return Err(Error::input(format!(
                    "user {} has {} skilled forgeries, protocol needs {k}",
                    u.user_id, u.skilled
                )));
            }
        }
    }
    Ok(())
}

/// Verification trials among `users`: genuine tests, skilled forgeries of each user,
/// and the first `random_per_other_user` genuine signatures of every other user.
///
/// Trials are ordered by model user, then genuine, skilled, random.
pub fn build_trials(users: &[UserLayout], protocol: &ExperimentProtocol) -> Result<Vec<Trial>> {
    check_counts(users, protocol)?;
    let mut trials = Vec::new();
    for u in users {
        for &index in &protocol.genuine_test {
            trials.push(Trial {
                model_user: u.user_id,
                test: SignatureRef {
                    owner: u.user_id,
                    skilled: false,
                    index,
                },
                label: TrialLabel::Genuine,
            });
        }
        let skilled = protocol.skilled_count.unwrap_or(u.skilled);
        for index in 0..skilled {
            trials.push(Trial {
                model_user: u.user_id,
                test: SignatureRef {
                    owner: u.user_id,
                    skilled: true,
                    index,
                },
                label: TrialLabel::Impostor(ForgeryKind::Skilled),
            });
        }
        for other in users.iter().filter(|o| o.user_id != u.user_id) {
            for index in 0..protocol.random_per_other_user {
                trials.push(Trial {
                    model_user: u.user_id,
                    test: SignatureRef {
                        owner: other.user_id,
                        skilled: false,
                        index,
                    },
                    label: TrialLabel::Impostor(ForgeryKind::Random),
                });
            }
        }
    }
    Ok(trials)
}

/// Verification trials for the test partition of `manifest`.
pub fn build_protocol(
    manifest: &CorpusManifest,
    protocol: &ExperimentProtocol,
) -> Result<Vec<Trial>> {
    let layout = manifest.layout();
    let (_, test) = protocol.partition(&layout)?;
    build_trials(test, protocol)
}

/// Identification probes: the listed genuine signatures of every user.
pub fn identification_trials(
    users: &[UserLayout],
    protocol: &ExperimentProtocol,
) -> Result<Vec<SignatureRef>> {
    let mut probes = Vec::new();
    for u in users {
        for &index in &protocol.identification_test {
            if index >= u.genuine {
                return Err(Error::input(format!(
                    "user {} has no genuine signature {index} for identification",
                    u.user_id
                )));
            }
            probes.push(SignatureRef {
                owner: u.user_id,
                skilled: false,
                index,
            });
        }
    }
    Ok(probes)
}
