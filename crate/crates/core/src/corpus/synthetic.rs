//! Deterministic synthetic signature corpus.
//!
//! Every user gets a prototype: x(τ) and y(τ) are sums of a few sinusoids over a
//! normalized time τ in [0, 1], pressure follows a smooth envelope, and a monotone
//! time warp gives the user's own speed profile. Genuine repetitions redraw the
//! prototype with a small extra warp and amplitude jitter. Skilled forgeries keep the
//! spatial shape but replace the dynamics: a much stronger warp, a different
//! duration and an imitation of the pressure profile.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{Corpus, UserSignatures};
use crate::error::{Error, Result};
use crate::signal::{RawSignature, Sample, SignatureKind, UserId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub n_users: usize,
    pub genuine_per_user: usize,
    pub skilled_per_user: usize,
    /// Prototype duration range in samples, inclusive.
    pub min_len: usize,
    pub max_len: usize,
    /// Relative amplitude and timing variation between genuine repetitions.
    pub genuine_jitter: f64,
    /// Strength of the timing distortion in skilled forgeries.
    pub forgery_dynamic_distortion: f64,
    pub sample_rate_hz: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 20_110_405,
            n_users: 40,
            genuine_per_user: 25,
            skilled_per_user: 25,
            min_len: 300,
            max_len: 600,
            genuine_jitter: 0.03,
            forgery_dynamic_distortion: 0.25,
            sample_rate_hz: 100.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.min_len < 8 || self.min_len > self.max_len {
            return Err(Error::config(format!(
                "invalid duration range {}..={}",
                self.min_len, self.max_len
            )));
        }
        if !(self.genuine_jitter >= 0.0 && self.genuine_jitter < self.forgery_dynamic_distortion) {
            return Err(Error::config(
                "genuine_jitter must be non-negative and below forgery_dynamic_distortion",
            ));
        }
        if self.forgery_dynamic_distortion >= 0.9 {
            return Err(Error::config(
                "forgery_dynamic_distortion must stay below 0.9",
            ));
        }
        if self.sample_rate_hz.is_nan() || self.sample_rate_hz <= 0.0 {
            return Err(Error::config("sample rate must be positive"));
        }
        Ok(())
    }
}

/// `amplitude * sin(2π freq τ + phase)`
#[derive(Debug, Clone, Copy)]
struct Wave {
    amplitude: f64,
    freq: f64,
    phase: f64,
}

fn waves(rng: &mut ChaCha8Rng, amp: (f64, f64), freq: (f64, f64)) -> Vec<Wave> {
    let n = rng.random_range(3..=6);
    (0..n)
        .map(|_| Wave {
            amplitude: rng.random_range(amp.0..amp.1),
            freq: rng.random_range(freq.0..freq.1),
            phase: rng.random_range(0.0..2.0 * PI),
        })
        .collect()
}

fn sum_waves(w: &[Wave], tau: f64) -> f64 {
    w.iter()
        .map(|w| w.amplitude * (2.0 * PI * w.freq * tau + w.phase).sin())
        .sum()
}

/// Monotone map of [0, 1] onto itself: `s + Σ a_k sin(π m_k s) / (π m_k)`
/// with `Σ |a_k| < 1`.
#[derive(Debug, Clone)]
struct Warp {
    terms: Vec<(f64, f64)>,
}

impl Warp {
    fn identity() -> Self {
        Warp { terms: Vec::new() }
    }

    fn random(rng: &mut ChaCha8Rng, strength: f64) -> Self {
        let n = rng.random_range(2..=4);
        let raw: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(1..=6) as f64))
            .collect();
        let total: f64 = raw.iter().map(|(a, _)| a.abs()).sum();
        let terms = raw
            .into_iter()
            .map(|(a, m)| (a / total.max(1e-9) * strength, m))
            .collect();
        Warp { terms }
    }

    fn apply(&self, s: f64) -> f64 {
        s + self
            .terms
            .iter()
            .map(|(a, m)| a * (PI * m * s).sin() / (PI * m))
            .sum::<f64>()
    }
}

/// Handwriting dynamics: speed profile and pressure.
#[derive(Debug, Clone)]
struct Dynamics {
    timing: Warp,
    pressure_level: f64,
    pressure: Vec<Wave>,
}

impl Dynamics {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Dynamics {
            timing: Warp::random(rng, 0.5),
            pressure_level: rng.random_range(350.0..750.0),
            pressure: waves(rng, (0.05, 0.2), (0.5, 4.0)),
        }
    }

    /// A forger's imitation: the same kind of dynamics with every parameter
    /// disturbed in proportion to `strength`.
    fn imitated(&self, rng: &mut ChaCha8Rng, strength: f64) -> Self {
        let mut pressure: Vec<Wave> = self
            .pressure
            .iter()
            .map(|w| Wave {
                amplitude: w.amplitude * (1.0 + strength * rng.random_range(-1.0..1.0)),
                freq: w.freq,
                phase: w.phase + strength * PI * rng.random_range(-1.0..1.0),
            })
            .collect();
        pressure.push(Wave {
            amplitude: 0.2 * strength,
            freq: rng.random_range(0.5..4.0),
            phase: rng.random_range(0.0..2.0 * PI),
        });
        Dynamics {
            timing: self.timing.clone(),
            pressure_level: self.pressure_level * (1.0 + strength * rng.random_range(-1.0..1.0)),
            pressure,
        }
    }

    fn pressure_at(&self, s: f64) -> f64 {
        // pen lands and lifts smoothly
        let envelope = (PI * s).sin().powf(0.3);
        (self.pressure_level * envelope * (1.0 + sum_waves(&self.pressure, s))).clamp(0.0, 1024.0)
    }
}

#[derive(Debug, Clone)]
struct Prototype {
    len: usize,
    x: Vec<Wave>,
    x_drift: f64,
    y: Vec<Wave>,
    dynamics: Dynamics,
    azimuth: f64,
    altitude: f64,
}

impl Prototype {
    fn random(rng: &mut ChaCha8Rng, spec: &SyntheticSpec) -> Self {
        Prototype {
            len: rng.random_range(spec.min_len..=spec.max_len),
            x: waves(rng, (150.0, 700.0), (0.5, 6.0)),
            x_drift: rng.random_range(1500.0..5000.0),
            y: waves(rng, (150.0, 650.0), (0.5, 6.0)),
            dynamics: Dynamics::random(rng),
            azimuth: rng.random_range(900.0..2700.0),
            altitude: rng.random_range(420.0..780.0),
        }
    }

    fn shape(&self, tau: f64) -> (f64, f64) {
        (
            self.x_drift * tau + sum_waves(&self.x, tau),
            sum_waves(&self.y, tau),
        )
    }
}

struct Rendering<'a> {
    shape: &'a Prototype,
    dynamics: &'a Dynamics,
    extra_timing: Warp,
    len: usize,
    scale: f64,
    position_noise: f64,
    pressure_scale: f64,
    angle_offset: (f64, f64),
}

impl Rendering<'_> {
    fn draw(&self, rng: &mut ChaCha8Rng, rate: f64) -> RawSignature {
        let mut az_drift = 0.0;
        let mut alt_drift = 0.0;
        let mut samples: Vec<Sample> = (0..self.len)
            .map(|k| {
                let s = k as f64 / (self.len - 1) as f64;
                let tau = self.dynamics.timing.apply(self.extra_timing.apply(s));
                let (x, y) = self.shape.shape(tau);
                az_drift += rng.random_range(-6.0..6.0);
                alt_drift += rng.random_range(-2.0..2.0);
                Sample {
                    t: k as f64,
                    x: self.scale * x + self.position_noise * rng.random_range(-1.0..1.0),
                    y: self.scale * y + self.position_noise * rng.random_range(-1.0..1.0),
                    p: (self.pressure_scale * self.dynamics.pressure_at(s)
                        + rng.random_range(-8.0..8.0))
                    .clamp(0.0, 1024.0),
                    azimuth: (self.shape.azimuth
                        + self.angle_offset.0
                        + az_drift
                        + rng.random_range(-25.0..25.0))
                    .clamp(0.0, 3600.0),
                    altitude: (self.shape.altitude
                        + self.angle_offset.1
                        + alt_drift
                        + rng.random_range(-10.0..10.0))
                    .clamp(300.0, 900.0),
                }
            })
            .collect();
        // place the bounding box at a random spot on the tablet
        let (min_x, max_x) = extent(samples.iter().map(|s| s.x));
        let (min_y, max_y) = extent(samples.iter().map(|s| s.y));
        let dx = place(rng, min_x, max_x, TABLET_X);
        let dy = place(rng, min_y, max_y, TABLET_Y);
        for s in &mut samples {
            s.x = (s.x + dx).clamp(0.0, TABLET_X);
            s.y = (s.y + dy).clamp(0.0, TABLET_Y);
        }
        RawSignature::new(samples, rate)
    }
}

const TABLET_X: f64 = 12700.0;
const TABLET_Y: f64 = 9700.0;

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Offset that moves `[lo, hi]` inside `[0, limit]` with random slack on both sides.
fn place(rng: &mut ChaCha8Rng, lo: f64, hi: f64, limit: f64) -> f64 {
    let slack = limit - (hi - lo);
    if slack <= 0.0 {
        return limit / 2.0 - (lo + hi) / 2.0;
    }
    rng.random_range(0.0..slack) - lo
}

/// A generated corpus together with the prototypes it was drawn from.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Noise-free rendering of each user's prototype, in user order.
    pub prototypes: Vec<RawSignature>,
}

/// Position noise amplitude per unit of jitter or distortion, in tablet units.
const NOISE: f64 = 100.0;

const STREAM_PROTOTYPE: u64 = 0;
const STREAM_GENUINE: u64 = 1;
const STREAM_FORGERY: u64 = 2;

fn stream(seed: u64, user: usize, purpose: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((user as u64) << 32) | (purpose << 24) | index as u64);
    rng
}

pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let protos: Vec<Prototype> = (0..spec.n_users)
        .map(|u| Prototype::random(&mut stream(spec.seed, u, STREAM_PROTOTYPE, 0), spec))
        .collect();
    let jitter = spec.genuine_jitter;
    let distortion = spec.forgery_dynamic_distortion;
    let mut users = Vec::with_capacity(spec.n_users);
    let mut prototypes = Vec::with_capacity(spec.n_users);
    for (u, proto) in protos.iter().enumerate() {
        let user_id = UserId(u as u32);
        let genuine = (0..spec.genuine_per_user)
            .map(|i| {
                let mut rng = stream(spec.seed, u, STREAM_GENUINE, i);
                let len_factor = 1.0 + jitter * rng.random_range(-2.0..2.0);
                let r = Rendering {
                    shape: proto,
                    dynamics: &proto.dynamics,
                    extra_timing: Warp::random(&mut rng, jitter),
                    len: ((proto.len as f64 * len_factor).round() as usize).max(8),
                    scale: 1.0 + jitter * rng.random_range(-1.0..1.0),
                    position_noise: NOISE * jitter,
                    pressure_scale: 1.0 + jitter * rng.random_range(-1.0..1.0),
                    angle_offset: (
                        rng.random_range(-250.0..250.0),
                        rng.random_range(-50.0..50.0),
                    ),
                };
                let mut sig = r.draw(&mut rng, spec.sample_rate_hz);
                sig.user_id = user_id;
                sig.kind = SignatureKind::Genuine;
                sig.index = i as u32;
                sig
            })
            .collect();

        let skilled = (0..spec.skilled_per_user)
            .map(|i| {
                let mut rng = stream(spec.seed, u, STREAM_FORGERY, i);
                let dynamics = proto.dynamics.imitated(&mut rng, distortion);
                let slowdown = rng.random_range(1.0..1.0 + distortion);
                let r = Rendering {
                    shape: proto,
                    dynamics: &dynamics,
                    extra_timing: Warp::random(&mut rng, distortion),
                    len: ((proto.len as f64 * slowdown).round() as usize).max(8),
                    scale: 1.0 + distortion * rng.random_range(-0.5..0.5),
                    position_noise: NOISE * jitter * (1.0 + distortion),
                    pressure_scale: 1.0,
                    angle_offset: (
                        rng.random_range(-250.0..250.0),
                        rng.random_range(-50.0..50.0),
                    ),
                };
                let mut sig = r.draw(&mut rng, spec.sample_rate_hz);
                sig.user_id = user_id;
                sig.kind = SignatureKind::SkilledForgery;
                sig.index = i as u32;
                sig
            })
            .collect();

        let clean = Rendering {
            shape: proto,
            dynamics: &proto.dynamics,
            extra_timing: Warp::identity(),
            len: proto.len,
            scale: 1.0,
            position_noise: 0.0,
            pressure_scale: 1.0,
            angle_offset: (0.0, 0.0),
        };
        let mut p = clean.draw(
            &mut stream(spec.seed, u, STREAM_PROTOTYPE, 1),
            spec.sample_rate_hz,
        );
        p.user_id = user_id;
        prototypes.push(p);

        users.push(UserSignatures {
            user_id,
            genuine,
            skilled,
        });
    }

    Ok(SyntheticCorpus {
        corpus: Corpus {
            source: format!("synthetic seed={}", spec.seed),
            sample_rate_hz: spec.sample_rate_hz,
            users,
        },
        prototypes,
    })
}

/// Mean per-sample distance between the centered pen positions of `sig` and
/// `prototype`, after resampling `sig` linearly onto the prototype's sample grid.
pub fn prototype_distance(sig: &RawSignature, prototype: &RawSignature) -> f64 {
    let centered = |s: &RawSignature| {
        let n = s.samples.len() as f64;
        let mx = s.samples.iter().map(|p| p.x).sum::<f64>() / n;
        let my = s.samples.iter().map(|p| p.y).sum::<f64>() / n;
        s.samples
            .iter()
            .map(|p| (p.x - mx, p.y - my))
            .collect::<Vec<_>>()
    };
    let a = centered(sig);
    let b = centered(prototype);
    let m = b.len();
    let total: f64 = (0..m)
        .map(|k| {
            let pos = if m == 1 {
                0.0
            } else {
                k as f64 / (m - 1) as f64 * (a.len() - 1) as f64
            };
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(a.len() - 1);
            let f = pos - lo as f64;
            let x = a[lo].0 + f * (a[hi].0 - a[lo].0);
            let y = a[lo].1 + f * (a[hi].1 - a[lo].1);
            ((x - b[k].0).powi(2) + (y - b[k].1).powi(2)).sqrt()
        })
        .sum();
    total / m as f64
}
