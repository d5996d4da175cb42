//! Canonical text format: a `SIGv1 <count> <rate_hz>` header followed by one
//! `t x y p azimuth altitude` line per sample, space separated.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::{RawSignature, Sample};

pub const SIG_MAGIC: &str = "SIGv1";

pub fn write_signature(sig: &RawSignature) -> String {
    let mut out = String::with_capacity(32 * (sig.samples.len() + 1));
    let _ = writeln!(
        out,
        "{SIG_MAGIC} {} {}",
        sig.samples.len(),
        sig.sample_rate_hz
    );
    for s in &sig.samples {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            s.t, s.x, s.y, s.p, s.azimuth, s.altitude
        );
    }
    out
}

pub fn write_signature_file(sig: &RawSignature, path: impl AsRef<Path>) -> Result<()> {
    sig.validate()?;
    let path = path.as_ref();
    std::fs::write(path, write_signature(sig)).map_err(|e| Error::io(path, e))
}

/// Parses the canonical format. `origin` only labels error messages.
pub fn parse_signature(text: &str, origin: &Path) -> Result<RawSignature> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != SIG_MAGIC {
        return Err(err(1, format!("expected `{SIG_MAGIC} <count> <rate_hz>`")));
    }
    let count: usize = fields[1]
        .parse()
        .map_err(|_| err(1, format!("bad sample count {:?}", fields[1])))?;
    let rate: f64 = fields[2]
        .parse()
        .map_err(|_| err(1, format!("bad sample rate {:?}", fields[2])))?;

    let mut samples = Vec::with_capacity(count);
    for (lineno, line) in lines.by_ref() {
        if samples.len() == count {
            if line.trim().is_empty() {
                continue;
            }
            return Err(err(lineno, format!("more than {count} sample rows")));
        }
        let values = line
            .split_whitespace()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| err(lineno, format!("bad number: {e}")))?;
        if values.len() != 6 {
            return Err(err(
                lineno,
                format!("expected 6 fields, found {}", values.len()),
            ));
        }
        samples.push(Sample {
            t: values[0],
            x: values[1],
            y: values[2],
            p: values[3],
            azimuth: values[4],
            altitude: values[5],
        });
    }
    if samples.len() < count {
        return Err(err(
            samples.len() + 2,
            format!("header announces {count} samples, found {}", samples.len()),
        ));
    }
    let sig = RawSignature::new(samples, rate);
    sig.validate().map_err(|e| err(1, e.to_string()))?;
    Ok(sig)
}

pub fn parse_signature_file(path: impl AsRef<Path>) -> Result<RawSignature> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_signature(&text, path)
}
