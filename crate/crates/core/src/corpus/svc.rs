//! Importer for SVC2004 Task 2 text files.
//!
//! Layout: first line is the point count, then one line per point with
//! `X Y TimeStamp ButtonStatus Azimuth Altitude Pressure`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::{RawSignature, Sample};

const SVC_RATE_HZ: f64 = 100.0;

pub fn parse_svc(text: &str, origin: &Path) -> Result<RawSignature> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let count: usize = header
        .trim()
        .parse()
        .map_err(|_| err(hl, format!("bad point count {header:?}")))?;
    if count == 0 {
        return Err(Error::input(format!(
            "{}: point count is 0",
            origin.display()
        )));
    }

    let mut samples = Vec::with_capacity(count);
    let mut status = Vec::with_capacity(count);
    let mut t0 = None;
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 7 {
            return Err(err(
                lineno,
                format!("expected 7 columns, found {}", fields.len()),
            ));
        }
        let v = fields
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| err(lineno, format!("bad number: {e}")))?;
        if samples.len() == count {
            return Err(err(lineno, format!("more than {count} points")));
        }
        let start = *t0.get_or_insert(v[2]);
        samples.push(Sample {
            t: v[2] - start,
            x: v[0],
            y: v[1],
            p: v[6],
            azimuth: v[4],
            altitude: v[5],
        });
        status.push(v[3] as u8);
    }
    if samples.len() != count {
        return Err(err(
            hl,
            format!("header announces {count} points, found {}", samples.len()),
        ));
    }
    let mut sig = RawSignature::new(samples, SVC_RATE_HZ);
    sig.pen_status = Some(status);
    Ok(sig)
}

pub fn import_svc(path: impl AsRef<Path>) -> Result<RawSignature> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_svc(&text, path)
}
