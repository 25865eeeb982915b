//! Line-based campaign files.
//!
//! ```text
//! # yuoh-dataset 1
//! # seed 7
//! # threshold 5.5
//! # min_len 1000
//! # purge_run_length 55
//! # noise {"rotation_infidelity":0.005,...}
//! h0 z1:0 h1:17 ...
//! o y2+ z3:1 ...
//! ```
//!
//! Each data line is one subsequence: an optional `o` (omitted from analysis), the
//! starting ray, then `ray:photon_count` tokens. Outcomes are not stored; they are
//! re-derived from the counts against the threshold on every read.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::DatasetError;
use crate::qutrit::Outcome;
use crate::rays::RayId;
use crate::sim::{classify, Campaign, EndReason, MeasurementRecord, NoiseConfig, Subsequence};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "yuoh-dataset";

pub fn write_dataset<W: Write>(c: &Campaign, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# {MAGIC} {FORMAT_VERSION}")?;
    writeln!(w, "# seed {}", c.seed)?;
    writeln!(w, "# threshold {}", c.noise.threshold)?;
    writeln!(w, "# min_len {}", c.min_len)?;
    writeln!(w, "# purge_run_length {}", c.purge_run_length)?;
    writeln!(w, "# noise {}", c.noise.to_json())?;
    let mut line = String::new();
    for s in &c.subsequences {
        line.clear();
        if s.omitted {
            line.push_str("o ");
        }
        line.push_str(s.v0.label());
        for r in &s.records {
            line.push(' ');
            line.push_str(r.ray.label());
            line.push(':');
            line.push_str(&r.photon_count.to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

pub fn to_dataset_string(c: &Campaign) -> String {
    let mut buf = Vec::new();
    write_dataset(c, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("dataset text is ASCII")
}

pub fn write_dataset_file(c: &Campaign, path: &Path) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let f = File::create(path).map_err(io)?;
    write_dataset(c, BufWriter::new(f)).map_err(io)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedDataset {
    pub campaign: Campaign,
    /// Threshold stored in the file header.
    pub header_threshold: f64,
    /// Subsequences newly marked omitted because their last record is no longer bright.
    pub invalidated: usize,
    pub warnings: Vec<String>,
}

struct Header {
    seed: Option<u64>,
    threshold: Option<f64>,
    min_len: Option<usize>,
    purge_run_length: Option<usize>,
    noise: Option<NoiseConfig>,
}

fn parse_err(line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, DatasetError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| parse_err(line, format!("bad {key} `{value}`: {e}")))
}

struct RawLine {
    marked: bool,
    v0: RayId,
    records: Vec<(RayId, u32)>,
}

/// Reads a dataset, re-deriving outcomes against `threshold_override` when given.
pub fn read_dataset<R: BufRead>(reader: R, threshold_override: Option<f64>) -> Result<LoadedDataset, DatasetError> {
    let mut header = Header {
        seed: None,
        threshold: None,
        min_len: None,
        purge_run_length: None,
        noise: None,
    };
    let mut saw_magic = false;
    let mut raw: Vec<RawLine> = Vec::new();

    for (k, line) in reader.lines().enumerate() {
        let n = k + 1;
        let line = line.map_err(|e| parse_err(n, e.to_string()))?;
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            let (key, value) = rest.split_once(' ').unwrap_or((rest, ""));
            match key {
                MAGIC => {
                    let v: u32 = parse_value(n, "format version", value)?;
                    if v != FORMAT_VERSION {
                        return Err(parse_err(n, format!("unsupported format version {v}")));
                    }
                    saw_magic = true;
                }
                "seed" => header.seed = Some(parse_value(n, key, value)?),
                "threshold" => header.threshold = Some(parse_value(n, key, value)?),
                "min_len" => header.min_len = Some(parse_value(n, key, value)?),
                "purge_run_length" => header.purge_run_length = Some(parse_value(n, key, value)?),
                "noise" => {
                    header.noise =
                        Some(NoiseConfig::from_json(value).map_err(|e| parse_err(n, e.to_string()))?)
                }
                _ => return Err(parse_err(n, format!("unknown header key `{key}`"))),
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !saw_magic {
            return Err(parse_err(n, "data before the format header"));
        }
        let mut tokens = line.split_ascii_whitespace().peekable();
        let omitted = tokens.next_if_eq(&"o").is_some();
        let v0_token = tokens.next().ok_or_else(|| parse_err(n, "missing starting ray"))?;
        let v0: RayId = v0_token.parse().map_err(|_| DatasetError::UnknownRay {
            line: n,
            token: v0_token.to_string(),
        })?;
        let mut records = Vec::new();
        for tok in tokens {
            let (label, count) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(n, format!("token `{tok}` is not ray:count")))?;
            let ray: RayId = label.parse().map_err(|_| DatasetError::UnknownRay {
                line: n,
                token: tok.to_string(),
            })?;
            let count: u32 = count
                .parse()
                .map_err(|_| parse_err(n, format!("bad photon count in `{tok}`")))?;
            records.push((ray, count));
        }
        if records.is_empty() {
            return Err(parse_err(n, "subsequence without records"));
        }
        raw.push(RawLine { marked: omitted, v0, records });
    }

    if !saw_magic {
        return Err(parse_err(1, "missing format header"));
    }
    let missing = |what: &str| parse_err(1, format!("missing header `{what}`"));
    let header_threshold = header.threshold.ok_or_else(|| missing("threshold"))?;
    let mut noise = header.noise.ok_or_else(|| missing("noise"))?;
    let purge_run_length = header.purge_run_length.ok_or_else(|| missing("purge_run_length"))?;

    let mut warnings = Vec::new();
    let threshold = match threshold_override {
        Some(t) if t != header_threshold => {
            let msg = format!("threshold override {t} differs from file threshold {header_threshold}");
            log::warn!("{msg}");
            warnings.push(msg);
            t
        }
        _ => header_threshold,
    };
    noise.threshold = threshold;

    let mut index = 0u64;
    let mut invalidated = 0;
    let mut subsequences = Vec::with_capacity(raw.len());
    for RawLine { marked, v0, records: tokens } in raw {
        let records: Vec<MeasurementRecord> = tokens
            .into_iter()
            .map(|(ray, photon_count)| {
                let r = MeasurementRecord {
                    ray,
                    outcome: classify(photon_count, threshold),
                    photon_count,
                    index,
                };
                index += 1;
                r
            })
            .collect();
        let mut sub = Subsequence {
            v0,
            records,
            purged: false,
            omitted: marked,
            end_reason: EndReason::BrightAfterMin,
        };
        let ends_bright = sub.records.last().map(|r| r.outcome) == Some(Outcome::Bright);
        if marked {
            sub.purged = sub.trailing_dark_run() > purge_run_length;
            sub.end_reason = if sub.purged { EndReason::Purge } else { EndReason::Invalid };
        } else if !ends_bright {
            sub.omitted = true;
            sub.end_reason = EndReason::Invalid;
            invalidated += 1;
        }
        subsequences.push(sub);
    }
    if invalidated > 0 {
        let msg = format!("{invalidated} subsequences no longer end on a bright detection and were omitted");
        log::warn!("{msg}");
        warnings.push(msg);
    }

    Ok(LoadedDataset {
        campaign: Campaign {
            seed: header.seed.ok_or_else(|| missing("seed"))?,
            min_len: header.min_len.ok_or_else(|| missing("min_len"))?,
            purge_run_length,
            noise,
            subsequences,
        },
        header_threshold,
        invalidated,
        warnings,
    })
}

pub fn read_dataset_file(path: &Path, threshold_override: Option<f64>) -> Result<LoadedDataset, DatasetError> {
    let f = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_dataset(BufReader::new(f), threshold_override)
}

pub fn parse_dataset_str(text: &str, threshold_override: Option<f64>) -> Result<LoadedDataset, DatasetError> {
    read_dataset(text.as_bytes(), threshold_override)
}
