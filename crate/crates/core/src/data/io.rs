use std::fmt::Write as _;
use std::path::Path;

use crate::data::{Channel, ChannelKind, SensorimotorSequence};
use crate::scalar::Real;
use crate::textio::{write_matrix, Lines, ParseError};

/// First line of every dataset file.
pub const DATASET_MAGIC: &str = "skillmem-dataset 1";

/// Serializes sequences as a dataset document.
///
/// ```text
/// skillmem-dataset 1
/// sequences <N>
/// sequence
/// skill_id <text>
/// rep_id <text>
/// rate_hz <scalar>
/// normalized <true|false>
/// dim <D>
/// steps <T>
/// labels <l1>,<l2>,...
/// kinds <proprio|extero|cue>,...
/// <T rows of D comma-separated values, column order as in labels>
/// ```
///
/// The `sequence` block repeats `N` times. Labels may not contain commas or
/// whitespace.
pub fn write_dataset<T: Real>(seqs: &[SensorimotorSequence<T>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{DATASET_MAGIC}");
    let _ = writeln!(out, "sequences {}", seqs.len());
    for s in seqs {
        let _ = writeln!(out, "sequence");
        let _ = writeln!(out, "skill_id {}", s.skill_id);
        let _ = writeln!(out, "rep_id {}", s.rep_id);
        let _ = writeln!(out, "rate_hz {}", s.rate_hz);
        let _ = writeln!(out, "normalized {}", s.normalized);
        let _ = writeln!(out, "dim {}", s.dim());
        let _ = writeln!(out, "steps {}", s.len());
        let labels: Vec<&str> = s.labels().collect();
        let _ = writeln!(out, "labels {}", labels.join(","));
        let kinds: Vec<&str> = s.channels().iter().map(|c| c.kind.tag()).collect();
        let _ = writeln!(out, "kinds {}", kinds.join(","));
        write_matrix(&mut out, s.data());
    }
    out
}

/// Parses a document produced by [`write_dataset`].
pub fn read_dataset<T: Real>(text: &str) -> Result<Vec<SensorimotorSequence<T>>, ParseError> {
    let mut lines = Lines::new(text);
    let (n, magic) = lines.next_line("magic")?;
    if magic.trim() != DATASET_MAGIC {
        return Err(ParseError::new(n, "magic", format!("expected `{DATASET_MAGIC}`")));
    }
    let count: usize = lines.expect_parsed("sequences")?;
    let mut seqs = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, tag) = lines.next_line("sequence")?;
        if tag.trim() != "sequence" {
            return Err(ParseError::new(n, "sequence", "expected `sequence`"));
        }
        let (_, skill_id) = lines.expect_key("skill_id")?;
        let (_, rep_id) = lines.expect_key("rep_id")?;
        let (rate_line, rate) = lines.expect_key("rate_hz")?;
        let rate_hz =
            T::parse_text(rate).ok_or_else(|| ParseError::new(rate_line, "rate_hz", format!("bad number `{rate}`")))?;
        let normalized: bool = lines.expect_parsed("normalized")?;
        let dim: usize = lines.expect_parsed("dim")?;
        let (steps_line, steps): (usize, usize) = {
            let (n, v) = lines.expect_key("steps")?;
            (n, v.parse().map_err(|e: std::num::ParseIntError| ParseError::new(n, "steps", e.to_string()))?)
        };
        if steps == 0 {
            return Err(ParseError::new(steps_line, "steps", "a sequence needs at least one step"));
        }
        let (label_line, labels) = lines.expect_key("labels")?;
        let labels: Vec<&str> = labels.split(',').map(str::trim).collect();
        if labels.len() != dim {
            return Err(ParseError::new(label_line, "labels", format!("expected {dim} labels, found {}", labels.len())));
        }
        let (kind_line, kinds) = lines.expect_key("kinds")?;
        let kinds: Vec<&str> = kinds.split(',').map(str::trim).collect();
        if kinds.len() != dim {
            return Err(ParseError::new(kind_line, "kinds", format!("expected {dim} kinds, found {}", kinds.len())));
        }
        let mut channels = Vec::with_capacity(dim);
        for (i, (label, kind)) in labels.iter().zip(&kinds).enumerate() {
            let kind: ChannelKind =
                kind.parse().map_err(|e: String| ParseError::new(kind_line, format!("kinds[{i}]"), e))?;
            channels.push(Channel::new(*label, kind));
        }
        let data = lines.read_matrix::<T>("rows", steps, dim)?;
        let mut seq = SensorimotorSequence::new_unchecked(data, channels, skill_id, rep_id, rate_hz);
        seq.normalized = normalized;
        seq.validate().map_err(|e| ParseError::new(lines.line_no(), "rows", e.to_string()))?;
        seqs.push(seq);
    }
    if !lines.peek_is_none() {
        let (n, _) = lines.next_line("end")?;
        return Err(ParseError::new(n, "end", "trailing content after last sequence"));
    }
    Ok(seqs)
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetFileError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Parse(#[from] ParseError),
}

pub fn save_dataset<T: Real>(path: impl AsRef<Path>, seqs: &[SensorimotorSequence<T>]) -> std::io::Result<()> {
    std::fs::write(path, write_dataset(seqs))
}

pub fn load_dataset<T: Real>(path: impl AsRef<Path>) -> Result<Vec<SensorimotorSequence<T>>, DatasetFileError> {
    let text = std::fs::read_to_string(path)?;
    Ok(read_dataset(&text)?)
}
