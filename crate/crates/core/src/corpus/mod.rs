//! Corpus manifests, the dialect registry, duration filtering and splits.
//!
//! A manifest is a headerless UTF-8 TSV with one sentence-aligned utterance
//! per line:
//!
//! ```text
//! id  speaker_id  dialect_name  duration_s  sample_rate_hz  audio_path  transcript_dialectal  [transcript_normalized]
//! ```

mod registry;
mod split;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use registry::{DialectLabel, NUM_DIALECTS};
pub use split::{split, Partition, SplitManifest, SplitMode, SplitRatios};

use crate::error::{Error, Result};

/// Default upper bound (exclusive) on utterance duration, in seconds.
pub const MAX_DURATION_S: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub speaker_id: String,
    pub dialect: DialectLabel,
    pub transcript_dialectal: String,
    pub transcript_normalized: Option<String>,
    /// As written in the manifest; relative paths are resolved against the
    /// manifest's directory by [`resolve_audio_path`].
    pub audio_path: String,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
}

impl Utterance {
    pub fn has_audio(&self) -> bool {
        !self.audio_path.is_empty()
    }
}

pub fn parse_manifest(path: impl AsRef<Path>) -> Result<Vec<Utterance>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest_str(&text)
}

pub fn parse_manifest_str(text: &str) -> Result<Vec<Utterance>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let utt = parse_line(line, line_no)?;
        if !seen.insert(utt.id.clone()) {
            return Err(Error::DuplicateId(utt.id));
        }
        out.push(utt);
    }
    Ok(out)
}

fn parse_line(line: &str, line_no: usize) -> Result<Utterance> {
    let malformed = |message: String| Error::Manifest {
        line: line_no,
        message,
    };
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 7 && cols.len() != 8 {
        return Err(malformed(format!("expected 7 or 8 columns, found {}", cols.len())));
    }
    let id = cols[0];
    if id.is_empty() {
        return Err(malformed("empty utterance id".into()));
    }
    let dialect =
        DialectLabel::from_name(cols[2]).ok_or_else(|| Error::UnknownDialect(cols[2].to_string()))?;
    let duration_s: f64 = cols[3]
        .parse()
        .map_err(|_| malformed(format!("bad duration {:?}", cols[3])))?;
    if !duration_s.is_finite() || duration_s < 0.0 {
        return Err(malformed(format!("bad duration {:?}", cols[3])));
    }
    let sample_rate_hz: u32 = cols[4]
        .parse()
        .ok()
        .filter(|&r| r > 0)
        .ok_or_else(|| malformed(format!("bad sample rate {:?}", cols[4])))?;
    let audio_path = cols[5];
    if !audio_path.is_empty() && duration_s == 0.0 {
        return Err(malformed("utterance with audio must have positive duration".into()));
    }
    let transcript_normalized = cols.get(7).filter(|s| !s.is_empty()).map(|s| s.to_string());
    Ok(Utterance {
        id: id.to_string(),
        speaker_id: cols[1].to_string(),
        dialect,
        transcript_dialectal: cols[6].to_string(),
        transcript_normalized,
        audio_path: audio_path.to_string(),
        duration_s,
        sample_rate_hz,
    })
}

/// Inverse of [`parse_manifest_str`]. Fields must not contain tabs or
/// newlines.
pub fn serialize_manifest(utts: &[Utterance]) -> String {
    let mut out = String::new();
    for u in utts {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            u.id,
            u.speaker_id,
            u.dialect.name(),
            u.duration_s,
            u.sample_rate_hz,
            u.audio_path,
            u.transcript_dialectal,
            u.transcript_normalized.as_deref().unwrap_or("")
        );
    }
    out
}

pub fn write_manifest(path: impl AsRef<Path>, utts: &[Utterance]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_manifest(utts)).map_err(|e| Error::io(path, e))
}

pub fn resolve_audio_path(manifest_dir: &Path, utt: &Utterance) -> PathBuf {
    let p = Path::new(&utt.audio_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_dir.join(p)
    }
}

/// Keeps utterances strictly shorter than `max_s`, preserving order.
pub fn filter_by_duration(utts: &[Utterance], max_s: f64) -> Vec<Utterance> {
    utts.iter().filter(|u| u.duration_s < max_s).cloned().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub sentences: [usize; NUM_DIALECTS],
    pub audio_seconds: [f64; NUM_DIALECTS],
    pub speakers: [usize; NUM_DIALECTS],
    pub total_speakers: usize,
}

impl CorpusStats {
    pub fn total_sentences(&self) -> usize {
        self.sentences.iter().sum()
    }

    pub fn count(&self, dialect: DialectLabel) -> usize {
        self.sentences[dialect.index()]
    }

    pub fn render_tsv(&self) -> String {
        let mut out = String::from("dialect\tcode\tsentences\taudio_s\tspeakers\n");
        for d in DialectLabel::all() {
            let k = d.index();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.1}\t{}",
                d.name(),
                d.code(),
                self.sentences[k],
                self.audio_seconds[k],
                self.speakers[k]
            );
        }
        let _ = writeln!(out, "# total={} speakers={}", self.total_sentences(), self.total_speakers);
        out
    }
}

pub fn compute_stats(utts: &[Utterance]) -> CorpusStats {
    let mut sentences = [0usize; NUM_DIALECTS];
    let mut audio_seconds = [0f64; NUM_DIALECTS];
    let mut per_dialect: Vec<HashSet<&str>> = vec![HashSet::new(); NUM_DIALECTS];
    let mut all = HashSet::new();
    for u in utts {
        let k = u.dialect.index();
        sentences[k] += 1;
        audio_seconds[k] += u.duration_s;
        per_dialect[k].insert(u.speaker_id.as_str());
        all.insert(u.speaker_id.as_str());
    }
    let mut speakers = [0usize; NUM_DIALECTS];
    for (s, set) in speakers.iter_mut().zip(&per_dialect) {
        *s = set.len();
    }
    CorpusStats {
        sentences,
        audio_seconds,
        speakers,
        total_speakers: all.len(),
    }
}
