use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use super::Utterance;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Partition {
    Train,
    Val,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Val, Partition::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Val => "val",
            Partition::Test => "test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Partition::Train),
            "val" => Ok(Partition::Val),
            "test" => Ok(Partition::Test),
            _ => Err(Error::Split(format!("unknown partition {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitMode {
    #[default]
    RandomSentence,
    SpeakerDisjoint,
}

impl SplitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitMode::RandomSentence => "random-sentence",
            SplitMode::SpeakerDisjoint => "speaker-disjoint",
        }
    }
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-sentence" => Ok(SplitMode::RandomSentence),
            "speaker-disjoint" => Ok(SplitMode::SpeakerDisjoint),
            _ => Err(Error::Split(format!("unknown split mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

// Absorbs representation error in products like 20 * 0.7 before flooring.
const FLOOR_SLACK: f64 = 1e-9;

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let r = Self { train, val, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Split(format!("ratios must be nonnegative: {self}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Split(format!("ratios must sum to 1: {self}")));
        }
        Ok(())
    }

    /// Cut points `(floor(n*train), floor(n*(train+val)))`; the remainder
    /// goes to test.
    pub fn cut_points(&self, n: usize) -> (usize, usize) {
        let n_f = n as f64;
        let a = ((n_f * self.train + FLOOR_SLACK).floor() as usize).min(n);
        let b = ((n_f * (self.train + self.val) + FLOOR_SLACK).floor() as usize).clamp(a, n);
        (a, b)
    }

    /// Partition sizes for a corpus of `n` items under the floor rule.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let (a, b) = self.cut_points(n);
        (a, b - a, n - b)
    }
}

impl fmt::Display for SplitRatios {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.train, self.val, self.test)
    }
}

impl FromStr for SplitRatios {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Split(format!("bad ratios {s:?}")))?;
        match parts[..] {
            [a, b, c] => SplitRatios::new(a, b, c),
            _ => Err(Error::Split(format!("expected three ratios, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub mode: SplitMode,
    /// Utterance id and partition, in input order.
    pub assignment: Vec<(String, Partition)>,
}

impl SplitManifest {
    pub fn partition_of(&self, id: &str) -> Option<Partition> {
        self.assignment.iter().find(|(i, _)| i == id).map(|(_, p)| *p)
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for (_, p) in &self.assignment {
            match p {
                Partition::Train => c.0 += 1,
                Partition::Val => c.1 += 1,
                Partition::Test => c.2 += 1,
            }
        }
        c
    }

    /// Selects the utterances of one partition, in manifest order. Every id in
    /// the split must exist in `utts` and vice versa.
    pub fn select<'a>(&self, utts: &'a [Utterance], part: Partition) -> Result<Vec<&'a Utterance>> {
        let lookup: HashMap<&str, Partition> =
            self.assignment.iter().map(|(id, p)| (id.as_str(), *p)).collect();
        if lookup.len() != utts.len() {
            return Err(Error::Split(format!(
                "split covers {} ids but manifest has {} utterances",
                lookup.len(),
                utts.len()
            )));
        }
        let mut out = Vec::new();
        for u in utts {
            match lookup.get(u.id.as_str()) {
                Some(p) if *p == part => out.push(u),
                Some(_) => {}
                None => {
                    return Err(Error::Split(format!("utterance {:?} missing from split", u.id)));
                }
            }
        }
        Ok(out)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# seed={} ratios={} mode={}\n", self.seed, self.ratios, self.mode);
        for (id, p) in &self.assignment {
            let _ = writeln!(out, "{id}\t{p}");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Split("empty split file".into()))?;
        let fields = header
            .strip_prefix("# ")
            .ok_or_else(|| Error::Split("missing split header".into()))?;
        let (mut seed, mut ratios, mut mode) = (None, None, None);
        for kv in fields.split_whitespace() {
            match kv.split_once('=') {
                Some(("seed", v)) => {
                    seed = Some(v.parse().map_err(|_| Error::Split(format!("bad seed {v:?}")))?)
                }
                Some(("ratios", v)) => ratios = Some(v.parse()?),
                Some(("mode", v)) => mode = Some(v.parse()?),
                _ => return Err(Error::Split(format!("bad header field {kv:?}"))),
            }
        }
        let mut assignment = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (id, p) = line.split_once('\t').ok_or_else(|| Error::Manifest {
                line: i + 2,
                message: "expected id<TAB>partition".into(),
            })?;
            assignment.push((id.to_string(), p.parse()?));
        }
        Ok(SplitManifest {
            seed: seed.ok_or_else(|| Error::Split("header lacks seed".into()))?,
            ratios: ratios.ok_or_else(|| Error::Split("header lacks ratios".into()))?,
            mode: mode.ok_or_else(|| Error::Split("header lacks mode".into()))?,
            assignment,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }
}

/// Assigns every utterance to train, validation or test.
///
/// Random-sentence mode shuffles the utterances and cuts the shuffled list at
/// the floor-rule cut points. Speaker-disjoint mode shuffles the speakers and
/// fills train, then validation, with whole speakers until each quota is met
/// or exceeded; remaining speakers go to test.
pub fn split(utts: &[Utterance], ratios: SplitRatios, seed: u64, mode: SplitMode) -> Result<SplitManifest> {
    ratios.validate()?;
    if utts.is_empty() {
        return Err(Error::Split("empty corpus".into()));
    }
    let n = utts.len();
    let mut rng = SplitMix64::new(seed);
    let mut parts = vec![Partition::Test; n];
    match mode {
        SplitMode::RandomSentence => {
            let mut order: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut order);
            let (a, b) = ratios.cut_points(n);
            for (rank, &i) in order.iter().enumerate() {
                parts[i] = if rank < a {
                    Partition::Train
                } else if rank < b {
                    Partition::Val
                } else {
                    Partition::Test
                };
            }
        }
        SplitMode::SpeakerDisjoint => {
            let mut speakers: Vec<&str> = Vec::new();
            let mut members: HashMap<&str, Vec<usize>> = HashMap::new();
            for (i, u) in utts.iter().enumerate() {
                let entry = members.entry(u.speaker_id.as_str()).or_default();
                if entry.is_empty() {
                    speakers.push(u.speaker_id.as_str());
                }
                entry.push(i);
            }
            if speakers.len() < 3 {
                return Err(Error::Split(format!(
                    "speaker-disjoint split needs at least 3 speakers, found {}",
                    speakers.len()
                )));
            }
            rng.shuffle(&mut speakers);
            let (q_train, q_val) = {
                let (a, b, _) = ratios.sizes(n);
                (a, b)
            };
            let (mut n_train, mut n_val) = (0, 0);
            for spk in speakers {
                let idx = &members[spk];
                let p = if n_train < q_train {
                    n_train += idx.len();
                    Partition::Train
                } else if n_val < q_val {
                    n_val += idx.len();
                    Partition::Val
                } else {
                    Partition::Test
                };
                for &i in idx {
                    parts[i] = p;
                }
            }
        }
    }
    Ok(SplitManifest {
        seed,
        ratios,
        mode,
        assignment: utts.iter().map(|u| u.id.clone()).zip(parts).collect(),
    })
}
