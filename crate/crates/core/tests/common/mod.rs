#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use murreid::models::{save_bundle, ModelBundle, ModelKind, ModelOptions};
use murreid::synth::{generate, Placement, SynthConfig, MANIFEST_NAME};
use murreid::text::{build_vocab, tokenize, Granularity};

pub const BIN: &str = env!("CARGO_BIN_EXE_murreid");

pub fn murreid(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("MURREID_SEED").output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small, quick synthetic corpus under `dir`; returns the manifest path.
pub fn synth_corpus(dir: &Path, placement: Placement, classes: usize, per_class: usize, seed: u64) -> PathBuf {
    let cfg = SynthConfig {
        n_classes: classes,
        per_class,
        placement,
        p_text: 1.0,
        duration_s: (0.2, 0.4),
        seed,
        ..SynthConfig::default()
    };
    generate(&cfg, dir).unwrap();
    dir.join(MANIFEST_NAME)
}

pub fn small_options() -> ModelOptions {
    let mut o = ModelOptions::default();
    o.dims.embed_dim = 12;
    o.dims.hidden = 10;
    o.dims.audio_proj = 10;
    o.dims.audio_segments = 4;
    o
}

/// A randomly initialized bundle whose vocabulary covers `words`.
pub fn untrained_bundle(kind: ModelKind, words: &str, seed: u64) -> ModelBundle {
    let docs = vec![tokenize(words, Granularity::Word)];
    let vocab = build_vocab(&docs, Granularity::Word, 1, 1000);
    ModelBundle::untrained(kind, small_options(), vocab, seed).unwrap()
}

pub fn write_untrained(dir: &Path, kind: ModelKind) -> PathBuf {
    let path = dir.join(format!("untrained-{kind}.mrid"));
    save_bundle(&untrained_bundle(kind, "mie sie hää kaka lolo", 5), &path).unwrap();
    path
}
