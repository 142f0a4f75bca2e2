use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use murreid::models::{save_bundle, ModelBundle, ModelKind, ModelOptions};
use murreid::text::{build_vocab, Granularity};
use murreid_ffi::*;

fn small_options() -> ModelOptions {
    let mut o = ModelOptions::default();
    o.dims.embed_dim = 8;
    o.dims.hidden = 6;
    o.dims.audio_proj = 5;
    o.dims.audio_segments = 2;
    o
}

fn write_bundle(dir: &Path, kind: ModelKind) -> PathBuf {
    let docs = vec![vec!["mie".to_string(), "sie".to_string()]];
    let vocab = build_vocab(&docs, Granularity::Word, 1, 100);
    let b = ModelBundle::untrained(kind, small_options(), vocab, 11).unwrap();
    let path = dir.join(format!("{kind}.mrid"));
    save_bundle(&b, &path).unwrap();
    path
}

fn load(path: &Path) -> *mut MurreidModel {
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { murreid_model_load(c.as_ptr(), &mut m) }, MurreidStatus::Ok);
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let p = murreid_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn tone(n: usize) -> Vec<f32> {
    (0..n).map(|i| 0.3 * (i as f32 * 0.2).sin()).collect()
}

#[test]
fn text_model_predicts_a_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let m = load(&write_bundle(dir.path(), ModelKind::Text));
    let mut kind = MurreidModelKind::Fusion;
    assert_eq!(unsafe { murreid_model_kind(m, &mut kind) }, MurreidStatus::Ok);
    assert_eq!(kind, MurreidModelKind::Text);

    let t = CString::new("mie sie").unwrap();
    let mut scores = [0.0f64; MURREID_NUM_DIALECTS];
    let mut label = u32::MAX;
    let st = unsafe {
        murreid_predict(m, t.as_ptr(), ptr::null(), 0, 0, scores.as_mut_ptr(), scores.len(), &mut label)
    };
    assert_eq!(st, MurreidStatus::Ok);
    assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let best = (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
    assert_eq!(label as usize, best);

    let bundle = murreid::models::load_bundle(dir.path().join("text.mrid")).unwrap();
    assert_eq!(bundle.predict("mie sie", None).unwrap().scores, scores.to_vec());
    unsafe { murreid_model_free(m) };
}

#[test]
fn fusion_model_requires_audio() {
    let dir = tempfile::tempdir().unwrap();
    let m = load(&write_bundle(dir.path(), ModelKind::Fusion));
    let t = CString::new("mie").unwrap();
    let mut scores = [0.0f64; MURREID_NUM_DIALECTS];
    let mut label = 0u32;
    let st = unsafe {
        murreid_predict(m, t.as_ptr(), ptr::null(), 0, 16000, scores.as_mut_ptr(), scores.len(), &mut label)
    };
    assert_eq!(st, MurreidStatus::AudioRequired);
    assert!(last_error().contains("audio required"));

    let audio = tone(4000);
    let st = unsafe {
        murreid_predict(m, t.as_ptr(), audio.as_ptr(), audio.len(), 16000, scores.as_mut_ptr(), scores.len(), &mut label)
    };
    assert_eq!(st, MurreidStatus::Ok);
    assert!(murreid_last_error().is_null());
    assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    unsafe { murreid_model_free(m) };
}

#[test]
fn errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = ptr::null_mut();
    let missing = CString::new(dir.path().join("none.mrid").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { murreid_model_load(missing.as_ptr(), &mut m) }, MurreidStatus::Io);
    assert!(m.is_null());

    let junk = dir.path().join("junk.mrid");
    std::fs::write(&junk, b"not a bundle at all").unwrap();
    let junk_c = CString::new(junk.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { murreid_model_load(junk_c.as_ptr(), &mut m) }, MurreidStatus::Format);
    assert!(last_error().contains("not a model bundle"));

    assert_eq!(unsafe { murreid_model_load(ptr::null(), &mut m) }, MurreidStatus::NullPointer);
    assert_eq!(unsafe { murreid_model_load(junk_c.as_ptr(), ptr::null_mut()) }, MurreidStatus::NullPointer);
    let bad_utf8 = CString::new(vec![0xff, 0xfe]).unwrap();
    assert_eq!(unsafe { murreid_model_load(bad_utf8.as_ptr(), &mut m) }, MurreidStatus::InvalidUtf8);

    let model = load(&write_bundle(dir.path(), ModelKind::Text));
    let t = CString::new("x").unwrap();
    let mut small = [0.0f64; 5];
    let mut label = 0u32;
    let st = unsafe { murreid_predict(model, t.as_ptr(), ptr::null(), 0, 0, small.as_mut_ptr(), small.len(), &mut label) };
    assert_eq!(st, MurreidStatus::InvalidArgument);
    let st = unsafe { murreid_predict(model, t.as_ptr(), ptr::null(), 10, 0, small.as_mut_ptr(), 23, &mut label) };
    assert_eq!(st, MurreidStatus::NullPointer);
    unsafe { murreid_model_free(model) };
    unsafe { murreid_model_free(ptr::null_mut()) };
}

#[test]
fn label_strings() {
    let code = |i| unsafe { CStr::from_ptr(murreid_label_code(i)) }.to_str().unwrap();
    assert_eq!(code(0), "EH");
    assert_eq!(code(22), "PSa");
    assert!(murreid_label_code(23).is_null());
    let name = unsafe { CStr::from_ptr(murreid_label_name(0)) }.to_str().unwrap();
    assert_eq!(name, "Etelä-Häme");
    let v = unsafe { CStr::from_ptr(murreid_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

#[test]
fn header_compiles_as_c_and_cpp() {
    if !have_cc() {
        eprintln!("skipping: no C compiler on PATH");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("h.c");
    std::fs::write(&src, "#include \"murreid.h\"\nint main(void) { return MURREID_NUM_DIALECTS == 23 ? 0 : 1; }\n").unwrap();
    for lang in ["c", "c++"] {
        let out = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(header_dir())
            .arg(&src)
            .output()
            .unwrap();
        assert!(out.status.success(), "{lang}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "murreid.h"

int main(int argc, char **argv) {
    MurreidModel *m = NULL;
    if (murreid_model_load(argv[1], &m) != MURREID_STATUS_OK) {
        fprintf(stderr, "%s\n", murreid_last_error());
        return 1;
    }
    double scores[MURREID_NUM_DIALECTS];
    uint32_t label = 0;
    MurreidStatus st = murreid_predict(m, "mie sie", NULL, 0, 0, scores, MURREID_NUM_DIALECTS, &label);
    if (st != MURREID_STATUS_OK) return 2;
    double sum = 0;
    for (int i = 0; i < MURREID_NUM_DIALECTS; i++) sum += scores[i];
    printf("%s %.12f\n", murreid_label_code(label), sum);
    murreid_model_free(m);
    return 0;
}
"#;

#[test]
fn c_program_links_against_static_library() {
    // target/<profile>/deps/capi-<hash> -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libmurreid_ffi.a");
    if !have_cc() || !lib.exists() {
        eprintln!("skipping: need cc and {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header_dir())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let bundle = write_bundle(dir.path(), ModelKind::Text);
    let run = Command::new(&exe).arg(&bundle).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    let (code, sum) = stdout.trim().split_once(' ').unwrap();
    let expected = murreid::models::load_bundle(&bundle).unwrap().predict("mie sie", None).unwrap();
    assert_eq!(code, expected.label.code());
    assert!((sum.parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
}
