use std::collections::{BTreeMap, HashMap, HashSet};

use murreid::corpus::{
    filter_by_duration, parse_manifest_str, serialize_manifest, split, DialectLabel, Partition, SplitMode,
    SplitRatios, Utterance, NUM_DIALECTS,
};
use murreid::dsp::{fft_in_place, extract_features, DspConfig, Waveform};
use murreid::eval::{confusion, metrics};
use murreid::nn::{adaptive_avg_pool, adaptive_segment, softmax, Tensor2};
use murreid::text::{build_vocab, encode_fixed, ngram_counts, tokenize, Granularity};
use num_complex::Complex64;
use proptest::prelude::*;

fn label(k: usize) -> DialectLabel {
    DialectLabel::from_index(k).unwrap()
}

fn utterance(i: usize, speaker: usize, dialect: usize, duration_s: f64) -> Utterance {
    Utterance {
        id: format!("u{i}"),
        speaker_id: format!("s{speaker}"),
        dialect: label(dialect),
        transcript_dialectal: format!("sana {i}"),
        transcript_normalized: i.is_multiple_of(2).then(|| format!("norm {i}")),
        audio_path: format!("wav/u{i}.wav"),
        duration_s,
        sample_rate_hz: 16000,
    }
}

prop_compose! {
    fn corpus(max: usize)(rows in prop::collection::vec((0..12usize, 0..NUM_DIALECTS, 0.01f64..20.0), 1..max))
        -> Vec<Utterance> {
        rows.into_iter().enumerate().map(|(i, (s, d, t))| utterance(i, s, d, t)).collect()
    }
}

fn ratios() -> impl Strategy<Value = SplitRatios> {
    (1u32..=98, 1u32..=98)
        .prop_filter("sum below 100", |(a, b)| a + b < 100)
        .prop_map(|(a, b)| {
            let (a, b) = (a as f64 / 100.0, b as f64 / 100.0);
            SplitRatios { train: a, val: b, test: 1.0 - a - b }
        })
}

fn mode() -> impl Strategy<Value = SplitMode> {
    prop_oneof![Just(SplitMode::RandomSentence), Just(SplitMode::SpeakerDisjoint)]
}

proptest! {
    #[test]
    fn split_is_a_deterministic_partition(utts in corpus(60), r in ratios(), seed: u64, mode in mode()) {
        let speakers: HashSet<_> = utts.iter().map(|u| &u.speaker_id).collect();
        let sm = match split(&utts, r, seed, mode) {
            Ok(sm) => sm,
            Err(_) => {
                prop_assert!(mode == SplitMode::SpeakerDisjoint && speakers.len() < 3);
                return Ok(());
            }
        };
        prop_assert_eq!(&sm, &split(&utts, r, seed, mode).unwrap());

        let ids: Vec<&str> = sm.assignment.iter().map(|(id, _)| id.as_str()).collect();
        let expected: Vec<&str> = utts.iter().map(|u| u.id.as_str()).collect();
        prop_assert_eq!(ids, expected);

        let mut seen = Vec::new();
        for p in [Partition::Train, Partition::Val, Partition::Test] {
            seen.extend(sm.select(&utts, p).unwrap().into_iter().map(|u| u.id.clone()));
        }
        seen.sort();
        let mut all: Vec<String> = utts.iter().map(|u| u.id.clone()).collect();
        all.sort();
        prop_assert_eq!(seen, all);

        let n = utts.len();
        let (tr, va, te) = sm.counts();
        match mode {
            SplitMode::RandomSentence => {
                let a = (n as f64 * r.train + 1e-9).floor() as usize;
                let b = (n as f64 * (r.train + r.val) + 1e-9).floor() as usize;
                prop_assert_eq!((tr, va, te), (a, b - a, n - b));
            }
            SplitMode::SpeakerDisjoint => {
                let mut home: HashMap<&str, Partition> = HashMap::new();
                for (u, (_, p)) in utts.iter().zip(&sm.assignment) {
                    prop_assert_eq!(*home.entry(u.speaker_id.as_str()).or_insert(*p), *p);
                }
                prop_assert_eq!(tr + va + te, n);
            }
        }
    }

    #[test]
    fn duration_filter_is_a_strict_idempotent_subset(utts in corpus(40), max_s in 0.0f64..25.0) {
        let kept = filter_by_duration(&utts, max_s);
        prop_assert!(kept.iter().all(|u| u.duration_s < max_s && utts.contains(u)));
        prop_assert_eq!(kept.len(), utts.iter().filter(|u| u.duration_s < max_s).count());
        prop_assert_eq!(filter_by_duration(&kept, max_s), kept);
    }

    #[test]
    fn manifest_round_trip(utts in corpus(40)) {
        prop_assert_eq!(parse_manifest_str(&serialize_manifest(&utts)).unwrap(), utts);
    }

    #[test]
    fn encoding_has_fixed_length_and_valid_ids(
        docs in prop::collection::vec(".{0,40}", 1..8),
        probe in ".{0,80}",
        max_len in 1usize..24,
        char_mode: bool,
    ) {
        let g = if char_mode { Granularity::Char } else { Granularity::Word };
        let tokenized: Vec<Vec<String>> = docs.iter().map(|d| tokenize(d, g)).collect();
        let vocab = build_vocab(&tokenized, g, 1, 50);
        let enc = encode_fixed(&tokenize(&probe, g), &vocab, max_len);
        prop_assert_eq!(enc.ids.len(), max_len);
        prop_assert!(enc.true_length <= max_len);
        prop_assert!(enc.ids.iter().all(|&id| id < vocab.len()));
        prop_assert!(enc.ids[enc.true_length..].iter().all(|&id| id == murreid::text::PAD));
    }

    #[test]
    fn vocabulary_ignores_document_order(
        docs in prop::collection::vec(prop::collection::vec("[a-e]{1,2}", 0..6), 1..10),
        shuffle_seed: u64,
    ) {
        let mut shuffled = docs.clone();
        murreid::rng::SplitMix64::new(shuffle_seed).shuffle(&mut shuffled);
        prop_assert_eq!(
            build_vocab(&docs, Granularity::Word, 1, 12),
            build_vocab(&shuffled, Granularity::Word, 1, 12)
        );
    }

    #[test]
    fn char_ngram_counts_match_enumeration(word in "[a-cä]{0,10}", lo in 1usize..4, span in 0usize..3) {
        let hi = lo + span;
        let chars: Vec<String> = word.chars().map(String::from).collect();
        let counts = ngram_counts(&chars, lo, hi, Granularity::Char);
        if chars.is_empty() {
            prop_assert!(counts.is_empty());
            return Ok(());
        }
        let seq: Vec<char> = std::iter::once('^').chain(word.chars()).chain(std::iter::once('$')).collect();
        let mut oracle = BTreeMap::new();
        for n in lo..=hi {
            for start in 0..seq.len() {
                if start + n <= seq.len() {
                    *oracle.entry(seq[start..start + n].iter().collect::<String>()).or_insert(0) += 1;
                }
            }
        }
        prop_assert_eq!(&counts, &oracle);
        let expected: usize = (lo..=hi).map(|n| (chars.len() + 2 + 1).saturating_sub(n)).sum();
        prop_assert_eq!(counts.values().sum::<usize>(), expected);
    }

    #[test]
    fn softmax_is_on_the_simplex(logits in prop::collection::vec(-500.0f64..500.0, 1..30)) {
        let p = softmax(&logits);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fft_is_linear(
        frame in prop::collection::vec(-1.0f64..1.0, 64),
        a in -10.0f64..10.0,
    ) {
        let mut x: Vec<Complex64> = frame.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut ax: Vec<Complex64> = frame.iter().map(|&v| Complex64::new(a * v, 0.0)).collect();
        fft_in_place(&mut x).unwrap();
        fft_in_place(&mut ax).unwrap();
        let scale = x.iter().map(|c| c.norm()).fold(1e-12, f64::max) * a.abs().max(1e-12);
        for (p, q) in x.iter().zip(&ax) {
            prop_assert!((p * a - q).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn fft_satisfies_parseval(frame in prop::collection::vec(-1.0f64..1.0, 128)) {
        let time: f64 = frame.iter().map(|v| v * v).sum();
        let mut x: Vec<Complex64> = frame.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_in_place(&mut x).unwrap();
        let freq: f64 = x.iter().map(|c| c.norm_sqr()).sum::<f64>() / 128.0;
        prop_assert!((time - freq).abs() <= 1e-6 * time.max(1e-12));
    }

    #[test]
    fn features_are_deterministic(samples in prop::collection::vec(-1.0f64..1.0, 400..1200)) {
        let w = Waveform::new(samples, 16000);
        let cfg = DspConfig::default();
        prop_assert_eq!(extract_features(&w, &cfg).unwrap(), extract_features(&w, &cfg).unwrap());
    }

    #[test]
    fn metrics_match_brute_force(pairs in prop::collection::vec((0..NUM_DIALECTS, 0..NUM_DIALECTS), 1..200)) {
        let truth: Vec<_> = pairs.iter().map(|p| label(p.0)).collect();
        let pred: Vec<_> = pairs.iter().map(|p| label(p.1)).collect();
        let report = metrics(&confusion(&truth, &pred).unwrap());

        let hits = pairs.iter().filter(|p| p.0 == p.1).count();
        prop_assert_eq!(report.accuracy, hits as f64 / pairs.len() as f64);
        for k in 0..NUM_DIALECTS {
            let tp = pairs.iter().filter(|p| p.0 == k && p.1 == k).count() as f64;
            let support = pairs.iter().filter(|p| p.0 == k).count() as f64;
            let predicted = pairs.iter().filter(|p| p.1 == k).count() as f64;
            let prec = if predicted > 0.0 { tp / predicted } else { 0.0 };
            let rec = if support > 0.0 { tp / support } else { 0.0 };
            let f1 = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
            let m = &report.per_class[k];
            prop_assert!((m.precision - prec).abs() < 1e-12);
            prop_assert!((m.recall - rec).abs() < 1e-12);
            prop_assert!((m.f1 - f1).abs() < 1e-12);
            prop_assert_eq!(m.support as f64, support);
        }
        prop_assert!((0.0..=1.0).contains(&report.macro_f1));
        prop_assert_eq!(report.per_class.iter().map(|m| m.support as usize).sum::<usize>(), pairs.len());
    }

    #[test]
    fn confusion_ignores_evaluation_order(
        pairs in prop::collection::vec((0..NUM_DIALECTS, 0..NUM_DIALECTS), 1..100),
        seed: u64,
    ) {
        let mut shuffled = pairs.clone();
        murreid::rng::SplitMix64::new(seed).shuffle(&mut shuffled);
        let cm = |v: &[(usize, usize)]| {
            let t: Vec<_> = v.iter().map(|p| label(p.0)).collect();
            let q: Vec<_> = v.iter().map(|p| label(p.1)).collect();
            confusion(&t, &q).unwrap()
        };
        prop_assert_eq!(cm(&pairs), cm(&shuffled));
    }

    #[test]
    fn perfect_predictions_score_one(truth in prop::collection::vec(0..NUM_DIALECTS, 1..100)) {
        let y: Vec<_> = truth.iter().map(|&k| label(k)).collect();
        let report = metrics(&confusion(&y, &y).unwrap());
        prop_assert_eq!(report.accuracy, 1.0);
        for &k in &truth {
            prop_assert_eq!(report.per_class[k].f1, 1.0);
        }
    }
}

fn sequence(t: usize, d: usize, seed: u64) -> Tensor2 {
    let mut rng = murreid::rng::SplitMix64::new(seed);
    Tensor2::uniform(t, d, 1.0, &mut rng)
}

fn column_means(x: &Tensor2) -> Vec<f64> {
    let (rows, cols) = x.shape();
    (0..cols).map(|c| (0..rows).map(|r| x.get(r, c)).sum::<f64>() / rows as f64).collect()
}

#[test]
fn adaptive_pool_follows_the_segment_rule() {
    for t in 1..=32 {
        for target in 1..=32 {
            let x = sequence(t, 3, (t * 100 + target) as u64);
            let y = adaptive_avg_pool(&x, target).unwrap();
            assert_eq!(y.shape(), (target, 3));
            for k in 0..target {
                let (s, e) = adaptive_segment(k, t, target);
                // Exhaustive oracle: the rows whose fractional span [k*t/target, (k+1)*t/target)
                // touches row r.
                let members: Vec<usize> =
                    (0..t).filter(|&r| r * target < (k + 1) * t && (r + 1) * target > k * t).collect();
                assert_eq!((s..e).collect::<Vec<_>>(), members, "t={t} target={target} k={k}");
                for c in 0..3 {
                    let mean = members.iter().map(|&r| x.get(r, c)).sum::<f64>() / members.len() as f64;
                    assert!((y.get(k, c) - mean).abs() < 1e-12);
                }
            }
            if t == target {
                assert_eq!(y, x);
            }
        }
    }
}

#[test]
fn adaptive_pool_global_mean() {
    // Exact only when segments tile the input evenly; overlapping segments
    // weight shared rows twice, so in general the mean only stays within the
    // input's range.
    for t in 1..=32 {
        for target in 1..=32 {
            let x = sequence(t, 4, (t * 1000 + target) as u64);
            let (mi, mo) = (column_means(&x), column_means(&adaptive_avg_pool(&x, target).unwrap()));
            if t % target == 0 || target % t == 0 {
                for (a, b) in mi.iter().zip(&mo) {
                    assert!((a - b).abs() < 1e-9, "t={t} target={target}");
                }
            } else {
                for c in 0..4 {
                    let col: Vec<f64> = (0..t).map(|r| x.get(r, c)).collect();
                    let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    assert!(mo[c] >= lo - 1e-12 && mo[c] <= hi + 1e-12);
                }
            }
        }
    }
    let x = Tensor2::from_rows(&[vec![0.0], vec![3.0], vec![0.0]]).unwrap();
    let pooled = adaptive_avg_pool(&x, 2).unwrap();
    assert_eq!(column_means(&pooled)[0], 1.5);
    assert_eq!(column_means(&x)[0], 1.0);
}
