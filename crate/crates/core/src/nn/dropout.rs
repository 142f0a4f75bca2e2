use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted dropout. Returns the output and the per-element scale applied
/// (0 or `1/(1-p)` in training, 1 in evaluation), which is also the backward
/// multiplier.
pub fn dropout(x: &[f64], p: f64, mode: Mode, rng: &mut SplitMix64) -> (Vec<f64>, Vec<f64>) {
    assert!((0.0..1.0).contains(&p), "dropout probability must be in [0, 1)");
    if mode == Mode::Eval || p == 0.0 {
        return (x.to_vec(), vec![1.0; x.len()]);
    }
    let keep = 1.0 / (1.0 - p);
    let mask: Vec<f64> = x.iter().map(|_| if rng.bernoulli(p) { 0.0 } else { keep }).collect();
    let out = x.iter().zip(&mask).map(|(v, m)| v * m).collect();
    (out, mask)
}

pub fn dropout_seeded(x: &[f64], p: f64, mode: Mode, seed: u64) -> Vec<f64> {
    dropout(x, p, mode, &mut SplitMix64::new(seed)).0
}
