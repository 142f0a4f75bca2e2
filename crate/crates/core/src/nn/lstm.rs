//! LSTM cell and bidirectional layer with backpropagation through time.
//!
//! Gate blocks are stacked in the order input, forget, candidate, output:
//! rows `[0,H)` of `w`, `u` and `b` belong to the input gate, `[H,2H)` to the
//! forget gate and so on.

use super::tensor::{gemv_acc, gemv_t_acc, outer_acc, prefixed, Parameters, Tensor2};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    /// `4H x I` input weights.
    pub w: Tensor2,
    /// `4H x H` recurrent weights.
    pub u: Tensor2,
    /// `1 x 4H` biases.
    pub b: Tensor2,
}

/// Activations recorded by [`LstmCell::run`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct LstmTrace {
    /// Post-activation gates per step, `4H` each.
    gates: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
    /// Hidden state per step.
    pub hidden: Vec<Vec<f64>>,
}

impl LstmCell {
    /// Uniform(±1/√H) weights with the forget-gate bias set to 1.
    pub fn new(input: usize, hidden: usize, rng: &mut SplitMix64) -> Self {
        let bound = 1.0 / (hidden.max(1) as f64).sqrt();
        let mut cell = Self {
            w: Tensor2::uniform(4 * hidden, input, bound, rng),
            u: Tensor2::uniform(4 * hidden, hidden, bound, rng),
            b: Tensor2::uniform(1, 4 * hidden, bound, rng),
        };
        cell.b.data[hidden..2 * hidden].fill(1.0);
        cell
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: Tensor2::zeros(4 * hidden, input),
            u: Tensor2::zeros(4 * hidden, hidden),
            b: Tensor2::zeros(1, 4 * hidden),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.u.cols
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols
    }

    /// Runs the recurrence over `xs` in the given order from a zero state.
    pub fn run(&self, xs: &[&[f64]]) -> LstmTrace {
        let h = self.hidden_dim();
        let mut trace = LstmTrace {
            gates: Vec::with_capacity(xs.len()),
            cells: Vec::with_capacity(xs.len()),
            hidden: Vec::with_capacity(xs.len()),
        };
        let zero = vec![0.0; h];
        for (t, x) in xs.iter().enumerate() {
            let (h_prev, c_prev) = if t == 0 {
                (&zero, &zero)
            } else {
                (&trace.hidden[t - 1], &trace.cells[t - 1])
            };
            let mut a = self.b.data.clone();
            gemv_acc(&self.w, x, &mut a);
            gemv_acc(&self.u, h_prev, &mut a);
            for v in &mut a[..2 * h] {
                *v = sigmoid(*v);
            }
            for v in &mut a[2 * h..3 * h] {
                *v = v.tanh();
            }
            for v in &mut a[3 * h..] {
                *v = sigmoid(*v);
            }
            let mut c = vec![0.0; h];
            let mut hid = vec![0.0; h];
            for k in 0..h {
                c[k] = a[h + k] * c_prev[k] + a[k] * a[2 * h + k];
                hid[k] = a[3 * h + k] * c[k].tanh();
            }
            trace.gates.push(a);
            trace.cells.push(c);
            trace.hidden.push(hid);
        }
        trace
    }

    /// Backpropagates `dh` (one `H`-vector per step, same order as the run)
    /// into parameter gradients and input gradients `dxs`.
    pub fn backward(&self, xs: &[&[f64]], trace: &LstmTrace, dh: &[Vec<f64>], grads: &mut LstmCell, dxs: &mut [Vec<f64>]) {
        let h = self.hidden_dim();
        let zero = vec![0.0; h];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut da = vec![0.0; 4 * h];
        for t in (0..xs.len()).rev() {
            let g = &trace.gates[t];
            let c = &trace.cells[t];
            let (h_prev, c_prev) = if t == 0 {
                (&zero, &zero)
            } else {
                (&trace.hidden[t - 1], &trace.cells[t - 1])
            };
            for k in 0..h {
                let (i, f, cand, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                let dhk = dh[t][k] + dh_next[k];
                let tc = c[k].tanh();
                let dc = dhk * o * (1.0 - tc * tc) + dc_next[k];
                da[k] = dc * cand * i * (1.0 - i);
                da[h + k] = dc * c_prev[k] * f * (1.0 - f);
                da[2 * h + k] = dc * i * (1.0 - cand * cand);
                da[3 * h + k] = dhk * tc * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            outer_acc(&mut grads.w, &da, xs[t]);
            outer_acc(&mut grads.u, &da, h_prev);
            for (gb, d) in grads.b.data.iter_mut().zip(&da) {
                *gb += d;
            }
            gemv_t_acc(&self.w, &da, &mut dxs[t]);
            dh_next.fill(0.0);
            gemv_t_acc(&self.u, &da, &mut dh_next);
        }
    }
}

impl Parameters for LstmCell {
    fn tensors(&self) -> Vec<(String, &Tensor2)> {
        vec![("w".into(), &self.w), ("u".into(), &self.u), ("b".into(), &self.b)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![&mut self.w, &mut self.u, &mut self.b]
    }
}

/// Forward and backward LSTMs over the valid prefix of a sequence; outputs
/// `[h_fwd; h_bwd]` per step, zero past the valid length.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstm {
    pub fwd: LstmCell,
    pub bwd: LstmCell,
}

#[derive(Debug, Clone)]
pub struct BiLstmCache {
    len: usize,
    fwd: LstmTrace,
    bwd: LstmTrace,
}

impl BiLstm {
    pub fn new(input: usize, hidden: usize, rng: &mut SplitMix64) -> Self {
        Self {
            fwd: LstmCell::new(input, hidden, rng),
            bwd: LstmCell::new(input, hidden, rng),
        }
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            fwd: LstmCell::zeros(input, hidden),
            bwd: LstmCell::zeros(input, hidden),
        }
    }

    pub fn output_dim(&self) -> usize {
        2 * self.fwd.hidden_dim()
    }

    pub fn forward(&self, seq: &Tensor2, len: usize) -> Result<(Tensor2, BiLstmCache)> {
        if seq.cols != self.fwd.input_dim() {
            return Err(Error::Shape(format!(
                "bilstm expects {} input features, got {}",
                self.fwd.input_dim(),
                seq.cols
            )));
        }
        if len > seq.rows {
            return Err(Error::Shape(format!("length {len} exceeds sequence of {} steps", seq.rows)));
        }
        let h = self.fwd.hidden_dim();
        let xs: Vec<&[f64]> = (0..len).map(|t| seq.row(t)).collect();
        let rev: Vec<&[f64]> = xs.iter().rev().copied().collect();
        let fwd = self.fwd.run(&xs);
        let bwd = self.bwd.run(&rev);
        let mut out = Tensor2::zeros(seq.rows, 2 * h);
        for t in 0..len {
            let row = out.row_mut(t);
            row[..h].copy_from_slice(&fwd.hidden[t]);
            row[h..].copy_from_slice(&bwd.hidden[len - 1 - t]);
        }
        Ok((out, BiLstmCache { len, fwd, bwd }))
    }

    /// Returns the gradient with respect to `seq`; rows past the valid length
    /// are zero.
    pub fn backward(&self, seq: &Tensor2, cache: &BiLstmCache, dout: &Tensor2, grads: &mut BiLstm) -> Tensor2 {
        let h = self.fwd.hidden_dim();
        let len = cache.len;
        let xs: Vec<&[f64]> = (0..len).map(|t| seq.row(t)).collect();
        let rev: Vec<&[f64]> = xs.iter().rev().copied().collect();
        let dh_fwd: Vec<Vec<f64>> = (0..len).map(|t| dout.row(t)[..h].to_vec()).collect();
        let dh_bwd: Vec<Vec<f64>> = (0..len).map(|s| dout.row(len - 1 - s)[h..].to_vec()).collect();
        let mut dx_fwd = vec![vec![0.0; seq.cols]; len];
        let mut dx_bwd = vec![vec![0.0; seq.cols]; len];
        self.fwd.backward(&xs, &cache.fwd, &dh_fwd, &mut grads.fwd, &mut dx_fwd);
        self.bwd.backward(&rev, &cache.bwd, &dh_bwd, &mut grads.bwd, &mut dx_bwd);
        let mut dx = Tensor2::zeros(seq.rows, seq.cols);
        for t in 0..len {
            let row = dx.row_mut(t);
            for ((d, a), b) in row.iter_mut().zip(&dx_fwd[t]).zip(&dx_bwd[len - 1 - t]) {
                *d = a + b;
            }
        }
        dx
    }
}

impl Parameters for BiLstm {
    fn tensors(&self) -> Vec<(String, &Tensor2)> {
        let mut v = prefixed("fwd", self.fwd.tensors());
        v.extend(prefixed("bwd", self.bwd.tensors()));
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut v = self.fwd.tensors_mut();
        v.extend(self.bwd.tensors_mut());
        v
    }
}

/// Runs a bidirectional LSTM over the first `len` rows of `seq`.
pub fn bilstm_forward(seq: &Tensor2, params: &BiLstm, len: usize) -> Result<Tensor2> {
    params.forward(seq, len).map(|(out, _)| out)
}
