use super::tensor::{gemv_acc, gemv_t_acc, outer_acc, Parameters, Tensor2};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// `y = x Wᵀ + b` for a batch `x` of shape `B x I`, `W` of shape `O x I`.
pub fn dense_forward(x: &Tensor2, w: &Tensor2, b: &[f64]) -> Result<Tensor2> {
    if x.cols != w.cols || b.len() != w.rows {
        return Err(Error::Shape(format!(
            "dense: input {}x{}, weight {}x{}, bias {}",
            x.rows,
            x.cols,
            w.rows,
            w.cols,
            b.len()
        )));
    }
    let mut y = Tensor2::zeros(x.rows, w.rows);
    for r in 0..x.rows {
        let out = y.row_mut(r);
        out.copy_from_slice(b);
        gemv_acc(w, x.row(r), out);
    }
    Ok(y)
}

/// Fully connected layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Tensor2,
    pub bias: Tensor2,
}

impl Dense {
    pub fn new(input: usize, output: usize, rng: &mut SplitMix64) -> Self {
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        Self {
            weight: Tensor2::uniform(output, input, bound, rng),
            bias: Tensor2::uniform(1, output, bound, rng),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Tensor2::zeros(output, input),
            bias: Tensor2::zeros(1, output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows
    }

    pub fn forward(&self, x: &Tensor2) -> Result<Tensor2> {
        dense_forward(x, &self.weight, &self.bias.data)
    }

    pub fn forward_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.bias.data.clone();
        gemv_acc(&self.weight, x, &mut y);
        y
    }

    /// Accumulates parameter gradients into `grads` and, when given, the
    /// input gradient into `dx`.
    pub fn backward_vec(&self, x: &[f64], dy: &[f64], grads: &mut Dense, dx: Option<&mut [f64]>) {
        outer_acc(&mut grads.weight, dy, x);
        for (g, d) in grads.bias.data.iter_mut().zip(dy) {
            *g += d;
        }
        if let Some(dx) = dx {
            gemv_t_acc(&self.weight, dy, dx);
        }
    }

    pub fn backward(&self, x: &Tensor2, dy: &Tensor2, grads: &mut Dense) -> Tensor2 {
        let mut dx = Tensor2::zeros(x.rows, x.cols);
        for r in 0..x.rows {
            self.backward_vec(x.row(r), dy.row(r), grads, Some(dx.row_mut(r)));
        }
        dx
    }
}

impl Parameters for Dense {
    fn tensors(&self) -> Vec<(String, &Tensor2)> {
        vec![("weight".into(), &self.weight), ("bias".into(), &self.bias)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![&mut self.weight, &mut self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weight() {
        let x = Tensor2::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap();
        let w = Tensor2::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(dense_forward(&x, &w, &[0.0, 0.0]).unwrap(), x);
    }

    #[test]
    fn hand_example() {
        let x = Tensor2::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let w = Tensor2::from_rows(&[vec![1.0, 1.0]]).unwrap();
        assert_eq!(dense_forward(&x, &w, &[0.5]).unwrap().data, vec![3.5]);
    }

    #[test]
    fn empty_batch_and_mismatch() {
        let w = Tensor2::zeros(4, 3);
        let y = dense_forward(&Tensor2::zeros(0, 3), &w, &[0.0; 4]).unwrap();
        assert_eq!(y.shape(), (0, 4));
        assert!(dense_forward(&Tensor2::zeros(1, 2), &w, &[0.0; 4]).is_err());
        assert!(dense_forward(&Tensor2::zeros(1, 3), &w, &[0.0; 3]).is_err());
    }
}
