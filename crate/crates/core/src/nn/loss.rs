use super::tensor::Tensor2;
use crate::error::{Error, Result};

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean softmax cross-entropy over the batch and its gradient
/// `(softmax - onehot) / B` with respect to the logits.
pub fn softmax_xent(logits: &Tensor2, labels: &[usize]) -> Result<(f64, Tensor2)> {
    if logits.rows == 0 {
        return Err(Error::Shape("softmax cross-entropy over an empty batch".into()));
    }
    if labels.len() != logits.rows {
        return Err(Error::Shape(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows
        )));
    }
    let b = logits.rows as f64;
    let mut grad = Tensor2::zeros(logits.rows, logits.cols);
    let mut loss = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        if y >= logits.cols {
            return Err(Error::Shape(format!("label {y} out of range for {} classes", logits.cols)));
        }
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = row.iter().map(|&l| (l - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - row[y];
        for (g, &l) in grad.row_mut(r).iter_mut().zip(row) {
            *g = (l - log_sum).exp() / b;
        }
        grad.row_mut(r)[y] -= 1.0 / b;
    }
    Ok((loss / b, grad))
}
