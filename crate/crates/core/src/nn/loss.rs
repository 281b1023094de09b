use super::{NnError, Result};
use crate::tensor::Tensor;

/// Mean softmax cross-entropy over a `[batch, classes]` logit matrix.
///
/// Returns the loss and its gradient `(softmax − onehot) / batch`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    if logits.shape().len() != 2 || logits.batch() != labels.len() {
        return Err(NnError::InputShape {
            layer: "softmax_cross_entropy",
            expected: format!("[{}, classes]", labels.len()),
            got: logits.shape().to_vec(),
        });
    }
    let (batch, classes) = (logits.batch(), logits.shape()[1]);
    let mut grad = vec![0.0; batch * classes];
    let mut total = 0.0;
    for (row, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(NnError::Label { row, label, classes });
        }
        let z = logits.sample(row);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = z.iter().map(|v| (v - max).exp()).sum();
        let log_norm = max + sum_exp.ln();
        total += log_norm - z[label];
        let g = &mut grad[row * classes..(row + 1) * classes];
        for (c, gc) in g.iter_mut().enumerate() {
            let p = (z[c] - log_norm).exp();
            *gc = (p - if c == label { 1.0 } else { 0.0 }) / batch as f64;
        }
    }
    Ok((total / batch as f64, Tensor::matrix(batch, classes, grad)?))
}

/// Index of the largest logit, lowest index on ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_log_classes() {
        let logits = Tensor::matrix(2, 4, vec![0.3; 8]).unwrap();
        let (loss, _) = softmax_cross_entropy(&logits, &[0, 3]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn confident_correct_logits_give_small_loss() {
        let logits = Tensor::matrix(1, 3, vec![-500.0, 800.0, 0.0]).unwrap();
        let (loss, grad) = softmax_cross_entropy(&logits, &[1]).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(grad.all_finite());
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let logits = Tensor::matrix(3, 3, vec![1.0, -2.0, 0.5, 3.0, 3.0, 3.0, -1.0, 10.0, 2.0]).unwrap();
        let (_, grad) = softmax_cross_entropy(&logits, &[0, 2, 1]).unwrap();
        for r in 0..3 {
            assert!(grad.sample(r).iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let base = vec![0.2, -1.0, 0.7, 1.5, 0.1, -0.4];
        let labels = [2, 0];
        let (_, grad) = softmax_cross_entropy(&Tensor::matrix(2, 3, base.clone()).unwrap(), &labels).unwrap();
        let fd = crate::grad::finite_diff_check(
            |p| softmax_cross_entropy(&Tensor::matrix(2, 3, p.to_vec()).unwrap(), &labels).map(|r| r.0),
            &base,
            1e-5,
        )
        .unwrap();
        for (a, b) in grad.data().iter().zip(&fd) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn label_out_of_range() {
        let logits = Tensor::matrix(1, 2, vec![0.0, 0.0]).unwrap();
        assert!(matches!(softmax_cross_entropy(&logits, &[2]), Err(NnError::Label { .. })));
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }
}
