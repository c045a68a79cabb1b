use crate::error::{Error, Result};
use crate::matrix::{softmax_in_place, DenseMatrix};

/// Mean cross-entropy of `logits` over `rows`, and its gradient with respect
/// to every logit (zero outside `rows`).
pub fn cross_entropy(logits: &DenseMatrix, labels: &[usize], rows: &[usize]) -> Result<(f64, DenseMatrix)> {
    if rows.is_empty() {
        return Err(Error::invalid("cross-entropy over zero rows"));
    }
    let classes = logits.cols();
    let scale = 1.0 / rows.len() as f64;
    let mut grad = DenseMatrix::zeros(logits.rows(), classes);
    let mut loss = 0.0;
    for &r in rows {
        let label = labels[r];
        if label >= classes {
            return Err(Error::invalid(format!("label {label} with {classes} logits")));
        }
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = row.iter().map(|x| (x - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - row[label];
        let g = grad.row_mut(r);
        g.copy_from_slice(row);
        softmax_in_place(g);
        g[label] -= 1.0;
        g.iter_mut().for_each(|x| *x *= scale);
    }
    Ok((loss * scale, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_prediction_costs_ln_c() {
        for c in 1..6 {
            let logits = DenseMatrix::zeros(2, c);
            let (loss, _) = cross_entropy(&logits, &[0, c - 1], &[0, 1]).unwrap();
            assert!((loss - (c as f64).ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let logits = DenseMatrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![0.0, 0.0, 3.0]]).unwrap();
        let (_, g) = cross_entropy(&logits, &[2, 0], &[0]).unwrap();
        assert!(g.row(0).iter().sum::<f64>().abs() < 1e-15);
        assert_eq!(g.row(1), &[0.0, 0.0, 0.0]);
    }
}
