use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Micro-averaged F1: harmonic mean of micro precision and micro recall,
/// with per-class TP/FP/FN summed over all classes.
pub fn micro_f1(predictions: &[usize], truth: &[usize], num_classes: usize) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("F1 of zero samples"));
    }
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fneg = vec![0usize; num_classes];
    for (&p, &t) in predictions.iter().zip(truth) {
        if p >= num_classes || t >= num_classes {
            return Err(Error::invalid(format!("class id outside [0, {num_classes})")));
        }
        if p == t {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let tp: usize = tp.iter().sum();
    let fp: usize = fp.iter().sum();
    let fneg: usize = fneg.iter().sum();
    Ok(harmonic_f1(tp, fp, fneg))
}

fn harmonic_f1(tp: usize, fp: usize, fneg: usize) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fneg) as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Binary F1 with the rarer class of `truth` as the positive class (class 1
/// on a tie).
pub fn rare_f1(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("F1 of zero samples"));
    }
    if predictions.iter().chain(truth).any(|&c| c > 1) {
        return Err(Error::invalid("rare-class F1 needs binary labels"));
    }
    let ones = truth.iter().filter(|&&t| t == 1).count();
    let zeros = truth.len() - ones;
    let positive = if zeros < ones { 0 } else { 1 };
    let (mut tp, mut fp, mut fneg) = (0, 0, 0);
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p == positive, t == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    Ok(harmonic_f1(tp, fp, fneg))
}

pub fn accuracy(predictions: &[usize], truth: &[usize]) -> f64 {
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len().max(1) as f64
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Self {
            mean,
            std: var.sqrt(),
            n,
        }
    }
}
