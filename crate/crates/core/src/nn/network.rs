//! Feed-forward stacks shared by the MLP and the GCN.
//!
//! Layer `k` computes `Z_k = P(H_{k-1} W_k) + b_k` where `P` is either the
//! identity (MLP) or a sparse product with the normalized adjacency (GCN).
//! Hidden layers then apply ReLU and inverted dropout; the last layer emits
//! logits.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NormalizedAdjacency;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    /// `in × out`
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

impl Linear {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot(input: usize, output: usize, rng: &mut StreamRng) -> Self {
        let limit = (6.0 / (input + output) as f64).sqrt();
        let values = (0..input * output)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self {
            weight: DenseMatrix::from_vec(input, output, values).expect("sized above"),
            bias: vec![0.0; output],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.cols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Linear>,
    pub dropout: f64,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub logits: DenseMatrix,
    inputs: Vec<DenseMatrix>,
    pre_activations: Vec<DenseMatrix>,
    dropout_scales: Vec<Option<Vec<f64>>>,
}

/// Per-layer `(dW, db)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(DenseMatrix, Vec<f64>)>,
}

impl Gradients {
    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.values().iter().chain(b.iter()).copied())
    }
}

impl Network {
    /// `hidden_layers` hidden layers of width `hidden_size`, then an output
    /// layer with `num_classes` logits.
    pub fn new(
        input_dim: usize,
        hidden_size: usize,
        hidden_layers: usize,
        num_classes: usize,
        dropout: f64,
        rng: &mut StreamRng,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::invalid(format!("dropout {dropout} outside [0, 1)")));
        }
        if input_dim == 0 || num_classes == 0 || (hidden_layers > 0 && hidden_size == 0) {
            return Err(Error::invalid("network dimensions must be positive"));
        }
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat_n(hidden_size, hidden_layers));
        dims.push(num_classes);
        let layers = dims
            .windows(2)
            .map(|w| Linear::glorot(w[0], w[1], rng))
            .collect();
        Ok(Self { layers, dropout })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Linear::output_dim)
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.values().len() + l.bias.len())
            .sum()
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.values_mut().iter_mut().chain(l.bias.iter_mut()))
    }

    /// Forward pass. `dropout_rng` switches on training mode.
    pub fn forward(
        &self,
        features: &DenseMatrix,
        adjacency: Option<&NormalizedAdjacency>,
        mut dropout_rng: Option<&mut StreamRng>,
    ) -> Result<ForwardPass> {
        if features.cols() != self.input_dim() {
            return Err(Error::shape(format!(
                "{} input features for a network expecting {}",
                features.cols(),
                self.input_dim()
            )));
        }
        if let Some(a) = adjacency {
            if a.dim() != features.rows() {
                return Err(Error::shape(format!(
                    "adjacency of {} nodes for {} feature rows",
                    a.dim(),
                    features.rows()
                )));
            }
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(last);
        let mut dropout_scales = Vec::with_capacity(last);
        let mut h = features.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            let projected = h.matmul(&layer.weight)?;
            let mut z = match adjacency {
                Some(a) => a.matmul(&projected)?,
                None => projected,
            };
            z.add_row_vector(&layer.bias)?;
            inputs.push(h);
            if k == last {
                return Ok(ForwardPass {
                    logits: z,
                    inputs,
                    pre_activations,
                    dropout_scales,
                });
            }
            let mut next = z.clone();
            next.map_inplace(|x| x.max(0.0));
            let scales = match dropout_rng.as_deref_mut() {
                Some(rng) if self.dropout > 0.0 => {
                    let keep = 1.0 / (1.0 - self.dropout);
                    let scales: Vec<f64> = (0..next.values().len())
                        .map(|_| if rng.gen::<f64>() < self.dropout { 0.0 } else { keep })
                        .collect();
                    for (x, s) in next.values_mut().iter_mut().zip(&scales) {
                        *x *= s;
                    }
                    Some(scales)
                }
                _ => None,
            };
            pre_activations.push(z);
            dropout_scales.push(scales);
            h = next;
        }
        unreachable!("a network has at least one layer")
    }

    /// Evaluation-mode logits.
    pub fn logits(&self, features: &DenseMatrix, adjacency: Option<&NormalizedAdjacency>) -> Result<DenseMatrix> {
        Ok(self.forward(features, adjacency, None)?.logits)
    }

    /// Gradients of a scalar loss given `d loss / d logits`.
    pub fn backward(
        &self,
        pass: &ForwardPass,
        grad_logits: DenseMatrix,
        adjacency: Option<&NormalizedAdjacency>,
    ) -> Result<Gradients> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut dz = grad_logits;
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let db = dz.column_sums();
            // the normalized adjacency is symmetric, so Ãᵀ = Ã
            let dp = match adjacency {
                Some(a) => a.matmul(&dz)?,
                None => dz,
            };
            let dw = pass.inputs[k].t_matmul(&dp)?;
            grads.push((dw, db));
            if k == 0 {
                break;
            }
            let mut dh = dp.matmul_t(&layer.weight)?;
            let z = &pass.pre_activations[k - 1];
            let scales = &pass.dropout_scales[k - 1];
            for (i, g) in dh.values_mut().iter_mut().enumerate() {
                let mut factor = if z.values()[i] > 0.0 { 1.0 } else { 0.0 };
                if let Some(s) = scales {
                    factor *= s[i];
                }
                *g *= factor;
            }
            dz = dh;
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let net: Network = serde_json::from_str(&text)?;
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid("checkpoint has no layers"));
        }
        for (i, w) in self.layers.windows(2).enumerate() {
            if w[0].output_dim() != w[1].input_dim() {
                return Err(Error::shape(format!("layers {i} and {} do not chain", i + 1)));
            }
        }
        if self.layers.iter().any(|l| l.bias.len() != l.output_dim()) {
            return Err(Error::shape("bias length differs from layer width"));
        }
        Ok(())
    }
}

/// Fully connected classifier: ReLU and dropout on every hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub network: Network,
}

impl MlpModel {
    pub fn logits(&self, features: &DenseMatrix) -> Result<DenseMatrix> {
        self.network.logits(features, None)
    }

    pub fn forward(&self, features: &DenseMatrix, training: bool, rng: &mut StreamRng) -> Result<DenseMatrix> {
        Ok(self
            .network
            .forward(features, None, training.then_some(rng))?
            .logits)
    }

    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }
}

/// Graph convolutional classifier; every layer propagates over the
/// normalized adjacency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnModel {
    pub network: Network,
}

impl GcnModel {
    pub fn logits(&self, adjacency: &NormalizedAdjacency, features: &DenseMatrix) -> Result<DenseMatrix> {
        self.network.logits(features, Some(adjacency))
    }

    pub fn forward(
        &self,
        adjacency: &NormalizedAdjacency,
        features: &DenseMatrix,
        training: bool,
        rng: &mut StreamRng,
    ) -> Result<DenseMatrix> {
        Ok(self
            .network
            .forward(features, Some(adjacency), training.then_some(rng))?
            .logits)
    }
}
