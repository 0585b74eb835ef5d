use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Classifier, LayerGrad, Model};
use crate::error::{Error, Result};
use crate::tensor::Record;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 50,
            batch_size: 16,
            seed: 42,
        }
    }
}

/// Cross-entropy loss and parameter gradients for one labelled record.
fn record_grads(model: &Model, record: &Record, label: usize) -> (f64, Vec<LayerGrad>) {
    let trace = model.trace(record.values());
    let logits = trace.last().expect("trace has output").data();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    let loss = total.ln() + max - logits[label];
    let mut dlogits: Vec<f64> = exp.iter().map(|e| e / total).collect();
    dlogits[label] -= 1.0;

    let mut grads: Vec<LayerGrad> = model.layers().iter().map(LayerGrad::zeros_like).collect();
    model.backprop(&trace, dlogits, Some(&mut grads));
    (loss, grads)
}

impl Model {
    /// Minibatch SGD on softmax cross-entropy. Deterministic for a given seed.
    pub fn train(&self, records: &[Record], config: &TrainConfig) -> Result<Model> {
        if config.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        let mut labels = Vec::with_capacity(records.len());
        for r in records {
            let label = r
                .label
                .ok_or_else(|| Error::invalid(format!("record {} has no label", r.id)))?;
            if label >= self.n_classes() {
                return Err(Error::ClassIndex {
                    index: label,
                    n_classes: self.n_classes(),
                });
            }
            r.values()
                .ensure_shape(&[self.n_channels(), self.input_length()])?;
            labels.push(label);
        }

        let mut model = self.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..records.len()).collect();
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for (bi, batch) in order.chunks(config.batch_size).enumerate() {
                // Per-record work in parallel, reduction in batch order.
                let parts: Vec<(f64, Vec<LayerGrad>)> = batch
                    .par_iter()
                    .map(|&i| record_grads(&model, &records[i], labels[i]))
                    .collect();
                let mut sum: Vec<LayerGrad> =
                    model.layers().iter().map(LayerGrad::zeros_like).collect();
                let mut loss = 0.0;
                for (l, g) in &parts {
                    loss += l;
                    for (acc, gl) in sum.iter_mut().zip(g) {
                        acc.add_assign(gl);
                    }
                }
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "training loss at epoch {epoch}, batch {bi}"
                    )));
                }
                epoch_loss += loss;
                let step = config.learning_rate / batch.len() as f64;
                for (layer, g) in model.layers_mut().iter_mut().zip(&sum) {
                    if let Some((w, b)) = layer.params_mut() {
                        for (p, d) in w.iter_mut().zip(&g.weights) {
                            *p -= step * d;
                        }
                        for (p, d) in b.iter_mut().zip(&g.bias) {
                            *p -= step * d;
                        }
                    }
                }
                if model.layers().iter().any(|l| {
                    l.params()
                        .is_some_and(|(w, b)| w.iter().chain(b).any(|v| !v.is_finite()))
                }) {
                    return Err(Error::NonFinite(format!(
                        "parameters diverged at epoch {epoch}, batch {bi}"
                    )));
                }
            }
            log::debug!(
                "epoch {epoch}: mean loss {:.6}",
                epoch_loss / records.len().max(1) as f64
            );
        }
        Ok(model)
    }
}

/// Fraction of labelled records whose arg-max logit equals the label.
pub fn accuracy(model: &Model, records: &[Record]) -> Result<f64> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for r in records {
        if let Some(label) = r.label {
            total += 1;
            if model.predict(r)? == label {
                correct += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::invalid("no labelled records"));
    }
    Ok(correct as f64 / total as f64)
}
