#![allow(dead_code)]

pub mod oracles;

use attribkit::model::{Activation, Architecture, Dense, Layer, ModelConfig};
use attribkit::{Classifier, Model, Record, Result, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `f(x) = Σ w_i x_i` over channels of length 1, as a real dense-only model.
pub fn linear_model(weights: &[f64]) -> Model {
    let n = weights.len();
    Model::new(
        Architecture::Temporal,
        n,
        1,
        1,
        vec![Layer::Dense(Dense {
            in_features: n,
            out_features: 1,
            weights: weights.to_vec(),
            bias: vec![0.0],
        })],
    )
    .unwrap()
}

/// `f(x) = x_1 · x_2` on two channels of length 1.
pub struct Product;

impl Classifier for Product {
    fn n_channels(&self) -> usize {
        2
    }
    fn input_length(&self) -> usize {
        1
    }
    fn n_classes(&self) -> usize {
        1
    }
    fn logit(&self, input: &Tensor, class_index: usize) -> Result<f64> {
        self.check_input(input, class_index)?;
        Ok(input.data()[0] * input.data()[1])
    }
    fn logit_gradient(&self, input: &Tensor, class_index: usize) -> Result<Tensor> {
        self.check_input(input, class_index)?;
        let d = input.data();
        Tensor::new(vec![2, 1], vec![d[1], d[0]])
    }
}

pub fn point(values: &[f64]) -> Record {
    let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    Record::from_rows("x", None, &rows).unwrap()
}

pub fn column(values: &[f64]) -> Tensor {
    Tensor::new(vec![values.len(), 1], values.to_vec()).unwrap()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, n: usize, l: usize) -> Tensor {
    let data = (0..n * l).map(|_| rng.random_range(-1.0..1.5)).collect();
    Tensor::new(vec![n, l], data).unwrap()
}

pub fn random_record(rng: &mut ChaCha8Rng, n: usize, l: usize) -> Record {
    Record::new("r", None, random_tensor(rng, n, l)).unwrap()
}

pub fn temporal(n: usize, l: usize, seed: u64) -> Model {
    Model::init(n, l, 2, &ModelConfig::default(), seed).unwrap()
}

pub fn spatiotemporal(n: usize, l: usize, seed: u64) -> Model {
    Model::init(n, l, 2, &ModelConfig::spatiotemporal(), seed).unwrap()
}

pub fn relu_temporal(n: usize, l: usize, seed: u64) -> Model {
    let config = ModelConfig {
        activation: Activation::Relu,
        ..ModelConfig::default()
    };
    Model::init(n, l, 2, &config, seed).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
