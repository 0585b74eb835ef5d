//! Layer kinds and their forward/backward kernels.
//!
//! Every intermediate activation is a `[rows, maps, time]` tensor. Rows start
//! out as input channels; only a spatiotemporal convolution mixes them.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    /// Subgradient 0 at the kink.
    Relu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the layer output `y`.
    fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Convolution over `[rows, maps, time]`. A temporal convolution has
/// `kernel_channels == 1` and applies the same kernel bank to every row.
///
/// Weights are laid out `[out_maps, in_maps, kernel_channels, kernel_length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv {
    pub in_maps: usize,
    pub out_maps: usize,
    pub kernel_channels: usize,
    pub kernel_length: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv {
    pub(crate) fn widx(&self, o: usize, i: usize, c: usize, j: usize) -> usize {
        ((o * self.in_maps + i) * self.kernel_channels + c) * self.kernel_length + j
    }

    pub(crate) fn weight_len(&self) -> usize {
        self.out_maps * self.in_maps * self.kernel_channels * self.kernel_length
    }
}

/// Fully connected layer over the flattened `[rows, maps, time]` input.
/// Weights are laid out `[out_features, in_features]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_features: usize,
    pub out_features: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    TemporalConv(Conv),
    SpatiotemporalConv(Conv),
    Activation(Activation),
    /// Non-overlapping mean over `window` timepoints; a trailing remainder is dropped.
    AveragePool {
        window: usize,
    },
    Dense(Dense),
}

/// Parameter gradients for one layer (empty for parameter-free layers).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerGrad {
    pub(crate) fn zeros_like(layer: &Layer) -> Self {
        match layer.params() {
            Some((w, b)) => LayerGrad {
                weights: vec![0.0; w.len()],
                bias: vec![0.0; b.len()],
            },
            None => LayerGrad::default(),
        }
    }

    pub(crate) fn add_assign(&mut self, other: &LayerGrad) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::TemporalConv(_) => "temporal-conv",
            Layer::SpatiotemporalConv(_) => "spatiotemporal-conv",
            Layer::Activation(_) => "activation",
            Layer::AveragePool { .. } => "average-pool",
            Layer::Dense(_) => "dense",
        }
    }

    pub fn params(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Layer::TemporalConv(c) | Layer::SpatiotemporalConv(c) => Some((&c.weights, &c.bias)),
            Layer::Dense(d) => Some((&d.weights, &d.bias)),
            _ => None,
        }
    }

    pub(crate) fn params_mut(&mut self) -> Option<(&mut Vec<f64>, &mut Vec<f64>)> {
        match self {
            Layer::TemporalConv(c) | Layer::SpatiotemporalConv(c) => {
                Some((&mut c.weights, &mut c.bias))
            }
            Layer::Dense(d) => Some((&mut d.weights, &mut d.bias)),
            _ => None,
        }
    }

    /// Output shape for a `[rows, maps, time]` input, validating parameters.
    pub fn output_shape(&self, input: [usize; 3]) -> Result<[usize; 3]> {
        let [rows, maps, time] = input;
        let bad = |msg: String| Err(Error::InvalidModel(format!("{} layer: {msg}", self.kind())));
        match self {
            Layer::TemporalConv(c) | Layer::SpatiotemporalConv(c) => {
                let spatial = matches!(self, Layer::SpatiotemporalConv(_));
                if spatial && c.kernel_channels < 2 {
                    return bad("kernel_channels must be at least 2".into());
                }
                if !spatial && c.kernel_channels != 1 {
                    return bad("kernel_channels must be 1".into());
                }
                if c.in_maps != maps {
                    return bad(format!("expects {} input maps, got {maps}", c.in_maps));
                }
                if c.out_maps == 0 || c.kernel_length == 0 {
                    return bad("out_maps and kernel_length must be positive".into());
                }
                if c.kernel_length > time || c.kernel_channels > rows {
                    return bad(format!(
                        "kernel {}x{} larger than input {rows}x{time}",
                        c.kernel_channels, c.kernel_length
                    ));
                }
                if c.weights.len() != c.weight_len() || c.bias.len() != c.out_maps {
                    return bad("weight or bias length does not match its shape".into());
                }
                Ok([
                    rows - c.kernel_channels + 1,
                    c.out_maps,
                    time - c.kernel_length + 1,
                ])
            }
            Layer::Activation(_) => Ok(input),
            Layer::AveragePool { window } => {
                if *window == 0 || *window > time {
                    return bad(format!("window {window} invalid for length {time}"));
                }
                Ok([rows, maps, time / window])
            }
            Layer::Dense(d) => {
                if d.in_features != rows * maps * time {
                    return bad(format!(
                        "expects {} inputs, got {}",
                        d.in_features,
                        rows * maps * time
                    ));
                }
                if d.out_features == 0
                    || d.weights.len() != d.in_features * d.out_features
                    || d.bias.len() != d.out_features
                {
                    return bad("weight or bias length does not match its shape".into());
                }
                Ok([1, 1, d.out_features])
            }
        }
    }

    /// Forward pass. `input` must already have a shape accepted by [`Layer::output_shape`].
    pub(crate) fn forward(&self, input: &Tensor) -> Tensor {
        let [rows, maps, time] = dims(input);
        match self {
            Layer::TemporalConv(c) | Layer::SpatiotemporalConv(c) => {
                let out_rows = rows - c.kernel_channels + 1;
                let out_time = time - c.kernel_length + 1;
                let x = input.data();
                let mut out = vec![0.0; out_rows * c.out_maps * out_time];
                for r in 0..out_rows {
                    for o in 0..c.out_maps {
                        let dst = &mut out[(r * c.out_maps + o) * out_time..][..out_time];
                        dst.fill(c.bias[o]);
                        for i in 0..c.in_maps {
                            for kc in 0..c.kernel_channels {
                                let src = &x[((r + kc) * maps + i) * time..][..time];
                                for j in 0..c.kernel_length {
                                    let w = c.weights[c.widx(o, i, kc, j)];
                                    for (d, s) in dst.iter_mut().zip(&src[j..j + out_time]) {
                                        *d += w * s;
                                    }
                                }
                            }
                        }
                    }
                }
                tensor3([out_rows, c.out_maps, out_time], out)
            }
            Layer::Activation(a) => {
                let data = input.data().iter().map(|&v| a.apply(v)).collect();
                tensor3([rows, maps, time], data)
            }
            Layer::AveragePool { window } => {
                let out_time = time / window;
                let scale = 1.0 / *window as f64;
                let mut out = Vec::with_capacity(rows * maps * out_time);
                for series in input.data().chunks_exact(time) {
                    for t in 0..out_time {
                        let s: f64 = series[t * window..(t + 1) * window].iter().sum();
                        out.push(s * scale);
                    }
                }
                tensor3([rows, maps, out_time], out)
            }
            Layer::Dense(d) => {
                let x = input.data();
                let out = (0..d.out_features)
                    .map(|o| {
                        let w = &d.weights[o * d.in_features..][..d.in_features];
                        d.bias[o] + dot(w, x)
                    })
                    .collect();
                tensor3([1, 1, d.out_features], out)
            }
        }
    }

    /// Backward pass: returns the gradient with respect to `input` and, when
    /// `grad` is given, accumulates parameter gradients into it.
    pub(crate) fn backward(
        &self,
        input: &Tensor,
        output: &Tensor,
        grad_out: &Tensor,
        grad: Option<&mut LayerGrad>,
    ) -> Tensor {
        let [rows, maps, time] = dims(input);
        let g = grad_out.data();
        match self {
            Layer::TemporalConv(c) | Layer::SpatiotemporalConv(c) => {
                let out_rows = rows - c.kernel_channels + 1;
                let out_time = time - c.kernel_length + 1;
                let x = input.data();
                let mut gin = vec![0.0; x.len()];
                let mut grad = grad;
                for r in 0..out_rows {
                    for o in 0..c.out_maps {
                        let go = &g[(r * c.out_maps + o) * out_time..][..out_time];
                        if let Some(pg) = grad.as_deref_mut() {
                            pg.bias[o] += go.iter().sum::<f64>();
                        }
                        for i in 0..c.in_maps {
                            for kc in 0..c.kernel_channels {
                                let base = ((r + kc) * maps + i) * time;
                                for j in 0..c.kernel_length {
                                    let wi = c.widx(o, i, kc, j);
                                    let w = c.weights[wi];
                                    let dst = &mut gin[base + j..base + j + out_time];
                                    for (d, gv) in dst.iter_mut().zip(go) {
                                        *d += w * gv;
                                    }
                                    if let Some(pg) = grad.as_deref_mut() {
                                        pg.weights[wi] +=
                                            dot(&x[base + j..base + j + out_time], go);
                                    }
                                }
                            }
                        }
                    }
                }
                tensor3([rows, maps, time], gin)
            }
            Layer::Activation(a) => {
                let data = output
                    .data()
                    .iter()
                    .zip(g)
                    .map(|(&y, &gv)| gv * a.derivative(y))
                    .collect();
                tensor3([rows, maps, time], data)
            }
            Layer::AveragePool { window } => {
                let out_time = time / window;
                let scale = 1.0 / *window as f64;
                let mut gin = vec![0.0; input.len()];
                for (series, go) in gin.chunks_exact_mut(time).zip(g.chunks_exact(out_time)) {
                    for (t, gv) in go.iter().enumerate() {
                        series[t * window..(t + 1) * window].fill(gv * scale);
                    }
                }
                tensor3([rows, maps, time], gin)
            }
            Layer::Dense(d) => {
                let x = input.data();
                let mut gin = vec![0.0; d.in_features];
                let mut grad = grad;
                for (o, &gv) in g.iter().enumerate() {
                    let w = &d.weights[o * d.in_features..][..d.in_features];
                    for (dst, wv) in gin.iter_mut().zip(w) {
                        *dst += wv * gv;
                    }
                    if let Some(pg) = grad.as_deref_mut() {
                        pg.bias[o] += gv;
                        let row = &mut pg.weights[o * d.in_features..][..d.in_features];
                        for (dst, xv) in row.iter_mut().zip(x) {
                            *dst += xv * gv;
                        }
                    }
                }
                tensor3([rows, maps, time], gin)
            }
        }
    }
}

fn dims(t: &Tensor) -> [usize; 3] {
    let s = t.shape();
    [s[0], s[1], s[2]]
}

fn tensor3(shape: [usize; 3], data: Vec<f64>) -> Tensor {
    Tensor::new(shape.to_vec(), data).expect("layer kernels produce consistent shapes")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
