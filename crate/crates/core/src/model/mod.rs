//! Differentiable convolutional classifiers over multichannel time series.
//!
//! A [`Model`] is an ordered list of [`Layer`]s ending in a dense layer that
//! produces pre-softmax logits. Temporal models process every input channel
//! with the same kernel bank and only combine channels in the final dense
//! layer, so the logit is a sum of per-channel terms. Spatiotemporal models
//! use kernels that span several channels.

mod io;
mod layer;
mod train;

pub(crate) use io::{format_real, parse_reals};
pub use io::{load_model, save_model};
pub use layer::{Activation, Conv, Dense, Layer, LayerGrad};
pub use train::{accuracy, TrainConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Record, Tensor};

/// Anything that maps a `[n_channels, length]` input to class logits and
/// can differentiate a logit with respect to the input.
pub trait Classifier: Sync {
    fn n_channels(&self) -> usize;
    fn input_length(&self) -> usize;
    fn n_classes(&self) -> usize;

    /// Pre-softmax logit of `class_index`.
    fn logit(&self, input: &Tensor, class_index: usize) -> Result<f64>;

    /// Gradient of the `class_index` logit, shaped like `input`.
    fn logit_gradient(&self, input: &Tensor, class_index: usize) -> Result<Tensor>;

    fn check_input(&self, input: &Tensor, class_index: usize) -> Result<()> {
        input.ensure_shape(&[self.n_channels(), self.input_length()])?;
        if class_index >= self.n_classes() {
            return Err(Error::ClassIndex {
                index: class_index,
                n_classes: self.n_classes(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Temporal,
    Spatiotemporal,
}

impl Architecture {
    pub fn tag(self) -> &'static str {
        match self {
            Architecture::Temporal => "temporal",
            Architecture::Spatiotemporal => "spatiotemporal",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "temporal" => Some(Architecture::Temporal),
            "spatiotemporal" => Some(Architecture::Spatiotemporal),
            _ => None,
        }
    }
}

/// `∂f_c/∂z_ik` for every input entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub values: Tensor,
}

/// Layout knobs for [`Model::init`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub filters: usize,
    pub first_kernel: usize,
    pub second_kernel: usize,
    pub pool_window: usize,
    pub activation: Activation,
    /// Channel extent of the spatiotemporal kernel; `None` spans every channel.
    pub kernel_channels: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::Temporal,
            filters: 4,
            first_kernel: 5,
            second_kernel: 3,
            pool_window: 2,
            activation: Activation::Tanh,
            kernel_channels: None,
        }
    }
}

impl ModelConfig {
    pub fn spatiotemporal() -> Self {
        Self {
            architecture: Architecture::Spatiotemporal,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    architecture: Architecture,
    n_channels: usize,
    input_length: usize,
    n_classes: usize,
    layers: Vec<Layer>,
}

impl Model {
    /// Validates that the layers compose and respect the architecture tag.
    pub fn new(
        architecture: Architecture,
        n_channels: usize,
        input_length: usize,
        n_classes: usize,
        layers: Vec<Layer>,
    ) -> Result<Self> {
        if n_channels == 0 || input_length == 0 || n_classes == 0 {
            return Err(Error::InvalidModel(
                "n_channels, input_length and n_classes must be positive".into(),
            ));
        }
        match layers.last() {
            Some(Layer::Dense(_)) => {}
            _ => return Err(Error::InvalidModel("final layer must be dense".into())),
        }
        if layers[..layers.len() - 1]
            .iter()
            .any(|l| matches!(l, Layer::Dense(_)))
        {
            return Err(Error::InvalidModel(
                "dense layers are only allowed last".into(),
            ));
        }
        if architecture == Architecture::Temporal
            && layers
                .iter()
                .any(|l| matches!(l, Layer::SpatiotemporalConv(_)))
        {
            return Err(Error::InvalidModel(
                "temporal models cannot contain spatiotemporal convolutions".into(),
            ));
        }
        for (i, layer) in layers.iter().enumerate() {
            if let Some((w, b)) = layer.params() {
                if w.iter().chain(b).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "layer {i} has non-finite parameters"
                    )));
                }
            }
        }
        let model = Self {
            architecture,
            n_channels,
            input_length,
            n_classes,
            layers,
        };
        let shapes = model.shapes()?;
        if shapes.last() != Some(&[1, 1, n_classes]) {
            return Err(Error::InvalidModel(format!(
                "final dense layer must produce {n_classes} logits"
            )));
        }
        Ok(model)
    }

    /// Seeded initialization, uniform in `±1/√fan_in`.
    ///
    /// Temporal: conv → act → pool → conv → act → global average → dense.
    /// Spatiotemporal replaces the first conv with one spanning channels.
    pub fn init(
        n_channels: usize,
        input_length: usize,
        n_classes: usize,
        config: &ModelConfig,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = config.filters;
        let first = match config.architecture {
            Architecture::Temporal => {
                Layer::TemporalConv(random_conv(&mut rng, 1, f, 1, config.first_kernel))
            }
            Architecture::Spatiotemporal => {
                let kc = config.kernel_channels.unwrap_or(n_channels);
                Layer::SpatiotemporalConv(random_conv(&mut rng, 1, f, kc, config.first_kernel))
            }
        };
        let rows = match &first {
            Layer::SpatiotemporalConv(c) if c.kernel_channels <= n_channels => {
                n_channels - c.kernel_channels + 1
            }
            _ => n_channels,
        };
        let t1 = input_length.saturating_sub(config.first_kernel - 1);
        let t2 = (t1 / config.pool_window.max(1)).saturating_sub(config.second_kernel - 1);
        let layers = vec![
            first,
            Layer::Activation(config.activation),
            Layer::AveragePool {
                window: config.pool_window,
            },
            Layer::TemporalConv(random_conv(&mut rng, f, f, 1, config.second_kernel)),
            Layer::Activation(config.activation),
            Layer::AveragePool { window: t2.max(1) },
            Layer::Dense(random_dense(&mut rng, rows * f, n_classes)),
        ];
        Self::new(
            config.architecture,
            n_channels,
            input_length,
            n_classes,
            layers,
        )
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Activation shape entering each layer, followed by the output shape.
    pub fn shapes(&self) -> Result<Vec<[usize; 3]>> {
        let mut shape = [self.n_channels, 1, self.input_length];
        let mut shapes = vec![shape];
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer
                .output_shape(shape)
                .map_err(|e| Error::InvalidModel(format!("layer {i}: {e}")))?;
            shapes.push(shape);
        }
        Ok(shapes)
    }

    fn as_input(&self, input: &Tensor) -> Tensor {
        Tensor::new(
            vec![self.n_channels, 1, self.input_length],
            input.data().to_vec(),
        )
        .expect("input shape checked by caller")
    }

    /// All layer activations, input first.
    pub(crate) fn trace(&self, input: &Tensor) -> Vec<Tensor> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(self.as_input(input));
        for layer in &self.layers {
            let next = layer.forward(acts.last().expect("non-empty"));
            acts.push(next);
        }
        acts
    }

    /// Backpropagates `grad_logits` through a trace; returns the input gradient.
    pub(crate) fn backprop(
        &self,
        trace: &[Tensor],
        grad_logits: Vec<f64>,
        mut param_grads: Option<&mut [LayerGrad]>,
    ) -> Tensor {
        let mut g =
            Tensor::new(vec![1, 1, grad_logits.len()], grad_logits).expect("logit gradient");
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let pg = param_grads.as_deref_mut().map(|p| &mut p[li]);
            g = layer.backward(&trace[li], &trace[li + 1], &g, pg);
        }
        Tensor::new(vec![self.n_channels, self.input_length], g.into_data())
            .expect("input gradient")
    }

    /// All class logits for an input of shape `[n_channels, input_length]`.
    pub fn logits(&self, input: &Tensor) -> Result<Vec<f64>> {
        input.ensure_shape(&[self.n_channels, self.input_length])?;
        let mut x = self.as_input(input);
        for layer in &self.layers {
            x = layer.forward(&x);
        }
        Ok(x.into_data())
    }

    pub fn predict(&self, record: &Record) -> Result<usize> {
        let logits = self.logits(record.values())?;
        Ok(logits
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > logits[best] { i } else { best }))
    }

    /// Pre-softmax logit `f_c(x)`.
    pub fn forward(&self, record: &Record, class_index: usize) -> Result<f64> {
        self.logit(record.values(), class_index)
    }

    /// Exact reverse-mode gradient of the `class_index` logit.
    pub fn input_gradient(&self, record: &Record, class_index: usize) -> Result<Gradient> {
        Ok(Gradient {
            values: self.logit_gradient(record.values(), class_index)?,
        })
    }

    /// Index of the next parameterized layer after `li`, skipping
    /// activations and pools (which act per map).
    fn consumer_of(&self, li: usize) -> Result<usize> {
        self.layers
            .iter()
            .enumerate()
            .skip(li + 1)
            .find(|(_, l)| l.params().is_some())
            .map(|(i, _)| i)
            .ok_or_else(|| Error::InvalidModel(format!("layer {li} has no consumer")))
    }

    fn conv_at(&self, li: usize) -> Result<&Conv> {
        match self.layers.get(li) {
            Some(Layer::TemporalConv(c) | Layer::SpatiotemporalConv(c)) => Ok(c),
            _ => Err(Error::invalid(format!("layer {li} is not a convolution"))),
        }
    }

    /// Functionally equivalent model whose conv layer `li` has its output
    /// maps reordered: new map `m` is old map `perm[m]`.
    pub fn permute_filters(&self, li: usize, perm: &[usize]) -> Result<Model> {
        let conv = self.conv_at(li)?;
        let n = conv.out_maps;
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::invalid(format!(
                "{perm:?} is not a permutation of {n} maps"
            )));
        }
        let consumer = self.consumer_of(li)?;
        let shapes = self.shapes()?;
        let mut out = self.clone();

        let block = conv.weight_len() / n;
        if let Layer::TemporalConv(c) | Layer::SpatiotemporalConv(c) = &mut out.layers[li] {
            for (new, &old) in perm.iter().enumerate() {
                c.weights[new * block..(new + 1) * block]
                    .copy_from_slice(&conv.weights[old * block..(old + 1) * block]);
                c.bias[new] = conv.bias[old];
            }
        }
        remap_consumer_inputs(
            &self.layers[consumer],
            &mut out.layers[consumer],
            shapes[consumer],
            |m| vec![(perm[m], 1.0)],
            n,
        );
        Ok(out)
    }

    /// Functionally equivalent model with map `filter` of conv layer `li`
    /// duplicated; both copies feed the next layer with halved weights.
    pub fn split_filter(&self, li: usize, filter: usize) -> Result<Model> {
        let conv = self.conv_at(li)?.clone();
        if filter >= conv.out_maps {
            return Err(Error::invalid(format!("filter {filter} out of range")));
        }
        let consumer = self.consumer_of(li)?;
        let shapes = self.shapes()?;
        let n = conv.out_maps;
        let mut out = self.clone();

        let block = conv.weight_len() / n;
        if let Layer::TemporalConv(c) | Layer::SpatiotemporalConv(c) = &mut out.layers[li] {
            c.out_maps += 1;
            c.weights
                .extend_from_slice(&conv.weights[filter * block..(filter + 1) * block]);
            c.bias.push(conv.bias[filter]);
        }
        // Pools sized to the map count do not exist; intermediate layers are per-map.
        remap_consumer_inputs(
            &self.layers[consumer],
            &mut out.layers[consumer],
            shapes[consumer],
            |m| {
                if m == filter || m == n {
                    vec![(filter, 0.5)]
                } else {
                    vec![(m, 1.0)]
                }
            },
            n + 1,
        );
        Model::new(
            out.architecture,
            out.n_channels,
            out.input_length,
            out.n_classes,
            out.layers,
        )
    }

    /// Single model computing `a·f1 + b·f2` on a shared input. Both models
    /// must have the same layer layout; hidden maps are stacked side by side.
    pub fn linear_combination(a: f64, f1: &Model, b: f64, f2: &Model) -> Result<Model> {
        if (f1.n_channels, f1.input_length, f1.n_classes)
            != (f2.n_channels, f2.input_length, f2.n_classes)
            || f1.layers.len() != f2.layers.len()
        {
            return Err(Error::invalid("models differ in shape or depth"));
        }
        let shapes1 = f1.shapes()?;
        let shapes2 = f2.shapes()?;
        let mut shared = true;
        let mut layers = Vec::with_capacity(f1.layers.len());
        for (li, (l1, l2)) in f1.layers.iter().zip(&f2.layers).enumerate() {
            let layer = match (l1, l2) {
                (Layer::TemporalConv(c1), Layer::TemporalConv(c2)) => {
                    Layer::TemporalConv(stack_convs(c1, c2, shared)?)
                }
                (Layer::SpatiotemporalConv(c1), Layer::SpatiotemporalConv(c2)) => {
                    Layer::SpatiotemporalConv(stack_convs(c1, c2, shared)?)
                }
                (Layer::Activation(x), Layer::Activation(y)) if x == y => l1.clone(),
                (Layer::AveragePool { window: x }, Layer::AveragePool { window: y }) if x == y => {
                    l1.clone()
                }
                (Layer::Dense(d1), Layer::Dense(d2)) => {
                    let [rows, m1, time] = shapes1[li];
                    let m2 = shapes2[li][1];
                    let in_features = if shared {
                        d1.in_features
                    } else {
                        rows * (m1 + m2) * time
                    };
                    let mut weights = vec![0.0; in_features * d1.out_features];
                    for o in 0..d1.out_features {
                        let w1 = &d1.weights[o * d1.in_features..][..d1.in_features];
                        let w2 = &d2.weights[o * d2.in_features..][..d2.in_features];
                        let dst = &mut weights[o * in_features..][..in_features];
                        if shared {
                            for (k, d) in dst.iter_mut().enumerate() {
                                *d = a * w1[k] + b * w2[k];
                            }
                            continue;
                        }
                        for r in 0..rows {
                            for t in 0..time {
                                for m in 0..m1 {
                                    dst[(r * (m1 + m2) + m) * time + t] =
                                        a * w1[(r * m1 + m) * time + t];
                                }
                                for m in 0..m2 {
                                    dst[(r * (m1 + m2) + m1 + m) * time + t] =
                                        b * w2[(r * m2 + m) * time + t];
                                }
                            }
                        }
                    }
                    let bias = d1
                        .bias
                        .iter()
                        .zip(&d2.bias)
                        .map(|(x, y)| a * x + b * y)
                        .collect();
                    Layer::Dense(Dense {
                        in_features,
                        out_features: d1.out_features,
                        weights,
                        bias,
                    })
                }
                _ => return Err(Error::invalid(format!("layer {li} differs between models"))),
            };
            if matches!(layer, Layer::TemporalConv(_) | Layer::SpatiotemporalConv(_)) {
                shared = false;
            }
            layers.push(layer);
        }
        let architecture = if f1.architecture == Architecture::Temporal
            && f2.architecture == Architecture::Temporal
        {
            Architecture::Temporal
        } else {
            Architecture::Spatiotemporal
        };
        Model::new(
            architecture,
            f1.n_channels,
            f1.input_length,
            f1.n_classes,
            layers,
        )
    }

    /// Row index range where channel identity is still intact: the layer
    /// that first mixes rows (spatiotemporal conv or dense) and its input shape.
    fn first_mixing_layer(&self) -> Result<(usize, [usize; 3])> {
        let shapes = self.shapes()?;
        let li = self
            .layers
            .iter()
            .position(|l| matches!(l, Layer::SpatiotemporalConv(_) | Layer::Dense(_)))
            .expect("final layer is dense");
        Ok((li, shapes[li]))
    }

    /// Zeroes every weight that reads channel `k`, making it a dummy input.
    pub fn silence_channel(&self, k: usize) -> Result<Model> {
        if k >= self.n_channels {
            return Err(Error::invalid(format!("channel {k} out of range")));
        }
        let (li, [rows, maps, time]) = self.first_mixing_layer()?;
        let mut out = self.clone();
        match &mut out.layers[li] {
            Layer::Dense(d) => {
                for o in 0..d.out_features {
                    let w = &mut d.weights[o * d.in_features..][..d.in_features];
                    w[k * maps * time..(k + 1) * maps * time].fill(0.0);
                }
            }
            Layer::SpatiotemporalConv(c) => {
                let out_rows = rows - c.kernel_channels + 1;
                for kc in 0..c.kernel_channels {
                    if k >= kc && k - kc < out_rows {
                        for o in 0..c.out_maps {
                            for i in 0..c.in_maps {
                                for j in 0..c.kernel_length {
                                    let wi = c.widx(o, i, kc, j);
                                    c.weights[wi] = 0.0;
                                }
                            }
                        }
                    }
                }
            }
            _ => unreachable!("first mixing layer is dense or spatiotemporal"),
        }
        Ok(out)
    }

    /// Copies the dense weights reading channel `p` onto channel `q`, so the
    /// two channels are processed identically (`W_pj = W_qj`). Temporal only.
    pub fn symmetrize_channels(&self, p: usize, q: usize) -> Result<Model> {
        if self.architecture != Architecture::Temporal {
            return Err(Error::invalid("channel symmetry needs a temporal model"));
        }
        if p >= self.n_channels || q >= self.n_channels {
            return Err(Error::invalid("channel out of range"));
        }
        let (li, [_, maps, time]) = self.first_mixing_layer()?;
        let mut out = self.clone();
        if let Layer::Dense(d) = &mut out.layers[li] {
            let span = maps * time;
            for o in 0..d.out_features {
                let w = &mut d.weights[o * d.in_features..][..d.in_features];
                let src: Vec<f64> = w[p * span..(p + 1) * span].to_vec();
                w[q * span..(q + 1) * span].copy_from_slice(&src);
            }
        }
        Ok(out)
    }

    /// Overwrites all parameters with constants; handy for hand-checked tests.
    pub fn map_params(
        &self,
        mut f: impl FnMut(usize, &mut Vec<f64>, &mut Vec<f64>),
    ) -> Result<Model> {
        let mut out = self.clone();
        for (li, layer) in out.layers.iter_mut().enumerate() {
            if let Some((w, b)) = layer.params_mut() {
                f(li, w, b);
            }
        }
        Model::new(
            out.architecture,
            out.n_channels,
            out.input_length,
            out.n_classes,
            out.layers,
        )
    }
}

impl Classifier for Model {
    fn n_channels(&self) -> usize {
        self.n_channels
    }

    fn input_length(&self) -> usize {
        self.input_length
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn logit(&self, input: &Tensor, class_index: usize) -> Result<f64> {
        self.check_input(input, class_index)?;
        Ok(self.logits(input)?[class_index])
    }

    fn logit_gradient(&self, input: &Tensor, class_index: usize) -> Result<Tensor> {
        self.check_input(input, class_index)?;
        let trace = self.trace(input);
        let mut seed = vec![0.0; self.n_classes];
        seed[class_index] = 1.0;
        Ok(self.backprop(&trace, seed, None))
    }
}

/// Rewrites the input-map dimension of a consumer layer. `sources(m)` lists
/// `(old_map, scale)` pairs that new map `m` takes its weights from.
fn remap_consumer_inputs(
    old: &Layer,
    new: &mut Layer,
    [rows, old_maps, time]: [usize; 3],
    sources: impl Fn(usize) -> Vec<(usize, f64)>,
    new_maps: usize,
) {
    match (old, new) {
        (
            Layer::TemporalConv(oc) | Layer::SpatiotemporalConv(oc),
            Layer::TemporalConv(nc) | Layer::SpatiotemporalConv(nc),
        ) => {
            nc.in_maps = new_maps;
            nc.weights = vec![0.0; nc.weight_len()];
            let span = oc.kernel_channels * oc.kernel_length;
            for o in 0..oc.out_maps {
                for m in 0..new_maps {
                    for (src, scale) in sources(m) {
                        let from = &oc.weights[(o * oc.in_maps + src) * span..][..span];
                        let to = &mut nc.weights[(o * new_maps + m) * span..][..span];
                        for (d, s) in to.iter_mut().zip(from) {
                            *d = s * scale;
                        }
                    }
                }
            }
        }
        (Layer::Dense(od), Layer::Dense(nd)) => {
            nd.in_features = rows * new_maps * time;
            nd.weights = vec![0.0; nd.in_features * nd.out_features];
            for o in 0..od.out_features {
                let from = &od.weights[o * od.in_features..][..od.in_features];
                let to = &mut nd.weights[o * nd.in_features..][..nd.in_features];
                for r in 0..rows {
                    for m in 0..new_maps {
                        for (src, scale) in sources(m) {
                            for t in 0..time {
                                to[(r * new_maps + m) * time + t] =
                                    from[(r * old_maps + src) * time + t] * scale;
                            }
                        }
                    }
                }
            }
        }
        _ => unreachable!("consumer is a convolution or dense layer"),
    }
}

fn stack_convs(c1: &Conv, c2: &Conv, shared_input: bool) -> Result<Conv> {
    if (c1.kernel_channels, c1.kernel_length) != (c2.kernel_channels, c2.kernel_length)
        || (shared_input && c1.in_maps != c2.in_maps)
    {
        return Err(Error::invalid("convolution kernels differ between models"));
    }
    let in_maps = if shared_input {
        c1.in_maps
    } else {
        c1.in_maps + c2.in_maps
    };
    let out_maps = c1.out_maps + c2.out_maps;
    let span = c1.kernel_channels * c1.kernel_length;
    let mut weights = vec![0.0; out_maps * in_maps * span];
    for o in 0..c1.out_maps {
        for i in 0..c1.in_maps {
            weights[(o * in_maps + i) * span..][..span]
                .copy_from_slice(&c1.weights[(o * c1.in_maps + i) * span..][..span]);
        }
    }
    let offset = if shared_input { 0 } else { c1.in_maps };
    for o in 0..c2.out_maps {
        for i in 0..c2.in_maps {
            weights[((c1.out_maps + o) * in_maps + offset + i) * span..][..span]
                .copy_from_slice(&c2.weights[(o * c2.in_maps + i) * span..][..span]);
        }
    }
    let bias = c1.bias.iter().chain(&c2.bias).copied().collect();
    Ok(Conv {
        in_maps,
        out_maps,
        kernel_channels: c1.kernel_channels,
        kernel_length: c1.kernel_length,
        weights,
        bias,
    })
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..n).map(|_| rng.random_range(-bound..=bound)).collect()
}

fn random_conv(rng: &mut ChaCha8Rng, in_maps: usize, out_maps: usize, kc: usize, k: usize) -> Conv {
    let fan_in = in_maps * kc * k;
    Conv {
        in_maps,
        out_maps,
        kernel_channels: kc,
        kernel_length: k,
        weights: uniform(rng, out_maps * in_maps * kc * k, fan_in),
        bias: uniform(rng, out_maps, fan_in),
    }
}

fn random_dense(rng: &mut ChaCha8Rng, in_features: usize, out_features: usize) -> Dense {
    Dense {
        in_features,
        out_features,
        weights: uniform(rng, in_features * out_features, in_features),
        bias: uniform(rng, out_features, in_features),
    }
}
