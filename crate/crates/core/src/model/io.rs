//! JSON model files. Reals are written as decimal strings with 17
//! significant digits so weights survive a round trip bit-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Activation, Architecture, Conv, Dense, Layer, Model};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct ModelFile {
    architecture_tag: String,
    n_channels: usize,
    input_length: usize,
    n_classes: usize,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum LayerFile {
    TemporalConv {
        in_maps: usize,
        out_maps: usize,
        kernel_length: usize,
        weights: Vec<String>,
        bias: Vec<String>,
    },
    SpatiotemporalConv {
        in_maps: usize,
        out_maps: usize,
        kernel_channels: usize,
        kernel_length: usize,
        weights: Vec<String>,
        bias: Vec<String>,
    },
    Activation {
        activation_kind: String,
    },
    AveragePool {
        pool_window: usize,
    },
    Dense {
        in_features: usize,
        out_features: usize,
        weights: Vec<String>,
        bias: Vec<String>,
    },
}

pub(crate) fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_reals(values: &[String], field: &str) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.parse::<f64>()
                .map_err(|e| Error::parse(format!("{field}[{i}]"), format!("{s:?}: {e}")))
        })
        .collect()
}

fn reals(values: &[f64]) -> Vec<String> {
    values.iter().map(|&v| format_real(v)).collect()
}

impl From<&Layer> for LayerFile {
    fn from(layer: &Layer) -> Self {
        match layer {
            Layer::TemporalConv(c) => LayerFile::TemporalConv {
                in_maps: c.in_maps,
                out_maps: c.out_maps,
                kernel_length: c.kernel_length,
                weights: reals(&c.weights),
                bias: reals(&c.bias),
            },
            Layer::SpatiotemporalConv(c) => LayerFile::SpatiotemporalConv {
                in_maps: c.in_maps,
                out_maps: c.out_maps,
                kernel_channels: c.kernel_channels,
                kernel_length: c.kernel_length,
                weights: reals(&c.weights),
                bias: reals(&c.bias),
            },
            Layer::Activation(a) => LayerFile::Activation {
                activation_kind: a.name().to_string(),
            },
            Layer::AveragePool { window } => LayerFile::AveragePool {
                pool_window: *window,
            },
            Layer::Dense(d) => LayerFile::Dense {
                in_features: d.in_features,
                out_features: d.out_features,
                weights: reals(&d.weights),
                bias: reals(&d.bias),
            },
        }
    }
}

impl LayerFile {
    fn into_layer(self, index: usize) -> Result<Layer> {
        let field = |name: &str| format!("layers[{index}].{name}");
        Ok(match self {
            LayerFile::TemporalConv {
                in_maps,
                out_maps,
                kernel_length,
                weights,
                bias,
            } => Layer::TemporalConv(Conv {
                in_maps,
                out_maps,
                kernel_channels: 1,
                kernel_length,
                weights: parse_reals(&weights, &field("weights"))?,
                bias: parse_reals(&bias, &field("bias"))?,
            }),
            LayerFile::SpatiotemporalConv {
                in_maps,
                out_maps,
                kernel_channels,
                kernel_length,
                weights,
                bias,
            } => Layer::SpatiotemporalConv(Conv {
                in_maps,
                out_maps,
                kernel_channels,
                kernel_length,
                weights: parse_reals(&weights, &field("weights"))?,
                bias: parse_reals(&bias, &field("bias"))?,
            }),
            LayerFile::Activation { activation_kind } => {
                Layer::Activation(Activation::from_name(&activation_kind).ok_or_else(|| {
                    Error::parse(
                        field("activation_kind"),
                        format!("unknown activation {activation_kind:?}"),
                    )
                })?)
            }
            LayerFile::AveragePool { pool_window } => Layer::AveragePool {
                window: pool_window,
            },
            LayerFile::Dense {
                in_features,
                out_features,
                weights,
                bias,
            } => Layer::Dense(Dense {
                in_features,
                out_features,
                weights: parse_reals(&weights, &field("weights"))?,
                bias: parse_reals(&bias, &field("bias"))?,
            }),
        })
    }
}

impl Model {
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            architecture_tag: self.architecture.tag().to_string(),
            n_channels: self.n_channels,
            input_length: self.input_length,
            n_classes: self.n_classes,
            layers: self.layers.iter().map(LayerFile::from).collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::parse("model", e))?;
        let architecture = Architecture::from_tag(&file.architecture_tag).ok_or_else(|| {
            Error::parse(
                "architecture_tag",
                format!("unknown architecture {:?}", file.architecture_tag),
            )
        })?;
        let layers = file
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, l)| l.into_layer(i))
            .collect::<Result<Vec<_>>>()?;
        Model::new(
            architecture,
            file.n_channels,
            file.input_length,
            file.n_classes,
            layers,
        )
    }
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model.to_json())?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    Model::from_json(&fs::read_to_string(path)?)
}
