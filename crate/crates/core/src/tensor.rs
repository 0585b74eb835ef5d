//! Dense row-major `f64` tensors and the [`Record`] input type.

use crate::error::{Error, Result};

/// A dense row-major array of 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "tensor of shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![value; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_shape(&self, expected: &[usize]) -> Result<()> {
        if self.shape != expected {
            return Err(Error::Shape {
                expected: expected.to_vec(),
                found: self.shape.clone(),
            });
        }
        Ok(())
    }

    /// Row `i` of a 2-D tensor.
    pub fn row(&self, i: usize) -> &[f64] {
        let width = self.shape[1];
        &self.data[i * width..(i + 1) * width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let width = self.shape[1];
        &mut self.data[i * width..(i + 1) * width]
    }
}

/// One multichannel time series: `values` has shape `[n_channels, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    pub label: Option<usize>,
    values: Tensor,
}

impl Record {
    pub fn new(id: impl Into<String>, label: Option<usize>, values: Tensor) -> Result<Self> {
        match values.shape() {
            [c, l] if *c >= 1 && *l >= 1 => {}
            other => {
                return Err(Error::invalid(format!(
                    "record values must have shape [n_channels >= 1, length >= 1], got {other:?}"
                )))
            }
        }
        Ok(Self {
            id: id.into(),
            label,
            values,
        })
    }

    /// Builds a record from per-channel rows.
    pub fn from_rows(
        id: impl Into<String>,
        label: Option<usize>,
        rows: &[Vec<f64>],
    ) -> Result<Self> {
        let length = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != length) {
            return Err(Error::invalid("ragged channel rows"));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(id, label, Tensor::new(vec![rows.len(), length], data)?)
    }

    pub fn n_channels(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn length(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    /// Copy of this record with channels `p` and `q` exchanged.
    pub fn swap_channels(&self, p: usize, q: usize) -> Record {
        let mut values = self.values.clone();
        if p != q {
            let l = self.length();
            let (lo, hi) = (p.min(q), p.max(q));
            let (head, tail) = values.data_mut().split_at_mut(hi * l);
            head[lo * l..(lo + 1) * l].swap_with_slice(&mut tail[..l]);
        }
        Record {
            id: self.id.clone(),
            label: self.label,
            values,
        }
    }
}
