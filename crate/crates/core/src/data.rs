//! Synthetic multichannel datasets and their CSV representation.
//!
//! File layout: a `#channels=<n> length=<L> classes=<c>` line, then a column
//! header `id,label,ch0_t0,…,ch{n-1}_t{L-1}`, then one row per record.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{format_real, parse_reals};
use crate::tensor::{Record, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Eval,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Eval => "eval",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_channels: usize,
    pub length: usize,
    pub n_classes: usize,
    pub train_per_class: usize,
    pub eval_per_class: usize,
    /// DC level added to every channel.
    pub offset: f64,
    pub discriminative_channels: Vec<usize>,
    pub noise_scale: f64,
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_channels: 6,
            length: 64,
            n_classes: 2,
            train_per_class: 200,
            eval_per_class: 200,
            offset: 0.5,
            discriminative_channels: vec![1, 4],
            noise_scale: 0.3,
            amplitude: 1.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub n_channels: usize,
    pub length: usize,
    pub n_classes: usize,
    pub split: Option<Split>,
    pub generator: Option<SyntheticConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub train: Dataset,
    pub eval: Dataset,
}

impl Dataset {
    pub fn new(
        records: Vec<Record>,
        n_channels: usize,
        length: usize,
        n_classes: usize,
    ) -> Result<Self> {
        for r in &records {
            r.values().ensure_shape(&[n_channels, length])?;
            if let Some(label) = r.label {
                if label >= n_classes {
                    return Err(Error::ClassIndex {
                        index: label,
                        n_classes,
                    });
                }
            }
        }
        Ok(Self {
            records,
            n_channels,
            length,
            n_classes,
            split: None,
            generator: None,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of_class(&self, class: usize) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.label == Some(class))
    }

    /// Up to `k` records of `class`, chosen without replacement by a seeded shuffle.
    pub fn sample_class(&self, class: usize, k: usize, seed: u64) -> Vec<Record> {
        let mut pool: Vec<&Record> = self.of_class(class).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        pool.shuffle(&mut rng);
        pool.into_iter().take(k).cloned().collect()
    }

    /// Up to `k` records of any class, chosen by a seeded shuffle.
    pub fn sample(&self, k: usize, seed: u64) -> Vec<Record> {
        let mut pool: Vec<&Record> = self.records.iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        pool.shuffle(&mut rng);
        pool.into_iter().take(k).cloned().collect()
    }

    /// Entry-wise mean over all records.
    pub fn mean(&self) -> Tensor {
        let mut sum = Tensor::zeros(vec![self.n_channels, self.length]);
        for r in &self.records {
            for (s, v) in sum.data_mut().iter_mut().zip(r.values().data()) {
                *s += v;
            }
        }
        let n = self.records.len().max(1) as f64;
        for s in sum.data_mut() {
            *s /= n;
        }
        sum
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = format!(
            "#channels={} length={} classes={}\n",
            self.n_channels, self.length, self.n_classes
        );
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["id".to_string(), "label".to_string()];
        for c in 0..self.n_channels {
            for t in 0..self.length {
                header.push(format!("ch{c}_t{t}"));
            }
        }
        writer.write_record(&header).map_err(csv_error)?;
        for r in &self.records {
            let mut row = vec![
                r.id.clone(),
                r.label.map(|l| l.to_string()).unwrap_or_default(),
            ];
            row.extend(r.values().data().iter().map(|&v| format_real(v)));
            writer.write_record(&row).map_err(csv_error)?;
        }
        let body = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (meta, body) = text.split_once('\n').ok_or_else(|| {
            Error::parse("header", "missing `#channels=… length=… classes=…` line")
        })?;
        let meta = meta
            .trim_end_matches('\r')
            .strip_prefix('#')
            .ok_or_else(|| Error::parse("header", "first line must start with `#`"))?;
        let (mut n_channels, mut length, mut n_classes) = (None, None, None);
        for item in meta.split_whitespace() {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                Error::parse("header", format!("expected key=value, got {item:?}"))
            })?;
            let value: usize = value
                .parse()
                .map_err(|e| Error::parse(format!("header.{key}"), e))?;
            match key {
                "channels" => n_channels = Some(value),
                "length" => length = Some(value),
                "classes" => n_classes = Some(value),
                other => return Err(Error::parse("header", format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::parse(format!("header.{k}"), "missing");
        let n_channels = n_channels.ok_or_else(|| missing("channels"))?;
        let length = length.ok_or_else(|| missing("length"))?;
        let n_classes = n_classes.ok_or_else(|| missing("classes"))?;
        if n_channels == 0 || length == 0 || n_classes == 0 {
            return Err(Error::parse("header", "counts must be positive"));
        }

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(body.as_bytes());
        let columns = reader.headers().map_err(csv_error)?.clone();
        let expected = 2 + n_channels * length;
        if columns.len() != expected || &columns[0] != "id" || &columns[1] != "label" {
            return Err(Error::parse(
                "columns",
                format!(
                    "expected id,label and {} value columns",
                    n_channels * length
                ),
            ));
        }
        let mut records = Vec::new();
        for (row_index, row) in reader.records().enumerate() {
            let row = row.map_err(csv_error)?;
            let label = match &row[1] {
                "" => None,
                s => Some(
                    s.parse::<usize>()
                        .map_err(|e| Error::parse(format!("row {}.label", row_index + 1), e))?,
                ),
            };
            let cells: Vec<String> = row.iter().skip(2).map(str::to_string).collect();
            let values = parse_reals(&cells, &format!("row {}.values", row_index + 1))?;
            if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::parse(
                    format!("row {}.{}", row_index + 1, &columns[bad + 2]),
                    "value is not finite",
                ));
            }
            let values = Tensor::new(vec![n_channels, length], values)?;
            records.push(Record::new(&row[0], label, values)?);
        }
        Dataset::new(records, n_channels, length, n_classes)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::UnequalLengths {
            pos,
            expected_len,
            len,
        } => Error::parse(
            format!("row {}", pos.as_ref().map_or(0, |p| p.record())),
            format!("ragged row: {len} cells, expected {expected_len}"),
        ),
        _ => Error::parse("csv", e),
    }
}

fn generate_split(config: &SyntheticConfig, split: Split, per_class: usize) -> Result<Dataset> {
    let stream = match split {
        Split::Train => 0,
        Split::Eval => 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let (n, l) = (config.n_channels, config.length);
    let mut records = Vec::with_capacity(per_class * config.n_classes);
    for i in 0..per_class {
        for class in 0..config.n_classes {
            let cycles = 2.0 * (class + 1) as f64;
            let gain = config.amplitude * rng.random_range(0.75..1.25);
            let mut values = Vec::with_capacity(n * l);
            for ch in 0..n {
                let signal = config.discriminative_channels.contains(&ch);
                for t in 0..l {
                    let noise: f64 = rng.sample(StandardNormal);
                    let mut v = config.offset + config.noise_scale * noise;
                    if signal {
                        v += gain * (2.0 * PI * cycles * t as f64 / l as f64).sin();
                    }
                    values.push(v);
                }
            }
            let id = format!("{}-{:05}", split.name(), i * config.n_classes + class);
            records.push(Record::new(
                id,
                Some(class),
                Tensor::new(vec![n, l], values)?,
            )?);
        }
    }
    let mut ds = Dataset::new(records, n, l, config.n_classes)?;
    ds.split = Some(split);
    ds.generator = Some(config.clone());
    Ok(ds)
}

/// Seeded train/eval datasets. Discriminative channels carry a class-specific
/// sinusoid (class `c` completes `2(c+1)` cycles); every channel sits on the
/// configured DC offset plus Gaussian noise.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<SyntheticData> {
    if config.n_channels == 0 || config.length == 0 || config.n_classes == 0 {
        return Err(Error::invalid(
            "n_channels, length and n_classes must be positive",
        ));
    }
    if let Some(&bad) = config
        .discriminative_channels
        .iter()
        .find(|&&c| c >= config.n_channels)
    {
        return Err(Error::invalid(format!(
            "discriminative channel {bad} >= n_channels {}",
            config.n_channels
        )));
    }
    if !(config.noise_scale >= 0.0 && config.offset.is_finite() && config.amplitude.is_finite()) {
        return Err(Error::invalid(
            "offset, amplitude and noise_scale must be finite, noise non-negative",
        ));
    }
    Ok(SyntheticData {
        train: generate_split(config, Split::Train, config.train_per_class)?,
        eval: generate_split(config, Split::Eval, config.eval_per_class)?,
    })
}
