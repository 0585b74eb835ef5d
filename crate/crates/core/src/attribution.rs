//! Path-method attribution and Shapley values.
//!
//! All estimators are pure functions of their inputs. Work is split into
//! fixed-size chunks that are reduced in index order, so results are
//! bit-identical for any rayon thread count.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::tensor::{Record, Tensor};

pub const DEFAULT_STEPS: usize = 256;
pub const MAX_EXACT_FEATURES: usize = 20;

const STEP_CHUNK: usize = 64;
const SAMPLE_CHUNK: usize = 128;

/// What counts as one feature: a whole sensor channel or a single timepoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Granularity {
    #[default]
    Channel,
    Timepoint,
}

impl Granularity {
    pub fn name(self) -> &'static str {
        match self {
            Granularity::Channel => "channel",
            Granularity::Timepoint => "timepoint",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "channel" => Some(Granularity::Channel),
            "timepoint" => Some(Granularity::Timepoint),
            _ => None,
        }
    }

    pub fn feature_count(self, n_channels: usize, length: usize) -> usize {
        match self {
            Granularity::Channel => n_channels,
            Granularity::Timepoint => n_channels * length,
        }
    }

    /// Number of consecutive input entries covered by one feature.
    fn width(self, length: usize) -> usize {
        match self {
            Granularity::Channel => length,
            Granularity::Timepoint => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    Ig,
    Ss,
    ExactShapley,
    Cig,
}

impl MethodTag {
    pub fn name(self) -> &'static str {
        match self {
            MethodTag::Ig => "ig",
            MethodTag::Ss => "ss",
            MethodTag::ExactShapley => "exact_shapley",
            MethodTag::Cig => "cig",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "ig" => Some(MethodTag::Ig),
            "ss" => Some(MethodTag::Ss),
            "exact_shapley" | "exact" => Some(MethodTag::ExactShapley),
            "cig" => Some(MethodTag::Cig),
            _ => None,
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-feature contributions for one record and one target class.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionVector {
    pub per_feature: Vec<f64>,
    pub method: MethodTag,
    pub class_index: usize,
    pub granularity: Granularity,
    pub baseline: String,
    pub steps: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    /// Monte-Carlo standard error per feature (sampling methods only).
    pub std_errors: Option<Vec<f64>>,
}

impl AttributionVector {
    fn new(
        per_feature: Vec<f64>,
        method: MethodTag,
        class_index: usize,
        granularity: Granularity,
    ) -> Self {
        Self {
            per_feature,
            method,
            class_index,
            granularity,
            baseline: String::new(),
            steps: None,
            samples: None,
            seed: None,
            std_errors: None,
        }
    }

    pub fn len(&self) -> usize {
        self.per_feature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_feature.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.per_feature.iter().sum()
    }
}

/// Short label for a baseline tensor.
pub fn describe_baseline(baseline: &Tensor) -> String {
    if baseline.data().iter().all(|&v| v == 0.0) {
        "zero".to_string()
    } else {
        "custom".to_string()
    }
}

/// Piecewise-linear integration path `baseline → waypoints… → record`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub baseline: Tensor,
    pub waypoints: Vec<Tensor>,
    /// Riemann steps per segment.
    pub steps: usize,
}

impl PathSpec {
    pub fn straight(baseline: Tensor, steps: usize) -> Self {
        Self {
            baseline,
            waypoints: Vec::new(),
            steps,
        }
    }
}

fn check_attribution_input<C: Classifier + ?Sized>(
    model: &C,
    record: &Record,
    class_index: usize,
) -> Result<()> {
    model.check_input(record.values(), class_index)
}

/// Per-entry midpoint-rule IG from `start` to `end`.
fn segment_ig<C: Classifier + ?Sized>(
    model: &C,
    end: &Tensor,
    start: &Tensor,
    steps: usize,
    class_index: usize,
) -> Result<Vec<f64>> {
    let diff: Vec<f64> = end
        .data()
        .iter()
        .zip(start.data())
        .map(|(x, b)| x - b)
        .collect();
    if diff.iter().all(|&d| d == 0.0) {
        return Ok(vec![0.0; diff.len()]);
    }
    let m = steps as f64;
    let chunks: Vec<Vec<f64>> = (0..steps.div_ceil(STEP_CHUNK))
        .into_par_iter()
        .map(|chunk| -> Result<Vec<f64>> {
            let mut acc = vec![0.0; diff.len()];
            let mut point = start.clone();
            for s in chunk * STEP_CHUNK..((chunk + 1) * STEP_CHUNK).min(steps) {
                let alpha = (s as f64 + 0.5) / m;
                for ((p, b), d) in point.data_mut().iter_mut().zip(start.data()).zip(&diff) {
                    *p = b + alpha * d;
                }
                let g = model.logit_gradient(&point, class_index)?;
                for (a, gv) in acc.iter_mut().zip(g.data()) {
                    *a += gv;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0.0; diff.len()];
    for chunk in &chunks {
        for (t, c) in total.iter_mut().zip(chunk) {
            *t += c;
        }
    }
    Ok(total.iter().zip(&diff).map(|(g, d)| d * (g / m)).collect())
}

/// Sums consecutive entries into features of the given granularity.
fn group(values: &[f64], granularity: Granularity, length: usize) -> Vec<f64> {
    match granularity {
        Granularity::Timepoint => values.to_vec(),
        Granularity::Channel => values.chunks(length).map(|c| c.iter().sum()).collect(),
    }
}

/// Integrated gradients along the straight line from `baseline` to the record,
/// using the midpoint rule with `steps` evaluations.
pub fn integrated_gradients<C: Classifier + ?Sized>(
    model: &C,
    record: &Record,
    baseline: &Tensor,
    steps: usize,
    class_index: usize,
    granularity: Granularity,
) -> Result<AttributionVector> {
    path_integrated_gradients(
        model,
        record,
        &PathSpec::straight(baseline.clone(), steps),
        class_index,
        granularity,
    )
}

/// Path method over a piecewise-linear path: the sum of straight-segment IG
/// between consecutive waypoints.
pub fn path_integrated_gradients<C: Classifier + ?Sized>(
    model: &C,
    record: &Record,
    path: &PathSpec,
    class_index: usize,
    granularity: Granularity,
) -> Result<AttributionVector> {
    check_attribution_input(model, record, class_index)?;
    if path.steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    let shape = record.values().shape();
    path.baseline.ensure_shape(shape)?;
    for w in &path.waypoints {
        w.ensure_shape(shape)?;
    }

    let mut nodes: Vec<&Tensor> = vec![&path.baseline];
    nodes.extend(&path.waypoints);
    nodes.push(record.values());

    let mut per_entry = vec![0.0; record.values().len()];
    for pair in nodes.windows(2) {
        let seg = segment_ig(model, pair[1], pair[0], path.steps, class_index)?;
        for (t, s) in per_entry.iter_mut().zip(seg) {
            *t += s;
        }
    }

    let mut attr = AttributionVector::new(
        group(&per_entry, granularity, record.length()),
        MethodTag::Ig,
        class_index,
        granularity,
    );
    attr.baseline = describe_baseline(&path.baseline);
    attr.steps = Some(path.steps);
    Ok(attr)
}

/// Shapley sampling configuration. The background set plays the role of
/// the baseline distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SsConfig {
    pub samples_per_feature: usize,
    pub background: Vec<Tensor>,
    pub seed: u64,
    pub granularity: Granularity,
}

impl SsConfig {
    pub fn new(samples_per_feature: usize, background: &[Record], seed: u64) -> Self {
        Self {
            samples_per_feature,
            background: background.iter().map(|r| r.values().clone()).collect(),
            seed,
            granularity: Granularity::Channel,
        }
    }

    fn validate(&self, shape: &[usize]) -> Result<()> {
        if self.samples_per_feature == 0 {
            return Err(Error::invalid("samples_per_feature must be at least 1"));
        }
        if self.background.is_empty() {
            return Err(Error::invalid("background set is empty"));
        }
        for b in &self.background {
            b.ensure_shape(shape)?;
        }
        Ok(())
    }
}

/// Copies feature `f` (of width `w`) from `src` into `dst`.
fn take_feature(dst: &mut [f64], src: &[f64], f: usize, w: usize) {
    dst[f * w..(f + 1) * w].copy_from_slice(&src[f * w..(f + 1) * w]);
}

/// Monte-Carlo Shapley values: each sample draws a feature permutation and a
/// background record, and measures the change in the logit when the feature
/// joins the coalition of features preceding it. Sample `s` uses the same
/// draw for every feature.
pub fn shapley_sampling<C: Classifier + ?Sized>(
    model: &C,
    record: &Record,
    config: &SsConfig,
    class_index: usize,
) -> Result<AttributionVector> {
    check_attribution_input(model, record, class_index)?;
    config.validate(record.values().shape())?;
    let length = record.length();
    let n = config
        .granularity
        .feature_count(record.n_channels(), length);
    let w = config.granularity.width(length);
    let m = config.samples_per_feature;
    let chunks_per_feature = m.div_ceil(SAMPLE_CHUNK);
    let x = record.values().data();

    let jobs: Vec<(usize, usize)> = (0..n)
        .flat_map(|f| (0..chunks_per_feature).map(move |c| (f, c)))
        .collect();
    let marginals: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(f, chunk)| -> Result<Vec<f64>> {
            // Draws depend on the sample index only, so every feature sees the
            // same permutations and background records (common random numbers).
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(chunk as u64);
            let mut order: Vec<usize> = (0..n).collect();
            let count = SAMPLE_CHUNK.min(m - chunk * SAMPLE_CHUNK);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                order.shuffle(&mut rng);
                let bg = &config.background[rng.random_range(0..config.background.len())];
                let mut without = bg.clone();
                for &g in order.iter().take_while(|&&g| g != f) {
                    take_feature(without.data_mut(), x, g, w);
                }
                let mut with = without.clone();
                take_feature(with.data_mut(), x, f, w);
                out.push(model.logit(&with, class_index)? - model.logit(&without, class_index)?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut per_feature = Vec::with_capacity(n);
    let mut std_errors = Vec::with_capacity(n);
    for samples in marginals.chunks(chunks_per_feature) {
        let values = samples.iter().flatten();
        let mean = values.clone().sum::<f64>() / m as f64;
        let se = if m > 1 {
            let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
            (var / m as f64).sqrt()
        } else {
            0.0
        };
        per_feature.push(mean);
        std_errors.push(se);
    }

    let mut attr =
        AttributionVector::new(per_feature, MethodTag::Ss, class_index, config.granularity);
    attr.baseline = format!("background({})", config.background.len());
    attr.samples = Some(m);
    attr.seed = Some(config.seed);
    attr.std_errors = Some(std_errors);
    Ok(attr)
}

/// Exact Shapley values by enumerating all `2^n` coalitions. The value of a
/// coalition is the mean logit over the background with the coalition's
/// features taken from the record.
pub fn exact_shapley<C: Classifier + ?Sized>(
    model: &C,
    record: &Record,
    background: &[Tensor],
    class_index: usize,
    granularity: Granularity,
) -> Result<AttributionVector> {
    check_attribution_input(model, record, class_index)?;
    let length = record.length();
    let n = granularity.feature_count(record.n_channels(), length);
    if n > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures {
            n,
            max: MAX_EXACT_FEATURES,
        });
    }
    if background.is_empty() {
        return Err(Error::invalid("background set is empty"));
    }
    for b in background {
        b.ensure_shape(record.values().shape())?;
    }
    let w = granularity.width(length);
    let x = record.values().data();

    let value: Vec<f64> = (0..1usize << n)
        .into_par_iter()
        .map(|mask| -> Result<f64> {
            let mut total = 0.0;
            for bg in background {
                let mut hybrid = bg.clone();
                for f in (0..n).filter(|f| mask >> f & 1 == 1) {
                    take_feature(hybrid.data_mut(), x, f, w);
                }
                total += model.logit(&hybrid, class_index)?;
            }
            Ok(total / background.len() as f64)
        })
        .collect::<Result<_>>()?;

    // weight[s] = s! (n - s - 1)! / n!
    let factorial: Vec<f64> = (0..=n)
        .scan(1.0, |acc, k| {
            if k > 0 {
                *acc *= k as f64;
            }
            Some(*acc)
        })
        .collect();
    let weight: Vec<f64> = (0..n)
        .map(|s| factorial[s] * factorial[n - s - 1] / factorial[n])
        .collect();

    let per_feature = (0..n)
        .map(|i| {
            let bit = 1usize << i;
            (0..1usize << n)
                .filter(|mask| mask & bit == 0)
                .map(|mask| weight[mask.count_ones() as usize] * (value[mask | bit] - value[mask]))
                .sum()
        })
        .collect();

    let mut attr = AttributionVector::new(
        per_feature,
        MethodTag::ExactShapley,
        class_index,
        granularity,
    );
    attr.baseline = format!("background({})", background.len());
    Ok(attr)
}

/// Sums per-timepoint attributions into per-channel attributions.
pub fn aggregate_to_channels(
    attr: &AttributionVector,
    n_channels: usize,
    length: usize,
) -> Result<AttributionVector> {
    if attr.per_feature.len() != n_channels * length {
        return Err(Error::invalid(format!(
            "attribution has {} entries, expected {n_channels} x {length}",
            attr.per_feature.len()
        )));
    }
    let mut out = attr.clone();
    out.per_feature = group(&attr.per_feature, Granularity::Channel, length);
    out.granularity = Granularity::Channel;
    if let Some(se) = &attr.std_errors {
        // Independent per-timepoint errors add in quadrature.
        out.std_errors = Some(
            se.chunks(length)
                .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect(),
        );
    }
    Ok(out)
}

/// CSV with header `record_id,method,class_index,feature_index,contribution`.
pub fn attributions_to_csv<'a>(
    rows: impl IntoIterator<Item = (&'a str, &'a AttributionVector)>,
) -> String {
    let mut out = String::from("record_id,method,class_index,feature_index,contribution\n");
    for (id, attr) in rows {
        for (i, v) in attr.per_feature.iter().enumerate() {
            out.push_str(&format!(
                "{id},{},{},{i},{v:.16e}\n",
                attr.method, attr.class_index
            ));
        }
    }
    out
}

/// JSON sidecar describing how a batch of attributions was produced.
pub fn attribution_sidecar(attr: &AttributionVector, n_records: usize) -> serde_json::Value {
    serde_json::json!({
        "method": attr.method.name(),
        "class_index": attr.class_index,
        "granularity": attr.granularity.name(),
        "baseline": attr.baseline,
        "steps": attr.steps,
        "samples": attr.samples,
        "seed": attr.seed,
        "n_records": n_records,
    })
}
