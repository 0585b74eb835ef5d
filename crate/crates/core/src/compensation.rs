//! Compensation offsets that turn zero-baseline IG into Shapley-consistent
//! attributions.
//!
//! For a reference record `r`, `δ_r = SS(r) − IG(r; zero)` measures the
//! integral of gradients between the implicit Shapley baseline and the zero
//! baseline. Averaged over a few references it is added to IG of any record.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{
    integrated_gradients, shapley_sampling, AttributionVector, Granularity, MethodTag, SsConfig,
};
use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::model::{format_real, parse_reals};
use crate::tensor::{Record, Tensor};

pub const DEFAULT_K_REFERENCES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct CompensationDelta {
    pub class_index: usize,
    pub granularity: Granularity,
    /// Column mean of `per_reference_deltas`.
    pub per_feature: Vec<f64>,
    pub reference_ids: Vec<String>,
    /// One row per reference record.
    pub per_reference_deltas: Vec<Vec<f64>>,
    /// Shapley sampling standard errors, one row per reference record.
    pub per_reference_std_errors: Vec<Vec<f64>>,
    pub ig_steps: usize,
    pub ss_samples: usize,
    pub ss_seed: u64,
    pub reference_seeds: Vec<u64>,
    pub background_size: usize,
    pub baseline: String,
}

/// Seed used for the Shapley sampling run on reference `index`.
pub fn reference_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

impl CompensationDelta {
    pub fn k_references(&self) -> usize {
        self.reference_ids.len()
    }

    /// Standard error of `per_feature` from the Shapley sampling runs.
    pub fn std_errors(&self) -> Vec<f64> {
        let k = self.k_references() as f64;
        (0..self.per_feature.len())
            .map(|f| {
                let sum_sq: f64 = self
                    .per_reference_std_errors
                    .iter()
                    .map(|r| r[f] * r[f])
                    .sum();
                sum_sq.sqrt() / k
            })
            .collect()
    }

    /// Per-feature sample standard deviation of the reference deltas.
    pub fn dispersion(&self) -> Vec<f64> {
        let k = self.k_references();
        (0..self.per_feature.len())
            .map(|f| {
                if k < 2 {
                    return 0.0;
                }
                let mean = self.per_feature[f];
                let ss: f64 = self
                    .per_reference_deltas
                    .iter()
                    .map(|r| (r[f] - mean) * (r[f] - mean))
                    .sum();
                (ss / (k - 1) as f64).sqrt()
            })
            .collect()
    }

    /// A delta of all zeros, which leaves IG unchanged.
    pub fn zero(class_index: usize, granularity: Granularity, features: usize) -> Self {
        Self {
            class_index,
            granularity,
            per_feature: vec![0.0; features],
            reference_ids: Vec::new(),
            per_reference_deltas: Vec::new(),
            per_reference_std_errors: Vec::new(),
            ig_steps: 0,
            ss_samples: 0,
            ss_seed: 0,
            reference_seeds: Vec::new(),
            background_size: 0,
            baseline: "zero".into(),
        }
    }
}

/// Measures `SS(r) − IG(r; zero_baseline)` on every reference and averages.
pub fn estimate_delta<C: Classifier + ?Sized>(
    model: &C,
    references: &[Record],
    zero_baseline: &Tensor,
    ig_steps: usize,
    ss: &SsConfig,
    class_index: usize,
) -> Result<CompensationDelta> {
    if references.is_empty() {
        return Err(Error::invalid("reference list is empty"));
    }
    let shape = [model.n_channels(), model.input_length()];
    zero_baseline.ensure_shape(&shape)?;

    let rows: Vec<(Vec<f64>, Vec<f64>)> = references
        .par_iter()
        .enumerate()
        .map(|(j, r)| -> Result<(Vec<f64>, Vec<f64>)> {
            let config = SsConfig {
                seed: reference_seed(ss.seed, j),
                ..ss.clone()
            };
            let s = shapley_sampling(model, r, &config, class_index)?;
            let ig = integrated_gradients(
                model,
                r,
                zero_baseline,
                ig_steps,
                class_index,
                ss.granularity,
            )?;
            let delta = s
                .per_feature
                .iter()
                .zip(&ig.per_feature)
                .map(|(a, b)| a - b)
                .collect();
            Ok((delta, s.std_errors.unwrap_or_default()))
        })
        .collect::<Result<_>>()?;

    let features = rows[0].0.len();
    let k = rows.len() as f64;
    let per_feature = (0..features)
        .map(|f| rows.iter().map(|(d, _)| d[f]).sum::<f64>() / k)
        .collect();
    let (per_reference_deltas, per_reference_std_errors) = rows.into_iter().unzip();

    Ok(CompensationDelta {
        class_index,
        granularity: ss.granularity,
        per_feature,
        reference_ids: references.iter().map(|r| r.id.clone()).collect(),
        per_reference_deltas,
        per_reference_std_errors,
        ig_steps,
        ss_samples: ss.samples_per_feature,
        ss_seed: ss.seed,
        reference_seeds: (0..references.len())
            .map(|j| reference_seed(ss.seed, j))
            .collect(),
        background_size: ss.background.len(),
        baseline: crate::attribution::describe_baseline(zero_baseline),
    })
}

/// `IG(x; zero_baseline) + δ`.
pub fn compensated_ig<C: Classifier + ?Sized>(
    model: &C,
    record: &Record,
    delta: &CompensationDelta,
    zero_baseline: &Tensor,
    ig_steps: usize,
    class_index: usize,
    granularity: Granularity,
) -> Result<AttributionVector> {
    if delta.granularity != granularity {
        return Err(Error::invalid(format!(
            "delta has {} granularity, {} requested",
            delta.granularity.name(),
            granularity.name()
        )));
    }
    if delta.class_index != class_index {
        return Err(Error::invalid(format!(
            "delta was estimated for class {}, not {class_index}",
            delta.class_index
        )));
    }
    let mut attr = integrated_gradients(
        model,
        record,
        zero_baseline,
        ig_steps,
        class_index,
        granularity,
    )?;
    if attr.per_feature.len() != delta.per_feature.len() {
        return Err(Error::invalid(format!(
            "delta has {} features, attribution has {}",
            delta.per_feature.len(),
            attr.per_feature.len()
        )));
    }
    for (a, d) in attr.per_feature.iter_mut().zip(&delta.per_feature) {
        *a += d;
    }
    attr.method = MethodTag::Cig;
    attr.samples = Some(delta.ss_samples);
    attr.seed = Some(delta.ss_seed);
    attr.std_errors = Some(delta.std_errors());
    Ok(attr)
}

#[derive(Serialize, Deserialize)]
struct Seeds {
    ss_seed: u64,
    reference_seeds: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct DeltaFile {
    class_index: usize,
    granularity: String,
    per_feature: Vec<String>,
    reference_ids: Vec<String>,
    seeds: Seeds,
    per_reference_deltas: Vec<Vec<String>>,
    per_reference_std_errors: Vec<Vec<String>>,
    ig_steps: usize,
    ss_samples: usize,
    background_size: usize,
    baseline: String,
}

fn reals(values: &[f64]) -> Vec<String> {
    values.iter().map(|&v| format_real(v)).collect()
}

impl CompensationDelta {
    pub fn to_json(&self) -> String {
        let file = DeltaFile {
            class_index: self.class_index,
            granularity: self.granularity.name().into(),
            per_feature: reals(&self.per_feature),
            reference_ids: self.reference_ids.clone(),
            seeds: Seeds {
                ss_seed: self.ss_seed,
                reference_seeds: self.reference_seeds.clone(),
            },
            per_reference_deltas: self.per_reference_deltas.iter().map(|r| reals(r)).collect(),
            per_reference_std_errors: self
                .per_reference_std_errors
                .iter()
                .map(|r| reals(r))
                .collect(),
            ig_steps: self.ig_steps,
            ss_samples: self.ss_samples,
            background_size: self.background_size,
            baseline: self.baseline.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("delta serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DeltaFile = serde_json::from_str(text).map_err(|e| Error::parse("delta", e))?;
        let granularity = Granularity::from_name(&file.granularity).ok_or_else(|| {
            Error::parse(
                "granularity",
                format!("unknown value {:?}", file.granularity),
            )
        })?;
        let per_feature = parse_reals(&file.per_feature, "per_feature")?;
        let rows = |m: &[Vec<String>], name: &str| -> Result<Vec<Vec<f64>>> {
            m.iter()
                .enumerate()
                .map(|(i, r)| {
                    let row = parse_reals(r, &format!("{name}[{i}]"))?;
                    if row.len() != per_feature.len() {
                        return Err(Error::parse(
                            format!("{name}[{i}]"),
                            "row length differs from per_feature",
                        ));
                    }
                    Ok(row)
                })
                .collect()
        };
        let per_reference_deltas = rows(&file.per_reference_deltas, "per_reference_deltas")?;
        let per_reference_std_errors =
            rows(&file.per_reference_std_errors, "per_reference_std_errors")?;
        if per_reference_deltas.len() != file.reference_ids.len()
            || per_reference_std_errors.len() != file.reference_ids.len()
        {
            return Err(Error::parse(
                "per_reference_deltas",
                "row count differs from reference_ids",
            ));
        }
        Ok(Self {
            class_index: file.class_index,
            granularity,
            per_feature,
            reference_ids: file.reference_ids,
            per_reference_deltas,
            per_reference_std_errors,
            ig_steps: file.ig_steps,
            ss_samples: file.ss_samples,
            ss_seed: file.seeds.ss_seed,
            reference_seeds: file.seeds.reference_seeds,
            background_size: file.background_size,
            baseline: file.baseline,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
