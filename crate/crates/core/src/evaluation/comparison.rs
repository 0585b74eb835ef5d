//! Rank-correlation comparison of attribution methods against a ground truth.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::spearman;
use crate::attribution::{
    exact_shapley, integrated_gradients, shapley_sampling, Granularity, MethodTag, SsConfig,
};
use crate::compensation::{compensated_ig, estimate_delta, CompensationDelta};
use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::tensor::{Record, Tensor};

/// Reference attributions the methods are compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    Exact,
    Sampled { samples: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonConfig {
    pub dataset_tag: String,
    pub model_tag: String,
    pub methods: Vec<MethodTag>,
    pub ig_steps: usize,
    /// Samples per feature for the `ss` method.
    pub ss_samples: usize,
    /// Samples per feature for the SS runs on compensation references.
    pub delta_samples: usize,
    pub k_references: usize,
    /// Background set shared by SS, the compensation runs and the truth.
    pub background: Vec<Tensor>,
    /// Records that compensation references are drawn from, per class.
    pub reference_pool: Vec<Record>,
    pub truth: Truth,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpearmanRow {
    pub dataset_tag: String,
    pub model_tag: String,
    pub class_label: usize,
    pub method: MethodTag,
    pub rho: f64,
    pub n_records: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordRho {
    pub record_id: String,
    pub class_label: usize,
    pub method: MethodTag,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpearmanReport {
    pub rows: Vec<SpearmanRow>,
    pub per_record: Vec<RecordRho>,
    pub n_records: usize,
    pub deltas: Vec<CompensationDelta>,
}

const TABLE_ORDER: [MethodTag; 4] = [
    MethodTag::Cig,
    MethodTag::Ss,
    MethodTag::Ig,
    MethodTag::ExactShapley,
];

/// SplitMix64 of `base` advanced by `stream`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_REFERENCES: u64 = 1 << 40;
const STREAM_DELTA: u64 = 2 << 40;
const STREAM_TRUTH: u64 = 3 << 40;
const STREAM_SS: u64 = 4 << 40;

impl SpearmanReport {
    pub fn methods(&self) -> Vec<MethodTag> {
        TABLE_ORDER
            .into_iter()
            .filter(|m| self.rows.iter().any(|r| r.method == *m))
            .collect()
    }

    pub fn classes(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.rows.iter().map(|r| r.class_label).collect();
        c.dedup();
        c
    }

    pub fn rho(&self, class_label: usize, method: MethodTag) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.class_label == class_label && r.method == method)
            .map(|r| r.rho)
    }

    /// Mean per-record rho over all classes.
    pub fn mean_rho(&self, method: MethodTag) -> f64 {
        let v: Vec<f64> = self
            .per_record
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.rho)
            .collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }

    /// Fraction of records where `a` correlates strictly better than `b`.
    pub fn fraction_better(&self, a: MethodTag, b: MethodTag) -> f64 {
        let rho_of = |m: MethodTag| -> Vec<f64> {
            self.per_record
                .iter()
                .filter(|r| r.method == m)
                .map(|r| r.rho)
                .collect()
        };
        let (ra, rb) = (rho_of(a), rho_of(b));
        let better = ra.iter().zip(&rb).filter(|(x, y)| x > y).count();
        better as f64 / ra.len().max(1) as f64
    }

    /// Table layout: `dataset,class,<method…>` with one row per class.
    pub fn to_table_csv(&self) -> String {
        let methods = self.methods();
        let mut out = String::from("dataset,class");
        for m in &methods {
            out.push(',');
            out.push_str(m.name());
        }
        out.push('\n');
        for class in self.classes() {
            let tag = self
                .rows
                .iter()
                .find(|r| r.class_label == class)
                .map_or("", |r| r.dataset_tag.as_str());
            out.push_str(&format!("{tag},{class}"));
            for m in &methods {
                match self.rho(class, *m) {
                    Some(rho) => out.push_str(&format!(",{rho:.6}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn per_record_csv(&self) -> String {
        let mut out = String::from("record_id,class,method,rho\n");
        for r in &self.per_record {
            out.push_str(&format!(
                "{},{},{},{:.17e}\n",
                r.record_id, r.class_label, r.method, r.rho
            ));
        }
        out
    }
}

fn pick_references(pool: &[Record], class: usize, k: usize, seed: u64) -> Vec<Record> {
    let mut candidates: Vec<&Record> = pool.iter().filter(|r| r.label == Some(class)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);
    candidates.into_iter().take(k).cloned().collect()
}

/// Per class, the mean Spearman correlation between each method's channel
/// attributions and the truth. Every record is explained for its own label.
pub fn comparison_table<C: Classifier + ?Sized>(
    model: &C,
    records: &[Record],
    config: &ComparisonConfig,
) -> Result<SpearmanReport> {
    let n_features = model.n_channels();
    if n_features < 2 {
        return Err(Error::UndefinedCorrelation("fewer than 2 features".into()));
    }
    if config.background.is_empty() {
        return Err(Error::invalid("background set is empty"));
    }
    let mut labels = Vec::with_capacity(records.len());
    for r in records {
        labels.push(
            r.label
                .ok_or_else(|| Error::invalid(format!("record {} has no label", r.id)))?,
        );
    }
    let mut classes = labels.clone();
    classes.sort_unstable();
    classes.dedup();

    let zero = Tensor::zeros(vec![model.n_channels(), model.input_length()]);
    let granularity = Granularity::Channel;

    let mut deltas = Vec::new();
    if config.methods.contains(&MethodTag::Cig) {
        for &class in &classes {
            let seed = derive_seed(config.seed, STREAM_REFERENCES + class as u64);
            let refs = pick_references(&config.reference_pool, class, config.k_references, seed);
            if refs.is_empty() {
                return Err(Error::invalid(format!(
                    "no reference records for class {class}"
                )));
            }
            let ss = SsConfig {
                samples_per_feature: config.delta_samples,
                background: config.background.clone(),
                seed: derive_seed(config.seed, STREAM_DELTA + class as u64),
                granularity,
            };
            log::info!(
                "estimating compensation for class {class} from {} references",
                refs.len()
            );
            deltas.push(estimate_delta(
                model,
                &refs,
                &zero,
                config.ig_steps,
                &ss,
                class,
            )?);
        }
    }
    let delta_for = |class: usize| deltas.iter().find(|d| d.class_index == class);

    let per_record: Vec<Vec<RecordRho>> = records
        .par_iter()
        .zip(&labels)
        .enumerate()
        .map(|(i, (record, &class))| -> Result<Vec<RecordRho>> {
            let truth = match config.truth {
                Truth::Exact => {
                    exact_shapley(model, record, &config.background, class, granularity)?
                }
                Truth::Sampled { samples } => {
                    let ss = SsConfig {
                        samples_per_feature: samples,
                        background: config.background.clone(),
                        seed: derive_seed(config.seed, STREAM_TRUTH + i as u64),
                        granularity,
                    };
                    shapley_sampling(model, record, &ss, class)?
                }
            };
            config
                .methods
                .iter()
                .map(|&method| {
                    let attr = match method {
                        MethodTag::Ig => integrated_gradients(
                            model,
                            record,
                            &zero,
                            config.ig_steps,
                            class,
                            granularity,
                        )?,
                        MethodTag::Ss => {
                            let ss = SsConfig {
                                samples_per_feature: config.ss_samples,
                                background: config.background.clone(),
                                seed: derive_seed(config.seed, STREAM_SS + i as u64),
                                granularity,
                            };
                            shapley_sampling(model, record, &ss, class)?
                        }
                        MethodTag::ExactShapley => {
                            exact_shapley(model, record, &config.background, class, granularity)?
                        }
                        MethodTag::Cig => {
                            let delta = delta_for(class).expect("delta estimated per class");
                            compensated_ig(
                                model,
                                record,
                                delta,
                                &zero,
                                config.ig_steps,
                                class,
                                granularity,
                            )?
                        }
                    };
                    let rho = spearman(&attr.per_feature, &truth.per_feature).map_err(|e| {
                        Error::UndefinedCorrelation(format!("record {} ({method}): {e}", record.id))
                    })?;
                    Ok(RecordRho {
                        record_id: record.id.clone(),
                        class_label: class,
                        method,
                        rho,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let per_record: Vec<RecordRho> = per_record.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for &class in &classes {
        for &method in &config.methods {
            let rhos: Vec<f64> = per_record
                .iter()
                .filter(|r| r.class_label == class && r.method == method)
                .map(|r| r.rho)
                .collect();
            rows.push(SpearmanRow {
                dataset_tag: config.dataset_tag.clone(),
                model_tag: config.model_tag.clone(),
                class_label: class,
                method,
                rho: rhos.iter().sum::<f64>() / rhos.len() as f64,
                n_records: rhos.len(),
            });
        }
    }
    Ok(SpearmanReport {
        rows,
        per_record,
        n_records: records.len(),
        deltas,
    })
}
