//! Axiom checks, rank-correlation comparisons and the cost model.

mod axioms;
mod comparison;
mod cost;
mod spearman;
mod suite;

pub use axioms::{
    axiom_completeness, axiom_dummy, axiom_implementation_invariance, axiom_linearity,
    axiom_symmetry, completeness_tolerance, CompletenessCheck, DummyCheck, InvarianceCheck,
    LinearityCheck, SymmetryCheck, INVARIANCE_TOLERANCE, LINEARITY_TOLERANCE, SS_DUMMY_TOLERANCE,
    SYMMETRY_TOLERANCE,
};
pub use comparison::{
    comparison_table, derive_seed, ComparisonConfig, RecordRho, SpearmanReport, SpearmanRow, Truth,
};
pub use cost::{cost, cost_report, CostEntry, CostMethod, CostParams};
pub use spearman::{average_ranks, spearman};
pub use suite::{asymmetric_baseline_gap, run_axiom_suite, Axiom, SuiteConfig, SuiteResult};

use crate::attribution::{
    exact_shapley, integrated_gradients, shapley_sampling, AttributionVector, Granularity,
    MethodTag, SsConfig,
};
use crate::compensation::{compensated_ig, CompensationDelta};
use crate::error::Result;
use crate::model::Classifier;
use crate::tensor::{Record, Tensor};

/// An attribution method together with everything it needs to run.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Ig {
        baseline: Tensor,
        steps: usize,
    },
    Ss(SsConfig),
    ExactShapley {
        background: Vec<Tensor>,
    },
    Cig {
        baseline: Tensor,
        steps: usize,
        delta: CompensationDelta,
    },
}

impl MethodSpec {
    pub fn tag(&self) -> MethodTag {
        match self {
            MethodSpec::Ig { .. } => MethodTag::Ig,
            MethodSpec::Ss(_) => MethodTag::Ss,
            MethodSpec::ExactShapley { .. } => MethodTag::ExactShapley,
            MethodSpec::Cig { .. } => MethodTag::Cig,
        }
    }

    pub fn attribute<C: Classifier + ?Sized>(
        &self,
        model: &C,
        record: &Record,
        class_index: usize,
        granularity: Granularity,
    ) -> Result<AttributionVector> {
        match self {
            MethodSpec::Ig { baseline, steps } => {
                integrated_gradients(model, record, baseline, *steps, class_index, granularity)
            }
            MethodSpec::Ss(config) => {
                let config = SsConfig {
                    granularity,
                    ..config.clone()
                };
                shapley_sampling(model, record, &config, class_index)
            }
            MethodSpec::ExactShapley { background } => {
                exact_shapley(model, record, background, class_index, granularity)
            }
            MethodSpec::Cig {
                baseline,
                steps,
                delta,
            } => compensated_ig(
                model,
                record,
                delta,
                baseline,
                *steps,
                class_index,
                granularity,
            ),
        }
    }
}
