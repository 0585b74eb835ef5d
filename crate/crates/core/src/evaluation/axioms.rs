//! Executable checks for completeness, dummy, linearity, symmetry and
//! implementation invariance.

use super::MethodSpec;
use crate::attribution::{integrated_gradients, Granularity, MethodTag};
use crate::error::{Error, Result};
use crate::model::{Classifier, Model};
use crate::tensor::{Record, Tensor};

pub const LINEARITY_TOLERANCE: f64 = 1e-9;
pub const INVARIANCE_TOLERANCE: f64 = 1e-9;
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;
pub const SS_DUMMY_TOLERANCE: f64 = 1e-12;

/// `1e-6` at 4096 steps, scaled by the midpoint rule's `1/m²` error below that.
pub fn completeness_tolerance(steps: usize) -> f64 {
    let scale = 4096.0 / steps.max(1) as f64;
    1e-6 * (scale * scale).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletenessCheck {
    /// Sum of attributions.
    pub lhs: f64,
    /// `f(x) − f(baseline)`.
    pub rhs: f64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn axiom_completeness<C: Classifier + ?Sized>(
    model: &C,
    record: &Record,
    baseline: &Tensor,
    steps: usize,
    class_index: usize,
) -> Result<CompletenessCheck> {
    let attr = integrated_gradients(
        model,
        record,
        baseline,
        steps,
        class_index,
        Granularity::Timepoint,
    )?;
    let lhs = attr.total();
    let rhs = model.logit(record.values(), class_index)? - model.logit(baseline, class_index)?;
    let abs_error = (lhs - rhs).abs();
    let tolerance = completeness_tolerance(steps);
    Ok(CompletenessCheck {
        lhs,
        rhs,
        abs_error,
        tolerance,
        pass: abs_error <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DummyCheck {
    pub channel: usize,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// The attribution of a channel the model ignores must vanish: exactly for
/// deterministic methods, to `1e-12` for sampled ones.
pub fn axiom_dummy<C: Classifier + ?Sized>(
    model: &C,
    record: &Record,
    channel: usize,
    method: &MethodSpec,
    class_index: usize,
) -> Result<DummyCheck> {
    if channel >= record.n_channels() {
        return Err(Error::invalid(format!("channel {channel} out of range")));
    }
    let attr = method.attribute(model, record, class_index, Granularity::Channel)?;
    let value = attr.per_feature[channel];
    let tolerance = match method.tag() {
        MethodTag::Ig | MethodTag::ExactShapley => 0.0,
        MethodTag::Ss | MethodTag::Cig => SS_DUMMY_TOLERANCE,
    };
    Ok(DummyCheck {
        channel,
        value,
        tolerance,
        pass: value.abs() <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearityCheck {
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares `φ(a·f1 + b·f2)` with `a·φ(f1) + b·φ(f2)`; the combined model is
/// built as a single network. Sampling methods reuse the same seed for all
/// three runs, so draws are paired.
pub fn axiom_linearity(
    f1: &Model,
    f2: &Model,
    a: f64,
    b: f64,
    record: &Record,
    method: &MethodSpec,
    class_index: usize,
) -> Result<LinearityCheck> {
    if method.tag() == MethodTag::Cig {
        return Err(Error::invalid(
            "linearity of compensated IG needs one delta per model; check ig and ss instead",
        ));
    }
    let combined = Model::linear_combination(a, f1, b, f2)?;
    let granularity = Granularity::Channel;
    let whole = method.attribute(&combined, record, class_index, granularity)?;
    let p1 = method.attribute(f1, record, class_index, granularity)?;
    let p2 = method.attribute(f2, record, class_index, granularity)?;
    let max_abs_error = whole
        .per_feature
        .iter()
        .zip(p1.per_feature.iter().zip(&p2.per_feature))
        .map(|(w, (x, y))| (w - (a * x + b * y)).abs())
        .fold(0.0, f64::max);
    Ok(LinearityCheck {
        max_abs_error,
        tolerance: LINEARITY_TOLERANCE,
        pass: max_abs_error <= LINEARITY_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryCheck {
    pub phi_p: f64,
    pub phi_q: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Channels `p` and `q` carry identical series; a symmetric model must give
/// them equal attributions. Sampled methods are allowed two standard errors
/// of the difference.
pub fn axiom_symmetry<C: Classifier + ?Sized>(
    model: &C,
    record: &Record,
    p: usize,
    q: usize,
    method: &MethodSpec,
    class_index: usize,
) -> Result<SymmetryCheck> {
    if p >= record.n_channels() || q >= record.n_channels() || p == q {
        return Err(Error::invalid("p and q must be distinct channels"));
    }
    if record.values().row(p) != record.values().row(q) {
        return Err(Error::invalid(format!(
            "record {} has different series on channels {p} and {q}",
            record.id
        )));
    }
    let attr = method.attribute(model, record, class_index, Granularity::Channel)?;
    let (phi_p, phi_q) = (attr.per_feature[p], attr.per_feature[q]);
    let gap = (phi_p - phi_q).abs();
    let tolerance = match &attr.std_errors {
        Some(se) => 2.0 * (se[p] * se[p] + se[q] * se[q]).sqrt(),
        None => SYMMETRY_TOLERANCE,
    };
    Ok(SymmetryCheck {
        phi_p,
        phi_q,
        gap,
        tolerance,
        pass: gap <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceCheck {
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Per-timepoint IG of two functionally equivalent models must agree.
pub fn axiom_implementation_invariance<A, B>(
    model: &A,
    equivalent: &B,
    record: &Record,
    baseline: &Tensor,
    steps: usize,
    class_index: usize,
) -> Result<InvarianceCheck>
where
    A: Classifier + ?Sized,
    B: Classifier + ?Sized,
{
    let x = integrated_gradients(
        model,
        record,
        baseline,
        steps,
        class_index,
        Granularity::Timepoint,
    )?;
    let y = integrated_gradients(
        equivalent,
        record,
        baseline,
        steps,
        class_index,
        Granularity::Timepoint,
    )?;
    let max_abs_error = x
        .per_feature
        .iter()
        .zip(&y.per_feature)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(InvarianceCheck {
        max_abs_error,
        tolerance: INVARIANCE_TOLERANCE,
        pass: max_abs_error <= INVARIANCE_TOLERANCE,
    })
}
