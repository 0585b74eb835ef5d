//! Evaluation-count cost model for IG, SS and compensated IG.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Riemann steps per IG attribution (`m`).
    pub ig_steps: u64,
    pub n_records: u64,
    /// Number of sensors (`S`).
    pub n_sensors: u64,
    /// Forward evaluations per sensor for SS (`F`).
    pub ss_evals_per_sensor: u64,
    /// Reference records used for compensation (`K`).
    pub k_compensation: u64,
    /// Cost of one backpropagation relative to one forward pass.
    pub backprop_cost_ratio: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            ig_steps: 100,
            n_records: 400,
            n_sensors: 61,
            ss_evals_per_sensor: 500,
            k_compensation: 10,
            backprop_cost_ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMethod {
    Ig,
    Ss,
    Cig,
}

impl CostMethod {
    pub const ALL: [CostMethod; 3] = [CostMethod::Ig, CostMethod::Cig, CostMethod::Ss];

    pub fn name(self) -> &'static str {
        match self {
            CostMethod::Ig => "ig",
            CostMethod::Ss => "ss",
            CostMethod::Cig => "cig",
        }
    }
}

/// `ig`: m·records backprops; `ss`: F·S·records forwards;
/// `cig`: IG on every record plus SS on the K compensation records.
pub fn cost(params: &CostParams, method: CostMethod) -> u64 {
    let backprops = |records: u64| -> u64 {
        let n = params.ig_steps * records;
        if params.backprop_cost_ratio == 1.0 {
            n
        } else {
            (n as f64 * params.backprop_cost_ratio).round() as u64
        }
    };
    let forwards = |records: u64| params.ss_evals_per_sensor * params.n_sensors * records;
    match method {
        CostMethod::Ig => backprops(params.n_records),
        CostMethod::Ss => forwards(params.n_records),
        CostMethod::Cig => backprops(params.n_records) + forwards(params.k_compensation),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostEntry {
    pub method: CostMethod,
    pub count: u64,
    /// `count` divided by the gcd of all counts in the report.
    pub ratio: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Costs of IG, CIG and SS with their reduced integer ratio.
pub fn cost_report(params: &CostParams) -> Vec<CostEntry> {
    let counts: Vec<(CostMethod, u64)> = CostMethod::ALL
        .iter()
        .map(|&m| (m, cost(params, m)))
        .collect();
    let divisor = counts.iter().fold(0, |g, &(_, c)| gcd(g, c)).max(1);
    counts
        .into_iter()
        .map(|(method, count)| CostEntry {
            method,
            count,
            ratio: count / divisor,
        })
        .collect()
}
