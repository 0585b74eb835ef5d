//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use attribkit::attribution::{
    exact_shapley, integrated_gradients, shapley_sampling, Granularity, MethodTag, SsConfig,
};
use attribkit::compensation::{compensated_ig, estimate_delta};
use attribkit::data::{generate_synthetic, SyntheticConfig};
use attribkit::evaluation::{
    comparison_table, cost, cost_report, run_axiom_suite, Axiom, ComparisonConfig, CostMethod,
    CostParams, SuiteConfig, Truth,
};
use attribkit::model::{accuracy, Architecture, ModelConfig, TrainConfig};
use attribkit::{Classifier, Model, Record, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn random_tensor(rng: &mut ChaCha8Rng, n: usize, l: usize) -> Tensor {
    let data = (0..n * l).map(|_| rng.random_range(-1.0..1.5)).collect();
    Tensor::new(vec![n, l], data).unwrap()
}

fn random_record(rng: &mut ChaCha8Rng, n: usize, l: usize) -> Record {
    Record::new("r", None, random_tensor(rng, n, l)).unwrap()
}

fn model(arch: Architecture, n: usize, l: usize, seed: u64) -> Model {
    let config = ModelConfig {
        architecture: arch,
        ..ModelConfig::default()
    };
    Model::init(n, l, 2, &config, seed).unwrap()
}

const ARCHS: [Architecture; 2] = [Architecture::Temporal, Architecture::Spatiotemporal];

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!(
            "took {:.1}s, limit {:.0}s",
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        ))
    }
}

/// Gradient correctness against central finite differences.
fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for arch in ARCHS {
        for seed in 0..50 {
            let m = model(arch, 6, 32, seed);
            let x = random_record(&mut rng, 6, 32);
            let class = seed as usize % 2;
            let g = m.input_gradient(&x, class).unwrap().values;
            let (mut gap, mut scale) = (0.0f64, 0.0f64);
            for i in 0..x.values().len() {
                let mut plus = x.values().clone();
                plus.data_mut()[i] += h;
                let mut minus = x.values().clone();
                minus.data_mut()[i] -= h;
                let fd =
                    (m.logit(&plus, class).unwrap() - m.logit(&minus, class).unwrap()) / (2.0 * h);
                gap = gap.max((fd - g.data()[i]).abs());
                scale = scale.max(fd.abs()).max(g.data()[i].abs());
            }
            worst = worst.max(gap / scale);
        }
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    let detail = format!("max relative error {worst:.2e} over 100 models");
    if worst < 1e-5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Completeness at 4096 steps and error shrinking from 256 steps.
fn ig_completeness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut improved = 0;
    for t in 0..100u64 {
        let m = model(ARCHS[t as usize % 2], 4, 24, 100 + t);
        let x = random_record(&mut rng, 4, 24);
        let b = random_tensor(&mut rng, 4, 24);
        let rhs = m.logit(x.values(), 0).unwrap() - m.logit(&b, 0).unwrap();
        let err = |steps| {
            let a = integrated_gradients(&m, &x, &b, steps, 0, Granularity::Timepoint).unwrap();
            (a.total() - rhs).abs()
        };
        let (fine, coarse) = (err(4096), err(256));
        worst = worst.max(fine);
        if coarse > fine {
            improved += 1;
        }
    }
    let detail = format!(
        "max error at 4096 steps {worst:.2e}; 256-step error larger in {improved}/100 triples"
    );
    if worst <= 1e-6 && improved >= 95 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Exact Shapley against an independent subset-enumeration oracle.
fn exact_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut oracle_gap, mut completeness_gap) = (0.0f64, 0.0f64);
    let mut cases = 0;
    for n in [4, 6] {
        for arch in ARCHS {
            for seed in 0..3 {
                let m = model(arch, n, 16, 300 + seed);
                let x = random_record(&mut rng, n, 16);
                let bg: Vec<Tensor> = (0..5).map(|_| random_tensor(&mut rng, n, 16)).collect();
                let attr = exact_shapley(&m, &x, &bg, 1, Granularity::Channel).unwrap();
                let oracle = oracles::shapley_by_subsets(&m, &x, &bg, 1);
                for (a, o) in attr.per_feature.iter().zip(&oracle) {
                    oracle_gap = oracle_gap.max((a - o).abs());
                }
                let mean_bg =
                    bg.iter().map(|b| m.logit(b, 1).unwrap()).sum::<f64>() / bg.len() as f64;
                let rhs = m.logit(x.values(), 1).unwrap() - mean_bg;
                completeness_gap = completeness_gap.max((attr.total() - rhs).abs());
                cases += 1;
            }
        }
    }
    let detail = format!(
        "{cases} cases: max oracle gap {oracle_gap:.2e}, max completeness gap {completeness_gap:.2e}"
    );
    if oracle_gap <= 1e-9 && completeness_gap <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Shapley sampling converges to the exact values.
fn ss_convergence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = model(Architecture::Temporal, 6, 32, 400);
    let x = random_record(&mut rng, 6, 32);
    let bg: Vec<Tensor> = (0..16).map(|_| random_tensor(&mut rng, 6, 32)).collect();
    let exact = exact_shapley(&m, &x, &bg, 0, Granularity::Channel).unwrap();
    let max = exact.per_feature.iter().copied().fold(f64::MIN, f64::max);
    let min = exact.per_feature.iter().copied().fold(f64::MAX, f64::min);
    let range = max - min;
    let mut worst: f64 = 0.0;
    for seed in 1..=5 {
        let config = SsConfig {
            samples_per_feature: 20_000,
            background: bg.clone(),
            seed,
            granularity: Granularity::Channel,
        };
        let s = shapley_sampling(&m, &x, &config, 0).unwrap();
        for (a, e) in s.per_feature.iter().zip(&exact.per_feature) {
            worst = worst.max((a - e).abs() / range);
        }
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    let detail = format!(
        "max deviation {:.2}% of attribution range over 5 seeds",
        100.0 * worst
    );
    if worst <= 0.02 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mirror(t: &mut Tensor, p: usize, q: usize) {
    let row = t.row(p).to_vec();
    t.row_mut(q).copy_from_slice(&row);
}

/// Symmetry of CIG and exact Shapley on weight-shared temporal models.
fn symmetry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, l) = (6, 32);
    let mut failures = Vec::new();
    let (mut max_cig, mut max_exact, mut min_ratio) = (0.0f64, 0.0f64, f64::INFINITY);
    for i in 0..20u64 {
        let (p, q) = (i as usize % n, (i as usize + 1 + i as usize / n) % n);
        let (p, q) = if p == q { (p, (q + 1) % n) } else { (p, q) };
        let m = model(Architecture::Temporal, n, l, 500 + i)
            .symmetrize_channels(p, q)
            .unwrap();
        let mut bg: Vec<Tensor> = (0..16).map(|_| random_tensor(&mut rng, n, l)).collect();
        bg.iter_mut().for_each(|b| mirror(b, p, q));
        let refs: Vec<Record> = (0..10).map(|_| random_record(&mut rng, n, l)).collect();
        let zero = Tensor::zeros(vec![n, l]);
        let ss = SsConfig {
            samples_per_feature: 500,
            background: bg.clone(),
            seed: 900 + i,
            granularity: Granularity::Channel,
        };
        let delta = estimate_delta(&m, &refs, &zero, 256, &ss, 0).unwrap();
        let mut v = random_tensor(&mut rng, n, l);
        mirror(&mut v, p, q);
        let x = Record::new("sym", None, v).unwrap();

        let cig = compensated_ig(&m, &x, &delta, &zero, 256, 0, Granularity::Channel).unwrap();
        let se = cig.std_errors.as_ref().unwrap();
        let cig_gap = (cig.per_feature[p] - cig.per_feature[q]).abs();
        let tolerance = 2.0 * (se[p] * se[p] + se[q] * se[q]).sqrt();
        let exact = exact_shapley(&m, &x, &bg, 0, Granularity::Channel).unwrap();
        let exact_gap = (exact.per_feature[p] - exact.per_feature[q]).abs();
        let asym = random_tensor(&mut rng, n, l);
        let ig = integrated_gradients(&m, &x, &asym, 256, 0, Granularity::Channel).unwrap();
        let ig_gap = (ig.per_feature[p] - ig.per_feature[q]).abs();

        max_cig = max_cig.max(cig_gap / tolerance);
        max_exact = max_exact.max(exact_gap);
        min_ratio = min_ratio.min(ig_gap / cig_gap.max(f64::MIN_POSITIVE));
        if cig_gap > tolerance || exact_gap > 1e-9 || ig_gap <= 10.0 * cig_gap {
            failures.push(i);
        }
    }
    let detail = format!(
        "20 pairs: max CIG gap {max_cig:.2e} x tolerance, max exact gap {max_exact:.2e}, min asymmetric-IG/CIG gap ratio {min_ratio:.1e}"
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; failing pairs {failures:?}"))
    }
}

/// Dummy, linearity and implementation invariance from the axiom suite.
fn axiom_suite() -> Outcome {
    let mut total = 0;
    let mut failed = Vec::new();
    for arch in ARCHS {
        let config = SuiteConfig {
            axioms: vec![
                Axiom::Dummy,
                Axiom::Linearity,
                Axiom::ImplementationInvariance,
            ],
            architecture: arch,
            instances: 20,
            ..SuiteConfig::default()
        };
        for r in run_axiom_suite(&config).unwrap() {
            total += 1;
            if !r.pass {
                failed.push(format!(
                    "{} {} {} #{}",
                    arch.tag(),
                    r.axiom.name(),
                    r.method,
                    r.instance
                ));
            }
        }
    }
    let detail = format!(
        "{} of {total} checks passed on 20 instances per architecture",
        total - failed.len()
    );
    if failed.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; failed: {}", failed.join(", ")))
    }
}

/// Rank-correlation trend on synthetic data with exact Shapley truth.
fn trend() -> Outcome {
    let start = Instant::now();
    let data = generate_synthetic(&SyntheticConfig::default()).unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for arch in ARCHS {
        let config = ModelConfig {
            architecture: arch,
            ..ModelConfig::default()
        };
        let m = Model::init(6, 64, 2, &config, 42)
            .unwrap()
            .train(&data.train.records, &TrainConfig::default())
            .unwrap();
        let acc = accuracy(&m, &data.eval.records).unwrap();
        let background = data
            .train
            .sample(64, 7)
            .into_iter()
            .map(|r| r.values().clone())
            .collect();
        let comparison = ComparisonConfig {
            dataset_tag: "synthetic".into(),
            model_tag: arch.tag().into(),
            methods: vec![MethodTag::Cig, MethodTag::Ss, MethodTag::Ig],
            ig_steps: 256,
            ss_samples: 500,
            delta_samples: 500,
            k_references: 10,
            background,
            reference_pool: data.train.records.clone(),
            truth: Truth::Exact,
            seed: 42,
        };
        let report = comparison_table(&m, &data.eval.records, &comparison).unwrap();
        let (cig, ss, ig) = (
            report.mean_rho(MethodTag::Cig),
            report.mean_rho(MethodTag::Ss),
            report.mean_rho(MethodTag::Ig),
        );
        let better = report.fraction_better(MethodTag::Cig, MethodTag::Ig);
        lines.push(format!(
            "{}: acc {acc:.3}, rho cig {cig:.3} ss {ss:.3} ig {ig:.3}, cig>ig on {:.1}% of records",
            arch.tag(),
            100.0 * better
        ));
        ok &= match arch {
            Architecture::Temporal => cig >= ss - 0.02 && cig > ig + 0.1 && better >= 0.9,
            Architecture::Spatiotemporal => cig > ig,
        };
    }
    within(start.elapsed(), Duration::from_secs(600))?;
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Operation counts of the cost model.
fn cost_model() -> Outcome {
    let table = CostParams {
        ig_steps: 100,
        n_records: 400,
        n_sensors: 61,
        ss_evals_per_sensor: 500,
        k_compensation: 20,
        backprop_cost_ratio: 1.0,
    };
    let counts = [
        cost(&table, CostMethod::Ig),
        cost(&table, CostMethod::Ss),
        cost(&table, CostMethod::Cig),
    ];
    let ratio_params = CostParams {
        n_records: 1000,
        k_compensation: 10,
        ..table
    };
    let ratio: Vec<u64> = cost_report(&ratio_params).iter().map(|e| e.ratio).collect();
    let detail = format!("ig/ss/cig = {counts:?}, ig:cig:ss = {ratio:?}");
    if counts == [40_000, 12_200_000, 650_000] && ratio == [20, 81, 6100] {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn attribkit(dir: &Path, threads: &str, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_attribkit"))
        .current_dir(dir)
        .args(args)
        .args(["--threads", threads])
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

/// Every command reproduces its outputs byte for byte across reruns and thread counts.
fn determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pipeline: &[(&[&str], &[&str])] = &[
        (
            &[
                "gen",
                "--out-dir",
                "d",
                "--length",
                "32",
                "--train-per-class",
                "30",
                "--eval-per-class",
                "5",
            ],
            &["d/train.csv", "d/eval.csv"],
        ),
        (
            &[
                "train",
                "--data",
                "d/train.csv",
                "--epochs",
                "5",
                "--out",
                "model.json",
            ],
            &["model.json"],
        ),
        (
            &[
                "delta",
                "--model",
                "model.json",
                "--references",
                "d/train.csv",
                "--k",
                "4",
                "--samples",
                "200",
                "--background-size",
                "16",
                "--out",
                "delta0.json",
            ],
            &["delta0.json"],
        ),
        (
            &[
                "delta",
                "--model",
                "model.json",
                "--references",
                "d/train.csv",
                "--k",
                "4",
                "--samples",
                "200",
                "--background-size",
                "16",
                "--class-index",
                "1",
                "--out",
                "delta1.json",
            ],
            &["delta1.json"],
        ),
        (
            &[
                "attribute",
                "--model",
                "model.json",
                "--data",
                "d/eval.csv",
                "--method",
                "ig",
                "--out",
                "ig.csv",
            ],
            &["ig.csv", "ig.json"],
        ),
        (
            &[
                "attribute",
                "--model",
                "model.json",
                "--data",
                "d/eval.csv",
                "--method",
                "ig",
                "--baseline",
                "mean",
                "--background",
                "d/train.csv",
                "--granularity",
                "timepoint",
                "--out",
                "igm.csv",
            ],
            &["igm.csv", "igm.json"],
        ),
        (
            &[
                "attribute",
                "--model",
                "model.json",
                "--data",
                "d/eval.csv",
                "--method",
                "ss",
                "--samples",
                "300",
                "--background",
                "d/train.csv",
                "--background-size",
                "16",
                "--out",
                "ss.csv",
            ],
            &["ss.csv", "ss.json"],
        ),
        (
            &[
                "attribute",
                "--model",
                "model.json",
                "--data",
                "d/eval.csv",
                "--method",
                "exact",
                "--background",
                "d/train.csv",
                "--background-size",
                "16",
                "--out",
                "exact.csv",
            ],
            &["exact.csv", "exact.json"],
        ),
        (
            &[
                "attribute",
                "--model",
                "model.json",
                "--data",
                "d/eval.csv",
                "--method",
                "cig",
                "--delta",
                "delta0.json",
                "--delta",
                "delta1.json",
                "--out",
                "cig.csv",
            ],
            &["cig.csv", "cig.json"],
        ),
        (
            &[
                "compare",
                "--model",
                "model.json",
                "--eval",
                "d/eval.csv",
                "--train",
                "d/train.csv",
                "--samples",
                "200",
                "--delta-samples",
                "200",
                "--k",
                "4",
                "--background-size",
                "16",
                "--per-class",
                "3",
                "--out",
                "table.csv",
                "--per-record",
                "records.csv",
            ],
            &["table.csv", "records.csv"],
        ),
        (
            &[
                "compare",
                "--model",
                "model.json",
                "--eval",
                "d/eval.csv",
                "--train",
                "d/train.csv",
                "--truth",
                "ss",
                "--truth-samples",
                "1000",
                "--methods",
                "ig,cig",
                "--delta-samples",
                "100",
                "--k",
                "2",
                "--background-size",
                "8",
                "--per-class",
                "2",
                "--out",
                "table_ss.csv",
            ],
            &["table_ss.csv"],
        ),
        (
            &[
                "axioms",
                "--suite",
                "all",
                "--instances",
                "2",
                "--out",
                "axioms.json",
            ],
            &["axioms.json"],
        ),
        (
            &["cost", "--records", "1000", "--out", "cost.json"],
            &["cost.json"],
        ),
    ];
    let runs = [("a", "1"), ("b", "1"), ("c", "3")];
    for (name, threads) in runs {
        let dir = root.path().join(name);
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        for (args, _) in pipeline {
            attribkit(&dir, threads, args)?;
        }
    }
    let mut files = 0;
    for (_, outputs) in pipeline {
        for file in *outputs {
            let read = |run: &str| {
                std::fs::read(root.path().join(run).join(file)).map_err(|e| format!("{file}: {e}"))
            };
            let reference = read("a")?;
            for (run, threads) in &runs[1..] {
                if read(run)? != reference {
                    return Err(format!("{file} differs in run {run} (--threads {threads})"));
                }
            }
            files += 1;
        }
    }
    Ok(format!(
        "{files} output files identical across 2 reruns with 1 thread and 1 run with 3 threads"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("gradient correctness", gradient_correctness),
        ("IG completeness", ig_completeness),
        ("exact Shapley oracle", exact_oracle),
        ("SS convergence", ss_convergence),
        ("symmetry", symmetry),
        ("dummy, linearity, invariance", axiom_suite),
        ("rank-correlation trend", trend),
        ("cost model", cost_model),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({secs:.1}s) - {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {}: {name} ({secs:.1}s) - {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
