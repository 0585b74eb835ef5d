//! One function per subcommand.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use attribkit::attribution::{
    attribution_sidecar, attributions_to_csv, exact_shapley, integrated_gradients,
    shapley_sampling, AttributionVector, Granularity, MethodTag, SsConfig, MAX_EXACT_FEATURES,
};
use attribkit::compensation::{compensated_ig, estimate_delta, CompensationDelta};
use attribkit::data::{generate_synthetic, Dataset, SyntheticConfig};
use attribkit::evaluation::{
    comparison_table, cost_report, derive_seed, run_axiom_suite, Axiom, ComparisonConfig,
    CostParams, SuiteConfig, Truth,
};
use attribkit::model::{accuracy, Activation, Architecture, ModelConfig, TrainConfig};
use attribkit::{Model, Record, Tensor};
use rayon::prelude::*;
use serde_json::json;

use crate::failure::{require_file, write_output, Context, Failure};
use crate::{
    ActivationArg, Arch, AttributeArgs, AxiomsArgs, BaselineArg, CompareArgs, CostArgs, DeltaArgs,
    GenArgs, GranularityArg, MethodArg, SuiteArg, TrainArgs, TruthArg,
};

// Independent random streams derived from the global seed.
const STREAM_SHUFFLE: u64 = 1;
const STREAM_BACKGROUND: u64 = 2;
const STREAM_REFERENCES: u64 = 3;
const STREAM_SS: u64 = 4;
const STREAM_SELECT: u64 = 5;

type CmdResult = Result<(), Failure>;

fn load_dataset(path: &Path) -> Result<Dataset, Failure> {
    require_file(path)?;
    Dataset::load_csv(path).context(format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    require_file(path)?;
    attribkit::model::load_model(path).context(format!("reading {}", path.display()))
}

fn check_compatible(model: &Model, data: &Dataset, path: &Path) -> CmdResult {
    use attribkit::Classifier;
    if (data.n_channels, data.length) != (model.n_channels(), model.input_length()) {
        return Err(Failure::invalid(format!(
            "{} holds {}x{} records but the model expects {}x{}",
            path.display(),
            data.n_channels,
            data.length,
            model.n_channels(),
            model.input_length()
        )));
    }
    Ok(())
}

fn to_json(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

fn architecture(arch: Arch) -> Architecture {
    match arch {
        Arch::Temporal => Architecture::Temporal,
        Arch::Spatiotemporal => Architecture::Spatiotemporal,
    }
}

fn method_tag(method: MethodArg) -> MethodTag {
    match method {
        MethodArg::Ig => MethodTag::Ig,
        MethodArg::Ss => MethodTag::Ss,
        MethodArg::Exact => MethodTag::ExactShapley,
        MethodArg::Cig => MethodTag::Cig,
    }
}

fn background_set(data: &Dataset, size: usize, seed: u64) -> Result<Vec<Tensor>, Failure> {
    if size == 0 {
        return Err(Failure::invalid("--background-size must be at least 1"));
    }
    let records = data.sample(size, derive_seed(seed, STREAM_BACKGROUND));
    if records.is_empty() {
        return Err(Failure::invalid("background dataset is empty"));
    }
    Ok(records.into_iter().map(|r| r.values().clone()).collect())
}

pub fn gen(args: &GenArgs, seed: u64) -> CmdResult {
    let config = SyntheticConfig {
        n_channels: args.channels,
        length: args.length,
        n_classes: args.classes,
        train_per_class: args.train_per_class,
        eval_per_class: args.eval_per_class,
        offset: args.offset,
        discriminative_channels: args.discriminative.clone(),
        noise_scale: args.noise,
        amplitude: args.amplitude,
        seed,
    };
    let data = generate_synthetic(&config)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", args.out_dir.display())))?;
    for dataset in [&data.train, &data.eval] {
        let name = format!(
            "{}.csv",
            dataset.split.expect("generated splits are tagged").name()
        );
        let path = args.out_dir.join(name);
        write_output(&path, &dataset.to_csv()?)?;
        log::info!("wrote {} records to {}", dataset.len(), path.display());
    }
    Ok(())
}

pub fn train(args: &TrainArgs, seed: u64) -> CmdResult {
    let data = load_dataset(&args.data)?;
    let config = ModelConfig {
        architecture: architecture(args.arch),
        filters: args.filters,
        activation: match args.activation {
            ActivationArg::Tanh => Activation::Tanh,
            ActivationArg::Relu => Activation::Relu,
        },
        ..ModelConfig::default()
    };
    let model = Model::init(data.n_channels, data.length, data.n_classes, &config, seed)?;
    log::info!(
        "training {} model on {} records for {} epochs",
        config.architecture.tag(),
        data.len(),
        args.epochs
    );
    let hyper = TrainConfig {
        learning_rate: args.lr,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: derive_seed(seed, STREAM_SHUFFLE),
    };
    let trained = model.train(&data.records, &hyper)?;
    log::info!(
        "training accuracy {:.4}",
        accuracy(&trained, &data.records)?
    );
    write_output(&args.out, &trained.to_json())?;
    log::info!("wrote {}", args.out.display());
    Ok(())
}

fn select_records(data: &Dataset, ids: &[String]) -> Result<Vec<Record>, Failure> {
    if ids.is_empty() {
        return Ok(data.records.clone());
    }
    ids.iter()
        .map(|id| {
            data.records
                .iter()
                .find(|r| &r.id == id)
                .cloned()
                .ok_or_else(|| Failure::invalid(format!("record {id} not found")))
        })
        .collect()
}

fn sidecar_path(out: &Path) -> Result<PathBuf, Failure> {
    if out.extension().is_some_and(|e| e == "json") {
        return Err(Failure::invalid(
            "--out must not end in .json; the metadata sidecar uses that name",
        ));
    }
    Ok(out.with_extension("json"))
}

pub fn attribute(args: &AttributeArgs, seed: u64) -> CmdResult {
    let model = load_model(&args.model)?;
    let data = load_dataset(&args.data)?;
    check_compatible(&model, &data, &args.data)?;
    let sidecar = sidecar_path(&args.out)?;
    let granularity = match args.granularity {
        GranularityArg::Channel => Granularity::Channel,
        GranularityArg::Timepoint => Granularity::Timepoint,
    };
    if granularity == Granularity::Timepoint && args.method != MethodArg::Ig {
        return Err(Failure::invalid(
            "timepoint granularity is only available for --method ig",
        ));
    }
    let records = select_records(&data, &args.records)?;
    if records.is_empty() {
        return Err(Failure::invalid("no records to explain"));
    }
    let classes: Vec<usize> = records
        .iter()
        .map(|r| {
            args.class_index.or(r.label).ok_or_else(|| {
                Failure::invalid(format!("record {} has no label; pass --class-index", r.id))
            })
        })
        .collect::<Result<_, _>>()?;

    let needs_background = matches!(args.method, MethodArg::Ss | MethodArg::Exact)
        || (args.baseline == BaselineArg::Mean && matches!(args.method, MethodArg::Ig));
    let background = if needs_background {
        let path = args
            .background
            .as_ref()
            .ok_or_else(|| Failure::invalid("this method needs --background"))?;
        let bg_data = load_dataset(path)?;
        check_compatible(&model, &bg_data, path)?;
        background_set(&bg_data, args.background_size, seed)?
    } else {
        Vec::new()
    };

    let shape = vec![data.n_channels, data.length];
    let (baseline, baseline_name) = match args.baseline {
        BaselineArg::Zero => (Tensor::zeros(shape), "zero"),
        BaselineArg::Mean if args.method == MethodArg::Ig => {
            let mut mean = Tensor::zeros(shape);
            for b in &background {
                for (m, v) in mean.data_mut().iter_mut().zip(b.data()) {
                    *m += v;
                }
            }
            let n = background.len() as f64;
            mean.data_mut().iter_mut().for_each(|m| *m /= n);
            (mean, "mean")
        }
        BaselineArg::Mean => {
            return Err(Failure::invalid(
                "--baseline mean only applies to --method ig",
            ));
        }
    };

    let deltas: Vec<CompensationDelta> = if args.method == MethodArg::Cig {
        if args.delta.is_empty() {
            return Err(Failure::invalid(
                "--method cig needs at least one --delta file",
            ));
        }
        args.delta
            .iter()
            .map(|p| {
                require_file(p)?;
                CompensationDelta::load(p).context(format!("reading {}", p.display()))
            })
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    for class in classes.iter().collect::<BTreeSet<_>>() {
        if args.method == MethodArg::Cig && !deltas.iter().any(|d| d.class_index == *class) {
            return Err(Failure::invalid(format!(
                "no --delta file for class {class}"
            )));
        }
    }

    let ss = SsConfig {
        samples_per_feature: args.samples,
        background: background.clone(),
        seed: derive_seed(seed, STREAM_SS),
        granularity,
    };
    log::info!(
        "explaining {} records with {}",
        records.len(),
        method_tag(args.method)
    );
    let attrs: Vec<AttributionVector> = records
        .par_iter()
        .zip(&classes)
        .map(|(record, &class)| -> Result<AttributionVector, Failure> {
            let attr = match args.method {
                MethodArg::Ig => {
                    integrated_gradients(&model, record, &baseline, args.steps, class, granularity)
                }
                MethodArg::Ss => shapley_sampling(&model, record, &ss, class),
                MethodArg::Exact => exact_shapley(&model, record, &background, class, granularity),
                MethodArg::Cig => {
                    let delta = deltas
                        .iter()
                        .find(|d| d.class_index == class)
                        .expect("checked above");
                    compensated_ig(
                        &model,
                        record,
                        delta,
                        &baseline,
                        args.steps,
                        class,
                        granularity,
                    )
                }
            };
            attr.context(format!("record {}", record.id))
        })
        .collect::<Result<_, _>>()?;

    let csv = attributions_to_csv(records.iter().map(|r| r.id.as_str()).zip(&attrs));
    write_output(&args.out, &csv)?;
    let mut meta = attribution_sidecar(&attrs[0], records.len());
    meta["baseline"] = json!(if matches!(args.method, MethodArg::Ig | MethodArg::Cig) {
        baseline_name.to_string()
    } else {
        attrs[0].baseline.clone()
    });
    if args.class_index.is_none() {
        meta["class_index"] = json!("label");
    }
    if !background.is_empty() {
        meta["background_size"] = json!(background.len());
    }
    if args.method == MethodArg::Cig {
        meta["delta_files"] = json!(args
            .delta
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>());
    }
    write_output(&sidecar, &to_json(&meta))?;
    log::info!("wrote {} and {}", args.out.display(), sidecar.display());
    Ok(())
}

pub fn delta(args: &DeltaArgs, seed: u64) -> CmdResult {
    let model = load_model(&args.model)?;
    let pool = load_dataset(&args.references)?;
    check_compatible(&model, &pool, &args.references)?;
    if args.k == 0 {
        return Err(Failure::invalid("--k must be at least 1"));
    }
    let ref_seed = derive_seed(seed, STREAM_REFERENCES);
    let labelled = pool.records.iter().any(|r| r.label.is_some());
    let references = if labelled {
        pool.sample_class(args.class_index, args.k, ref_seed)
    } else {
        pool.sample(args.k, ref_seed)
    };
    if references.is_empty() {
        return Err(Failure::invalid(format!(
            "{} has no records of class {}",
            args.references.display(),
            args.class_index
        )));
    }
    if references.len() < args.k {
        log::warn!("only {} reference records available", references.len());
    }
    let background = match &args.background {
        Some(path) => {
            let data = load_dataset(path)?;
            check_compatible(&model, &data, path)?;
            background_set(&data, args.background_size, seed)?
        }
        None => background_set(&pool, args.background_size, seed)?,
    };
    let ss = SsConfig {
        samples_per_feature: args.samples,
        background,
        seed: derive_seed(seed, STREAM_SS),
        granularity: Granularity::Channel,
    };
    let zero = Tensor::zeros(vec![pool.n_channels, pool.length]);
    log::info!(
        "estimating compensation for class {} from {} references",
        args.class_index,
        references.len()
    );
    let delta = estimate_delta(
        &model,
        &references,
        &zero,
        args.steps,
        &ss,
        args.class_index,
    )?;
    write_output(&args.out, &delta.to_json())?;
    log::info!("wrote {}", args.out.display());
    Ok(())
}

pub fn compare(args: &CompareArgs, seed: u64) -> CmdResult {
    use attribkit::Classifier;
    let model = load_model(&args.model)?;
    if args.truth == TruthArg::Exact && model.n_channels() > MAX_EXACT_FEATURES {
        return Err(Failure::invalid(format!(
            "--truth exact supports at most {MAX_EXACT_FEATURES} channels (model has {}); use --truth ss",
            model.n_channels()
        )));
    }
    let eval = load_dataset(&args.eval)?;
    let train = load_dataset(&args.train)?;
    check_compatible(&model, &eval, &args.eval)?;
    check_compatible(&model, &train, &args.train)?;

    let records = match args.per_class {
        Some(n) => (0..eval.n_classes)
            .flat_map(|c| eval.sample_class(c, n, derive_seed(seed, STREAM_SELECT + c as u64)))
            .collect(),
        None => eval.records.clone(),
    };
    if records.is_empty() {
        return Err(Failure::invalid("no records to compare"));
    }
    let mut methods: Vec<MethodTag> = Vec::new();
    for m in &args.methods {
        let tag = method_tag(*m);
        if !methods.contains(&tag) {
            methods.push(tag);
        }
    }
    let dataset_tag = args.dataset_tag.clone().unwrap_or_else(|| {
        args.eval
            .file_stem()
            .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
    });
    let config = ComparisonConfig {
        dataset_tag,
        model_tag: model.architecture().tag().into(),
        methods,
        ig_steps: args.steps,
        ss_samples: args.samples,
        delta_samples: args.delta_samples,
        k_references: args.k,
        background: background_set(&train, args.background_size, seed)?,
        reference_pool: train.records.clone(),
        truth: match args.truth {
            TruthArg::Exact => Truth::Exact,
            TruthArg::Ss => Truth::Sampled {
                samples: args.truth_samples,
            },
        },
        seed,
    };
    log::info!(
        "comparing {} methods on {} records",
        config.methods.len(),
        records.len()
    );
    let report = comparison_table(&model, &records, &config)?;
    for m in report.methods() {
        log::info!("mean rho {m}: {:.4}", report.mean_rho(m));
    }
    write_output(&args.out, &report.to_table_csv())?;
    if let Some(path) = &args.per_record {
        write_output(path, &report.per_record_csv())?;
    }
    log::info!("wrote {}", args.out.display());
    Ok(())
}

pub fn axioms(args: &AxiomsArgs, seed: u64) -> CmdResult {
    let mut axioms = Vec::new();
    for s in &args.suite {
        let chosen: &[Axiom] = match s {
            SuiteArg::All => &Axiom::ALL,
            SuiteArg::Completeness => &[Axiom::Completeness],
            SuiteArg::Dummy => &[Axiom::Dummy],
            SuiteArg::Linearity => &[Axiom::Linearity],
            SuiteArg::Symmetry => &[Axiom::Symmetry],
            SuiteArg::Invariance => &[Axiom::ImplementationInvariance],
        };
        for a in chosen {
            if !axioms.contains(a) {
                axioms.push(*a);
            }
        }
    }
    let config = SuiteConfig {
        axioms,
        architecture: architecture(args.arch),
        n_channels: args.channels,
        length: args.length,
        instances: args.instances,
        ig_steps: args.steps,
        ss_samples: args.samples,
        seed,
        ..SuiteConfig::default()
    };
    log::info!(
        "running axiom checks on {} {} instances",
        args.instances,
        config.architecture.tag()
    );
    let results = run_axiom_suite(&config)?;

    let mut groups: Vec<(Axiom, String)> = Vec::new();
    for r in &results {
        if !groups.iter().any(|(a, m)| *a == r.axiom && *m == r.method) {
            groups.push((r.axiom, r.method.clone()));
        }
    }
    for (axiom, method) in &groups {
        let rows: Vec<_> = results
            .iter()
            .filter(|r| r.axiom == *axiom && r.method == *method)
            .collect();
        let passed = rows.iter().filter(|r| r.pass).count();
        let worst = rows.iter().map(|r| r.value).fold(0.0, f64::max);
        let status = if !rows[0].gated {
            "info"
        } else if passed == rows.len() {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "{status} {} {method}: {passed}/{} within tolerance (largest deviation {worst:.3e})",
            axiom.name(),
            rows.len()
        );
    }
    let failed = results.iter().filter(|r| r.gated && !r.pass).count();

    if let Some(path) = &args.out {
        let report = json!({
            "architecture": config.architecture.tag(),
            "seed": seed,
            "instances": config.instances,
            "passed": failed == 0,
            "results": results,
        });
        write_output(path, &to_json(&report))?;
    }
    if failed > 0 {
        return Err(Failure::runtime(format!("{failed} axiom checks failed")));
    }
    println!(
        "all {} gated checks passed",
        results.iter().filter(|r| r.gated).count()
    );
    Ok(())
}

pub fn cost(args: &CostArgs) -> CmdResult {
    if !(args.backprop_ratio.is_finite() && args.backprop_ratio >= 0.0) {
        return Err(Failure::invalid(
            "--backprop-ratio must be a non-negative number",
        ));
    }
    let params = CostParams {
        ig_steps: args.m,
        n_records: args.records,
        n_sensors: args.sensors,
        ss_evals_per_sensor: args.evals,
        k_compensation: args.k,
        backprop_cost_ratio: args.backprop_ratio,
    };
    let entries = cost_report(&params);
    let ratio = entries
        .iter()
        .map(|e| e.ratio.to_string())
        .collect::<Vec<_>>()
        .join(":");
    log::info!("cost ratio ig:cig:ss = {ratio}");
    let report = json!({
        "params": {
            "m": args.m,
            "records": args.records,
            "sensors": args.sensors,
            "evals": args.evals,
            "k": args.k,
            "backprop_ratio": args.backprop_ratio,
        },
        "costs": entries,
        "ratio": ratio,
    });
    let text = to_json(&report);
    match &args.out {
        Some(path) => write_output(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
