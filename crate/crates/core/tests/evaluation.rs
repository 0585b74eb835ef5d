mod common;

use attribkit::attribution::{Granularity, MethodTag, SsConfig};
use attribkit::evaluation::{
    average_ranks, axiom_completeness, axiom_dummy, axiom_implementation_invariance,
    axiom_linearity, axiom_symmetry, comparison_table, cost, cost_report, run_axiom_suite,
    spearman, Axiom, ComparisonConfig, CostMethod, CostParams, MethodSpec, RecordRho,
    SpearmanReport, SpearmanRow, SuiteConfig, Truth,
};
use attribkit::{Error, Model, Record, Tensor};
use common::oracles::spearman_by_counting;
use common::*;
use proptest::prelude::*;

#[test]
fn spearman_basic_cases() {
    assert_eq!(
        spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
        1.0
    );
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    assert_eq!(
        average_ranks(&[5.0, 1.0, 5.0, 3.0]),
        vec![3.5, 1.0, 3.5, 2.0]
    );
}

#[test]
fn spearman_with_ties_matches_counting_oracle() {
    let cases: [(&[f64], &[f64]); 3] = [
        (
            &[1.0, 2.0, 2.0, 3.0, 5.0, 5.0, 5.0],
            &[0.3, 0.1, 0.1, 0.9, 0.2, 0.8, 0.8],
        ),
        (&[4.0, 4.0, 4.0, 1.0], &[1.0, 2.0, 3.0, 4.0]),
        (
            &[-1.0, 0.0, 0.0, 2.5, 2.5, 7.0],
            &[6.0, 5.0, 5.0, 5.0, 1.0, 0.0],
        ),
    ];
    for (a, b) in cases {
        let got = spearman(a, b).unwrap();
        let want = spearman_by_counting(a, b);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn spearman_errors() {
    assert!(spearman(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    assert!(spearman(&[1.0], &[1.0]).is_err());
    assert!(matches!(
        spearman(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
        Err(Error::UndefinedCorrelation(_))
    ));
    assert!(spearman(&[f64::NAN, 1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
}

proptest! {
    #[test]
    fn spearman_is_invariant_under_monotone_maps(
        pairs in prop::collection::vec((-100i32..100, -100i32..100), 3..20)
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        prop_assume!(a.iter().any(|&v| v != a[0]) && b.iter().any(|&v| v != b[0]));
        let rho = spearman(&a, &b).unwrap();
        let a2: Vec<f64> = a.iter().map(|v| (v / 10.0).exp() - 3.0).collect();
        let b2: Vec<f64> = b.iter().map(|v| v * v * v + 2.0 * v).collect();
        prop_assert!((rho - spearman(&a2, &b2).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&rho));
        prop_assert!((rho - spearman_by_counting(&a, &b)).abs() < 1e-12);
    }
}

#[test]
fn completeness_examples() {
    let linear = linear_model(&[2.0, -1.0]);
    let c = axiom_completeness(&linear, &point(&[3.0, 4.0]), &column(&[0.0, 0.0]), 8, 0).unwrap();
    assert!(c.pass && c.abs_error == 0.0 && c.rhs == 2.0);
    for steps in [1, 3, 64] {
        let c = axiom_completeness(
            &Product,
            &point(&[2.0, 3.0]),
            &column(&[-1.0, 0.5]),
            steps,
            0,
        )
        .unwrap();
        assert!(c.abs_error < 1e-12, "steps {steps}: {}", c.abs_error);
    }
    let mut r = rng(41);
    let model = temporal(3, 16, 3);
    let x = random_record(&mut r, 3, 16);
    let b = random_tensor(&mut r, 3, 16);
    let c = axiom_completeness(&model, &x, &b, 4096, 1).unwrap();
    assert!(c.pass && c.tolerance == 1e-6, "{c:?}");
}

fn fixtures(seed: u64) -> (Record, Vec<Tensor>) {
    let mut r = rng(seed);
    let x = random_record(&mut r, 4, 16);
    let bg = (0..5).map(|_| random_tensor(&mut r, 4, 16)).collect();
    (x, bg)
}

fn deterministic_and_sampled(bg: &[Tensor]) -> Vec<MethodSpec> {
    vec![
        MethodSpec::Ig {
            baseline: Tensor::zeros(vec![4, 16]),
            steps: 128,
        },
        MethodSpec::Ss(SsConfig {
            samples_per_feature: 300,
            background: bg.to_vec(),
            seed: 3,
            granularity: Granularity::Channel,
        }),
        MethodSpec::ExactShapley {
            background: bg.to_vec(),
        },
    ]
}

#[test]
fn dummy_examples() {
    let (x, bg) = fixtures(42);
    for model in [temporal(4, 16, 1), spatiotemporal(4, 16, 1)] {
        let dead = model.silence_channel(2).unwrap();
        for m in deterministic_and_sampled(&bg) {
            let c = axiom_dummy(&dead, &x, 2, &m, 0).unwrap();
            assert!(c.pass, "{:?}: {c:?}", m.tag());
        }
        // A live channel is not a dummy.
        let c = axiom_dummy(&model, &x, 2, &deterministic_and_sampled(&bg)[0], 0).unwrap();
        assert!(!c.pass);
    }
}

#[test]
fn linearity_examples() {
    let (x, bg) = fixtures(43);
    let f1 = temporal(4, 16, 1);
    let f2 = temporal(4, 16, 2);
    for m in deterministic_and_sampled(&bg) {
        assert!(axiom_linearity(&f1, &f2, 1.0, 0.0, &x, &m, 1).unwrap().pass);
        let c = axiom_linearity(&f1, &f2, 2.5, -1.0, &x, &m, 1).unwrap();
        assert!(c.pass && c.tolerance == 1e-9, "{:?}: {c:?}", m.tag());
    }
    let g1 = linear_model(&[2.0, -1.0]);
    let g2 = linear_model(&[0.5, 3.0]);
    let ig = MethodSpec::Ig {
        baseline: column(&[0.0, 0.0]),
        steps: 16,
    };
    assert!(
        axiom_linearity(&g1, &g2, 1.0, 1.0, &point(&[3.0, 4.0]), &ig, 0)
            .unwrap()
            .pass
    );
}

#[test]
fn symmetry_examples() {
    let (mut x, mut bg) = fixtures(44);
    let (p, q) = (0, 2);
    let model = temporal(4, 16, 5).symmetrize_channels(p, q).unwrap();
    let mut v = x.values().clone();
    let row = v.row(p).to_vec();
    v.row_mut(q).copy_from_slice(&row);
    x = Record::new("s", None, v).unwrap();
    for b in &mut bg {
        let row = b.row(p).to_vec();
        b.row_mut(q).copy_from_slice(&row);
    }
    for m in deterministic_and_sampled(&bg) {
        let c = axiom_symmetry(&model, &x, p, q, &m, 0).unwrap();
        assert!(c.pass, "{:?}: {c:?}", m.tag());
    }
    let exact = axiom_symmetry(
        &model,
        &x,
        p,
        q,
        &MethodSpec::ExactShapley {
            background: bg.clone(),
        },
        0,
    )
    .unwrap();
    assert!(exact.gap <= 1e-9);

    let mut asym = Tensor::zeros(vec![4, 16]);
    asym.row_mut(p).fill(1.0);
    let c = axiom_symmetry(
        &model,
        &x,
        p,
        q,
        &MethodSpec::Ig {
            baseline: asym,
            steps: 128,
        },
        0,
    )
    .unwrap();
    assert!(!c.pass && c.gap > 10.0 * c.tolerance, "{c:?}");

    let unequal = fixtures(45).0;
    assert!(axiom_symmetry(
        &model,
        &unequal,
        p,
        q,
        &MethodSpec::ExactShapley { background: bg },
        0
    )
    .is_err());
}

#[test]
fn invariance_examples() {
    let (x, _) = fixtures(46);
    let zero = Tensor::zeros(vec![4, 16]);
    for model in [temporal(4, 16, 7), spatiotemporal(4, 16, 7)] {
        for eq in [
            model.clone(),
            model.permute_filters(0, &[3, 1, 0, 2]).unwrap(),
            model.split_filter(3, 2).unwrap(),
        ] {
            let c = axiom_implementation_invariance(&model, &eq, &x, &zero, 128, 0).unwrap();
            assert!(c.pass, "{c:?}");
        }
        let different = temporal(4, 16, 8);
        assert!(
            !axiom_implementation_invariance(&model, &different, &x, &zero, 128, 0)
                .unwrap()
                .pass
        );
    }
}

#[test]
fn small_suite_passes_on_temporal_models() {
    let config = SuiteConfig {
        instances: 2,
        ss_samples: 200,
        ..SuiteConfig::default()
    };
    let results = run_axiom_suite(&config).unwrap();
    assert!(Axiom::ALL
        .iter()
        .all(|a| results.iter().any(|r| r.axiom == *a)));
    for r in &results {
        assert!(r.gated && r.pass, "{r:?}");
    }
}

fn labelled(model: &Model, seed: u64, n: usize) -> Vec<Record> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let x = random_record(&mut r, 4, 16);
            let label = model.predict(&x).unwrap();
            Record::new(format!("r{i}"), Some(label), x.values().clone()).unwrap()
        })
        .collect()
}

#[test]
fn truth_against_itself_has_unit_correlation() {
    let model = temporal(4, 16, 9);
    let records = labelled(&model, 47, 6);
    let config = ComparisonConfig {
        dataset_tag: "fixture".into(),
        model_tag: "temporal".into(),
        methods: vec![MethodTag::ExactShapley, MethodTag::Ig, MethodTag::Cig],
        ig_steps: 64,
        ss_samples: 100,
        delta_samples: 100,
        k_references: 2,
        background: fixtures(48).1,
        reference_pool: labelled(&model, 49, 10),
        truth: Truth::Exact,
        seed: 42,
    };
    let report = comparison_table(&model, &records, &config).unwrap();
    for class in report.classes() {
        assert_eq!(report.rho(class, MethodTag::ExactShapley), Some(1.0));
    }
    assert!(report.rows.iter().all(|r| (-1.0..=1.0).contains(&r.rho)));
    assert_eq!(report.n_records, 6);
    assert_eq!(report.deltas.len(), report.classes().len());
    assert_eq!(comparison_table(&model, &records, &config).unwrap(), report);
}

#[test]
fn comparison_needs_two_features() {
    let model = linear_model(&[1.0]);
    let config = ComparisonConfig {
        dataset_tag: "d".into(),
        model_tag: "m".into(),
        methods: vec![MethodTag::Ig],
        ig_steps: 8,
        ss_samples: 8,
        delta_samples: 8,
        k_references: 1,
        background: vec![column(&[0.0])],
        reference_pool: vec![],
        truth: Truth::Exact,
        seed: 1,
    };
    let x = Record::new("a", Some(0), column(&[1.0])).unwrap();
    assert!(matches!(
        comparison_table(&model, &[x], &config),
        Err(Error::UndefinedCorrelation(_))
    ));
}

#[test]
fn table_csv_layout() {
    let row = |class, method, rho| SpearmanRow {
        dataset_tag: "synthetic".into(),
        model_tag: "temporal".into(),
        class_label: class,
        method,
        rho,
        n_records: 2,
    };
    let report = SpearmanReport {
        rows: vec![
            row(0, MethodTag::Ig, 0.125),
            row(0, MethodTag::Ss, 0.9),
            row(0, MethodTag::Cig, 0.98765432),
            row(1, MethodTag::Ig, -0.5),
            row(1, MethodTag::Ss, 1.0),
            row(1, MethodTag::Cig, 0.5),
        ],
        per_record: vec![RecordRho {
            record_id: "a".into(),
            class_label: 0,
            method: MethodTag::Ig,
            rho: 0.125,
        }],
        n_records: 4,
        deltas: vec![],
    };
    assert_eq!(
        report.to_table_csv(),
        "dataset,class,cig,ss,ig\nsynthetic,0,0.987654,0.900000,0.125000\nsynthetic,1,0.500000,1.000000,-0.500000\n"
    );
    assert_eq!(
        report.per_record_csv(),
        "record_id,class,method,rho\na,0,ig,1.25000000000000000e-1\n"
    );
}

#[test]
fn cost_examples() {
    let table = CostParams {
        n_records: 400,
        k_compensation: 20,
        ..CostParams::default()
    };
    assert_eq!(cost(&table, CostMethod::Ig), 40_000);
    assert_eq!(cost(&table, CostMethod::Ss), 12_200_000);
    assert_eq!(cost(&table, CostMethod::Cig), 650_000);

    let ratio = CostParams {
        n_records: 1000,
        k_compensation: 10,
        ..CostParams::default()
    };
    let report = cost_report(&ratio);
    let parts: Vec<u64> = report.iter().map(|e| e.ratio).collect();
    assert_eq!(parts, vec![20, 81, 6100]);
    let methods: Vec<CostMethod> = report.iter().map(|e| e.method).collect();
    assert_eq!(
        methods,
        vec![CostMethod::Ig, CostMethod::Cig, CostMethod::Ss]
    );
}

proptest! {
    #[test]
    fn cost_ordering(m in 1u64..500, n in 2u64..5000, s in 1u64..100, f in 1u64..1000, k in 1u64..5000) {
        let p = CostParams {
            ig_steps: m,
            n_records: n,
            n_sensors: s,
            ss_evals_per_sensor: f,
            k_compensation: k,
            backprop_cost_ratio: 1.0,
        };
        prop_assert!(cost(&p, CostMethod::Ig) < cost(&p, CostMethod::Cig));
        // The compensation overhead (SS on K references) stays below SS on
        // all records whenever K < n.
        if k < n {
            prop_assert!(cost(&p, CostMethod::Cig) - cost(&p, CostMethod::Ig) < cost(&p, CostMethod::Ss));
        }
    }
}
