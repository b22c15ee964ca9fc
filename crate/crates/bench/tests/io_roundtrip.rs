use attribench::io;
use attribench_core::attr::{AttributionMatrix, AttributionMethod, AttributionMethodConfig, Baseline};
use attribench_core::data::{generate_dataset, DatasetSpec, Split};
use attribench_core::forge::{build_model, Connective, Family};
use attribench_core::nn::{ClassSelector, TargetSpec};
use attribench_core::Matrix;
use proptest::prelude::*;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

fn small_spec(family: Family, n: usize, seed: u64) -> DatasetSpec {
    let spec = if family == Family::Boolean {
        let conn = if seed.is_multiple_of(2) { Connective::And } else { Connective::Or };
        DatasetSpec::boolean_unit(conn, n.min(6))
    } else {
        DatasetSpec {
            n_features: n.max(2),
            ..DatasetSpec::new(family)
        }
    };
    spec.with_seed(seed).with_sizes(6, 3, 9)
}

fn bits(m: &Matrix) -> Vec<u64> {
    m.as_slice().iter().map(|v| v.to_bits()).collect()
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn bundles_round_trip_bit_for_bit(f in family(), n in 2usize..8, seed in any::<u64>()) {
        let data = generate_dataset(&small_spec(f, n, seed)).unwrap();
        for split in [Split::Train, Split::Val, Split::Test] {
            let bundle = data.split(split);
            let (csv, meta) = io::bundle_to_strings(bundle, Some(split)).unwrap();
            let back = io::bundle_from_strings(&csv, &meta).unwrap();
            prop_assert_eq!(bits(&back.features), bits(&bundle.features));
            prop_assert_eq!(bits(&back.labels), bits(&bundle.labels));
            prop_assert_eq!(&back, bundle);
        }
    }

    #[test]
    fn nets_round_trip_through_json(f in family(), n in 2usize..8, seed in any::<u64>()) {
        let model = small_spec(f, n, seed).draw_model().unwrap();
        let net = build_model(&model).unwrap();
        let back = io::net_from_json(&io::net_to_json(&net).unwrap()).unwrap();
        prop_assert_eq!(&back, &net);
        let x: Vec<f64> = (0..net.input_dim()).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        prop_assert_eq!(back.forward(&x).unwrap(), net.forward(&x).unwrap());
    }

    #[test]
    fn attributions_round_trip(
        rows in 1usize..6,
        cols in 1usize..6,
        raw in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 36),
        seed in any::<u64>(),
        elapsed in prop::option::of(0.0f64..100.0),
    ) {
        let values = Matrix::from_vec(rows, cols, raw[..rows * cols].to_vec()).unwrap();
        let config = AttributionMethodConfig::new(AttributionMethod::lime_lasso())
            .with_baseline(Baseline::Fixed(vec![0.5; cols]))
            .with_target(TargetSpec::LogitNormalised(ClassSelector::Index(1)))
            .with_seed(seed);
        let mut attr = AttributionMatrix::new(values, config);
        attr.elapsed = elapsed.map(std::time::Duration::from_secs_f64);
        let (csv, meta) = io::attribution_to_strings(&attr).unwrap();
        let back = io::attribution_from_strings(&csv, &meta).unwrap();
        prop_assert_eq!(bits(&back.values), bits(&attr.values));
        prop_assert_eq!(&back.config, &attr.config);
    }
}

#[test]
fn bundle_csv_layout() {
    let data = generate_dataset(&small_spec(Family::Weighted, 3, 1)).unwrap();
    let (csv, meta) = io::bundle_to_strings(&data.test, Some(Split::Test)).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x0,x1,x2,y0,gt0,gt1,gt2");
    assert_eq!(csv.lines().count(), 10);
    assert!(meta.contains("\"ground_truth\": \"exact\""));

    let unc = generate_dataset(&small_spec(Family::Uncertainty, 4, 1)).unwrap();
    let (csv, meta) = io::bundle_to_strings(&unc.test, None).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x0,x1,x2,x3,y0,y1");
    assert!(meta.contains("\"mask\""));
}

#[test]
fn malformed_tables_are_rejected() {
    let data = generate_dataset(&small_spec(Family::Weighted, 3, 1)).unwrap();
    let (csv, meta) = io::bundle_to_strings(&data.test, None).unwrap();
    let renamed = csv.replacen("x0", "a0", 1);
    assert!(io::bundle_from_strings(&renamed, &meta).unwrap_err().to_string().contains("expected columns"));
    let garbage = format!("{csv}abc,1,2,3,4,5,6\n");
    assert!(io::bundle_from_strings(&garbage, &meta).unwrap_err().to_string().contains("not a number"));
    let extra = meta.replacen('{', "{\"surprise\": 1,", 1);
    assert!(io::bundle_from_strings(&csv, &extra).is_err());
}

#[test]
fn files_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_dataset(&small_spec(Family::Conflicting, 3, 5)).unwrap();
    let path = dir.path().join("nested/bundle.csv");
    io::write_bundle(&path, &data.test, Some(Split::Test)).unwrap();
    assert!(dir.path().join("nested/bundle.meta.json").exists());
    assert_eq!(io::read_bundle(&path).unwrap(), data.test);
    let net = build_model(&data.model).unwrap();
    let np = dir.path().join("net.json");
    io::write_net(&np, &net).unwrap();
    assert_eq!(io::read_net(&np).unwrap(), net);
    let missing = io::read_net(&dir.path().join("nope.json")).unwrap_err();
    assert!(missing.to_string().contains("nope.json"));
}
