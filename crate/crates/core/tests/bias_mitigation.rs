mod common;

mod ensemble {
    use fairlens::error::Error;
    use fairlens::mitigation::ensemble::*;
    use fairlens::model::oracle::PredictionOracle;
    use fairlens::model::RowScorer;
    use fairlens::model::{ForestParams, TabularDataset};
    use rand::Rng;

    fn data(n: usize, sizes: [usize; 3], seed: u64) -> TabularDataset {
        let mut rng = fairlens::rng::rng_from_seed(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
        let labels = rows.iter().map(|r| r[0] + r[1] > 1.0).collect();
        let mut codes = Vec::new();
        for (c, &s) in sizes.iter().enumerate() {
            codes.extend(std::iter::repeat_n(c, s));
        }
        TabularDataset::new(vec!["a".into(), "b".into()], rows, labels)
            .unwrap()
            .with_groups("gender", vec!["F".into(), "M".into(), "U".into()], "U", codes)
            .unwrap()
    }

    fn params() -> ForestParams {
        ForestParams {
            n_trees: 8,
            ..Default::default()
        }
    }

    #[test]
    fn one_member_per_sufficient_group() {
        let ds = data(300, [100, 100, 100], 1);
        let e = train_blind_separate(&ds, &params(), 2, 50).unwrap();
        let names: Vec<&str> = e.members().iter().map(|m| m.group.as_str()).collect();
        assert_eq!(names, ["F", "M", "U"]);
        assert!(e.members().iter().all(|m| m.merged.is_empty() && m.rows == 100));
    }

    #[test]
    fn undersized_group_merges_into_unspecified() {
        let ds = data(202, [100, 2, 100], 1);
        let e = train_blind_separate(&ds, &params(), 2, 50).unwrap();
        assert_eq!(e.members().len(), 2);
        let u = e.members().iter().find(|m| m.group == "U").unwrap();
        assert_eq!(u.merged, vec!["M".to_string()]);
        assert_eq!(u.rows, 102);
    }

    #[test]
    fn single_group_reduces_to_member() {
        let ds = data(120, [120, 0, 0], 3);
        let e = train_blind_separate(&ds, &params(), 2, 50).unwrap();
        assert_eq!(e.members().len(), 1);
        for row in ds.rows() {
            assert_eq!(e.score(row), e.members()[0].model.score(row));
        }
    }

    #[test]
    fn no_sufficient_group_is_an_error() {
        let ds = data(60, [20, 20, 20], 3);
        assert!(matches!(
            train_blind_separate(&ds, &params(), 2, 50),
            Err(Error::InsufficientGroupData(50))
        ));
    }

    #[test]
    fn dominance_and_blindness() {
        let ds = data(400, [150, 150, 100], 5);
        let e = train_blind_separate(&ds, &params(), 9, 50).unwrap();
        let mut rng = fairlens::rng::rng_from_seed(77);
        for _ in 0..1000 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let s = e.predict_max_risk(&x);
            assert!(e.member_scores(&x).iter().all(|&m| s >= m));
        }
        let scores = e.score_all(&ds);
        let mut codes = ds.groups().unwrap().codes.clone();
        codes.reverse();
        let relabelled = ds
            .clone()
            .with_groups("gender", vec!["F".into(), "M".into(), "U".into()], "U", codes)
            .unwrap();
        let again = e.score_all(&relabelled);
        assert!(scores.iter().zip(&again).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(scores, e.score_all(&ds.clone().without_groups()));
    }
}

mod attribute {
    use fairlens::audit::compute_group_metrics;
    use fairlens::mitigation::attribute::*;
    use fairlens::model::{train_random_forest, ForestParams, TabularDataset};
    use rand::Rng;

    fn group_only_signal(n: usize) -> TabularDataset {
        let mut rng = fairlens::rng::rng_from_seed(4);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
        let codes: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let labels = codes.iter().map(|&c| c == 1).collect();
        TabularDataset::new(vec!["a".into(), "b".into()], rows, labels)
            .unwrap()
            .with_groups("gender", vec!["F".into(), "M".into(), "U".into()], "U", codes)
            .unwrap()
    }

    #[test]
    fn one_hot_is_complete() {
        let ds = group_only_signal(30);
        let enc = encode_group_indicators(&ds).unwrap();
        assert_eq!(enc.n_features(), 5);
        for row in enc.rows() {
            assert_eq!(row[2..].iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn group_signal_needs_the_attribute() {
        let ds = group_only_signal(600);
        let params = ForestParams {
            n_trees: 10,
            ..Default::default()
        };
        let with = train_with_attribute(&ds, &params, 1).unwrap();
        let acc = compute_group_metrics(&with, &ds, 0.5)
            .unwrap()
            .overall
            .accuracy
            .unwrap();
        assert!(acc > 0.99, "{acc}");

        let blind = train_random_forest(&ds.clone().without_groups(), &params, 1).unwrap();
        let acc_blind = compute_group_metrics(&blind, &ds, 0.5)
            .unwrap()
            .overall
            .accuracy
            .unwrap();
        // In-sample; the forest memorises some noise, so allow headroom over the 2/3 base rate.
        assert!(acc_blind < 0.85, "{acc_blind}");

        let x = with.encode(ds.row(0), "M").unwrap();
        assert_eq!(x.len(), 5);
        assert!(with.encode(ds.row(0), "X").is_err());
        assert_eq!(train_with_attribute(&ds, &params, 1).unwrap(), with);
    }
}

mod compare {
    use crate::common::tpr_table;
    use fairlens::audit::metrics::MetricName;
    use fairlens::error::Error;
    use fairlens::mitigation::compare::*;

    #[test]
    fn reduction_arithmetic() {
        let r = relative_reduction(0.072, 0.040).unwrap();
        assert!((r - 4.0 / 9.0).abs() < 1e-12);
        assert_eq!(format!("{:.0}", 100.0 * r), "44");
        assert_eq!(relative_reduction(0.072, 0.072), Some(0.0));
        assert!((relative_reduction(0.072, 0.036).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(relative_reduction(0.0, 0.01), None);
    }

    #[test]
    fn report_from_tables() {
        let before = tpr_table(&[("F", 0.537), ("M", 0.465)]);
        let after = tpr_table(&[("F", 0.545), ("M", 0.505)]);
        let r =
            InterventionReport::from_tables("blind-separate", &before, &after, MetricName::Tpr, &["F", "M"]).unwrap();
        assert!((r.baseline_disparity - 0.072).abs() < 1e-12);
        assert!((r.intervention_disparity - 0.040).abs() < 1e-12);
        let expected = 1.0 - r.intervention_disparity / r.baseline_disparity;
        assert!((r.relative_reduction.unwrap() - expected).abs() < 1e-9);
        assert_eq!(r.verdict, InterventionVerdict::Improved);
        assert!(!r.narrowed_by_worsening);
    }

    #[test]
    fn flags_narrowing_by_worsening_the_favoured_group() {
        let before = tpr_table(&[("F", 0.537), ("M", 0.465)]);
        let after = tpr_table(&[("F", 0.49), ("M", 0.465)]);
        let r =
            InterventionReport::from_tables("with-attribute", &before, &after, MetricName::Tpr, &["F", "M"]).unwrap();
        assert_eq!(r.verdict, InterventionVerdict::Improved);
        assert!(r.narrowed_by_worsening);
        assert!(reports_to_markdown(&[r]).contains("only by worsening"));
    }

    #[test]
    fn no_op_is_not_improved() {
        let t = tpr_table(&[("F", 0.537), ("M", 0.465)]);
        let r = InterventionReport::from_tables("noop", &t, &t, MetricName::Tpr, &["F", "M"]).unwrap();
        assert_eq!(r.relative_reduction, Some(0.0));
        assert_eq!(r.verdict, InterventionVerdict::NotImproved);
    }

    #[test]
    fn undefined_priority_metric_is_an_error() {
        let before = tpr_table(&[("F", 0.5), ("M", 0.4)]);
        let mut after = before.clone();
        after.groups[1].tpr = None;
        assert!(matches!(
            InterventionReport::from_tables("x", &before, &after, MetricName::Tpr, &["F", "M"]),
            Err(Error::UndefinedMetric { .. })
        ));
    }
}
