//! Property tests: sweep ranges, record persistence and summaries.

use std::io::BufReader;
use std::path::Path;

use proptest::prelude::*;
use spinbus::config::{ExperimentConfig, ExperimentKind, Span, Spacing};
use spinbus::record::{read_jsonl, write_jsonl, ResultRecord};
use spinbus::summary::{summarize, Summary};

fn infidelity() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![Just(None), (-9.0f64..-0.5).prop_map(|e| Some(10f64.powf(e)))]
}

fn ensemble_record() -> impl Strategy<Value = (bool, f64, f64, Option<f64>, Option<f64>, Option<f64>)> {
    (any::<bool>(), prop_oneof![Just(1e-6), Just(5e-6)], 0.0f64..0.3, infidelity(), infidelity(), infidelity())
}

fn ensemble_records(rows: &[(bool, f64, f64, Option<f64>, Option<f64>, Option<f64>)]) -> Vec<ResultRecord> {
    rows.iter()
        .enumerate()
        .map(|(i, &(ge, kappa, ev, a, c, o))| {
            let mut r = ResultRecord::new(ExperimentKind::Ensemble, i, "digest", 9);
            r.labels.insert("model".into(), if ge { "ge-diffusion" } else { "step" }.into());
            r.coords.insert("kappa_z_mev".into(), kappa);
            r.coords.insert("device".into(), i as f64);
            r.diagnostics.insert("splitting_mev".into(), ev);
            r.analytical = a;
            r.calibrated = c;
            r.optimized = o;
            r
        })
        .collect()
}

proptest! {
    #[test]
    fn span_values_are_increasing_and_hit_both_ends(
        start in 0.1f64..50.0,
        width in 1e-3f64..100.0,
        points in 2usize..200,
        geometric in any::<bool>(),
    ) {
        let spacing = if geometric { Spacing::Geometric } else { Spacing::Linear };
        let span = Span { start, end: start + width, points, spacing };
        let v = span.values();
        prop_assert_eq!(v.len(), points);
        prop_assert_eq!(v[0], start);
        prop_assert!((v[points - 1] - (start + width)).abs() <= 1e-12 * (start + width));
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn reversed_spans_are_rejected(start in 1.0f64..50.0, width in 0.0f64..10.0, points in 2usize..20) {
        let text = format!("[grid.x0]\nstart = {start:?}\nend = {:?}\npoints = {points}\n", start - width);
        prop_assert!(ExperimentConfig::from_toml_str(&text, Path::new(".")).is_err());
    }

    #[test]
    fn summary_survives_a_jsonl_round_trip(rows in prop::collection::vec(ensemble_record(), 1..40)) {
        let records = ensemble_records(&rows);
        let mut buf = Vec::new();
        write_jsonl(&records, &mut buf).unwrap();
        let back = read_jsonl(BufReader::new(buf.as_slice())).unwrap();
        prop_assert_eq!(&back, &records);
        // Bins without values hold NaN means, so compare serialized forms.
        let json = |rs: &[ResultRecord]| serde_json::to_string(&summarize(ExperimentKind::Ensemble, rs)).unwrap();
        prop_assert_eq!(json(&back), json(&records));
    }

    #[test]
    fn ensemble_groups_partition_the_devices(rows in prop::collection::vec(ensemble_record(), 1..40)) {
        let records = ensemble_records(&rows);
        let Summary::Ensemble { groups } = summarize(ExperimentKind::Ensemble, &records) else {
            panic!("ensemble summary expected");
        };
        prop_assert_eq!(groups.iter().map(|g| g.devices).sum::<usize>(), records.len());
        for g in &groups {
            prop_assert_eq!(g.histogram.iter().map(|b| b.devices).sum::<usize>(), g.devices);
            prop_assert!(g.below_threshold.optimized <= g.devices);
        }
    }
}
