use proptest::prelude::*;
use sacre_core::mining::{arff_read, arff_to_string, learn_ruleset, ruleset_to_operationalization, Class, Dataset};

/// Points on a 0.01 grid labelled by membership in an axis-aligned box.
fn boxed(points: &[(f64, f64)], lo: (f64, f64), hi: (f64, f64)) -> Dataset {
    let mut ds = Dataset::numeric("box", &["perclos", "hbpm"], "cls");
    for &(x, y) in points {
        let inside = x >= lo.0 && x <= hi.0 && y >= lo.1 && y <= hi.1;
        ds.push_numeric(&[x, y], inside.into()).unwrap();
    }
    ds
}

fn grid_point() -> impl Strategy<Value = (f64, f64)> {
    (0u32..=100, 0u32..=100).prop_map(|(x, y)| (f64::from(x) / 100.0, f64::from(y) / 100.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn separable_boxes_are_learned_exactly(
        points in prop::collection::vec(grid_point(), 12..=30),
        a in grid_point(),
        b in grid_point(),
        seed in any::<u64>(),
    ) {
        let lo = (a.0.min(b.0), a.1.min(b.1));
        let hi = (a.0.max(b.0), a.1.max(b.1));
        let ds = boxed(&points, lo, hi);
        let rs = learn_ruleset(&ds, seed);
        for row in ds.rows() {
            prop_assert_eq!(rs.classify(&ds, row), row.class);
        }
    }

    #[test]
    fn translation_preserves_classification(points in prop::collection::vec(grid_point(), 12..60), seed in any::<u64>()) {
        let ds = boxed(&points, (0.2, 0.3), (0.7, 0.9));
        let (pos, neg) = ds.class_counts();
        prop_assume!(pos > 0 && neg > 0);
        let rs = learn_ruleset(&ds, seed);
        let op = ruleset_to_operationalization(&rs).unwrap();
        for row in ds.rows() {
            let values = [row.values[0].as_f64(), row.values[1].as_f64()];
            let lookup = |v: &str| match v {
                "perclos" => Some(values[0]),
                "hbpm" => Some(values[1]),
                _ => None,
            };
            let learned = rs.classify(&ds, row) == Class::Active;
            prop_assert_eq!(op.holds_on(lookup), Some(learned), "{}", op);
        }
    }

    #[test]
    fn arff_round_trip(points in prop::collection::vec(grid_point(), 0..40)) {
        let ds = boxed(&points, (0.1, 0.1), (0.5, 0.5));
        let text = arff_to_string(&ds);
        let back = arff_read(&text).unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(arff_to_string(&back), text);
    }
}
