mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tribell::model::ConsistencyStatus;
use tribell::num::{int, rat, Rational};
use tribell::reference_models::{build_reference_model, ReferenceModel, ReferenceModelSpec};
use tribell::{
    behavior, check_context_consistency, check_no_signaling, correlator, Behavior, Context,
    ModelError, Party,
};

fn build(model: ReferenceModel, params: Vec<Rational>) -> tribell::MdlModel {
    build_reference_model(&ReferenceModelSpec::new(model, params)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn behavior_rows_are_distributions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = common::random_complete_model(&mut rng, 5);
        let b = behavior(&model).unwrap();
        for row in b.table() {
            prop_assert!(row.iter().all(|p| *p >= int(0)));
            prop_assert_eq!(row.iter().sum::<Rational>(), int(1));
        }
        prop_assert_eq!(Behavior::from_table(b.table().clone()).unwrap(), b.clone());
        prop_assert_eq!(behavior(&model).unwrap(), b);
    }

    #[test]
    fn correlators_lie_in_unit_interval(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = common::random_complete_model(&mut rng, 5);
        let b = behavior(&model).unwrap();
        for ctx in Context::all_full() {
            let e = correlator(&model, &ctx).unwrap();
            prop_assert!(e >= int(-1) && e <= int(1));
            // The same value from the behavior: sum of P times outcome product.
            let s = ctx.full_index().unwrap();
            let from_behavior: Rational = b.table()[s]
                .iter()
                .enumerate()
                .map(|(o, p)| if (o.count_ones() % 2) == 0 { p.clone() } else { -p.clone() })
                .sum();
            prop_assert_eq!(e, from_behavior);
        }
    }

    #[test]
    fn setting_independent_models_do_not_signal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = common::random_independent_model(&mut rng, 5);
        prop_assert!(check_no_signaling(&behavior(&model).unwrap()).passes());
        prop_assert!(check_context_consistency(&model).is_consistent());
    }
}

#[test]
fn partial_models_name_the_missing_context() {
    let model = build(ReferenceModel::I, vec![rat(1, 4), rat(1, 4)]);
    let err = behavior(&model).unwrap_err();
    let ModelError::PartialModel(ctx) = err else {
        panic!("unexpected error {err:?}");
    };
    assert!(model.distribution(&ctx).is_none());
    assert!(err.to_string().contains(&ctx.to_string()));
}

#[test]
fn closed_form_correlators() {
    for p in [rat(0, 1), rat(1, 8), rat(1, 2), rat(1, 1)] {
        let iv = build(ReferenceModel::IV, vec![p.clone()]);
        assert_eq!(correlator(&iv, &Context::full(1, 1, 1)).unwrap(), int(1) - int(2) * &p);
        let iii = build(ReferenceModel::III, vec![p.clone()]);
        assert_eq!(correlator(&iii, &Context::pair(Party::C, 0, 0)).unwrap(), int(1));
    }
}

#[test]
fn model_two_without_dependence() {
    // At p = 0 every hidden value outputs +1 for A0, B0, C0 and A1, B1, C1,
    // but the joint entry for x'y' carries the sign -a.
    let b = behavior(&build(ReferenceModel::II, vec![int(0)])).unwrap();
    for ctx in Context::all_full() {
        let [x, y, z] = ctx.settings().map(Option::unwrap);
        let expected = if x == 1 && y == 1 { [-1, 1, 1] } else { [1, 1, 1] };
        assert_eq!(*b.probability(expected, x, y, z), int(1), "at {ctx}");
    }
    assert!(!check_no_signaling(&b).passes());
}

#[test]
fn consistency_report_distinguishes_statuses() {
    let model = build(ReferenceModel::III, vec![rat(1, 2)]);
    let report = check_context_consistency(&model);
    assert!(!report.entries.is_empty());
    for entry in &report.entries {
        assert!(entry.pair.is_pair() && entry.extension.is_full());
        let expected = match model.distribution(&entry.extension) {
            None => ConsistencyStatus::Missing,
            Some(v) if v == model.distribution(&entry.pair).unwrap() => ConsistencyStatus::Consistent,
            Some(_) => ConsistencyStatus::Inconsistent,
        };
        assert_eq!(entry.status, expected);
    }
}

#[test]
fn malformed_behaviors_are_rejected() {
    let zero = || int(0);
    let mut table: [[Rational; 8]; 8] = std::array::from_fn(|_| std::array::from_fn(|_| zero()));
    for row in table.iter_mut() {
        row[0] = int(1);
    }
    assert!(Behavior::from_table(table.clone()).is_ok());
    table[3][0] = rat(1, 2);
    assert!(Behavior::from_table(table.clone()).is_err());
    table[3][1] = rat(3, 2);
    table[3][2] = int(-1);
    assert!(Behavior::from_table(table).is_err());
}
