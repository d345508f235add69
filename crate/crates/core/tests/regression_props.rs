use neuracoustic::config::RunConfig;
use neuracoustic::regression::{
    kfold_cv, metrics, train_svr, Feature, FeatureMode, FeatureRow, FeatureSelector, Gamma, Kernel,
    SvrHyperparams, SvrModel,
};
use proptest::prelude::*;

fn rows_strategy(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<FeatureRow>> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..60.0, 0.0f64..1.0), n).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (mr, ft, pta, s))| FeatureRow {
                profile_id: format!("p{i:03}"),
                mr_nsim: mr,
                ft_nsim: ft,
                pta_db: pta,
                score: Some(s),
            })
            .collect()
    })
}

fn all_features() -> FeatureSelector {
    FeatureSelector::new(&[Feature::MrNsim, Feature::FtNsim, Feature::PtaDb], FeatureMode::Set)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cv_is_permutation_invariant(rows in rows_strategy(9..=20), k in 2usize..=4, seed in 0u64..50, rot in 0usize..20) {
        prop_assume!(rows.iter().any(|r| r.score != rows[0].score));
        let hp = SvrHyperparams::new(1.0, 0.05, Gamma::Auto, Kernel::Rbf);
        let a = kfold_cv(&rows, &all_features(), &hp, k, seed).unwrap();
        let mut moved = rows.clone();
        moved.rotate_left(rot % rows.len());
        let b = kfold_cv(&moved, &all_features(), &hp, k, seed).unwrap();
        prop_assert_eq!(a.pooled_mse, b.pooled_mse);
        for (i, r) in rows.iter().enumerate() {
            let j = moved.iter().position(|m| m.profile_id == r.profile_id).unwrap();
            prop_assert_eq!(a.predictions[i], b.predictions[j]);
            prop_assert_eq!(a.fold_of[i], b.fold_of[j]);
        }
        prop_assert!(a.predictions.iter().all(|p| (0.0..=1.0).contains(p)));
        let sizes: Vec<usize> = a.folds.iter().map(|f| f.size).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(sizes.iter().sum::<usize>(), rows.len());
    }

    #[test]
    fn saved_model_predicts_identically(rows in rows_strategy(6..=15), c in 0.1f64..10.0, linear in any::<bool>()) {
        prop_assume!(rows.iter().any(|r| r.mr_nsim != rows[0].mr_nsim));
        prop_assume!(rows.iter().any(|r| r.ft_nsim != rows[0].ft_nsim));
        prop_assume!(rows.iter().any(|r| r.pta_db != rows[0].pta_db));
        let kernel = if linear { Kernel::Linear } else { Kernel::Rbf };
        let hp = SvrHyperparams::new(c, 0.05, Gamma::Scale, kernel);
        let m = train_svr(&rows, &all_features(), &hp).unwrap();
        let back = SvrModel::from_json(&m.to_json()).unwrap();
        for r in &rows {
            let x = [r.mr_nsim, r.ft_nsim, r.pta_db];
            prop_assert_eq!(m.predict(&x).unwrap(), back.predict(&x).unwrap());
        }
    }

    #[test]
    fn perfect_prediction_metrics(y in prop::collection::vec(0.0f64..1.0, 2..40)) {
        prop_assume!(y.iter().any(|v| *v != y[0]));
        let (mse, r2) = metrics(&y, &y).unwrap();
        prop_assert_eq!(mse, 0.0);
        prop_assert_eq!(r2, 1.0);
    }

    #[test]
    fn config_toml_round_trip(seed in any::<u64>(), folds in 2usize..10, levels in prop::collection::vec(0.0f64..120.0, 1..6)) {
        let mut cfg = RunConfig { seed, ..RunConfig::default() };
        cfg.study1.folds = folds;
        cfg.study2.levels_db_spl = levels;
        let text = match cfg.to_toml() {
            Ok(t) => t,
            Err(_) => {
                prop_assert!(seed > i64::MAX as u64);
                serde_json::to_string(&cfg).unwrap()
            }
        };
        let back = RunConfig::from_str_auto(&text, false).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
