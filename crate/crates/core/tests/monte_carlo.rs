use gvport::{
    mc_portmanteau, mc_test_batch, simulate_arma, ArmaSpec, McConfig, McJob, NullModel, RngStream, StatisticKind,
};

#[test]
fn oracle_mode_rejection_rate_is_exact() {
    let spec = ArmaSpec::ar1(0.5);
    let trials = 2000u64;
    let mut rejections = 0;
    for t in 0..trials {
        let x = simulate_arma(&spec, 60, RngStream::new(900, t)).unwrap();
        let config = McConfig {
            null: NullModel::Known(spec.clone()),
            ..McConfig::new(1, 0, 5, 19, StatisticKind::DHat, 1000 + t)
        };
        let r = mc_portmanteau(&x, &config).unwrap();
        if r.results[0].p_value <= 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    // 99% band around 1/20
    let half = 2.576 * (0.05f64 * 0.95 / trials as f64).sqrt();
    assert!((rate - 0.05).abs() < half, "rate {rate}");
}

#[test]
fn batch_results_do_not_depend_on_threads() {
    let jobs: Vec<McJob> = (0..6)
        .map(|i| McJob {
            series: simulate_arma(&ArmaSpec::ar1(0.3), 80, RngStream::new(4, i)).unwrap(),
            config: McConfig {
                m_values: vec![5, 10],
                kinds: vec![StatisticKind::DHat, StatisticKind::LjungBox],
                ..McConfig::new(1, 0, 5, 29, StatisticKind::DHat, 50 + i)
            },
        })
        .collect();
    let one = mc_test_batch(&jobs, 1).unwrap();
    let four = mc_test_batch(&jobs, 4).unwrap();
    assert_eq!(format!("{one:?}"), format!("{four:?}"));
}

#[test]
fn paired_kinds_share_replicates() {
    let x = simulate_arma(&ArmaSpec::ar1(0.3), 100, RngStream::new(6, 0)).unwrap();
    let joint = McConfig {
        kinds: vec![StatisticKind::DHat, StatisticKind::LjungBox],
        ..McConfig::new(1, 0, 10, 39, StatisticKind::DHat, 12)
    };
    let both = mc_portmanteau(&x, &joint).unwrap();
    let alone = mc_portmanteau(&x, &McConfig::new(1, 0, 10, 39, StatisticKind::LjungBox, 12)).unwrap();
    assert_eq!(both.get(StatisticKind::LjungBox, 10), alone.get(StatisticKind::LjungBox, 10));
}
