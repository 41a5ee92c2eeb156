use dampopt::config::{RunConfig, SystemSource};
use dampopt::output::{write_results_csv, CSV_COLUMNS};
use dampopt::sweep::{RowOutcome, RowResult};
use proptest::prelude::*;

fn row(id: usize, g: Vec<f64>, h: f64) -> RowResult {
    RowResult {
        config_id: id,
        j: Some(10),
        k: Some(11),
        problem: "b".into(),
        mode: "iii".into(),
        outcome: Some(RowOutcome {
            g_star: g,
            hinf_value: h,
            omega_star: 1.0,
            outer_iters: 3,
            rom_dim: 7,
            termination: "gains-tol".into(),
            factorizations: 10,
            norm_evaluations: 4,
            wall_seconds: 0.5,
            trace: Vec::new(),
            oracle: None,
        }),
        error: None,
    }
}

proptest! {
    #[test]
    fn csv_numbers_round_trip(
        g1 in 0.0f64..1e6,
        g2 in 0.0f64..1e6,
        h in 1e-12f64..1e12,
    ) {
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &[row(1, vec![g1, g2], h)], false).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        prop_assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), CSV_COLUMNS.to_vec());
        let rec = rd.records().next().unwrap().unwrap();
        prop_assert_eq!(rec[5].parse::<f64>().unwrap(), g1);
        prop_assert_eq!(rec[6].parse::<f64>().unwrap(), g2);
        prop_assert_eq!(rec[7].parse::<f64>().unwrap(), h);
        prop_assert_eq!(&rec[12], "");
    }

    #[test]
    fn config_json_round_trips(
        j in proptest::collection::vec(1usize..49, 1..4),
        k in proptest::collection::vec(1usize..49, 1..4),
        tol in 1e-12f64..1e-2,
        seed in any::<u64>(),
        oracle in any::<bool>(),
    ) {
        let cfg = RunConfig::from_json(&format!(
            r#"{{"system": {{"kind": "oscillator", "j": {j:?}, "k": {k:?}}}, "tol_gains": {tol:e}, "seed": {seed}, "oracle": {oracle}}}"#
        ))
        .unwrap();
        let again = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(cfg.tol_gains, tol);
        let default_n = matches!(cfg.system, SystemSource::Oscillator { n: 50, .. });
        prop_assert!(default_n);
    }
}
