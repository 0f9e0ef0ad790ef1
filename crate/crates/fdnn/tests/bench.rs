use std::sync::Arc;

use fdnn::bench::{run_benchmark, DataSource, ExperimentConfig, HyperOverride, Method, CSV_HEADER};
use fdnn::dgp::{self, DgpSpec};
use fdnn::grid::csv::save_csv;
use fdnn::SamplingGrid;

fn small(id: u32) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_dgp(id);
    cfg.sizes = vec![40];
    cfg.replications = 1;
    cfg.test_size = 200;
    cfg.hyper = HyperOverride {
        widths: Some(vec![8]),
        bounds: Some(vec![10.0]),
        ..HyperOverride::default()
    };
    cfg.train.epochs = 30;
    cfg
}

#[test]
fn one_replication_gives_four_rows() {
    let res = run_benchmark(&small(1)).unwrap();
    assert_eq!(res.rows.len(), 4);
    for row in &res.rows {
        assert!((0.0..=1.0).contains(&row.rate));
        assert_eq!(row.se, 0.0);
    }
    let methods: Vec<Method> = res.rows.iter().map(|r| r.method).collect();
    assert_eq!(methods, vec![Method::Bayes, Method::Fdnn, Method::NpBayes, Method::Qda]);
}

#[test]
fn csv_carries_full_precision_rates() {
    let mut cfg = small(3);
    cfg.replications = 3;
    let res = run_benchmark(&cfg).unwrap();
    let csv = res.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    for (line, row) in lines.zip(&res.rows) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], "3");
        assert_eq!(fields[1].parse::<usize>().unwrap(), row.n);
        assert_eq!(fields[3].parse::<f64>().unwrap(), row.rate);
        assert_eq!(fields[4].parse::<f64>().unwrap(), row.se);
    }
}

#[test]
fn reruns_are_identical() {
    let cfg = small(5);
    assert_eq!(run_benchmark(&cfg).unwrap().to_csv(), run_benchmark(&cfg).unwrap().to_csv());
}

#[test]
fn benchmark_on_a_data_file() {
    let spec = DgpSpec::by_id(2).unwrap();
    let grid = Arc::new(SamplingGrid::equispaced(1, &[30]).unwrap());
    let sim = dgp::generate(&spec, 300, &grid, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curves.csv");
    save_csv(&path, &grid, &sim.observations).unwrap();

    let mut cfg = small(1);
    cfg.source = DataSource::File(path.clone());
    cfg.sizes = vec![50, 100];
    cfg.test_size = 150;
    cfg.replications = 2;
    let res = run_benchmark(&cfg).unwrap();
    assert_eq!(res.rows.len(), 6);
    assert!(res.rows.iter().all(|r| r.dgp == "curves" && r.method != Method::Bayes));
    assert!(res.pooled_excess(50, Method::Fdnn).is_none());

    cfg.test_size = 260;
    assert!(run_benchmark(&cfg).is_err());
}

#[test]
fn config_paths_resolve_against_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, "[experiment]\ninput = \"data/x.csv\"\noutput = \"out.csv\"\n").unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.source, DataSource::File(dir.path().join("data/x.csv")));
    assert_eq!(cfg.output, Some(dir.path().join("out.csv")));
}
