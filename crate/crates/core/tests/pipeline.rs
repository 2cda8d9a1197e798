use std::io::Write;

use swor_core::empirical_process::ExpectationMethod;
use swor_core::experiment::{run, Experiment, ExperimentConfig};
use swor_core::kernel_complexity::{
    kernel_hypothesis_table, synthetic_points, KernelKind, KernelSpec, PointLoss,
};
use swor_core::localization::{build_excess_class, compute_b, localization_bounds, LocalizeSetup};
use swor_core::table::Table;
use swor_core::transductive_lab::{generalization_validity, TransductiveProblem};
use swor_core::LabError;

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::File::create(&path)
        .unwrap()
        .write_all(text.as_bytes())
        .unwrap();
    path
}

#[test]
fn loss_table_from_csv_through_both_bound_families() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(
        &dir,
        "loss.csv",
        "# three threshold classifiers on eight points\n\
         x0,x1,x2,x3,x4,x5,x6,x7\n\
         0,0,1,0,0,0,0,1\n\
         1,0,1,1,0,0,0,1\n\
         1,1,1,1,1,0,0,0\n",
    );
    let tp = TransductiveProblem::new(Table::from_csv_path(&path).unwrap()).unwrap();
    assert_eq!((tp.num_hypotheses(), tp.population_size()), (3, 8));

    let exact = ExpectationMethod::Exact { budget: 1_000_000 };
    let gen = generalization_validity(&tp, 4, &[1.0], 2_000, 1, &exact, 0.01).unwrap();
    assert!(gen.passed);

    let report = localization_bounds(&tp, 4, &LocalizeSetup::default()).unwrap();
    assert_eq!(report.star_index, 0);
    assert!(report.bernstein.satisfied);
    let b = &report.bounds[0];
    assert!(b.excess_subgaussian > 0.0 && b.risk_gap_max <= b.risk_gap);
}

#[test]
fn kernel_net_feeds_localization() {
    let (pts, labels) = synthetic_points(10, 2, 5).unwrap();
    let spec = KernelSpec::normalized(KernelKind::Gaussian { bandwidth: 1.5 }, &pts).unwrap();
    let net =
        kernel_hypothesis_table(&pts, &labels, &spec, 6, PointLoss::ClippedSquared, 5).unwrap();
    let bc = compute_b(&build_excess_class(&net.problem));
    match bc.require() {
        Ok(b) => {
            let setup = LocalizeSetup {
                splits: 200,
                ..LocalizeSetup::default()
            };
            let report = localization_bounds(&net.problem, 5, &setup).unwrap();
            assert_eq!(report.bernstein.b, b);
        }
        Err(e) => assert!(matches!(e, LabError::BernsteinViolated { .. })),
    }
}

#[test]
fn run_writes_report_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        experiment: Experiment::TransductiveErm,
        splits: 500,
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let out = run(&cfg).unwrap();
    out.write(dir.path()).unwrap();
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "transductive-erm");
    assert_eq!(
        report["constants"]["excess_subgaussian"],
        serde_json::json!([51.0, 17.0])
    );
    assert!(report["provenance"]
        .as_array()
        .unwrap()
        .iter()
        .all(|p| p["exact"] == true));
    let curves = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 6);
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(
        &dir,
        "run.toml",
        "experiment = \"oracle-check\"\nn = 4\nm = 2\nclasses = 2\nfunctions = 3\nseed = 9\n",
    );
    let cfg = ExperimentConfig::from_path(&path).unwrap();
    let out = run(&cfg).unwrap();
    assert!(out.report.passed);
    assert_eq!(out.report.results["rows"].as_array().unwrap().len(), 2);
}
