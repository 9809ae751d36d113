use saltus_cli::commands::*;
use saltus_core::response::{CounterexampleTable, FdReport, ResponseScan};
use saltus_core::transfer::PiecewiseConstantDensity;
use serde::de::DeserializeOwned;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(sub: &str, cfg: &str, dir: &Path) -> Output {
    let cfg_path = dir.join("job.cfg");
    std::fs::write(&cfg_path, cfg).unwrap();
    Command::new(env!("CARGO_BIN_EXE_saltus"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn ok(sub: &str, cfg: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let o = run(sub, cfg, dir.path());
    assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1, "{stdout}");
    let out = dir.path().join("out");
    (dir, out)
}

fn load<T: DeserializeOwned>(path: &Path) -> Envelope<T> {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn density_of_g2_is_flat() {
    let (_d, out) = ok("density", "family=tent\nslope=2\n");
    let rows = csv_rows(&out.join("density.csv"));
    assert_eq!(rows[0], ["x", "value"]);
    let values: Vec<f64> = rows[1..]
        .iter()
        .take_while(|r| r[0] != "location")
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert_eq!(values.len(), 1 << 14);
    assert!(values.iter().all(|v| (v - 1.0).abs() <= 1e-3));
    let rec: Envelope<PiecewiseConstantDensity> = load(&out.join("density.json"));
    assert_eq!(rec.record.plateaus, vec![1.0]);
}

#[test]
fn ulam_density_of_g2_is_flat() {
    let (_d, out) = ok("density", "slope=2\nmethod=ulam\nbins=4096\n");
    let rows = csv_rows(&out.join("density.csv"));
    let values: Vec<f64> = rows[1..rows.len() - 1].iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(values.len(), 4096);
    assert!(values[8..4088].iter().all(|v| (v - 1.0).abs() <= 1e-3));
    assert!(!out.join("density.json").exists());
}

#[test]
fn decompose_sqrt2() {
    let (_d, out) = ok("decompose", "slope=1.41421356\n");
    let rec: Envelope<DecomposeRecord> = load(&out.join("decompose.json"));
    assert_eq!(rec.record.jumps.len(), 3);
    assert!(rec.record.J_of_1.abs() < 1e-10);
    assert!((rec.record.J_of_X + 1.0).abs() < 1e-10);
    assert!((rec.config.snapped_slope.unwrap() - std::f64::consts::SQRT_2).abs() < 1e-14);
    let rows = csv_rows(&out.join("rho_r.csv"));
    assert_eq!(rows[0], ["x", "value"]);
    assert!(rows[1..].iter().all(|r| r[1].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn residues_of_g2() {
    let (_d, out) = ok("residues", "slope=2\nX_poly=0,1\nphi=bump6\n");
    let rec: Envelope<ResiduesRecord> = load(&out.join("residues.json"));
    assert!((rec.record.residue_at_1 + 1.0).abs() < 1e-12);
    assert!((rec.record.fit.value + 1.0).abs() <= 0.05);
    assert!(!rec.record.flags.holomorphic_at_1);
    assert_eq!(rec.record.poles.len(), 1);
}

#[test]
fn orbit_and_susceptibility_records_round_trip() {
    let (_d, out) = ok("orbit", "family=tent_code\ncode=RL^2R*\n");
    let rec: Envelope<OrbitRecord> = load(&out.join("orbit.json"));
    assert_eq!(rec.record.code, "RLLRR");
    assert_eq!(rec.record.preperiodic, Some((4, 1)));
    assert_eq!(rec.subcommand, Subcommand::Orbit);

    let (_d, out) = ok("susceptibility", "slope=2\nX_poly=0,1,-1\nn_terms=64\nseries_cells=256\n");
    let rec: Envelope<SusceptibilityRecord> = load(&out.join("susceptibility.json"));
    assert_eq!(rec.record.coefficients.len(), 64);
    assert!(rec.record.flags.fully_holomorphic);
    assert!(rec.record.psi1.is_none());
    assert_eq!(csv_rows(&out.join("susceptibility.csv")).len(), 65);
}

#[test]
fn non_markov_pipelines_round_trip() {
    let cfg = "slope=1.9\nX_poly=1\nseries_cells=512\nn_terms=256\ntol=1e-8\n";
    let (_d, out) = ok("psi1", cfg);
    let rec: Envelope<Psi1Record> = load(&out.join("psi1.json"));
    assert!(rec.record.J_of_X.abs() < 1e-8);
    assert!(rec.record.psi1.value.is_finite());

    let (_d, out) = ok("regularized", cfg);
    let rec: Envelope<RegularizedRecord> = load(&out.join("regularized.json"));
    assert!(rec.record.at_z.value.re.is_finite());
    assert!(rec.record.psi1.is_some());

    let (_d, out) = ok("susceptibility", cfg);
    let rec: Envelope<SusceptibilityRecord> = load(&out.join("susceptibility.json"));
    assert!(rec.record.poles.is_empty());
    assert!(rec.record.psi1.is_some());
}

#[test]
fn counterexample_tables() {
    let (_d, out) = ok("counterexample1", "k_min=4\nk_max=8\n");
    let rows = csv_rows(&out.join("counterexample1.csv"));
    assert_eq!(rows[0], ["k", "lambda_k", "gap", "bound", "ratio"]);
    assert_eq!(rows.len(), 6);
    let rec: Envelope<CounterexampleTable> = load(&out.join("counterexample1.json"));
    assert!(rec.record.min_ratio > 0.0);

    let (_d, out) = ok("counterexample2", "ells=6,8,10\n");
    let rows = csv_rows(&out.join("counterexample2.csv"));
    assert_eq!(rows[0], ["ell", "nu_ell", "gap", "bound", "ratio"]);
    let rec: Envelope<CounterexampleTable> = load(&out.join("counterexample2.json"));
    assert_eq!(rec.record.rows.len(), 3);
}

#[test]
fn response_records_round_trip() {
    let (_d, out) = ok(
        "response-scan",
        "slope=1.8\nX_poly=0,0.5,-0.5\nt_schedule=0,0.015625,-0.015625\nbins=1024\nmethod=ulam\n",
    );
    let rec: Envelope<ResponseScan> = load(&out.join("response_scan.json"));
    assert_eq!(rec.record.t.len(), 3);
    assert_eq!(rec.record.response[0], rec.record.reference);

    let (_d, out) = ok(
        "fd-experiment",
        "slope=2\nX_poly=0,1,-1\nt_schedule=0.0078125,-0.0078125\nbins=1024\nn_terms=128\nseries_cells=256\n",
    );
    let rec: Envelope<FdReport> = load(&out.join("fd_experiment.json"));
    assert_eq!(rec.record.quotient.len(), 2);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let cfg = "slope=1.41421356\nX_poly=0,1\nn_terms=128\nseries_cells=256\n";
    for sub in ["decompose", "susceptibility", "counterexample2"] {
        let (_a, out_a) = ok(sub, cfg);
        let (_b, out_b) = ok(sub, cfg);
        let mut names: Vec<_> = std::fs::read_dir(&out_a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(names.iter().any(|n| n == "run.json"));
        for n in names {
            assert_eq!(std::fs::read(out_a.join(&n)).unwrap(), std::fs::read(out_b.join(&n)).unwrap(), "{sub}: {n:?}");
        }
    }
}

#[test]
fn run_json_records_the_resolved_config() {
    let (_d, out) = ok("orbit", "slope=2\n");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(v["subcommand"], "orbit");
    assert_eq!(v["config"]["bins"], 16384);
    assert_eq!(v["outputs"], serde_json::json!(["orbit.csv", "orbit.json"]));
}

#[test]
fn floats_are_written_with_seventeen_digits() {
    let (_d, out) = ok("orbit", "slope=1.5\norbit_max=8\n");
    let rows = csv_rows(&out.join("orbit.csv"));
    let mantissa = rows[1][1].split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{}", rows[1][1]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("density", "slope=2\n\nbinz=4\n", dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = run("psi1", "slope=1.9\nX_poly=0,1\nseries_cells=256\ntol=1e-8\n", dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not zero"));

    let o = run("residues", "slope=1.9\nseries_cells=256\n", dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = run("fd-experiment", "slope=2\nX_poly=0,1\nbins=256\nn_terms=64\nseries_cells=256\n", dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = run("density", "slope=1.7\nmethod=ulam\nmax_iters=1\nbins=256\n", dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}
