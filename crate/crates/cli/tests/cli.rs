use std::process::{Command, Output};

fn vacpol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vacpol"))
        .args(args)
        .env("VACPOL_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn kernel_table_sharp_support_ends_at_twice_the_cutoff() {
    let o = vacpol(&["kernel-table", "--model", "sharp", "--lambda", "1", "--kgrid", "0,1,2"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    let b: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(b[0] > b[1] && b[1] > 0.0);
    assert_eq!(b[2], 0.0);
}

#[test]
fn structured_output_carries_config() {
    let o = vacpol(&[
        "kernel-table", "--lambda", "10", "--kgrid", "0:20:5", "--format", "structured",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "kernel-table");
    assert_eq!(v["grid"].as_array().unwrap().len(), 5);
    assert_eq!(v["config"]["command"], "kernel-table");
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["kernel-table", "--lambda", "1", "--kgrid", "2:1:5"][..],
        &["kernel-table", "--lambda", "-1", "--kgrid", "0:1:5"],
        &["kernel-table", "--model", "sharp", "--lambda", "1", "--kgrid", "0:1:3", "--evaluation", "quadrature2d"],
        &["bounds", "--alpha", "0.1", "--lambda", "10", "--envelopes"],
        &["response", "--lambda", "10"],
        &["no-such-command"],
    ] {
        let o = vacpol(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn out_of_regime_coupling_exits_two() {
    let o = vacpol(&[
        "response", "--lambda", "10", "--alpha", "50", "--method", "fixed-point", "--rgrid", "0.1:1:3",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn response_summary_reports_charge_identity() {
    let o = vacpol(&[
        "response", "--lambda", "10", "--alpha", "0.1", "--rgrid", "0.1:2:4", "--format", "structured",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let s = &v["summary"];
    let b0 = s["b_zero"].as_f64().unwrap();
    let q = s["observed_charge"].as_f64().unwrap();
    assert!((q * (1.0 + 0.1 * b0) - 1.0).abs() < 1e-12);
}

#[test]
fn zero_coupling_response_is_identically_zero() {
    let o = vacpol(&["response", "--lambda", "10", "--alpha", "0", "--rgrid", "0.1:5:6"]);
    assert_eq!(o.status.code(), Some(0));
    for row in data_rows(&stdout(&o)) {
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn envelopes_are_tagged_conditional() {
    let o = vacpol(&[
        "bounds", "--alpha", "0", "--lambda", "10", "--charge", "2",
        "--constant-C", "1", "--envelopes", "--format", "structured",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("conditional on supplied C"));
}

#[test]
fn envelopes_need_a_charged_source() {
    let o = vacpol(&[
        "bounds", "--alpha", "0.1", "--lambda", "10", "--source", "none", "--constant-C", "1", "--envelopes",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn renormalize_coupling_decreases_with_cutoff() {
    let o = vacpol(&["renormalize", "--lambda", "1:1000:4:log", "--alpha", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let a: Vec<f64> = data_rows(&stdout(&o)).iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(a.len(), 4);
    assert!(a.windows(2).all(|w| w[1] < w[0]) && a[3] > 0.0);
}

#[test]
fn written_file_matches_standard_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let args = ["kernel-table", "--lambda", "3", "--kgrid", "0:6:7"];
    let printed = stdout(&vacpol(&args));
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    assert_eq!(vacpol(&with_out).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), printed);
}

#[test]
fn corrupted_selftest_exits_three() {
    let o = vacpol(&["selftest", "--corrupt-sign"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-negativity"));
}
