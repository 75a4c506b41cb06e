use std::path::Path;
use std::process::{Command, Output};

use gvport::{simulate_arma, ArmaSpec, RngStream, StatisticKind};
use gvport_cli::series::{format_series, parse_series};
use gvport_cli::test_cmd::{run_test, TestOptions};

fn gvport(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gvport")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn schema(name: &str) -> serde_json::Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema").join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, json: &str) {
    let instance: serde_json::Value = serde_json::from_str(json).unwrap();
    let validator = jsonschema::validator_for(&schema(schema_name)).unwrap();
    let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}");
}

fn write_series(dir: &Path, name: &str, spec: &ArmaSpec, n: usize, seed: u64) -> String {
    let x = simulate_arma(spec, n, RngStream::new(seed, 0)).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, format_series(&x)).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn asymptotic_white_noise_spectrum() {
    let o = gvport(&["asymptotic", "--m", "4"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("lambda = (1.000000, 0.750000, 0.500000, 0.250000)"), "{}", stdout(&o));
}

#[test]
fn asymptotic_arma11_distortion() {
    let o = gvport(&["asymptotic", "--p", "1", "--q", "1", "--phi", "0.3", "--theta", "-0.9", "--m", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("size of nominal 5% gamma test: 0.0830"), "{}", stdout(&o));
}

#[test]
fn asymptotic_infeasible_and_inadmissible_are_distinct() {
    let o = gvport(&["asymptotic", "--p", "2", "--q", "1", "--phi", "0.2,0.1", "--theta", "0.3", "--m", "7"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("gamma infeasible; minimal m is 8"));
    let o = gvport(&["asymptotic", "--p", "1", "--phi", "1.2", "--m", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not stationary and invertible"));
}

#[test]
fn asymptotic_json_cdf_and_quantile() {
    let o = gvport(&["asymptotic", "--p", "1", "--phi", "0.5", "--m", "10", "--quantile", "0.95", "--json"]);
    assert!(o.status.success());
    let json = stdout(&o);
    assert_valid("asymptotic_report.schema.json", &json);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let q = v["quantile"]["quantile"].as_f64().unwrap();
    let o = gvport(&["asymptotic", "--p", "1", "--phi", "0.5", "--m", "10", "--x", &q.to_string(), "--json"]);
    let json = stdout(&o);
    assert_valid("asymptotic_report.schema.json", &json);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!((v["cdf"]["cdf"].as_f64().unwrap() - 0.95).abs() < 1e-7);
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(gvport(&["asymptotic", "--bogus"]).status.code(), Some(1));
    assert_eq!(gvport(&["test"]).status.code(), Some(1));
    assert_eq!(gvport(&["asymptotic", "--p", "2", "--phi", "0.1", "--m", "5"]).status.code(), Some(1));
    assert_eq!(gvport(&["--help"]).status.code(), Some(0));
}

#[test]
fn test_command_json_validates_and_reports_per_statistic_errors() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ArmaSpec::new(vec![0.5], vec![-0.3], 1.0, 2.0).unwrap();
    let file = write_series(dir.path(), "x.txt", &spec, 200, 4);
    let o = gvport(&[
        "test",
        "--file",
        &file,
        "--p",
        "1",
        "--q",
        "1",
        "--m",
        "2,10",
        "--N",
        "49",
        "--json",
        "--threads",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json = stdout(&o);
    assert_valid("test_report.schema.json", &json);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let m2 = &v["lags"][0];
    assert!(m2["ljung_box"]["p_value"].is_null());
    assert!(m2["ljung_box"]["error"].as_str().unwrap().contains("degrees of freedom"));
    assert!(m2["d_hat"]["asymptotic_p_value"].is_number());
    assert!(m2["monte_carlo"]["p_value"].is_number());
    let m10 = &v["lags"][1];
    assert!(m10["ljung_box"]["p_value"].is_number());
    assert!(m10["gamma"]["warning"].as_str().unwrap().contains("not conservative"));
    let p = m10["monte_carlo"]["p_value"].as_f64().unwrap();
    assert!(((p * 50.0) - (p * 50.0).round()).abs() < 1e-9);
}

#[test]
fn test_command_text_output() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_series(dir.path(), "x.txt", &ArmaSpec::ar1(0.6), 150, 8);
    let o = gvport(&["test", "--file", &file, "--p", "1", "--m", "5,10", "--N", "19", "--stat", "lb"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(
        text.contains("p(chi2)") && text.contains("p(Imhof)") && text.contains("p(MC)") && text.contains("p(gamma)")
    );
    assert!(text.contains("statistic ljung_box"));
}

#[test]
fn data_errors_exit_two_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    let mut text: String = (0..40).map(|i| format!("{i}\n")).collect();
    text.push_str("1.5e\n");
    std::fs::write(&bad, text).unwrap();
    let o = gvport(&["test", "--file", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 41"), "{}", stderr(&o));

    let short = dir.path().join("short.txt");
    std::fs::write(&short, "1\n2\n3\n").unwrap();
    assert_eq!(gvport(&["test", "--file", short.to_str().unwrap()]).status.code(), Some(2));

    let constant = dir.path().join("constant.txt");
    std::fs::write(&constant, "5\n".repeat(60)).unwrap();
    assert_ne!(gvport(&["test", "--file", constant.to_str().unwrap(), "--m", "5"]).status.code(), Some(0));
}

#[test]
fn csv_column_input() {
    let dir = tempfile::tempdir().unwrap();
    let x = simulate_arma(&ArmaSpec::white_noise(1.0), 80, RngStream::new(1, 0)).unwrap();
    let mut text = String::from("# rings\nyear,width\n");
    for (i, v) in x.iter().enumerate() {
        text.push_str(&format!("{},{v:.16e}\n", 1800 + i));
    }
    let path = dir.path().join("rings.csv");
    std::fs::write(&path, text).unwrap();
    let o = gvport(&["test", "--file", path.to_str().unwrap(), "--column", "width", "--m", "5", "--N", "9", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 80);
}

#[test]
fn simulated_series_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.txt");
    let o = gvport(&[
        "simulate",
        "--phi",
        "0.7,-0.2",
        "--theta",
        "0.4",
        "--mean",
        "-3",
        "--n",
        "500",
        "--seed",
        "9",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let back = parse_series(&std::fs::read_to_string(&path).unwrap(), None).unwrap();
    let spec = ArmaSpec::new(vec![0.7, -0.2], vec![0.4], 1.0, -3.0).unwrap();
    assert_eq!(back, simulate_arma(&spec, 500, RngStream::new(9, 0)).unwrap());
}

#[test]
fn white_noise_p_values_are_calibrated() {
    let seeds = 400u64;
    let mut per_test = [0usize; 4];
    let mut any = 0;
    for s in 0..seeds {
        let x = simulate_arma(&ArmaSpec::white_noise(1.0), 200, RngStream::new(777, s)).unwrap();
        let opts = TestOptions {
            p: 0,
            q: 0,
            lags: vec![10],
            replicates: 99,
            statistic: StatisticKind::DHat,
            seed: s,
            threads: 1,
        };
        let l = &run_test(&x, &opts).unwrap().lags[0];
        let ps = [
            l.ljung_box.p_value.unwrap(),
            l.d_hat.asymptotic_p_value.unwrap(),
            l.monte_carlo.p_value.unwrap(),
            l.gamma.p_value.unwrap(),
        ];
        for (c, p) in per_test.iter_mut().zip(ps) {
            *c += (p <= 0.01) as usize;
        }
        any += ps.iter().any(|&p| p <= 0.01) as usize;
    }
    // each test rejects ~1% of 400 seeds; 12 is beyond the 99.9% binomial quantile
    assert!(per_test.iter().all(|&c| c <= 12), "{per_test:?}");
    assert!(any as f64 / seeds as f64 <= 0.03, "{any} of {seeds}");
}

const STUDY: &str = r#"
study = "size"
m = [5]
n = [60]
replications = 40
inner = 19
master_seed = 3
fitted = { p = 1, q = 0 }
[[models]]
type = "arma"
ar = [0.4]
"#;

#[test]
fn study_writes_csv_and_schema_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("size.toml");
    std::fs::write(&config, STUDY).unwrap();
    let out = dir.path().join("res").join("size");
    let o = gvport(&["study", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("res/size.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "study,model_id,test,n,m,alpha,estimate,stderr,R,N");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[8], "40");
    assert_eq!(row[9], "19");
    assert_valid("study_report.schema.json", &std::fs::read_to_string(dir.path().join("res/size.json")).unwrap());

    let scaled = dir.path().join("scaled");
    let o = gvport(&["study", "--config", config.to_str().unwrap(), "--out", scaled.to_str().unwrap(), "--scale", "4"]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("scaled.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[8], row[9]), ("10", "4"));
}

#[test]
fn malformed_config_exits_nonzero_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, STUDY.replace("inner = 19", "inner = 0")).unwrap();
    let out = dir.path().join("out");
    let o = gvport(&["study", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`inner`"), "{}", stderr(&o));
    std::fs::write(&config, "study = [\n").unwrap();
    assert_eq!(
        gvport(&["study", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn shipped_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        let result = gvport_studies::StudyConfig::from_path(&path);
        if name.starts_with("table6") {
            // ships without models
            assert!(result.is_err(), "{name}");
        } else {
            assert!(result.is_ok(), "{name}: {:?}", result.err());
        }
    }
}
