use std::process::{Command, Output};

use ems_core::CheckReport;
use serde_json::Value;

fn ems(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ems")).args(args).output().expect("run ems")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn values_json(f: impl Fn(usize) -> f64, len: usize) -> String {
    let v: Vec<f64> = (1..=len).map(f).collect();
    serde_json::json!({ "values": v }).to_string()
}

#[test]
fn check_ems_exit_codes() {
    let uniform = values_json(|k| k as f64 / (k as f64 + 1.0), 50);
    assert_eq!(code(&ems(&["check-ems", &uniform])), 0);

    let example = values_json(|k| k as f64 - 1.0 / (k as f64 + 1.0), 50);
    let o = ems(&["check-ems", &example]);
    assert_eq!(code(&o), 1);
    let r = CheckReport::from_json(&stdout(&o)).unwrap();
    assert!(r.witnesses_for("ems.ii").next().is_some());

    assert_eq!(code(&ems(&["check-ems", "[0.5]"])), 64);
    assert_eq!(code(&ems(&["check-ems", "{\"values\": [1, \"x\"]}"])), 64);
    assert_eq!(code(&ems(&["check-ems", "/no/such/file.json"])), 64);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(code(&ems(&["no-such-command"])), 64);
    assert_eq!(code(&ems(&["moments"])), 64);
    assert_eq!(code(&ems(&["moments", "nope"])), 64);
    assert_eq!(code(&ems(&["--help"])), 0);
    assert_eq!(code(&ems(&["--version"])), 0);
}

#[test]
fn moments_csv() {
    let o = ems(&["--format", "csv", "moments", "exponential", "--k-max", "4"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,mu,min,rho"));
    let rho: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    for (got, want) in rho.iter().zip([0.0, 1.0, 1.5, 11.0 / 6.0]) {
        assert!((got - want).abs() < 1e-10);
    }
    let one = ems(&["--format", "csv", "moments", "uniform", "--k-max", "1"]);
    assert_eq!(stdout(&one).lines().count(), 2);
}

#[test]
fn moments_gumbel_json() {
    let o = ems(&["moments", "gumbel_shifted", "--k-max", "5"]);
    let rows: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for (i, row) in rows.as_array().unwrap().iter().enumerate() {
        let mu = row["mu"].as_f64().unwrap();
        assert!((mu - ((i + 1) as f64).ln()).abs() < 1e-10);
    }
}

#[test]
fn out_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let uniform = values_json(|k| k as f64 / (k as f64 + 1.0), 30);
    let o = ems(&["--out", path.to_str().unwrap(), "check-ems", &uniform]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let r = CheckReport::from_json(&text).unwrap();
    assert_eq!(r.to_json(), CheckReport::from_json(&r.to_json()).unwrap().to_json());

    let input = dir.path().join("seq.csv");
    let csv: String = (1..=30).map(|k| format!("{k},{}\n", k as f64 / (k as f64 + 1.0))).collect();
    std::fs::write(&input, format!("k,mu\n{csv}")).unwrap();
    assert_eq!(code(&ems(&["check-ems", input.to_str().unwrap()])), 0);
}

#[test]
fn hoeffding_table_and_invalid_input() {
    let example = serde_json::json!({ "values": (1..=10).map(|k| format!("{}/{}", k * (k + 1) - 1, k + 1)).collect::<Vec<_>>() }).to_string();
    let o = ems(&["--format", "csv", "hoeffding", &example, "--n", "4"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("1,-4,5,"));
    assert!(text.contains("4,19,5,"));
    let constant = serde_json::json!({ "values": [1, 1, 1, 1, 1, 1] }).to_string();
    assert_eq!(code(&ems(&["hoeffding", &constant, "--n", "4"])), 1);
}

#[test]
fn reconstruct_examples() {
    let o = ems(&["--grid", "0.5", "reconstruct", "power_theta", "--params", "[0.5, 0]", "--mu1", "1"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let text = v.to_string();
    let want = 1.0 / (std::f64::consts::LN_2.sqrt() * std::f64::consts::PI.sqrt());
    let g = find_g(&v, 0.5).unwrap_or_else(|| panic!("{text}"));
    assert!((g - want).abs() < 1e-8);

    let u = (-1f64).exp().to_string();
    let o = ems(&["--grid", &u, "reconstruct", "log_shift", "--params", "0"]);
    let g = find_g(&serde_json::from_str(&stdout(&o)).unwrap(), (-1f64).exp()).unwrap();
    assert!((g + 0.577_215_664_901_532_9).abs() < 1e-8);
}

fn find_g(v: &Value, u: f64) -> Option<f64> {
    match v {
        Value::Object(m) => {
            if let (Some(a), Some(g)) = (m.get("u").and_then(Value::as_f64), m.get("g").and_then(Value::as_f64)) {
                if (a - u).abs() < 1e-12 {
                    return Some(g);
                }
            }
            m.values().find_map(|x| find_g(x, u))
        }
        Value::Array(a) => a.iter().find_map(|x| find_g(x, u)),
        _ => None,
    }
}

#[test]
fn symmetry_and_compare_ranges() {
    assert_eq!(code(&ems(&["symmetry", "harmonic", "--params", "-1"])), 0);
    assert_eq!(code(&ems(&["symmetry", "log_shift", "--params", "0"])), 1);
    assert_eq!(code(&ems(&["compare-ranges", "perturbed_normal", "normal", "--params-a", "1"])), 0);
    assert_eq!(code(&ems(&["compare-ranges", "uniform", "exponential"])), 1);
    assert_eq!(code(&ems(&["compare-ranges", "bernoulli", "bernoulli_sym", "--params-a", "1/4", "--params-b", "1/4"])), 0);
}

#[test]
fn check_ers_and_catalog() {
    let h: Vec<String> = (1..=30)
        .map(|k| {
            let mut s = num_rational::BigRational::from_integer(0.into());
            for j in 1..k {
                s += num_rational::BigRational::new(1.into(), (j as i64).into());
            }
            s.to_string()
        })
        .collect();
    let input = serde_json::json!({ "values": h }).to_string();
    assert_eq!(code(&ems(&["check-ers", &input, "--bridge"])), 0);
    let o = ems(&["catalog"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("gumbel_shifted"));
    let o = ems(&["--format", "csv", "stirling", "--s-max", "4"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("s,m,"));
}
