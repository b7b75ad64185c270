use std::path::PathBuf;
use std::process::{Command, Output};

use mvpois_cli::table::{Cell, Table};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mvpois"));
    c.env_remove("MVPOIS_TAIL_EPS");
    c
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/models").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn num(c: &Cell) -> f64 {
    match c {
        Cell::Num(v) => *v,
        Cell::Int(v) => *v as f64,
        Cell::Text(t) => panic!("not a number: {t}"),
    }
}

#[test]
fn eval_range_and_single_level() {
    let m = fixture("l2_common.json");
    let out = stdout(&run(&["eval", "--model", m.to_str().unwrap(), "--stat", "max", "--x", "1..15"]));
    let t = Table::from_csv(&out).unwrap();
    assert_eq!(t.rows.len(), 15);
    assert_eq!(t.columns, ["x", "value", "log_value", "trunc_bound", "method"]);
    let v = t.column("value").unwrap();
    assert!((num(&t.rows[9][v]) - 0.5371).abs() < 1e-4);
    let out = stdout(&run(&["eval", "--model", m.to_str().unwrap(), "--x", "7..7"]));
    assert_eq!(Table::from_csv(&out).unwrap().rows.len(), 1);
}

#[test]
fn csv_and_json_outputs_carry_the_same_numbers() {
    let m = fixture("l1_comonotonic.json");
    let base = ["eval", "--model", m.to_str().unwrap(), "--stat", "min", "--x", "0..20"];
    let csv = Table::from_csv(&stdout(&run(&base))).unwrap();
    let mut args = base.to_vec();
    args.extend(["--format", "json"]);
    let json = Table::from_json(&stdout(&run(&args))).unwrap();
    assert_eq!(csv.columns, json.columns);
    for (a, b) in csv.rows.iter().zip(&json.rows) {
        for (x, y) in a.iter().zip(b) {
            match (x, y) {
                (Cell::Text(s), Cell::Text(t)) => assert_eq!(s, t),
                _ => assert_eq!(num(x).to_bits(), num(y).to_bits()),
            }
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"model":"comonotonic","lambdas":[1,2],"theta":1.5}"#).unwrap();
    let o = run(&["eval", "--model", bad.to_str().unwrap(), "--x", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta"));

    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(run(&["eval", "--model", bad.to_str().unwrap(), "--x", "3"]).status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["eval", "--model", missing.to_str().unwrap(), "--x", "3"]).status.code(), Some(3));

    let m = fixture("l2_common.json");
    let o = run(&["eval", "--model", m.to_str().unwrap(), "--x", "3", "--tail-eps", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .args(["eval", "--model", m.to_str().unwrap(), "--x", "3"])
        .env("MVPOIS_TAIL_EPS", "1e-2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sample_corr_and_oracle() {
    let m = fixture("l1_thinning.json");
    let out = stdout(&run(&["sample", "--model", m.to_str().unwrap(), "--n", "5", "--seed", "7"]));
    let t = Table::from_csv(&out).unwrap();
    assert_eq!(t.rows.len(), 5);
    assert!(t.rows.iter().flatten().all(|c| matches!(c, Cell::Int(v) if *v >= 0)));
    assert_eq!(out, stdout(&run(&["sample", "--model", m.to_str().unwrap(), "--n", "5", "--seed", "7"])));

    let c = fixture("l1_common.json");
    let out = stdout(&run(&["corr", "--model", c.to_str().unwrap(), "--bounds"]));
    let t = Table::from_csv(&out).unwrap();
    assert_eq!(t.rows[0][0], Cell::Text("avg_rho".into()));
    assert!((num(&t.rows[0][3]) - 0.4854).abs() < 1e-3);

    let o = fixture("l1_comonotonic.json");
    let args = ["oracle", "--model", o.to_str().unwrap(), "--x", "10", "--n", "100000", "--seed", "3"];
    let out = stdout(&run(&args));
    let t = Table::from_csv(&out).unwrap();
    let est = num(&t.rows[0][1]);
    let se = num(&t.rows[0][2]);
    let exact = stdout(&run(&["eval", "--model", o.to_str().unwrap(), "--x", "10"]));
    let exact = num(&Table::from_csv(&exact).unwrap().rows[0][1]);
    assert!((est - exact).abs() <= 4.0 * se);
    assert_eq!(out, stdout(&run(&args)));

    let out = stdout(&run(&["oracle", "--model", c.to_str().unwrap(), "--x", "10", "--brute-force"]));
    let bf = num(&Table::from_csv(&out).unwrap().rows[0][1]);
    let exact = stdout(&run(&["eval", "--model", c.to_str().unwrap(), "--x", "10"]));
    assert!((bf - num(&Table::from_csv(&exact).unwrap().rows[0][1])).abs() < 1e-10);
}

#[test]
fn reproduce_shapes() {
    let t = Table::from_csv(&stdout(&run(&["reproduce", "table1"]))).unwrap();
    assert_eq!(t.rows.len(), 90);
    assert!(t.column("printed_value").is_some() && t.column("abs_diff").is_some());
    let t = Table::from_csv(&stdout(&run(&["reproduce", "table2"]))).unwrap();
    assert_eq!(t.rows.len(), 15);
    let t = Table::from_json(&stdout(&run(&["reproduce", "table3", "--format", "json"]))).unwrap();
    let check = t.column("check").unwrap();
    let qual: Vec<_> = t.rows.iter().filter(|r| r[check] == Cell::Text("qualitative".into())).collect();
    assert_eq!(qual.len(), 5);
}
