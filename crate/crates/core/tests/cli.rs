use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lns::sequence::{say, unsay, Term};

fn lns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lns"))
        .args(args)
        .env_remove("LNS_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn gen(dir: &Path, extra: &[&str]) {
    let mut args = vec!["gen-data", "--out", dir.to_str().unwrap(), "--seed", "7"];
    args.extend_from_slice(extra);
    let o = lns(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

/// Writes one prediction per gold line, produced by `f` from the source.
fn predict(gold: &Path, out: &Path, f: impl Fn(&Term) -> Term) {
    let text = fs::read_to_string(gold).unwrap();
    let mut preds = String::new();
    for line in text.lines() {
        let (source, _) = lns::datagen::parse_pair_line(line).unwrap();
        preds.push_str(&f(&source.parse().unwrap()).to_string());
        preds.push('\n');
    }
    fs::write(out, preds).unwrap();
}

#[test]
fn worked_examples() {
    assert_eq!(stdout(&lns(&["say", "111221"])), "312211\n");
    assert_eq!(stdout(&lns(&["reverse", "312211"])), "111221\n");
    let o = lns(&["lengths", "--steps", "59", "--seed-term", "1"]);
    assert!(o.status.success());
    let last = stdout(&o).lines().last().unwrap().to_string();
    assert!(last.starts_with("59\t12680852\t1.3035"), "{last}");
}

#[test]
fn identical_argv_identical_stdout() {
    for args in [
        &["prefix", "12"][..],
        &["lengths", "--steps", "40", "--format", "structured"],
        &["constant"],
        &["atoms", "--seed-term", "3", "--format", "structured"],
    ] {
        let a = lns(args);
        let b = lns(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(lns(&["nope"]).status.code(), Some(2));
    assert_eq!(lns(&["say"]).status.code(), Some(2));
    let o = lns(&["reverse", "211"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("OddLength"));
    assert_eq!(lns(&["--help"]).status.code(), Some(0));
}

#[test]
fn budget_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_lns"))
        .args(["say", "1", "--steps", "20"])
        .env("LNS_BUDGET", "50")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("LengthBudgetExceeded"));
    // flag wins over the environment
    let o = Command::new(env!("CARGO_BIN_EXE_lns"))
        .args(["say", "1", "--steps", "20", "--budget", "1000"])
        .env("LNS_BUDGET", "50")
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn constant_and_atoms_export() {
    let out = stdout(&lns(&["constant"]));
    assert!(out.starts_with("growth constant 1.3035772"), "{out}");
    assert!(out.contains("atoms 99"));

    let dir = tempfile::tempdir().unwrap();
    let o = lns(&["atoms", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let atoms = fs::read_to_string(dir.path().join("atoms.tsv")).unwrap();
    assert_eq!(atoms.lines().count(), 99);
    assert!(atoms.starts_with("0\t1\n1\t11\n"));
    let matrix = fs::read_to_string(dir.path().join("matrix.txt")).unwrap();
    assert_eq!(matrix.lines().count(), 99);
    assert!(matrix.lines().all(|l| l.split(' ').count() == 99));
}

#[test]
fn gen_data_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"max_len": 8, "train_size": 300, "test_size": 40, "seed": 3, "format": "spaced-tsv"}"#,
    )
    .unwrap();
    let data = dir.path().join("data");
    let o = lns(&[
        "gen-data",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let test = fs::read_to_string(data.join("test.tsv")).unwrap();
    assert_eq!(test.lines().count(), 40);
    assert!(test.lines().all(|l| l.contains(' ')));
    let check = lns(&["check-data", data.to_str().unwrap()]);
    assert!(check.status.success(), "{}", stdout(&check));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"max_len": 2, "train_size": 100}"#).unwrap();
    let o = lns(&[
        "gen-data",
        "--spec",
        bad.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("UniverseExhausted"));
}

#[test]
fn score_pipeline_forward_and_reversed() {
    let dir = tempfile::tempdir().unwrap();
    for (name, direction, oracle) in [
        ("fwd", "forward", say as fn(&Term) -> lns::Result<Term>),
        ("rev", "reversed", unsay),
    ] {
        let data = dir.path().join(name);
        gen(
            &data,
            &[
                "--train-size",
                "200",
                "--test-size",
                "500",
                "--direction",
                direction,
            ],
        );
        let gold = data.join("test.tsv");
        let pred = dir.path().join(format!("{name}.pred"));
        predict(&gold, &pred, |s| oracle(s).unwrap());
        let o = lns(&["score", gold.to_str().unwrap(), pred.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(stdout(&o).starts_with("0 / 500 errors\n"));

        // echo predictions are wrong everywhere
        predict(&gold, &pred, |s| s.clone());
        let report = dir.path().join(format!("{name}.json"));
        let o = lns(&[
            "score",
            gold.to_str().unwrap(),
            pred.to_str().unwrap(),
            "--out",
            report.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(1));
        let parsed: lns::evaluate::Report =
            serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(parsed.error_count(), 500);
    }
}

#[test]
fn score_reports_missing_source() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.tsv");
    let pred = dir.path().join("pred.tsv");
    fs::write(&gold, "1\t11\n21\t1211\n").unwrap();
    fs::write(&pred, "1\t11\n").unwrap();
    let o = lns(&["score", gold.to_str().unwrap(), pred.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("MissingPrediction") && err.contains("21"),
        "{err}"
    );
}

#[test]
fn probe_command() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("probe.txt");
    let terms = lns::sequence::ls_prefix(10, &"1".parse().unwrap(), 1 << 20).unwrap();
    let good: String = terms
        .iter()
        .map(|t| format!("{}\n", say(t).unwrap()))
        .collect();
    fs::write(&pred, &good).unwrap();
    let o = lns(&["probe", pred.to_str().unwrap(), "--n", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    // keyed by the orbit term, corrupted at step 3
    let keyed: String = terms
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let p = if i == 3 {
                "9".to_string()
            } else {
                say(t).unwrap().to_string()
            };
            format!("{t}\t{p}\n")
        })
        .collect();
    fs::write(&pred, keyed).unwrap();
    let o = lns(&[
        "probe",
        pred.to_str().unwrap(),
        "--n",
        "10",
        "--format",
        "structured",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report: lns::evaluate::Report = serde_json::from_str(&stdout(&o)).unwrap();
    match report {
        lns::evaluate::Report::Probe(p) => assert_eq!(p.first_failure_step, Some(3)),
        other => panic!("{other:?}"),
    }
    let o = lns(&["probe", pred.to_str().unwrap(), "--n", "11"]);
    assert_eq!(o.status.code(), Some(1));
}
