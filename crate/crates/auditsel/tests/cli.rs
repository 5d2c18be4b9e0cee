use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn auditsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auditsel"))
        .args(args)
        .output()
        .expect("run auditsel")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

/// Audit sample concentrated on `x = a`.
fn selective_units() -> String {
    let mut s = String::from("unit_id,x,y,z\n");
    for g in 0..600 {
        let x = ["a", "b", "c"][g % 3];
        let y = ["p", "q"][(g / 3) % 2];
        let z = match x {
            "a" => g % 5 == 0,
            _ => g % 23 == 0,
        };
        s += &format!("id{g},{x},{y},{}\n", u8::from(z));
    }
    s
}

#[test]
fn plan_realize_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let units = write(tmp.path(), "units.csv", &selective_units());
    let plan_dir = tmp.path().join("plan").display().to_string();
    let out = auditsel(&[
        "plan",
        "--input",
        &units,
        "--m-plus",
        "30",
        "--m-minus",
        "20",
        "--seed",
        "3",
        "--out",
        &plan_dir,
    ]);
    assert!(matches!(out.status.code(), Some(0 | 2)), "{}", stderr(&out));
    let plan = fs::read_to_string(tmp.path().join("plan/plan.csv")).unwrap();
    assert!(plan.starts_with("i,j,n_ij0,n_ij1,delta_plus,delta_minus\n"));
    assert!(plan.contains("\na,p,"));
    let summary = fs::read_to_string(tmp.path().join("plan/summary.txt")).unwrap();
    for key in ["d_before", "d_after", "cutoff", "accepted", "seed = 3"] {
        assert!(summary.contains(key), "{key} missing from summary");
    }
    let accepted = summary.contains("accepted = true");
    assert_eq!(out.status.code(), Some(if accepted { 0 } else { 2 }));
    let categories = fs::read_to_string(tmp.path().join("plan/categories.csv")).unwrap();
    assert!(categories.starts_with("variable,index,label\nx,0,a\nx,1,b\nx,2,c\ny,0,p\n"));

    let real_dir = tmp.path().join("real").display().to_string();
    let out = auditsel(&[
        "realize", "--plan", &plan_dir, "--input", &units, "--seed", "4", "--out", &real_dir,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let selection = fs::read_to_string(tmp.path().join("real/selection.csv")).unwrap();
    let mut lines = selection.lines();
    assert_eq!(lines.next(), Some("unit_id,action"));
    let actions: Vec<&str> = lines.map(|l| l.split_once(',').unwrap().1).collect();
    assert_eq!(actions.len(), 600);
    assert!(actions
        .iter()
        .all(|a| ["add", "remove", "keep-in", "keep-out"].contains(a)));

    let delta = |col: usize| -> usize {
        plan.lines()
            .skip(1)
            .map(|l| l.split(',').nth(col).unwrap().parse::<usize>().unwrap())
            .sum()
    };
    assert_eq!(actions.iter().filter(|a| **a == "add").count(), delta(4));
    assert_eq!(actions.iter().filter(|a| **a == "remove").count(), delta(5));
}

#[test]
fn manifest_has_no_timestamps_and_hashes_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let units = write(tmp.path(), "units.csv", &selective_units());
    let dir = tmp.path().join("plan").display().to_string();
    auditsel(&[
        "plan",
        "--input",
        &units,
        "--m-plus",
        "10",
        "--m-minus",
        "5",
        "--seed",
        "1",
        "--out",
        &dir,
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("plan/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "plan");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let text = manifest.to_string();
    assert!(!text.contains("time") && !text.contains("date"));
}

#[test]
fn generated_seed_is_printed_and_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let units = write(tmp.path(), "units.csv", &selective_units());
    let dir = tmp.path().join("plan").display().to_string();
    let out = auditsel(&[
        "plan",
        "--input",
        &units,
        "--m-plus",
        "10",
        "--m-minus",
        "5",
        "--out",
        &dir,
    ]);
    let err = stderr(&out);
    let seed = err.split("using ").nth(1).unwrap().trim();
    let summary = fs::read_to_string(tmp.path().join("plan/summary.txt")).unwrap();
    assert!(summary.contains(&format!("seed = {seed}")));
}

#[test]
fn malformed_csv_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(
        tmp.path(),
        "bad.csv",
        "unit_id,x,y,z\nu1,a,p,0\nu2,b,p,0\nu3,b,q,yes\n",
    );
    let out = auditsel(&[
        "plan",
        "--input",
        &bad,
        "--m-plus",
        "1",
        "--m-minus",
        "0",
        "--seed",
        "1",
        "--out",
        "x",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));

    let short = write(tmp.path(), "short.csv", "unit_id,x,y,z\nu1,a,p,0\nu2,b\n");
    let out = auditsel(&[
        "plan",
        "--input",
        &short,
        "--m-plus",
        "1",
        "--m-minus",
        "0",
        "--seed",
        "1",
        "--out",
        "x",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let header = write(tmp.path(), "header.csv", "id,x,y,z\nu1,a,p,0\n");
    let out = auditsel(&[
        "plan",
        "--input",
        &header,
        "--m-plus",
        "1",
        "--m-minus",
        "0",
        "--seed",
        "1",
        "--out",
        "x",
    ]);
    assert!(stderr(&out).contains("unit_id"), "{}", stderr(&out));
}

#[test]
fn unknown_labels_are_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let units = write(tmp.path(), "units.csv", &selective_units());
    let dir = tmp.path().join("plan").display().to_string();
    auditsel(&[
        "plan",
        "--input",
        &units,
        "--m-plus",
        "10",
        "--m-minus",
        "5",
        "--seed",
        "1",
        "--out",
        &dir,
    ]);
    let other = write(
        tmp.path(),
        "other.csv",
        "unit_id,x,y,z\nu1,a,p,0\nu2,zz,p,1\nu3,a,r,0\n",
    );
    let out = auditsel(&[
        "realize", "--plan", &dir, "--input", &other, "--seed", "1", "--out", "x",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("zz") && err.contains("\"r\""), "{err}");
}

#[test]
fn invalid_combinations_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let units = write(tmp.path(), "units.csv", &selective_units());
    let run = |extra: &[&str]| {
        let mut args = vec!["plan", "--input", &units, "--seed", "1", "--out", "x"];
        args.extend_from_slice(extra);
        stderr(&auditsel(&args))
    };
    assert!(run(&["--m-plus", "5", "--m-minus", "1", "--lambda", "0.1"]).contains("--lambda"));
    assert!(run(&[
        "--m-plus",
        "5",
        "--m-minus",
        "1",
        "--objective",
        "f1",
        "--kappa",
        "2"
    ])
    .contains("--kappa"));
    assert!(run(&["--m-plus", "5", "--m-minus", "100000"]).contains("--m-minus"));
    assert!(run(&["--m-plus", "100000", "--m-minus", "1"]).contains("--m-plus"));
    assert!(run(&["--m-plus", "5", "--m-minus", "1", "--alpha", "1.5"]).contains("--alpha"));
    let both = auditsel(&[
        "plan",
        "--input",
        &units,
        "--table",
        &units,
        "--m-plus",
        "1",
        "--m-minus",
        "0",
        "--out",
        "x",
    ]);
    assert_eq!(both.status.code(), Some(1));
    assert!(stderr(&both).contains("--table"));
}

#[test]
fn sweep_reports_every_combination() {
    let tmp = tempfile::tempdir().unwrap();
    let units = write(tmp.path(), "units.csv", &selective_units());
    let dir = tmp.path().join("sweep").display().to_string();
    let out = auditsel(&[
        "sweep",
        "--input",
        &units,
        "--sweep-m-plus",
        "20,5",
        "--sweep-m-minus-factor",
        "1,0",
        "--seed",
        "2",
        "--out",
        &dir,
    ]);
    assert!(matches!(out.status.code(), Some(0 | 2)), "{}", stderr(&out));
    let sweep = fs::read_to_string(tmp.path().join("sweep/sweep.csv")).unwrap();
    let keys: Vec<String> = sweep
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(3).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(keys, ["5,0,0", "5,1,5", "20,0,0", "20,1,20"]);
    assert!(tmp.path().join("sweep/plan.csv").exists());
}

#[test]
fn estimate_writes_labelled_estimates() {
    let tmp = tempfile::tempdir().unwrap();
    let audited = write(
        tmp.path(),
        "audited.csv",
        "unit_id,w,x,y\nu1,a,a,p\nu2,b,a,p\nu3,a,a,q\nu4,b,b,q\nu5,b,b,p\n",
    );
    let margins = write(tmp.path(), "margins.csv", "y,proportion\np,0.4\nq,0.6\n");
    let dir = tmp.path().join("est").display().to_string();
    let out = auditsel(&[
        "estimate",
        "--audited",
        &audited,
        "--margins",
        &margins,
        "--out",
        &dir,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let est = fs::read_to_string(tmp.path().join("est/estimates.csv")).unwrap();
    assert!(est.starts_with("parameter,w,x,estimate,std_error\npw,a,,"));
    // P(W = a) = 0.4 * 1/3 + 0.6 * 1/2.
    assert!(est.contains("pw,a,,0.4333333333"), "{est}");
    assert!(fs::read_to_string(tmp.path().join("est/report.txt"))
        .unwrap()
        .contains("conservative"));

    let missing = write(tmp.path(), "missing.csv", "y,proportion\np,1.0\n");
    let out = auditsel(&[
        "estimate",
        "--audited",
        &audited,
        "--margins",
        &missing,
        "--out",
        &dir,
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sim").display().to_string();
    let out = auditsel(&[
        "simulate",
        "--condition",
        "WX1,WY1,XZ4",
        "--replicates",
        "3",
        "--attempts",
        "5",
        "--population",
        "2000",
        "--seed",
        "9",
        "--out",
        &dir,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let reps = fs::read_to_string(tmp.path().join("sim/replicates.csv")).unwrap();
    assert_eq!(reps.lines().count(), 4);
    let summary = fs::read_to_string(tmp.path().join("sim/summary.csv")).unwrap();
    assert!(summary
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("\"WX1,WY1,XZ4\",3,"));
    let bad = auditsel(&["simulate", "--condition", "WX9", "--out", &dir]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("--condition"));
}
