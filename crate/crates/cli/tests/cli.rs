use std::process::{Command, Output};

fn wred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wred"))
        .args(args)
        .env_remove("WRED_FUEL_DEFAULT")
        .env_remove("WRED_HORIZON_DEFAULT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn temp(name: &str, text: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("wred-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn list_names_entries_constructions_and_rules() {
    let o = wred(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for id in ["rt_product/2/2/2", "ts3_cube/7", "adversary/qwwkl", "coding/jump", "parity-sum"] {
        assert!(text.contains(id), "missing {id}");
    }
}

#[test]
fn verify_reports_are_reproducible() {
    let args = ["verify", "rt_product", "--samples", "3", "--horizon", "16", "--seed", "5"];
    let (a, b) = (wred(&args), wred(&args));
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("case_id,entry_id,check,status,detail,seed,horizon,fuel\n"));
    assert_eq!(text.lines().filter(|l| l.contains(",pass,")).count(), 2, "{text}");
}

#[test]
fn environment_sets_default_budgets() {
    let o = Command::new(env!("CARGO_BIN_EXE_wred"))
        .args(["verify", "coding/greedy-rainbow"])
        .env("WRED_HORIZON_DEFAULT", "20")
        .env("WRED_FUEL_DEFAULT", "777")
        .output()
        .unwrap();
    assert!(stdout(&o).lines().nth(1).unwrap().ends_with(",0,20,777"), "{}", stdout(&o));
}

#[test]
fn bad_input_exits_with_three() {
    assert_eq!(wred(&["verify", ""]).status.code(), Some(3));
    assert_eq!(wred(&["verify", "no-such-entry"]).status.code(), Some(3));
    assert_eq!(wred(&["adversary", "nope"]).status.code(), Some(3));
    let bad = temp("bad.doc", "kind coloring\nrepresentation table\nparam arity 1\nparam domain 2\nentry 0 0 5\nentry 0 1 0\n");
    let o = wred(&["oracle", "homogeneous", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("value 5"));
}

#[test]
fn adversary_log_is_written_with_its_digest() {
    let out = std::env::temp_dir().join(format!("wred-qwwkl-{}.csv", std::process::id()));
    let o = wred(&["adversary", "qwwkl", "--param", "p=1/2", "--param", "q=3/4", "--stages", "64", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let log = std::fs::read_to_string(&out).unwrap();
    assert_eq!(log.lines().count(), 65);
    assert!(String::from_utf8_lossy(&o.stderr)
        .contains("digest a4a09eaee497516e60048206347a4e64e6e55dacd2687965529db2e7716f2197"));
}

#[test]
fn oracle_solves_a_rule_document() {
    let doc = temp("parity.doc", "kind coloring\nrepresentation rule\nrule parity-sum\nparam arity 2\nparam colors 2\n");
    let o = wred(&["oracle", "homogeneous", "--input", doc.to_str().unwrap(), "--horizon", "12", "--size", "4"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "column 0: [0, 2, 4, 6] (exhaustive)\n");
}

#[test]
fn squash_markers_are_increasing() {
    let o = wred(&["squash", "--config", "trivial-over-rt", "--stages", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ms: Vec<u64> = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ms.len(), 6);
    for (s, w) in ms.windows(2).enumerate() {
        assert!(w[1] > s as u64, "m_{} = {} is not above {s}", s + 1, w[1]);
    }
}
