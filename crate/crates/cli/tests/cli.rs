use std::process::Command;

fn ising_gap(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ising-gap")).args(args).output().expect("binary runs")
}

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gap_prints_one_json_record() {
    let o = ising_gap(&["gap", "--l", "2", "--beta", "0", "--boundary", "alternating", "--rates", "metropolis"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert!(line.starts_with("{\"l\":2,\"beta\":0.0,\"boundary_descriptor\":\"alternating\""), "{line}");
    assert!(line.contains("\"method\":\"dense_eig\""));
    let gap: f64 = line.split("\"gap\":").nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((gap - 2.0).abs() < 1e-9);
}

#[test]
fn gap_rejects_bad_boundary() {
    let o = ising_gap(&["gap", "--l", "2", "--beta", "1", "--boundary", "wobbly"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("boundary"));
}

#[test]
fn run_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.txt");
    let csv = dir.path().join("out.csv");
    let json = dir.path().join("out.json");
    std::fs::write(&plan, format!("l = 2, 3\nbeta = 1.5\nboundary = alternating\njson = {}\n", json.display())).unwrap();
    let o = ising_gap(&["run", "--plan", plan.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# schema: ising-gap-records/1");
    assert!(lines[1].starts_with("l,beta,boundary,rates,seed,method,gap"));
    assert_eq!(lines.len(), 4);
    assert!(lines[2].contains(",true,"), "{}", lines[2]);
    assert!(std::fs::read_to_string(&json).unwrap().contains("\"records\""));

    // same plan, same bytes
    let again = dir.path().join("again.csv");
    ising_gap(&["run", "--plan", plan.to_str().unwrap(), "--csv", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn run_exits_nonzero_on_guard_failure() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.txt");
    std::fs::write(&plan, "l = 6\nbeta = 1\nboundary = plus\nmethod = exact\n").unwrap();
    let o = ising_gap(&["run", "--plan", plan.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().nth(2).unwrap().contains("guard"));
}

#[test]
fn empty_plan_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.txt");
    std::fs::write(&plan, "# nothing to do\n").unwrap();
    let o = ising_gap(&["run", "--plan", plan.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn plan_parse_error_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.txt");
    std::fs::write(&plan, "l = 2\nbetta = 1\n").unwrap();
    let o = ising_gap(&["run", "--plan", plan.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn verify_lemmas_reports_clean_run() {
    let o = ising_gap(&["verify-lemmas", "--l", "3,4", "--samples", "30", "--seed", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("\"violations\": 0"));
    assert!(!out.contains("\"violations\": 1"));
}

#[test]
fn transition_single_size_has_no_slope() {
    let o = ising_gap(&["transition", "--beta", "1", "--l", "2", "--delta", "0.5"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("\"slope\": null"));
}

#[test]
fn simulate_streams_samples() {
    let o = ising_gap(&[
        "simulate", "--l", "2", "--beta", "0", "--boundary", "free", "--t-max", "200", "--burn-in", "1", "--replicas",
        "2", "--dt", "0.05", "--observable", "center-spin", "--samples", "-",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().next().unwrap(), "replica,time,center_spin,magnetization");
    assert!(out.lines().any(|l| l.starts_with("1,")));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau = "));
}
