use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybrid-scenarios")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

const SHORT_BOX: [&str; 4] = ["--override", "output.t_end=0.05", "--override", "output.sample_times=[0.0, 0.05]"];

#[test]
fn list_names_every_scenario() {
    let o = cli(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in hybrid_scenarios::scenarios::names() {
        assert!(text.contains(name), "{name} missing from list");
    }
    assert!(text.contains("studies: refinement"));
}

#[test]
fn validate_accepts_builtins() {
    for name in hybrid_scenarios::scenarios::names() {
        let o = cli(&["validate", name]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        assert!(stdout(&o).contains("ok"));
    }
}

#[test]
fn config_errors_exit_with_two() {
    let o = cli(&["validate", "no-such-scenario"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown scenario"));

    let o = cli(&["validate", "lbm-box-h-theorem", "--override", "discretization.dt_f=1e-6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid config"), "{}", stderr(&o));

    let o = cli(&["run", "lbm-box-h-theorem", "--override", "bogus"]);
    assert_eq!(o.status.code(), Some(2));

    let o = cli(&["validate", "lbm-box-h-theorem", "--override", "physics.no_such_key=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_failure_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let mut args = vec!["--quiet", "run", "lbm-box-h-theorem", "--out", out.to_str().unwrap()];
    args.extend(SHORT_BOX);
    let o = cli(&args);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn run_writes_outputs_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        let mut args = vec!["--quiet", "run", "lbm-box-h-theorem", "--out", d.to_str().unwrap()];
        args.extend(SHORT_BOX);
        let o = cli(&args);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["metrics.csv", "h_trace.csv", "fields_000_lattice.csv", "fields_001_lattice.csv", "summary.txt", "h_trace.svg"] {
        assert!(dirs[0].join(f).exists(), "{f} not written");
    }
    let (a, b) = (csvs(&dirs[0]), csvs(&dirs[1]));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn overrides_reach_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let mut args = vec!["run", "lbm-box-h-theorem", "--out", out.to_str().unwrap(), "--override", "output.plots=false"];
    args.extend(SHORT_BOX);
    let o = cli(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("counter steps 30"), "{}", stdout(&o));
    assert!(!out.join("h_trace.svg").exists());
    let trace = fs::read_to_string(out.join("h_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 32);
}

#[test]
fn zero_initial_data_stays_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("zero.toml");
    fs::write(
        &cfg,
        "[scenario]\nname = \"gauss-1d\"\n\n[output]\nt_end = 0.05\nsample_times = [0.05]\n\n[[initial.species]]\nname = \"u\"\nkind = \"zero\"\n",
    )
    .unwrap();
    let out = tmp.path().join("o");
    let o = cli(&["--quiet", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fields: Vec<_> = csvs(&out).into_iter().filter(|(n, _)| n.starts_with("fields_")).collect();
    assert!(fields.len() >= 2);
    for (name, bytes) in fields {
        let text = String::from_utf8(bytes).unwrap();
        for line in text.lines().skip(1) {
            let u: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert_eq!(u, 0.0, "{name}: {line}");
        }
    }
}

#[test]
fn study_prints_order_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = cli(&["--quiet", "study", "transfer-study", "--name", "fem2lbm", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("study_fem2lbm.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let order: f64 = csv.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(order > 1.8, "{order}");
    assert!(out.join("study_fem2lbm.svg").exists());

    let o = cli(&["study", "transfer-study", "--name", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}
