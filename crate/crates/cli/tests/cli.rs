use std::path::Path;
use std::process::{Command, Output};

fn dpeq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpeq"))
        .current_dir(dir)
        .args(args)
        .env_remove("DPEQ_CORRUPT_FIXTURE")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

const DENSE: &[&str] = &[
    "gen", "--kind", "dense", "--n", "64", "--p", "0.25", "--actions", "3", "--zero-sum", "--seed", "7",
];

#[test]
fn gen_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dpeq(dir.path(), &[DENSE, &["--out", "a.json"]].concat());
    let b = dpeq(dir.path(), &[DENSE, &["--out", "b.json"]].concat());
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);
    assert_eq!(read(dir.path(), "a.json"), read(dir.path(), "b.json"));
    let summary = String::from_utf8(a.stdout).unwrap();
    assert!(summary.starts_with("N=64 "), "{summary}");
    let game = dpeq_core::PolymatrixGame::load(dir.path().join("a.json")).unwrap();
    assert!(game.validate().is_ok());
    assert!(game.is_zero_sum());
}

#[test]
fn sparse_gen_reports_edge_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dpeq(dir.path(), &["gen", "--kind", "sparse", "--n", "1024", "--c", "2", "--out", "s.json"]);
    assert_eq!(code(&out), 0);
    let summary = String::from_utf8(out.stdout).unwrap();
    let edges: usize = summary
        .split_whitespace()
        .find_map(|w| w.strip_prefix("|E|="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(edges <= 2048);
}

#[test]
fn bad_flags_and_io_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dpeq(dir.path(), &["gen", "--kind", "dense"])), 2);
    assert_eq!(code(&dpeq(dir.path(), &["gen", "--kind", "cube", "--n", "4", "--out", "x"])), 2);
    assert_eq!(code(&dpeq(dir.path(), &["run", "--game", "missing.json"])), 3);
    let out = dpeq(dir.path(), &[DENSE, &["--out", "no/such/dir/g.json"]].concat());
    assert_eq!(code(&out), 3);
    std::fs::write(dir.path().join("junk.json"), "{not json").unwrap();
    assert_eq!(code(&dpeq(dir.path(), &["run", "--game", "junk.json"])), 3);
}

#[test]
fn run_is_deterministic_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dpeq(dir.path(), &[DENSE, &["--out", "g.json"]].concat())), 0);
    let args = |m: &'static str, t: &'static str| {
        vec!["run", "--game", "g.json", "--seed", "3", "--rounds", "5", "--metrics", m, "--trace", t]
    };
    assert_eq!(code(&dpeq(dir.path(), &args("m1.json", "t1.csv"))), 0);
    assert_eq!(code(&dpeq(dir.path(), &args("m2.json", "t2.csv"))), 0);
    assert_eq!(read(dir.path(), "m1.json"), read(dir.path(), "m2.json"));
    assert_eq!(read(dir.path(), "t1.csv"), read(dir.path(), "t2.csv"));
    assert!(read(dir.path(), "t1.csv").starts_with("t,player,kind,a0,a1,a2\n"));
    let sidecar: serde_json::Value = serde_json::from_str(&read(dir.path(), "t1.json")).unwrap();
    assert_eq!(sidecar["config"]["t_rounds"], 5);

    let noisy = ["run", "--game", "g.json", "--rounds", "2", "--sigma", "0.5", "--record-noise", "--trace", "n.csv"];
    assert_eq!(code(&dpeq(dir.path(), &noisy)), 0);
    let kinds = |kind: &str| read(dir.path(), "n.csv").lines().filter(|l| l.split(',').nth(2) == Some(kind)).count();
    assert_eq!((kinds("clean"), kinds("obs"), kinds("noise")), (3 * 64, 2 * 64, 2 * 64));
}

#[test]
fn dense_auto_schedule_records_unit_noise_scale() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dpeq(dir.path(), &[DENSE, &["--out", "g.json"]].concat())), 0);
    let out = dpeq(dir.path(), &["run", "--game", "g.json"]);
    assert_eq!(code(&out), 0);
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((m["sigma_sqrt_t"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn silent_zero_game_stays_unexploitable() {
    let dir = tempfile::tempdir().unwrap();
    let game = dpeq_core::PolymatrixGame::new(
        vec![2, 2, 2],
        vec![(0, 1), (1, 2)],
        [(0, 1), (1, 0), (1, 2), (2, 1)]
            .into_iter()
            .map(|e| (e, dpeq_core::UtilityMatrix::zeros(2, 2)))
            .collect(),
        true,
    )
    .unwrap();
    game.save(dir.path().join("z.json")).unwrap();
    let out = dpeq(
        dir.path(),
        &["run", "--game", "z.json", "--eta", "0.5", "--sigma", "0", "--rounds", "40", "--tau-constant", "0"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let checkpoints = m["checkpoints"].as_array().unwrap();
    assert_eq!(checkpoints.len(), 20);
    assert!(checkpoints.iter().all(|c| c["avg_exploitability"] == 0.0));
}

#[test]
fn audit_exit_codes_and_identical_neighbor() {
    let dir = tempfile::tempdir().unwrap();
    let gen = ["gen", "--kind", "sparse", "--n", "200", "--c", "2", "--seed", "1", "--out", "s.json"];
    assert_eq!(code(&dpeq(dir.path(), &gen)), 0);
    let zero = dpeq(dir.path(), &["audit", "--game", "s.json", "--schedule", "sparse", "--sigma", "0"]);
    assert_eq!(code(&zero), 5);
    let same = dpeq(
        dir.path(),
        &["audit", "--game", "s.json", "--schedule", "sparse", "--identical", "--csv", "b.csv", "--out", "r.json"],
    );
    assert_eq!(code(&same), 0);
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "r.json")).unwrap();
    assert_eq!(report["empirical_budget_avg"], 0.0);
    let table = read(dir.path(), "b.csv");
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("player,empirical_budget"));
    assert_eq!(lines.count(), 200);
    let bad_edge = dpeq(dir.path(), &["audit", "--game", "s.json", "--edge", "0,0"]);
    assert_eq!(code(&bad_edge), 2);
}

#[test]
fn audit_on_chain_leaves_distant_players_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let gen = ["gen", "--kind", "chain", "--n", "60", "--seed", "2", "--out", "c.json"];
    assert_eq!(code(&dpeq(dir.path(), &gen)), 0);
    let out = dpeq(
        dir.path(),
        &["audit", "--game", "c.json", "--edge", "29,30", "--eta", "0.3", "--sigma", "0.5", "--rounds", "10"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let per = report["empirical_budget_per_player"].as_array().unwrap();
    let zeros = per.iter().filter(|b| b.as_f64() == Some(0.0)).count();
    assert!(zeros > 30, "{zeros}");
    assert!(report["empirical_budget_avg"].as_f64().unwrap() <= report["theoretical_budget"].as_f64().unwrap());
}

#[test]
fn sweep_header_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sweep.toml"),
        "kind = \"dense\"\nns = [16, 32]\nseeds = [0, 1]\nno_timing = true\nout = \"a.csv\"\n",
    )
    .unwrap();
    assert_eq!(code(&dpeq(dir.path(), &["sweep", "--config", "sweep.toml"])), 0);
    assert_eq!(code(&dpeq(dir.path(), &["sweep", "--config", "sweep.toml", "--out", "b.csv"])), 0);
    let a = read(dir.path(), "a.csv");
    assert_eq!(a, read(dir.path(), "b.csv"));
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some(dpeq_core::experiment::SWEEP_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("16,0,") && rows[3].starts_with("32,1,"));
    assert!(rows.iter().all(|r| r.ends_with(",0,ok")));

    let override_ns = dpeq(dir.path(), &["sweep", "--config", "sweep.toml", "--ns", "8", "--out", "c.csv"]);
    assert_eq!(code(&override_ns), 0);
    assert_eq!(read(dir.path(), "c.csv").lines().count(), 3);
    let unsorted = dpeq(dir.path(), &["sweep", "--kind", "dense", "--ns", "32,16", "--out", "d.csv"]);
    assert_eq!(code(&unsorted), 2);
}

#[test]
fn thread_cap_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = |threads: &str, out: &str| {
        Command::new(env!("CARGO_BIN_EXE_dpeq"))
            .current_dir(dir.path())
            .env("DPEQ_THREADS", threads)
            .args(["sweep", "--kind", "sparse", "--ns", "64,128", "--seeds", "0,1,2", "--no-timing", "--out", out])
            .output()
            .unwrap()
            .status
            .code()
            .unwrap()
    };
    assert_eq!(sweep("1", "one.csv"), 0);
    assert_eq!(sweep("4", "four.csv"), 0);
    assert_eq!(read(dir.path(), "one.csv"), read(dir.path(), "four.csv"));
    assert_eq!(sweep("zero", "x.csv"), 2);
}

#[test]
fn verify_passes_and_detects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dpeq(dir.path(), &["verify"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = Command::new(env!("CARGO_BIN_EXE_dpeq"))
        .arg("verify")
        .env("DPEQ_CORRUPT_FIXTURE", "1")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 1);
    let text = String::from_utf8(bad.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("fixtures") && l.contains("FAIL")));
}
