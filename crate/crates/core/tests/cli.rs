use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ucn::cli::{describe, run, RunManifest};
use ucn::Error;

const TOY: &str = include_str!("../scenarios/solar_toy.toml");

const TINY: &[&str] = &[
    "--set",
    "scenario.world.slots=8",
    "--set",
    "scenario.users.total=20",
    "--set",
    "scenario.uavs.count=2",
    "--set",
    "agent.ddpg.warmup=16",
    "--set",
    "agent.ddpg.batch=8",
    "--set",
    "run.eval_seeds=[5]",
];

fn ucn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucn")).args(args).output().unwrap()
}

fn call(args: &[&str]) -> ucn::Result<Option<PathBuf>> {
    run(std::iter::once("ucn").chain(args.iter().copied()))
}

fn with(base: &[&str], extra: &[&str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn path(p: &Path) -> String {
    p.display().to_string()
}

fn train_ddpg(out: &Path) -> PathBuf {
    let o = path(out);
    let args = with(&["train", "ddpg", "--seed", "1", "--episodes", "4", "--out", &o], TINY);
    call(&args.iter().map(String::as_str).collect::<Vec<_>>()).unwrap().unwrap()
}

#[test]
fn train_twice_gives_identical_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let a = train_ddpg(&tmp.path().join("a"));
    let b = train_ddpg(&tmp.path().join("b"));
    for f in ["curve.csv", "checkpoint.ucn", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.command, "train ddpg");
    assert_eq!(m.seeds["run"], 1);
    assert!(m.files.contains(&"config.toml".to_string()));
    let report = ucn::cli::report(&a).unwrap();
    assert!(report.contains("episodes 4"), "{report}");
}

#[test]
fn unknown_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[scenario.world]\nslots = 10\nwarp_factor = 9\n").unwrap();
    let out = tmp.path().join("run");
    let r = ucn(&["train", "ddpg", "--config", &path(&cfg), "--out", &path(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("warp_factor"), "{err}");
    assert!(err.contains("line 3"), "{err}");
    assert!(!out.exists());
}

#[test]
fn missing_config_leaves_no_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let r = ucn(&["train", "marl", "--config", &path(&tmp.path().join("nope.toml")), "--out", &path(&out)]);
    assert_ne!(r.status.code(), Some(0));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn eval_without_events_omits_windows_and_repeats_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = train_ddpg(&tmp.path().join("train"));
    let ckpt = path(&run_dir.join("checkpoint.ucn"));
    let eval = |name: &str| {
        let o = path(&tmp.path().join(name));
        let args = with(&["eval", "--checkpoint", &ckpt, "--out", &o], TINY);
        call(&args.iter().map(String::as_str).collect::<Vec<_>>()).unwrap().unwrap()
    };
    let (a, b) = (eval("e1"), eval("e2"));
    let summary = fs::read_to_string(a.join("summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert!(v["seeds"][0].get("windows").is_none(), "{summary}");
    let trace = fs::read_to_string(a.join("traces/seed-5.jsonl")).unwrap();
    assert!(trace.lines().next().unwrap().contains("\"schema\":1"));
    assert_eq!(trace.lines().count(), 1 + 8);
    assert_eq!(trace, fs::read_to_string(b.join("traces/seed-5.jsonl")).unwrap());
}

#[test]
fn eval_rejects_other_architectures() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = train_ddpg(&tmp.path().join("train"));
    let ckpt = path(&run_dir.join("checkpoint.ucn"));
    let o = path(&tmp.path().join("e"));
    let args = with(&["eval", "--checkpoint", &ckpt, "--out", &o], TINY);
    let mut args: Vec<&str> = args.iter().map(String::as_str).collect();
    args.extend(["--set", "scenario.uavs.count=3"]);
    match call(&args) {
        Err(Error::Architecture { expected, found }) => {
            assert_eq!(expected, vec![13, 6]);
            assert_eq!(found, vec![9, 4]);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn corrupted_checkpoint_fails_its_checksum() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = train_ddpg(&tmp.path().join("train"));
    let ckpt = run_dir.join("checkpoint.ucn");
    let mut bytes = fs::read(&ckpt).unwrap();
    let last = bytes.len() - 3;
    bytes[last] ^= 0x40;
    let broken = tmp.path().join("broken.ucn");
    fs::write(&broken, bytes).unwrap();
    let r = ucn(&["eval", "--checkpoint", &path(&broken), "--out", &path(&tmp.path().join("e"))]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("checksum"));
}

#[test]
fn mapping_has_a_row_per_count_and_hour() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("toy.toml");
    fs::write(&cfg, TOY).unwrap();
    let dir = call(&["mapping", "--config", &path(&cfg), "--out", &path(&tmp.path().join("m"))])
        .unwrap()
        .unwrap();
    let csv = fs::read_to_string(dir.join("mapping.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), (2 + 1) * 4);
    assert!(rows.iter().filter(|r| r.starts_with("0,")).all(|r| r.split(',').nth(2) == Some("0")));
}

#[test]
fn baseline_with_no_floor_is_all_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("toy.toml");
    fs::write(&cfg, TOY).unwrap();
    let dir = call(&[
        "baseline",
        "--config",
        &path(&cfg),
        "--set",
        "scenario.scheduler.p_min=0",
        "--out",
        &path(&tmp.path().join("b")),
    ])
    .unwrap()
    .unwrap();
    let csv = fs::read_to_string(dir.join("baseline.csv")).unwrap();
    let k: Vec<&str> = csv.lines().skip(1).map(|r| r.split(',').nth(3).unwrap()).collect();
    assert_eq!(k, vec!["0"; 4]);
}

#[test]
fn infeasible_baseline_is_a_structured_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("toy.toml");
    fs::write(&cfg, TOY).unwrap();
    let out = tmp.path().join("b");
    let r = ucn(&[
        "baseline",
        "--config",
        &path(&cfg),
        "--set",
        "scenario.scheduler.p_min=1",
        "--set",
        "scenario.coverage.capacity=5",
        "--out",
        &path(&out),
    ]);
    assert_eq!(r.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&r.stderr).unwrap();
    assert_eq!(v["error"], "infeasible");
    assert!(v["hour"].is_u64());
    assert!(!out.exists());
}

#[test]
fn enumerate_refuses_large_instances() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("e");
    let r = ucn(&[
        "enumerate",
        "--set",
        "scenario.uavs.count=3",
        "--set",
        "scenario.scheduler.hours=10",
        "--out",
        &path(&out),
    ]);
    assert_eq!(r.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&r.stderr).unwrap();
    assert_eq!(v["error"], "too_large");
    assert_eq!(v["size"], "205891132094649");
    assert!(!out.exists());
}

#[test]
fn enumerate_toy_reports_the_optimum() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("toy.toml");
    fs::write(&cfg, TOY).unwrap();
    let dir = call(&["enumerate", "--config", &path(&cfg), "--out", &path(&tmp.path().join("e"))])
        .unwrap()
        .unwrap();
    let csv = fs::read_to_string(dir.join("profile.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("uav,hour,status,battery"));
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
    assert!(ucn::cli::report(&dir).unwrap().contains("optimum"));
}

#[test]
fn run_directories_are_write_once() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("toy.toml");
    fs::write(&cfg, TOY).unwrap();
    let out = path(&tmp.path().join("m"));
    let args = ["mapping", "--config", &path(&cfg), "--out", &out];
    let dir = call(&args).unwrap().unwrap();
    let before = fs::read(dir.join("mapping.csv")).unwrap();
    let err = call(&args).unwrap_err();
    assert!(matches!(err, Error::OutputExists(_)));
    assert_eq!(describe(&err).0, 1);
    assert_eq!(fs::read(dir.join("mapping.csv")).unwrap(), before);
    let leftovers = fs::read_dir(tmp.path()).unwrap().filter(|e| {
        e.as_ref().unwrap().file_name().to_string_lossy().contains("partial")
    });
    assert_eq!(leftovers.count(), 0);
}

#[test]
fn help_exits_cleanly() {
    let r = ucn(&["--help"]);
    assert_eq!(r.status.code(), Some(0));
    let text = String::from_utf8_lossy(&r.stdout);
    for cmd in ["train", "eval", "mapping", "baseline", "enumerate", "report"] {
        assert!(text.contains(cmd), "{text}");
    }
}
