use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tmlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmlab"))
        .current_dir(dir)
        .env_remove("TMLAB_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(dir: &Path, args: &[&str]) -> Value {
    let out = tmlab(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_record(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().expect("stderr has an error record");
    serde_json::from_str(last).expect("error record is JSON")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

/// Solves `e^t - 1 - t = y` by bisection.
fn phi2_inverse(y: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 10.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.exp() - 1.0 - mid < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn disk_norm_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    ok_json(dir.path(), &["fixture", "--shape", "disk:amp=2,radius=1", "--out", "disk.csv"]);
    let v = ok_json(dir.path(), &["orlicz-norm", "--field", "disk.csv", "--p", "2", "--kappa", "1.0"]);
    let got = v["luxemburg_norm"].as_f64().unwrap();
    let want = 2.0 / phi2_inverse(1.0 / std::f64::consts::PI).sqrt();
    assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
}

#[test]
fn two_bubble_sequence_gives_two_levels() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "twobubble.json",
        r#"{
  "ds_per_n": 0.0625,
  "bubbles": [
    {"profile": "moser:a=1", "scale": {"form": "power", "c": 1.0, "gamma": 1.0}},
    {"profile": "moser:a=1,amp=0.7", "scale": {"form": "power", "c": 1.0, "gamma": 3.0}}
  ]
}"#,
    );
    let v =
        ok_json(dir.path(), &["--out-dir", "out", "decompose", "--seq", "twobubble.json", "--eps", "0.05"]);
    let levels = v["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 2);
    assert_eq!(v["termination_reason"]["reason"], "residual-below-eps");
    for (level, gamma) in levels.iter().zip([3.0, 1.0]) {
        let fit = level["scale_fit"]["gamma"].as_f64().unwrap();
        assert!((fit - gamma).abs() < 0.05, "{fit}");
        let path = level["profile_path"].as_str().unwrap();
        assert!(dir.path().join(path).is_file());
    }
    assert!(dir.path().join("out/residuals.plt").is_file());
}

#[test]
fn zero_config_gives_zero_energies() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "zero.cfg", "R = 4\ndr = 0.0625\nT = 1\n");
    let v = ok_json(dir.path(), &["kg-run", "--config", "zero.cfg"]);
    assert_eq!(v["initial_energy"], 0.0);
    let csv = std::fs::read_to_string(dir.path().join("kg_trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("t,E_kin,E_grad,E_pot,E_total"));
    let mut rows = 0;
    for line in lines {
        rows += 1;
        assert!(line.split(',').skip(1).all(|x| x.parse::<f64>().unwrap() == 0.0), "{line}");
    }
    assert_eq!(rows, v["snapshots"].as_u64().unwrap() as usize);
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();

    let usage = tmlab(p, &["orlicz-norm"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(error_record(&usage)["error"]["kind"], "usage");

    write(p, "cfl.cfg", "R = 4\ndr = 0.0625\ndt = 0.125\nT = 1\n");
    let numerical = tmlab(p, &["kg-run", "--config", "cfl.cfg"]);
    assert_eq!(numerical.status.code(), Some(3));
    assert_eq!(error_record(&numerical)["error"]["kind"], "numerical");

    let io = tmlab(p, &["orlicz-norm", "--field", "missing.csv"]);
    assert_eq!(io.status.code(), Some(4));
    assert_eq!(error_record(&io)["error"]["code"], 4);

    write(p, "bad.cfg", "R = 4\ndr = 0.0625\nT = 1\nu0 = cone:amp=1\n");
    let parse = tmlab(p, &["kg-run", "--config", "bad.cfg"]);
    assert_eq!(parse.status.code(), Some(5));
    assert_eq!(error_record(&parse)["error"]["kind"], "parse");

    let bad_value = tmlab(p, &["orlicz-norm", "--shape", "disk:amp=x,radius=1"]);
    assert_eq!(bad_value.status.code(), Some(5));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let cfg = "R = 6\ndr = 0.0625\nT = 2\np = 2\nsave_every = 4\nu0 = smooth-bump:amp=0.5,radius=1\n";
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "pulse.cfg", cfg);
        let out = tmlab(dir.path(), &["--out-dir", "out", "kg-run", "--config", "pulse.cfg", "--snapshots"]);
        assert!(out.status.success());
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path().join("out"))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        (out.stdout, files)
    };
    let (a, b) = (run(), run());
    assert!(a.1.len() > 3);
    assert_eq!(a, b);
}

#[test]
fn emitted_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(p, "a.cfg", "# pulse\nT = 1.5\nR = 6\ndr = 0.0625\nu1 = smooth-bump:amp=0.2,radius=1\n");
    let first = ok_json(p, &["kg-run", "--config", "a.cfg", "--name", "a"]);
    let emitted = first["config"].as_str().unwrap();
    write(p, "b.cfg", emitted);
    let second = ok_json(p, &["kg-run", "--config", "b.cfg", "--name", "b"]);
    assert_eq!(second["config"].as_str().unwrap(), emitted);
    assert_eq!(
        std::fs::read(p.join("a_trajectory.csv")).unwrap(),
        std::fs::read(p.join("b_trajectory.csv")).unwrap()
    );
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tmlab"))
        .current_dir(dir.path())
        .env("TMLAB_OUT_DIR", "from_env")
        .args(["bubble", "--profile", "moser:a=1", "--alpha", "20"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("from_env/bubble.csv").is_file());
}

#[test]
fn rearrange_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok_json(
        p,
        &[
            "fixture",
            "--shape",
            "smooth-bump:amp=1,radius=0.5",
            "--half-width",
            "1",
            "--h",
            "0.02",
            "--center",
            "0.1,-0.1",
            "--out",
            "bump.csv",
        ],
    );
    let v = ok_json(p, &["rearrange", "--field2d", "bump.csv"]);
    let ratio = v["polya_szego_ratio"].as_f64().unwrap();
    assert!(ratio <= 1.0 + 1e-9, "{ratio}");
    assert!((v["sup_norm"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let star = ok_json(p, &["orlicz-norm", "--field", "rearranged.csv"]);
    assert!(star["luxemburg_norm"].as_f64().unwrap() > 0.0);
}
