use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssprofile"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let d = dir.to_str().unwrap();
    all.extend(["--out", d]);
    run(&all)
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn exponents_report() {
    let v = json(&run(&["exponents", "--m", "0.25", "--N", "4", "--sigma", "4", "--p", "1.8"]));
    assert_eq!(v["exponents"]["p_s"].as_f64(), Some(1.75));
    let v = json(&run(&["exponents", "--N", "2"]));
    assert_eq!(v["exponents"]["p_c"], "inf");
    assert_eq!(v["exponents"]["p_s"], "inf");
    let out = run(&["exponents", "--m", "1.2"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("m = 1.2"));
}

#[test]
fn points_report() {
    let ids = |v: &Value| -> Vec<(String, Value)> {
        v["points"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| (p["id"].as_str().unwrap().to_string(), p["stability"].clone()))
            .collect()
    };
    let fwd = ids(&json(&run(&["points", "--system", "forward", "--p", "1.8"])));
    assert!(fwd.contains(&("P2".into(), "stable_focus".into())));
    let ext = ids(&json(&run(&["points", "--system", "extinction", "--p", "1.8"])));
    assert!(ext.contains(&("P3".into(), "saddle".into())));
    let below = ids(&json(&run(&["points", "--sigma", "10", "--p", "1.575"])));
    assert!(!below.iter().any(|(id, _)| id == "P2"));
}

#[test]
fn shoot_extinction_fast_writes_a_decreasing_profile() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run_in(dir.path(), &["shoot", "--system", "extinction", "--fast", "--sigma", "10", "--p", "3"]));
    assert!((v["tail"]["slope"].as_f64().unwrap() + 8.0).abs() < 0.4);
    assert_eq!(v["profile_csv_path"], "extinction_fast_profile.csv");
    let csv = fs::read_to_string(dir.path().join("extinction_fast_profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("xi,f,df"));
    let f: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(f.len() > 100);
    assert!(f.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(read_json(dir.path().join("extinction_fast.json")), v);
    assert!(dir.path().join("extinction_fast_orbit.csv").exists());
}

#[test]
fn shoot_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let refused = run_in(dir.path(), &["shoot", "--system", "forward", "--fast", "--p", "1.74"]);
    assert_eq!(code(&refused), 3);
    let no_bracket = run_in(dir.path(), &["shoot", "--system", "extinction", "--fast", "--p", "1.2"]);
    assert_eq!(code(&no_bracket), 4);
    let invalid = run_in(dir.path(), &["shoot", "--p", "0.5"]);
    assert_eq!(code(&invalid), 2);
    let both = run_in(dir.path(), &["shoot", "--fast", "--slow"]);
    assert_eq!(code(&both), 2);
}

#[test]
fn shoot_extinction_slow_tail() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run_in(dir.path(), &["shoot", "--system", "extinction", "--slow", "--p", "1.8"]));
    let target = -6.0 / 1.55;
    assert!((v["tail"]["slope"].as_f64().unwrap() / target - 1.0).abs() < 0.05);
    assert_eq!(v["class"], "TO_P2");
}

#[test]
fn shoot_p3_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run_in(dir.path(), &["shoot", "--system", "extinction", "--p3", "--p", "1.001"]));
    assert_eq!(v["class"], "TO_Q3");
    let slope = v["head"]["slope"].as_f64().unwrap();
    assert!((slope / (-2.0 / 0.75) - 1.0).abs() < 0.02);
    assert_eq!(code(&run_in(dir.path(), &["shoot", "--system", "forward", "--p3"])), 2);
}

fn classes(v: &Value) -> Vec<String> {
    v["orbits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["class"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn figure_2a_has_no_connection_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run_in(dir.path(), &["figure", "2a"]));
    let c = classes(&v);
    assert_eq!(c.len(), 12);
    assert!(c.iter().all(|c| c == "TO_Q3" || c == "TO_Q5"), "{c:?}");
    assert!(c.iter().filter(|c| *c == "TO_Q3").count() >= 9);
    assert!(v["connection"].is_null());
    let csv = fs::read_to_string(dir.path().join("fig2a_orbits.csv")).unwrap();
    assert!(csv.starts_with("orbit,param,eta,X,Y,Z\n"));
}

#[test]
fn figure_2b_brackets_the_separatrix() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run_in(dir.path(), &["figure", "2b"]));
    let c = classes(&v);
    let k = c.iter().position(|c| c == "TO_P2").expect("some orbit enters P2");
    assert!(k > 0 && c[..k].iter().all(|c| c == "TO_Q3") && c[k..].iter().all(|c| c == "TO_P2"), "{c:?}");
    let star = v["connection"].as_f64().unwrap();
    let lo = v["orbits"][k - 1]["param"].as_f64().unwrap();
    let hi = v["orbits"][k]["param"].as_f64().unwrap();
    assert!(lo < star && star < hi);
}

#[test]
fn figure_3b_has_orbits_entering_p2() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run_in(dir.path(), &["figure", "3b"]));
    assert!(classes(&v).iter().any(|c| c == "TO_P2"));
    assert!(!classes(&v).iter().any(|c| c == "TO_P1"));
}

#[test]
fn figure_1b_peaks_follow_the_extinction_rate() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run_in(dir.path(), &["figure", "1b"]));
    let alpha = v["alpha"].as_f64().unwrap();
    let peaks = v["peaks"].as_array().unwrap();
    let u0 = peaks[0]["u_max"].as_f64().unwrap();
    for p in peaks {
        let t = p["t"].as_f64().unwrap();
        let u = p["u_max"].as_f64().unwrap();
        assert!((u / (u0 * (1.0 - t).powf(alpha)) - 1.0).abs() < 1e-12);
    }
    let csv = fs::read_to_string(dir.path().join("fig1b_snapshots.csv")).unwrap();
    let mut grid_peak = std::collections::BTreeMap::<String, f64>::new();
    for l in csv.lines().skip(1) {
        let cols: Vec<&str> = l.split(',').collect();
        let u: f64 = cols[3].parse().unwrap();
        let e = grid_peak.entry(cols[0].to_string()).or_insert(0.0);
        *e = e.max(u);
    }
    assert_eq!(grid_peak.len(), 4);
    for p in peaks {
        let u = p["u_max"].as_f64().unwrap();
        let on_grid = grid_peak
            .iter()
            .find(|(t, _)| (t.parse::<f64>().unwrap() - p["t"].as_f64().unwrap()).abs() < 1e-12)
            .unwrap()
            .1;
        assert!((on_grid / u - 1.0).abs() < 1e-3);
    }
}

#[test]
fn invalid_figure_id() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir.path(), &["figure", "4c"])), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        json(&run_in(d.path(), &["shoot", "--system", "forward", "--fast"]));
        json(&run_in(d.path(), &["figure", "2b"]));
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "run.conf")
        .collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n}");
    }
}

#[test]
fn config_file_is_layered_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("in.conf");
    fs::write(&conf, "# forward case\nm = 0.25\np = 1.74\nsystem = forward\n").unwrap();
    let c = conf.to_str().unwrap();
    assert_eq!(code(&run_in(dir.path(), &["shoot", "--config", c])), 3);
    let v = json(&run_in(dir.path(), &["shoot", "--config", c, "--p", "1.8"]));
    assert_eq!(v["class"], "TO_P1");
    let saved = fs::read_to_string(dir.path().join("run.conf")).unwrap();
    assert!(saved.contains("p = 1.8\n") && saved.contains("system = forward\n"));

    let again = tempfile::tempdir().unwrap();
    let v2 = json(&run(&["shoot", "--config", dir.path().join("run.conf").to_str().unwrap(), "--out", again.path().to_str().unwrap()]));
    assert_eq!(v, v2);

    fs::write(&conf, "colour = blue\n").unwrap();
    assert_eq!(code(&run_in(dir.path(), &["exponents", "--config", c])), 2);
}

#[test]
fn explicit_families() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run_in(dir.path(), &["explicit", "cylinder", "--p", "1.75", "--samples", "5"]));
    assert_eq!(v["rows"], 5);
    let csv = fs::read_to_string(dir.path().join("explicit_cylinder.csv")).unwrap();
    assert!(csv.starts_with("Y,Z\n"));
    json(&run_in(dir.path(), &["explicit", "sobolev", "--p", "1.75", "--c", "2"]));
    assert_eq!(code(&run_in(dir.path(), &["explicit", "bogus"])), 2);
    assert_eq!(code(&run_in(dir.path(), &["explicit", "sobolev", "--p", "1.8"])), 3);
}

#[test]
fn sweep_records_transitions() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run_in(dir.path(), &["sweep", "--system", "forward", "--lo", "1", "--hi", "1000", "--samples", "7"]));
    let t = v["transitions"].as_array().unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t[0]["from"], "TO_Q3");
    assert_eq!(t[0]["to"], "TO_P2");
    assert!(t[0]["lo"].as_f64().unwrap() < 31.34 && t[0]["hi"].as_f64().unwrap() > 31.34);
    assert_eq!(read_json(dir.path().join("sweep_forward.json")), v);
}

#[test]
fn verify_fast_passes() {
    let out = run(&["verify"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().any(|l| l.starts_with("PASS eigenvalues")));
    assert!(!text.contains("FAIL"));
}

#[test]
fn thread_cap_gives_identical_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let one = Command::new(env!("CARGO_BIN_EXE_ssprofile"))
        .args(["figure", "3a", "--out", a.path().to_str().unwrap()])
        .env("SSPROFILE_THREADS", "1")
        .output()
        .unwrap();
    let many = run_in(b.path(), &["figure", "3a"]);
    assert_eq!(json(&one), json(&many));
    assert_eq!(
        fs::read(a.path().join("fig3a_orbits.csv")).unwrap(),
        fs::read(b.path().join("fig3a_orbits.csv")).unwrap()
    );
}
