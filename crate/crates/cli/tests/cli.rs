use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

use perispec::evalseries::{eval_k, SeriesBudget};
use perispec::forward::forward_map;
use perispec::inverse::v_from_s;
use perispec::io::read_spectral;
use perispec::Tolerances;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_perispec"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn entry(doc: &Value, key: &str, a: &str, av: u64, b: &str, bv: u64) -> (f64, f64) {
    let e = doc[key]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e[a] == av && e[b] == bv)
        .unwrap_or_else(|| panic!("no entry {a}={av} {b}={bv}"));
    (e["re"].as_f64().unwrap(), e["im"].as_f64().unwrap())
}

fn desk_m1() -> Value {
    json!({"m": 1, "form": "halfline", "N": 12, "coeffs": [{"gamma": 0, "n": 1, "re": 0.5, "im": 0.0}]})
}

fn desk_m2() -> Value {
    json!({"m": 2, "form": "halfline", "N": 8, "coeffs": [
        {"gamma": 0, "n": 1, "re": 0.1, "im": 0.0},
        {"gamma": 1, "n": 1, "re": 0.0, "im": 0.05}
    ]})
}

fn single(s11: (f64, f64)) -> Value {
    json!({"m": 1, "N": 1, "S": [{"n": 1, "j": 1, "re": s11.0, "im": s11.1}]})
}

#[test]
fn forward_gives_the_closed_form_leading_entry() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "q.json", &desk_m1());
    let out = dir.path().join("s.json");
    let r = run(&["forward", "--in", s(&input), "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let doc = read_json(&out);
    let (re, im) = entry(&doc, "S", "n", 1, "j", 1);
    assert!(re.abs() < 1e-15 && (im - 0.5).abs() < 1e-15);
    assert_eq!(doc["config"]["command"], "forward");
}

#[test]
fn zero_potential_gives_zero_data() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "q.json",
        &json!({"m": 2, "form": "halfline", "N": 4, "coeffs": []}),
    );
    let r = run(&["forward", "--in", s(&input)]);
    assert_eq!(code(&r), 0);
    let doc: Value = serde_json::from_slice(&r.stdout).unwrap();
    for e in doc["S"].as_array().unwrap() {
        assert_eq!(e["re"].as_f64().unwrap(), 0.0);
        assert_eq!(e["im"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn malformed_input_exits_with_2() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{\"m\": 1, \"N\": ").unwrap();
    assert_eq!(code(&run(&["inverse", "--in", s(&p)])), 2);
    let wrong_branch = write(
        &dir,
        "b.json",
        &json!({"m": 1, "N": 1, "S": [{"n": 1, "j": 2, "re": 0.0, "im": 0.0}]}),
    );
    assert_eq!(code(&run(&["check", "--in", s(&wrong_branch)])), 2);
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&run(&["forward", "--in", s(&missing)])), 2);
}

#[test]
fn inverse_recovers_the_potential() {
    for (name, q) in [("m1", desk_m1()), ("m2", desk_m2())] {
        let dir = TempDir::new().unwrap();
        let input = write(&dir, "q.json", &q);
        let sp = dir.path().join("s.json");
        let back = dir.path().join("back.json");
        assert_eq!(
            code(&run(&["forward", "--in", s(&input), "--out", s(&sp)])),
            0
        );
        let r = run(&[
            "inverse",
            "--in",
            s(&sp),
            "--out",
            s(&back),
            "--via",
            "both",
        ]);
        assert_eq!(
            code(&r),
            0,
            "{name}: {}",
            String::from_utf8_lossy(&r.stderr)
        );
        let doc = read_json(&back);
        assert!(doc["deviation"].as_f64().unwrap() <= 1e-8, "{name}");
        assert_eq!(doc["gate"]["verdict"], "ACCEPT");
        for c in q["coeffs"].as_array().unwrap() {
            let (g, n) = (c["gamma"].as_u64().unwrap(), c["n"].as_u64().unwrap());
            let (re, im) = entry(&doc, "coeffs", "gamma", g, "n", n);
            let err = (re - c["re"].as_f64().unwrap()).hypot(im - c["im"].as_f64().unwrap());
            assert!(err <= 1e-9, "{name} gamma={g} n={n}: {err:e}");
        }
    }
}

#[test]
fn inverse_refuses_rejected_data_unless_forced() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "s.json", &single((0.0, 4.0)));
    assert_eq!(code(&run(&["inverse", "--in", s(&input)])), 1);
    let r = run(&["inverse", "--in", s(&input), "--force"]);
    assert_eq!(code(&r), 0);
    let doc: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(doc["gate"]["verdict"], "REJECT");
    assert_eq!(doc["gate"]["forced"], true);
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    let dir = TempDir::new().unwrap();
    let zero = write(&dir, "z.json", &json!({"m": 1, "N": 3, "S": []}));
    let reject = write(&dir, "r.json", &single((0.0, 4.0)));
    let unit = write(&dir, "u.json", &single((1.0, 0.0)));
    assert_eq!(code(&run(&["check", "--in", s(&zero)])), 0);
    assert_eq!(code(&run(&["check", "--in", s(&reject)])), 1);
    let r = run(&["check", "--in", s(&unit)]);
    assert_eq!(code(&r), 0);
    let doc: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(doc["verdict"], "ACCEPT");
}

#[test]
fn det_scan_of_zero_data_is_identically_one() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "z.json", &json!({"m": 2, "N": 4, "S": []}));
    let csv = dir.path().join("scan.csv");
    let r = run(&[
        "det-scan",
        "--in",
        s(&input),
        "--out",
        s(&csv),
        "--grid",
        "0:3:8:6",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "re_z,im_z,re_D,im_D,abs_D,delta_N");
    let mut rows = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!((f[2], f[3], f[4]), (1.0, 0.0, 1.0));
        rows += 1;
    }
    assert_eq!(rows, 9 * 7);
    let report = read_json(&dir.path().join("scan.csv.json"));
    assert_eq!(report["total_winding"], 0);
    assert_eq!(report["config"]["grid"]["nx"], 8);
}

#[test]
fn eval_csv_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "q.json", &desk_m2());
    let sp = dir.path().join("s.json");
    assert_eq!(
        code(&run(&["forward", "--in", s(&input), "--out", s(&sp)])),
        0
    );
    let csv = dir.path().join("k.csv");
    let r = run(&[
        "eval",
        "--in",
        s(&sp),
        "--out",
        s(&csv),
        "--t",
        "0:1:3",
        "--u",
        "0:2:5",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));

    let data = read_spectral(&fs::read_to_string(&sp).unwrap()).unwrap();
    let v = v_from_s(&data, data.n_max(), &Tolerances::default()).unwrap();
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,u,re_K,im_K,error_bound");
    let mut rows = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[1] >= f[0]);
        let k = eval_k(f[0], f[1], &v, SeriesBudget::default())
            .unwrap()
            .value;
        assert_eq!((f[2], f[3]), (k.re, k.im), "t={} u={}", f[0], f[1]);
        rows += 1;
    }
    // u >= t only: 5 + 4 + 3 points
    assert_eq!(rows, 12);
    assert_eq!(read_json(&dir.path().join("k.csv.json"))["rows"], 12);
}

#[test]
fn eval_marchenko_route_agrees_with_series() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "q.json", &desk_m1());
    let sp = dir.path().join("s.json");
    assert_eq!(
        code(&run(&["forward", "--in", s(&input), "--out", s(&sp)])),
        0
    );
    let r = run(&[
        "eval",
        "--in",
        s(&sp),
        "--via",
        "marchenko",
        "--t",
        "0.5:0.5:1",
        "--u",
        "0.5:3:6",
    ]);
    assert_eq!(code(&r), 0);
    for line in String::from_utf8(r.stdout).unwrap().lines().skip(1) {
        let dev: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(dev <= 1e-8, "{line}");
    }
}

#[test]
fn roundtrip_reports_small_gaps() {
    for q in [desk_m1(), desk_m2()] {
        let dir = TempDir::new().unwrap();
        let input = write(&dir, "q.json", &q);
        let r = run(&["roundtrip", "--in", s(&input)]);
        assert_eq!(code(&r), 0);
        let doc: Value = serde_json::from_slice(&r.stdout).unwrap();
        assert!(doc["potential_gap"].as_f64().unwrap() <= 1e-9);
        assert!(doc["spectral_gap"].as_f64().unwrap() <= 1e-9);
    }
}

#[test]
fn output_is_bitwise_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "q.json", &desk_m2());
    let sp = dir.path().join("s.json");
    assert_eq!(
        code(&run(&["forward", "--in", s(&input), "--out", s(&sp)])),
        0
    );
    let runs: Vec<Vec<u8>> = ["1", "4"]
        .iter()
        .map(|threads| {
            let out = bin()
                .env("PERISPEC_THREADS", threads)
                .args(["det-scan", "--in", s(&sp), "--grid", "0:4:16:8"])
                .output()
                .unwrap();
            assert_eq!(code(&out), 0);
            out.stdout
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let a = run(&["inverse", "--in", s(&sp)]).stdout;
    let b = run(&["inverse", "--in", s(&sp)]).stdout;
    assert_eq!(a, b);
}

#[test]
fn forward_output_rereads_exactly() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "q.json", &desk_m2());
    let sp = dir.path().join("s.json");
    assert_eq!(
        code(&run(&["forward", "--in", s(&input), "--out", s(&sp)])),
        0
    );
    let q = perispec::io::read_potential(&fs::read_to_string(&input).unwrap()).unwrap();
    let (_, direct) = forward_map(&q, 8, &Tolerances::default()).unwrap();
    let reread = read_spectral(&fs::read_to_string(&sp).unwrap()).unwrap();
    assert_eq!(direct.max_abs_diff(&reread), 0.0);
}

#[test]
fn amax_reports_the_constant() {
    let r = run(&["amax", "--m", "1"]);
    assert_eq!(code(&r), 0);
    let doc: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!((doc["value"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
}
