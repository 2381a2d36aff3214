use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use frontkit::fusion::{post_process_single, FusionSite, VoteParams};
use frontkit::geodata::{load_front_mask, write_front_mask, FrontMask};
use frontkit::metrics::{mde, ReportFile, ScenePairResult};
use frontkit::stats::{kruskal_wallis, Sample};
use frontkit_cli::evaluate::report_json;
use frontkit_cli::synth::{analytic_front, generate, shift_boundary, SynthParams};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frontkit")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn synth(dir: &Path, n: usize, size: usize, extra: &[&str]) {
    let (n, size) = (n.to_string(), size.to_string());
    let mut args = vec!["synth", "--n", &n, "--size", &size, "--seed", "9"];
    let out = s(dir);
    args.extend(["--out", &out]);
    args.extend_from_slice(extra);
    ok(&args);
}

fn evaluate_args(dir: &Path, pred: &Path, out: &Path) -> Vec<String> {
    [
        "evaluate",
        "--pred",
        &s(pred),
        "--truth",
        &s(&dir.join("fronts")),
        "--bboxes",
        &s(&dir.join("bboxes")),
        "--manifest",
        &s(&dir.join("manifest.csv")),
        "--out",
        &s(out),
    ]
    .iter()
    .map(|x| x.to_string())
    .collect()
}

fn read_report(p: &Path) -> ReportFile {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p).into_iter().map(|(q, b)| (Path::new(p.file_name().unwrap()).join(q), b)));
        } else {
            out.push((PathBuf::from(p.file_name().unwrap()), fs::read(&p).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn synth_is_reproducible() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    synth(a.path(), 4, 96, &["--pred-shift", "1", "--annotator-offsets", "0,-2"]);
    synth(b.path(), 4, 96, &["--pred-shift", "1", "--annotator-offsets", "0,-2"]);
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(fa.len() >= 4 * 7);
    assert_eq!(fa, fb);
}

#[test]
fn empty_predictions_count_as_no_front() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), 5, 96, &[]);
    let pred = dir.path().join("blank");
    fs::create_dir(&pred).unwrap();
    for i in 0..5 {
        write_front_mask(pred.join(format!("synth_{i:03}.png")), &FrontMask::empty(96, 96)).unwrap();
    }
    let out = dir.path().join("r.json");
    let mut args = evaluate_args(dir.path(), &pred, &out);
    args.extend(["--mode", "front"].map(String::from));
    let stdout = ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(stdout.contains("MDE: / m"), "{stdout}");
    let report = read_report(&out);
    assert_eq!(report.no_front_count, 5);
    assert_eq!(report.mde_m, None);
    assert!(fs::read_to_string(&out).unwrap().contains("\"mde_m\": null"));
}

#[test]
fn missing_and_malformed_predictions_fail_with_the_scene_id() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), 3, 96, &[]);
    let pred = dir.path().join("pred");
    fs::create_dir(&pred).unwrap();
    fs::copy(dir.path().join("zones/synth_000.png"), pred.join("synth_000.png")).unwrap();
    fs::copy(dir.path().join("zones/synth_002.png"), pred.join("synth_002.png")).unwrap();
    let args = evaluate_args(dir.path(), &pred, &dir.path().join("r.json"));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = run(&args);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("synth_001"), "{err}");

    fs::write(pred.join("synth_001.png"), b"not a png").unwrap();
    let out = run(&args);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("synth_001"));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), 2, 96, &[]);
    let d = dir.path();
    let cfg = d.join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# evaluation\npred = {}\ntruth = \"{}\"\nbboxes = {}\nmanifest = {}\nout = {}\nmin-front-m = 750\njobs = 2\n",
            s(&d.join("zones")),
            s(&d.join("fronts")),
            s(&d.join("bboxes")),
            s(&d.join("manifest.csv")),
            s(&d.join("from_config.json")),
        ),
    )
    .unwrap();
    ok(&["evaluate", "--config", &s(&cfg)]);
    assert!(d.join("from_config.json").exists());
    assert!(d.join("from_config_season.csv").exists());

    ok(&["evaluate", "--config", &s(&cfg), "--out", &s(&d.join("from_flag.json"))]);
    assert!(d.join("from_flag.json").exists());
    assert_eq!(read_report(&d.join("from_flag.json")).mde_m, Some(0.0));

    fs::write(d.join("bad.cfg"), "pred = x\njbos = 2\n").unwrap();
    let out = run(&["evaluate", "--config", &s(&d.join("bad.cfg"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("jbos"));
}

fn loo_column(csv: &str, label: &str) -> Option<f64> {
    let line = csv.lines().find(|l| l.starts_with(&format!("{label},")))?;
    line.split(',').nth(1)?.parse().ok()
}

fn fuse(dir: &Path, predictions: Option<&Path>) -> String {
    let out = s(&dir.join("fusion"));
    let mut args = vec![
        "fuse".to_string(),
        "--annotators".into(),
        s(dir),
        "--catchments".into(),
        s(&dir.join("catchments")),
        "--seeds".into(),
        s(&dir.join("seeds.csv")),
        "--manifest".into(),
        s(&dir.join("manifest.csv")),
        "--out".into(),
        out,
    ];
    if let Some(p) = predictions {
        args.extend(["--predictions".into(), s(p)]);
    }
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    fs::read_to_string(dir.join("fusion/leave_one_out.csv")).unwrap()
}

#[test]
fn fuse_identical_annotators_agree_perfectly() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), 2, 96, &["--annotator-offsets", "0,0,0"]);
    let csv = fuse(dir.path(), None);
    assert!(csv.starts_with("annotator,All,winter"), "{csv}");
    for label in ["#1", "#2", "#3", "Mean"] {
        assert_eq!(loo_column(&csv, label), Some(0.0), "{label}");
    }
    assert_eq!(fs::read_to_string(dir.path().join("fusion/warnings.csv")).unwrap(), "kind,annotator,scene\n");
}

#[test]
fn fuse_ten_annotators_with_one_deviant() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, 2, 96, &["--annotator-offsets", "0,0,0,0,0,0,0,0,0,4"]);
    let csv = fuse(d, Some(&d.join("annotator_10")));
    for k in 1..=9 {
        assert_eq!(loo_column(&csv, &format!("#{k}")), Some(0.0), "#{k}");
    }

    // the other nine agree, so the deviant's reference is the full aggregate
    let params = SynthParams { seed: 9, size: 96, ..Default::default() };
    let (mut num, mut weight) = (0.0, 0usize);
    for scene in generate(&params, 2).unwrap() {
        let id = &scene.meta.id;
        let reference = load_front_mask(d.join(format!("fusion/aggregate/{id}.png")), 128).unwrap();
        let site = FusionSite { catchment: scene.catchment.clone(), seed: scene.seed, sentinel: Some(scene.sentinel) };
        let shifted = analytic_front(96, 0, &shift_boundary(&scene.boundary, 4));
        let own = post_process_single(&shifted, &site, &VoteParams::default(), 10.0).unwrap().front;
        for &a in reference.pixels() {
            num += own.pixels().iter().map(|&b| dist(a, b)).fold(f64::INFINITY, f64::min);
        }
        for &b in own.pixels() {
            num += reference.pixels().iter().map(|&a| dist(a, b)).fold(f64::INFINITY, f64::min);
        }
        weight += reference.len() + own.len();
    }
    let want = num * 10.0 / weight as f64;
    let got = loo_column(&csv, "#10").unwrap();
    assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
    let mean = loo_column(&csv, "Mean").unwrap();
    assert!((mean - want / 10.0).abs() <= 1e-9 * want);
    // predictions equal to the deviant are scored against the same aggregate
    let pred = loo_column(&csv, "predictions").unwrap();
    assert!((pred - want).abs() <= 1e-9 * want, "{pred} vs {want}");
}

fn dist(a: (usize, usize), b: (usize, usize)) -> f64 {
    ((a.0 as f64 - b.0 as f64).powi(2) + (a.1 as f64 - b.1 as f64).powi(2)).sqrt()
}

/// Report file whose MDE is exactly `v` (one scene, weight 1).
fn report_with_mde(path: &Path, v: f64) {
    let r = mde(vec![ScenePairResult {
        id: "s".into(),
        numerator_m: v,
        weight: 1,
        predicted_empty: false,
        truth_px: 1,
        pred_px: 1,
    }]);
    fs::write(path, report_json(&r).unwrap()).unwrap();
}

fn group(dir: &Path, label: &str, values: &[f64]) -> String {
    let paths: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let p = dir.join(format!("{label}_{i}.json"));
            report_with_mde(&p, v);
            s(&p)
        })
        .collect();
    format!("{label}={}", paths.join(","))
}

#[test]
fn compare_separated_runs_reach_the_exact_floor() {
    let dir = TempDir::new().unwrap();
    let a = group(dir.path(), "a", &[200.0, 210.0, 220.0, 230.0, 240.0]);
    let b = group(dir.path(), "b", &[300.0, 310.0, 320.0, 330.0, 340.0]);
    let out = dir.path().join("cmp.csv");
    let stdout = ok(&["compare", "--test", "mwu", "--reports", &a, &b, "--out", &s(&out)]);
    assert_eq!(stdout.trim(), "a vs b: U = 0.0, p = 3.97e-3");
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.contains(",Exact,"), "{csv}");

    let c = group(dir.path(), "c", &[200.0, 210.0, 220.0, 230.0, 240.0]);
    let stdout = ok(&["compare", "--test", "mwu", "--reports", &a, &b, &c]);
    assert!(stdout.contains("a vs b: U = 0.0, p = 3.97e-3 < 2.50e-2"), "{stdout}");
    let line = stdout.lines().find(|l| l.starts_with("a vs c")).unwrap();
    assert!(line.starts_with("a vs c: U = 12.5, p = "), "{line}");
    let p: f64 = line.split("p = ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!(p >= 0.5);
}

#[test]
fn compare_kruskal_wallis_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let xs = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]];
    let groups: Vec<String> = xs.iter().enumerate().map(|(i, v)| group(dir.path(), &format!("g{i}"), v)).collect();
    let mut args = vec!["compare", "--test", "kw", "--reports"];
    args.extend(groups.iter().map(String::as_str));
    let stdout = ok(&args);
    let want = kruskal_wallis(&xs.map(|v| Sample::new(v.to_vec()).unwrap())).unwrap();
    assert_eq!(stdout.trim(), format!("* vs *: {want}"));
    assert!(stdout.contains("Chi-Squared(2) = 7.20"));
}

#[test]
fn compare_rejects_other_schema_versions() {
    let dir = TempDir::new().unwrap();
    let a = group(dir.path(), "a", &[1.0, 2.0]);
    let b = group(dir.path(), "b", &[3.0, 4.0]);
    let p = dir.path().join("b_0.json");
    let text = fs::read_to_string(&p).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 99");
    fs::write(&p, text).unwrap();
    let out = run(&["compare", "--test", "mwu", "--reports", &a, &b]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatible report"));
}

#[test]
fn report_tables_by_group() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, 4, 96, &["--pred-shift", "2"]);
    let json = d.join("r.json");
    let args = evaluate_args(d, &d.join("pred"), &json);
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let manifest = s(&d.join("manifest.csv"));

    let all = ok(&["report", "--in", &s(&json), "--manifest", &manifest]);
    assert_eq!(all.lines().count(), 2, "{all}");
    assert!(all.starts_with("all,mde_m,no_front_count,scenes\nAll,20,0,4"));
    let sensor = ok(&["report", "--in", &s(&json), "--manifest", &manifest, "--group-by", "sensor"]);
    assert_eq!(sensor.lines().count(), 3, "{sensor}");
    let md = ok(&["report", "--in", &s(&json), "--manifest", &manifest, "--group-by", "glacier", "--format", "md"]);
    assert!(md.contains("| Columbia"), "{md}");

    // blank predictions for the S1 scenes leave that subset without an MDE
    let pred = d.join("pred");
    for id in ["synth_000", "synth_001"] {
        write_front_mask(pred.join(format!("{id}.png")), &FrontMask::empty(96, 96)).unwrap();
    }
    let mut args = evaluate_args(d, &pred, &json);
    args.extend(["--mode", "front"].map(String::from));
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let sensor = ok(&["report", "--in", &s(&json), "--manifest", &manifest, "--group-by", "sensor"]);
    assert!(sensor.lines().any(|l| l.starts_with("S1,/,2,2")), "{sensor}");
}
