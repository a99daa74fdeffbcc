use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stokesreg"))
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let p = std::env::temp_dir().join(format!("stokesreg-cli-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&p);
        fs::create_dir_all(&p).unwrap();
        TempDir(p)
    }

    fn join(&self, s: &str) -> PathBuf {
        self.0.join(s)
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Header and first data row of a one-row CSV as (name, value) pairs.
fn read_row(path: &Path) -> Vec<(String, String)> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    let row = r.records().next().unwrap().unwrap();
    header.iter().zip(row.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect()
}

fn field(row: &[(String, String)], name: &str) -> String {
    row.iter().find(|(h, _)| h == name).unwrap().1.clone()
}

fn num(row: &[(String, String)], name: &str) -> f64 {
    field(row, name).parse().unwrap()
}

fn synth(dir: &TempDir, sub: &str, problem: &str, n: &str, shift: &str) -> PathBuf {
    let out = dir.join(sub);
    let o = run(&["synth", "--problem", problem, "--n", n, "--shift", shift, "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn synth_zero_shift_and_determinism() {
    let d = TempDir::new("synth");
    for problem in ["blobs", "rectangles", "vent"] {
        let s = synth(&d, &format!("{problem}0"), problem, "32", "0");
        assert_eq!(fs::read(s.join("m_r.raw")).unwrap(), fs::read(s.join("m_t.raw")).unwrap());
        assert_eq!(fs::read(s.join("m_r.pgm")).unwrap(), fs::read(s.join("m_t.pgm")).unwrap());
        let a = synth(&d, &format!("{problem}a"), problem, "32", "0.3");
        let b = synth(&d, &format!("{problem}b"), problem, "32", "0.3");
        for f in ["m_r.raw", "m_t.raw", "m_r.pgm", "m_t.pgm", "l_r.raw", "l_t.raw"] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{problem}/{f}");
        }
        assert_ne!(fs::read(a.join("m_r.raw")).unwrap(), fs::read(a.join("m_t.raw")).unwrap());
    }
}

#[test]
fn synth_default_size() {
    let d = TempDir::new("synthdefault");
    let out = d.join("s");
    assert_eq!(code(&run(&["synth", "--problem", "blobs", "--out", p(&out)])), 0);
    let pgm = fs::read(out.join("m_r.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n256 256\n255\n"));
}

#[test]
fn usage_and_input_errors() {
    let d = TempDir::new("errors");
    let o = run(&["register", "--mt", "x.pgm", "--out", p(&d.join("o"))]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--mr") && err.contains("Usage"), "{err}");
    assert_eq!(code(&run(&["register", "--mr", "a", "--mt", "b", "--out", p(&d.join("o")), "--model", "nope"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    let missing = d.join("missing.pgm");
    assert_eq!(code(&run(&["register", "--mr", p(&missing), "--mt", p(&missing), "--out", p(&d.join("o"))])), 2);
    let s = synth(&d, "s", "blobs", "32", "0.3");
    let bad = d.join("bad.pgm");
    fs::write(&bad, b"P5\n4 4\n255\n\x00").unwrap();
    assert_eq!(code(&run(&["register", "--mr", p(&bad), "--mt", p(&s.join("m_t.raw")), "--out", p(&d.join("o"))])), 2);
    let small = synth(&d, "small", "blobs", "16", "0.3");
    let o = run(&["register", "--mr", p(&small.join("m_r.raw")), "--mt", p(&s.join("m_t.raw")), "--out", p(&d.join("o"))]);
    assert_eq!(code(&o), 2);
    let o = run(&["register", "--mr", p(&s.join("m_r.raw")), "--mt", p(&s.join("m_t.raw")), "--incompressible", "--out", p(&d.join("o"))]);
    assert_eq!(code(&o), 2, "incompressible without gamma 1");
    let o = run(&["register", "--mr", p(&s.join("m_r.raw")), "--mt", p(&s.join("m_t.raw")), "--beta-v=-1", "--out", p(&d.join("o"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn identical_inputs_register_trivially() {
    let d = TempDir::new("identical");
    let s = synth(&d, "s", "blobs", "32", "0.3");
    let out = d.join("r");
    let o = run(&["register", "--mr", p(&s.join("m_r.raw")), "--mt", p(&s.join("m_r.raw")), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let row = read_row(&out.join("summary.csv"));
    assert_eq!(field(&row, "status"), "converged");
    assert_eq!(num(&row, "residual_rel"), 0.0);
    for c in ["det_min", "det_mean", "det_max"] {
        assert_eq!(num(&row, c), 1.0, "{c}");
    }
    for f in ["v.raw", "u1.raw", "m1.raw", "detF.ppm", "ledger.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn incompressible_blob_register_and_analyze() {
    let d = TempDir::new("blob");
    let s = synth(&d, "s", "blobs", "32", "0.4");
    let out = d.join("r");
    let model = ["--gamma", "1", "--incompressible", "--beta-v", "0.1"];
    let (mr, mt) = (s.join("m_r.pgm"), s.join("m_t.pgm"));
    let mut args = vec!["register", "--mr", p(&mr), "--mt", p(&mt), "--out", p(&out)];
    args.extend(model);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_row(&out.join("summary.csv"));
    assert!(num(&summary, "det_min") >= 1.0 - 5e-3 && num(&summary, "det_max") <= 1.0 + 5e-3);
    assert!(num(&summary, "grad_rel") <= 1e-3);

    // every field-derived summary value is recomputed from the stored fields
    let a = d.join("a");
    let nt = field(&summary, "nt");
    let nt_init = field(&summary, "nt_init");
    let (v, mr, mt) = (out.join("v.raw"), out.join("m_r.raw"), out.join("m_t.raw"));
    let mut args = vec![
        "analyze",
        "--v",
        p(&v),
        "--nt",
        &nt,
        "--nt-init",
        &nt_init,
        "--mr",
        p(&mr),
        "--mt",
        p(&mt),
        "--out",
        p(&a),
    ];
    args.extend(model);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let analysis = read_row(&a.join("analysis.csv"));
    for c in ["grad_rel", "residual_rel", "det_min", "det_mean", "det_max", "dist_mean", "dist_max"] {
        let (x, y) = (num(&summary, c), num(&analysis, c));
        assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0), "{c}: {x} vs {y}");
    }
    let u_run = fs::read(out.join("u1.raw")).unwrap();
    assert_eq!(u_run, fs::read(a.join("u1.raw")).unwrap());

    let mut r = csv::Reader::from_path(out.join("ledger.csv")).unwrap();
    let objective: Vec<f64> = r.records().map(|x| x.unwrap()[1].parse().unwrap()).collect();
    assert!(objective.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn analyze_identity_and_labels() {
    let d = TempDir::new("analyze");
    let s = synth(&d, "s", "rectangles", "32", "0.3");
    let zero = d.join("zero");
    let o = run(&["register", "--mr", p(&s.join("m_r.raw")), "--mt", p(&s.join("m_r.raw")), "--out", p(&zero)]);
    assert_eq!(code(&o), 0);
    let a = d.join("a");
    let o = run(&[
        "analyze",
        "--v",
        p(&zero.join("v.raw")),
        "--lr",
        p(&s.join("l_r.raw")),
        "--lt",
        p(&s.join("l_r.raw")),
        "--out",
        p(&a),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let row = read_row(&a.join("analysis.csv"));
    assert_eq!(num(&row, "det_min"), 1.0);
    assert_eq!(num(&row, "det_max"), 1.0);
    assert_eq!(num(&row, "dist_max"), 0.0);
    assert_eq!(num(&row, "dsc"), 1.0);
    assert_eq!(num(&row, "jsc"), 1.0);
    assert_eq!(num(&row, "fpe"), 0.0);
    assert_eq!(field(&row, "grad_rel"), "");
}

#[test]
fn config_file_values_and_overrides() {
    let d = TempDir::new("config");
    let cfg = d.join("run.cfg");
    fs::write(&cfg, "# synthetic problem\nproblem = rectangles\nn = 16\nshift = 0\n").unwrap();
    let out = d.join("s");
    let o = run(&["synth", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read(out.join("m_r.pgm")).unwrap().starts_with(b"P5\n16 16\n"));
    assert_eq!(fs::read(out.join("m_r.raw")).unwrap(), fs::read(out.join("m_t.raw")).unwrap());
    let o = run(&["synth", "--config", p(&cfg), "--n", "8", "--out", p(&out)]);
    assert_eq!(code(&o), 0);
    assert!(fs::read(out.join("m_r.pgm")).unwrap().starts_with(b"P5\n8 8\n"));
    fs::write(&cfg, "n 16\n").unwrap();
    assert_eq!(code(&run(&["synth", "--config", p(&cfg), "--problem", "blobs", "--out", p(&out)])), 2);
}

#[test]
fn solver_failure_exit_code() {
    let d = TempDir::new("fail");
    let s = synth(&d, "s", "blobs", "32", "0.4");
    let out = d.join("r");
    let o = run(&[
        "register",
        "--mr",
        p(&s.join("m_r.raw")),
        "--mt",
        p(&s.join("m_t.raw")),
        "--max-outer",
        "1",
        "--grad-tol",
        "1e-9",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 3);
    assert_eq!(field(&read_row(&out.join("summary.csv")), "status"), "max_outer");
}

#[test]
fn continuation_trivial_and_infeasible() {
    let d = TempDir::new("continue");
    let s = synth(&d, "s", "blobs", "32", "0.4");
    let out = d.join("trivial");
    let o = run(&["continue", "--mr", p(&s.join("m_r.raw")), "--mt", p(&s.join("m_r.raw")), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let row = read_row(&out.join("summary.csv"));
    assert_eq!(num(&row, "beta_v"), 1.0);
    assert_eq!(field(&row, "status"), "converged");
    let mut r = csv::Reader::from_path(out.join("trials.csv")).unwrap();
    assert_eq!(r.records().count(), 1);

    let out = d.join("infeasible");
    let o = run(&[
        "continue",
        "--mr",
        p(&s.join("m_r.raw")),
        "--mt",
        p(&s.join("m_t.raw")),
        "--det-bound",
        "0.999999",
        "--beta-v-init",
        "1e-3",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 3);
    let row = read_row(&out.join("summary.csv"));
    assert_eq!(field(&row, "status"), "infeasible_at_init");
    assert!(!out.join("v.raw").exists());
}
