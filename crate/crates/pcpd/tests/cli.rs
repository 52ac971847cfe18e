use std::path::Path;
use std::process::{Command, Output};

use pcpd::format;
use pcpd::report::read_summary;

fn pcpd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcpd")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = pcpd(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path) {
    ok(&["synth", "--dims", "30,30,30", "--rank", "6", "--snr", "-5", "--seed", "4", "--out", dir.to_str().unwrap()]);
}

#[test]
fn synth_writes_tensors_and_factors() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let y = format::read_tensor(&dir.path().join("observed.tnsr")).unwrap();
    assert_eq!(y.dims(), &[30, 30, 30]);
    assert_eq!(std::fs::metadata(dir.path().join("clean.tnsr")).unwrap().len(), 216_040);
    for n in 0..3 {
        let f = std::fs::File::open(dir.path().join(format!("factor_{n}.csv"))).unwrap();
        let m = format::read_matrix_csv(f).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (30, 6));
    }
}

#[test]
fn fit_recovers_rank_and_fixed_beta_underestimates() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let input = dir.path().join("observed.tnsr");
    let input = input.to_str().unwrap();

    let out = dir.path().join("adaptive");
    let line = ok(&["fit", input, "--rank-bound-factor", "2", "--out", out.to_str().unwrap()]);
    assert!(line.starts_with("gh: rank 6 (bound 60)"), "{line}");
    let s = read_summary(&out.join("report.toml")).unwrap();
    assert_eq!((s.estimated_rank, s.rank_bound), (6, 60));
    assert_eq!(s.z_powers.len(), 6);
    assert!(out.join("z_powers.csv").exists() && !out.join("elbo.csv").exists());

    let out = dir.path().join("fixed");
    ok(&["fit", input, "--rank-bound-factor", "2", "--fixed-beta", "0.01", "--out", out.to_str().unwrap()]);
    assert!(read_summary(&out.join("report.toml")).unwrap().estimated_rank < 6);
}

#[test]
fn fit_options_reach_the_engine() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let input = dir.path().join("observed.tnsr");
    let out = dir.path().join("fit");
    ok(&[
        "fit",
        input.to_str().unwrap(),
        "--algo",
        "gg-ho",
        "--rank-bound",
        "12",
        "--max-iters",
        "7",
        "--no-prune",
        "--elbo",
        "--out",
        out.to_str().unwrap(),
    ]);
    let s = read_summary(&out.join("report.toml")).unwrap();
    assert_eq!(s.algo, pcpd::Algorithm::GgHo);
    assert_eq!((s.rank_bound, s.estimated_rank, s.iterations_run), (12, 12, 7));
    assert_eq!(s.elbo_trace.len(), 7);
    let m = format::read_matrix_csv(std::fs::File::open(out.join("factor_2.csv")).unwrap()).unwrap();
    assert_eq!((m.nrows(), m.ncols()), (30, 12));
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.tnsr");
    let out = pcpd(&["fit", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.tnsr"));

    std::fs::write(dir.path().join("junk.tnsr"), b"NOPE0000000000000000").unwrap();
    let out = pcpd(&["fit", dir.path().join("junk.tnsr").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not a tensor file"));
    assert!(!pcpd(&["fit", "x", "--algo", "nope", "--out", "y"]).status.success());
}

#[test]
fn bench_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    std::fs::write(
        &cfg,
        r#"
base_seed = 5
trials = 2
algorithms = ["gh", "gg"]
rank_bound_factors = [1.5]

[fit]
max_iters = 100

[[cells]]
dims = [8, 7, 6]
rank = 2
snr_db = 10.0
"#,
    )
    .unwrap();
    let run = |name: &str, par: &str| {
        let out = dir.path().join(name);
        ok(&["bench", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-timing", "--parallelism", par]);
        (std::fs::read(out.join("raw.csv")).unwrap(), std::fs::read(out.join("summary.csv")).unwrap())
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "3"));
    let raw = String::from_utf8(a.0).unwrap();
    assert_eq!(raw.lines().count(), 1 + 2 * 2);
    assert!(raw.lines().skip(1).all(|l| l.split(',').nth(9) == Some("")));
}
