use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use dnlab::harness::catalog::{self, Entry};
use dnlab::harness::pipelines::Summary;
use dnlab::harness::report::Verdict;
use dnlab::harness::{emit_report, run_experiment, ExperimentConfig, Pipeline, RunManifest, RunOptions, MANIFEST, SUMMARY};
use dnlab::table::Table;
use dnlab::Error;
use proptest::prelude::*;
use tempfile::TempDir;

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text, "test").unwrap()
}

fn workers(n: usize) -> RunOptions {
    RunOptions { workers: Some(n) }
}

fn read_summary(dir: &Path) -> Summary {
    serde_json::from_str(&fs::read_to_string(dir.join(SUMMARY)).unwrap()).unwrap()
}

const SOLVE: &str = "pipeline = solve\nh = 0.1\ngamma = one_plus_square\ndata = manufactured\n";
const FRECHET: &str = "pipeline = frechet-check\nh = 0.08\ngamma = affine:1,1\nbackground = 0.5\n\
                       lambda_r = 0.5\ndata = random\nseed = 7\neps = 1e-1, 1e-2, 1e-3\n";
/// Three offsets are too few for the slope fit, so the run fails after meshing.
const SHORT_SWEEP: &str = "pipeline = singular-check\nh = 0.1\ntaus = 0.1, 0.05, 0.025\n";

#[test]
fn manifest_lists_every_file_with_its_digest() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let m = run_experiment(&config(SOLVE), &out, &workers(2)).unwrap();
    assert!(m.succeeded());
    assert_eq!(m.pipeline, "solve");
    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST)
        .collect();
    on_disk.sort();
    let listed: Vec<String> = m.files.iter().map(|f| f.name.clone()).collect();
    assert_eq!(on_disk, listed);
    assert!(listed.contains(&SUMMARY.to_string()) && listed.contains(&"config.txt".to_string()));
    for f in &m.files {
        let bytes = fs::read(out.join(&f.name)).unwrap();
        assert_eq!(bytes.len(), f.bytes);
        assert_eq!(hex::encode(<sha2::Sha256 as sha2::Digest>::digest(&bytes)), f.sha256);
    }
    assert_eq!(RunManifest::read(&out).unwrap(), m);
    let s = read_summary(&out);
    assert_eq!(s.config_hash, config(SOLVE).hash());
    assert!(s.metrics["residual_norm"] <= s.metrics["newton_tol"]);
}

#[test]
fn results_do_not_depend_on_the_worker_count() {
    let tmp = TempDir::new().unwrap();
    let c = config(FRECHET);
    let m1 = run_experiment(&c, &tmp.path().join("w1"), &workers(1)).unwrap();
    let m4 = run_experiment(&c, &tmp.path().join("w4"), &workers(4)).unwrap();
    assert!(m1.succeeded(), "{:?}", m1.failure);
    assert_eq!(m1.files, m4.files);
    for f in &m1.files {
        assert_eq!(fs::read(tmp.path().join("w1").join(&f.name)).unwrap(), fs::read(tmp.path().join("w4").join(&f.name)).unwrap());
    }
    let strip = |m: &RunManifest| RunManifest { timings: Vec::new(), workers: 0, ..m.clone() };
    assert_eq!(strip(&m1), strip(&m4));

    // a different seed draws different data
    let mut other = c.clone();
    other.seed = 8;
    let m8 = run_experiment(&other, &tmp.path().join("s8"), &workers(2)).unwrap();
    assert_ne!(m8.config_hash, m1.config_hash);
    let data = |m: &RunManifest| m.files.iter().find(|f| f.name == SUMMARY).unwrap().sha256.clone();
    assert_ne!(data(&m8), data(&m1));
}

#[test]
fn invalid_configurations_write_nothing() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("never");
    let mut c = config(SOLVE);
    c.h = -0.1;
    assert!(matches!(run_experiment(&c, &out, &workers(1)), Err(Error::Config(_))));
    assert!(!out.exists());
    assert!(run_experiment(&config(SOLVE), &out, &workers(0)).is_err());
    assert!(!out.exists());
}

#[test]
fn reruns_replace_their_own_files_and_refuse_foreign_ones() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    run_experiment(&config(FRECHET), &out, &workers(2)).unwrap();
    let m = run_experiment(&config(SOLVE), &out, &workers(2)).unwrap();
    let names: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert_eq!(names.len(), m.files.len() + 1, "stale files left behind: {names:?}");

    fs::write(out.join("notes.txt"), "mine").unwrap();
    let r = run_experiment(&config(SOLVE), &out, &workers(2));
    assert!(matches!(r, Err(Error::Config(ref e)) if e.contains("notes.txt")), "{r:?}");
    assert_eq!(fs::read_to_string(out.join("notes.txt")).unwrap(), "mine");
}

#[test]
fn failures_keep_partial_output_and_reach_the_report() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("short");
    let m = run_experiment(&config(SHORT_SWEEP), &out, &workers(2)).unwrap();
    let f = m.failure.as_ref().expect("three offsets cannot be fitted");
    assert!(!f.message.is_empty());
    assert!(out.join("config.txt").exists());
    assert_eq!(RunManifest::read(&out).unwrap(), m);

    let r = emit_report(&[out.clone()]).unwrap();
    assert!(r.items.iter().any(|i| matches!(i.verdict, Verdict::Fail)));
    assert!(r.text.contains("FAIL"));
}

#[test]
fn report_reads_passing_runs_and_rejects_damaged_ones() {
    let tmp = TempDir::new().unwrap();
    let ok = tmp.path().join("ok");
    run_experiment(&config(FRECHET), &ok, &workers(2)).unwrap();
    let r = emit_report(&[ok.clone()]).unwrap();
    assert_eq!(r.items.len(), 1);
    assert!(matches!(r.items[0].verdict, Verdict::Pass), "{}", r.text);
    let series = r.plot.column("series").unwrap();
    assert!(r.plot.rows.iter().any(|row| row[series] == "frechet_gap"));

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let r = emit_report(&[empty]).unwrap();
    assert!(r.items.is_empty() && r.text.contains("no artifacts"), "{}", r.text);

    let corrupt = tmp.path().join("corrupt");
    run_experiment(&config(SOLVE), &corrupt, &workers(1)).unwrap();
    fs::write(corrupt.join(SUMMARY), "{ not json").unwrap();
    assert!(matches!(emit_report(&[corrupt]), Err(Error::Artifacts(_))));

    let missing = tmp.path().join("missing");
    let m = run_experiment(&config(SOLVE), &missing, &workers(1)).unwrap();
    let victim = m.files.iter().find(|f| f.name != SUMMARY && f.name != "config.txt").unwrap().name.clone();
    fs::remove_file(missing.join(&victim)).unwrap();
    match emit_report(&[missing]) {
        Err(Error::Artifacts(errs)) => assert!(errs.iter().any(|e| e.contains(&victim)), "{errs:?}"),
        other => panic!("expected an artifacts error, got {other:?}"),
    }
}

#[test]
fn config_parse_errors_point_at_the_line() {
    let e = ExperimentConfig::parse("pipeline = solve\n\n# note\nwobble = 3\n", "x.conf").unwrap_err();
    assert!(matches!(e, Error::Parse { line: 4, .. }), "{e:?}");
    let e = ExperimentConfig::parse("h 0.1\n", "x.conf").unwrap_err();
    assert!(matches!(e, Error::Parse { line: 1, .. }));
    assert!(ExperimentConfig::parse("pipeline = nope\n", "x.conf").is_err());
    assert!(ExperimentConfig::parse("taus = 0.1, x\n", "x.conf").is_err());
    // later keys win, comments and blank lines are ignored
    let c = config("h = 0.2\nh = 0.05 # finer\n");
    assert_eq!(c.h, 0.05);
    assert_eq!(c.pipeline, Pipeline::Solve);
}

#[test]
fn every_example_config_validates() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let c = ExperimentConfig::parse(&fs::read_to_string(&p).unwrap(), &p.display().to_string()).unwrap();
        c.validate().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 5);
}

#[test]
fn catalog_rejects_unknown_and_malformed_entries() {
    assert!(catalog::quasilinear("constant:2").is_ok());
    assert!(catalog::quasilinear("constant").is_err());
    assert!(catalog::quasilinear("nonsense:1").is_err());
    assert!(catalog::semilinear("linear:1,2").is_err());
    assert!(Entry::parse(":1").is_err());
    assert!(Entry::parse("sine:1,x").is_err());
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dnlab")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let conf = tmp.path().join("solve.conf");
    fs::write(&conf, SOLVE).unwrap();
    let conf = conf.to_str().unwrap();
    let ok = tmp.path().join("ok");

    let o = cli(&["solve", "--config", conf, "--out", ok.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let m = RunManifest::read(&ok).unwrap();
    for f in &m.files {
        assert!(stdout.contains(&f.sha256), "{stdout}");
    }

    let bad = tmp.path().join("bad");
    let o = cli(&["solve", "--config", conf, "--out", bad.to_str().unwrap(), "--set", "h=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!bad.exists());
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());

    let short = tmp.path().join("short.conf");
    fs::write(&short, SHORT_SWEEP).unwrap();
    let fail = tmp.path().join("fail");
    let o = cli(&["singular-check", "--config", short.to_str().unwrap(), "--out", fail.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!RunManifest::read(&fail).unwrap().succeeded());

    let rep = tmp.path().join("rep");
    let o = cli(&["report", ok.to_str().unwrap(), "--out", rep.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(rep.join("report.txt").exists() && rep.join("plot_data.csv").exists());
    let o = cli(&["report", ok.to_str().unwrap(), fail.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

proptest! {
    #[test]
    fn table_csv_round_trip(
        header in prop::collection::vec("[a-z_]{1,8}", 1..4),
        cells in prop::collection::vec(prop::collection::vec(any::<String>(), 4), 0..6),
    ) {
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = Table::new(&header);
        for r in &cells {
            t.push(r[..header.len()].to_vec());
        }
        prop_assume!(!(t.rows.len() > 0 && header.len() == 1 && t.rows.iter().any(|r| r[0].is_empty())));
        let back = Table::from_csv(&t.to_csv(), "p").unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn config_text_round_trips(
        h in 1e-3f64..1.0,
        grading in 0.0f64..0.95,
        background in -2.0f64..2.0,
        taus in prop::collection::vec(1e-3f64..1.0, 1..6),
        seed in any::<u64>(),
        gamma in prop_oneof![Just("constant:1.5".to_string()), Just("sine:2,1".to_string()), Just("affine:1,0.5".to_string())],
        pipeline in prop::sample::select(Pipeline::ALL.to_vec()),
    ) {
        let c = ExperimentConfig { pipeline, h, grading, background, taus, seed, gamma, ..Default::default() };
        let back = ExperimentConfig::parse(&c.to_text(), "rt").unwrap();
        prop_assert_eq!(back.hash(), c.hash());
        prop_assert_eq!(back, c);
    }

    #[test]
    fn catalog_entries_round_trip(name in "[a-z][a-z_]{0,10}", params in prop::collection::vec(-1e6f64..1e6, 0..4)) {
        let text = if params.is_empty() {
            name.clone()
        } else {
            format!("{name}:{}", params.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","))
        };
        let e = Entry::parse(&text).unwrap();
        prop_assert_eq!(e.name, name);
        prop_assert_eq!(e.params, params);
    }
}
