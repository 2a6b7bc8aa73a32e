//! End-to-end tests of the `cvstego` binary: exit codes, JSON summaries
//! against the shipped schema, and the full hide/extract pipeline over the
//! bundled clips.

use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;
use tempfile::TempDir;

fn cvstego() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cvstego"));
    // Tests control configuration explicitly; a leaked environment must
    // not change their outcome.
    cmd.env_remove("CVSTEGO_KEY_FILE");
    cmd.env_remove("CVSTEGO_CONFIG");
    cmd
}

fn run(args: &[&str]) -> Output {
    cvstego().args(args).output().expect("binary runs")
}

/// Runs expecting success and returns stdout.
fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout is UTF-8")
}

/// Runs expecting failure; returns (exit code, stderr).
fn run_fail(args: &[&str]) -> (i32, String) {
    let out = run(args);
    assert!(
        !out.status.success(),
        "command {args:?} unexpectedly succeeded: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    (
        out.status.code().expect("no signal"),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn schema_validator() -> &'static jsonschema::Validator {
    static VALIDATOR: OnceLock<jsonschema::Validator> = OnceLock::new();
    VALIDATOR.get_or_init(|| {
        let path = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("schema")
            .join("run-summary.schema.json");
        let schema: Value =
            serde_json::from_str(&fs::read_to_string(path).expect("schema file exists"))
                .expect("schema file is JSON");
        jsonschema::validator_for(&schema).expect("schema compiles")
    })
}

/// Parses a summary from stdout and checks it against the shipped schema,
/// so every JSON-mode test in this file doubles as a schema test.
fn parse_summary(stdout: &str) -> Value {
    let summary: Value = serde_json::from_str(stdout.trim()).expect("stdout is one JSON object");
    let errors: Vec<String> = schema_validator()
        .iter_errors(&summary)
        .map(|e| format!("{e} at {}", e.instance_path))
        .collect();
    assert!(
        errors.is_empty(),
        "summary violates the schema: {errors:?}\n{summary}"
    );
    summary
}

/// Runs with `--json` prepended, expecting success, and returns the
/// schema-checked summary.
fn run_json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    parse_summary(&run_ok(&full))
}

/// Artifacts shared by the tests, built once: the bundled clips on disk, a
/// key, a secret, an index over the clips, and a sealed payload.
struct Fixture {
    #[allow(dead_code)]
    dir: TempDir,
    clips: PathBuf,
    key: PathBuf,
    wrong_key: PathBuf,
    secret: PathBuf,
    secret_bytes: &'static [u8],
    index: PathBuf,
    payload: PathBuf,
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let dir = TempDir::new().expect("temp dir");
        let root = dir.path();
        let clips = root.join("clips");
        run_ok(&["sample", "-o", clips.to_str().unwrap()]);

        let key = root.join("key.bin");
        fs::write(&key, [7u8; 32]).unwrap();
        let wrong_key = root.join("wrong-key.bin");
        fs::write(&wrong_key, [8u8; 32]).unwrap();

        let secret_bytes: &'static [u8] = b"what you watch holds data";
        let secret = root.join("secret.bin");
        fs::write(&secret, secret_bytes).unwrap();

        let index = root.join("index.bin");
        run_ok(&[
            "index",
            "build",
            "--input",
            clips.to_str().unwrap(),
            "-m",
            "13",
            "-n",
            "7",
            "-L",
            "8",
            "-o",
            index.to_str().unwrap(),
        ]);

        let payload = root.join("payload.enc");
        run_ok(&[
            "hide",
            "--index",
            index.to_str().unwrap(),
            "--secret",
            secret.to_str().unwrap(),
            "--key",
            key.to_str().unwrap(),
            "-o",
            payload.to_str().unwrap(),
        ]);

        Fixture {
            dir,
            clips,
            key,
            wrong_key,
            secret,
            secret_bytes,
            index,
            payload,
        }
    })
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_prints_usage_and_exits_zero() {
    let text = run_ok(&["--help"]);
    assert!(text.contains("Usage"));
    for name in ["index", "hide", "extract", "attack", "evaluate", "demo", "sample"] {
        assert!(text.contains(name), "help does not mention {name}");
    }
}

#[test]
fn bad_invocations_exit_one() {
    let (code, _) = run_fail(&["sample", "--frobnicate"]);
    assert_eq!(code, 1, "unknown flag");
    let (code, _) = run_fail(&["frobnicate"]);
    assert_eq!(code, 1, "unknown subcommand");
    let (code, _) = run_fail(&[]);
    assert_eq!(code, 1, "bare invocation");
    let (code, stderr) = run_fail(&["--threads", "0", "sample", "-o", "/tmp/unused"]);
    assert_eq!(code, 1, "zero threads");
    assert!(stderr.contains("--threads"));
}

#[test]
fn sample_clips_are_valid_y4m() {
    let f = fixture();
    for name in ["pan.y4m", "still.y4m", "texture.y4m"] {
        let bytes = fs::read(f.clips.join(name)).expect("clip exists");
        assert!(bytes.starts_with(b"YUV4MPEG2"), "{name} lacks the y4m magic");
    }
}

#[test]
fn hide_extract_round_trip_recovers_the_secret() {
    let f = fixture();
    let out = f.dir.path().join("roundtrip.bin");
    let summary = run_json(&[
        "extract",
        "--payload",
        path(&f.payload),
        "--key",
        path(&f.key),
        "--index",
        path(&f.index),
        "--videos",
        path(&f.clips),
        "-o",
        path(&out),
    ]);
    assert_eq!(summary["metrics"]["secret_bytes"], 25);
    assert_eq!(fs::read(&out).unwrap(), f.secret_bytes);
}

#[test]
fn wrong_key_is_refused_with_exit_two() {
    let f = fixture();
    let out = f.dir.path().join("wrong.bin");
    let (code, stderr) = run_fail(&[
        "--json",
        "extract",
        "--payload",
        path(&f.payload),
        "--key",
        path(&f.wrong_key),
        "--index",
        path(&f.index),
        "--videos",
        path(&f.clips),
        "-o",
        path(&out),
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("payload authentication failed"));
    assert!(!out.exists(), "no output written on failure");
}

#[test]
fn failure_summaries_also_fit_the_schema() {
    let f = fixture();
    let out = cvstego()
        .args([
            "--json",
            "extract",
            "--payload",
            path(&f.payload),
            "--key",
            path(&f.wrong_key),
            "--index",
            path(&f.index),
            "--videos",
            path(&f.clips),
            "-o",
            "/tmp/unused.bin",
        ])
        .output()
        .unwrap();
    let summary = parse_summary(&String::from_utf8_lossy(&out.stdout));
    assert_eq!(summary["ok"], false);
    assert_eq!(summary["error"], "payload authentication failed");
    assert_eq!(summary["command"], "extract");
}

#[test]
fn sealing_is_randomized_but_never_changes_the_plaintext() {
    let f = fixture();
    let other = f.dir.path().join("payload-second.enc");
    run_ok(&[
        "hide",
        "--index",
        path(&f.index),
        "--secret",
        path(&f.secret),
        "--key",
        path(&f.key),
        "-o",
        path(&other),
    ]);
    let first = fs::read(&f.payload).unwrap();
    let second = fs::read(&other).unwrap();
    assert_eq!(first.len(), second.len());
    assert_ne!(first, second, "fresh nonces must differ");

    let out = f.dir.path().join("from-second.bin");
    run_ok(&[
        "extract",
        "--payload",
        path(&other),
        "--key",
        path(&f.key),
        "--index",
        path(&f.index),
        "--videos",
        path(&f.clips),
        "-o",
        path(&out),
    ]);
    assert_eq!(fs::read(&out).unwrap(), f.secret_bytes);
}

#[test]
fn index_stats_cover_every_bucket() {
    let f = fixture();
    let csv_path = f.dir.path().join("occupancy.csv");
    let summary = run_json(&[
        "index",
        "stats",
        "--index",
        path(&f.index),
        "-o",
        path(&csv_path),
    ]);
    let csv = fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "value,pattern,count");
    assert_eq!(lines.len(), 257, "header plus one row per 8-bit bucket");
    let mut total = 0u64;
    let mut occupied = 0u64;
    for (i, line) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], i.to_string(), "buckets in value order");
        assert_eq!(fields[1].len(), 8);
        assert!(fields[1].chars().all(|c| c == '0' || c == '1'));
        let count: u64 = fields[2].parse().unwrap();
        total += count;
        occupied += u64::from(count > 0);
    }
    assert_eq!(Some(total), summary["metrics"]["total_locations"].as_u64());
    assert_eq!(Some(occupied), summary["metrics"]["distinct_values"].as_u64());
}

#[test]
fn audit_is_clean_against_pristine_sources() {
    let f = fixture();
    let summary = run_json(&[
        "index",
        "audit",
        "--index",
        path(&f.index),
        "--input",
        path(&f.clips),
        "--sample",
        "400",
        "--seed",
        "7",
    ]);
    assert_eq!(summary["metrics"]["checked"], 400);
    assert_eq!(summary["metrics"]["mismatches"], 0);
    assert_eq!(summary["seed"], 7);
}

#[test]
fn attack_output_is_reproducible_from_the_seed() {
    let f = fixture();
    let out1 = f.dir.path().join("attack-a");
    let out2 = f.dir.path().join("attack-b");
    let out3 = f.dir.path().join("attack-c");
    for (dir, seed) in [(&out1, "9"), (&out2, "9"), (&out3, "10")] {
        run_ok(&[
            "attack",
            "--input",
            path(&f.clips),
            "--spec",
            "gauss-noise:sigma=0.01",
            "--seed",
            seed,
            "-o",
            path(dir),
        ]);
    }
    let a = fs::read(out1.join("pan.y4m")).unwrap();
    let b = fs::read(out2.join("pan.y4m")).unwrap();
    let c = fs::read(out3.join("pan.y4m")).unwrap();
    assert_eq!(a, b, "same seed, same bytes");
    assert_ne!(a, c, "different seed, different noise");
}

#[test]
fn attacked_videos_fool_the_audit_but_not_cleanly() {
    // A noisy copy of the collection must show hash drift when audited —
    // the audit exists to quantify exactly that.
    let f = fixture();
    let noisy = f.dir.path().join("noisy");
    run_ok(&[
        "attack",
        "--input",
        path(&f.clips),
        "--spec",
        "gauss-noise:sigma=0.02",
        "--seed",
        "3",
        "-o",
        path(&noisy),
    ]);
    let summary = run_json(&[
        "index",
        "audit",
        "--index",
        path(&f.index),
        "--input",
        path(&noisy),
        "--sample",
        "400",
        "--seed",
        "3",
    ]);
    let mismatches = summary["metrics"]["mismatches"].as_u64().unwrap();
    assert!(mismatches > 0, "noise must perturb some hashes");
}

#[test]
fn evaluate_accuracy_meets_the_robustness_floor() {
    let f = fixture();
    let csv_path = f.dir.path().join("accuracy.csv");
    run_json(&[
        "evaluate",
        "accuracy",
        "--input",
        path(&f.clips),
        "--spec",
        "salt-pepper:density=0.001",
        "--spec",
        "gauss-noise:sigma=0",
        "-o",
        path(&csv_path),
    ]);
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("attack,block_grid,accuracy_percent"));
    let salt: f64 = field(lines.next().unwrap(), 2).parse().unwrap();
    let identity: f64 = field(lines.next().unwrap(), 2).parse().unwrap();
    assert!(salt >= 94.0, "salt-pepper 0.001 accuracy {salt} below 94%");
    assert_eq!(identity, 100.0, "zero-strength attack must be lossless");
}

fn field(line: &str, idx: usize) -> &str {
    line.split(',').nth(idx).unwrap()
}

#[test]
fn sequence_level_attacks_are_rejected_by_accuracy() {
    let f = fixture();
    let (code, stderr) = run_fail(&[
        "evaluate",
        "accuracy",
        "--input",
        path(&f.clips),
        "--spec",
        "frame-delete:frames=3",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("frame-aligned"));
}

#[test]
fn evaluate_csvs_are_byte_deterministic() {
    let f = fixture();
    let a = f.dir.path().join("cap-a.csv");
    let b = f.dir.path().join("cap-b.csv");
    // Different thread caps must not change a single byte.
    run_ok(&[
        "--threads",
        "2",
        "evaluate",
        "capacity",
        "--input",
        path(&f.clips),
        "-o",
        path(&a),
    ]);
    run_ok(&[
        "evaluate",
        "capacity",
        "--input",
        path(&f.clips),
        "-o",
        path(&b),
    ]);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with(
        "scope,hash_bits,distinct_values,theoretical_max,aux_bits,relative\n"
    ));
    let dataset_row = text
        .lines()
        .find(|l| l.starts_with("dataset,"))
        .expect("a dataset row aggregates the collection");
    assert_eq!(field(dataset_row, 4), "16", "4+3+7+2 location bits");
}

#[test]
fn evaluate_model_fits_both_rate_populations() {
    let f = fixture();
    let summary_path = f.dir.path().join("model.csv");
    let pdf1 = f.dir.path().join("pdf-coefficient.csv");
    let pdf2 = f.dir.path().join("pdf-block.csv");
    let summary = run_json(&[
        "evaluate",
        "model",
        "--input",
        path(&f.clips),
        "--spec",
        "quantize-dct:step=64",
        "--steps",
        "11",
        "-o",
        path(&summary_path),
        "--pdf-coefficient",
        path(&pdf1),
        "--pdf-block",
        path(&pdf2),
    ]);
    let coeff_std = summary["metrics"]["per_coefficient_std"].as_f64().unwrap();
    let block_std = summary["metrics"]["per_block_std"].as_f64().unwrap();
    assert!(
        block_std < coeff_std,
        "block-maximum rates concentrate: {block_std} !< {coeff_std}"
    );
    let text = fs::read_to_string(&summary_path).unwrap();
    assert!(text.starts_with("population,mean,std_dev,samples,excluded\n"));
    assert!(text.contains("per_coefficient,"));
    assert!(text.contains("per_block_max,"));
    for pdf in [&pdf1, &pdf2] {
        let curve = fs::read_to_string(pdf).unwrap();
        assert!(curve.starts_with("x,density\n"));
        assert_eq!(curve.lines().count(), 12, "header plus --steps points");
    }
}

#[test]
fn demo_recovers_the_default_secret_out_of_the_box() {
    let summary = run_json(&["demo"]);
    assert_eq!(summary["metrics"]["segment_accuracy"], 100.0);
    assert_eq!(summary["metrics"]["recovered_identical"], true);
    assert_eq!(summary["inputs"]["input"], "bundled");
}

#[test]
fn demo_reports_robustness_under_noise() {
    let summary = run_json(&["demo", "--attack", "salt-pepper:density=0.001"]);
    let survival = summary["metrics"]["hash_survival"].as_f64().unwrap();
    assert!(
        survival >= 94.0,
        "bundled-set survival {survival} under salt-pepper 0.001 fell below 94%"
    );
    // Segment accuracy concentrates the same per-block odds on few blocks,
    // so it is reported but only sanity-bounded here.
    let segments = summary["metrics"]["segment_accuracy"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&segments));
}

#[test]
fn demo_surfaces_missing_buckets_atomically() {
    let f = fixture();
    let still_only = f.dir.path().join("still-only");
    fs::create_dir_all(&still_only).unwrap();
    fs::copy(f.clips.join("still.y4m"), still_only.join("still.y4m")).unwrap();
    let secret = f.dir.path().join("tiny-secret.bin");
    fs::write(&secret, b"A").unwrap();
    let (code, stderr) = run_fail(&[
        "demo",
        "--input",
        path(&still_only),
        "--secret",
        path(&secret),
    ]);
    assert_eq!(code, 2);
    assert!(
        stderr.contains("01000001"),
        "the unfillable bit pattern is named: {stderr}"
    );
}

#[test]
fn extract_detects_deletions_and_remaps() {
    let f = fixture();
    let received = f.dir.path().join("received");
    fs::create_dir_all(&received).unwrap();
    run_ok(&[
        "attack",
        "--input",
        path(&f.clips.join("pan.y4m")),
        "--spec",
        "frame-delete:frames=30+31+32",
        "-o",
        path(&received),
    ]);
    for name in ["still.y4m", "texture.y4m"] {
        fs::copy(f.clips.join(name), received.join(name)).unwrap();
    }
    let out = f.dir.path().join("after-deletion.bin");
    let summary = run_json(&[
        "extract",
        "--payload",
        path(&f.payload),
        "--key",
        path(&f.key),
        "--index",
        path(&f.index),
        "--videos",
        path(&received),
        "-o",
        path(&out),
        "--detect-deletions",
    ]);
    assert_eq!(summary["metrics"]["lost_frames_pan"], 3);
    assert_eq!(summary["metrics"]["splices_pan"], serde_json::json!([29]));
    assert_eq!(
        fs::read(&out).unwrap(),
        f.secret_bytes,
        "remapped extraction recovers the secret"
    );
}

#[test]
fn key_resolution_prefers_flag_over_env_over_config() {
    let f = fixture();
    let config = f.dir.path().join("settings.toml");
    fs::write(
        &config,
        format!("key_file = \"{}\"\n", path(&f.wrong_key)),
    )
    .unwrap();

    // Environment beats the config file's wrong key.
    let out_env = f.dir.path().join("env-key.bin");
    let status = cvstego()
        .args([
            "extract",
            "--config",
            path(&config),
            "--payload",
            path(&f.payload),
            "--index",
            path(&f.index),
            "--videos",
            path(&f.clips),
            "-o",
            path(&out_env),
        ])
        .env("CVSTEGO_KEY_FILE", path(&f.key))
        .output()
        .unwrap();
    assert!(status.status.success(), "env key should win over config");
    assert_eq!(fs::read(&out_env).unwrap(), f.secret_bytes);

    // The flag beats a wrong key in the environment.
    let out_flag = f.dir.path().join("flag-key.bin");
    let status = cvstego()
        .args([
            "extract",
            "--payload",
            path(&f.payload),
            "--key",
            path(&f.key),
            "--index",
            path(&f.index),
            "--videos",
            path(&f.clips),
            "-o",
            path(&out_flag),
        ])
        .env("CVSTEGO_KEY_FILE", path(&f.wrong_key))
        .output()
        .unwrap();
    assert!(status.status.success(), "flag key should win over env");
    assert_eq!(fs::read(&out_flag).unwrap(), f.secret_bytes);

    // Config file alone: its wrong key is actually used, and refused.
    let (code, stderr) = run_fail(&[
        "extract",
        "--config",
        path(&config),
        "--payload",
        path(&f.payload),
        "--index",
        path(&f.index),
        "--videos",
        path(&f.clips),
        "-o",
        path(&f.dir.path().join("config-key.bin")),
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("payload authentication failed"));
}

#[test]
fn config_files_reject_unknown_keys() {
    let f = fixture();
    let config = f.dir.path().join("bad-settings.toml");
    fs::write(&config, "turbo = true\n").unwrap();
    let (code, stderr) = run_fail(&[
        "sample",
        "--config",
        path(&config),
        "-o",
        path(&f.dir.path().join("unused-clips")),
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("turbo"));
}

#[test]
fn history_spreads_repeat_traffic_and_is_persisted() {
    let f = fixture();
    let history = f.dir.path().join("history.json");
    let first = f.dir.path().join("hist-payload-1.enc");
    let hide_args = |out: &Path| {
        vec![
            "hide".to_string(),
            "--index".into(),
            path(&f.index).into(),
            "--secret".into(),
            path(&f.secret).into(),
            "--key".into(),
            path(&f.key).into(),
            "--history".into(),
            path(&history).into(),
            "-o".into(),
            out.display().to_string(),
        ]
    };
    let args = hide_args(&first);
    run_ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let recorded: Value =
        serde_json::from_str(&fs::read_to_string(&history).unwrap()).expect("history is JSON");
    assert!(
        !recorded.as_object().unwrap().is_empty(),
        "patterns were recorded"
    );
    // A second transmission still succeeds with the history in place.
    let second = f.dir.path().join("hist-payload-2.enc");
    let args = hide_args(&second);
    run_ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
}
