use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modaprompt::ingest::{frame_file_name, load_image, write_sequence};
use modaprompt::metrics::EvalCurves;
use modaprompt::synth::{generate, SynthConfig};
use modaprompt_cli::record::{MetricPayload, RunRecord};
use tempfile::tempdir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_modaprompt"));
    c.env_remove("MODAPROMPT_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_sequence(dir: &Path, seed: u64) -> PathBuf {
    let cfg = SynthConfig {
        width: 48,
        height: 40,
        n_frames: 12,
        target_size: (12, 10),
        ..SynthConfig::camouflage(seed)
    };
    let seq = generate(&cfg).unwrap();
    write_sequence(&seq, &dir.join(seq.name())).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bad_flags_exit_2_and_missing_files_exit_3() {
    let dir = tempdir().unwrap();
    let m = small_sequence(dir.path(), 1);
    let out = dir.path().join("o");

    let o = run(&["--out", s(&out), "prompt", "-m", s(&m), "--lambda", "1.5"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = run(&["--out", s(&out), "prompt", "-m", s(&m), "--alpha", "0.5"]);
    assert_eq!(code(&o), 2);
    let o = run(&["--out", s(&out), "eval", "-m", s(&m), "--jobs", "0"]);
    assert_eq!(code(&o), 2);
    let o = run(&["--out", s(&out), "eval", "-m", s(&m), "--tracker", "kcf"]);
    assert_eq!(code(&o), 2);
    let o = run(&["--out", s(&out), "eval"]);
    assert_eq!(code(&o), 2);

    let missing = dir.path().join("nope").join("manifest.json");
    let o = run(&["--out", s(&out), "prompt", "-m", s(&missing)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = run(&["--out", s(&out), "eval", "-m", s(&missing)]);
    assert_eq!(code(&o), 3);
    let o = run(&["--config", s(&missing), "--out", s(&out), "eval", "-m", s(&m)]);
    assert_eq!(code(&o), 3);
}

#[test]
fn unknown_axis_is_a_usage_error() {
    let o = run(&["ablate", "--suite", "mixed", "--axis", "speed"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn lambda_zero_prompt_reproduces_visible_bytes() {
    let dir = tempdir().unwrap();
    let m = small_sequence(dir.path(), 2);
    let out = dir.path().join("o");
    let o = run(&["--out", s(&out), "--lambda", "0", "prompt", "-m", s(&m)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let src = m.parent().unwrap().join("visible");
    let dst = out.join("camouflage-0002").join("prompted");
    for i in 0..12 {
        let a = fs::read(src.join(frame_file_name(i))).unwrap();
        let b = fs::read(dst.join(frame_file_name(i))).unwrap();
        assert!(a == b, "frame {i} differs");
    }
    assert!(out.join("camouflage-0002").join("manifest.json").is_file());
}

#[test]
fn default_prompt_moves_pixels_by_at_most_13_levels() {
    let dir = tempdir().unwrap();
    let m = small_sequence(dir.path(), 3);
    let out = dir.path().join("o");
    let o = run(&["--out", s(&out), "--lambda", "0.05", "prompt", "-m", s(&m)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let src = m.parent().unwrap().join("visible");
    let dst = out.join("camouflage-0003").join("prompted");
    let mut max_delta = 0i32;
    for i in 0..12 {
        let a = load_image(&src.join(frame_file_name(i))).unwrap().to_u8();
        let b = load_image(&dst.join(frame_file_name(i))).unwrap().to_u8();
        for (x, y) in a.iter().zip(&b) {
            max_delta = max_delta.max((*x as i32 - *y as i32).abs());
        }
    }
    assert!(max_delta > 0);
    assert!(max_delta <= 13, "max delta {max_delta}");
}

#[test]
fn missing_aux_stream_names_the_modality() {
    let dir = tempdir().unwrap();
    let m = small_sequence(dir.path(), 4);
    let out = dir.path().join("o");
    let o = run(&["--out", s(&out), "--aux", "thermal", "prompt", "-m", s(&m)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("thermal"), "{}", stderr(&o));
    let o = run(&["--out", s(&out), "--aux", "event", "eval", "-m", s(&m)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("event"), "{}", stderr(&o));
    let o = run(&["--out", s(&out), "dye", "-m", s(&m), "--modality", "thermal"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("thermal"));
}

#[test]
fn dye_and_track_write_outputs() {
    let dir = tempdir().unwrap();
    let m = small_sequence(dir.path(), 5);
    let out = dir.path().join("o");
    let o = run(&["--out", s(&out), "dye", "-m", s(&m)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dyed = out.join("camouflage-0005").join("dyed-depth");
    assert_eq!(fs::read_dir(&dyed).unwrap().count(), 12);

    let o = run(&["--out", s(&out), "track", "-m", s(&m)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(out.join("camouflage-0005").join("track.txt")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    assert!(lines.iter().all(|l| l.split(',').count() == 5));
}

#[test]
fn synth_writes_loadable_manifests() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("suite");
    let o = run(&["--out", s(&out), "--seed", "7", "synth", "--suite", "longterm", "--seeds", "2", "--aux-kind", "thermal"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let paths: Vec<PathBuf> = String::from_utf8(o.stdout).unwrap().lines().map(PathBuf::from).collect();
    assert_eq!(paths.len(), 2);
    for p in &paths {
        let m = modaprompt::ingest::load_manifest(p).unwrap();
        let seq = modaprompt::ingest::load_sequence(&m).unwrap();
        assert!(seq.stream(modaprompt::ModalityKind::Thermal).is_some());
        assert!(seq.name().ends_with("0007") || seq.name().ends_with("0008"));
    }
}

fn eval_payload(out: &Path, extra: &[&str]) -> (String, MetricPayload) {
    let mut args = vec!["--out", s(out), "eval", "--suite", "mixed", "--seeds", "4"];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(out.join("metrics.json")).unwrap();
    let payload = serde_json::from_str(&text).unwrap();
    (text, payload)
}

#[test]
fn eval_is_deterministic_across_jobs_and_runs() {
    let dir = tempdir().unwrap();
    let (a, pa) = eval_payload(&dir.path().join("a"), &["--jobs", "1"]);
    let (b, _) = eval_payload(&dir.path().join("b"), &["--jobs", "3"]);
    let (c, _) = eval_payload(&dir.path().join("c"), &[]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(pa.per_sequence_results.len(), 4);

    let run_a: RunRecord = serde_json::from_str(&fs::read_to_string(dir.path().join("a").join("run.json")).unwrap()).unwrap();
    let run_b: RunRecord = serde_json::from_str(&fs::read_to_string(dir.path().join("b").join("run.json")).unwrap()).unwrap();
    assert_eq!(run_a.payload, run_b.payload);
    assert_eq!(run_a.payload, pa);
}

#[test]
fn curve_files_round_trip() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("o");
    let (_, payload) = eval_payload(&out, &[]);
    let mut curves = Vec::new();
    for r in &payload.per_sequence_results {
        let text = fs::read_to_string(out.join("curves").join(format!("{}-success.csv", r.name))).unwrap();
        let c = EvalCurves::from_csv(&text, r.success_auc).unwrap();
        assert_eq!(c.to_csv(), text);
        let mean = c.values.iter().sum::<f64>() / c.values.len() as f64;
        assert!((mean - r.success_auc).abs() < 1e-12);
        curves.push(c);
    }
    let svg = fs::read_to_string(out.join("plots").join("success.svg")).unwrap();
    let marker = "<!-- data mean of 4\n";
    let start = svg.find(marker).unwrap() + marker.len();
    let end = start + svg[start..].find("-->").unwrap();
    let mean = modaprompt_cli::report::mean_curve(&curves).unwrap();
    let parsed = EvalCurves::from_csv(&svg[start..end], mean.summary).unwrap();
    assert_eq!(parsed, mean);
    assert!(out.join("plots").join("precision.svg").is_file());
    assert!(out.join("curves").join(format!("{}-longterm.csv", payload.per_sequence_results[0].name)).is_file());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "lambda = 0.2\ntracker = \"oracle\"\n").unwrap();
    let out = dir.path().join("o");
    let o = run(&["--config", s(&cfg), "--lambda", "0.1", "--out", s(&out), "eval", "--suite", "longterm", "--seeds", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let payload: MetricPayload = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(payload.tracker_name, "oracle");
    assert_eq!(payload.prompt_config.weights, modaprompt::prompt::PromptWeights::Dual { lambda: 0.1 });
    assert_eq!(payload.aggregate.f, 1.0);
}

#[test]
fn output_dir_defaults_to_environment() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("env-out");
    let o = bin()
        .args(["--tracker", "oracle", "eval", "--suite", "longterm", "--seeds", "1"])
        .env("MODAPROMPT_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("metrics.json").is_file());
}

#[test]
fn failed_sequences_are_recorded_and_exit_1() {
    let dir = tempdir().unwrap();
    let good = small_sequence(dir.path(), 6);
    let bad_dir = dir.path().join("broken");
    fs::create_dir_all(&bad_dir).unwrap();
    let bad = bad_dir.join("manifest.json");
    fs::write(&bad, r#"{"name":"broken","groundtruth":"gt.txt","streams":[{"kind":"visible","pattern":"v/*.png"}]}"#).unwrap();
    let out = dir.path().join("o");
    let o = run(&["--out", s(&out), "--tracker", "oracle", "eval", "-m", s(&good), "-m", s(&bad)]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let payload: MetricPayload = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(payload.per_sequence_results.len(), 2);
    let failed: Vec<_> = payload.per_sequence_results.iter().filter(|r| !r.is_ok()).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].status.starts_with("failed"));
    assert_eq!(payload.aggregate.status, "1 of 2 sequences failed");
    assert_eq!(payload.aggregate.f, payload.per_sequence_results.iter().find(|r| r.is_ok()).unwrap().f);
}

#[cfg(unix)]
#[test]
fn external_tracker_over_subprocess() {
    use std::os::unix::fs::PermissionsExt;

    let dir = tempdir().unwrap();
    let m = small_sequence(dir.path(), 8);
    let script = dir.path().join("echo-tracker.sh");
    fs::write(
        &script,
        "#!/bin/sh\nn=$(ls \"$1\" | wc -l)\ni=0\nwhile [ $i -lt $n ]; do echo \"$2,0.5\"; i=$((i+1)); done\n",
    )
    .unwrap();
    fs::set_permissions(&script, fs::Permissions::from_mode(0o755)).unwrap();
    let out = dir.path().join("o");
    let o = run(&["--out", s(&out), "--tracker", "external", "--tracker-cmd", s(&script), "eval", "-m", s(&m)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let payload: MetricPayload = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert!(payload.tracker_name.starts_with("external:"));
    assert!(payload.aggregate.success_auc > 0.0);

    fs::write(&script, "#!/bin/sh\necho garbage\n").unwrap();
    let o = run(&["--out", s(&out), "--tracker", "external", "--tracker-cmd", s(&script), "eval", "-m", s(&m)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn ablation_tables_have_the_expected_rows() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["--out", s(&out), "--tracker", "oracle", "ablate", "--suite", "mixed", "--seeds", "2", "--axis", "lambda"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table: modaprompt_cli::commands::AblationTable =
        serde_json::from_str(&fs::read_to_string(out.join("ablate-lambda.json")).unwrap()).unwrap();
    let rows: Vec<_> = table.rows.iter().map(|r| r.setting.as_str()).collect();
    assert_eq!(rows, ["0", "0.01", "0.05", "0.1", "0.2"]);

    let o = run(&["--out", s(&out), "--tracker", "oracle", "ablate", "--suite", "mixed", "--seeds", "2", "--axis", "modality"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(out.join("ablate-modality.txt")).unwrap();
    for row in ["default", "visible-only", "auxiliary-only"] {
        assert!(text.contains(row));
    }
    let o = run(&["--out", s(&out), "--tracker", "oracle", "ablate", "--suite", "mixed", "--seeds", "2", "--axis", "colormap"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for row in ["jet", "red", "gray"] {
        assert!(text.contains(row));
    }
    let o = run(&["--out", s(&out), "ablate", "--suite", "mixed", "--axis", "colormap", "--grid", "0,1"]);
    assert_eq!(code(&o), 2);
}
