//! Behavior of the installed binary: exit codes, report formats, and the
//! worker environment override.

use std::path::Path;
use std::process::Command;

use styleshift_core::image_io::save_image;
use styleshift_core::pipeline::read_bank;
use styleshift_core::rng::SplitMix64;
use styleshift_core::ImageTensor;

fn styleshift() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_styleshift"));
    cmd.env_remove("STYLESHIFT_WORKERS");
    cmd
}

fn write_png_corpus(dir: &Path, count: usize, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let mut rng = SplitMix64::new(seed + i as u64);
        let data = (0..3 * 8 * 8).map(|_| rng.next_f64() as f32).collect();
        let img = ImageTensor::new(3, 8, 8, data).unwrap();
        save_image(&img, &dir.join(format!("img{i}.png")), false).unwrap();
    }
}

#[test]
fn missing_arguments_exit_with_usage_code() {
    let out = styleshift().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = styleshift().arg("translate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = styleshift().arg("no-such-command").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_of_range_flags_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    for (flag, value) in [
        ("--beta", "1.5"),
        ("--beta", "nope"),
        ("--epsilon", "0"),
        ("--epsilon", "-1"),
        ("--workers", "0"),
        ("--seed", "-3"),
    ] {
        let out = styleshift()
            .args([
                "translate",
                "--source",
                base.to_str().unwrap(),
                "--target",
                base.to_str().unwrap(),
                "--out",
                base.to_str().unwrap(),
                "--mode",
                "fda",
                flag,
                value,
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{flag} {value}");
    }
}

#[test]
fn missing_source_directory_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = styleshift()
        .args([
            "gap",
            "--source",
            dir.path().join("absent").to_str().unwrap(),
            "--target",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("absent"), "{stderr}");
}

#[test]
fn gap_of_a_corpus_with_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_png_corpus(dir.path(), 3, 40);
    let out = styleshift()
        .args([
            "gap",
            "--source",
            dir.path().to_str().unwrap(),
            "--target",
            dir.path().to_str().unwrap(),
            "--beta",
            "0.5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("mean_gap = 0 0 0"), "{stdout}");
    assert!(stdout.contains("std_gap = 0 0 0"), "{stdout}");
    assert!(stdout.contains("spectral_gap = 0\n"), "{stdout}");
    assert!(stdout.contains("sample_count = 3"), "{stdout}");
}

#[test]
fn verify_reports_every_check_and_exits_clean() {
    let out = styleshift().arg("verify").output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("check generator-reference-vectors: ok"));
    assert!(stdout.contains("check fft-matches-direct-dft: ok"));
    assert!(stdout.contains("check plan-determinism: ok"));
    assert!(stdout.contains(", 0 failed"), "{stdout}");
    assert!(!stdout.contains("FAILED"), "{stdout}");
}

#[test]
fn translate_prints_a_report_and_writes_outputs() {
    let root = tempfile::tempdir().unwrap();
    write_png_corpus(&root.path().join("src"), 3, 50);
    write_png_corpus(&root.path().join("tgt"), 2, 60);
    let out_dir = root.path().join("out");
    let out = styleshift()
        .args([
            "translate",
            "--source",
            root.path().join("src").to_str().unwrap(),
            "--target",
            root.path().join("tgt").to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--mode",
            "sain",
            "--pairing",
            "round-robin",
            "--clamp",
        ])
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("# ok 3"), "{stdout}");
    assert!(stdout.contains("# failed 0"), "{stdout}");
    assert!(stdout.contains("img0.png\tok\timg0.png\t"), "{stdout}");
    for i in 0..3 {
        assert!(out_dir.join(format!("img{i}.png")).exists());
    }
}

#[test]
fn failed_files_flip_the_exit_code() {
    let root = tempfile::tempdir().unwrap();
    write_png_corpus(&root.path().join("src"), 2, 70);
    std::fs::write(root.path().join("src/bad.png"), b"garbage").unwrap();
    write_png_corpus(&root.path().join("tgt"), 1, 80);
    let out = styleshift()
        .args([
            "translate",
            "--source",
            root.path().join("src").to_str().unwrap(),
            "--target",
            root.path().join("tgt").to_str().unwrap(),
            "--out",
            root.path().join("out").to_str().unwrap(),
            "--mode",
            "rgb",
            "--clamp",
        ])
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(1), "{stdout}");
    assert!(stdout.contains("bad.png\tfailed\t"), "{stdout}");
    assert!(stdout.contains("# ok 2"), "{stdout}");
    assert!(stdout.contains("# failed 1"), "{stdout}");
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("1 of 3 files failed"), "{stderr}");
}

#[test]
fn stats_writes_a_readable_bank() {
    let root = tempfile::tempdir().unwrap();
    write_png_corpus(&root.path().join("src"), 4, 90);
    let bank_path = root.path().join("style.bank");
    let out = styleshift()
        .args([
            "stats",
            "--source",
            root.path().join("src").to_str().unwrap(),
            "--out",
            bank_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("images = 4"), "{stdout}");
    assert!(stdout.contains("aggregate_mean = "), "{stdout}");
    let bank = read_bank(&bank_path).unwrap();
    assert_eq!(bank.per_image().len(), 4);
    assert_eq!(bank.channels(), 3);
    assert_eq!(bank.epsilon(), 1e-5);
}

#[test]
fn worker_env_override_is_honored_and_validated() {
    let root = tempfile::tempdir().unwrap();
    write_png_corpus(&root.path().join("src"), 2, 95);
    write_png_corpus(&root.path().join("tgt"), 1, 96);
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = styleshift();
        if let Some(v) = env {
            cmd.env("STYLESHIFT_WORKERS", v);
        }
        cmd.args([
            "translate",
            "--source",
            root.path().join("src").to_str().unwrap(),
            "--target",
            root.path().join("tgt").to_str().unwrap(),
            "--out",
            root.path().join("out").to_str().unwrap(),
            "--mode",
            "rgb",
            "--clamp",
        ]);
        cmd.args(extra);
        cmd.output().unwrap()
    };
    assert_eq!(run(Some("2"), &[]).status.code(), Some(0));
    assert_eq!(run(Some("0"), &[]).status.code(), Some(2));
    assert_eq!(run(Some("lots"), &[]).status.code(), Some(2));
    // An explicit flag wins over a broken environment value.
    assert_eq!(
        run(Some("lots"), &["--workers", "1"]).status.code(),
        Some(0)
    );
}
