use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use weldmat_core::io::{load_float, load_mask, save_float, save_mask};
use weldmat_core::{BinaryMask, FloatRaster};

fn weldmat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weldmat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth_into(dir: &Path, seed: &str, count: &str, size: &str) -> Output {
    weldmat(&[
        "synth",
        "--seed",
        seed,
        "--count",
        count,
        "--size",
        size,
        "--out-dir",
        p(dir),
    ])
}

#[test]
fn heatmap_gt_writes_a_round_trippable_map() {
    let d = tempfile::tempdir().unwrap();
    let mask = d.path().join("m.png");
    save_mask(&mask, &BinaryMask::from_fn(32, 24, |x, y| x > 10 && y > 6)).unwrap();
    let out = d.path().join("h.wfr");
    let preview = d.path().join("h.png");
    let r = weldmat(&[
        "heatmap-gt",
        "--mask",
        p(&mask),
        "--out",
        p(&out),
        "--preview",
        p(&preview),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let stdout = String::from_utf8(r.stdout).unwrap();
    assert!(stdout.contains("sigma 3"));
    assert!(stdout.contains("boundary pixels"));
    assert!(stdout.contains("support fraction"));
    let h = load_float(&out).unwrap();
    assert_eq!(h.dims(), (32, 24));
    assert_eq!(h.get(10, 10), 1.0);
    assert!(preview.exists());
}

#[test]
fn heatmap_gt_on_empty_mask_warns_and_succeeds() {
    let d = tempfile::tempdir().unwrap();
    let mask = d.path().join("z.png");
    save_mask(&mask, &BinaryMask::zeros(8, 8)).unwrap();
    let out = d.path().join("h.wfr");
    let r = weldmat(&["heatmap-gt", "--mask", p(&mask), "--out", p(&out)]);
    assert_eq!(code(&r), 0);
    assert!(String::from_utf8_lossy(&r.stderr).contains("warning"));
    assert!(load_float(&out).unwrap().data().iter().all(|&v| v == 0.0));
}

#[test]
fn missing_input_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let r = weldmat(&[
        "heatmap-gt",
        "--mask",
        p(&d.path().join("nope.png")),
        "--out",
        p(&d.path().join("h.wfr")),
    ]);
    assert_eq!(code(&r), 2);
}

#[test]
fn refine_with_defaults_writes_outputs() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&synth_into(d.path(), "3", "1", "48")), 0);
    let img = d.path().join("synth_0000_image.png");
    let prob = d.path().join("synth_0000_prob.wfr");
    let mask = d.path().join("mask.png");
    let alpha = d.path().join("alpha.wfr");
    let trimap = d.path().join("trimap.png");
    let r = weldmat(&[
        "refine",
        "--image",
        p(&img),
        "--prob",
        p(&prob),
        "--out",
        p(&mask),
        "--alpha-out",
        p(&alpha),
        "--trimap-out",
        p(&trimap),
        "--json",
        "--bench",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!(summary["unknown_pixels"].as_u64().unwrap() > 0);
    assert!(summary["wall_seconds"].as_f64().is_some());
    assert_eq!(load_mask(&mask).unwrap().dims(), (48, 48));
    assert!(alpha.exists() && trimap.exists());
}

#[test]
fn refine_rejects_inverted_thresholds() {
    let d = tempfile::tempdir().unwrap();
    synth_into(d.path(), "3", "1", "32");
    let r = weldmat(&[
        "refine",
        "--image",
        p(&d.path().join("synth_0000_image.png")),
        "--prob",
        p(&d.path().join("synth_0000_prob.wfr")),
        "--out",
        p(&d.path().join("m.png")),
        "--c-high",
        "0.3",
        "--c-low",
        "0.4",
    ]);
    assert_eq!(code(&r), 2);
}

#[test]
fn refine_without_known_pixels_exits_1() {
    let d = tempfile::tempdir().unwrap();
    let img = d.path().join("i.wfr");
    let prob = d.path().join("p.wfr");
    save_float(&img, &FloatRaster::filled(8, 8, 0.5)).unwrap();
    save_float(&prob, &FloatRaster::filled(8, 8, 0.42)).unwrap();
    let r = weldmat(&[
        "refine",
        "--image",
        p(&img),
        "--prob",
        p(&prob),
        "--out",
        p(&d.path().join("m.png")),
    ]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("known"));
}

#[test]
fn solver_divergence_exits_1() {
    let d = tempfile::tempdir().unwrap();
    synth_into(d.path(), "4", "1", "64");
    let r = weldmat(&[
        "refine",
        "--image",
        p(&d.path().join("synth_0000_image.png")),
        "--prob",
        p(&d.path().join("synth_0000_prob.wfr")),
        "--out",
        p(&d.path().join("m.png")),
        "--sigma-band",
        "4",
        "--max-iters",
        "1",
    ]);
    assert_eq!(code(&r), 1, "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn synth_is_deterministic_and_in_range() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&synth_into(a.path(), "7", "3", "32")), 0);
    assert_eq!(code(&synth_into(b.path(), "7", "3", "32")), 0);
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 9);
    for n in &names {
        assert_eq!(
            fs::read(a.path().join(n)).unwrap(),
            fs::read(b.path().join(n)).unwrap()
        );
    }
    for i in 0..3 {
        let prob = load_float(a.path().join(format!("synth_{i:04}_prob.wfr"))).unwrap();
        assert!(prob.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn synth_rejects_small_sizes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&synth_into(d.path(), "0", "1", "15")), 2);
}

#[test]
fn eval_report_schema() {
    let d = tempfile::tempdir().unwrap();
    let (pred, gt) = (d.path().join("pred"), d.path().join("gt"));
    fs::create_dir_all(&pred).unwrap();
    fs::create_dir_all(&gt).unwrap();
    save_mask(gt.join("a.png"), &BinaryMask::from_fn(19, 1, |x, _| x < 9)).unwrap();
    save_mask(
        pred.join("a.png"),
        &BinaryMask::from_fn(19, 1, |x, _| x < 10),
    )
    .unwrap();
    save_mask(gt.join("b.pgm"), &BinaryMask::from_fn(11, 1, |x, _| x < 1)).unwrap();
    save_mask(
        pred.join("b.png"),
        &BinaryMask::from_fn(11, 1, |x, _| x < 2),
    )
    .unwrap();
    let report = d.path().join("r.json");
    let r = weldmat(&[
        "eval",
        "--pred-dir",
        p(&pred),
        "--gt-dir",
        p(&gt),
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!((v["dataset_miou"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(v["aggregate"], "macro");
    let per = v["per_image"].as_array().unwrap();
    assert_eq!(per.len(), 2);
    assert_eq!(per[0]["name"], "a");
    for key in ["iou_fg", "iou_bg", "miou"] {
        assert!(per[1][key].is_number());
    }

    fs::remove_file(gt.join("b.pgm")).unwrap();
    let r = weldmat(&[
        "eval",
        "--pred-dir",
        p(&pred),
        "--gt-dir",
        p(&gt),
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&r), 2);
}

#[test]
fn loss_on_one_pixel() {
    let d = tempfile::tempdir().unwrap();
    let ps = d.path().join("ps.wfr");
    let gs = d.path().join("gs.png");
    let pb = d.path().join("pb.wfr");
    save_float(&ps, &FloatRaster::filled(1, 1, 0.5)).unwrap();
    save_mask(&gs, &BinaryMask::new(1, 1, vec![true]).unwrap()).unwrap();
    save_float(&pb, &FloatRaster::filled(1, 1, 0.25)).unwrap();
    let grad = d.path().join("g.wfr");
    let r = weldmat(&[
        "loss",
        "--ps",
        p(&ps),
        "--gs",
        p(&gs),
        "--pb",
        p(&pb),
        "--hb",
        p(&pb),
        "--grad-ps-out",
        p(&grad),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!((v["focal"].as_f64().unwrap() - 0.60342).abs() < 1e-5);
    assert_eq!(v["boundary_mse"].as_f64().unwrap(), 0.0);
    assert!(load_float(&grad).unwrap().get(0, 0) < 0.0);
}

#[test]
fn augment_and_trimap_are_byte_reproducible() {
    let d = tempfile::tempdir().unwrap();
    synth_into(d.path(), "9", "1", "32");
    let img = d.path().join("synth_0000_image.png");
    let gt = d.path().join("synth_0000_gt.png");
    let cfg = d.path().join("aug.json");
    fs::write(
        &cfg,
        r#"{"stages": [{"op": "rotate", "p": 1.0, "range": [10, 10]}, {"op": "noise", "p": 1.0}]}"#,
    )
    .unwrap();
    let run = |name: &str| {
        let out = d.path().join(name);
        let r = weldmat(&[
            "augment",
            "--image",
            p(&img),
            "--mask",
            p(&gt),
            "--seed",
            "5",
            "--config",
            p(&cfg),
            "--out-dir",
            p(&out),
        ]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        (
            fs::read(out.join("image.wfr")).unwrap(),
            fs::read(out.join("mask.png")).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));

    let prob = d.path().join("synth_0000_prob.wfr");
    let t = |name: &str| {
        let out = d.path().join(name);
        assert_eq!(
            code(&weldmat(&["trimap", "--prob", p(&prob), "--out", p(&out)])),
            0
        );
        fs::read(out).unwrap()
    };
    assert_eq!(t("t1.png"), t("t2.png"));
}

#[test]
fn every_subcommand_documents_its_flags() {
    let expected: &[(&str, &[&str])] = &[
        (
            "heatmap-gt",
            &[
                "--mask",
                "--out",
                "--preview",
                "--sigma",
                "--edge-threshold",
            ],
        ),
        (
            "loss",
            &[
                "--ps",
                "--gs",
                "--pb",
                "--hb",
                "--w1",
                "--w2",
                "--alpha-t",
                "--gamma",
            ],
        ),
        (
            "refine",
            &[
                "--image",
                "--prob",
                "--out",
                "--trimap-out",
                "--alpha-out",
                "--c-high",
                "--c-low",
                "--sigma-band",
                "--epsilon",
                "--solver-tol",
                "--max-iters",
                "--mask-threshold",
                "--bench",
                "--json",
            ],
        ),
        (
            "trimap",
            &["--prob", "--out", "--c-high", "--c-low", "--sigma-band"],
        ),
        (
            "eval",
            &[
                "--pred-dir",
                "--gt-dir",
                "--report",
                "--aggregate",
                "--json",
            ],
        ),
        (
            "augment",
            &["--image", "--mask", "--seed", "--config", "--out-dir"],
        ),
        ("synth", &["--seed", "--count", "--size", "--out-dir"]),
    ];
    for (cmd, flags) in expected {
        let r = weldmat(&[cmd, "--help"]);
        assert_eq!(code(&r), 0, "{cmd} --help");
        let text = String::from_utf8(r.stdout).unwrap();
        for f in *flags {
            assert!(text.contains(f), "{cmd} --help lacks {f}");
        }
    }
    assert_eq!(code(&weldmat(&["--help"])), 0);
    assert_eq!(code(&weldmat(&["frobnicate"])), 2);
}
