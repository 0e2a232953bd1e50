//! End-to-end runs of the `superpix` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use superpix::imgio::{read_feature_file, save_image, write_labelmap, RawImage};
use superpix::labels::write_dataset;
use superpix::nn::{SampleSet, MISSING_DISTANCE};
use superpix::slic::SuperpixelMap;

fn superpix(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superpix")).current_dir(dir).env("RUST_LOG", "warn").args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// Four colored quadrants with a diagonal gradient and the matching ground truth.
fn write_fixture(dir: &Path, name: &str, size: usize, seed: u8) -> (PathBuf, PathBuf) {
    let colors = [[200u8, 40, 40], [40, 170, 60], [50, 60, 200], [220, 210, 50]];
    let mut data = Vec::new();
    let mut gt = Vec::new();
    for y in 0..size {
        for x in 0..size {
            let q = (y >= size / 2) as usize * 2 + (x >= size / 2) as usize;
            let n = ((x * 7 + y * 13 + seed as usize) % 11) as u8;
            data.extend(colors[q].iter().map(|c| c.saturating_add(n)));
            gt.push(q as u32);
        }
    }
    let img = dir.join(format!("{name}.ppm"));
    let gtp = dir.join(format!("{name}_gt.spxl"));
    save_image(&img, &RawImage::new(size, size, 3, data).unwrap()).unwrap();
    write_labelmap(&gtp, &SuperpixelMap::new(size, size, gt).unwrap()).unwrap();
    (img, gtp)
}

#[test]
fn features_shapes_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let gray = RawImage::new(256, 256, 1, (0..256 * 256).map(|i| ((i % 256) ^ (i / 256)) as u8).collect()).unwrap();
    save_image(dir.path().join("g.pgm"), &gray).unwrap();
    let o = superpix(dir.path(), &["features", "g.pgm", "g.ften"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = read_feature_file(dir.path().join("g.ften")).unwrap();
    assert_eq!((t.width, t.height, t.map_count), (64, 64, 81));

    save_image(dir.path().join("odd.pgm"), &RawImage::new(30, 30, 1, vec![9; 900]).unwrap()).unwrap();
    let o = superpix(dir.path(), &["features", "odd.pgm", "odd.ften"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("IndivisibleDims"));

    write_fixture(dir.path(), "c", 32, 0);
    let o = superpix(dir.path(), &["features", "--channels", "Lab", "c.ppm", "c.ften"]);
    assert_eq!(code(&o), 0);
    for ch in ["L", "a", "b"] {
        assert!(dir.path().join(format!("c_{ch}.ften")).exists());
    }
}

#[test]
fn segment_modes() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), "q", 48, 3);
    let p = dir.path();
    assert_eq!(code(&superpix(p, &["segment", "q.ppm", "-o", "a.spxl", "--pgm", "a.pgm", "--overlay", "a_overlay.ppm"])), 0);
    assert_eq!(code(&superpix(p, &["--threads", "1", "segment", "q.ppm", "-o", "b.spxl"])), 0);
    let a = std::fs::read(p.join("a.spxl")).unwrap();
    assert_eq!(a, std::fs::read(p.join("b.spxl")).unwrap());
    assert!(p.join("a.pgm").exists() && p.join("a_overlay.ppm").exists());

    assert_eq!(code(&superpix(p, &["segment", "q.ppm", "-o", "t.spxl", "--mode", "trainable"])), 2);
    assert_eq!(code(&superpix(p, &["segment", "q.ppm", "-o", "o.spxl", "--mode", "trainable", "--net", "oracle"])), 0);
    assert_eq!(a, std::fs::read(p.join("o.spxl")).unwrap());

    // extra feature channels flow into SLIC
    assert_eq!(code(&superpix(p, &["features", "q.ppm", "q.ften", "--set", "scattering.J=1"])), 0);
    let o = superpix(p, &["--set", "scattering.J=1", "--set", "slic.beta=0.5", "segment", "q.ppm", "q.ften", "-o", "f.spxl"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn labels_train_and_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_fixture(p, "a", 48, 1);
    write_fixture(p, "b", 48, 5);
    std::fs::write(p.join("set.txt"), "# training images\na.ppm a_gt.spxl\nb.ppm b_gt.spxl,a_gt.spxl\n").unwrap();
    let common = ["--set", "slic.step=8"];
    let run_labels = |x: &str, out: &str| {
        let o = superpix(p, &[&common[..], &["--set", &format!("labels.X={x}"), "labels", "set.txt", "-o", out]].concat());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    let s1 = run_labels("1", "x1.spds");
    let s6 = run_labels("6", "x6.spds");
    let field = |s: &str, key: &str| -> usize {
        let start = s.find(&format!("{key}=")).unwrap() + key.len() + 1;
        s[start..].split(|c: char| !c.is_ascii_digit()).next().unwrap().parse().unwrap()
    };
    assert!(field(&s6, "kept") <= field(&s1, "kept"));
    for s in [&s1, &s6] {
        assert_eq!(field(s, "kept") + field(s, "dropped"), field(s, "candidate_pixels"));
    }

    std::fs::write(p.join("bad.txt"), "a.ppm missing.spxl\n").unwrap();
    assert_eq!(code(&superpix(p, &["labels", "bad.txt", "-o", "bad.spds"])), 2);

    let train = |out: &str| {
        let o = superpix(p, &[&common[..], &["--seed", "4", "--set", "train.epochs=2", "train", "x1.spds", "-o", out]].concat());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    let log = train("n1.spnn");
    train("n2.spnn");
    assert_eq!(std::fs::read(p.join("n1.spnn")).unwrap(), std::fs::read(p.join("n2.spnn")).unwrap());
    assert!(log.contains("epoch 0 ") && log.contains("epoch 2 "));

    let o = superpix(p, &[&common[..], &["segment", "a.ppm", "-o", "a.spxl", "--mode", "trainable", "--net", "n1.spnn"]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = superpix(p, &["eval", "--sp", "a_gt.spxl", "b_gt.spxl", "--gt", "a_gt.spxl", "b_gt.spxl"]);
    assert_eq!(code(&o), 0);
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("image,rec,mde,ue,co,iou"));
    let mean = csv.lines().last().unwrap();
    assert!(mean.starts_with("MEAN,1.000000,0.000000,0.000000,") && mean.ends_with(",1.000000"), "{mean}");

    assert_eq!(code(&superpix(p, &["eval", "--sp", "a.spxl", "-o", "m.csv", "--gt", "a_gt.spxl"])), 0);
    assert!(std::fs::read_to_string(p.join("m.csv")).unwrap().starts_with("image,rec,mde,ue,co,iou\na,"));
    assert_eq!(code(&superpix(p, &["eval", "--sp", "a.spxl", "a_gt.spxl", "--gt", "a_gt.spxl"])), 2);
}

#[test]
fn train_reports_log_q_and_numeric_failures() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let (m, q) = (3, 7);
    let mut set = SampleSet::new(m, q);
    for i in 0..140u32 {
        let input: Vec<f64> = (0..set.input_len()).map(|k| ((i as usize * 31 + k * 17) % 23) as f64 - 11.0).collect();
        set.push(&input, i % q as u32).unwrap();
    }
    write_dataset(p.join("r.spds"), &set).unwrap();
    let o = superpix(p, &["--set", "train.epochs=1", "train", "r.spds", "-o", "r.spnn"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = stdout(&o).lines().next().unwrap().to_string();
    let loss: f64 = first.split_whitespace().nth(3).unwrap().parse().unwrap();
    assert!((loss - (q as f64).ln()).abs() < 1e-5, "{first}");

    // target on a missing candidate: its logit is -inf, so the loss is not finite
    let mut bad = SampleSet::new(m, q);
    let mut input = vec![0.0; bad.input_len()];
    input[m] = MISSING_DISTANCE;
    bad.push(&input, 0).unwrap();
    write_dataset(p.join("bad.spds"), &bad).unwrap();
    let o = superpix(p, &["--set", "net.kind=regression", "--set", "train.val_frac=0", "train", "bad.spds", "-o", "bad.spnn"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_fixture(p, "q", 32, 2);
    std::fs::write(p.join("run.cfg"), "# run\nslic.step = 8\nslic.compactness = 20\n").unwrap();
    assert_eq!(code(&superpix(p, &["--config", "run.cfg", "segment", "q.ppm", "-o", "c.spxl"])), 0);
    std::fs::write(p.join("bad.cfg"), "slic.stride = 8\n").unwrap();
    let o = superpix(p, &["--config", "bad.cfg", "segment", "q.ppm", "-o", "c.spxl"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("slic.stride"));
    assert_eq!(code(&superpix(p, &["frobnicate"])), 2);
}
