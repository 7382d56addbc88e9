use std::path::Path;
use std::process::{Command, Output};

use compact_mrf::pgm::GrayImage;
use compact_mrf::{LabelAssignment, MrfInstance};

fn cmrf(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_cmrf")).args(args).output().expect("spawn cmrf");
    assert!(out.status.success(), "cmrf {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn energy_line(text: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with("energy:")).expect("energy line");
    line["energy:".len()..].trim().parse().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_then_exact_and_relaxed_solves_agree_on_a_chain() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("chain.json");
    cmrf(&["gen", "--width", "5", "--height", "1", "--labels", "4", "--seed", "3", "--out", p(&inst)]);
    let model = MrfInstance::read_instance(&inst).unwrap();
    assert_eq!((model.node_count(), model.label_count()), (5, 4));

    let brute = energy_line(&stdout(&cmrf(&["solve", "--in", p(&inst), "--method", "brute"])));
    for method in ["lp-full", "compact", "mplp"] {
        let labels = dir.path().join(format!("{method}.json"));
        let out = cmrf(&["solve", "--in", p(&inst), "--method", method, "--iters", "50000", "--out", p(&labels)]);
        let e = energy_line(&stdout(&out));
        assert!((e - brute).abs() < 1e-9, "{method}: {e} vs {brute}");
        let a: LabelAssignment = serde_json::from_str(&std::fs::read_to_string(&labels).unwrap()).unwrap();
        assert!((model.energy_of_labeling(&a).unwrap() - brute).abs() < 1e-9);
    }
}

#[test]
fn solve_reports_sizes_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("g.json");
    let trace = dir.path().join("trace.csv");
    cmrf(&["gen", "--width", "3", "--height", "3", "--labels", "5", "--out", p(&inst)]);
    let out = stdout(&cmrf(&["solve", "--in", p(&inst), "--iters", "200", "--trace", p(&trace)]));
    assert!(out.contains("primal unknowns") && out.contains("dual bound"));
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("iter,primal_energy,dual_bound,gap\n"));
    assert!(csv.lines().count() > 1);
}

#[test]
fn unsupported_backend_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("g.json");
    cmrf(&["gen", "--width", "3", "--height", "2", "--labels", "5", "--out", p(&inst)]);
    let out = Command::new(env!("CARGO_BIN_EXE_cmrf"))
        .args(["solve", "--in", p(&inst), "--method", "graphcut"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not convex"));
}

#[test]
fn denoise_keeps_dimensions_and_flattens_constant_images() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.pgm");
    let out = dir.path().join("out.pgm");
    GrayImage::new(6, 5, vec![120; 30]).unwrap().write(&flat).unwrap();
    cmrf(&["denoise", "--in", p(&flat), "--labels", "8", "--iters", "400", "--check-every", "20", "--out", p(&out)]);
    let img = GrayImage::read(&out).unwrap();
    assert_eq!((img.width, img.height, img.maxval), (6, 5, 255));
    assert!(img.pixels.iter().all(|&v| v == img.pixels[0]));
}

#[test]
fn synth_corrupt_denoise_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (clean, noisy, out) = (dir.path().join("c.pgm"), dir.path().join("n.pgm"), dir.path().join("o.pgm"));
    cmrf(&["synth", "--width", "12", "--height", "10", "--out", p(&clean)]);
    cmrf(&["corrupt", "--in", p(&clean), "--seed", "4", "--out", p(&noisy)]);
    assert_ne!(GrayImage::read(&clean).unwrap(), GrayImage::read(&noisy).unwrap());
    let text = stdout(&cmrf(&[
        "denoise", "--in", p(&noisy), "--labels", "8", "--iters", "300", "--iso", "--out", p(&out), "--truth", p(&clean),
    ]));
    assert!(text.contains("PSNR"));
    let e = energy_line(&text);
    let noisy_e: f64 = text.lines().find_map(|l| l.strip_prefix("noisy-input labeling energy:")).unwrap().trim().parse().unwrap();
    assert!(e <= noisy_e, "{e} > {noisy_e}");
    assert_eq!(GrayImage::read(&out).unwrap().width, 12);
}

#[test]
fn earlystop_writes_both_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let (hist, gaps) = (dir.path().join("h.csv"), dir.path().join("g.csv"));
    cmrf(&[
        "earlystop", "--instances", "2", "--width", "4", "--height", "4", "--labels", "5", "--out", p(&hist), "--gaps",
        p(&gaps),
    ]);
    let h = std::fs::read_to_string(&hist).unwrap();
    assert!(h.starts_with("gap_bucket,count\n"));
    let total: usize = h.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 2);
    assert_eq!(std::fs::read_to_string(&gaps).unwrap().lines().count(), 3);
}

#[test]
fn bench_envelope_checks_equality() {
    let text = stdout(&cmrf(&["bench-envelope", "--labels", "16,32", "--reps", "5"]));
    let rows: Vec<_> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn harness_prints_csv() {
    let text = stdout(&cmrf(&["harness", "--seeds", "2"]));
    assert!(text.starts_with("seed,opt_full,opt_compact,rel_diff,converged\n"));
    assert_eq!(text.lines().count(), 3);
}
