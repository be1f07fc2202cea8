//! End-to-end tests of the fsg binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fsg_core::genome::UniverseMode;
use fsg_core::matcher::EnrolledSet;
use fsg_core::{BlockList, FileUniverse, Fsg};
use fsg_tools::enroll::save_enrolled_set;
use fsg_tools::fsgfile;

fn fsg_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fsg"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    fsg_bin().args(args).output().expect("spawn fsg")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_toy_fsg(path: &Path, label: &str, entries: &[(&str, &[u64])]) {
    let mut fsg = Fsg::new(label.to_string(), None, 4096).unwrap();
    for (p, blocks) in entries {
        fsg.insert(p.to_string(), BlockList::new(blocks.to_vec()).unwrap())
            .unwrap();
    }
    fsgfile::write_fsg_file(&fsg, path).unwrap();
}

#[test]
fn extract_matches_debugfs_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("small.fsg");
    let out = run(&[
        "extract",
        fixture("ext4_small.img").to_str().unwrap(),
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let extracted = fsgfile::read_fsg_file(&out_path).unwrap();
    let truth = fsgfile::ingest_debugfs_dump(
        std::fs::File::open(fixture("ext4_small.blocks.tsv")).unwrap(),
        "truth",
        4096,
    )
    .unwrap();
    assert_eq!(extracted.len(), truth.len());
    for ((gp, gb), (tp, tb)) in extracted.entries().zip(truth.entries()) {
        assert_eq!(gp, tp);
        assert_eq!(gb, tb, "{gp}");
    }
    assert_eq!(extracted.device_label, "ext4_small");
}

#[test]
fn extract_is_byte_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.fsg");
    let b = dir.path().join("b.fsg");
    for out_path in [&a, &b] {
        let out = run(&[
            "extract",
            fixture("ext4_1k.img").to_str().unwrap(),
            "--first-block",
            "-o",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn extract_missing_image_fails_with_domain_error() {
    let out = run(&["extract", "/nonexistent/missing.img"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn extract_corrupt_image_reports_not_ext4() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = std::fs::read(fixture("ext4_empty.img")).unwrap();
    bytes[1024 + 0x38] ^= 0xFF;
    let bad = dir.path().join("bad.img");
    std::fs::write(&bad, bytes).unwrap();
    let out = run(&["extract", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not an ext4 image"));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_required_flag_is_usage_error() {
    let out = run(&["analyze", "--metric", "entropy"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ingest_then_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("dump.tsv");
    std::fs::write(&tsv, "/etc/hosts\t8193,8194\n/empty\t\n").unwrap();
    let out_path = dir.path().join("ingested.fsg");
    let out = run(&[
        "ingest",
        tsv.to_str().unwrap(),
        "--label",
        "disk7",
        "--block-size",
        "4096",
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let fsg = fsgfile::read_fsg_file(&out_path).unwrap();
    assert_eq!(fsg.device_label, "disk7");
    assert_eq!(fsg.get("/etc/hosts").unwrap().as_slice(), &[8193, 8194]);
    assert!(fsg.get("/empty").unwrap().is_empty());
}

/// Three-installation toy corpus: /a at first blocks 10, 10, 12.
fn toy_corpus_dir(dir: &Path) {
    write_toy_fsg(&dir.join("i0.fsg"), "i0", &[("/a", &[10])]);
    write_toy_fsg(&dir.join("i1.fsg"), "i1", &[("/a", &[10])]);
    write_toy_fsg(&dir.join("i2.fsg"), "i2", &[("/a", &[12])]);
}

#[test]
fn analyze_min_entropy_matches_hand_computed_values() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus_dir(dir.path());
    let out = run(&[
        "analyze",
        "--corpus",
        dir.path().to_str().unwrap(),
        "--metric",
        "min-entropy",
        "--first-block",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("path,shannon_bits,min_entropy_bits"));
    let row = lines.next().unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "/a");
    let shannon: f64 = fields[1].parse().unwrap();
    let min: f64 = fields[2].parse().unwrap();
    // oracle: counts {10: 2, 12: 1} over three installations
    assert!((min - 0.584_962_500_721_156_3).abs() < 1e-12, "min {min}");
    assert!(
        (shannon - 0.918_295_834_054_489_6).abs() < 1e-12,
        "shannon {shannon}"
    );
}

#[test]
fn analyze_summary_and_histogram_shapes() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_fsg(
        &dir.path().join("i0.fsg"),
        "i0",
        &[("/a", &[1, 2]), ("/b", &[7])],
    );
    write_toy_fsg(
        &dir.path().join("i1.fsg"),
        "i1",
        &[("/a", &[3, 4]), ("/b", &[9])],
    );

    let out = run(&[
        "analyze",
        "--corpus",
        dir.path().to_str().unwrap(),
        "--metric",
        "summary",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    assert_eq!(
        text,
        "device_label,total_files,total_blocks,required_space_bytes\n\
         i0,2,3,12288\ni1,2,3,12288\n"
    );

    let out = run(&[
        "analyze",
        "--corpus",
        dir.path().to_str().unwrap(),
        "--metric",
        "histogram",
    ]);
    let text = stdout_str(&out);
    assert!(text.starts_with("bucket,count,percent\n0-9,2,100\n"));

    // histogram refuses the first-block projection
    let out = run(&[
        "analyze",
        "--corpus",
        dir.path().to_str().unwrap(),
        "--metric",
        "histogram",
        "--first-block",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_hamming_and_cdf() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_fsg(&dir.path().join("i0.fsg"), "i0", &[("/a", &[5, 6, 7])]);
    write_toy_fsg(&dir.path().join("i1.fsg"), "i1", &[("/a", &[5, 8, 7])]);

    let out = run(&[
        "analyze",
        "--corpus",
        dir.path().to_str().unwrap(),
        "--metric",
        "hamming",
    ]);
    assert_eq!(stdout_str(&out), "label_a,label_b,distance\ni0,i1,1\n");

    let out = run(&[
        "analyze",
        "--corpus",
        dir.path().to_str().unwrap(),
        "--metric",
        "cdf",
        "--first-block",
    ]);
    assert_eq!(
        stdout_str(&out),
        "path,location,cumulative_probability\n/a,5,1\n"
    );
}

#[test]
fn simulate_writes_deterministic_corpus() {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default_sim.json");
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--count",
            "3",
            "--seed",
            "99",
            "-o",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for i in 0..3 {
        let a = std::fs::read(out_a.join(format!("install-{i}.fsg"))).unwrap();
        let b = std::fs::read(out_b.join(format!("install-{i}.fsg"))).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "install-{i} differs between runs");
    }
}

#[test]
fn scatter_emits_indexed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let genome = dir.path().join("g.fsg");
    write_toy_fsg(
        &genome,
        "g",
        &[("/etc/a", &[9]), ("/var/b", &[]), ("/zzz", &[3])],
    );
    let out = run(&["scatter", genome.to_str().unwrap()]);
    assert_eq!(
        stdout_str(&out),
        "file_index,first_block_location,top_dir\n0,9,etc\n2,3,other\n"
    );
}

fn enrolled_dir(dir: &Path) -> (PathBuf, Fsg, Fsg) {
    let universe = FileUniverse::from_paths(
        vec!["/a".to_string(), "/b".to_string()],
        UniverseMode::Intersection,
    );
    let mut dev_a = Fsg::new("dev-a".to_string(), None, 4096).unwrap();
    dev_a
        .insert("/a".to_string(), BlockList::new(vec![1, 2]).unwrap())
        .unwrap();
    dev_a
        .insert("/b".to_string(), BlockList::new(vec![3]).unwrap())
        .unwrap();
    let mut dev_b = Fsg::new("dev-b".to_string(), None, 4096).unwrap();
    dev_b
        .insert("/a".to_string(), BlockList::new(vec![8, 9]).unwrap())
        .unwrap();
    dev_b
        .insert("/b".to_string(), BlockList::new(vec![11]).unwrap())
        .unwrap();
    let set = EnrolledSet::new(
        [
            ("dev-a".to_string(), dev_a.clone()),
            ("dev-b".to_string(), dev_b.clone()),
        ],
        universe,
    )
    .unwrap();
    let enrolled = dir.join("enrolled");
    save_enrolled_set(&enrolled, &set, 0.9).unwrap();
    (enrolled, dev_a, dev_b)
}

#[test]
fn match_identifies_enrolled_device_and_rejects_stranger() {
    let dir = tempfile::tempdir().unwrap();
    let (enrolled, dev_a, _) = enrolled_dir(dir.path());

    let candidate = dir.path().join("cand.fsg");
    fsgfile::write_fsg_file(&dev_a, &candidate).unwrap();
    let out = run(&[
        "match",
        "--candidate",
        candidate.to_str().unwrap(),
        "--enrolled",
        enrolled.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout_str(&out);
    assert!(text.contains("matched,dev-a,1,0,3,false"), "got: {text}");

    write_toy_fsg(
        &candidate,
        "stranger",
        &[("/a", &[100, 101]), ("/b", &[200])],
    );
    let out = run(&[
        "match",
        "--candidate",
        candidate.to_str().unwrap(),
        "--enrolled",
        enrolled.to_str().unwrap(),
    ]);
    let text = stdout_str(&out);
    assert!(text.contains("unmatched,"), "got: {text}");
}

#[test]
fn verify_accepts_reference_and_rejects_forgery() {
    let dir = tempfile::tempdir().unwrap();
    let reference = dir.path().join("ref.fsg");
    write_toy_fsg(
        &reference,
        "r",
        &[("/ro/a", &[1]), ("/ro/b", &[2]), ("/var/c", &[3])],
    );
    let list = dir.path().join("readonly.txt");
    std::fs::write(&list, "/ro/a\n/ro/b\n").unwrap();

    // candidate modified outside the read-only set
    let candidate = dir.path().join("cand.fsg");
    write_toy_fsg(
        &candidate,
        "c",
        &[
            ("/ro/a", &[1]),
            ("/ro/b", &[2]),
            ("/var/c", &[99]),
            ("/var/new", &[123]),
        ],
    );
    let out = run(&[
        "verify",
        "--candidate",
        candidate.to_str().unwrap(),
        "--reference",
        reference.to_str().unwrap(),
        "--readonly",
        list.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(
        stdout_str(&out).contains("accept,1,0,2"),
        "got: {}",
        stdout_str(&out)
    );

    let forged = dir.path().join("forged.fsg");
    write_toy_fsg(&forged, "f", &[("/ro/a", &[7]), ("/ro/b", &[8])]);
    let out = run(&[
        "verify",
        "--candidate",
        forged.to_str().unwrap(),
        "--reference",
        reference.to_str().unwrap(),
        "--readonly",
        list.to_str().unwrap(),
    ]);
    assert!(
        stdout_str(&out).contains("reject,0,2,2"),
        "got: {}",
        stdout_str(&out)
    );
}

#[test]
fn committed_default_config_matches_generator() {
    let committed = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default_sim.json"),
    )
    .expect("configs/default_sim.json present");
    let generated = fsg_tools::simconfig::SimConfigFile::from_config(
        &fsg_core::allocsim::standard_mix_config(1000),
    )
    .to_json_pretty();
    assert_eq!(committed.trim_end(), generated.trim_end());
}
