use std::path::Path;
use std::process::{Command, Output};

use masktrack_core::io::{read_heatmaps, read_mots, read_pairs, SequenceDir};

fn masktrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_masktrack")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = masktrack(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn manifest_requests_are_covered_by_exported_heatmaps() {
    let tmp = tempfile::tempdir().unwrap();
    let seqs = tmp.path().join("seqs");
    ok(&["synth", "--preset", "lanes", "--seed", "3", "--out", s(&seqs)]);
    let seq = seqs.join("lanes-3");
    let man = tmp.path().join("man");
    for variant in ["frame1", "frames12", "frames15_2", "frames125"] {
        ok(&["manifest", s(&seq), "--ref-variant", variant, "--out", s(&man)]);
        let pairs = read_pairs(&man.join("lanes-3/pairs.txt")).unwrap();
        assert!(!pairs.is_empty());
        let store = read_heatmaps(&SequenceDir::new(&seq).heatmaps_path()).unwrap();
        assert!(pairs.iter().all(|r| store.maps.contains_key(&r.key())), "{variant}");
        let tracklets = read_mots(&man.join("lanes-3/tracklets.txt")).unwrap();
        assert!(pairs.iter().all(|r| tracklets.iter().any(|t| t.track_id == r.ref_id)));
    }
}

#[test]
fn sweep_writes_one_row_per_value_and_metric() {
    let tmp = tempfile::tempdir().unwrap();
    let seqs = tmp.path().join("seqs");
    ok(&["synth", "--preset", "lanes", "--out", s(&seqs)]);
    let csv = tmp.path().join("sweep.csv");
    ok(&["sweep", s(&seqs.join("lanes-0")), "--values", "0.1,0.5,0.9", "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta_l,metric,value");
    assert_eq!(lines.len(), 1 + 3 * 10);
    assert!(lines.contains(&"0.5,HOTA,1"));
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let seqs = tmp.path().join("seqs");
    // widening the temporal bound lets the 2 s gap merge
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "tau_t = 2.5\n").unwrap();
    ok(&["synth", "--preset", "gap2s", "--config", s(&cfg), "--out", s(&seqs)]);
    let seq = seqs.join("gap-v1-h19");
    let out = tmp.path().join("res");
    ok(&["run", s(&seq), "--config", s(&cfg), "--out", s(&out)]);
    let log = std::fs::read_to_string(out.join("gap-v1-h19.log")).unwrap();
    assert!(log.contains("final_tracks=1\n"), "{log}");
    ok(&["run", s(&seq), "--out", s(&out)]);
    let log = std::fs::read_to_string(out.join("gap-v1-h19.log")).unwrap();
    assert!(log.contains("final_tracks=2\n"), "{log}");
}

#[test]
fn oracle_and_eval_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let seqs = tmp.path().join("seqs");
    ok(&["synth", "--preset", "noisy", "--seed", "1", "--out", s(&seqs)]);
    let seq = seqs.join("noisy-1");
    let out = tmp.path().join("res");
    ok(&["oracle", "slta", s(&seq), "--out", s(&out)]);
    let ev = tmp.path().join("ev");
    let table = ok(&["eval", "--pred", s(&out), "--gt", s(&seqs), "--out", s(&ev)]);
    assert!(table.contains("HOTA"));
    let metrics = std::fs::read_to_string(ev.join("metrics.txt")).unwrap();
    assert!(metrics.contains("idsw=0\n"), "{metrics}");
    let curves = std::fs::read_to_string(ev.join("alpha_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 20);
}

#[test]
fn missing_inputs_fail_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let seqs = tmp.path().join("seqs");
    ok(&["synth", "--preset", "lanes", "--out", s(&seqs)]);
    let seq = seqs.join("lanes-0");
    // images were not written
    let out = masktrack(&["run", s(&seq), "--backend", "rgb_2x2", "--out", s(&tmp.path().join("r"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("requires images"));

    std::fs::remove_file(SequenceDir::new(&seq).flow_path(10)).unwrap();
    let out = masktrack(&["run", s(&seq), "--out", s(&tmp.path().join("r"))]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing optical flow for frame pair (10, 11)"));

    let out = masktrack(&["synth", "--preset", "wobble"]);
    assert!(!out.status.success());
    let out = masktrack(&["run", s(&seq), "--theta-l", "nan"]);
    assert!(!out.status.success());
}
