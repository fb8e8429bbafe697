use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn langtrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_langtrack"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = langtrack(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn help_lists_every_subcommand() {
    let out = ok(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["synth", "train-ground", "harvest", "train-switch", "track", "eval", "bench"] {
        assert!(text.contains(sub), "{sub}");
    }
}

#[test]
fn missing_checkpoint_fails_before_tracking() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("out");
    ok(&["synth", "--suite", "--sequences", "1", "--length", "40", "--out", s(&data)]);
    let r = langtrack(&["track", "--mode", "nl", "--dataset", s(&data), "--out", s(&out)]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("grounding"));
    assert!(!out.exists());
    let r = langtrack(&["track", "--use-switcher", "--naive-switch", "--dataset", s(&data), "--out", s(&out)]);
    assert!(!r.status.success());
}

#[test]
fn bench_is_byte_deterministic_and_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for o in [&a, &b] {
        ok(&["bench", "--sequences", "2", "--length", "40", "--seed", "5", "--out", s(o)]);
    }
    // config.json records the output path, so it differs between runs.
    let strip = |t: Vec<(String, Vec<u8>)>| t.into_iter().filter(|(n, _)| n != "config.json").collect::<Vec<_>>();
    let (ta, tb) = (strip(tree(&a)), strip(tree(&b)));
    assert!(ta.iter().any(|(n, _)| n.ends_with("curves.csv")));
    assert!(ta.iter().any(|(n, _)| n.ends_with("success.svg")));
    assert_eq!(ta, tb);

    let c = dir.path().join("c");
    ok(&["bench", "--config", s(&a.join("config.json")), "--out", s(&c)]);
    assert_eq!(strip(tree(&c)), ta);
}

#[test]
fn track_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["synth", "--suite", "--sequences", "2", "--length", "40", "--out", s(&data)]);
    let (local, naive) = (dir.path().join("local"), dir.path().join("naive"));
    ok(&["track", "--dataset", s(&data), "--out", s(&local)]);
    ok(&["track", "--naive-switch", "--dataset", s(&data), "--out", s(&naive)]);
    let report = dir.path().join("report");
    let out = ok(&[
        "eval",
        "--dataset",
        s(&data),
        "--run",
        &format!("local={}", s(&local)),
        "--run",
        &format!("naive={}", s(&naive)),
        "--out",
        s(&report),
    ]);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("local") && table.contains("naive"));
    assert!(report.join("curves.csv").exists());
    let bad = langtrack(&["eval", "--dataset", s(&data), "--run", "nodelimiter", "--out", s(&report)]);
    assert!(!bad.status.success());
}

#[test]
fn training_commands_write_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("ground");
    ok(&["train-ground", "--samples", "6", "--held-out", "4", "--epochs", "1", "--out", s(&g)]);
    for f in ["grounding.params", "grounding.vocab", "grounding_train.json"] {
        assert!(g.join(f).exists(), "{f}");
    }

    let corpus = dir.path().join("corpus");
    ok(&[
        "synth",
        "--sequences",
        "6",
        "--length",
        "40",
        "--embed",
        "--grounding",
        s(&g.join("grounding.params")),
        "--vocab",
        s(&g.join("grounding.vocab")),
        "--out",
        s(&corpus),
    ]);
    let out = ok(&["harvest", "--corpus", s(&corpus)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("windows"));
    let sw = dir.path().join("switch");
    ok(&[
        "train-switch",
        "--corpus",
        s(&corpus),
        "--epochs",
        "1",
        "--lr",
        "0.01",
        "--held-out",
        "0.5",
        "--out",
        s(&sw),
    ]);
    assert!(sw.join("switcher.ckpt").exists());
    let data = dir.path().join("data");
    ok(&["synth", "--suite", "--sequences", "1", "--length", "40", "--out", s(&data)]);
    ok(&[
        "track",
        "--mode",
        "nl_bbox",
        "--use-switcher",
        "--switcher",
        s(&sw.join("switcher.ckpt")),
        "--grounding",
        s(&g.join("grounding.params")),
        "--vocab",
        s(&g.join("grounding.vocab")),
        "--dataset",
        s(&data),
        "--out",
        s(&dir.path().join("tracked")),
    ]);
}
