use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;
use tempfile::TempDir;

use g2sqg::data::load_corpus;
use g2sqg::graph::build_static;
use g2sqg::training::load_checkpoint;

const SMALL: &str = "\
word_dim = 12
hidden_size = 12
align_dim = 12
graph_learner_dim = 12
graph_dim = 12
decoder_hidden = 12
attn_dim = 12
batch_size = 8
max_epochs = 2
finetune_iterations = 3
max_decode_len = 12
";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_g2sqg"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
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

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Toy corpus, config file and one trained dynamic checkpoint shared by the tests.
struct Fixture {
    _dir: TempDir,
    root: PathBuf,
    config: PathBuf,
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// `--config` plus the corpus overrides.
    fn base_args(&self) -> Vec<String> {
        vec![
            "--config".into(),
            s(&self.config).into(),
            "--override".into(),
            format!("train_path={}", s(&self.path("data/train.jsonl"))),
            "--override".into(),
            format!("dev_path={}", s(&self.path("data/dev.jsonl"))),
        ]
    }
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let root = dir.path().to_path_buf();
        let config = root.join("small.txt");
        fs::write(&config, SMALL).unwrap();
        let data = root.join("data");
        ok(&["preprocess", "--toy", "16", "--toy-dev", "6", "--config", s(&config), "--out-dir", s(&data)]);
        let f = Fixture { _dir: dir, root, config };
        let mut args = vec!["train".to_string()];
        args.extend(f.base_args());
        args.extend(["--out-dir".into(), s(&f.path("run")).into()]);
        ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
        f
    })
}

fn with_base<'a>(f: &'a Fixture, head: &[&'a str], tail: &[&'a str]) -> Vec<String> {
    let mut v: Vec<String> = head.iter().map(|x| x.to_string()).collect();
    v.extend(f.base_args());
    v.extend(tail.iter().map(|x| x.to_string()));
    v
}

fn run_owned(args: &[String]) -> Output {
    run(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn ok_owned(args: &[String]) -> Output {
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn missing_corpus_path_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = run(&["train", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "train",
        "--override",
        "train_path=/nonexistent/train.jsonl",
        "--override",
        "dev_path=/nonexistent/dev.jsonl",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_and_bad_flags_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let out = run(&["preprocess", "--override", "no_such_key=1", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["generate", "--beam"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_corpus_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\": \"x\"\n").unwrap();
    let out = run(&[
        "preprocess",
        "--override",
        &format!("train_path={}", s(&bad)),
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn train_manifest_lists_every_artifact() {
    let f = fixture();
    let m = json(f.path("run/manifest-train.json"));
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for name in ["best.ckpt", "metrics.jsonl", "config-train.txt"] {
        assert!(outputs.iter().any(|o| o.ends_with(name)), "{name} missing from {outputs:?}");
    }
    for o in &outputs {
        assert!(Path::new(o).is_file(), "{o} not written");
    }
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
    let hash = m["inputs"][0]["hash"].as_str().unwrap();
    assert!(hash.starts_with("sha256:") && hash.len() == 7 + 64);
    let lines = fs::read_to_string(f.path("run/metrics.jsonl")).unwrap();
    // a train and a dev record per epoch
    assert_eq!(lines.lines().count(), 4);
    for l in lines.lines() {
        let r: Value = serde_json::from_str(l).unwrap();
        for key in ["epoch", "split", "bleu4", "rougeL", "loss", "lr"] {
            assert!(r.get(key).is_some(), "{key} missing in {l}");
        }
    }
}

#[test]
fn input_hash_is_git_style_sha256() {
    let f = fixture();
    let m = json(f.path("run/manifest-train.json"));
    let bytes = fs::read(f.path("data/train.jsonl")).unwrap();
    let mut blob = format!("blob {}\0", bytes.len()).into_bytes();
    blob.extend(bytes);
    let digest = sha2_hex(&blob);
    assert_eq!(m["inputs"][0]["hash"].as_str().unwrap(), format!("sha256:{digest}"));
}

fn sha2_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    format!("{:x}", Sha256::digest(bytes))
}

#[test]
fn override_changes_only_that_key() {
    let f = fixture();
    let a = f.path("ov-a");
    let b = f.path("ov-b");
    ok_owned(&with_base(f, &["preprocess"], &["--out-dir", s(&a)]));
    ok_owned(&with_base(f, &["preprocess"], &["--override", "gnn_hops=5", "--out-dir", s(&b)]));
    let ta = fs::read_to_string(a.join("config-preprocess.txt")).unwrap();
    let tb = fs::read_to_string(b.join("config-preprocess.txt")).unwrap();
    let diff: Vec<(&str, &str)> = ta.lines().zip(tb.lines()).filter(|(x, y)| x != y).collect();
    assert_eq!(diff, vec![("gnn_hops = 3", "gnn_hops = 5")]);
    assert_eq!(ta.lines().count(), tb.lines().count());
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let f = fixture();
    let ck = f.path("run/best.ckpt");
    let a = f.path("gen-a");
    let b = f.path("gen-b");
    ok(&["generate", "--checkpoint", s(&ck), "--out-dir", s(&a)]);
    ok(&["generate", "--checkpoint", s(&ck), "--out-dir", s(&b)]);
    let x = fs::read(a.join("generated.jsonl")).unwrap();
    let y = fs::read(b.join("generated.jsonl")).unwrap();
    assert_eq!(x, y);
    let dev = load_corpus(f.path("data/dev.jsonl")).unwrap();
    assert_eq!(String::from_utf8(x).unwrap().lines().count(), dev.len());
    let m = json(a.join("manifest-generate.json"));
    assert!(m["config"].as_str().unwrap().contains("beam_width = 5"));
}

#[test]
fn beam_one_equals_greedy() {
    let f = fixture();
    let ck = f.path("run/best.ckpt");
    let out = f.path("gen-1");
    ok(&["generate", "--checkpoint", s(&ck), "--beam", "1", "--out-dir", s(&out)]);
    let model = load_checkpoint::<f32>(&ck, None).unwrap().model;
    let dev = load_corpus(f.path("data/dev.jsonl")).unwrap();
    let text = fs::read_to_string(out.join("generated.jsonl")).unwrap();
    for (line, ex) in text.lines().zip(&dev) {
        let r: Value = serde_json::from_str(line).unwrap();
        assert_eq!(r["id"], ex.id.as_str());
        let tokens: Vec<String> = serde_json::from_value(r["tokens"].clone()).unwrap();
        assert_eq!(tokens, model.greedy(ex).unwrap());
    }
}

#[test]
fn graph_mode_switches() {
    let f = fixture();
    let ck = f.path("run/best.ckpt");
    let out = f.path("gen-static");
    ok(&["generate", "--checkpoint", s(&ck), "--graph", "static", "--out-dir", s(&out)]);
    assert!(out.join("generated.jsonl").is_file());

    let st = f.path("static-run");
    ok_owned(&with_base(f, &["train"], &["--override", "graph_mode=static", "--override", "max_epochs=1", "--out-dir", s(&st)]));
    let sck = st.join("best.ckpt");
    let o = run(&["generate", "--checkpoint", s(&sck), "--graph", "dynamic", "--out-dir", s(&st)]);
    assert_eq!(o.status.code(), Some(2));
    ok(&["generate", "--checkpoint", s(&sck), "--out-dir", s(&st)]);
}

#[test]
fn finetune_writes_checkpoint_and_rejects_architecture_changes() {
    let f = fixture();
    let ck = f.path("run/best.ckpt");
    let out = f.path("ft");
    let o = run(&["finetune", "--checkpoint", s(&ck), "--override", "hidden_size=20", "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    ok(&["finetune", "--checkpoint", s(&ck), "--override", "finetune_lr=0.001", "--out-dir", s(&out)]);
    let m = json(out.join("manifest-finetune.json"));
    let outputs = m["outputs"].to_string();
    assert!(outputs.contains("finetuned.ckpt") && outputs.contains("finetune-metrics.jsonl"));
    assert!(m["config"].as_str().unwrap().contains("finetune_lr = 0.001"));
    ok(&["generate", "--checkpoint", s(&out.join("finetuned.ckpt")), "--out-dir", s(&out)]);
}

fn write_hyps(path: &Path, rows: &[(String, Vec<String>)]) {
    let text: String = rows
        .iter()
        .map(|(id, t)| serde_json::json!({ "id": id, "tokens": t }).to_string() + "\n")
        .collect();
    fs::write(path, text).unwrap();
}

#[test]
fn evaluate_references_against_themselves() {
    let f = fixture();
    let out = f.path("eval-self");
    fs::create_dir_all(&out).unwrap();
    let dev = load_corpus(f.path("data/dev.jsonl")).unwrap();
    let hyps = out.join("hyps.jsonl");
    write_hyps(&hyps, &dev.iter().map(|e| (e.id.clone(), e.question.clone())).collect::<Vec<_>>());
    ok(&[
        "evaluate",
        "--hypotheses",
        s(&hyps),
        "--references",
        s(&f.path("data/dev.jsonl")),
        "--checkpoint",
        s(&f.path("run/best.ckpt")),
        "--out-dir",
        s(&out),
    ]);
    let r = json(out.join("evaluation.json"));
    assert_eq!(r["mean"]["bleu4"].as_f64(), Some(1.0));
    assert_eq!(r["corpus_bleu4"].as_f64(), Some(1.0));
    assert_eq!(r["mean"]["rougeL"].as_f64(), Some(1.0));
    for row in r["examples"].as_array().unwrap() {
        assert_eq!(row["bleu4"].as_f64(), Some(1.0));
        assert!(row["wmd"].as_f64().unwrap().abs() < 1e-9);
    }
}

#[test]
fn evaluate_means_are_averages_of_rows() {
    let f = fixture();
    let out = f.path("eval-gen");
    ok(&["generate", "--checkpoint", s(&f.path("run/best.ckpt")), "--out-dir", s(&out)]);
    let o = ok(&[
        "evaluate",
        "--hypotheses",
        s(&out.join("generated.jsonl")),
        "--references",
        s(&f.path("data/dev.jsonl")),
        "--checkpoint",
        s(&f.path("run/best.ckpt")),
        "--out-dir",
        s(&out),
    ]);
    let r = json(out.join("evaluation.json"));
    let rows = r["examples"].as_array().unwrap();
    for (key, mean_key) in [("bleu4", "bleu4"), ("rougeL", "rougeL"), ("wmd", "wmd")] {
        let vals: Vec<f64> = rows.iter().filter_map(|x| x[key].as_f64()).collect();
        let hand = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((r["mean"][mean_key].as_f64().unwrap() - hand).abs() < 1e-12, "{key}");
    }
    let table = String::from_utf8(o.stdout).unwrap();
    assert_eq!(table.lines().count(), rows.len() + 3);
}

#[test]
fn evaluate_empty_hypothesis_scores_zero_with_warning() {
    let f = fixture();
    let out = f.path("eval-empty");
    fs::create_dir_all(&out).unwrap();
    let dev = load_corpus(f.path("data/dev.jsonl")).unwrap();
    let mut rows: Vec<(String, Vec<String>)> = dev.iter().map(|e| (e.id.clone(), e.question.clone())).collect();
    rows[0].1.clear();
    let hyps = out.join("hyps.jsonl");
    write_hyps(&hyps, &rows);
    let o = ok(&["evaluate", "--hypotheses", s(&hyps), "--references", s(&f.path("data/dev.jsonl")), "--out-dir", s(&out)]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty hypothesis"));
    let r = json(out.join("evaluation.json"));
    assert_eq!(r["examples"][0]["bleu4"].as_f64(), Some(0.0));
    assert_eq!(r["examples"][0]["rougeL"].as_f64(), Some(0.0));
    assert_eq!(r["examples"][1]["bleu4"].as_f64(), Some(1.0));
}

#[test]
fn evaluate_id_mismatch_is_a_data_error() {
    let f = fixture();
    let out = f.path("eval-mismatch");
    fs::create_dir_all(&out).unwrap();
    let dev = load_corpus(f.path("data/dev.jsonl")).unwrap();
    let mut rows: Vec<(String, Vec<String>)> = dev.iter().map(|e| (e.id.clone(), e.question.clone())).collect();
    rows[0].0 = "nobody".into();
    let hyps = out.join("hyps.jsonl");
    write_hyps(&hyps, &rows);
    let o = run(&["evaluate", "--hypotheses", s(&hyps), "--references", s(&f.path("data/dev.jsonl")), "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn static_graph_dump_matches_construction() {
    let f = fixture();
    let dev = load_corpus(f.path("data/dev.jsonl")).unwrap();
    let ex = &dev[2];
    let out = f.path("graph-static");
    let o = ok(&[
        "graph",
        "--input",
        s(&f.path("data/dev.jsonl")),
        "--id",
        &ex.id,
        "--mode",
        "static",
        "--out-dir",
        s(&out),
    ]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let g = build_static(ex).unwrap();
    assert_eq!(v["edges"].as_array().unwrap().len(), g.edges.len());
    assert_eq!(v["id"], ex.id.as_str());
    assert_eq!(json(out.join("graph.json")), v);

    let o = ok(&["graph", "--input", s(&f.path("data/dev.jsonl")), "--id", &ex.id, "--mode", "static", "--format", "text", "--out-dir", s(&out)]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("->")).count(), g.edges.len());
}

#[test]
fn dynamic_graph_dump_rows_are_stochastic() {
    let f = fixture();
    let out = f.path("graph-dyn");
    let o = ok(&[
        "graph",
        "--input",
        s(&f.path("data/dev.jsonl")),
        "--checkpoint",
        s(&f.path("run/best.ckpt")),
        "--out-dir",
        s(&out),
    ]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mode"], "dynamic");
    let n = v["nodes"].as_u64().unwrap() as usize;
    for key in ["incoming", "outgoing"] {
        let mut rows = vec![0.0; n];
        for e in v[key].as_array().unwrap() {
            rows[e[0].as_u64().unwrap() as usize] += e[2].as_f64().unwrap();
        }
        for r in rows {
            assert!((r - 1.0).abs() < 1e-5, "{key} row sums to {r}");
        }
    }
    let o = run(&["graph", "--input", s(&f.path("data/dev.jsonl")), "--mode", "dynamic", "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["graph", "--input", s(&f.path("data/dev.jsonl")), "--id", "absent", "--mode", "static", "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_reports_one_row_per_run() {
    let f = fixture();
    let out = f.path("sweep");
    let o = ok_owned(&with_base(
        f,
        &["sweep-hops"],
        &["--hops", "1,3", "--ablate-dan", "--override", "max_epochs=1", "--out-dir", s(&out)],
    ));
    let v = json(out.join("sweep.json"));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2]["use_dan"], false);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1 + 3 + 1);
    let o = run_owned(&with_base(f, &["sweep-hops"], &["--hops", "", "--out-dir", s(&out)]));
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn single_hop_sweep_reproduces_train() {
    let f = fixture();
    let out = f.path("sweep-3");
    ok_owned(&with_base(f, &["sweep-hops"], &["--hops", "3", "--out-dir", s(&out)]));
    let swept = fs::read(out.join("hops-3/metrics.jsonl")).unwrap();
    let plain = fs::read(f.path("run/metrics.jsonl")).unwrap();
    assert_eq!(swept, plain);
}

#[test]
fn sweep_band_is_checked() {
    let f = fixture();
    let out = f.path("sweep-band");
    let o = run_owned(&with_base(f, &["sweep-hops"], &["--hops", "1,2", "--band=-1", "--out-dir", s(&out)]));
    assert_eq!(o.status.code(), Some(2));
    ok_owned(&with_base(
        f,
        &["sweep-hops"],
        &["--hops", "1,2", "--band", "1", "--override", "max_epochs=1", "--out-dir", s(&out)],
    ));
    let v = json(out.join("sweep.json"));
    assert_eq!(v["within_band"], true);
    let spread = v["spread"].as_f64().unwrap();
    let b: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r["dev_bleu4"].as_f64().unwrap()).collect();
    assert!((spread - (b[0] - b[1]).abs()).abs() < 1e-15);
}
