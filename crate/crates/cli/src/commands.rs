//! Subcommand implementations.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use g2sqg::autodiff::Tape;
use g2sqg::data::{encode_batch, load_corpus, load_embeddings, write_corpus, ContextStore, EmbeddingTable, Example, Lexicon};
use g2sqg::graph::{build_static, GraphMode, PassageGraph};
use g2sqg::layers::Dropout;
use g2sqg::metrics::{bleu4, corpus_bleu4, rouge_l, wmd};
use g2sqg::toy::toy_split;
use g2sqg::training::{evaluate, load_checkpoint, save_checkpoint, EpochOutcome, Trainer};
use g2sqg::{Config, Graph2Seq, Precision, Scalar};

use crate::failure;
use crate::manifest::RunManifest;
use crate::settings;
use crate::{Cli, Command, Format, GraphArg, Global};

pub fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    fs::create_dir_all(&g.out_dir).with_context(|| format!("cannot create {}", g.out_dir.display()))?;
    match cli.command {
        Command::Preprocess { toy, toy_dev } => preprocess(&g, toy, toy_dev),
        Command::Train => train(&g),
        Command::Finetune { checkpoint } => finetune(&g, &checkpoint),
        Command::Generate {
            checkpoint,
            input,
            graph,
            beam,
        } => generate(&g, &checkpoint, input, graph, beam),
        Command::Evaluate {
            hypotheses,
            references,
            checkpoint,
        } => evaluate_files(&g, &hypotheses, &references, checkpoint.as_deref()),
        Command::Graph {
            input,
            id,
            checkpoint,
            mode,
            format,
        } => graph(&g, &input, id.as_deref(), checkpoint.as_deref(), mode, format),
        Command::SweepHops { hops, ablate_dan, band } => sweep_hops(&g, &hops, ablate_dan, band),
    }
}

fn required_path(value: &Option<String>, key: &str) -> Result<PathBuf> {
    let p = value
        .as_ref()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| failure::config(format!("{key} is not set")))?;
    let path = PathBuf::from(p);
    if !path.is_file() {
        return Err(failure::config(format!("{key} {} does not exist", path.display())));
    }
    Ok(path)
}

fn load_input(path: &Path, manifest: &mut RunManifest) -> Result<Vec<Example>> {
    manifest.input(path)?;
    let examples = load_corpus(path)?;
    if examples.is_empty() {
        return Err(failure::data(format!("{} holds no examples", path.display())));
    }
    Ok(examples)
}

fn contexts(cfg: &Config, manifest: &mut RunManifest) -> Result<Option<ContextStore>> {
    match &cfg.context_path {
        Some(p) if !p.is_empty() => {
            let path = required_path(&cfg.context_path, "context_path")?;
            manifest.input(&path)?;
            Ok(Some(ContextStore::read(p)?))
        }
        _ => Ok(None),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

// ------------------------------------------------------------- preprocess

#[derive(Serialize)]
struct SplitStats {
    examples: usize,
    mean_passage_len: f64,
    mean_question_len: f64,
    mean_answer_len: f64,
    max_sentences: usize,
    with_dependencies: usize,
}

fn split_stats(examples: &[Example]) -> SplitStats {
    let n = examples.len().max(1) as f64;
    let mean = |f: &dyn Fn(&Example) -> usize| examples.iter().map(f).sum::<usize>() as f64 / n;
    SplitStats {
        examples: examples.len(),
        mean_passage_len: mean(&|e| e.passage_len()),
        mean_question_len: mean(&|e| e.question.len()),
        mean_answer_len: mean(&|e| e.answer().len()),
        max_sentences: examples.iter().map(|e| e.num_sentences()).max().unwrap_or(0),
        with_dependencies: examples.iter().filter(|e| e.dependency_edges.is_some()).count(),
    }
}

fn preprocess(g: &Global, toy: Option<usize>, toy_dev: usize) -> Result<()> {
    let mut cfg = settings::fresh(g)?;
    if let Some(n) = toy {
        let (train, dev) = toy_split(n, toy_dev, cfg.seed);
        let train_path = g.out_dir.join("train.jsonl");
        let dev_path = g.out_dir.join("dev.jsonl");
        write_corpus(&train_path, &train)?;
        write_corpus(&dev_path, &dev)?;
        cfg.train_path = Some(train_path.display().to_string());
        cfg.dev_path = Some(dev_path.display().to_string());
    }
    let mut manifest = RunManifest::new("preprocess", &cfg, &g.out_dir);
    if toy.is_some() {
        manifest.output("train.jsonl");
        manifest.output("dev.jsonl");
    }
    let train = load_input(&required_path(&cfg.train_path, "train_path")?, &mut manifest)?;
    let dev = match &cfg.dev_path {
        Some(p) if !p.is_empty() => Some(load_input(&required_path(&cfg.dev_path, "dev_path")?, &mut manifest)?),
        _ => None,
    };
    let lex = Lexicon::build(&train, cfg.vocab_cap)?;
    let vocab_path = manifest.output("vocab.json");
    write_json(
        &vocab_path,
        &json!({
            "words": lex.words.words(),
            "pos": lex.pos.tags(),
            "ner": lex.ner.tags(),
        }),
    )?;
    let stats_path = manifest.output("stats.json");
    write_json(
        &stats_path,
        &json!({
            "vocabulary": lex.words.len(),
            "train": split_stats(&train),
            "dev": dev.as_deref().map(split_stats),
        }),
    )?;
    info!(
        "{} training examples, vocabulary {}, {} POS tags, {} NER tags",
        train.len(),
        lex.words.len(),
        lex.pos.len(),
        lex.ner.len()
    );
    let m = manifest.finish()?;
    println!("{}", m.display());
    Ok(())
}

// ------------------------------------------------------------- stage 1

fn fresh_model<T: Scalar>(cfg: &Config, train: &[Example], manifest: &mut RunManifest) -> Result<Graph2Seq<T>> {
    let lex = Lexicon::build(train, cfg.vocab_cap)?;
    let words = match &cfg.embeddings_path {
        Some(p) if !p.is_empty() => {
            let path = required_path(&cfg.embeddings_path, "embeddings_path")?;
            manifest.input(&path)?;
            let table: EmbeddingTable<T> = load_embeddings(&path, &lex.words, cfg.seed)?;
            if table.dim() != cfg.word_dim {
                return Err(failure::config(format!(
                    "word_dim = {} but {} holds {}-dimensional vectors",
                    cfg.word_dim,
                    path.display(),
                    table.dim()
                )));
            }
            table
        }
        _ => EmbeddingTable::random(&lex.words, cfg.word_dim, cfg.seed),
    };
    let ctx = contexts(cfg, manifest)?;
    Ok(Graph2Seq::new(cfg.clone(), lex, words, ctx)?)
}

/// Appends every epoch record to `log`.
fn record_epochs(log: &mut BufWriter<File>, outcome: &EpochOutcome) -> g2sqg::Result<bool> {
    for r in &outcome.records {
        serde_json::to_writer(&mut *log, r)?;
        writeln!(log)?;
    }
    log.flush()?;
    Ok(true)
}

struct Stage1 {
    epochs: usize,
    dev_bleu4: f64,
    dev_rouge_l: f64,
}

/// Trains, keeps the best validation parameters and saves them with the
/// optimizer and schedule state under `prefix`.
fn stage1<T: Scalar>(
    cfg: &Config,
    train: &[Example],
    dev: &[Example],
    prefix: &str,
    manifest: &mut RunManifest,
) -> Result<Stage1> {
    let model = fresh_model::<T>(cfg, train, manifest)?;
    let mut trainer = Trainer::new(model);
    let metrics_path = manifest.output(&format!("{prefix}metrics.jsonl"));
    let mut log = BufWriter::new(File::create(&metrics_path)?);
    trainer.fit(train, dev, |o, _| record_epochs(&mut log, o))?;
    trainer.restore_best();
    let ckpt = manifest.output(&format!("{prefix}best.ckpt"));
    save_checkpoint(&ckpt, &trainer.model, Some(&trainer.adam), Some(&trainer.state))?;
    let eval = evaluate(&trainer.model, dev)?;
    Ok(Stage1 {
        epochs: trainer.state.epoch,
        dev_bleu4: eval.bleu4,
        dev_rouge_l: eval.rouge_l,
    })
}

fn stage1_dispatch(
    cfg: &Config,
    train: &[Example],
    dev: &[Example],
    prefix: &str,
    manifest: &mut RunManifest,
) -> Result<Stage1> {
    match cfg.precision {
        Precision::F32 => stage1::<f32>(cfg, train, dev, prefix, manifest),
        Precision::F64 => stage1::<f64>(cfg, train, dev, prefix, manifest),
    }
}

fn train(g: &Global) -> Result<()> {
    let cfg = settings::fresh(g)?;
    let train_path = required_path(&cfg.train_path, "train_path")?;
    let dev_path = required_path(&cfg.dev_path, "dev_path")?;
    let mut manifest = RunManifest::new("train", &cfg, &g.out_dir);
    let train = load_input(&train_path, &mut manifest)?;
    let dev = load_input(&dev_path, &mut manifest)?;
    let s = stage1_dispatch(&cfg, &train, &dev, "", &mut manifest)?;
    info!(
        "best dev BLEU-4 {:.4} ROUGE-L {:.4} after {} epochs",
        s.dev_bleu4, s.dev_rouge_l, s.epochs
    );
    let m = manifest.finish()?;
    println!("{}", m.display());
    Ok(())
}

// ------------------------------------------------------------- stage 2

fn finetune_with<T: Scalar>(
    cfg: Config,
    checkpoint: &Path,
    train: &[Example],
    dev: &[Example],
    manifest: &mut RunManifest,
) -> Result<()> {
    let ctx = contexts(&cfg, manifest)?;
    let mut ck = load_checkpoint::<T>(checkpoint, ctx)?;
    ck.model.cfg = cfg;
    let mut trainer = match ck.state {
        Some(state) => Trainer::resume(ck.model, ck.adam, state),
        None => {
            let mut t = Trainer::new(ck.model);
            if let Some(a) = ck.adam {
                t.adam = a;
            }
            t
        }
    };
    let metrics_path = manifest.output("finetune-metrics.jsonl");
    let mut log = BufWriter::new(File::create(&metrics_path)?);
    trainer.finetune(train, dev, |o, _| record_epochs(&mut log, o))?;
    trainer.restore_best();
    let out = manifest.output("finetuned.ckpt");
    save_checkpoint(&out, &trainer.model, Some(&trainer.adam), Some(&trainer.state))?;
    Ok(())
}

fn finetune(g: &Global, checkpoint: &Path) -> Result<()> {
    let cfg = settings::from_checkpoint(g, checkpoint)?;
    let precision = settings::checkpoint_precision(checkpoint)?;
    let train_path = required_path(&cfg.train_path, "train_path")?;
    let dev_path = required_path(&cfg.dev_path, "dev_path")?;
    let mut manifest = RunManifest::new("finetune", &cfg, &g.out_dir);
    manifest.input(checkpoint)?;
    let train = load_input(&train_path, &mut manifest)?;
    let dev = load_input(&dev_path, &mut manifest)?;
    match precision {
        Precision::F32 => finetune_with::<f32>(cfg, checkpoint, &train, &dev, &mut manifest)?,
        Precision::F64 => finetune_with::<f64>(cfg, checkpoint, &train, &dev, &mut manifest)?,
    }
    let m = manifest.finish()?;
    println!("{}", m.display());
    Ok(())
}

// ------------------------------------------------------------- generate

fn restored<T: Scalar>(cfg: Config, checkpoint: &Path, manifest: &mut RunManifest) -> Result<Graph2Seq<T>> {
    let ctx = contexts(&cfg, manifest)?;
    let mut model = load_checkpoint::<T>(checkpoint, ctx)?.model;
    model.cfg = cfg;
    Ok(model)
}

/// Switches a restored model to the requested graph construction.
fn set_graph<T: Scalar>(model: &mut Graph2Seq<T>, mode: Option<GraphArg>) -> Result<()> {
    match mode {
        Some(GraphArg::Static) if model.learner.is_some() => {
            warn!("checkpoint was trained with learned graphs; decoding over static graphs instead");
            model.learner = None;
            model.cfg.graph_mode = GraphMode::Static;
        }
        Some(GraphArg::Dynamic) if model.learner.is_none() => {
            return Err(failure::config("checkpoint has no graph learner; dynamic graphs are unavailable"));
        }
        _ => {}
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct GeneratedRecord {
    id: String,
    tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

fn generate_with<T: Scalar>(
    cfg: Config,
    checkpoint: &Path,
    examples: &[Example],
    mode: Option<GraphArg>,
    width: usize,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    let mut model = restored::<T>(cfg, checkpoint, manifest)?;
    set_graph(&mut model, mode)?;
    let mut w = BufWriter::new(File::create(out)?);
    for ex in examples {
        let gen = model.beam(ex, width)?;
        let rec = GeneratedRecord {
            id: gen.id,
            tokens: gen.tokens,
            score: Some(gen.score),
        };
        serde_json::to_writer(&mut w, &rec)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn generate(g: &Global, checkpoint: &Path, input: Option<PathBuf>, mode: Option<GraphArg>, beam: Option<usize>) -> Result<()> {
    let cfg = settings::from_checkpoint(g, checkpoint)?;
    let precision = settings::checkpoint_precision(checkpoint)?;
    let input = match input {
        Some(p) => p,
        None => required_path(&cfg.dev_path, "dev_path")?,
    };
    let width = beam.unwrap_or(cfg.beam_width);
    if width == 0 {
        return Err(failure::config("beam width must be positive"));
    }
    let mut manifest = RunManifest::new("generate", &cfg, &g.out_dir);
    manifest.input(checkpoint)?;
    let examples = load_input(&input, &mut manifest)?;
    let out = manifest.output("generated.jsonl");
    match precision {
        Precision::F32 => generate_with::<f32>(cfg, checkpoint, &examples, mode, width, &out, &mut manifest)?,
        Precision::F64 => generate_with::<f64>(cfg, checkpoint, &examples, mode, width, &out, &mut manifest)?,
    }
    info!("{} questions, beam width {width}", examples.len());
    let m = manifest.finish()?;
    println!("{}", m.display());
    Ok(())
}

// ------------------------------------------------------------- evaluate

fn read_hypotheses(path: &Path) -> Result<Vec<GeneratedRecord>> {
    let reader = BufReader::new(File::open(path).map_err(g2sqg::Error::Io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(g2sqg::Error::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GeneratedRecord = serde_json::from_str(&line).map_err(|e| g2sqg::Error::Record {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Serialize)]
struct Scores {
    id: String,
    bleu4: f64,
    #[serde(rename = "rougeL")]
    rouge_l: f64,
    wmd: Option<f64>,
}

/// Word vectors of a checkpoint, reserved entries excluded.
fn word_vectors<T: Scalar>(checkpoint: &Path) -> Result<HashMap<String, Vec<f64>>> {
    let model = load_checkpoint::<T>(checkpoint, None)?.model;
    let reserved = g2sqg::data::vocab::RESERVED.len();
    Ok(model
        .lexicon
        .words
        .words()
        .iter()
        .enumerate()
        .skip(reserved)
        .map(|(i, w)| (w.clone(), model.words.row(i).iter().map(|x| x.f64()).collect()))
        .collect())
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

fn lower(t: &[String]) -> Vec<String> {
    t.iter().map(|w| w.to_lowercase()).collect()
}

fn evaluate_files(g: &Global, hyp_path: &Path, ref_path: &Path, checkpoint: Option<&Path>) -> Result<()> {
    let cfg = match checkpoint {
        Some(c) => settings::from_checkpoint(g, c)?,
        None => settings::fresh(g)?,
    };
    let mut manifest = RunManifest::new("evaluate", &cfg, &g.out_dir);
    manifest.input(hyp_path)?;
    let hyps = read_hypotheses(hyp_path)?;
    let refs = load_input(ref_path, &mut manifest)?;
    let vectors = match checkpoint {
        Some(c) => {
            manifest.input(c)?;
            Some(match settings::checkpoint_precision(c)? {
                Precision::F32 => word_vectors::<f32>(c)?,
                Precision::F64 => word_vectors::<f64>(c)?,
            })
        }
        None => None,
    };

    let mut by_id: HashMap<&str, &GeneratedRecord> = HashMap::new();
    for h in &hyps {
        if by_id.insert(h.id.as_str(), h).is_some() {
            return Err(failure::data(format!("hypothesis id {:?} appears twice", h.id)));
        }
    }
    let ref_ids: HashSet<&str> = refs.iter().map(|r| r.id.as_str()).collect();
    if ref_ids.len() != refs.len() {
        return Err(failure::data("reference ids are not unique"));
    }
    if let Some(h) = hyps.iter().find(|h| !ref_ids.contains(h.id.as_str())) {
        return Err(failure::data(format!("hypothesis id {:?} has no reference", h.id)));
    }
    if let Some(r) = refs.iter().find(|r| !by_id.contains_key(r.id.as_str())) {
        return Err(failure::data(format!("reference id {:?} has no hypothesis", r.id)));
    }

    let mut rows = Vec::with_capacity(refs.len());
    let mut pairs = Vec::with_capacity(refs.len());
    for r in &refs {
        let hyp = &by_id[r.id.as_str()].tokens;
        pairs.push((lower(hyp), lower(&r.question)));
        if hyp.is_empty() {
            warn!("empty hypothesis for {:?}; scored 0", r.id);
            rows.push(Scores {
                id: r.id.clone(),
                bleu4: 0.0,
                rouge_l: 0.0,
                wmd: None,
            });
            continue;
        }
        let w = match &vectors {
            Some(v) => wmd(hyp, &r.question, v).ok(),
            None => None,
        };
        rows.push(Scores {
            id: r.id.clone(),
            bleu4: bleu4(&lower(hyp), &lower(&r.question), cfg.bleu_epsilon)?,
            rouge_l: rouge_l(&lower(hyp), &lower(&r.question))?,
            wmd: w,
        });
    }
    let mean_bleu = mean(rows.iter().map(|r| r.bleu4)).unwrap_or(0.0);
    let mean_rouge = mean(rows.iter().map(|r| r.rouge_l)).unwrap_or(0.0);
    let mean_wmd = mean(rows.iter().filter_map(|r| r.wmd));
    let corpus = corpus_bleu4(&pairs, cfg.bleu_epsilon)?;

    let out = manifest.output("evaluation.json");
    write_json(
        &out,
        &json!({
            "examples": rows,
            "mean": { "bleu4": mean_bleu, "rougeL": mean_rouge, "wmd": mean_wmd },
            "corpus_bleu4": corpus,
            "count": rows.len(),
        }),
    )?;

    let fmt_wmd = |w: Option<f64>| w.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    let width = rows.iter().map(|r| r.id.len()).max().unwrap_or(2).max(4);
    println!("{:<width$}  {:>8}  {:>8}  {:>8}", "id", "BLEU-4", "ROUGE-L", "WMD");
    for r in &rows {
        println!(
            "{:<width$}  {:>8.4}  {:>8.4}  {:>8}",
            r.id,
            r.bleu4,
            r.rouge_l,
            fmt_wmd(r.wmd)
        );
    }
    println!("{:<width$}  {:>8.4}  {:>8.4}  {:>8}", "mean", mean_bleu, mean_rouge, fmt_wmd(mean_wmd));
    println!("corpus BLEU-4 {corpus:.4} over {} examples", rows.len());
    manifest.finish()?;
    Ok(())
}

// ------------------------------------------------------------- graph

fn learned_graph<T: Scalar>(cfg: Config, checkpoint: &Path, ex: &Example, manifest: &mut RunManifest) -> Result<Value> {
    let model = restored::<T>(cfg, checkpoint, manifest)?;
    if model.learner.is_none() {
        return Err(failure::config("checkpoint has no graph learner; dynamic graphs are unavailable"));
    }
    let batch = encode_batch(std::slice::from_ref(ex), &model.lexicon)?;
    let mut tape = Tape::new();
    let enc = model.encode(&mut tape, ex, &batch.examples[0], batch.extended_size(), &mut Dropout::off())?;
    match enc.graph {
        PassageGraph::Dynamic(d) => Ok(d.to_json(&tape)),
        PassageGraph::Static(s) => Ok(s.to_json()),
    }
}

fn render_text(graph: &Value, ex: &Example) -> String {
    let word = |v: &Value| {
        v.as_u64()
            .and_then(|i| ex.passage.get(i as usize))
            .map_or("?", |t| t.surface.as_str())
    };
    let mut s = format!(
        "{} graph of {:?}: {} nodes",
        graph["mode"].as_str().unwrap_or("?"),
        ex.id,
        graph["nodes"]
    );
    let mut section = |name: &str| {
        if let Some(list) = graph[name].as_array() {
            s.push_str(&format!("\n{name} ({} entries)", list.len()));
            for e in list {
                let pair = e.as_array().map(Vec::as_slice).unwrap_or(&[]);
                match pair {
                    [u, v] => s.push_str(&format!("\n  {u} -> {v}  {} -> {}", word(u), word(v))),
                    [u, v, w] => s.push_str(&format!(
                        "\n  {u} -> {v}  {:.6}  {} -> {}",
                        w.as_f64().unwrap_or(f64::NAN),
                        word(u),
                        word(v)
                    )),
                    _ => {}
                }
            }
        }
    };
    section("edges");
    section("incoming");
    section("outgoing");
    s
}

fn graph(
    g: &Global,
    input: &Path,
    id: Option<&str>,
    checkpoint: Option<&Path>,
    mode: Option<GraphArg>,
    format: Format,
) -> Result<()> {
    let cfg = match checkpoint {
        Some(c) => settings::from_checkpoint(g, c)?,
        None => settings::fresh(g)?,
    };
    let mut manifest = RunManifest::new("graph", &cfg, &g.out_dir);
    let examples = load_input(input, &mut manifest)?;
    let ex = match id {
        Some(id) => examples
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| failure::data(format!("no example {id:?} in {}", input.display())))?,
        None => &examples[0],
    };
    let mode = mode.unwrap_or(match cfg.graph_mode {
        GraphMode::Static => GraphArg::Static,
        GraphMode::Dynamic => GraphArg::Dynamic,
    });
    let mut value = match mode {
        GraphArg::Static => build_static(ex)?.to_json(),
        GraphArg::Dynamic => {
            let c = checkpoint.ok_or_else(|| failure::config("learned graphs need --checkpoint"))?;
            manifest.input(c)?;
            match settings::checkpoint_precision(c)? {
                Precision::F32 => learned_graph::<f32>(cfg.clone(), c, ex, &mut manifest)?,
                Precision::F64 => learned_graph::<f64>(cfg.clone(), c, ex, &mut manifest)?,
            }
        }
    };
    value["id"] = json!(ex.id);
    value["tokens"] = json!(ex.passage.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>());
    let out = manifest.output("graph.json");
    write_json(&out, &value)?;
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&value)?),
        Format::Text => println!("{}", render_text(&value, ex)),
    }
    manifest.finish()?;
    Ok(())
}

// ------------------------------------------------------------- sweep

#[derive(Serialize)]
struct SweepRow {
    hops: usize,
    use_dan: bool,
    epochs: usize,
    dev_bleu4: f64,
    #[serde(rename = "dev_rougeL")]
    dev_rouge_l: f64,
}

fn sweep_hops(g: &Global, hops: &[usize], ablate_dan: bool, band: Option<f64>) -> Result<()> {
    if hops.is_empty() {
        return Err(failure::config("hop list is empty"));
    }
    if let Some(&h) = hops.iter().find(|&&h| h == 0) {
        return Err(failure::config(format!("hop count {h} must be positive")));
    }
    if band.is_some_and(|b| !(b >= 0.0)) {
        return Err(failure::config("band must be a non-negative number"));
    }
    let base = settings::fresh(g)?;
    let train_path = required_path(&base.train_path, "train_path")?;
    let dev_path = required_path(&base.dev_path, "dev_path")?;
    let mut manifest = RunManifest::new("sweep-hops", &base, &g.out_dir);
    let train = load_input(&train_path, &mut manifest)?;
    let dev = load_input(&dev_path, &mut manifest)?;

    let mut runs: Vec<(usize, bool)> = hops.iter().map(|&h| (h, base.use_dan)).collect();
    if ablate_dan {
        runs.push((base.gnn_hops, false));
    }
    let mut rows = Vec::with_capacity(runs.len());
    for (h, dan) in runs {
        let mut cfg = base.clone();
        cfg.gnn_hops = h;
        cfg.use_dan = dan;
        let prefix = if dan { format!("hops-{h}/") } else { format!("hops-{h}-no-dan/") };
        fs::create_dir_all(g.out_dir.join(&prefix))?;
        info!("training {prefix}");
        let s = stage1_dispatch(&cfg, &train, &dev, &prefix, &mut manifest)?;
        rows.push(SweepRow {
            hops: h,
            use_dan: dan,
            epochs: s.epochs,
            dev_bleu4: s.dev_bleu4,
            dev_rouge_l: s.dev_rouge_l,
        });
    }

    let swept: Vec<f64> = rows.iter().take(hops.len()).map(|r| r.dev_bleu4).collect();
    let spread = swept.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - swept.iter().cloned().fold(f64::INFINITY, f64::min);
    let within = band.map(|b| spread <= b);
    let out = manifest.output("sweep.json");
    write_json(
        &out,
        &json!({ "rows": rows, "spread": spread, "band": band, "within_band": within }),
    )?;

    println!("{:>5}  {:>4}  {:>6}  {:>8}  {:>8}", "hops", "DAN", "epochs", "BLEU-4", "ROUGE-L");
    for r in &rows {
        println!(
            "{:>5}  {:>4}  {:>6}  {:>8.4}  {:>8.4}",
            r.hops,
            if r.use_dan { "yes" } else { "no" },
            r.epochs,
            r.dev_bleu4,
            r.dev_rouge_l
        );
    }
    println!("BLEU-4 spread across hop counts {spread:.4}");
    manifest.finish()?;
    if within == Some(false) {
        anyhow::bail!("BLEU-4 spread {spread:.4} exceeds band {}", band.unwrap_or_default());
    }
    Ok(())
}
