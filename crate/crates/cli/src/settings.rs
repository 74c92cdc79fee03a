//! Configuration assembly: file, overrides and seed, optionally on top of a
//! checkpoint's saved configuration.

use std::path::Path;

use anyhow::Result;

use g2sqg::config::Config;
use g2sqg::training::read_manifest;
use g2sqg::Precision;

use crate::failure;
use crate::Global;

/// Keys fixed by a trained model's parameter shapes.
pub const ARCHITECTURE: &[&str] = &[
    "word_dim",
    "vocab_cap",
    "case_dim",
    "pos_dim",
    "ner_dim",
    "hidden_size",
    "align_dim",
    "graph_learner_dim",
    "graph_dim",
    "decoder_hidden",
    "attn_dim",
    "gnn_hops",
    "gnn_direction",
    "use_dan",
    "graph_mode",
    "precision",
];

fn user_pairs(g: &Global) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    if let Some(path) = &g.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| failure::config(format!("cannot read config {}: {e}", path.display())))?;
        pairs.extend(Config::pairs(&text)?);
    }
    for kv in &g.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| failure::config(format!("override {kv:?} is not key=value")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Defaults, then the config file, then overrides, then `--seed`.
pub fn fresh(g: &Global) -> Result<Config> {
    let mut cfg = Config::default();
    for (k, v) in user_pairs(g)? {
        cfg.set(&k, &v)?;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The configuration saved in `checkpoint` with the user's settings applied.
/// Architecture keys may be restated but not changed.
pub fn from_checkpoint(g: &Global, checkpoint: &Path) -> Result<Config> {
    let saved = Config::parse(&read_manifest(checkpoint)?.config)?;
    let mut cfg = saved.clone();
    for (k, v) in user_pairs(g)? {
        cfg.set(&k, &v)?;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    for key in ARCHITECTURE {
        let (old, new) = (saved.get(key), cfg.get(key));
        if old != new {
            return Err(failure::config(format!(
                "{key} = {} conflicts with the checkpoint's {}",
                new.unwrap_or_default(),
                old.unwrap_or_default()
            )));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn checkpoint_precision(checkpoint: &Path) -> Result<Precision> {
    match read_manifest(checkpoint)?.dtype.as_str() {
        "f32" => Ok(Precision::F32),
        "f64" => Ok(Precision::F64),
        other => Err(failure::data(format!("checkpoint holds unsupported dtype {other}"))),
    }
}
