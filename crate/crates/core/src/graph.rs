//! Passage graphs: static from dependency parses, dynamic from embeddings.

use rand::Rng;
use serde_json::{json, Value};

use crate::autodiff::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::data::{DepEdge, Example};
use crate::error::{Error, Result};
use crate::layers::glorot;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMode {
    Static,
    Dynamic,
}

impl std::str::FromStr for GraphMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(GraphMode::Static),
            "dynamic" => Ok(GraphMode::Dynamic),
            other => Err(Error::InvalidArgument(format!("unknown graph mode {other:?}"))),
        }
    }
}

/// Directed, unweighted graph over passage tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaticGraph {
    pub n: usize,
    /// Sorted, duplicate-free `(from, to)` pairs.
    pub edges: Vec<(usize, usize)>,
    /// `incoming[v]`: nodes with an edge into `v`.
    pub incoming: Vec<Vec<usize>>,
    /// `outgoing[v]`: nodes `v` points to.
    pub outgoing: Vec<Vec<usize>>,
}

impl StaticGraph {
    pub fn from_edges(n: usize, raw: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (u, v) in raw {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!("edge ({u},{v}) outside {n} nodes")));
            }
            if u != v {
                edges.push((u, v));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        for &(u, v) in &edges {
            outgoing[u].push(v);
            incoming[v].push(u);
        }
        Ok(StaticGraph {
            n,
            edges,
            incoming,
            outgoing,
        })
    }

    /// Row-stochastic matrix averaging each node with its neighbors in one
    /// direction (`incoming` when true).
    pub fn mean_matrix<T: Scalar>(&self, incoming: bool) -> Tensor<T> {
        let lists = if incoming { &self.incoming } else { &self.outgoing };
        let mut m = Tensor::zeros(self.n, self.n);
        for (v, nb) in lists.iter().enumerate() {
            let w = T::c(1.0 / (nb.len() + 1) as f64);
            m.set(v, v, w);
            for &u in nb {
                m.set(v, u, w);
            }
        }
        m
    }

    pub fn to_json(&self) -> Value {
        json!({ "mode": "static", "nodes": self.n, "edges": self.edges })
    }
}

/// Dependency arcs head → dependent plus one link from the last token of
/// each sentence to the first token of the next.
pub fn build_static(example: &Example) -> Result<StaticGraph> {
    let edges = example.dependency_edges.as_ref().ok_or_else(|| {
        Error::MissingDependencies(format!(
            "example {:?} has no dependency_edges; use the dynamic graph mode instead",
            example.id
        ))
    })?;
    let n = example.passage_len();
    let starts = &example.sentence_starts;
    let boundary = starts.iter().skip(1).map(|&s| (s - 1, s));
    StaticGraph::from_edges(n, edges.iter().map(|DepEdge(h, d, _)| (*h, *d)).chain(boundary))
}

/// Per row, the diagonal plus the `k − 1` largest other entries (ties go to
/// the lower column index).
pub fn knn_mask<T: Scalar>(scores: &Tensor<T>, k: usize) -> Vec<bool> {
    let n = scores.rows();
    let mut keep = vec![false; n * n];
    for v in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&u| u != v).collect();
        others.sort_by(|&a, &b| {
            scores
                .at(v, b)
                .partial_cmp(&scores.at(v, a))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        keep[v * n + v] = true;
        for &u in others.iter().take(k.saturating_sub(1)) {
            keep[v * n + u] = true;
        }
    }
    keep
}

fn transpose_mask(mask: &[bool], n: usize) -> Vec<bool> {
    (0..n * n).map(|i| mask[(i % n) * n + i / n]).collect()
}

/// Weighted graph learned from embeddings.
#[derive(Clone, Debug)]
pub struct DynamicGraph {
    pub n: usize,
    pub k: usize,
    /// Dense scores `A`.
    pub scores: Var,
    /// Retained entries of `A`, row-major N × N.
    pub kept: Vec<bool>,
    /// `A⊣`: row-softmax over the retained entries of each row of `A`.
    pub incoming: Var,
    /// `A⊢`: row-softmax over the retained entries of each row of `Aᵀ`.
    pub outgoing: Var,
}

impl DynamicGraph {
    pub fn to_json<T: Scalar>(&self, tape: &Tape<T>) -> Value {
        let list = |v: Var, mask: &[bool]| -> Vec<(usize, usize, f64)> {
            let t = tape.value(v);
            (0..self.n * self.n)
                .filter(|&i| mask[i])
                .map(|i| (i / self.n, i % self.n, t.data()[i].f64()))
                .collect()
        };
        let out_mask = transpose_mask(&self.kept, self.n);
        json!({
            "mode": "dynamic",
            "nodes": self.n,
            "k": self.k,
            "incoming": list(self.incoming, &self.kept),
            "outgoing": list(self.outgoing, &out_mask),
        })
    }
}

/// Projection `U` used to score node pairs.
#[derive(Clone, Debug)]
pub struct GraphLearner {
    pub u: ParamId,
    pub input_dim: usize,
    pub proj_dim: usize,
}

impl GraphLearner {
    pub fn new<T: Scalar, R: Rng>(store: &mut ParamStore<T>, input_dim: usize, proj_dim: usize, rng: &mut R) -> Result<Self> {
        Ok(GraphLearner {
            u: store.add("graph.u", glorot(input_dim, proj_dim, rng))?,
            input_dim,
            proj_dim,
        })
    }

    /// Builds the graph from the word-level passage embedding (N rows).
    pub fn build<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, h: Var, k: usize) -> Result<DynamicGraph> {
        if k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        let n = tape.value(h).rows();
        if n == 0 {
            return Err(Error::InvalidArgument("cannot build a graph with no nodes".into()));
        }
        let k = if k > n {
            log::warn!("K = {k} exceeds the {n} passage nodes; using K = {n}");
            n
        } else {
            k
        };
        let u = tape.param(store, self.u);
        let p = tape.matmul(h, u)?;
        let p = tape.relu(p);
        let scores = tape.matmul_nt(p, p)?;
        sparsify(tape, scores, k)
    }
}

/// Keeps the `k` nearest neighbors per row of the N × N `scores` and
/// normalizes both directions.
pub fn sparsify<T: Scalar>(tape: &mut Tape<T>, scores: Var, k: usize) -> Result<DynamicGraph> {
    let n = tape.value(scores).rows();
    if k == 0 || k > n || tape.value(scores).cols() != n {
        return Err(Error::InvalidArgument(format!("cannot keep {k} neighbors in a {n}-node graph")));
    }
    let kept = knn_mask(tape.value(scores), k);
    let incoming = tape.softmax(scores, 1, Some(&kept))?;
    let st = tape.transpose(scores);
    let outgoing = tape.softmax(st, 1, Some(&transpose_mask(&kept, n)))?;
    Ok(DynamicGraph {
        n,
        k,
        scores,
        kept,
        incoming,
        outgoing,
    })
}

/// Either kind of passage graph.
#[derive(Clone, Debug)]
pub enum PassageGraph {
    Static(StaticGraph),
    Dynamic(DynamicGraph),
}

impl PassageGraph {
    pub fn nodes(&self) -> usize {
        match self {
            PassageGraph::Static(g) => g.n,
            PassageGraph::Dynamic(g) => g.n,
        }
    }
}
