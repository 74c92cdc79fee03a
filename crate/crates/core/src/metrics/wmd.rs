use std::collections::HashMap;

use crate::data::{EmbeddingTable, Vocabulary};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Source of word vectors for the transport cost.
pub trait VectorLookup {
    fn vector(&self, word: &str) -> Option<Vec<f64>>;
}

impl VectorLookup for HashMap<String, Vec<f64>> {
    fn vector(&self, word: &str) -> Option<Vec<f64>> {
        self.get(word).cloned()
    }
}

/// Fixed word vectors of the vocabulary; reserved entries are not words.
pub struct TableLookup<'a, T> {
    pub vocab: &'a Vocabulary,
    pub table: &'a EmbeddingTable<T>,
}

impl<T: Scalar> VectorLookup for TableLookup<'_, T> {
    fn vector(&self, word: &str) -> Option<Vec<f64>> {
        let i = self.vocab.get(word)?;
        if i < crate::data::vocab::RESERVED.len() {
            return None;
        }
        Some(self.table.row(i).iter().map(|x| x.f64()).collect())
    }
}

/// Normalized bag of words over tokens with a vector.
fn nbow<L: VectorLookup, S: AsRef<str>>(tokens: &[S], lookup: &L) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut order: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut vecs = Vec::new();
    let mut total = 0usize;
    for t in tokens {
        let t = t.as_ref();
        if let Some(c) = counts.get_mut(t) {
            *c += 1;
            total += 1;
        } else if let Some(v) = lookup.vector(t) {
            counts.insert(t, 1);
            order.push(t);
            vecs.push(v);
            total += 1;
        }
    }
    let mass = order.iter().map(|w| counts[w] as f64 / total as f64).collect();
    (mass, vecs)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Word Mover's Distance between two token sequences.
pub fn wmd<L: VectorLookup, S: AsRef<str>>(hyp: &[S], reference: &[S], lookup: &L) -> Result<f64> {
    let (a, va) = nbow(hyp, lookup);
    let (b, vb) = nbow(reference, lookup);
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("WMD is undefined: a sentence has no word with a vector".into()));
    }
    let cost: Vec<Vec<f64>> = va.iter().map(|x| vb.iter().map(|y| euclid(x, y)).collect()).collect();
    Ok(transport(&a, &b, &cost).0)
}

const TOL: f64 = 1e-14;

/// Exact min-cost transport by successive shortest paths. Returns the
/// optimal cost and flow matrix. `supply` and `demand` must have equal sums.
pub fn transport(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
    let (m, n) = (supply.len(), demand.len());
    // nodes: 0 = source, 1..=m suppliers, m+1..=m+n consumers, m+n+1 = sink
    let nodes = m + n + 2;
    let sink = nodes - 1;
    struct Edge {
        to: usize,
        cap: f64,
        cost: f64,
    }
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj = vec![Vec::new(); nodes];
    let add = |edges: &mut Vec<Edge>, adj: &mut Vec<Vec<usize>>, u: usize, v: usize, cap: f64, c: f64| {
        adj[u].push(edges.len());
        edges.push(Edge { to: v, cap, cost: c });
        adj[v].push(edges.len());
        edges.push(Edge { to: u, cap: 0.0, cost: -c });
    };
    for (i, &s) in supply.iter().enumerate() {
        add(&mut edges, &mut adj, 0, 1 + i, s, 0.0);
    }
    let mut cell = vec![vec![0usize; n]; m];
    for i in 0..m {
        for j in 0..n {
            cell[i][j] = edges.len();
            add(&mut edges, &mut adj, 1 + i, 1 + m + j, f64::INFINITY, cost[i][j]);
        }
    }
    for (j, &d) in demand.iter().enumerate() {
        add(&mut edges, &mut adj, 1 + m + j, sink, d, 0.0);
    }
    let mut total = 0.0;
    loop {
        // Bellman-Ford over the residual graph
        let mut dist = vec![f64::INFINITY; nodes];
        let mut via = vec![usize::MAX; nodes];
        dist[0] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u] == f64::INFINITY {
                    continue;
                }
                for &e in &adj[u] {
                    let ed = &edges[e];
                    if ed.cap > TOL && dist[u] + ed.cost < dist[ed.to] - 1e-15 {
                        dist[ed.to] = dist[u] + ed.cost;
                        via[ed.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink] == f64::INFINITY {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while v != 0 {
            let e = via[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != 0 {
            let e = via[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            v = edges[e ^ 1].to;
        }
        total += push * dist[sink];
    }
    let flow = (0..m).map(|i| (0..n).map(|j| edges[cell[i][j] ^ 1].cap).collect()).collect();
    (total, flow)
}
