//! Bidirectional gated graph neural network encoder.

use rand::Rng;

use crate::autodiff::{ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::PassageGraph;
use crate::layers::{GruCell, Linear};
use crate::scalar::Scalar;

/// Which neighborhoods feed each hop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Both directions, fused every hop.
    Bi,
    /// Incoming neighbors only.
    Forward,
    /// Outgoing neighbors only.
    Backward,
    /// Each direction run separately; states concatenated after the last hop.
    ConcatAtEnd,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bi" => Ok(Direction::Bi),
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            "concat-at-end" => Ok(Direction::ConcatAtEnd),
            other => Err(Error::InvalidArgument(format!("unknown GNN direction {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregate {
    Incoming,
    Outgoing,
}

/// Mean (static) or weighted (dynamic) neighborhood aggregate of `h`,
/// self included.
pub fn aggregate<T: Scalar>(tape: &mut Tape<T>, graph: &PassageGraph, h: Var, dir: Aggregate) -> Result<Var> {
    let incoming = dir == Aggregate::Incoming;
    let m = match graph {
        PassageGraph::Static(g) => tape.constant(g.mean_matrix(incoming)),
        PassageGraph::Dynamic(g) => {
            if incoming {
                g.incoming
            } else {
                g.outgoing
            }
        }
    };
    tape.matmul(m, h)
}

/// Gated sum `z⊙a + (1 − z)⊙b` with `z = σ([a; b; a⊙b; a−b]·W + b)`.
#[derive(Clone, Debug)]
pub struct Fuse {
    pub gate: Linear,
}

impl Fuse {
    pub fn new<T: Scalar, R: Rng>(store: &mut ParamStore<T>, name: &str, dim: usize, rng: &mut R) -> Result<Self> {
        Ok(Fuse {
            gate: Linear::new(store, name, 4 * dim, dim, true, rng)?,
        })
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, a: Var, b: Var) -> Result<Var> {
        let prod = tape.mul(a, b)?;
        let diff = tape.sub(a, b)?;
        let feats = tape.hcat(&[a, b, prod, diff])?;
        let z = self.gate.forward(tape, store, feats)?;
        let z = tape.sigmoid(z);
        let za = tape.mul(z, a)?;
        let rest = tape.one_minus(z);
        let zb = tape.mul(rest, b)?;
        tape.add(za, zb)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiGgnnConfig {
    pub hidden: usize,
    pub graph_dim: usize,
    pub hops: usize,
    pub direction: Direction,
}

#[derive(Clone, Debug)]
pub struct EncoderOutput {
    /// N × hidden final node states.
    pub node_states: Var,
    /// 1 × graph_dim pooled graph embedding.
    pub graph_embedding: Var,
    /// Node states after each hop.
    pub hops: Vec<Var>,
}

#[derive(Clone, Debug)]
pub struct BiGgnn {
    pub cfg: BiGgnnConfig,
    pub fuse: Fuse,
    pub gru: GruCell,
    /// Second cell for the outgoing pass in [`Direction::ConcatAtEnd`].
    pub gru_outgoing: Option<GruCell>,
    /// Maps concatenated states back to `hidden` in [`Direction::ConcatAtEnd`].
    pub merge: Option<Linear>,
    pub project: Linear,
}

impl BiGgnn {
    pub fn new<T: Scalar, R: Rng>(store: &mut ParamStore<T>, cfg: BiGgnnConfig, rng: &mut R) -> Result<Self> {
        if cfg.hops == 0 {
            return Err(Error::InvalidArgument("the GNN needs at least one hop".into()));
        }
        let h = cfg.hidden;
        let concat = cfg.direction == Direction::ConcatAtEnd;
        Ok(BiGgnn {
            fuse: Fuse::new(store, "gnn.fuse", h, rng)?,
            gru: GruCell::new(store, "gnn.gru", h, h, rng)?,
            gru_outgoing: if concat { Some(GruCell::new(store, "gnn.gru_out", h, h, rng)?) } else { None },
            merge: if concat { Some(Linear::new(store, "gnn.merge", 2 * h, h, true, rng)?) } else { None },
            project: Linear::new(store, "gnn.project", h, cfg.graph_dim, true, rng)?,
            cfg,
        })
    }

    /// One hop of the interleaved bidirectional update.
    pub fn hop<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, graph: &PassageGraph, h: Var) -> Result<Var> {
        let agg = match self.cfg.direction {
            Direction::Bi => {
                let a = aggregate(tape, graph, h, Aggregate::Incoming)?;
                let b = aggregate(tape, graph, h, Aggregate::Outgoing)?;
                self.fuse.forward(tape, store, a, b)?
            }
            Direction::Forward => aggregate(tape, graph, h, Aggregate::Incoming)?,
            Direction::Backward | Direction::ConcatAtEnd => aggregate(tape, graph, h, Aggregate::Outgoing)?,
        };
        self.gru.step(tape, store, agg, h)
    }

    pub fn encode<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, graph: &PassageGraph, x: Var) -> Result<EncoderOutput> {
        let n = tape.value(x).rows();
        if n == 0 || graph.nodes() != n {
            return Err(Error::InvalidArgument(format!(
                "graph has {} nodes but the passage has {n} rows",
                graph.nodes()
            )));
        }
        let mut hops = Vec::with_capacity(self.cfg.hops);
        let mut h = x;
        let node_states = if let (Some(gru_out), Some(merge)) = (&self.gru_outgoing, &self.merge) {
            let mut hin = x;
            for _ in 0..self.cfg.hops {
                let a = aggregate(tape, graph, hin, Aggregate::Incoming)?;
                hin = self.gru.step(tape, store, a, hin)?;
                let b = aggregate(tape, graph, h, Aggregate::Outgoing)?;
                h = gru_out.step(tape, store, b, h)?;
                hops.push(hin);
            }
            let both = tape.hcat(&[hin, h])?;
            merge.forward(tape, store, both)?
        } else {
            for _ in 0..self.cfg.hops {
                h = self.hop(tape, store, graph, h)?;
                hops.push(h);
            }
            h
        };
        let projected = self.project.forward(tape, store, node_states)?;
        let graph_embedding = tape.max_rows(projected)?;
        Ok(EncoderOutput {
            node_states,
            graph_embedding,
            hops,
        })
    }
}
