use std::collections::HashMap;
use std::fmt::Write as _;

use crate::autodiff::params::{ParamId, ParamStore};
use crate::autodiff::tensor::{matmul_into, matmul_nt_into, matmul_tn_into, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op<T> {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulNt(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulConst(Var, Tensor<T>),
    ScaleVar(Var, Var),
    Affine(Var, T),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Log(Var),
    LogFloor(Var, T),
    Softmax(Var, usize),
    Transpose(Var),
    HCat(Vec<Var>),
    VCat(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    GatherRows(Var, Vec<usize>),
    Sum(Var),
    MaxRows(Var, Vec<usize>),
    Min(Var, Var),
    Scatter(Var, Vec<usize>),
    Pick(Var, usize),
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Param(_) => "param",
            Op::MatMul(..) => "matmul",
            Op::MatMulNt(..) => "matmul_nt",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::AddRow(..) => "add_row",
            Op::MulConst(..) => "mul_const",
            Op::ScaleVar(..) => "scale_var",
            Op::Affine(..) => "affine",
            Op::Relu(_) => "relu",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Exp(_) => "exp",
            Op::Log(_) => "log",
            Op::LogFloor(..) => "log_floor",
            Op::Softmax(..) => "softmax",
            Op::Transpose(_) => "transpose",
            Op::HCat(_) => "hcat",
            Op::VCat(_) => "vcat",
            Op::SliceCols(..) => "slice_cols",
            Op::SliceRows(..) => "slice_rows",
            Op::GatherRows(..) => "gather_rows",
            Op::Sum(_) => "sum",
            Op::MaxRows(..) => "max_rows",
            Op::Min(..) => "min",
            Op::Scatter(..) => "scatter",
            Op::Pick(..) => "pick",
        }
    }

    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf | Op::Param(_) => vec![],
            Op::MatMul(a, b)
            | Op::MatMulNt(a, b)
            | Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::AddRow(a, b)
            | Op::ScaleVar(a, b)
            | Op::Min(a, b) => vec![*a, *b],
            Op::HCat(v) | Op::VCat(v) => v.clone(),
            Op::MulConst(a, _)
            | Op::Affine(a, _)
            | Op::Relu(a)
            | Op::Sigmoid(a)
            | Op::Tanh(a)
            | Op::Exp(a)
            | Op::Log(a)
            | Op::LogFloor(a, _)
            | Op::Softmax(a, _)
            | Op::Transpose(a)
            | Op::SliceCols(a, _)
            | Op::SliceRows(a, _)
            | Op::GatherRows(a, _)
            | Op::Sum(a)
            | Op::MaxRows(a, _)
            | Op::Scatter(a, _)
            | Op::Pick(a, _) => vec![*a],
        }
    }
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Define-by-run record of tensor operations.
///
/// A fresh tape is built for every forward pass. Nodes are appended in
/// execution order, so the node list is already topologically sorted and
/// [`Tape::backward`] is a single reverse sweep.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    params: HashMap<ParamId, Var>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Adjoints produced by [`Tape::backward`], one slot per tape node.
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
    params: Vec<(ParamId, Var)>,
    shapes: Vec<(usize, usize)>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of the loss with respect to `v`; zeros if `v` is unreachable.
    pub fn get(&self, v: Var) -> Tensor<T> {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[v.0];
                Tensor::zeros(r, c)
            }
        }
    }

    /// Gradient for every parameter that was placed on the tape.
    pub fn param_grads(&self) -> impl Iterator<Item = (ParamId, &Tensor<T>)> {
        self.params
            .iter()
            .filter_map(|&(id, v)| self.grads[v.0].as_ref().map(|g| (id, g)))
    }
}

fn accum<T: Scalar>(slot: &mut Option<Tensor<T>>, g: Tensor<T>) {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => *slot = Some(g),
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            params: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn dims(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dims()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        let needs_grad = match &op {
            Op::Leaf => false,
            Op::Param(_) => true,
            other => other.inputs().iter().any(|i| self.nodes[i.0].needs_grad),
        };
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a constant (no gradient flows into it).
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Records a differentiable leaf that is not a registered parameter.
    /// Its gradient is available through [`Gradients::get`].
    pub fn variable(&mut self, value: Tensor<T>) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Places a parameter on the tape; repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.push(store.get(id).value.clone(), Op::Param(id));
        self.params.insert(id, v);
        v
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) && self.dims(a) != self.dims(b) {
            return Err(Error::shape(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// `a · bᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims(a);
        let (n, k2) = self.dims(b);
        if k != k2 {
            return Err(Error::shape("matmul_nt", self.shape(a), self.shape(b)));
        }
        let mut out = vec![T::zero(); m * n];
        matmul_nt_into(self.value(a).data(), self.value(b).data(), &mut out, m, k, n);
        Ok(self.push(Tensor::from_rows(m, n, out)?, Op::MatMulNt(a, b)))
    }

    fn binary(&mut self, op: Op<T>, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Result<Var> {
        self.same_shape(op.name(), a, b)?;
        let out = self.value(a).zip_map(self.value(b), f);
        Ok(self.push(out, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Op::Add(a, b), a, b, |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Op::Sub(a, b), a, b, |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Op::Mul(a, b), a, b, |x, y| x * y)
    }

    pub fn min(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Op::Min(a, b), a, b, |x, y| if x <= y { x } else { y })
    }

    /// Adds the 1×n `row` to every row of the m×n `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (m, n) = self.dims(a);
        if self.dims(row) != (1, n) {
            return Err(Error::shape("add_row", self.shape(a), self.shape(row)));
        }
        let r = self.value(row).data().to_vec();
        let mut out = self.value(a).clone();
        for i in 0..m {
            for (o, &x) in out.data_mut()[i * n..(i + 1) * n].iter_mut().zip(&r) {
                *o += x;
            }
        }
        Ok(self.push(out, Op::AddRow(a, row)))
    }

    /// Elementwise product with a constant of the same shape or a 1×n row
    /// broadcast over rows.
    pub fn mul_const(&mut self, a: Var, k: Tensor<T>) -> Result<Var> {
        let (m, n) = self.dims(a);
        let kd = k.dims();
        if kd != (m, n) && kd != (1, n) {
            return Err(Error::shape("mul_const", self.shape(a), k.shape()));
        }
        let mut out = self.value(a).clone();
        let kdata = k.data();
        for (i, o) in out.data_mut().iter_mut().enumerate() {
            *o *= if kd == (1, n) { kdata[i % n] } else { kdata[i] };
        }
        Ok(self.push(out, Op::MulConst(a, k)))
    }

    /// Multiplies every entry of `a` by the 1×1 variable `s`.
    pub fn scale_var(&mut self, a: Var, s: Var) -> Result<Var> {
        if self.value(s).len() != 1 {
            return Err(Error::shape("scale_var", self.shape(a), self.shape(s)));
        }
        let k = self.value(s).item();
        let out = self.value(a).map(|x| x * k);
        Ok(self.push(out, Op::ScaleVar(a, s)))
    }

    /// `k·a + shift` with constant `k` and `shift`.
    pub fn affine(&mut self, a: Var, k: T, shift: T) -> Var {
        let out = self.value(a).map(|x| k * x + shift);
        self.push(out, Op::Affine(a, k))
    }

    pub fn scale(&mut self, a: Var, k: T) -> Var {
        self.affine(a, k, T::zero())
    }

    /// `1 − a`.
    pub fn one_minus(&mut self, a: Var) -> Var {
        self.affine(a, -T::one(), T::one())
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| if x > T::zero() { x } else { T::zero() });
        self.push(out, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.tanh());
        self.push(out, Op::Tanh(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.exp());
        self.push(out, Op::Exp(a))
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        if let Some(&bad) = self.value(a).data().iter().find(|&&x| !(x > T::zero())) {
            return Err(Error::Domain {
                op: "log",
                value: bad.f64(),
            });
        }
        let out = self.value(a).map(|x| x.ln());
        Ok(self.push(out, Op::Log(a)))
    }

    /// `log(max(a, floor))`; no gradient flows where the floor is active.
    pub fn log_floor(&mut self, a: Var, floor: T) -> Var {
        let out = self.value(a).map(|x| x.max(floor).ln());
        self.push(out, Op::LogFloor(a, floor))
    }

    /// Numerically stabilised softmax. `axis = 1` normalises each row,
    /// `axis = 0` each column. Entries whose `mask` flag is false are
    /// excluded (treated as −∞) and come out exactly zero.
    pub fn softmax(&mut self, a: Var, axis: usize, mask: Option<&[bool]>) -> Result<Var> {
        let (m, n) = self.dims(a);
        if axis > 1 {
            return Err(Error::InvalidArgument(format!("softmax axis {axis}")));
        }
        if let Some(mk) = mask {
            if mk.len() != m * n {
                return Err(Error::shape("softmax", self.shape(a), &[mk.len()]));
            }
        }
        let x = self.value(a).data();
        let mut out = vec![T::zero(); m * n];
        let (slices, len) = if axis == 1 { (m, n) } else { (n, m) };
        for s in 0..slices {
            let idx = |j: usize| if axis == 1 { s * n + j } else { j * n + s };
            let valid = |j: usize| mask.map_or(true, |mk| mk[idx(j)]);
            let mut max = T::neg_infinity();
            for j in 0..len {
                if valid(j) && x[idx(j)] > max {
                    max = x[idx(j)];
                }
            }
            if max == T::neg_infinity() {
                return Err(Error::DegenerateSlice { slice: s });
            }
            let mut z = T::zero();
            for j in 0..len {
                if valid(j) {
                    let e = (x[idx(j)] - max).exp();
                    out[idx(j)] = e;
                    z += e;
                }
            }
            for j in 0..len {
                out[idx(j)] /= z;
            }
        }
        let out = Tensor::new(self.shape(a).to_vec(), out)?;
        Ok(self.push(out, Op::Softmax(a, axis)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a))
    }

    /// Concatenates along columns (feature axis).
    pub fn hcat(&mut self, parts: &[Var]) -> Result<Var> {
        let m = self.dims(parts[0]).0;
        for &p in parts {
            if self.dims(p).0 != m {
                return Err(Error::shape("hcat", self.shape(parts[0]), self.shape(p)));
            }
        }
        let total: usize = parts.iter().map(|&p| self.dims(p).1).sum();
        let mut out = Vec::with_capacity(m * total);
        for i in 0..m {
            for &p in parts {
                out.extend_from_slice(self.value(p).row_slice(i));
            }
        }
        Ok(self.push(Tensor::from_rows(m, total, out)?, Op::HCat(parts.to_vec())))
    }

    /// Concatenates along rows.
    pub fn vcat(&mut self, parts: &[Var]) -> Result<Var> {
        let n = self.dims(parts[0]).1;
        for &p in parts {
            if self.dims(p).1 != n {
                return Err(Error::shape("vcat", self.shape(parts[0]), self.shape(p)));
            }
        }
        let mut out = Vec::new();
        for &p in parts {
            out.extend_from_slice(self.value(p).data());
        }
        let m = parts.iter().map(|&p| self.dims(p).0).sum();
        Ok(self.push(Tensor::from_rows(m, n, out)?, Op::VCat(parts.to_vec())))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let (m, n) = self.dims(a);
        if start > end || end > n {
            return Err(Error::shape("slice_cols", self.shape(a), &[start, end]));
        }
        let v = self.value(a);
        let t = Tensor::from_fn(m, end - start, |r, c| v.at(r, start + c));
        Ok(self.push(t, Op::SliceCols(a, start)))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let (m, n) = self.dims(a);
        if start > end || end > m {
            return Err(Error::shape("slice_rows", self.shape(a), &[start, end]));
        }
        let data = self.value(a).data()[start * n..end * n].to_vec();
        Ok(self.push(Tensor::from_rows(end - start, n, data)?, Op::SliceRows(a, start)))
    }

    pub fn row(&mut self, a: Var, r: usize) -> Result<Var> {
        self.slice_rows(a, r, r + 1)
    }

    /// Row lookup (embedding gather); indices may repeat.
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let (m, n) = self.dims(a);
        if let Some(&bad) = idx.iter().find(|&&i| i >= m) {
            return Err(Error::shape("gather_rows", self.shape(a), &[bad]));
        }
        let v = self.value(a);
        let mut out = Vec::with_capacity(idx.len() * n);
        for &i in idx {
            out.extend_from_slice(v.row_slice(i));
        }
        Ok(self.push(Tensor::from_rows(idx.len(), n, out)?, Op::GatherRows(a, idx.to_vec())))
    }

    /// Sum of all entries as a 1×1 tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    /// Columnwise maximum over rows (1×n); ties resolve to the lowest row.
    pub fn max_rows(&mut self, a: Var) -> Result<Var> {
        let (m, n) = self.dims(a);
        if m == 0 {
            return Err(Error::shape("max_rows", self.shape(a), &[]));
        }
        let v = self.value(a);
        let mut arg = vec![0usize; n];
        let mut out = v.row_slice(0).to_vec();
        for r in 1..m {
            for c in 0..n {
                if v.at(r, c) > out[c] {
                    out[c] = v.at(r, c);
                    arg[c] = r;
                }
            }
        }
        Ok(self.push(Tensor::row(&out), Op::MaxRows(a, arg)))
    }

    /// Scatters the entries of a 1×n row into a 1×`size` row at `idx`,
    /// summing collisions.
    pub fn scatter(&mut self, a: Var, idx: &[usize], size: usize) -> Result<Var> {
        let (m, n) = self.dims(a);
        if m != 1 || idx.len() != n {
            return Err(Error::shape("scatter", self.shape(a), &[idx.len()]));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= size) {
            return Err(Error::shape("scatter", &[size], &[bad]));
        }
        let mut out = vec![T::zero(); size];
        for (&x, &i) in self.value(a).data().iter().zip(idx) {
            out[i] += x;
        }
        Ok(self.push(Tensor::row(&out), Op::Scatter(a, idx.to_vec())))
    }

    /// Single entry `a[r, c]` as a 1×1 tensor.
    pub fn pick(&mut self, a: Var, r: usize, c: usize) -> Result<Var> {
        let (m, n) = self.dims(a);
        if r >= m || c >= n {
            return Err(Error::shape("pick", self.shape(a), &[r, c]));
        }
        let x = self.value(a).at(r, c);
        Ok(self.push(Tensor::scalar(x), Op::Pick(a, r * n + c)))
    }

    /// Reverse sweep from a scalar loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.value(loss).len() != 1 {
            return Err(Error::NonScalarLoss(self.shape(loss).to_vec()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::new(self.shape(loss).to_vec(), vec![T::one()])?);
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        let mut params: Vec<(ParamId, Var)> = self.params.iter().map(|(&k, &v)| (k, v)).collect();
        params.sort();
        Ok(Gradients {
            grads,
            params,
            shapes: self.nodes.iter().map(|n| n.value.dims()).collect(),
        })
    }

    fn propagate(&self, i: usize, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let node = &self.nodes[i];
        let y = &node.value;
        let val = |v: Var| &self.nodes[v.0].value;
        let wants = |v: Var| self.nodes[v.0].needs_grad;
        let send = |v: Var, t: Tensor<T>, grads: &mut [Option<Tensor<T>>]| {
            if self.nodes[v.0].needs_grad {
                accum(&mut grads[v.0], t);
            }
        };
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (m, k) = val(*a).dims();
                let n = val(*b).cols();
                if wants(*a) {
                    let mut da = vec![T::zero(); m * k];
                    matmul_nt_into(g.data(), val(*b).data(), &mut da, m, n, k);
                    send(*a, Tensor::new(val(*a).shape().to_vec(), da).unwrap(), grads);
                }
                if wants(*b) {
                    let mut db = vec![T::zero(); k * n];
                    matmul_tn_into(val(*a).data(), g.data(), &mut db, k, m, n);
                    send(*b, Tensor::new(val(*b).shape().to_vec(), db).unwrap(), grads);
                }
            }
            Op::MatMulNt(a, b) => {
                // y = a·bᵀ, a: m×k, b: n×k
                let (m, k) = val(*a).dims();
                let n = val(*b).rows();
                if wants(*a) {
                    let mut da = vec![T::zero(); m * k];
                    matmul_into(g.data(), val(*b).data(), &mut da, m, n, k);
                    send(*a, Tensor::new(val(*a).shape().to_vec(), da).unwrap(), grads);
                }
                if wants(*b) {
                    let mut db = vec![T::zero(); n * k];
                    matmul_tn_into(g.data(), val(*a).data(), &mut db, n, m, k);
                    send(*b, Tensor::new(val(*b).shape().to_vec(), db).unwrap(), grads);
                }
            }
            Op::Add(a, b) => {
                send(*a, g.clone(), grads);
                send(*b, g.clone(), grads);
            }
            Op::Sub(a, b) => {
                send(*a, g.clone(), grads);
                send(*b, g.map(|x| -x), grads);
            }
            Op::Mul(a, b) => {
                if wants(*a) {
                    send(*a, g.zip_map(val(*b), |x, y| x * y), grads);
                }
                if wants(*b) {
                    send(*b, g.zip_map(val(*a), |x, y| x * y), grads);
                }
            }
            Op::Min(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                if wants(*a) {
                    let d = Tensor::from_fn(va.rows(), va.cols(), |r, c| {
                        if va.at(r, c) <= vb.at(r, c) {
                            g.at(r, c)
                        } else {
                            T::zero()
                        }
                    });
                    send(*a, d, grads);
                }
                if wants(*b) {
                    let d = Tensor::from_fn(va.rows(), va.cols(), |r, c| {
                        if va.at(r, c) <= vb.at(r, c) {
                            T::zero()
                        } else {
                            g.at(r, c)
                        }
                    });
                    send(*b, d, grads);
                }
            }
            Op::AddRow(a, row) => {
                send(*a, g.clone(), grads);
                if wants(*row) {
                    let (m, n) = g.dims();
                    let mut d = vec![T::zero(); n];
                    for r in 0..m {
                        for (o, &x) in d.iter_mut().zip(g.row_slice(r)) {
                            *o += x;
                        }
                    }
                    send(*row, Tensor::new(val(*row).shape().to_vec(), d).unwrap(), grads);
                }
            }
            Op::MulConst(a, k) => {
                let n = g.cols();
                let broadcast = k.len() != g.len();
                let kd = k.data();
                let mut d = g.clone();
                for (i, o) in d.data_mut().iter_mut().enumerate() {
                    *o *= if broadcast { kd[i % n] } else { kd[i] };
                }
                send(*a, d, grads);
            }
            Op::ScaleVar(a, s) => {
                let k = val(*s).item();
                if wants(*a) {
                    send(*a, g.map(|x| x * k), grads);
                }
                if wants(*s) {
                    let d: T = g.data().iter().zip(val(*a).data()).map(|(&x, &y)| x * y).sum();
                    send(*s, Tensor::new(val(*s).shape().to_vec(), vec![d]).unwrap(), grads);
                }
            }
            Op::Affine(a, k) => send(*a, g.map(|x| x * *k), grads),
            Op::Relu(a) => {
                let d = g.zip_map(val(*a), |x, v| if v > T::zero() { x } else { T::zero() });
                send(*a, d, grads);
            }
            Op::Sigmoid(a) => send(*a, g.zip_map(y, |x, s| x * s * (T::one() - s)), grads),
            Op::Tanh(a) => send(*a, g.zip_map(y, |x, t| x * (T::one() - t * t)), grads),
            Op::Exp(a) => send(*a, g.zip_map(y, |x, e| x * e), grads),
            Op::Log(a) => send(*a, g.zip_map(val(*a), |x, v| x / v), grads),
            Op::LogFloor(a, floor) => {
                let f = *floor;
                send(*a, g.zip_map(val(*a), |x, v| if v > f { x / v } else { T::zero() }), grads)
            }
            Op::Softmax(a, axis) => {
                let (m, n) = y.dims();
                let mut d = vec![T::zero(); m * n];
                let (slices, len) = if *axis == 1 { (m, n) } else { (n, m) };
                for s in 0..slices {
                    let idx = |j: usize| if *axis == 1 { s * n + j } else { j * n + s };
                    let mut dot = T::zero();
                    for j in 0..len {
                        dot += g.data()[idx(j)] * y.data()[idx(j)];
                    }
                    for j in 0..len {
                        d[idx(j)] = y.data()[idx(j)] * (g.data()[idx(j)] - dot);
                    }
                }
                send(*a, Tensor::new(y.shape().to_vec(), d).unwrap(), grads);
            }
            Op::Transpose(a) => {
                let t = g.transpose();
                send(*a, Tensor::new(val(*a).shape().to_vec(), t.into_data()).unwrap(), grads)
            }
            Op::HCat(parts) => {
                let m = g.rows();
                let mut off = 0;
                for &p in parts {
                    let w = val(p).cols();
                    if wants(p) {
                        let d = Tensor::from_fn(m, w, |r, c| g.at(r, off + c));
                        send(p, Tensor::new(val(p).shape().to_vec(), d.into_data()).unwrap(), grads);
                    }
                    off += w;
                }
            }
            Op::VCat(parts) => {
                let mut off = 0;
                for &p in parts {
                    let len = val(p).len();
                    if wants(p) {
                        let d = g.data()[off..off + len].to_vec();
                        send(p, Tensor::new(val(p).shape().to_vec(), d).unwrap(), grads);
                    }
                    off += len;
                }
            }
            Op::SliceCols(a, start) => {
                let (m, n) = val(*a).dims();
                let w = g.cols();
                let mut d = Tensor::zeros(m, n);
                for r in 0..m {
                    for c in 0..w {
                        d.set(r, start + c, g.at(r, c));
                    }
                }
                send(*a, Tensor::new(val(*a).shape().to_vec(), d.into_data()).unwrap(), grads);
            }
            Op::SliceRows(a, start) => {
                let n = val(*a).cols();
                let mut d = vec![T::zero(); val(*a).len()];
                d[start * n..start * n + g.len()].copy_from_slice(g.data());
                send(*a, Tensor::new(val(*a).shape().to_vec(), d).unwrap(), grads);
            }
            Op::GatherRows(a, idx) => {
                let n = val(*a).cols();
                let mut d = vec![T::zero(); val(*a).len()];
                for (r, &i) in idx.iter().enumerate() {
                    for c in 0..n {
                        d[i * n + c] += g.at(r, c);
                    }
                }
                send(*a, Tensor::new(val(*a).shape().to_vec(), d).unwrap(), grads);
            }
            Op::Sum(a) => {
                let k = g.item();
                let (r, c) = val(*a).dims();
                let d = Tensor::full(r, c, k);
                send(*a, Tensor::new(val(*a).shape().to_vec(), d.into_data()).unwrap(), grads);
            }
            Op::MaxRows(a, arg) => {
                let (m, n) = val(*a).dims();
                let mut d = Tensor::zeros(m, n);
                for (c, &r) in arg.iter().enumerate() {
                    d.set(r, c, g.data()[c]);
                }
                send(*a, Tensor::new(val(*a).shape().to_vec(), d.into_data()).unwrap(), grads);
            }
            Op::Scatter(a, idx) => {
                let d: Vec<T> = idx.iter().map(|&i| g.data()[i]).collect();
                send(*a, Tensor::new(val(*a).shape().to_vec(), d).unwrap(), grads);
            }
            Op::Pick(a, flat) => {
                let mut d = vec![T::zero(); val(*a).len()];
                d[*flat] = g.item();
                send(*a, Tensor::new(val(*a).shape().to_vec(), d).unwrap(), grads);
            }
        }
    }

    /// Text listing of the recorded operations, one node per line.
    pub fn dump_topology(&self) -> String {
        let mut s = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let inputs: Vec<String> = n.op.inputs().iter().map(|v| format!("%{}", v.0)).collect();
            let name = match &n.op {
                Op::Param(id) => format!("param#{}", id.index()),
                op => op.name().to_string(),
            };
            let _ = writeln!(
                s,
                "%{i} = {}({}) shape={:?}{}",
                name,
                inputs.join(", "),
                n.value.shape(),
                if n.needs_grad { "" } else { " const" }
            );
        }
        s
    }
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
