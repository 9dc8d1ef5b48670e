//! Define-by-run reverse-mode differentiation.
//!
//! Every operation on a [`Var`] computes its value eagerly and appends a node
//! to the owning [`Graph`]. [`Graph::grad`] walks the nodes in reverse and
//! expresses each local gradient rule with the same differentiable operations,
//! so the returned gradients are themselves graph values and can be
//! differentiated again (needed by the critic's input-gradient penalty).

use std::cell::RefCell;
use std::ops;

use super::tensor::{self, Real, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
enum Op<F> {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Scale(usize, F),
    AddScalar(usize),
    AddTiled(usize, usize),
    MulTiled(usize, usize),
    Tile(usize),
    SumTiles(usize),
    RepeatRows(usize, usize),
    SumRowGroups(usize, usize),
    MatMul { a: usize, b: usize, ta: bool, tb: bool },
    Reshape(usize),
    SumAll(usize),
    ExpandScalar(usize),
    SumLast(usize),
    ExpandLast(usize),
    LeakyRelu(usize, F),
    Tanh(usize),
    Sigmoid(usize),
    Exp(usize),
    Ln(usize),
    Sqrt(usize),
    Softplus(usize),
    Softmax(usize),
    Concat(usize, usize),
    Slice { a: usize, start: usize },
    Pad { a: usize, start: usize },
    Unfold { a: usize, k: usize, pad: usize },
    Fold { a: usize, k: usize, pad: usize },
}

impl<F> Op<F> {
    fn parents(&self) -> [Option<usize>; 2] {
        use Op::*;
        match *self {
            Leaf => [None, None],
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | AddTiled(a, b) | MulTiled(a, b)
            | Concat(a, b) => [Some(a), Some(b)],
            MatMul { a, b, .. } => [Some(a), Some(b)],
            Neg(a) | Scale(a, _) | AddScalar(a) | Tile(a) | SumTiles(a)
            | RepeatRows(a, _) | SumRowGroups(a, _) | Reshape(a) | SumAll(a)
            | ExpandScalar(a) | SumLast(a) | ExpandLast(a) | LeakyRelu(a, _) | Tanh(a)
            | Sigmoid(a) | Exp(a) | Ln(a) | Sqrt(a) | Softplus(a) | Softmax(a) => [Some(a), None],
            Slice { a, .. } | Pad { a, .. } | Unfold { a, .. } | Fold { a, .. } => [Some(a), None],
        }
    }
}

struct Node<F> {
    value: Tensor<F>,
    op: Op<F>,
}

/// Tape of recorded operations. One graph per forward/backward pass.
pub struct Graph<F: Real> {
    nodes: RefCell<Vec<Node<F>>>,
}

impl<F: Real> Default for Graph<F> {
    fn default() -> Self {
        Self::new()
    }
}

/// Handle to a value recorded on a [`Graph`].
#[derive(Clone, Copy)]
pub struct Var<'g, F: Real> {
    graph: &'g Graph<F>,
    id: usize,
}

impl<F: Real> std::fmt::Debug for Var<'_, F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.shape())
    }
}

impl<F: Real> Graph<F> {
    pub fn new() -> Self {
        Graph {
            nodes: RefCell::new(Vec::with_capacity(256)),
        }
    }

    /// Records a leaf (parameter, input or constant).
    pub fn var(&self, value: Tensor<F>) -> Var<'_, F> {
        self.push(value, Op::Leaf)
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Tensor<F>, op: Op<F>) -> Var<'_, F> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op });
        Var {
            graph: self,
            id: nodes.len() - 1,
        }
    }

    fn value(&self, id: usize) -> Tensor<F> {
        self.nodes.borrow()[id].value.clone()
    }

    fn op(&self, id: usize) -> Op<F> {
        self.nodes.borrow()[id].op.clone()
    }

    /// Gradients of a scalar `loss` with respect to each of `wrt`.
    ///
    /// The result lives on this graph, so it can be differentiated again.
    /// Entries of `wrt` that `loss` does not depend on receive zeros.
    pub fn grad<'g>(&'g self, loss: Var<'g, F>, wrt: &[Var<'g, F>]) -> Result<Vec<Var<'g, F>>> {
        if loss.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                loss.shape()
            )));
        }
        let n = loss.id + 1;
        let mut depends = vec![false; n];
        for w in wrt {
            if w.id < n {
                depends[w.id] = true;
            }
        }
        {
            let nodes = self.nodes.borrow();
            for (id, node) in nodes.iter().enumerate().take(n) {
                if node.op.parents().iter().flatten().any(|&p| depends[p]) {
                    depends[id] = true;
                }
            }
        }

        let mut grads: Vec<Option<Var<'g, F>>> = vec![None; n];
        if depends[loss.id] {
            grads[loss.id] = Some(self.var(Tensor::ones(&loss.shape())));
        }
        for id in (0..n).rev() {
            if !depends[id] {
                continue;
            }
            let Some(g) = grads[id] else { continue };
            let op = self.op(id);
            if matches!(op, Op::Leaf) {
                continue;
            }
            for (parent, pg) in self.vjp(id, &op, g) {
                if !depends[parent] {
                    continue;
                }
                grads[parent] = Some(match grads[parent] {
                    Some(acc) => acc + pg,
                    None => pg,
                });
            }
        }
        Ok(wrt
            .iter()
            .map(|w| match grads.get(w.id).copied().flatten() {
                Some(g) => g,
                None => self.var(Tensor::zeros(&w.shape())),
            })
            .collect())
    }

    /// Local gradient rules, written with graph operations.
    fn vjp<'g>(&'g self, id: usize, op: &Op<F>, g: Var<'g, F>) -> Vec<(usize, Var<'g, F>)> {
        let v = |i: usize| Var { graph: self, id: i };
        let out = v(id);
        match *op {
            Op::Leaf => vec![],
            Op::Add(a, b) => vec![(a, g), (b, g)],
            Op::Sub(a, b) => vec![(a, g), (b, -g)],
            Op::Mul(a, b) => vec![(a, g * v(b)), (b, g * v(a))],
            Op::Div(a, b) => {
                let gb = -(g * v(a) / (v(b) * v(b)));
                vec![(a, g / v(b)), (b, gb)]
            }
            Op::Neg(a) => vec![(a, -g)],
            Op::Scale(a, c) => vec![(a, g.scale_by(c))],
            Op::AddScalar(a) => vec![(a, g)],
            Op::AddTiled(a, b) => {
                let tail = v(b).shape();
                vec![(a, g), (b, g.sum_tiles(&tail))]
            }
            Op::MulTiled(a, b) => {
                let tail = v(b).shape();
                vec![(a, g.mul_tiled(v(b))), (b, (g * v(a)).sum_tiles(&tail))]
            }
            Op::Tile(a) => {
                let tail = v(a).shape();
                vec![(a, g.sum_tiles(&tail))]
            }
            Op::SumTiles(a) => {
                let shape = v(a).shape();
                let tail = g.shape();
                let lead = shape[..shape.len() - tail.len()].to_vec();
                vec![(a, g.tile(&lead))]
            }
            Op::RepeatRows(a, r) => vec![(a, g.sum_row_groups(r))],
            Op::SumRowGroups(a, r) => vec![(a, g.repeat_rows(r))],
            Op::MatMul { a, b, ta, tb } => {
                let (va, vb) = (v(a), v(b));
                let ga = if ta { vb.matmul_t(g, tb, true) } else { g.matmul_t(vb, false, !tb) };
                let gb = if tb { g.matmul_t(va, true, ta) } else { va.matmul_t(g, !ta, false) };
                vec![(a, ga), (b, gb)]
            }
            Op::Reshape(a) => {
                let shape = v(a).shape();
                vec![(a, g.reshape(&shape))]
            }
            Op::SumAll(a) => {
                let shape = v(a).shape();
                vec![(a, g.expand_scalar(&shape))]
            }
            Op::ExpandScalar(a) => {
                let shape = v(a).shape();
                vec![(a, g.sum().reshape(&shape))]
            }
            Op::SumLast(a) => {
                let n = *v(a).shape().last().expect("sum_last on rank-0");
                vec![(a, g.expand_last(n))]
            }
            Op::ExpandLast(a) => vec![(a, g.sum_last())],
            Op::LeakyRelu(a, slope) => {
                let mask = self.value(a).map(|x| if x > F::zero() { F::one() } else { slope });
                vec![(a, g * self.var(mask))]
            }
            Op::Tanh(a) => vec![(a, g * (-(out * out)).add_scalar(1.0))],
            Op::Sigmoid(a) => vec![(a, g * out * (-out).add_scalar(1.0))],
            Op::Exp(a) => vec![(a, g * out)],
            Op::Ln(a) => vec![(a, g / v(a))],
            Op::Sqrt(a) => vec![(a, (g / out).scale(0.5))],
            Op::Softplus(a) => vec![(a, g * v(a).sigmoid())],
            Op::Softmax(a) => {
                let n = *out.shape().last().expect("softmax on rank-0");
                let dot = (g * out).sum_last().expand_last(n);
                vec![(a, out * (g - dot))]
            }
            Op::Concat(a, b) => {
                let p = *v(a).shape().last().unwrap();
                let q = *v(b).shape().last().unwrap();
                vec![(a, g.slice(0, p)), (b, g.slice(p, q))]
            }
            Op::Slice { a, start } => {
                let total = *v(a).shape().last().unwrap();
                vec![(a, g.pad(start, total))]
            }
            Op::Pad { a, start } => {
                let len = *v(a).shape().last().unwrap();
                vec![(a, g.slice(start, len))]
            }
            Op::Unfold { a, k, pad } => {
                let s = v(a).shape();
                vec![(a, g.fold1d(s[1], k, pad))]
            }
            Op::Fold { a, k, pad } => vec![(a, g.unfold1d(k, pad))],
        }
    }
}

fn same_shape<F: Real>(op: &str, a: &Tensor<F>, b: &Tensor<F>) {
    assert_eq!(
        a.shape(),
        b.shape(),
        "{op}: operand shapes differ ({:?} vs {:?})",
        a.shape(),
        b.shape()
    );
}

fn tail_count<F: Real>(op: &str, a: &Tensor<F>, tail: &[usize]) -> usize {
    let r = a.rank();
    assert!(
        tail.len() <= r && a.shape()[r - tail.len()..] == *tail,
        "{op}: {:?} does not end with {:?}",
        a.shape(),
        tail
    );
    a.shape()[..r - tail.len()].iter().product()
}

impl<'g, F: Real> Var<'g, F> {
    pub fn graph(&self) -> &'g Graph<F> {
        self.graph
    }

    pub fn value(&self) -> Tensor<F> {
        self.graph.value(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.graph.nodes.borrow()[self.id].value.shape().to_vec()
    }

    pub fn numel(&self) -> usize {
        self.graph.nodes.borrow()[self.id].value.numel()
    }

    /// Scalar value of a single-element var.
    pub fn item(&self) -> F {
        self.value().item()
    }

    fn unary(self, op: Op<F>, f: impl Fn(F) -> F) -> Self {
        let value = self.value().map(f);
        self.graph.push(value, op)
    }

    fn binary(self, other: Self, op: Op<F>, name: &str, f: impl Fn(F, F) -> F) -> Self {
        let (a, b) = (self.value(), other.value());
        same_shape(name, &a, &b);
        self.graph.push(a.zip_map(&b, f), op)
    }

    pub fn scale(self, c: f64) -> Self {
        self.scale_by(F::lit(c))
    }

    fn scale_by(self, c: F) -> Self {
        self.unary(Op::Scale(self.id, c), |x| x * c)
    }

    pub fn add_scalar(self, c: f64) -> Self {
        let c = F::lit(c);
        self.unary(Op::AddScalar(self.id), |x| x + c)
    }

    /// `self + b` where `b` is repeated over the leading axes of `self`
    /// (bias rows, positional tables).
    pub fn add_tiled(self, b: Self) -> Self {
        let (av, bv) = (self.value(), b.value());
        tail_count("add_tiled", &av, bv.shape());
        let n = bv.numel().max(1);
        let data: Vec<F> = av
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| x + bv.data()[i % n])
            .collect();
        self.graph.push(Tensor::from_parts(av.shape().to_vec(), data), Op::AddTiled(self.id, b.id))
    }

    pub fn mul_tiled(self, b: Self) -> Self {
        let (av, bv) = (self.value(), b.value());
        tail_count("mul_tiled", &av, bv.shape());
        let n = bv.numel().max(1);
        let data: Vec<F> = av
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| x * bv.data()[i % n])
            .collect();
        self.graph.push(Tensor::from_parts(av.shape().to_vec(), data), Op::MulTiled(self.id, b.id))
    }

    /// Repeats the whole tensor over new leading axes `lead`.
    pub fn tile(self, lead: &[usize]) -> Self {
        let av = self.value();
        let reps: usize = lead.iter().product();
        let mut data = Vec::with_capacity(av.numel() * reps);
        for _ in 0..reps {
            data.extend_from_slice(av.data());
        }
        let mut shape = lead.to_vec();
        shape.extend_from_slice(av.shape());
        self.graph.push(Tensor::from_parts(shape, data), Op::Tile(self.id))
    }

    /// Sums over the leading axes, keeping the trailing `tail` shape.
    pub fn sum_tiles(self, tail: &[usize]) -> Self {
        let av = self.value();
        tail_count("sum_tiles", &av, tail);
        let n: usize = tail.iter().product();
        let mut data = vec![F::zero(); n];
        if n > 0 {
            for chunk in av.data().chunks(n) {
                for (d, &x) in data.iter_mut().zip(chunk) {
                    *d += x;
                }
            }
        }
        self.graph.push(Tensor::from_parts(tail.to_vec(), data), Op::SumTiles(self.id))
    }

    /// `[B, C] -> [B*r, C]`, each row repeated `r` times consecutively.
    pub fn repeat_rows(self, r: usize) -> Self {
        let av = self.value();
        assert_eq!(av.rank(), 2, "repeat_rows needs a matrix, got {:?}", av.shape());
        let (b, c) = (av.shape()[0], av.shape()[1]);
        let mut data = Vec::with_capacity(b * r * c);
        for i in 0..b {
            for _ in 0..r {
                data.extend_from_slice(av.row(i));
            }
        }
        self.graph.push(Tensor::from_parts(vec![b * r, c], data), Op::RepeatRows(self.id, r))
    }

    /// `[B*r, C] -> [B, C]`, summing consecutive groups of `r` rows.
    pub fn sum_row_groups(self, r: usize) -> Self {
        let av = self.value();
        assert!(av.rank() == 2 && r > 0 && av.shape()[0] % r == 0, "sum_row_groups: {:?} by {r}", av.shape());
        let (rows, c) = (av.shape()[0], av.shape()[1]);
        let b = rows / r;
        let mut data = vec![F::zero(); b * c];
        for i in 0..rows {
            let dst = &mut data[(i / r) * c..(i / r + 1) * c];
            for (d, &x) in dst.iter_mut().zip(av.row(i)) {
                *d += x;
            }
        }
        self.graph.push(Tensor::from_parts(vec![b, c], data), Op::SumRowGroups(self.id, r))
    }

    pub fn matmul(self, b: Self) -> Self {
        self.matmul_t(b, false, false)
    }

    /// Matrix product with optional transposed reads of either operand.
    pub fn matmul_t(self, b: Self, ta: bool, tb: bool) -> Self {
        let value = tensor::matmul(&self.value(), &b.value(), ta, tb).unwrap_or_else(|e| panic!("{e}"));
        self.graph.push(value, Op::MatMul { a: self.id, b: b.id, ta, tb })
    }

    pub fn reshape(self, shape: &[usize]) -> Self {
        let value = self.value().reshape(shape).unwrap_or_else(|e| panic!("{e}"));
        self.graph.push(value, Op::Reshape(self.id))
    }

    pub fn sum(self) -> Self {
        let s = self.value().sum();
        self.graph.push(Tensor::scalar(s), Op::SumAll(self.id))
    }

    pub fn mean(self) -> Self {
        let n = self.numel().max(1) as f64;
        self.sum().scale(1.0 / n)
    }

    pub fn expand_scalar(self, shape: &[usize]) -> Self {
        let s = self.item();
        self.graph.push(Tensor::full(shape, s), Op::ExpandScalar(self.id))
    }

    /// Sum over the last axis.
    pub fn sum_last(self) -> Self {
        let av = self.value();
        let shape = av.shape();
        let n = *shape.last().expect("sum_last on rank-0");
        let data: Vec<F> = if n == 0 {
            vec![F::zero(); av.numel()]
        } else {
            av.data().chunks(n).map(|c| c.iter().copied().sum()).collect()
        };
        self.graph.push(Tensor::from_parts(shape[..shape.len() - 1].to_vec(), data), Op::SumLast(self.id))
    }

    pub fn mean_last(self) -> Self {
        let n = *self.shape().last().expect("mean_last on rank-0") as f64;
        self.sum_last().scale(1.0 / n)
    }

    /// Adds a trailing axis of extent `n`, repeating each value.
    pub fn expand_last(self, n: usize) -> Self {
        let av = self.value();
        let mut data = Vec::with_capacity(av.numel() * n);
        for &x in av.data() {
            data.extend(std::iter::repeat_n(x, n));
        }
        let mut shape = av.shape().to_vec();
        shape.push(n);
        self.graph.push(Tensor::from_parts(shape, data), Op::ExpandLast(self.id))
    }

    pub fn relu(self) -> Self {
        self.leaky_relu(0.0)
    }

    pub fn leaky_relu(self, slope: f64) -> Self {
        let s = F::lit(slope);
        self.unary(Op::LeakyRelu(self.id, s), |x| if x > F::zero() { x } else { x * s })
    }

    pub fn tanh(self) -> Self {
        self.unary(Op::Tanh(self.id), F::tanh)
    }

    pub fn sigmoid(self) -> Self {
        self.unary(Op::Sigmoid(self.id), sigmoid)
    }

    pub fn exp(self) -> Self {
        self.unary(Op::Exp(self.id), F::exp)
    }

    pub fn ln(self) -> Self {
        self.unary(Op::Ln(self.id), F::ln)
    }

    pub fn sqrt(self) -> Self {
        self.unary(Op::Sqrt(self.id), F::sqrt)
    }

    pub fn square(self) -> Self {
        self * self
    }

    /// `ln(1 + e^x)`, evaluated without overflow.
    pub fn softplus(self) -> Self {
        self.unary(Op::Softplus(self.id), softplus)
    }

    /// Softmax over the last axis.
    pub fn softmax(self) -> Self {
        let value = tensor::softmax_last(&self.value());
        self.graph.push(value, Op::Softmax(self.id))
    }

    /// Concatenation along the last axis.
    pub fn concat(self, b: Self) -> Self {
        let (av, bv) = (self.value(), b.value());
        let (sa, sb) = (av.shape(), bv.shape());
        assert!(
            sa.len() == sb.len() && !sa.is_empty() && sa[..sa.len() - 1] == sb[..sb.len() - 1],
            "concat: {sa:?} vs {sb:?}"
        );
        let (p, q) = (sa[sa.len() - 1], sb[sb.len() - 1]);
        let rows: usize = sa[..sa.len() - 1].iter().product();
        let mut data = Vec::with_capacity(av.numel() + bv.numel());
        for i in 0..rows {
            data.extend_from_slice(&av.data()[i * p..(i + 1) * p]);
            data.extend_from_slice(&bv.data()[i * q..(i + 1) * q]);
        }
        let mut shape = sa.to_vec();
        *shape.last_mut().unwrap() = p + q;
        self.graph.push(Tensor::from_parts(shape, data), Op::Concat(self.id, b.id))
    }

    /// Columns `start..start + len` of the last axis.
    pub fn slice(self, start: usize, len: usize) -> Self {
        let av = self.value();
        let n = *av.shape().last().expect("slice on rank-0");
        assert!(start + len <= n, "slice {start}+{len} beyond {n}");
        let data: Vec<F> = av
            .data()
            .chunks(n.max(1))
            .flat_map(|row| row[start..start + len].iter().copied())
            .collect();
        let mut shape = av.shape().to_vec();
        *shape.last_mut().unwrap() = len;
        self.graph.push(Tensor::from_parts(shape, data), Op::Slice { a: self.id, start })
    }

    /// Embeds the last axis at `start` inside a zero axis of extent `total`.
    pub fn pad(self, start: usize, total: usize) -> Self {
        let av = self.value();
        let len = *av.shape().last().expect("pad on rank-0");
        assert!(start + len <= total, "pad {start}+{len} beyond {total}");
        let rows = av.numel() / len.max(1);
        let mut data = vec![F::zero(); rows * total];
        if len > 0 {
            for (i, row) in av.data().chunks(len).enumerate() {
                data[i * total + start..i * total + start + len].copy_from_slice(row);
            }
        }
        let mut shape = av.shape().to_vec();
        *shape.last_mut().unwrap() = total;
        self.graph.push(Tensor::from_parts(shape, data), Op::Pad { a: self.id, start })
    }

    /// `[B, L, C] -> [B*L, k*C]` sliding windows with zero padding (im2col).
    pub fn unfold1d(self, k: usize, pad: usize) -> Self {
        let av = self.value();
        assert_eq!(av.rank(), 3, "unfold1d needs [B, L, C], got {:?}", av.shape());
        let (b, l, c) = (av.shape()[0], av.shape()[1], av.shape()[2]);
        let mut data = vec![F::zero(); b * l * k * c];
        for bi in 0..b {
            for i in 0..l {
                let dst = (bi * l + i) * k * c;
                for j in 0..k {
                    let src = i as isize + j as isize - pad as isize;
                    if src >= 0 && (src as usize) < l {
                        let s = (bi * l + src as usize) * c;
                        data[dst + j * c..dst + (j + 1) * c].copy_from_slice(&av.data()[s..s + c]);
                    }
                }
            }
        }
        self.graph.push(Tensor::from_parts(vec![b * l, k * c], data), Op::Unfold { a: self.id, k, pad })
    }

    /// Adjoint of [`Var::unfold1d`]: `[B*L, k*C] -> [B, L, C]`, overlapping windows summed.
    pub fn fold1d(self, seq: usize, k: usize, pad: usize) -> Self {
        let av = self.value();
        assert!(av.rank() == 2 && av.shape()[1] % k == 0 && av.shape()[0] % seq == 0, "fold1d: {:?}", av.shape());
        let c = av.shape()[1] / k;
        let b = av.shape()[0] / seq;
        let mut data = vec![F::zero(); b * seq * c];
        for bi in 0..b {
            for i in 0..seq {
                let src = (bi * seq + i) * k * c;
                for j in 0..k {
                    let dst = i as isize + j as isize - pad as isize;
                    if dst >= 0 && (dst as usize) < seq {
                        let d = (bi * seq + dst as usize) * c;
                        for ci in 0..c {
                            data[d + ci] += av.data()[src + j * c + ci];
                        }
                    }
                }
            }
        }
        self.graph.push(Tensor::from_parts(vec![b, seq, c], data), Op::Fold { a: self.id, k, pad })
    }
}

pub(crate) fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

pub(crate) fn softplus<F: Real>(x: F) -> F {
    x.max(F::zero()) + (-x.abs()).exp().ln_1p()
}

impl<'g, F: Real> ops::Add for Var<'g, F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Add(self.id, rhs.id), "add", |a, b| a + b)
    }
}

impl<'g, F: Real> ops::Sub for Var<'g, F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Sub(self.id, rhs.id), "sub", |a, b| a - b)
    }
}

impl<'g, F: Real> ops::Mul for Var<'g, F> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Mul(self.id, rhs.id), "mul", |a, b| a * b)
    }
}

impl<'g, F: Real> ops::Div for Var<'g, F> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Div(self.id, rhs.id), "div", |a, b| a / b)
    }
}

impl<'g, F: Real> ops::Neg for Var<'g, F> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(Op::Neg(self.id), |x| -x)
    }
}

/// Evaluates `f` and returns the loss value with the gradient for every input tensor.
pub fn value_and_grad<F: Real>(
    inputs: &[Tensor<F>],
    f: impl for<'g> Fn(&'g Graph<F>, &[Var<'g, F>]) -> Var<'g, F>,
) -> Result<(F, Vec<Tensor<F>>)> {
    let g = Graph::new();
    let vars: Vec<_> = inputs.iter().map(|t| g.var(t.clone())).collect();
    let loss = f(&g, &vars);
    let grads = g.grad(loss, &vars)?;
    Ok((loss.item(), grads.iter().map(Var::value).collect()))
}
