//! Define-by-run computation graph with reverse-mode differentiation.
//!
//! A [`Graph`] is a list of op records in topological order. Building it is
//! purely symbolic; [`Graph::forward`] evaluates it against a set of
//! [`Bindings`] and [`Evaluation::backward`] accumulates gradients of a
//! scalar node with respect to named inputs.
//!
//! Elementwise binary ops broadcast with the usual trailing-dimension rule.
//! `minimum`/`maximum` (elementwise and along an axis) route the incoming
//! gradient to the achieving argument; exact ties split it equally.

use alloc::borrow::Cow;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::kernels;
use super::tensor::Tensor;
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Minimum,
    Maximum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Tanh,
    Sigmoid,
    Relu,
    Exp,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduce {
    Sum,
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Input(String),
    Constant(Tensor),
    MatMul(NodeId, NodeId),
    Binary(BinaryOp, NodeId, NodeId),
    Unary(UnaryOp, NodeId),
    /// `x * factor + offset`
    Affine { input: NodeId, factor: f64, offset: f64 },
    Softmax { input: NodeId, axis: usize },
    ReduceAxis { kind: Reduce, input: NodeId, axis: usize },
    SumAll(NodeId),
    Dot(NodeId, NodeId),
    /// Keeps the leading dimension and reshapes the rest to `inner`.
    ReshapeRows { input: NodeId, inner: Vec<usize> },
    Reshape { input: NodeId, shape: Vec<usize> },
    /// Appends one slot filled with `value` along `axis`.
    Pad { input: NodeId, axis: usize, value: f64 },
    Slice { input: NodeId, axis: usize, start: usize, len: usize },
    Concat { inputs: Vec<NodeId>, axis: usize },
    /// Selects entries along the last axis; `None` produces `fill`.
    Gather { input: NodeId, index: Vec<Option<usize>>, fill: f64 },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Input(_) => "input",
            Op::Constant(_) => "constant",
            Op::MatMul(..) => "matmul",
            Op::Binary(op, ..) => match op {
                BinaryOp::Add => "add",
                BinaryOp::Sub => "sub",
                BinaryOp::Mul => "mul",
                BinaryOp::Div => "div",
                BinaryOp::Minimum => "minimum",
                BinaryOp::Maximum => "maximum",
            },
            Op::Unary(op, _) => match op {
                UnaryOp::Neg => "neg",
                UnaryOp::Tanh => "tanh",
                UnaryOp::Sigmoid => "sigmoid",
                UnaryOp::Relu => "relu",
                UnaryOp::Exp => "exp",
                UnaryOp::Log => "log",
            },
            Op::Affine { .. } => "affine",
            Op::Softmax { .. } => "softmax",
            Op::ReduceAxis { kind, .. } => match kind {
                Reduce::Sum => "reduce_sum",
                Reduce::Max => "reduce_max",
                Reduce::Min => "reduce_min",
            },
            Op::SumAll(_) => "sum_all",
            Op::Dot(..) => "dot",
            Op::ReshapeRows { .. } => "reshape_rows",
            Op::Reshape { .. } => "reshape",
            Op::Pad { .. } => "pad",
            Op::Slice { .. } => "slice",
            Op::Concat { .. } => "concat",
            Op::Gather { .. } => "gather",
        }
    }

    fn inputs(&self) -> Vec<NodeId> {
        match self {
            Op::Input(_) | Op::Constant(_) => Vec::new(),
            Op::MatMul(a, b) | Op::Binary(_, a, b) | Op::Dot(a, b) => vec![*a, *b],
            Op::Unary(_, a) | Op::SumAll(a) => vec![*a],
            Op::Affine { input, .. }
            | Op::Softmax { input, .. }
            | Op::ReduceAxis { input, .. }
            | Op::ReshapeRows { input, .. }
            | Op::Reshape { input, .. }
            | Op::Pad { input, .. }
            | Op::Slice { input, .. }
            | Op::Gather { input, .. } => vec![*input],
            Op::Concat { inputs, .. } => inputs.clone(),
        }
    }
}

/// Named tensors bound to a graph's inputs for one evaluation.
#[derive(Debug, Default, Clone)]
pub struct Bindings<'a> {
    map: BTreeMap<&'a str, &'a Tensor>,
}

impl<'a> Bindings<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, name: &'a str, value: &'a Tensor) -> &mut Self {
        self.map.insert(name, value);
        self
    }

    pub fn with(mut self, name: &'a str, value: &'a Tensor) -> Self {
        self.map.insert(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&'a Tensor> {
        self.map.get(name).copied()
    }
}

/// Gradients keyed by input name.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Gradients {
    map: BTreeMap<String, Tensor>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.map.get(name)
    }

    pub fn insert(&mut self, name: String, grad: Tensor) {
        self.map.insert(name, grad);
    }

    pub fn remove(&mut self, name: &str) -> Option<Tensor> {
        self.map.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Default, Clone)]
pub struct Graph {
    nodes: Vec<Op>,
    inputs: BTreeMap<String, NodeId>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn op(&self, id: NodeId) -> &Op {
        &self.nodes[id.0]
    }

    fn push(&mut self, op: Op) -> NodeId {
        for input in op.inputs() {
            assert!(input.0 < self.nodes.len(), "node {} used before definition", input.0);
        }
        self.nodes.push(op);
        NodeId(self.nodes.len() - 1)
    }

    /// A free input. Requesting the same name twice returns the same node.
    pub fn input(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.inputs.get(name) {
            return id;
        }
        let id = self.push(Op::Input(name.to_string()));
        self.inputs.insert(name.to_string(), id);
        id
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Constant(value))
    }

    pub fn scalar(&mut self, value: f64) -> NodeId {
        self.constant(Tensor::scalar(value))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Binary(BinaryOp::Add, a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Binary(BinaryOp::Sub, a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Binary(BinaryOp::Mul, a, b))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Binary(BinaryOp::Div, a, b))
    }

    pub fn minimum(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Binary(BinaryOp::Minimum, a, b))
    }

    pub fn maximum(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Binary(BinaryOp::Maximum, a, b))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Unary(UnaryOp::Neg, a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Unary(UnaryOp::Tanh, a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Unary(UnaryOp::Sigmoid, a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Unary(UnaryOp::Relu, a))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Unary(UnaryOp::Exp, a))
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Unary(UnaryOp::Log, a))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        self.push(Op::Affine { input: a, factor, offset: 0.0 })
    }

    pub fn offset(&mut self, a: NodeId, offset: f64) -> NodeId {
        self.push(Op::Affine { input: a, factor: 1.0, offset })
    }

    pub fn softmax(&mut self, a: NodeId, axis: usize) -> NodeId {
        self.push(Op::Softmax { input: a, axis })
    }

    pub fn sum_axis(&mut self, a: NodeId, axis: usize) -> NodeId {
        self.push(Op::ReduceAxis { kind: Reduce::Sum, input: a, axis })
    }

    pub fn max_axis(&mut self, a: NodeId, axis: usize) -> NodeId {
        self.push(Op::ReduceAxis { kind: Reduce::Max, input: a, axis })
    }

    pub fn min_axis(&mut self, a: NodeId, axis: usize) -> NodeId {
        self.push(Op::ReduceAxis { kind: Reduce::Min, input: a, axis })
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        self.push(Op::SumAll(a))
    }

    pub fn mean(&mut self, a: NodeId, count: usize) -> NodeId {
        let s = self.sum(a);
        self.scale(s, 1.0 / count as f64)
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Dot(a, b))
    }

    pub fn reshape_rows(&mut self, a: NodeId, inner: &[usize]) -> NodeId {
        self.push(Op::ReshapeRows { input: a, inner: inner.to_vec() })
    }

    pub fn reshape(&mut self, a: NodeId, shape: &[usize]) -> NodeId {
        self.push(Op::Reshape { input: a, shape: shape.to_vec() })
    }

    pub fn pad(&mut self, a: NodeId, axis: usize, value: f64) -> NodeId {
        self.push(Op::Pad { input: a, axis, value })
    }

    pub fn slice(&mut self, a: NodeId, axis: usize, start: usize, len: usize) -> NodeId {
        self.push(Op::Slice { input: a, axis, start, len })
    }

    pub fn concat(&mut self, inputs: &[NodeId], axis: usize) -> NodeId {
        self.push(Op::Concat { inputs: inputs.to_vec(), axis })
    }

    pub fn gather(&mut self, a: NodeId, index: Vec<Option<usize>>, fill: f64) -> NodeId {
        self.push(Op::Gather { input: a, index, fill })
    }

    /// `x · wᵀ`-free dense layer: `x · w + b` with `w: in × out`, `b: out`.
    pub fn linear(&mut self, x: NodeId, w: NodeId, b: NodeId) -> NodeId {
        let xw = self.matmul(x, w);
        self.add(xw, b)
    }

    /// Evaluates every node needed for `outputs`.
    pub fn forward<'a>(&'a self, bindings: &Bindings<'a>, outputs: &[NodeId]) -> Result<Evaluation<'a>> {
        let needed = self.ancestors(outputs);
        let mut values: Vec<Option<Cow<'a, Tensor>>> = vec![None; self.nodes.len()];
        for (idx, op) in self.nodes.iter().enumerate() {
            if !needed[idx] {
                continue;
            }
            let value = self.eval_node(idx, op, &values, bindings)?;
            values[idx] = Some(value);
        }
        Ok(Evaluation { graph: self, values })
    }

    fn ancestors(&self, outputs: &[NodeId]) -> Vec<bool> {
        let mut needed = vec![false; self.nodes.len()];
        for o in outputs {
            needed[o.0] = true;
        }
        for idx in (0..self.nodes.len()).rev() {
            if needed[idx] {
                for input in self.nodes[idx].inputs() {
                    needed[input.0] = true;
                }
            }
        }
        needed
    }

    fn eval_node<'a>(
        &'a self,
        idx: usize,
        op: &'a Op,
        values: &[Option<Cow<'a, Tensor>>],
        bindings: &Bindings<'a>,
    ) -> Result<Cow<'a, Tensor>> {
        let val = |id: &NodeId| -> &Tensor { values[id.0].as_deref().expect("topological order") };
        let shape_err = |detail: String| Error::Shape { node: idx, op: op.name(), detail };
        Ok(match op {
            Op::Input(name) => Cow::Borrowed(bindings.get(name).ok_or_else(|| Error::Unbound(name.clone()))?),
            Op::Constant(t) => Cow::Borrowed(t),
            Op::MatMul(a, b) => {
                let (a, b) = (val(a), val(b));
                if a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0] {
                    return Err(shape_err(format!("{:?} x {:?}", a.shape(), b.shape())));
                }
                let (r, k, c) = (a.shape()[0], a.shape()[1], b.shape()[1]);
                let mut out = vec![0.0; r * c];
                kernels::gemm(r, k, c, a.data(), false, b.data(), false, &mut out, 0.0);
                Cow::Owned(Tensor::from_parts(vec![r, c], out))
            }
            Op::Binary(kind, a, b) => {
                let (a, b) = (val(a), val(b));
                let shape = kernels::broadcast_shape(a.shape(), b.shape())
                    .ok_or_else(|| shape_err(format!("cannot broadcast {:?} with {:?}", a.shape(), b.shape())))?;
                let f: fn(f64, f64) -> f64 = match kind {
                    BinaryOp::Add => |x, y| x + y,
                    BinaryOp::Sub => |x, y| x - y,
                    BinaryOp::Mul => |x, y| x * y,
                    BinaryOp::Div => |x, y| x / y,
                    BinaryOp::Minimum => |x, y| if y < x { y } else { x },
                    BinaryOp::Maximum => |x, y| if y > x { y } else { x },
                };
                Cow::Owned(kernels::broadcast_map(a, b, &shape, f))
            }
            Op::Unary(kind, a) => {
                let a = val(a);
                let f: fn(f64) -> f64 = match kind {
                    UnaryOp::Neg => |x| -x,
                    UnaryOp::Tanh => math::tanh,
                    UnaryOp::Sigmoid => math::sigmoid,
                    UnaryOp::Relu => |x| if x > 0.0 { x } else { 0.0 },
                    UnaryOp::Exp => math::exp,
                    UnaryOp::Log => math::ln,
                };
                Cow::Owned(Tensor::from_parts(a.shape().to_vec(), a.data().iter().map(|&x| f(x)).collect()))
            }
            Op::Affine { input, factor, offset } => {
                let a = val(input);
                let data = a.data().iter().map(|&x| x * factor + offset).collect();
                Cow::Owned(Tensor::from_parts(a.shape().to_vec(), data))
            }
            Op::Softmax { input, axis } => {
                let a = val(input);
                if *axis >= a.rank() {
                    return Err(shape_err(format!("axis {axis} out of range for {:?}", a.shape())));
                }
                Cow::Owned(kernels::softmax(a, *axis))
            }
            Op::ReduceAxis { kind, input, axis } => {
                let a = val(input);
                if *axis >= a.rank() {
                    return Err(shape_err(format!("axis {axis} out of range for {:?}", a.shape())));
                }
                Cow::Owned(kernels::reduce_axis(a, *axis, *kind))
            }
            Op::SumAll(a) => Cow::Owned(Tensor::scalar(kernels::ordered_sum(val(a).data()))),
            Op::Dot(a, b) => {
                let (a, b) = (val(a), val(b));
                if a.shape() != b.shape() {
                    return Err(shape_err(format!("{:?} vs {:?}", a.shape(), b.shape())));
                }
                let s = a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum();
                Cow::Owned(Tensor::scalar(s))
            }
            Op::ReshapeRows { input, inner } => {
                let a = val(input);
                let rows = *a.shape().first().ok_or_else(|| shape_err("scalar has no rows".into()))?;
                let per_row: usize = inner.iter().product();
                if rows * per_row != a.len() || inner.contains(&0) {
                    return Err(shape_err(format!("{:?} -> [{rows}, {inner:?}]", a.shape())));
                }
                let mut shape = vec![rows];
                shape.extend_from_slice(inner);
                Cow::Owned(a.clone().reshaped(shape))
            }
            Op::Reshape { input, shape } => {
                let a = val(input);
                if shape.iter().product::<usize>() != a.len() || shape.contains(&0) {
                    return Err(shape_err(format!("{:?} -> {shape:?}", a.shape())));
                }
                Cow::Owned(a.clone().reshaped(shape.clone()))
            }
            Op::Pad { input, axis, value } => {
                let a = val(input);
                if *axis >= a.rank() {
                    return Err(shape_err(format!("axis {axis} out of range for {:?}", a.shape())));
                }
                Cow::Owned(kernels::pad(a, *axis, *value))
            }
            Op::Slice { input, axis, start, len } => {
                let a = val(input);
                if *axis >= a.rank() || *len == 0 || start + len > a.shape()[*axis] {
                    return Err(shape_err(format!("slice {start}..{} of axis {axis} in {:?}", start + len, a.shape())));
                }
                Cow::Owned(kernels::slice(a, *axis, *start, *len))
            }
            Op::Concat { inputs, axis } => {
                let parts: Vec<&Tensor> = inputs.iter().map(val).collect();
                let first = parts.first().ok_or_else(|| shape_err("no inputs".into()))?;
                if *axis >= first.rank() {
                    return Err(shape_err(format!("axis {axis} out of range for {:?}", first.shape())));
                }
                for p in &parts {
                    let compatible = p.rank() == first.rank()
                        && p.shape().iter().zip(first.shape()).enumerate().all(|(d, (x, y))| d == *axis || x == y);
                    if !compatible {
                        return Err(shape_err(format!("{:?} vs {:?}", p.shape(), first.shape())));
                    }
                }
                Cow::Owned(kernels::concat(&parts, *axis))
            }
            Op::Gather { input, index, fill } => {
                let a = val(input);
                let last = *a.shape().last().ok_or_else(|| shape_err("scalar input".into()))?;
                if index.is_empty() || index.iter().flatten().any(|&i| i >= last) {
                    return Err(shape_err(format!("index out of range for last axis {last}")));
                }
                Cow::Owned(kernels::gather_last(a, index, *fill))
            }
        })
    }
}

/// Forward values of one graph evaluation.
pub struct Evaluation<'a> {
    graph: &'a Graph,
    values: Vec<Option<Cow<'a, Tensor>>>,
}

impl<'a> Evaluation<'a> {
    /// Value of an evaluated node. Panics if the node was not needed for the
    /// requested outputs.
    pub fn value(&self, id: NodeId) -> &Tensor {
        self.values[id.0].as_deref().expect("node was not evaluated")
    }

    pub fn take(&mut self, id: NodeId) -> Tensor {
        self.values[id.0].take().expect("node was not evaluated").into_owned()
    }

    /// Gradients of the scalar `output` with respect to the named inputs.
    ///
    /// Inputs that do not influence `output` receive zero gradients.
    pub fn backward(&self, output: NodeId, wrt: &[&str]) -> Result<Gradients> {
        let graph = self.graph;
        let out_val = self.values[output.0].as_deref().ok_or(Error::Unbound(format!("node {}", output.0)))?;
        if out_val.len() != 1 {
            return Err(Error::NonScalarOutput(out_val.shape().to_vec()));
        }
        let n = output.0 + 1;
        let mut needs = vec![false; n];
        for (idx, op) in graph.nodes[..n].iter().enumerate() {
            needs[idx] = match op {
                Op::Input(name) => wrt.contains(&name.as_str()),
                Op::Constant(_) => false,
                other => other.inputs().iter().any(|i| needs[i.0]),
            } && self.values[idx].is_some();
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; n];
        grads[output.0] = Some(Tensor::from_parts(out_val.shape().to_vec(), vec![1.0]));
        for idx in (0..n).rev() {
            if !needs[idx] {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let op = &graph.nodes[idx];
            if let Op::Input(_) = op {
                grads[idx] = Some(g);
                continue;
            }
            self.backprop(idx, op, &g, &needs, &mut grads);
        }
        let mut result = Gradients::default();
        for name in wrt {
            let Some(&id) = graph.inputs.get(*name) else {
                continue;
            };
            if id.0 >= n || self.values[id.0].is_none() {
                continue;
            }
            let grad = grads[id.0]
                .take()
                .unwrap_or_else(|| Tensor::zeros(self.value(id).shape()));
            result.insert((*name).to_string(), grad);
        }
        Ok(result)
    }

    fn backprop(&self, idx: usize, op: &Op, g: &Tensor, needs: &[bool], grads: &mut [Option<Tensor>]) {
        let val = |id: &NodeId| -> &Tensor { self.value(*id) };
        let out = self.values[idx].as_deref().expect("evaluated");
        let mut acc = |id: NodeId, delta: Tensor| accumulate(&mut grads[id.0], delta);
        match op {
            Op::Input(_) | Op::Constant(_) => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (val(a), val(b));
                let (r, k, c) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
                if needs[a.0] {
                    let mut da = vec![0.0; r * k];
                    kernels::gemm(r, c, k, g.data(), false, bv.data(), true, &mut da, 0.0);
                    acc(*a, Tensor::from_parts(vec![r, k], da));
                }
                if needs[b.0] {
                    let mut db = vec![0.0; k * c];
                    kernels::gemm(k, r, c, av.data(), true, g.data(), false, &mut db, 0.0);
                    acc(*b, Tensor::from_parts(vec![k, c], db));
                }
            }
            Op::Binary(kind, a, b) => {
                let (av, bv) = (val(a), val(b));
                let (da, db): (fn(f64, f64, f64) -> f64, fn(f64, f64, f64) -> f64) = match kind {
                    BinaryOp::Add => (|g, _, _| g, |g, _, _| g),
                    BinaryOp::Sub => (|g, _, _| g, |g, _, _| -g),
                    BinaryOp::Mul => (|g, _, y| g * y, |g, x, _| g * x),
                    BinaryOp::Div => (|g, _, y| g / y, |g, x, y| -g * x / (y * y)),
                    BinaryOp::Minimum => (
                        |g, x, y| if x < y { g } else if x == y { 0.5 * g } else { 0.0 },
                        |g, x, y| if y < x { g } else if x == y { 0.5 * g } else { 0.0 },
                    ),
                    BinaryOp::Maximum => (
                        |g, x, y| if x > y { g } else if x == y { 0.5 * g } else { 0.0 },
                        |g, x, y| if y > x { g } else if x == y { 0.5 * g } else { 0.0 },
                    ),
                };
                if needs[a.0] {
                    acc(*a, kernels::broadcast_grad(g, av, bv, true, da));
                }
                if needs[b.0] {
                    acc(*b, kernels::broadcast_grad(g, av, bv, false, db));
                }
            }
            Op::Unary(kind, a) => {
                let x = val(a).data();
                let y = out.data();
                let gd = g.data();
                let data: Vec<f64> = match kind {
                    UnaryOp::Neg => gd.iter().map(|g| -g).collect(),
                    UnaryOp::Tanh => gd.iter().zip(y).map(|(g, y)| g * (1.0 - y * y)).collect(),
                    UnaryOp::Sigmoid => gd.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect(),
                    UnaryOp::Relu => gd.iter().zip(x).map(|(g, x)| if *x > 0.0 { *g } else { 0.0 }).collect(),
                    UnaryOp::Exp => gd.iter().zip(y).map(|(g, y)| g * y).collect(),
                    UnaryOp::Log => gd.iter().zip(x).map(|(g, x)| g / x).collect(),
                };
                acc(*a, Tensor::from_parts(g.shape().to_vec(), data));
            }
            Op::Affine { input, factor, .. } => {
                let data = g.data().iter().map(|g| g * factor).collect();
                acc(*input, Tensor::from_parts(g.shape().to_vec(), data));
            }
            Op::Softmax { input, axis } => acc(*input, kernels::softmax_grad(out, g, *axis)),
            Op::ReduceAxis { kind, input, axis } => {
                acc(*input, kernels::reduce_axis_grad(val(input), out, g, *axis, *kind))
            }
            Op::SumAll(a) => {
                let gv = g.data()[0];
                acc(*a, Tensor::full(val(a).shape(), gv));
            }
            Op::Dot(a, b) => {
                let gv = g.data()[0];
                let (av, bv) = (val(a), val(b));
                if needs[a.0] {
                    acc(*a, Tensor::from_parts(av.shape().to_vec(), bv.data().iter().map(|y| gv * y).collect()));
                }
                if needs[b.0] {
                    acc(*b, Tensor::from_parts(bv.shape().to_vec(), av.data().iter().map(|x| gv * x).collect()));
                }
            }
            Op::ReshapeRows { input, .. } | Op::Reshape { input, .. } => {
                acc(*input, g.clone().reshaped(val(input).shape().to_vec()))
            }
            Op::Pad { input, axis, .. } => {
                let len = val(input).shape()[*axis];
                acc(*input, kernels::slice(g, *axis, 0, len));
            }
            Op::Slice { input, axis, start, .. } => {
                acc(*input, kernels::unslice(g, val(input).shape(), *axis, *start));
            }
            Op::Concat { inputs, axis } => {
                let mut start = 0;
                for id in inputs {
                    let len = val(id).shape()[*axis];
                    if needs[id.0] {
                        acc(*id, kernels::slice(g, *axis, start, len));
                    }
                    start += len;
                }
            }
            Op::Gather { input, index, .. } => {
                acc(*input, kernels::gather_last_grad(g, val(input).shape(), index));
            }
        }
    }
}

fn accumulate(slot: &mut Option<Tensor>, delta: Tensor) {
    match slot {
        Some(existing) => {
            for (e, d) in existing.data_mut().iter_mut().zip(delta.data()) {
                *e += d;
            }
        }
        None => *slot = Some(delta),
    }
}

/// Evaluates `output` and its gradients with respect to `wrt` in one call.
pub fn eval_and_grad(
    graph: &Graph,
    output: NodeId,
    bindings: &Bindings<'_>,
    wrt: &[&str],
) -> Result<(Tensor, Gradients)> {
    let mut ev = graph.forward(bindings, &[output])?;
    let grads = ev.backward(output, wrt)?;
    Ok((ev.take(output), grads))
}
