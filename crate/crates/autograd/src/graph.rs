use std::cell::RefCell;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use ndarray::{s, Array2, Axis, Zip};

use crate::ops::{self, Op};
use crate::Tensor;

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    /// Position of the node on its graph.
    pub fn index(self) -> usize {
        self.0
    }
}

/// A scalar function applied elementwise, with its derivative.
///
/// `derivative` receives both the input and the already computed output so
/// that functions like the sigmoid can reuse it.
pub trait Elementwise: Send + Sync {
    fn apply(&self, x: f64) -> f64;
    fn derivative(&self, x: f64, y: f64) -> f64;
}

pub(crate) struct Node {
    pub(crate) value: Arc<Tensor>,
    pub(crate) op: Op,
    pub(crate) requires_grad: bool,
}

/// Operation recorder. Methods take `&self` so calls can be nested freely.
#[derive(Default)]
pub struct Graph {
    nodes: RefCell<Vec<Node>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph").field("nodes", &self.len()).finish()
    }
}

/// Gradients produced by [`Graph::backward`], indexed by leaf handle.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the root with respect to `v`, if `v` is a trainable leaf
    /// that the root depends on.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }

    /// Gradient with respect to `v`, or zeros of `shape` when the root does
    /// not depend on it.
    pub fn get_or_zeros(&self, v: Var, shape: (usize, usize)) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| Array2::zeros(shape))
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push_leaf(&self, value: Arc<Tensor>, requires_grad: bool) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(nodes.len() - 1)
    }

    fn push(&self, value: Tensor, op: Op) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        let requires_grad = op.parents().iter().any(|p| nodes[p.0].requires_grad);
        nodes.push(Node {
            value: Arc::new(value),
            op,
            requires_grad,
        });
        Var(nodes.len() - 1)
    }

    /// Trainable leaf sharing storage with the caller.
    pub fn param(&self, value: Arc<Tensor>) -> Var {
        self.push_leaf(value, true)
    }

    /// Trainable leaf.
    pub fn variable(&self, value: Tensor) -> Var {
        self.push_leaf(Arc::new(value), true)
    }

    /// Non-trainable leaf; no gradient flows into it.
    pub fn constant(&self, value: Tensor) -> Var {
        self.push_leaf(Arc::new(value), false)
    }

    pub fn constant_shared(&self, value: Arc<Tensor>) -> Var {
        self.push_leaf(value, false)
    }

    pub fn scalar_constant(&self, x: f64) -> Var {
        self.constant(Array2::from_elem((1, 1), x))
    }

    pub fn value(&self, v: Var) -> Arc<Tensor> {
        Arc::clone(&self.nodes.borrow()[v.0].value)
    }

    /// Value of a `1 × 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        let nodes = self.nodes.borrow();
        let t = &nodes[v.0].value;
        assert_eq!(t.dim(), (1, 1), "scalar() on non-scalar node");
        t[[0, 0]]
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes.borrow()[v.0].value.dim()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes.borrow()[v.0].requires_grad
    }

    fn unary<F>(&self, a: Var, f: F) -> Tensor
    where
        F: Fn(&Tensor) -> Tensor,
    {
        let nodes = self.nodes.borrow();
        f(&nodes[a.0].value)
    }

    fn binary<F>(&self, a: Var, b: Var, f: F) -> Tensor
    where
        F: Fn(&Tensor, &Tensor) -> Tensor,
    {
        let nodes = self.nodes.borrow();
        f(&nodes[a.0].value, &nodes[b.0].value)
    }

    fn assert_same_shape(&self, a: Var, b: Var, what: &str) {
        let (sa, sb) = (self.shape(a), self.shape(b));
        assert_eq!(sa, sb, "{what}: shape mismatch {sa:?} vs {sb:?}");
    }

    pub fn add(&self, a: Var, b: Var) -> Var {
        self.assert_same_shape(a, b, "add");
        let v = self.binary(a, b, |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&self, a: Var, b: Var) -> Var {
        self.assert_same_shape(a, b, "sub");
        let v = self.binary(a, b, |x, y| x - y);
        self.push(v, Op::Sub(a, b))
    }

    pub fn mul(&self, a: Var, b: Var) -> Var {
        self.assert_same_shape(a, b, "mul");
        let v = self.binary(a, b, |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    /// `a + row` with a `1 × n` row broadcast over every row of `a`.
    pub fn add_row(&self, a: Var, row: Var) -> Var {
        let (_, n) = self.shape(a);
        assert_eq!(self.shape(row), (1, n), "add_row: row shape");
        let v = self.binary(a, row, |x, r| x + r);
        self.push(v, Op::AddRow(a, row))
    }

    /// `a ⊙ row` with a `1 × n` row broadcast over every row of `a`.
    pub fn mul_row(&self, a: Var, row: Var) -> Var {
        let (_, n) = self.shape(a);
        assert_eq!(self.shape(row), (1, n), "mul_row: row shape");
        let v = self.binary(a, row, |x, r| x * r);
        self.push(v, Op::MulRow(a, row))
    }

    /// `a + s` with `s` a `1 × 1` node.
    pub fn add_scalar(&self, a: Var, s: Var) -> Var {
        assert_eq!(self.shape(s), (1, 1), "add_scalar: scalar shape");
        let v = self.binary(a, s, |x, s| x + s[[0, 0]]);
        self.push(v, Op::AddScalar(a, s))
    }

    /// `a · s` with `s` a `1 × 1` node.
    pub fn mul_scalar(&self, a: Var, s: Var) -> Var {
        assert_eq!(self.shape(s), (1, 1), "mul_scalar: scalar shape");
        let v = self.binary(a, s, |x, s| x * s[[0, 0]]);
        self.push(v, Op::MulScalar(a, s))
    }

    pub fn scale(&self, a: Var, c: f64) -> Var {
        let v = self.unary(a, |x| x * c);
        self.push(v, Op::Scale(a, c))
    }

    pub fn add_const(&self, a: Var, c: f64) -> Var {
        let v = self.unary(a, |x| x + c);
        self.push(v, Op::AddConst(a))
    }

    pub fn neg(&self, a: Var) -> Var {
        self.scale(a, -1.0)
    }

    pub fn matmul(&self, a: Var, b: Var) -> Var {
        let (sa, sb) = (self.shape(a), self.shape(b));
        assert_eq!(sa.1, sb.0, "matmul: inner dims {sa:?} x {sb:?}");
        let v = self.binary(a, b, |x, y| x.dot(y));
        self.push(v, Op::MatMul(a, b))
    }

    /// `x · w + bias` for a `1 × n` bias row.
    pub fn linear(&self, x: Var, w: Var, bias: Var) -> Var {
        self.add_row(self.matmul(x, w), bias)
    }

    pub fn transpose(&self, a: Var) -> Var {
        let v = self.unary(a, |x| x.t().to_owned());
        self.push(v, Op::Transpose(a))
    }

    pub fn slice(&self, a: Var, rows: Range<usize>, cols: Range<usize>) -> Var {
        let (r, c) = self.shape(a);
        assert!(rows.end <= r && cols.end <= c, "slice out of bounds");
        let v = self.unary(a, |x| {
            x.slice(s![rows.start..rows.end, cols.start..cols.end])
                .to_owned()
        });
        self.push(v, Op::Slice { src: a, rows, cols })
    }

    pub fn slice_rows(&self, a: Var, rows: Range<usize>) -> Var {
        let (_, c) = self.shape(a);
        self.slice(a, rows, 0..c)
    }

    pub fn slice_cols(&self, a: Var, cols: Range<usize>) -> Var {
        let (r, _) = self.shape(a);
        self.slice(a, 0..r, cols)
    }

    pub fn concat_rows(&self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_rows of nothing");
        let v = {
            let nodes = self.nodes.borrow();
            let views: Vec<_> = parts.iter().map(|p| nodes[p.0].value.view()).collect();
            ndarray::concatenate(Axis(0), &views).expect("concat_rows: column mismatch")
        };
        self.push(v, Op::ConcatRows(parts.to_vec()))
    }

    pub fn concat_cols(&self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_cols of nothing");
        let v = {
            let nodes = self.nodes.borrow();
            let views: Vec<_> = parts.iter().map(|p| nodes[p.0].value.view()).collect();
            ndarray::concatenate(Axis(1), &views).expect("concat_cols: row mismatch")
        };
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    /// Row `i` of the output is row `indices[i]` of `a`.
    pub fn gather_rows(&self, a: Var, indices: &[usize]) -> Var {
        let v = self.unary(a, |x| x.select(Axis(0), indices));
        self.push(v, Op::GatherRows(a, indices.to_vec()))
    }

    /// Tiles the rows of `table` so that output row `p * times + k` equals
    /// `table[p]` for every `k < times`.
    pub fn repeat_rows(&self, table: Var, times: usize) -> Var {
        let v = self.unary(table, |t| {
            let (r, c) = t.dim();
            Array2::from_shape_fn((r * times, c), |(i, j)| t[[i / times, j]])
        });
        self.push(v, Op::RepeatRows(table, times))
    }

    fn elementwise(&self, a: Var, kind: ops::Unary) -> Var {
        let v = self.unary(a, |x| x.mapv(|e| kind.apply(e)));
        self.push(v, Op::Unary(a, kind))
    }

    pub fn sigmoid(&self, a: Var) -> Var {
        self.elementwise(a, ops::Unary::Sigmoid)
    }

    pub fn tanh(&self, a: Var) -> Var {
        self.elementwise(a, ops::Unary::Tanh)
    }

    pub fn exp(&self, a: Var) -> Var {
        self.elementwise(a, ops::Unary::Exp)
    }

    /// Subgradient 0 at the origin.
    pub fn abs(&self, a: Var) -> Var {
        self.elementwise(a, ops::Unary::Abs)
    }

    pub fn square(&self, a: Var) -> Var {
        self.elementwise(a, ops::Unary::Square)
    }

    /// GELU, tanh approximation.
    pub fn gelu(&self, a: Var) -> Var {
        self.elementwise(a, ops::Unary::Gelu)
    }

    pub fn leaky_relu(&self, a: Var, slope: f64) -> Var {
        self.elementwise(a, ops::Unary::LeakyRelu(slope))
    }

    /// Applies a user-supplied elementwise function.
    pub fn map(&self, a: Var, f: Arc<dyn Elementwise>) -> Var {
        let v = self.unary(a, |x| x.mapv(|e| f.apply(e)));
        self.push(v, Op::Map(a, f))
    }

    /// Sigmoid on the columns in `cols`, identity elsewhere.
    pub fn sigmoid_cols(&self, a: Var, cols: Range<usize>) -> Var {
        let v = self.unary(a, |x| {
            let mut out = x.clone();
            out.slice_mut(s![.., cols.start..cols.end])
                .mapv_inplace(ops::sigmoid);
            out
        });
        self.push(v, Op::SigmoidCols(a, cols))
    }

    pub fn softmax_rows(&self, a: Var) -> Var {
        let v = self.unary(a, ops::softmax_rows);
        self.push(v, Op::SoftmaxRows(a))
    }

    /// Row-wise layer normalization with affine `gamma`, `beta` rows.
    pub fn layer_norm(&self, x: Var, gamma: Var, beta: Var, eps: f64) -> Var {
        let (_, n) = self.shape(x);
        assert_eq!(self.shape(gamma), (1, n), "layer_norm: gamma shape");
        assert_eq!(self.shape(beta), (1, n), "layer_norm: beta shape");
        let (out, xhat, rstd) = {
            let nodes = self.nodes.borrow();
            ops::layer_norm_forward(
                &nodes[x.0].value,
                &nodes[gamma.0].value,
                &nodes[beta.0].value,
                eps,
            )
        };
        self.push(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            },
        )
    }

    /// Multi-head scaled dot-product attention over a batch laid out
    /// position-major: row `p * batch + b` belongs to sample `b`.
    ///
    /// Every query row of sample `b` attends to every key row of sample `b`.
    pub fn attention(&self, q: Var, k: Var, v: Var, heads: usize, batch: usize) -> Var {
        let (qr, d) = self.shape(q);
        let (kr, kd) = self.shape(k);
        assert_eq!(self.shape(v), (kr, kd), "attention: k/v shape");
        assert_eq!(kd, d, "attention: model width");
        assert!(d % heads == 0, "attention: width not divisible by heads");
        assert!(qr % batch == 0 && kr % batch == 0, "attention: batch layout");
        let (out, probs) = {
            let nodes = self.nodes.borrow();
            ops::attention_forward(
                &nodes[q.0].value,
                &nodes[k.0].value,
                &nodes[v.0].value,
                heads,
                batch,
            )
        };
        self.push(
            out,
            Op::Attention {
                q,
                k,
                v,
                heads,
                batch,
                probs,
            },
        )
    }

    pub fn sum(&self, a: Var) -> Var {
        let v = self.unary(a, |x| Array2::from_elem((1, 1), x.sum()));
        self.push(v, Op::Sum(a))
    }

    pub fn mean(&self, a: Var) -> Var {
        let n = {
            let (r, c) = self.shape(a);
            r * c
        };
        assert!(n > 0, "mean of empty tensor");
        self.scale(self.sum(a), 1.0 / n as f64)
    }

    /// Population standard deviation of all entries; gradient is zero when
    /// the deviation is zero.
    pub fn std(&self, a: Var) -> Var {
        let v = self.unary(a, |x| Array2::from_elem((1, 1), ops::population_std(x)));
        self.push(v, Op::Std(a))
    }

    /// `log Σ exp(a_ij)` over all entries.
    pub fn logsumexp(&self, a: Var) -> Var {
        let v = self.unary(a, |x| {
            let m = x.fold(f64::NEG_INFINITY, |m, &e| m.max(e));
            let s: f64 = x.iter().map(|&e| (e - m).exp()).sum();
            Array2::from_elem((1, 1), m + s.ln())
        });
        self.push(v, Op::LogSumExp(a))
    }

    /// Back-propagates from a `1 × 1` root.
    pub fn backward(&self, root: Var) -> Gradients {
        let nodes = self.nodes.borrow();
        assert_eq!(nodes[root.0].value.dim(), (1, 1), "backward from non-scalar");
        let mut grads: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        if !nodes[root.0].requires_grad {
            return Gradients { grads };
        }
        grads[root.0] = Some(Array2::ones((1, 1)));
        for i in (0..=root.0).rev() {
            let node = &nodes[i];
            if !node.requires_grad {
                continue;
            }
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else {
                continue;
            };
            ops::backward(&nodes, node, g, &mut grads);
        }
        Gradients { grads }
    }
}

pub(crate) fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => {
            Zip::from(existing).and(&g).for_each(|e, &x| *e += x);
        }
        slot @ None => *slot = Some(g),
    }
}
