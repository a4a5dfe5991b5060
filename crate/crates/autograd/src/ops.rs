use std::ops::Range;
use std::sync::Arc;

use ndarray::{s, Array2, ArrayView2, Axis, Zip};

use crate::graph::{accumulate, Elementwise, Node, Var};
use crate::Tensor;

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

#[derive(Clone, Copy, Debug)]
pub(crate) enum Unary {
    Sigmoid,
    Tanh,
    Exp,
    Abs,
    Square,
    Gelu,
    LeakyRelu(f64),
}

impl Unary {
    pub(crate) fn apply(self, x: f64) -> f64 {
        match self {
            Unary::Sigmoid => sigmoid(x),
            Unary::Tanh => x.tanh(),
            Unary::Exp => x.exp(),
            Unary::Abs => x.abs(),
            Unary::Square => x * x,
            Unary::Gelu => 0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh()),
            Unary::LeakyRelu(slope) => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
        }
    }

    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Unary::Sigmoid => y * (1.0 - y),
            Unary::Tanh => 1.0 - y * y,
            Unary::Exp => y,
            Unary::Abs => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Unary::Square => 2.0 * x,
            Unary::Gelu => {
                let u = GELU_C * (x + 0.044715 * x * x * x);
                let t = u.tanh();
                let du = GELU_C * (1.0 + 3.0 * 0.044715 * x * x);
                0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
            }
            Unary::LeakyRelu(slope) => {
                if x >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }
}

pub(crate) enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    AddScalar(Var, Var),
    MulScalar(Var, Var),
    Scale(Var, f64),
    AddConst(Var),
    MatMul(Var, Var),
    Transpose(Var),
    Slice {
        src: Var,
        rows: Range<usize>,
        cols: Range<usize>,
    },
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    RepeatRows(Var, usize),
    Unary(Var, Unary),
    Map(Var, Arc<dyn Elementwise>),
    SigmoidCols(Var, Range<usize>),
    SoftmaxRows(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Tensor,
        rstd: Vec<f64>,
    },
    Attention {
        q: Var,
        k: Var,
        v: Var,
        heads: usize,
        batch: usize,
        probs: Vec<Tensor>,
    },
    Sum(Var),
    Std(Var),
    LogSumExp(Var),
}

impl Op {
    pub(crate) fn parents(&self) -> Vec<Var> {
        match self {
            Op::Leaf => vec![],
            Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::AddRow(a, b)
            | Op::MulRow(a, b)
            | Op::AddScalar(a, b)
            | Op::MulScalar(a, b)
            | Op::MatMul(a, b) => vec![*a, *b],
            Op::Scale(a, _)
            | Op::AddConst(a)
            | Op::Transpose(a)
            | Op::GatherRows(a, _)
            | Op::RepeatRows(a, _)
            | Op::Unary(a, _)
            | Op::Map(a, _)
            | Op::SigmoidCols(a, _)
            | Op::SoftmaxRows(a)
            | Op::Sum(a)
            | Op::Std(a)
            | Op::LogSumExp(a) => vec![*a],
            Op::Slice { src, .. } => vec![*src],
            Op::ConcatRows(parts) | Op::ConcatCols(parts) => parts.clone(),
            Op::LayerNorm { x, gamma, beta, .. } => vec![*x, *gamma, *beta],
            Op::Attention { q, k, v, .. } => vec![*q, *k, *v],
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_rows(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |m, &e| m.max(e));
        row.mapv_inplace(|e| (e - m).exp());
        let s = row.sum();
        row.mapv_inplace(|e| e / s);
    }
    out
}

pub(crate) fn population_std(x: &Tensor) -> f64 {
    let n = x.len();
    if n <= 1 {
        return 0.0;
    }
    let mean = x.sum() / n as f64;
    let var = x.iter().map(|&e| (e - mean) * (e - mean)).sum::<f64>() / n as f64;
    var.sqrt()
}

pub(crate) fn layer_norm_forward(
    x: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    eps: f64,
) -> (Tensor, Tensor, Vec<f64>) {
    let (r, n) = x.dim();
    let mut xhat = Array2::zeros((r, n));
    let mut rstd = Vec::with_capacity(r);
    for (i, row) in x.rows().into_iter().enumerate() {
        let mean = row.sum() / n as f64;
        let var = row.iter().map(|&e| (e - mean) * (e - mean)).sum::<f64>() / n as f64;
        let rs = 1.0 / (var + eps).sqrt();
        rstd.push(rs);
        for (j, &e) in row.iter().enumerate() {
            xhat[[i, j]] = (e - mean) * rs;
        }
    }
    let out = &xhat * gamma + beta;
    (out, xhat, rstd)
}

fn sample_rows(x: &Tensor, b: usize, batch: usize, cols: Range<usize>) -> ArrayView2<'_, f64> {
    x.slice(s![b..;batch, cols.start..cols.end])
}

pub(crate) fn attention_forward(
    q: &Tensor,
    k: &Tensor,
    v: &Tensor,
    heads: usize,
    batch: usize,
) -> (Tensor, Vec<Tensor>) {
    let d = q.ncols();
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut out = Array2::zeros(q.dim());
    let mut probs = Vec::with_capacity(batch * heads);
    for b in 0..batch {
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            let qb = sample_rows(q, b, batch, cols.clone());
            let kb = sample_rows(k, b, batch, cols.clone());
            let vb = sample_rows(v, b, batch, cols.clone());
            let scores = qb.dot(&kb.t()) * scale;
            let p = softmax_rows(&scores);
            let o = p.dot(&vb);
            out.slice_mut(s![b..;batch, cols.start..cols.end]).assign(&o);
            probs.push(p);
        }
    }
    (out, probs)
}

fn sum_rows(g: &Tensor) -> Tensor {
    g.sum_axis(Axis(0)).insert_axis(Axis(0))
}

pub(crate) fn backward(nodes: &[Node], node: &Node, g: Tensor, grads: &mut [Option<Tensor>]) {
    let val = |v: Var| -> &Tensor { &nodes[v.0].value };
    let needs = |v: Var| nodes[v.0].requires_grad;
    match &node.op {
        Op::Leaf => {}
        Op::Add(a, b) => {
            if needs(*b) {
                accumulate(grads, *b, g.clone());
            }
            if needs(*a) {
                accumulate(grads, *a, g);
            }
        }
        Op::Sub(a, b) => {
            if needs(*b) {
                accumulate(grads, *b, -&g);
            }
            if needs(*a) {
                accumulate(grads, *a, g);
            }
        }
        Op::Mul(a, b) => {
            if needs(*a) {
                accumulate(grads, *a, &g * val(*b));
            }
            if needs(*b) {
                accumulate(grads, *b, &g * val(*a));
            }
        }
        Op::AddRow(a, r) => {
            if needs(*r) {
                accumulate(grads, *r, sum_rows(&g));
            }
            if needs(*a) {
                accumulate(grads, *a, g);
            }
        }
        Op::MulRow(a, r) => {
            if needs(*r) {
                accumulate(grads, *r, sum_rows(&(&g * val(*a))));
            }
            if needs(*a) {
                accumulate(grads, *a, &g * val(*r));
            }
        }
        Op::AddScalar(a, s) => {
            if needs(*s) {
                accumulate(grads, *s, Array2::from_elem((1, 1), g.sum()));
            }
            if needs(*a) {
                accumulate(grads, *a, g);
            }
        }
        Op::MulScalar(a, s) => {
            if needs(*s) {
                let gs = Zip::from(&g).and(val(*a)).fold(0.0, |acc, &x, &y| acc + x * y);
                accumulate(grads, *s, Array2::from_elem((1, 1), gs));
            }
            if needs(*a) {
                let sv = val(*s)[[0, 0]];
                accumulate(grads, *a, g * sv);
            }
        }
        Op::Scale(a, c) => {
            if needs(*a) {
                accumulate(grads, *a, g * *c);
            }
        }
        Op::AddConst(a) => {
            if needs(*a) {
                accumulate(grads, *a, g);
            }
        }
        Op::MatMul(a, b) => {
            if needs(*a) {
                accumulate(grads, *a, g.dot(&val(*b).t()));
            }
            if needs(*b) {
                accumulate(grads, *b, val(*a).t().dot(&g));
            }
        }
        Op::Transpose(a) => {
            if needs(*a) {
                accumulate(grads, *a, g.t().to_owned());
            }
        }
        Op::Slice { src, rows, cols } => {
            if needs(*src) {
                let mut full = Array2::zeros(val(*src).dim());
                full.slice_mut(s![rows.start..rows.end, cols.start..cols.end])
                    .assign(&g);
                accumulate(grads, *src, full);
            }
        }
        Op::ConcatRows(parts) => {
            let mut start = 0;
            for p in parts {
                let r = val(*p).nrows();
                if needs(*p) {
                    accumulate(grads, *p, g.slice(s![start..start + r, ..]).to_owned());
                }
                start += r;
            }
        }
        Op::ConcatCols(parts) => {
            let mut start = 0;
            for p in parts {
                let c = val(*p).ncols();
                if needs(*p) {
                    accumulate(grads, *p, g.slice(s![.., start..start + c]).to_owned());
                }
                start += c;
            }
        }
        Op::GatherRows(a, idx) => {
            if needs(*a) {
                let mut full = Array2::zeros(val(*a).dim());
                for (i, &src) in idx.iter().enumerate() {
                    let mut row = full.row_mut(src);
                    row += &g.row(i);
                }
                accumulate(grads, *a, full);
            }
        }
        Op::RepeatRows(t, times) => {
            if needs(*t) {
                let (r, c) = val(*t).dim();
                let mut acc = Array2::zeros((r, c));
                for (i, row) in g.rows().into_iter().enumerate() {
                    let mut dst = acc.row_mut(i / times);
                    dst += &row;
                }
                accumulate(grads, *t, acc);
            }
        }
        Op::Unary(a, kind) => {
            if needs(*a) {
                let mut ga = g;
                Zip::from(&mut ga)
                    .and(val(*a))
                    .and(&*node.value)
                    .for_each(|gi, &x, &y| *gi *= kind.derivative(x, y));
                accumulate(grads, *a, ga);
            }
        }
        Op::Map(a, f) => {
            if needs(*a) {
                let mut ga = g;
                Zip::from(&mut ga)
                    .and(val(*a))
                    .and(&*node.value)
                    .for_each(|gi, &x, &y| *gi *= f.derivative(x, y));
                accumulate(grads, *a, ga);
            }
        }
        Op::SigmoidCols(a, cols) => {
            if needs(*a) {
                let mut ga = g;
                let y = node.value.slice(s![.., cols.start..cols.end]);
                Zip::from(ga.slice_mut(s![.., cols.start..cols.end]))
                    .and(&y)
                    .for_each(|gi, &y| *gi *= y * (1.0 - y));
                accumulate(grads, *a, ga);
            }
        }
        Op::SoftmaxRows(a) => {
            if needs(*a) {
                let y = &*node.value;
                let mut ga = &g * y;
                for (mut row, yrow) in ga.rows_mut().into_iter().zip(y.rows()) {
                    let dot = row.sum();
                    Zip::from(&mut row).and(&yrow).for_each(|r, &yy| *r -= yy * dot);
                }
                accumulate(grads, *a, ga);
            }
        }
        Op::LayerNorm {
            x,
            gamma,
            beta,
            xhat,
            rstd,
        } => {
            if needs(*beta) {
                accumulate(grads, *beta, sum_rows(&g));
            }
            if needs(*gamma) {
                accumulate(grads, *gamma, sum_rows(&(&g * xhat)));
            }
            if needs(*x) {
                let gxhat = &g * val(*gamma);
                let n = xhat.ncols() as f64;
                let mut gx = Array2::zeros(xhat.dim());
                for i in 0..xhat.nrows() {
                    let gr = gxhat.row(i);
                    let xr = xhat.row(i);
                    let sum_g = gr.sum();
                    let sum_gx = gr.dot(&xr);
                    for j in 0..xhat.ncols() {
                        gx[[i, j]] = rstd[i] / n * (n * gr[j] - sum_g - xr[j] * sum_gx);
                    }
                }
                accumulate(grads, *x, gx);
            }
        }
        Op::Attention {
            q,
            k,
            v,
            heads,
            batch,
            probs,
        } => {
            let (heads, batch) = (*heads, *batch);
            let qv = val(*q);
            let kv = val(*k);
            let vv = val(*v);
            let d = qv.ncols();
            let dh = d / heads;
            let scale = 1.0 / (dh as f64).sqrt();
            let mut gq = Array2::zeros(qv.dim());
            let mut gk = Array2::zeros(kv.dim());
            let mut gv = Array2::zeros(vv.dim());
            for b in 0..batch {
                for h in 0..heads {
                    let cols = h * dh..(h + 1) * dh;
                    let p = &probs[b * heads + h];
                    let go = sample_rows(&g, b, batch, cols.clone());
                    let qb = sample_rows(qv, b, batch, cols.clone());
                    let kb = sample_rows(kv, b, batch, cols.clone());
                    let vb = sample_rows(vv, b, batch, cols.clone());
                    let gp = go.dot(&vb.t());
                    let gvb = p.t().dot(&go);
                    let mut gs = p * &gp;
                    for (mut row, prow) in gs.rows_mut().into_iter().zip(p.rows()) {
                        let dot = row.sum();
                        Zip::from(&mut row).and(&prow).for_each(|r, &pp| *r -= pp * dot);
                    }
                    gs *= scale;
                    let gqb = gs.dot(&kb);
                    let gkb = gs.t().dot(&qb);
                    gq.slice_mut(s![b..;batch, cols.start..cols.end])
                        .assign(&gqb);
                    gk.slice_mut(s![b..;batch, cols.start..cols.end])
                        .assign(&gkb);
                    gv.slice_mut(s![b..;batch, cols.start..cols.end])
                        .assign(&gvb);
                }
            }
            if needs(*q) {
                accumulate(grads, *q, gq);
            }
            if needs(*k) {
                accumulate(grads, *k, gk);
            }
            if needs(*v) {
                accumulate(grads, *v, gv);
            }
        }
        Op::Sum(a) => {
            if needs(*a) {
                accumulate(grads, *a, Array2::from_elem(val(*a).dim(), g[[0, 0]]));
            }
        }
        Op::Std(a) => {
            if needs(*a) {
                let x = val(*a);
                let sd = node.value[[0, 0]];
                let n = x.len() as f64;
                let ga = if sd > 0.0 {
                    let mean = x.sum() / n;
                    x.mapv(|e| g[[0, 0]] * (e - mean) / (n * sd))
                } else {
                    Array2::zeros(x.dim())
                };
                accumulate(grads, *a, ga);
            }
        }
        Op::LogSumExp(a) => {
            if needs(*a) {
                let x = val(*a);
                let lse = node.value[[0, 0]];
                accumulate(grads, *a, x.mapv(|e| g[[0, 0]] * (e - lse).exp()));
            }
        }
    }
}
