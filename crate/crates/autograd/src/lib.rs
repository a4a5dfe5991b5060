//! Reverse-mode automatic differentiation over dense `f64` matrices.
//!
//! A [`Graph`] records every operation applied to its [`Var`] handles. Values
//! are computed eagerly when the operation is recorded; [`Graph::backward`]
//! walks the recorded nodes in reverse insertion order and accumulates
//! gradients for every node that (transitively) depends on a trainable leaf.
//!
//! ```
//! use ndarray::array;
//! use swatnn_autograd::Graph;
//!
//! let g = Graph::new();
//! let x = g.variable(array![[1.0, 2.0], [3.0, 4.0]]);
//! let w = g.constant(array![[0.5], [-1.0]]);
//! let loss = g.sum(g.square(g.matmul(x, w)));
//! let grads = g.backward(loss);
//! assert_eq!(grads.get(x).unwrap().dim(), (2, 2));
//! ```
//!
//! Every matrix is two-dimensional; scalars are `1 × 1`.

mod graph;
mod ops;

pub use graph::{Elementwise, Gradients, Graph, Var};

/// Dense matrix type used for every node value and gradient.
pub type Tensor = ndarray::Array2<f64>;
