//! Reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] owns every intermediate value produced during a forward pass.
//! Operations return lightweight [`Var`] handles; [`Tape::backward`] walks the
//! tape in reverse and accumulates `∂loss/∂v` for every node that
//! (transitively) depends on a parameter created with [`Tape::param`].
//!
//! ```
//! use ggcn::numeric::{Matrix, Tape};
//!
//! let mut tape = Tape::new();
//! let w = tape.param(Matrix::from_rows(&[[3.0]]));
//! let sq = tape.mul(w, w).unwrap();
//! let loss = tape.sum(sq);
//! let grads = tape.backward(loss).unwrap();
//! assert_eq!(grads.get(w).unwrap()[(0, 0)], 6.0);
//! ```

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Probabilities are clamped here before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Relu(Var),
    Sigmoid(Var),
    Exp(Var),
    Log(Var),
    Sum(Var),
    Transpose(Var),
    Gram(Var),
    ConcatRows(Vec<Var>),
    SliceRows(Var, usize),
    PairBce {
        logits: Var,
        target: Matrix,
        pos_weight: f64,
    },
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// `∂loss/∂v`, or `None` when `v` does not require gradients.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Matrix> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

#[inline]
pub(crate) fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn same_shape(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension {
            op,
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A leaf that receives a gradient.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf that does not receive a gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Copies the current value of `v` into a new constant (stop-gradient).
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.value(v).clone();
        self.constant(value)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("add", self.value(a), self.value(b))?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("sub", self.value(a), self.value(b))?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("mul", self.value(a), self.value(b))?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| c * x);
        let rg = self.rg(&[a]);
        self.push(value, Op::Scale(a, c), rg)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| x + c);
        let rg = self.rg(&[a]);
        self.push(value, Op::AddScalar(a), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(0.0));
        let rg = self.rg(&[a]);
        self.push(value, Op::Relu(a), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(stable_sigmoid);
        let rg = self.rg(&[a]);
        self.push(value, Op::Sigmoid(a), rg)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::exp);
        let rg = self.rg(&[a]);
        self.push(value, Op::Exp(a), rg)
    }

    /// Natural log with inputs clamped below at [`LOG_FLOOR`].
    pub fn log(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(LOG_FLOOR).ln());
        let rg = self.rg(&[a]);
        self.push(value, Op::Log(a), rg)
    }

    /// Sum of all entries as a `1 x 1` matrix.
    pub fn sum(&mut self, a: Var) -> Var {
        let value = Matrix::scalar(self.value(a).sum());
        let rg = self.rg(&[a]);
        self.push(value, Op::Sum(a), rg)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        let rg = self.rg(&[a]);
        self.push(value, Op::Transpose(a), rg)
    }

    /// `a · aᵀ`, the matrix of pairwise row inner products.
    pub fn gram(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let value = v.matmul_t(v).expect("gram shapes always conform");
        let rg = self.rg(&[a]);
        self.push(value, Op::Gram(a), rg)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::contract("concat_rows of zero tensors"))?;
        let cols = self.value(*first).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            if v.cols() != cols {
                return Err(Error::Dimension {
                    op: "concat_rows",
                    left: self.value(*first).shape(),
                    right: v.shape(),
                });
            }
            rows += v.rows();
            data.extend_from_slice(v.as_slice());
        }
        let value = Matrix::from_vec(rows, cols, data)?;
        let rg = self.rg(parts);
        Ok(self.push(value, Op::ConcatRows(parts.to_vec()), rg))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let value = self.value(a).slice_rows(start, end)?;
        let rg = self.rg(&[a]);
        Ok(self.push(value, Op::SliceRows(a, start), rg))
    }

    /// Mean weighted binary cross-entropy of `sigmoid(logits)` against a
    /// binary `target`, taken over unordered off-diagonal pairs `i < j`:
    /// `-[w·a·ln p + (1-a)·ln(1-p)]`, with both logs clamped at [`LOG_FLOOR`].
    pub fn pair_bce_with_logits(&mut self, logits: Var, target: &Matrix, pos_weight: f64) -> Result<Var> {
        let l = self.value(logits);
        if l.rows() != l.cols() {
            return Err(Error::Dimension {
                op: "pair_bce_with_logits",
                left: l.shape(),
                right: target.shape(),
            });
        }
        same_shape("pair_bce_with_logits", l, target)?;
        let n = l.rows();
        let pairs = n * n.saturating_sub(1) / 2;
        let mut total = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let x = l[(i, j)];
                let a = target[(i, j)];
                let p = stable_sigmoid(x);
                let q = stable_sigmoid(-x);
                total -= pos_weight * a * p.max(LOG_FLOOR).ln() + (1.0 - a) * q.max(LOG_FLOOR).ln();
            }
        }
        let mean = if pairs == 0 { 0.0 } else { total / pairs as f64 };
        let rg = self.rg(&[logits]);
        Ok(self.push(
            Matrix::scalar(mean),
            Op::PairBce {
                logits,
                target: target.clone(),
                pos_weight,
            },
            rg,
        ))
    }

    /// Reverse pass from a scalar `loss`.
    ///
    /// Every node that requires a gradient gets an entry, zero-filled when
    /// the loss does not depend on it.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got {}x{}",
                lv.rows(),
                lv.cols()
            )));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads)?;
            grads[idx] = Some(g);
        }

        for (i, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && grads[i].is_none() {
                let (r, c) = node.value.shape();
                grads[i] = Some(Matrix::zeros(r, c));
            } else if !node.requires_grad {
                grads[i] = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &Matrix, grads: &mut [Option<Matrix>]) -> Result<()> {
        let mut acc = |v: Var, contrib: Matrix| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&contrib),
                slot @ None => *slot = Some(contrib),
            }
        };
        let val = |v: Var| &self.nodes[v.0].value;

        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.nodes[a.0].requires_grad {
                    acc(*a, g.matmul_t(val(*b))?);
                }
                if self.nodes[b.0].requires_grad {
                    acc(*b, val(*a).t_matmul(g)?);
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                acc(*a, g.zip_map(val(*b), |x, y| x * y));
                acc(*b, g.zip_map(val(*a), |x, y| x * y));
            }
            Op::Scale(a, c) => acc(*a, g.map(|x| c * x)),
            Op::AddScalar(a) => acc(*a, g.clone()),
            Op::Relu(a) => acc(*a, g.zip_map(val(*a), |x, y| if y > 0.0 { x } else { 0.0 })),
            Op::Sigmoid(a) => acc(*a, g.zip_map(&node.value, |x, s| x * s * (1.0 - s))),
            Op::Exp(a) => acc(*a, g.zip_map(&node.value, |x, e| x * e)),
            Op::Log(a) => acc(*a, g.zip_map(val(*a), |x, y| if y > LOG_FLOOR { x / y } else { 0.0 })),
            Op::Sum(a) => {
                let (r, c) = val(*a).shape();
                acc(*a, Matrix::filled(r, c, g[(0, 0)]));
            }
            Op::Transpose(a) => acc(*a, g.transpose()),
            Op::Gram(a) => {
                let sym = g.zip_map(&g.transpose(), |x, y| x + y);
                acc(*a, sym.matmul(val(*a))?);
            }
            Op::ConcatRows(parts) => {
                let mut start = 0;
                for p in parts {
                    let rows = val(*p).rows();
                    acc(*p, g.slice_rows(start, start + rows)?);
                    start += rows;
                }
            }
            Op::SliceRows(a, start) => {
                let src = val(*a);
                let mut full = Matrix::zeros(src.rows(), src.cols());
                for i in 0..g.rows() {
                    full.row_mut(start + i).copy_from_slice(g.row(i));
                }
                acc(*a, full);
            }
            Op::PairBce {
                logits,
                target,
                pos_weight,
            } => {
                let l = val(*logits);
                let n = l.rows();
                let pairs = n * n.saturating_sub(1) / 2;
                let mut out = Matrix::zeros(n, n);
                if pairs > 0 {
                    let scale = g[(0, 0)] / pairs as f64;
                    for i in 0..n {
                        for j in (i + 1)..n {
                            let x = l[(i, j)];
                            let a = target[(i, j)];
                            let p = stable_sigmoid(x);
                            let q = stable_sigmoid(-x);
                            let pos = if p > LOG_FLOOR { -q } else { 0.0 };
                            let neg = if q > LOG_FLOOR { p } else { 0.0 };
                            out[(i, j)] = scale * (pos_weight * a * pos + (1.0 - a) * neg);
                        }
                    }
                }
                acc(*logits, out);
            }
        }
        Ok(())
    }
}
