//! Reverse-mode differentiation over a recorded list of matrix operations.
//!
//! A [`Tape`] is built fresh for every forward pass. Each operation appends a
//! node holding its output value; [`Tape::backward`] walks the nodes in
//! reverse and accumulates `∂loss/∂param` into the gradient slots of a
//! [`ParamStore`].

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::numerics::matrix::{bce_with_logits, sigmoid};
use crate::numerics::{Matrix, ParamId, ParamStore};

static NEXT_TAPE_ID: AtomicUsize = AtomicUsize::new(0);

/// Handle to a node on a specific tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var {
    tape: usize,
    index: usize,
}

#[derive(Debug)]
enum Op {
    Const,
    Param(ParamId),
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddColumn(usize, usize),
    Sigmoid(usize),
    Tanh(usize),
    OneMinus(usize),
    Scale(usize, f64),
    VStack(Vec<usize>),
    Sum(usize),
    BceSum {
        logits: usize,
        targets: Matrix,
        weights: Matrix,
    },
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
}

#[derive(Debug)]
pub struct Tape {
    id: usize,
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var {
            tape: self.id,
            index: self.nodes.len() - 1,
        }
    }

    fn idx(&self, v: Var) -> Result<usize> {
        if v.tape != self.id || v.index >= self.nodes.len() {
            return Err(Error::Usage("variable does not belong to this tape".into()));
        }
        Ok(v.index)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        assert_eq!(v.tape, self.id, "variable does not belong to this tape");
        &self.nodes[v.index].value
    }

    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Const)
    }

    /// Record a parameter leaf. Its gradient lands in `store`'s slot on backward.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        let value = self.nodes[ia].value.matmul(&self.nodes[ib].value)?;
        Ok(self.push(value, Op::MatMul(ia, ib)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        let value = self.nodes[ia].value.add(&self.nodes[ib].value)?;
        Ok(self.push(value, Op::Add(ia, ib)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        let value = self.nodes[ia].value.sub(&self.nodes[ib].value)?;
        Ok(self.push(value, Op::Sub(ia, ib)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        let value = self.nodes[ia].value.hadamard(&self.nodes[ib].value)?;
        Ok(self.push(value, Op::Mul(ia, ib)))
    }

    /// `a + bias` where `bias` is a column added to every column of `a`.
    pub fn add_column(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (ia, ib) = (self.idx(a)?, self.idx(bias)?);
        let value = self.nodes[ia].value.add_column(&self.nodes[ib].value)?;
        Ok(self.push(value, Op::AddColumn(ia, ib)))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let ia = self.idx(a)?;
        let value = self.nodes[ia].value.sigmoid();
        Ok(self.push(value, Op::Sigmoid(ia)))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let ia = self.idx(a)?;
        let value = self.nodes[ia].value.tanh();
        Ok(self.push(value, Op::Tanh(ia)))
    }

    /// `1 - a`, elementwise.
    pub fn one_minus(&mut self, a: Var) -> Result<Var> {
        let ia = self.idx(a)?;
        let value = self.nodes[ia].value.map(|v| 1.0 - v);
        Ok(self.push(value, Op::OneMinus(ia)))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let ia = self.idx(a)?;
        let value = self.nodes[ia].value.scale(factor);
        Ok(self.push(value, Op::Scale(ia, factor)))
    }

    pub fn vstack(&mut self, parts: &[Var]) -> Result<Var> {
        let idx = parts.iter().map(|&p| self.idx(p)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Matrix> = idx.iter().map(|&i| &self.nodes[i].value).collect();
        let value = Matrix::vstack(&refs)?;
        Ok(self.push(value, Op::VStack(idx)))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let ia = self.idx(a)?;
        let value = Matrix::filled(1, 1, self.nodes[ia].value.sum());
        Ok(self.push(value, Op::Sum(ia)))
    }

    /// `Σ w_i · bce_with_logits(z_i, y_i)` as a `1x1` node.
    pub fn bce_with_logits_sum(&mut self, logits: Var, targets: Matrix, weights: Matrix) -> Result<Var> {
        let il = self.idx(logits)?;
        let z = &self.nodes[il].value;
        if z.shape() != targets.shape() {
            return Err(Error::dims("bce_with_logits", z.shape(), targets.shape()));
        }
        if z.shape() != weights.shape() {
            return Err(Error::dims("bce_with_logits", z.shape(), weights.shape()));
        }
        let total = z
            .data()
            .iter()
            .zip(targets.data())
            .zip(weights.data())
            .map(|((&z, &y), &w)| w * bce_with_logits(z, y))
            .sum();
        let value = Matrix::filled(1, 1, total);
        Ok(self.push(
            value,
            Op::BceSum {
                logits: il,
                targets,
                weights,
            },
        ))
    }

    /// Zero every gradient slot in `store`, then accumulate `∂loss/∂param`.
    ///
    /// `loss` must be a `1x1` node of this tape. Parameters that do not reach
    /// the loss end up with exact zeros.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Usage("backward called before any forward computation".into()));
        }
        let root = self.idx(loss)?;
        if self.nodes[root].value.shape() != (1, 1) {
            let (r, c) = self.nodes[root].value.shape();
            return Err(Error::Usage(format!("backward needs a scalar loss, got {r}x{c}")));
        }
        store.zero_grads();

        let mut grads: Vec<Option<Matrix>> = (0..=root).map(|_| None).collect();
        grads[root] = Some(Matrix::filled(1, 1, 1.0));

        for i in (0..=root).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Const => {}
                Op::Param(id) => store.grad_mut(*id).add_assign(&g)?,
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(&self.nodes[*b].value)?;
                    let gb = self.nodes[*a].value.t_matmul(&g)?;
                    accumulate(&mut grads, *a, ga)?;
                    accumulate(&mut grads, *b, gb)?;
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone())?;
                    accumulate(&mut grads, *b, g)?;
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *b, g.scale(-1.0))?;
                    accumulate(&mut grads, *a, g)?;
                }
                Op::Mul(a, b) => {
                    let ga = g.hadamard(&self.nodes[*b].value)?;
                    let gb = g.hadamard(&self.nodes[*a].value)?;
                    accumulate(&mut grads, *a, ga)?;
                    accumulate(&mut grads, *b, gb)?;
                }
                Op::AddColumn(a, bias) => {
                    accumulate(&mut grads, *bias, g.sum_columns())?;
                    accumulate(&mut grads, *a, g)?;
                }
                Op::Sigmoid(a) => {
                    let s = &node.value;
                    let ga = Matrix::from_vec(
                        s.rows(),
                        s.cols(),
                        g.data().iter().zip(s.data()).map(|(&g, &s)| g * s * (1.0 - s)).collect(),
                    )?;
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::Tanh(a) => {
                    let t = &node.value;
                    let ga = Matrix::from_vec(
                        t.rows(),
                        t.cols(),
                        g.data().iter().zip(t.data()).map(|(&g, &t)| g * (1.0 - t * t)).collect(),
                    )?;
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::OneMinus(a) => accumulate(&mut grads, *a, g.scale(-1.0))?,
                Op::Scale(a, factor) => accumulate(&mut grads, *a, g.scale(*factor))?,
                Op::VStack(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let rows = self.nodes[p].value.rows();
                        let slice: Vec<usize> = (offset..offset + rows).collect();
                        accumulate(&mut grads, p, g.select_rows(&slice)?)?;
                        offset += rows;
                    }
                }
                Op::Sum(a) => {
                    let (r, c) = self.nodes[*a].value.shape();
                    accumulate(&mut grads, *a, Matrix::filled(r, c, g.get(0, 0)))?;
                }
                Op::BceSum {
                    logits,
                    targets,
                    weights,
                } => {
                    let upstream = g.get(0, 0);
                    let z = &self.nodes[*logits].value;
                    let gz = Matrix::from_vec(
                        z.rows(),
                        z.cols(),
                        z.data()
                            .iter()
                            .zip(targets.data())
                            .zip(weights.data())
                            .map(|((&z, &y), &w)| upstream * w * (sigmoid(z) - y))
                            .collect(),
                    )?;
                    accumulate(&mut grads, *logits, gz)?;
                }
            }
        }
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<Matrix>], index: usize, g: Matrix) -> Result<()> {
    match &mut grads[index] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_map_gradient_is_outer_product_pattern() {
        let mut store = ParamStore::new();
        let w = store.insert("w", Matrix::from_rows(&[vec![0.3, -0.2, 0.1], vec![1.0, 2.0, 3.0]]).unwrap()).unwrap();
        let mut tape = Tape::new();
        let wv = tape.param(&store, w);
        let x = tape.constant(Matrix::column_vector(&[2.0, -1.0, 0.5]));
        let y = tape.matmul(wv, x).unwrap();
        let loss = tape.sum(y).unwrap();
        tape.backward(loss, &mut store).unwrap();
        let expected = Matrix::from_rows(&[vec![2.0, -1.0, 0.5], vec![2.0, -1.0, 0.5]]).unwrap();
        assert_eq!(store.grad(w), &expected);
    }

    #[test]
    fn unused_parameter_gets_exact_zero() {
        let mut store = ParamStore::new();
        let used = store.insert("used", Matrix::filled(1, 1, 2.0)).unwrap();
        let unused = store.insert("unused", Matrix::filled(2, 2, 5.0)).unwrap();
        store.grad_mut(unused).fill(9.0);
        let mut tape = Tape::new();
        let u = tape.param(&store, used);
        let _ = tape.param(&store, unused);
        let s = tape.sigmoid(u).unwrap();
        tape.backward(s, &mut store).unwrap();
        assert!(store.grad(unused).data().iter().all(|&g| g == 0.0));
        assert!(store.grad(used).get(0, 0) > 0.0);
    }

    #[test]
    fn backward_before_forward_is_usage_error() {
        let mut store = ParamStore::new();
        let tape = Tape::new();
        let mut other = Tape::new();
        let v = other.constant(Matrix::filled(1, 1, 1.0));
        assert!(matches!(tape.backward(v, &mut store), Err(Error::Usage(_))));
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut store = ParamStore::new();
        let mut tape = Tape::new();
        let v = tape.constant(Matrix::zeros(2, 1));
        assert!(matches!(tape.backward(v, &mut store), Err(Error::Usage(_))));
    }
}
