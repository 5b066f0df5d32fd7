//! Minimal reverse-mode autodiff over 2-D arrays, generic over the scalar.
//! Every forward op records enough to push gradients back; a fresh tape is
//! built per batch.

use ndarray::{s, Array2, Axis};

use crate::error::{Result, ToxgenError};
use crate::scalar::Scalar;

pub type NodeId = usize;

enum Op<S: Scalar> {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, S),
    AddConst(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Relu(NodeId),
    SoftmaxRows(NodeId),
    Transpose(NodeId),
    ConcatRows(NodeId, NodeId),
    ConcatCols(NodeId, NodeId),
    MeanRows(NodeId),
    Gather(NodeId, Vec<usize>),
    /// pairwise negative L1 distance: out[i][j] = -sum_d |a[i][d] - b[j][d]|
    NegAbsDist(NodeId, NodeId),
    /// mean token-level cross entropy of row logits against target indices
    CrossEntropy(NodeId, Vec<usize>),
}

struct Node<S: Scalar> {
    value: Array2<S>,
    op: Op<S>,
}

pub struct Tape<S: Scalar> {
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    fn push(&mut self, value: Array2<S>, op: Op<S>) -> NodeId {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &Array2<S> {
        &self.nodes[id].value
    }

    pub fn leaf(&mut self, value: Array2<S>) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.nodes[a].value.dim();
        let (br, bc) = self.nodes[b].value.dim();
        if ac != br {
            return Err(ToxgenError::Shape(format!(
                "matmul: left is {ar}x{ac}, right is {br}x{bc}"
            )));
        }
        let v = self.nodes[a].value.dot(&self.nodes[b].value);
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.nodes[a].value.dim() != self.nodes[b].value.dim() {
            return Err(ToxgenError::Shape(format!(
                "add: {:?} vs {:?}",
                self.nodes[a].value.dim(),
                self.nodes[b].value.dim()
            )));
        }
        let v = &self.nodes[a].value + &self.nodes[b].value;
        Ok(self.push(v, Op::Add(a, b)))
    }

    /// `a` is (n x d), `row` is (1 x d), broadcast-added to every row.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (_, d) = self.nodes[a].value.dim();
        let (rr, rd) = self.nodes[row].value.dim();
        if rr != 1 || rd != d {
            return Err(ToxgenError::Shape(format!(
                "add_row: row is {rr}x{rd}, expected 1x{d}"
            )));
        }
        let v = &self.nodes[a].value + &self.nodes[row].value;
        Ok(self.push(v, Op::AddRow(a, row)))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.nodes[a].value.dim() != self.nodes[b].value.dim() {
            return Err(ToxgenError::Shape("elementwise mul shape mismatch".into()));
        }
        let v = &self.nodes[a].value * &self.nodes[b].value;
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: NodeId, c: S) -> NodeId {
        let v = self.nodes[a].value.mapv(|x| x * c);
        self.push(v, Op::Scale(a, c))
    }

    /// Add a non-differentiable constant (e.g. an attention mask).
    pub fn add_const(&mut self, a: NodeId, c: Array2<S>) -> Result<NodeId> {
        if self.nodes[a].value.dim() != c.dim() {
            return Err(ToxgenError::Shape("add_const shape mismatch".into()));
        }
        let v = &self.nodes[a].value + &c;
        Ok(self.push(v, Op::AddConst(a)))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.mapv(|x| x.tanh());
        self.push(v, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let one = S::one();
        let v = self.nodes[a].value.mapv(|x| one / (one + (-x).exp()));
        self.push(v, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.mapv(|x| if x > S::zero() { x } else { S::zero() });
        self.push(v, Op::Relu(a))
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let x = &self.nodes[a].value;
        let mut v = x.clone();
        for mut row in v.rows_mut() {
            let max = row.iter().cloned().fold(S::neg_infinity(), S::max);
            row.mapv_inplace(|z| (z - max).exp());
            let sum: S = row.iter().cloned().sum();
            row.mapv_inplace(|z| z / sum);
        }
        self.push(v, Op::SoftmaxRows(a))
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.t().to_owned();
        self.push(v, Op::Transpose(a))
    }

    pub fn concat_rows(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let va = &self.nodes[a].value;
        let vb = &self.nodes[b].value;
        if va.ncols() != vb.ncols() {
            return Err(ToxgenError::Shape(format!(
                "concat_rows: widths {} vs {}",
                va.ncols(),
                vb.ncols()
            )));
        }
        let v = ndarray::concatenate(Axis(0), &[va.view(), vb.view()])
            .map_err(|e| ToxgenError::Shape(e.to_string()))?;
        Ok(self.push(v, Op::ConcatRows(a, b)))
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let va = &self.nodes[a].value;
        let vb = &self.nodes[b].value;
        if va.nrows() != vb.nrows() {
            return Err(ToxgenError::Shape(format!(
                "concat_cols: heights {} vs {}",
                va.nrows(),
                vb.nrows()
            )));
        }
        let v = ndarray::concatenate(Axis(1), &[va.view(), vb.view()])
            .map_err(|e| ToxgenError::Shape(e.to_string()))?;
        Ok(self.push(v, Op::ConcatCols(a, b)))
    }

    /// Mean over rows: (n x d) -> (1 x d).
    pub fn mean_rows(&mut self, a: NodeId) -> NodeId {
        let x = &self.nodes[a].value;
        let n = S::from_usize_(x.nrows());
        let v = x
            .sum_axis(Axis(0))
            .mapv(|s| s / n)
            .insert_axis(Axis(0));
        self.push(v, Op::MeanRows(a))
    }

    /// Select rows of a parameter matrix (embedding lookup).
    pub fn gather(&mut self, table: NodeId, indices: &[usize]) -> Result<NodeId> {
        let t = &self.nodes[table].value;
        let mut v = Array2::zeros((indices.len(), t.ncols()));
        for (r, &i) in indices.iter().enumerate() {
            if i >= t.nrows() {
                return Err(ToxgenError::Shape(format!(
                    "gather: index {i} out of {} rows",
                    t.nrows()
                )));
            }
            v.row_mut(r).assign(&t.row(i));
        }
        Ok(self.push(v, Op::Gather(table, indices.to_vec())))
    }

    /// out[i][j] = -sum_d |a[i][d] - b[j][d]|
    pub fn neg_abs_dist(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let va = &self.nodes[a].value;
        let vb = &self.nodes[b].value;
        if va.ncols() != vb.ncols() {
            return Err(ToxgenError::Shape("neg_abs_dist width mismatch".into()));
        }
        let mut v = Array2::zeros((va.nrows(), vb.nrows()));
        for i in 0..va.nrows() {
            for j in 0..vb.nrows() {
                let mut acc = S::zero();
                for d in 0..va.ncols() {
                    acc += (va[[i, d]] - vb[[j, d]]).abs();
                }
                v[[i, j]] = -acc;
            }
        }
        Ok(self.push(v, Op::NegAbsDist(a, b)))
    }

    /// Mean cross entropy of row logits vs target class indices -> (1 x 1).
    pub fn cross_entropy(&mut self, logits: NodeId, targets: &[usize]) -> Result<NodeId> {
        let z = &self.nodes[logits].value;
        if targets.len() != z.nrows() {
            return Err(ToxgenError::Shape(format!(
                "cross_entropy: {} targets for {} logit rows",
                targets.len(),
                z.nrows()
            )));
        }
        let mut loss = S::zero();
        for (i, &t) in targets.iter().enumerate() {
            if t >= z.ncols() {
                return Err(ToxgenError::Shape(format!(
                    "cross_entropy: target {t} out of {} classes",
                    z.ncols()
                )));
            }
            let row = z.row(i);
            let max = row.iter().cloned().fold(S::neg_infinity(), S::max);
            let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<S>().ln();
            loss += lse - row[t];
        }
        loss = loss / S::from_usize_(targets.len());
        let v = Array2::from_elem((1, 1), loss);
        Ok(self.push(v, Op::CrossEntropy(logits, targets.to_vec())))
    }

    /// Backward pass from a scalar (1 x 1) node. Returns one gradient slot
    /// per node; leaves carry the gradients callers care about.
    pub fn backward(&self, loss: NodeId) -> Result<Vec<Option<Array2<S>>>> {
        if self.nodes[loss].value.dim() != (1, 1) {
            return Err(ToxgenError::Shape("backward root must be 1x1".into()));
        }
        let mut grads: Vec<Option<Array2<S>>> = vec![None; self.nodes.len()];
        grads[loss] = Some(Array2::from_elem((1, 1), S::one()));

        for id in (0..=loss).rev() {
            let g = match grads[id].take() {
                Some(g) => g,
                None => continue,
            };
            let accum = |slot: &mut Option<Array2<S>>, contrib: Array2<S>| match slot {
                Some(existing) => *existing = &*existing + &contrib,
                None => *slot = Some(contrib),
            };
            match &self.nodes[id].op {
                Op::Leaf => {
                    grads[id] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.nodes[*b].value.t());
                    let gb = self.nodes[*a].value.t().dot(&g);
                    accum(&mut grads[*a], ga);
                    accum(&mut grads[*b], gb);
                }
                Op::Add(a, b) => {
                    accum(&mut grads[*a], g.clone());
                    accum(&mut grads[*b], g);
                }
                Op::AddRow(a, row) => {
                    let grow = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    accum(&mut grads[*a], g);
                    accum(&mut grads[*row], grow);
                }
                Op::Mul(a, b) => {
                    let ga = &g * &self.nodes[*b].value;
                    let gb = &g * &self.nodes[*a].value;
                    accum(&mut grads[*a], ga);
                    accum(&mut grads[*b], gb);
                }
                Op::Scale(a, c) => {
                    accum(&mut grads[*a], g.mapv(|x| x * *c));
                }
                Op::AddConst(a) => {
                    accum(&mut grads[*a], g);
                }
                Op::Tanh(a) => {
                    let y = &self.nodes[id].value;
                    let ga = &g * &y.mapv(|v| S::one() - v * v);
                    accum(&mut grads[*a], ga);
                }
                Op::Sigmoid(a) => {
                    let y = &self.nodes[id].value;
                    let ga = &g * &y.mapv(|v| v * (S::one() - v));
                    accum(&mut grads[*a], ga);
                }
                Op::Relu(a) => {
                    let x = &self.nodes[*a].value;
                    let mask = x.mapv(|v| if v > S::zero() { S::one() } else { S::zero() });
                    accum(&mut grads[*a], &g * &mask);
                }
                Op::SoftmaxRows(a) => {
                    let y = &self.nodes[id].value;
                    let mut ga = Array2::zeros(y.dim());
                    for i in 0..y.nrows() {
                        let yi = y.row(i);
                        let gi = g.row(i);
                        let dot: S = yi.iter().zip(gi.iter()).map(|(&a, &b)| a * b).sum();
                        for j in 0..y.ncols() {
                            ga[[i, j]] = yi[j] * (gi[j] - dot);
                        }
                    }
                    accum(&mut grads[*a], ga);
                }
                Op::Transpose(a) => {
                    accum(&mut grads[*a], g.t().to_owned());
                }
                Op::ConcatRows(a, b) => {
                    let na = self.nodes[*a].value.nrows();
                    let ga = g.slice(s![..na, ..]).to_owned();
                    let gb = g.slice(s![na.., ..]).to_owned();
                    accum(&mut grads[*a], ga);
                    accum(&mut grads[*b], gb);
                }
                Op::ConcatCols(a, b) => {
                    let ca = self.nodes[*a].value.ncols();
                    let ga = g.slice(s![.., ..ca]).to_owned();
                    let gb = g.slice(s![.., ca..]).to_owned();
                    accum(&mut grads[*a], ga);
                    accum(&mut grads[*b], gb);
                }
                Op::MeanRows(a) => {
                    let n = self.nodes[*a].value.nrows();
                    let inv = S::one() / S::from_usize_(n);
                    let mut ga = Array2::zeros(self.nodes[*a].value.dim());
                    for i in 0..n {
                        for j in 0..ga.ncols() {
                            ga[[i, j]] = g[[0, j]] * inv;
                        }
                    }
                    accum(&mut grads[*a], ga);
                }
                Op::Gather(table, indices) => {
                    let mut gt = Array2::zeros(self.nodes[*table].value.dim());
                    for (r, &i) in indices.iter().enumerate() {
                        for j in 0..gt.ncols() {
                            gt[[i, j]] += g[[r, j]];
                        }
                    }
                    accum(&mut grads[*table], gt);
                }
                Op::NegAbsDist(a, b) => {
                    let va = &self.nodes[*a].value;
                    let vb = &self.nodes[*b].value;
                    let mut ga = Array2::zeros(va.dim());
                    let mut gb = Array2::zeros(vb.dim());
                    for i in 0..va.nrows() {
                        for j in 0..vb.nrows() {
                            let gij = g[[i, j]];
                            for d in 0..va.ncols() {
                                let diff = va[[i, d]] - vb[[j, d]];
                                let sign = if diff > S::zero() {
                                    S::one()
                                } else if diff < S::zero() {
                                    -S::one()
                                } else {
                                    S::zero()
                                };
                                ga[[i, d]] -= gij * sign;
                                gb[[j, d]] += gij * sign;
                            }
                        }
                    }
                    accum(&mut grads[*a], ga);
                    accum(&mut grads[*b], gb);
                }
                Op::CrossEntropy(logits, targets) => {
                    let z = &self.nodes[*logits].value;
                    let scale = g[[0, 0]] / S::from_usize_(targets.len());
                    let mut gz = Array2::zeros(z.dim());
                    for (i, &t) in targets.iter().enumerate() {
                        let row = z.row(i);
                        let max = row.iter().cloned().fold(S::neg_infinity(), S::max);
                        let sum: S = row.iter().map(|&x| (x - max).exp()).sum();
                        for j in 0..z.ncols() {
                            let p = (z[[i, j]] - max).exp() / sum;
                            let indic = if j == t { S::one() } else { S::zero() };
                            gz[[i, j]] = (p - indic) * scale;
                        }
                    }
                    accum(&mut grads[*logits], gz);
                }
            }
        }
        Ok(grads)
    }
}
