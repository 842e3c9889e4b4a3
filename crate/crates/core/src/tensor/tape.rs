use super::{Matrix, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// How the right operand of an elementwise op is stretched over the left.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Broadcast {
    Same,
    /// 1 x cols, repeated over rows.
    Row,
    /// rows x 1, repeated over columns.
    Col,
    /// 1 x 1.
    Scalar,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var, Broadcast),
    Mul(Var, Var, Broadcast),
    ScalarMul(Var, f64),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    Ln(Var),
    SoftmaxRows(Var),
    SumRows(Var),
    SumAll(Var),
    Transpose(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    ScatterAddRows(Var, Vec<usize>),
    SegmentSoftmax(Var, Vec<usize>),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// Records primitive applications in evaluation order and replays them
/// backwards to accumulate gradients on leaves.
///
/// Nodes are appended only after their inputs, so the node list is always a
/// topological order. A tape is single-threaded; build one per worker.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Matrix>>,
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

    /// Trainable leaf: gradients are accumulated for it by [`Tape::backward`].
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Accumulated gradient of a trainable leaf, if any backward pass reached it.
    pub fn grad(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn zero_grad(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = None);
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, inputs: &[Var]) -> bool {
        inputs.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn broadcast_kind(
        &self,
        op: &'static str,
        a: Var,
        b: Var,
    ) -> Result<Broadcast, TensorError> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if (ar, ac) == (br, bc) {
            Ok(Broadcast::Same)
        } else if (br, bc) == (1, 1) {
            Ok(Broadcast::Scalar)
        } else if br == 1 && bc == ac {
            Ok(Broadcast::Row)
        } else if bc == 1 && br == ar {
            Ok(Broadcast::Col)
        } else {
            Err(TensorError::Shape {
                op,
                lhs: (ar, ac),
                rhs: (br, bc),
            })
        }
    }

    fn broadcast_zip(
        &self,
        a: Var,
        b: Var,
        kind: Broadcast,
        f: impl Fn(f64, f64) -> f64,
    ) -> Matrix {
        let av = self.value(a);
        let bv = self.value(b);
        let (rows, cols) = av.shape();
        let mut out = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                out[(r, c)] = f(av[(r, c)], broadcast_at(bv, kind, r, c));
            }
        }
        out
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if ac != br {
            return Err(TensorError::Shape {
                op: "matmul",
                lhs: (ar, ac),
                rhs: (br, bc),
            });
        }
        let value = self.value(a).matmul(self.value(b));
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    /// `a + b`, where `b` may be a row vector, column vector or scalar.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let kind = self.broadcast_kind("add", a, b)?;
        let value = self.broadcast_zip(a, b, kind, |x, y| x + y);
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Add(a, b, kind), rg))
    }

    /// `a - b` with the same broadcasting as [`Tape::add`].
    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let neg = self.scalar_mul(b, -1.0);
        self.add(a, neg)
    }

    /// Elementwise product, with the same broadcasting as [`Tape::add`].
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let kind = self.broadcast_kind("elementwise_mul", a, b)?;
        let value = self.broadcast_zip(a, b, kind, |x, y| x * y);
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b, kind), rg))
    }

    pub fn scalar_mul(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a).map(|x| x * s);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::ScalarMul(a, s), rg)
    }

    /// `a + c` for a constant `c`.
    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let k = self.constant(Matrix::scalar(c));
        self.add(a, k).expect("scalar broadcast always fits")
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let value = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        let rg = self.any_grad(&[a]);
        self.push(value, Op::LeakyRelu(a, slope), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.leaky_relu(a, 0.0)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Sigmoid(a), rg)
    }

    /// Natural logarithm; inputs must be positive.
    pub fn ln(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::ln);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Ln(a), rg)
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let mut value = Matrix::zeros(src.rows(), src.cols());
        for r in 0..src.rows() {
            softmax_into(src.row(r), value.row_mut(r));
        }
        let rg = self.any_grad(&[a]);
        self.push(value, Op::SoftmaxRows(a), rg)
    }

    /// Column sums: `rows x cols -> 1 x cols`.
    pub fn sum_rows(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let mut value = Matrix::zeros(1, src.cols());
        for r in 0..src.rows() {
            for (o, &x) in value.row_mut(0).iter_mut().zip(src.row(r)) {
                *o += x;
            }
        }
        let rg = self.any_grad(&[a]);
        self.push(value, Op::SumRows(a), rg)
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let value = Matrix::scalar(self.value(a).sum());
        let rg = self.any_grad(&[a]);
        self.push(value, Op::SumAll(a), rg)
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let n = self.value(a).len().max(1) as f64;
        let s = self.sum_all(a);
        self.scalar_mul(s, 1.0 / n)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Transpose(a), rg)
    }

    /// Side-by-side concatenation; all parts share the row count.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = parts.first().ok_or(TensorError::Empty("concat_cols"))?;
        let rows = self.shape(*first).0;
        let mut cols = 0;
        for &p in parts {
            let shape = self.shape(p);
            if shape.0 != rows {
                return Err(TensorError::Shape {
                    op: "concat_cols",
                    lhs: self.shape(*first),
                    rhs: shape,
                });
            }
            cols += shape.1;
        }
        let mut value = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let mut offset = 0;
            for &p in parts {
                let src = self.value(p).row(r);
                value.row_mut(r)[offset..offset + src.len()].copy_from_slice(src);
                offset += src.len();
            }
        }
        let rg = self.any_grad(parts);
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), rg))
    }

    /// Vertical stacking; all parts share the column count.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = parts.first().ok_or(TensorError::Empty("concat_rows"))?;
        let cols = self.shape(*first).1;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let shape = self.shape(p);
            if shape.1 != cols {
                return Err(TensorError::Shape {
                    op: "concat_rows",
                    lhs: self.shape(*first),
                    rhs: shape,
                });
            }
            rows += shape.0;
            data.extend_from_slice(self.value(p).as_slice());
        }
        let rg = self.any_grad(parts);
        Ok(self.push(
            Matrix::from_vec(rows, cols, data),
            Op::ConcatRows(parts.to_vec()),
            rg,
        ))
    }

    /// Row `i` of the output is row `index[i]` of `a`.
    pub fn gather_rows(&mut self, a: Var, index: &[usize]) -> Result<Var, TensorError> {
        let src = self.value(a);
        check_indices("gather_rows", index, src.rows())?;
        let mut value = Matrix::zeros(index.len(), src.cols());
        for (i, &r) in index.iter().enumerate() {
            value.row_mut(i).copy_from_slice(src.row(r));
        }
        let rg = self.any_grad(&[a]);
        Ok(self.push(value, Op::GatherRows(a, index.to_vec()), rg))
    }

    /// Sums row `i` of `a` into output row `index[i]`; output has `rows` rows.
    pub fn scatter_add_rows(
        &mut self,
        a: Var,
        index: &[usize],
        rows: usize,
    ) -> Result<Var, TensorError> {
        let src = self.value(a);
        if index.len() != src.rows() {
            return Err(TensorError::Shape {
                op: "scatter_add_rows",
                lhs: src.shape(),
                rhs: (index.len(), 1),
            });
        }
        check_indices("scatter_add_rows", index, rows)?;
        let mut value = Matrix::zeros(rows, src.cols());
        for (i, &r) in index.iter().enumerate() {
            for (o, &x) in value.row_mut(r).iter_mut().zip(src.row(i)) {
                *o += x;
            }
        }
        let rg = self.any_grad(&[a]);
        Ok(self.push(value, Op::ScatterAddRows(a, index.to_vec()), rg))
    }

    /// Softmax of an `m x 1` column taken separately within each segment,
    /// where entry `i` belongs to segment `segment[i]`.
    pub fn segment_softmax(&mut self, a: Var, segment: &[usize]) -> Result<Var, TensorError> {
        let src = self.value(a);
        if src.cols() != 1 || segment.len() != src.rows() {
            return Err(TensorError::Shape {
                op: "segment_softmax",
                lhs: src.shape(),
                rhs: (segment.len(), 1),
            });
        }
        let segments = segment.iter().copied().max().map_or(0, |m| m + 1);
        let mut max = vec![f64::NEG_INFINITY; segments];
        for (i, &s) in segment.iter().enumerate() {
            max[s] = max[s].max(src[(i, 0)]);
        }
        let mut denom = vec![0.0; segments];
        let mut value = Matrix::zeros(src.rows(), 1);
        for (i, &s) in segment.iter().enumerate() {
            let e = (src[(i, 0)] - max[s]).exp();
            value[(i, 0)] = e;
            denom[s] += e;
        }
        for (i, &s) in segment.iter().enumerate() {
            value[(i, 0)] /= denom[s];
        }
        let rg = self.any_grad(&[a]);
        Ok(self.push(value, Op::SegmentSoftmax(a, segment.to_vec()), rg))
    }

    /// Reverse pass from a 1x1 `loss`, accumulating into leaf gradients.
    ///
    /// Calling it again without [`Tape::zero_grad`] adds to the stored values.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        let (rows, cols) = self.shape(loss);
        if (rows, cols) != (1, 1) {
            return Err(TensorError::NotScalar { rows, cols });
        }
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        let mut pending: Vec<Option<Matrix>> = vec![None; loss.0 + 1];
        pending[loss.0] = Some(Matrix::scalar(1.0));

        for i in (0..=loss.0).rev() {
            let Some(upstream) = pending[i].take() else {
                continue;
            };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Leaf => match &mut self.grads[i] {
                    Some(g) => g.add_assign(&upstream),
                    slot @ None => *slot = Some(upstream),
                },
                op => {
                    for (input, g) in self.local_grads(op, &node.value, &upstream) {
                        if !self.nodes[input.0].requires_grad {
                            continue;
                        }
                        match &mut pending[input.0] {
                            Some(acc) => acc.add_assign(&g),
                            slot @ None => *slot = Some(g),
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Gradient contributions of one recorded op to each of its inputs.
    fn local_grads(&self, op: &Op, out: &Matrix, up: &Matrix) -> Vec<(Var, Matrix)> {
        match op {
            Op::Leaf => Vec::new(),
            Op::MatMul(a, b) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                vec![
                    (*a, up.matmul(&bv.transpose())),
                    (*b, av.transpose().matmul(up)),
                ]
            }
            Op::Add(a, b, kind) => {
                vec![(*a, up.clone()), (*b, reduce_broadcast(up, *kind))]
            }
            Op::Mul(a, b, kind) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                let (rows, cols) = av.shape();
                let mut ga = Matrix::zeros(rows, cols);
                let mut gb_full = Matrix::zeros(rows, cols);
                for r in 0..rows {
                    for c in 0..cols {
                        ga[(r, c)] = up[(r, c)] * broadcast_at(bv, *kind, r, c);
                        gb_full[(r, c)] = up[(r, c)] * av[(r, c)];
                    }
                }
                vec![(*a, ga), (*b, reduce_broadcast(&gb_full, *kind))]
            }
            Op::ScalarMul(a, s) => vec![(*a, up.map(|g| g * s))],
            Op::LeakyRelu(a, slope) => {
                let av = self.value(*a);
                let g = zip_map(av, up, |x, g| if x > 0.0 { g } else { slope * g });
                vec![(*a, g)]
            }
            Op::Sigmoid(a) => vec![(*a, zip_map(out, up, |y, g| g * y * (1.0 - y)))],
            Op::Ln(a) => vec![(*a, zip_map(self.value(*a), up, |x, g| g / x))],
            Op::SoftmaxRows(a) => {
                let mut g = Matrix::zeros(out.rows(), out.cols());
                for r in 0..out.rows() {
                    let dot: f64 = out.row(r).iter().zip(up.row(r)).map(|(y, d)| y * d).sum();
                    for c in 0..out.cols() {
                        g[(r, c)] = out[(r, c)] * (up[(r, c)] - dot);
                    }
                }
                vec![(*a, g)]
            }
            Op::SumRows(a) => {
                let (rows, cols) = self.shape(*a);
                let mut g = Matrix::zeros(rows, cols);
                for r in 0..rows {
                    g.row_mut(r).copy_from_slice(up.row(0));
                }
                vec![(*a, g)]
            }
            Op::SumAll(a) => {
                let (rows, cols) = self.shape(*a);
                vec![(*a, Matrix::filled(rows, cols, up.item()))]
            }
            Op::Transpose(a) => vec![(*a, up.transpose())],
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                parts
                    .iter()
                    .map(|&p| {
                        let (rows, cols) = self.shape(p);
                        let mut g = Matrix::zeros(rows, cols);
                        for r in 0..rows {
                            g.row_mut(r)
                                .copy_from_slice(&up.row(r)[offset..offset + cols]);
                        }
                        offset += cols;
                        (p, g)
                    })
                    .collect()
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                parts
                    .iter()
                    .map(|&p| {
                        let (rows, cols) = self.shape(p);
                        let start = offset * cols;
                        let g = Matrix::from_vec(
                            rows,
                            cols,
                            up.as_slice()[start..start + rows * cols].to_vec(),
                        );
                        offset += rows;
                        (p, g)
                    })
                    .collect()
            }
            Op::GatherRows(a, index) => {
                let (rows, cols) = self.shape(*a);
                let mut g = Matrix::zeros(rows, cols);
                for (i, &r) in index.iter().enumerate() {
                    for (o, &x) in g.row_mut(r).iter_mut().zip(up.row(i)) {
                        *o += x;
                    }
                }
                vec![(*a, g)]
            }
            Op::ScatterAddRows(a, index) => {
                let (rows, cols) = self.shape(*a);
                let mut g = Matrix::zeros(rows, cols);
                for (i, &r) in index.iter().enumerate() {
                    g.row_mut(i).copy_from_slice(up.row(r));
                }
                vec![(*a, g)]
            }
            Op::SegmentSoftmax(a, segment) => {
                let segments = segment.iter().copied().max().map_or(0, |m| m + 1);
                let mut dot = vec![0.0; segments];
                for (i, &s) in segment.iter().enumerate() {
                    dot[s] += out[(i, 0)] * up[(i, 0)];
                }
                let mut g = Matrix::zeros(out.rows(), 1);
                for (i, &s) in segment.iter().enumerate() {
                    g[(i, 0)] = out[(i, 0)] * (up[(i, 0)] - dot[s]);
                }
                vec![(*a, g)]
            }
        }
    }
}

/// Logistic function, stable for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_into(src: &[f64], dst: &mut [f64]) {
    let max = src.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (d, &x) in dst.iter_mut().zip(src) {
        *d = (x - max).exp();
        total += *d;
    }
    for d in dst.iter_mut() {
        *d /= total;
    }
}

fn broadcast_at(b: &Matrix, kind: Broadcast, r: usize, c: usize) -> f64 {
    match kind {
        Broadcast::Same => b[(r, c)],
        Broadcast::Row => b[(0, c)],
        Broadcast::Col => b[(r, 0)],
        Broadcast::Scalar => b[(0, 0)],
    }
}

fn reduce_broadcast(g: &Matrix, kind: Broadcast) -> Matrix {
    match kind {
        Broadcast::Same => g.clone(),
        Broadcast::Row => {
            let mut out = Matrix::zeros(1, g.cols());
            for r in 0..g.rows() {
                for (o, &x) in out.row_mut(0).iter_mut().zip(g.row(r)) {
                    *o += x;
                }
            }
            out
        }
        Broadcast::Col => {
            let mut out = Matrix::zeros(g.rows(), 1);
            for r in 0..g.rows() {
                out[(r, 0)] = g.row(r).iter().sum();
            }
            out
        }
        Broadcast::Scalar => Matrix::scalar(g.sum()),
    }
}

fn zip_map(a: &Matrix, b: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    let data = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Matrix::from_vec(a.rows(), a.cols(), data)
}

fn check_indices(op: &'static str, index: &[usize], bound: usize) -> Result<(), TensorError> {
    match index.iter().find(|&&i| i >= bound) {
        Some(&i) => Err(TensorError::Index { op, index: i, bound }),
        None => Ok(()),
    }
}
