use super::tensor::{matmul_nt, matmul_raw, matmul_tn};
use super::{AutodiffError, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Backward rule for an op defined outside this module.
///
/// `backward` receives the input values, the op's output value and the
/// upstream gradient, and returns one optional gradient buffer per input
/// (same length as that input). Returned buffers are *added* to the input
/// adjoints.
pub trait BackwardRule {
    fn name(&self) -> &'static str;

    fn backward(
        &self,
        inputs: &[&Tensor],
        output: &Tensor,
        grad_output: &[f64],
    ) -> Vec<Option<Vec<f64>>>;
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Sum(Var),
    Mean(Var),
    Prod(Var),
    Slice { src: Var, start: usize },
    Reshape(Var),
    SliceCols { src: Var, start: usize },
    Concat(Vec<Var>),
    ConcatCols(Var, Var),
    AddBias(Var, Var),
    Custom { inputs: Vec<Var>, rule: Box<dyn BackwardRule> },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::Prod(_) => "prod",
            Op::Slice { .. } => "slice",
            Op::Reshape(_) => "reshape",
            Op::SliceCols { .. } => "slice_cols",
            Op::Concat(_) => "concat",
            Op::ConcatCols(..) => "concat_cols",
            Op::AddBias(..) => "add_bias",
            Op::Custom { rule, .. } => rule.name(),
        }
    }
}

struct Node {
    value: Tensor,
    requires_grad: bool,
    op: Op,
    grad: Option<Vec<f64>>,
}

/// Define-by-run reverse-mode tape.
///
/// Nodes are appended in evaluation order; [`Tape::backward`] walks them in
/// strict reverse order and *adds* into leaf gradients, so repeated calls
/// accumulate until [`Tape::zero_grad`].
pub struct Tape {
    nodes: Vec<Node>,
    check_finite: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Broadcast {
    Same,
    LeftScalar,
    RightScalar,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    /// Non-finite checking defaults to on in debug builds.
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            check_finite: cfg!(debug_assertions),
        }
    }

    pub fn with_finite_check(mut self, enabled: bool) -> Self {
        self.check_finite = enabled;
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            requires_grad,
            op: Op::Leaf,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Accumulated gradient of a leaf, if backward has reached it.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Result<Var, AutodiffError> {
        if self.check_finite && !value.is_finite() {
            return Err(AutodiffError::NonFinite { op: op.name() });
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            requires_grad,
            op,
            grad: None,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Registers an externally computed op.
    pub fn custom(
        &mut self,
        inputs: &[Var],
        output: Tensor,
        rule: Box<dyn BackwardRule>,
    ) -> Result<Var, AutodiffError> {
        let op = Op::Custom {
            inputs: inputs.to_vec(),
            rule,
        };
        self.push(output, op, inputs)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = ta.dims2().ok_or_else(|| rank2("matmul", ta))?;
        let (k2, n) = tb.dims2().ok_or_else(|| rank2("matmul", tb))?;
        if k != k2 {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let out = Tensor::new(vec![m, n], matmul_raw(ta.data(), tb.data(), m, k, n))?;
        self.push(out, Op::MatMul(a, b), &[a, b])
    }

    fn broadcast(&self, op: &'static str, a: Var, b: Var) -> Result<Broadcast, AutodiffError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() == tb.shape() {
            Ok(Broadcast::Same)
        } else if ta.is_scalar() {
            Ok(Broadcast::LeftScalar)
        } else if tb.is_scalar() {
            Ok(Broadcast::RightScalar)
        } else {
            Err(AutodiffError::ShapeMismatch {
                op,
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            })
        }
    }

    fn zip_with(
        &mut self,
        a: Var,
        b: Var,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var, AutodiffError> {
        let mode = self.broadcast(name, a, b)?;
        let (ta, tb) = (self.value(a), self.value(b));
        let (shape, data) = match mode {
            Broadcast::Same => (
                ta.shape().to_vec(),
                ta.data().iter().zip(tb.data()).map(|(x, y)| f(*x, *y)).collect(),
            ),
            Broadcast::LeftScalar => {
                let s = ta.data()[0];
                (tb.shape().to_vec(), tb.data().iter().map(|y| f(s, *y)).collect())
            }
            Broadcast::RightScalar => {
                let s = tb.data()[0];
                (ta.shape().to_vec(), ta.data().iter().map(|x| f(*x, s)).collect())
            }
        };
        let out = Tensor::new(shape, data)?;
        self.push(out, op, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.zip_with(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.zip_with(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.zip_with(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var, AutodiffError> {
        let t = self.value(a);
        let out = Tensor::new(t.shape().to_vec(), t.data().iter().map(|x| x * c).collect())?;
        self.push(out, Op::Scale(a, c), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let t = self.value(a);
        let out = Tensor::new(t.shape().to_vec(), t.data().iter().map(|&x| sigmoid(x)).collect())?;
        self.push(out, Op::Sigmoid(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let t = self.value(a);
        let out = Tensor::new(t.shape().to_vec(), t.data().iter().map(|x| x.tanh()).collect())?;
        self.push(out, Op::Tanh(a), &[a])
    }

    pub fn sum(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let t = self.value(a);
        let s = t.data().iter().sum::<f64>() / t.len() as f64;
        self.push(Tensor::scalar(s), Op::Mean(a), &[a])
    }

    /// Product of all elements.
    pub fn prod(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let p = self.value(a).data().iter().product();
        self.push(Tensor::scalar(p), Op::Prod(a), &[a])
    }

    /// Contiguous 1-d slice `[start, start + len)` of the flattened data.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var, AutodiffError> {
        let t = self.value(a);
        if len == 0 || start + len > t.len() {
            return Err(AutodiffError::OutOfRange {
                start,
                len,
                available: t.len(),
            });
        }
        let out = Tensor::vector(t.data()[start..start + len].to_vec());
        self.push(out, Op::Slice { src: a, start }, &[a])
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var, AutodiffError> {
        let out = self.value(a).reshaped(shape.to_vec())?;
        self.push(out, Op::Reshape(a), &[a])
    }

    /// Columns `[start, start + len)` of a rank-2 tensor.
    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var, AutodiffError> {
        let t = self.value(a);
        let (r, c) = t.dims2().ok_or_else(|| rank2("slice_cols", t))?;
        if len == 0 || start + len > c {
            return Err(AutodiffError::OutOfRange {
                start,
                len,
                available: c,
            });
        }
        let mut data = Vec::with_capacity(r * len);
        for i in 0..r {
            data.extend_from_slice(&t.data()[i * c + start..i * c + start + len]);
        }
        let out = Tensor::new(vec![r, len], data)?;
        self.push(out, Op::SliceCols { src: a, start }, &[a])
    }

    /// Flattened concatenation.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        if parts.is_empty() {
            return Err(AutodiffError::InvalidShape(vec![]));
        }
        let mut data = Vec::new();
        for p in parts {
            data.extend_from_slice(self.value(*p).data());
        }
        self.push(Tensor::vector(data), Op::Concat(parts.to_vec()), parts)
    }

    /// `[r,c1] ++ [r,c2] -> [r,c1+c2]`.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (r1, c1) = ta.dims2().ok_or_else(|| rank2("concat_cols", ta))?;
        let (r2, c2) = tb.dims2().ok_or_else(|| rank2("concat_cols", tb))?;
        if r1 != r2 {
            return Err(AutodiffError::ShapeMismatch {
                op: "concat_cols",
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let mut data = Vec::with_capacity(r1 * (c1 + c2));
        for i in 0..r1 {
            data.extend_from_slice(&ta.data()[i * c1..(i + 1) * c1]);
            data.extend_from_slice(&tb.data()[i * c2..(i + 1) * c2]);
        }
        let out = Tensor::new(vec![r1, c1 + c2], data)?;
        self.push(out, Op::ConcatCols(a, b), &[a, b])
    }

    /// Adds a length-`c` bias to every row of `x[r,c]`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var, AutodiffError> {
        let (tx, tb) = (self.value(x), self.value(bias));
        let (r, c) = tx.dims2().ok_or_else(|| rank2("add_bias", tx))?;
        if tb.len() != c {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_bias",
                left: tx.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let mut data = tx.data().to_vec();
        for i in 0..r {
            for (o, b) in data[i * c..(i + 1) * c].iter_mut().zip(tb.data()) {
                *o += b;
            }
        }
        let out = Tensor::new(vec![r, c], data)?;
        self.push(out, Op::AddBias(x, bias), &[x, bias])
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&mut self, root: Var) -> Result<(), AutodiffError> {
        if !self.nodes[root.0].value.is_scalar() {
            return Err(AutodiffError::NonScalarRoot(
                self.nodes[root.0].value.shape().to_vec(),
            ));
        }
        let mut adj: Vec<Option<Vec<f64>>> = (0..=root.0).map(|_| None).collect();
        adj[root.0] = Some(vec![1.0]);

        for i in (0..=root.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            if let Op::Leaf = node.op {
                adj[i] = Some(g);
                continue;
            }
            self.propagate(i, &g, &mut adj);
        }

        for (i, slot) in adj.into_iter().enumerate() {
            if let Some(g) = slot {
                let node = &mut self.nodes[i];
                if matches!(node.op, Op::Leaf) && node.requires_grad {
                    match &mut node.grad {
                        Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                        None => node.grad = Some(g),
                    }
                }
            }
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[f64], adj: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let val = |v: Var| &self.nodes[v.0].value;
        let wants = |v: Var| self.nodes[v.0].requires_grad;

        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = val(*a).dims2().unwrap();
                let n = val(*b).dims2().unwrap().1;
                if wants(*a) {
                    // dA = dC · Bᵀ
                    accumulate(adj, *a, matmul_nt(g, val(*b).data(), m, n, k));
                }
                if wants(*b) {
                    // dB = Aᵀ · dC
                    accumulate(adj, *b, matmul_tn(val(*a).data(), g, m, k, n));
                }
            }
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                for (v, s) in [(*a, 1.0), (*b, sign)] {
                    if wants(v) {
                        let gv = if val(v).len() == g.len() {
                            g.iter().map(|x| s * x).collect()
                        } else {
                            vec![s * g.iter().sum::<f64>()]
                        };
                        accumulate(adj, v, gv);
                    }
                }
            }
            Op::Mul(a, b) => {
                for (v, other) in [(*a, *b), (*b, *a)] {
                    if !wants(v) {
                        continue;
                    }
                    let (tv, to) = (val(v), val(other));
                    let gv = if tv.len() == g.len() && to.len() == g.len() {
                        g.iter().zip(to.data()).map(|(x, y)| x * y).collect()
                    } else if tv.len() == g.len() {
                        let s = to.data()[0];
                        g.iter().map(|x| x * s).collect()
                    } else {
                        vec![g.iter().zip(to.data()).map(|(x, y)| x * y).sum()]
                    };
                    accumulate(adj, v, gv);
                }
            }
            Op::Scale(a, c) => {
                if wants(*a) {
                    accumulate(adj, *a, g.iter().map(|x| x * c).collect());
                }
            }
            Op::Sigmoid(a) => {
                if wants(*a) {
                    let gv = g
                        .iter()
                        .zip(node.value.data())
                        .map(|(x, s)| x * s * (1.0 - s))
                        .collect();
                    accumulate(adj, *a, gv);
                }
            }
            Op::Tanh(a) => {
                if wants(*a) {
                    let gv = g
                        .iter()
                        .zip(node.value.data())
                        .map(|(x, t)| x * (1.0 - t * t))
                        .collect();
                    accumulate(adj, *a, gv);
                }
            }
            Op::Sum(a) => {
                if wants(*a) {
                    accumulate(adj, *a, vec![g[0]; val(*a).len()]);
                }
            }
            Op::Mean(a) => {
                if wants(*a) {
                    let n = val(*a).len();
                    accumulate(adj, *a, vec![g[0] / n as f64; n]);
                }
            }
            Op::Prod(a) => {
                if wants(*a) {
                    // product of all other entries via prefix/suffix products
                    let x = val(*a).data();
                    let n = x.len();
                    let mut suffix = vec![1.0; n + 1];
                    for j in (0..n).rev() {
                        suffix[j] = suffix[j + 1] * x[j];
                    }
                    let mut prefix = 1.0;
                    let mut gv = Vec::with_capacity(n);
                    for j in 0..n {
                        gv.push(g[0] * prefix * suffix[j + 1]);
                        prefix *= x[j];
                    }
                    accumulate(adj, *a, gv);
                }
            }
            Op::Slice { src, start } => {
                if wants(*src) {
                    let mut gv = vec![0.0; val(*src).len()];
                    gv[*start..*start + g.len()].copy_from_slice(g);
                    accumulate(adj, *src, gv);
                }
            }
            Op::Reshape(a) => {
                if wants(*a) {
                    accumulate(adj, *a, g.to_vec());
                }
            }
            Op::SliceCols { src, start } => {
                if wants(*src) {
                    let (r, c) = val(*src).dims2().unwrap();
                    let len = g.len() / r;
                    let mut gv = vec![0.0; r * c];
                    for i in 0..r {
                        gv[i * c + start..i * c + start + len]
                            .copy_from_slice(&g[i * len..(i + 1) * len]);
                    }
                    accumulate(adj, *src, gv);
                }
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let n = val(*p).len();
                    if wants(*p) {
                        accumulate(adj, *p, g[offset..offset + n].to_vec());
                    }
                    offset += n;
                }
            }
            Op::ConcatCols(a, b) => {
                let (r, c1) = val(*a).dims2().unwrap();
                let c2 = val(*b).dims2().unwrap().1;
                let c = c1 + c2;
                if wants(*a) {
                    let gv = (0..r).flat_map(|i| g[i * c..i * c + c1].to_vec()).collect();
                    accumulate(adj, *a, gv);
                }
                if wants(*b) {
                    let gv = (0..r).flat_map(|i| g[i * c + c1..(i + 1) * c].to_vec()).collect();
                    accumulate(adj, *b, gv);
                }
            }
            Op::AddBias(x, bias) => {
                if wants(*x) {
                    accumulate(adj, *x, g.to_vec());
                }
                if wants(*bias) {
                    let c = val(*bias).len();
                    let mut gb = vec![0.0; c];
                    for row in g.chunks(c) {
                        gb.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                    }
                    accumulate(adj, *bias, gb);
                }
            }
            Op::Custom { inputs, rule } => {
                let ins: Vec<&Tensor> = inputs.iter().map(|v| val(*v)).collect();
                let grads = rule.backward(&ins, &node.value, g);
                for (v, gv) in inputs.iter().zip(grads) {
                    if let Some(gv) = gv {
                        if wants(*v) {
                            debug_assert_eq!(gv.len(), val(*v).len(), "{}", rule.name());
                            accumulate(adj, *v, gv);
                        }
                    }
                }
            }
        }
    }
}

fn accumulate(adj: &mut [Option<Vec<f64>>], v: Var, g: Vec<f64>) {
    match &mut adj[v.0] {
        Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
        slot @ None => *slot = Some(g),
    }
}

fn rank2(op: &'static str, t: &Tensor) -> AutodiffError {
    AutodiffError::ShapeMismatch {
        op,
        left: t.shape().to_vec(),
        right: vec![],
    }
}
