use super::conv::{conv2d_backward, conv2d_forward, ConvGeometry};
use super::{Real, Tensor};
use crate::error::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Conv2d { input: Var, weight: Var, bias: Var, geometry: ConvGeometry },
    Linear { input: Var, weight: Var, bias: Var },
    Mish(Var),
    Sigmoid(Var),
    Add(Var, Var),
    Mul(Var, Var),
    Sum(Var),
    MeanPerSample(Var),
    GlobalAvgPool(Var),
    ScaleBySample { input: Var, weights: Var, column: usize },
    Concat { inputs: Vec<Var>, widths: Vec<usize> },
    SoftmaxCrossEntropy { logits: Var, labels: Vec<usize> },
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op,
    requires_grad: bool,
}

/// Reverse-mode tape. Nodes are appended in execution order, so inputs always
/// precede their consumers.
#[derive(Debug)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Vec<T>>>,
    backward_done: bool,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Above this, `tanh(softplus(x))` rounds to 1 in both precisions.
const MISH_LINEAR_CUTOFF: f64 = 20.0;

/// `softplus(x) = max(x, 0) + log1p(exp(-|x|))`.
pub fn softplus_scalar<T: Real>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

/// `x * tanh(softplus(x))`, evaluated as `x * n / (n + 2)` with
/// `n = e^x (e^x + 2)`, which equals `tanh(ln(1 + e^x))` and needs a single
/// exponential.
#[inline]
pub fn mish_scalar<T: Real>(x: T) -> T {
    if x > T::lit(MISH_LINEAR_CUTOFF) {
        return x;
    }
    let e = x.exp();
    let n = e * (e + T::lit(2.0));
    x * n / (n + T::lit(2.0))
}

#[inline]
fn mish_derivative<T: Real>(x: T) -> T {
    if x > T::lit(MISH_LINEAR_CUTOFF) {
        return T::one();
    }
    let e = x.exp();
    let n = e * (e + T::lit(2.0));
    let t = n / (n + T::lit(2.0));
    let s = e / (T::one() + e);
    t + x * (T::one() - t * t) * s
}

/// Logistic function, clamped to the open interval (0, 1).
#[inline]
pub fn sigmoid_scalar<T: Real>(x: T) -> T {
    let s = if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    };
    let upper = T::one() - T::epsilon() / T::lit(2.0);
    s.max(T::min_positive_value()).min(upper)
}

fn check_finite<T: Real>(op: &'static str, t: &Tensor<T>) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { op })
    }
}

fn accumulate<T: Real>(grads: &mut [Option<Vec<T>>], v: Var, delta: Vec<T>) {
    match &mut grads[v.0] {
        Some(g) => g.iter_mut().zip(delta).for_each(|(a, d)| *a += d),
        slot @ None => *slot = Some(delta),
    }
}

/// Splits a shape into (batch, channels, inner) for channel-axis concatenation.
/// Rank-1 tensors count as a single channel.
fn channel_split(shape: &[usize]) -> (usize, usize, usize) {
    match shape {
        [n] => (*n, 1, 1),
        [n, c, rest @ ..] => (*n, *c, rest.iter().product()),
        [] => (1, 1, 1),
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new(), grads: Vec::new(), backward_done: false }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> Result<&Node<T>> {
        self.nodes
            .get(v.0)
            .ok_or_else(|| Error::InvalidArgument(format!("variable {} is not part of this graph", v.0)))
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Adds a leaf. Gradients are accumulated for it only when `requires_grad`.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the last backward pass w.r.t. a leaf.
    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Clears gradients so `backward` may run again.
    pub fn zero_grad(&mut self) {
        self.grads.clear();
        self.backward_done = false;
    }

    pub fn conv2d(&mut self, input: Var, weight: Var, bias: Var, stride: usize, padding: usize) -> Result<Var> {
        let geometry = ConvGeometry::new(
            self.node(input)?.value.shape(),
            self.node(weight)?.value.shape(),
            self.node(bias)?.value.shape(),
            stride,
            padding,
        )?;
        let out = conv2d_forward(
            &geometry,
            self.value(input).data(),
            self.value(weight).data(),
            self.value(bias).data(),
        );
        let value = Tensor::new(geometry.output_shape(), out)?;
        check_finite("conv2d", &value)?;
        let rg = self.needs(&[input, weight, bias]);
        Ok(self.push(value, Op::Conv2d { input, weight, bias, geometry }, rg))
    }

    /// `y = x W^T + b` for `x: [N, Din]`, `W: [Dout, Din]`, `b: [Dout]`.
    pub fn linear(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let (xs, ws, bs) = (
            self.node(input)?.value.shape(),
            self.node(weight)?.value.shape(),
            self.node(bias)?.value.shape(),
        );
        let ([n, din], [dout, w_in]) = (xs, ws) else {
            return Err(Error::shape("linear", format!("expected x [N,Din] and W [Dout,Din], got {xs:?} and {ws:?}")));
        };
        let (n, din, dout) = (*n, *din, *dout);
        if *w_in != din || bs != [dout] {
            return Err(Error::shape("linear", format!("x {xs:?}, W {ws:?}, b {bs:?} do not agree")));
        }
        let b = self.value(bias).data();
        let mut out: Vec<T> = (0..n).flat_map(|_| b.iter().copied()).collect();
        T::gemm(
            n,
            din,
            dout,
            T::one(),
            self.value(input).data(),
            (din, 1),
            self.value(weight).data(),
            (1, din),
            T::one(),
            &mut out,
            (dout, 1),
        );
        let value = Tensor::new([n, dout], out)?;
        check_finite("linear", &value)?;
        let rg = self.needs(&[input, weight, bias]);
        Ok(self.push(value, Op::Linear { input, weight, bias }, rg))
    }

    fn unary(&mut self, input: Var, name: &'static str, f: impl Fn(T) -> T, op: Op) -> Result<Var> {
        let x = &self.node(input)?.value;
        let data = x.data().iter().map(|&v| f(v)).collect();
        let value = Tensor::new(x.shape().to_vec(), data)?;
        check_finite(name, &value)?;
        let rg = self.needs(&[input]);
        Ok(self.push(value, op, rg))
    }

    pub fn mish(&mut self, input: Var) -> Result<Var> {
        self.unary(input, "mish", mish_scalar, Op::Mish(input))
    }

    pub fn sigmoid(&mut self, input: Var) -> Result<Var> {
        self.unary(input, "sigmoid", sigmoid_scalar, Op::Sigmoid(input))
    }

    fn binary_same_shape(&mut self, a: Var, b: Var, name: &'static str, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        let (x, y) = (&self.node(a)?.value, &self.node(b)?.value);
        if x.shape() != y.shape() {
            return Err(Error::shape(name, format!("{:?} vs {:?}", x.shape(), y.shape())));
        }
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| f(p, q)).collect();
        let value = Tensor::new(x.shape().to_vec(), data)?;
        check_finite(name, &value)?;
        Ok(value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary_same_shape(a, b, "add", |p, q| p + q)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    /// Elementwise product of equally shaped tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary_same_shape(a, b, "mul", |p, q| p * q)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    /// Sum of all elements, as a rank-0 tensor.
    pub fn sum(&mut self, input: Var) -> Result<Var> {
        let s = self.node(input)?.value.data().iter().copied().sum::<T>();
        let value = Tensor::scalar(s);
        check_finite("sum", &value)?;
        let rg = self.needs(&[input]);
        Ok(self.push(value, Op::Sum(input), rg))
    }

    /// `[N, ...] -> [N]`: the mean of every non-batch element of each sample.
    pub fn mean_per_sample(&mut self, input: Var) -> Result<Var> {
        let x = &self.node(input)?.value;
        let Some((&n, rest)) = x.shape().split_first() else {
            return Err(Error::shape("mean_per_sample", "rank-0 input"));
        };
        let inner: usize = rest.iter().product();
        let scale = T::one() / T::lit(inner as f64);
        let data = x.data().chunks_exact(inner).map(|c| c.iter().copied().sum::<T>() * scale).collect();
        let value = Tensor::new([n], data)?;
        let rg = self.needs(&[input]);
        Ok(self.push(value, Op::MeanPerSample(input), rg))
    }

    /// `[N, C, H, W] -> [N, C]`.
    pub fn global_avg_pool(&mut self, input: Var) -> Result<Var> {
        let x = &self.node(input)?.value;
        let &[n, c, h, w] = x.shape() else {
            return Err(Error::shape("global_avg_pool", format!("expected [N,C,H,W], got {:?}", x.shape())));
        };
        let scale = T::one() / T::lit((h * w) as f64);
        let data = x.data().chunks_exact(h * w).map(|p| p.iter().copied().sum::<T>() * scale).collect();
        let value = Tensor::new([n, c], data)?;
        let rg = self.needs(&[input]);
        Ok(self.push(value, Op::GlobalAvgPool(input), rg))
    }

    /// Multiplies every element of sample `n` of `input` by `weights[n, column]`.
    pub fn scale_by_sample(&mut self, input: Var, weights: Var, column: usize) -> Result<Var> {
        let (x, w) = (&self.node(input)?.value, &self.node(weights)?.value);
        let &[wn, k] = w.shape() else {
            return Err(Error::shape("scale_by_sample", format!("weights must be [N,K], got {:?}", w.shape())));
        };
        let n = x.shape().first().copied().unwrap_or(0);
        if n != wn || column >= k {
            return Err(Error::shape(
                "scale_by_sample",
                format!("input {:?}, weights {:?}, column {column}", x.shape(), w.shape()),
            ));
        }
        let inner = x.numel() / n;
        let mut data = x.data().to_vec();
        for (s, chunk) in data.chunks_exact_mut(inner).enumerate() {
            let ws = w.data()[s * k + column];
            chunk.iter_mut().for_each(|v| *v *= ws);
        }
        let value = Tensor::new(x.shape().to_vec(), data)?;
        check_finite("scale_by_sample", &value)?;
        let rg = self.needs(&[input, weights]);
        Ok(self.push(value, Op::ScaleBySample { input, weights, column }, rg))
    }

    /// Concatenates along axis 1. Rank-1 inputs `[N]` count as one column,
    /// so concatenating `K` of them yields `[N, K]`.
    pub fn concat(&mut self, inputs: &[Var]) -> Result<Var> {
        let first = inputs.first().ok_or_else(|| Error::shape("concat", "no inputs"))?;
        let lead_shape = self.node(*first)?.value.shape().to_vec();
        let (n, _, inner) = channel_split(&lead_shape);
        let mut widths = Vec::with_capacity(inputs.len());
        for &v in inputs {
            let s = self.node(v)?.value.shape();
            let (vn, c, vi) = channel_split(s);
            let trailing_ok = s.len() == lead_shape.len() && s.get(2..) == lead_shape.get(2..);
            if vn != n || vi != inner || !trailing_ok {
                return Err(Error::shape("concat", format!("{s:?} does not stack with {lead_shape:?}")));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(n * total * inner);
        for s in 0..n {
            for (&v, &c) in inputs.iter().zip(&widths) {
                data.extend_from_slice(&self.value(v).data()[s * c * inner..(s + 1) * c * inner]);
            }
        }
        let mut shape = vec![n, total];
        if lead_shape.len() > 2 {
            shape.extend_from_slice(&lead_shape[2..]);
        }
        let value = Tensor::new(shape, data)?;
        let rg = self.needs(inputs);
        Ok(self.push(value, Op::Concat { inputs: inputs.to_vec(), widths }, rg))
    }

    /// Mean over the batch of `-x_y + log sum_j exp(x_j)`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let x = &self.node(logits)?.value;
        let &[n, c] = x.shape() else {
            return Err(Error::shape("softmax_cross_entropy", format!("logits must be [N,C], got {:?}", x.shape())));
        };
        if labels.len() != n {
            return Err(Error::shape("softmax_cross_entropy", format!("{} labels for {n} rows", labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= c) {
            return Err(Error::InvalidArgument(format!("label {bad} out of range for {c} classes")));
        }
        let mut total = T::zero();
        for (row, &y) in x.data().chunks_exact(c).zip(labels) {
            total += row_cross_entropy(row, y);
        }
        let value = Tensor::scalar(total / T::lit(n as f64));
        check_finite("softmax_cross_entropy", &value)?;
        let rg = self.needs(&[logits]);
        Ok(self.push(value, Op::SoftmaxCrossEntropy { logits, labels: labels.to_vec() }, rg))
    }

    /// Populates gradients of `loss` w.r.t. every leaf that requires them.
    ///
    /// Only leaf gradients are retained afterwards.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::Backward("gradients already computed; call zero_grad first".into()));
        }
        let root = self.node(loss)?;
        if root.value.numel() != 1 {
            return Err(Error::Backward(format!("loss must be scalar, got shape {:?}", root.value.shape())));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; self.nodes.len()];
        if root.requires_grad {
            grads[loss.0] = Some(vec![T::one()]);
        }
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if !matches!(node.op, Op::Leaf) || !node.requires_grad {
                grads[i] = None;
            } else if grads[i].is_none() {
                grads[i] = Some(vec![T::zero(); node.value.numel()]);
            }
        }
        self.grads = grads;
        self.backward_done = true;
        Ok(())
    }

    fn propagate(&self, node: &Node<T>, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let rg = |v: Var| self.nodes[v.0].requires_grad;
        let val = |v: Var| self.nodes[v.0].value.data();
        match &node.op {
            Op::Leaf => {}
            Op::Conv2d { input, weight, bias, geometry } => {
                let r = conv2d_backward(geometry, val(*input), val(*weight), g, [rg(*input), rg(*weight), rg(*bias)]);
                for (v, d) in [(*input, r.input), (*weight, r.weight), (*bias, r.bias)] {
                    if let Some(d) = d {
                        accumulate(grads, v, d);
                    }
                }
            }
            Op::Linear { input, weight, bias } => {
                let (xs, ws) = (self.nodes[input.0].value.shape(), self.nodes[weight.0].value.shape());
                let (n, din, dout) = (xs[0], xs[1], ws[0]);
                if rg(*input) {
                    let mut dx = vec![T::zero(); n * din];
                    T::gemm(n, dout, din, T::one(), g, (dout, 1), val(*weight), (din, 1), T::zero(), &mut dx, (din, 1));
                    accumulate(grads, *input, dx);
                }
                if rg(*weight) {
                    let mut dw = vec![T::zero(); dout * din];
                    T::gemm(dout, n, din, T::one(), g, (1, dout), val(*input), (din, 1), T::zero(), &mut dw, (din, 1));
                    accumulate(grads, *weight, dw);
                }
                if rg(*bias) {
                    let mut db = vec![T::zero(); dout];
                    for row in g.chunks_exact(dout) {
                        db.iter_mut().zip(row).for_each(|(a, &b)| *a += b);
                    }
                    accumulate(grads, *bias, db);
                }
            }
            Op::Mish(x) => {
                let d = val(*x).iter().zip(g).map(|(&v, &gy)| gy * mish_derivative(v)).collect();
                accumulate(grads, *x, d);
            }
            Op::Sigmoid(x) => {
                let y = node.value.data();
                let d = y.iter().zip(g).map(|(&s, &gy)| gy * s * (T::one() - s)).collect();
                accumulate(grads, *x, d);
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if rg(v) {
                        accumulate(grads, v, g.to_vec());
                    }
                }
            }
            Op::Mul(a, b) => {
                if rg(*a) {
                    accumulate(grads, *a, g.iter().zip(val(*b)).map(|(&p, &q)| p * q).collect());
                }
                if rg(*b) {
                    accumulate(grads, *b, g.iter().zip(val(*a)).map(|(&p, &q)| p * q).collect());
                }
            }
            Op::Sum(x) => {
                accumulate(grads, *x, vec![g[0]; val(*x).len()]);
            }
            Op::MeanPerSample(x) => {
                let len = val(*x).len();
                let inner = len / g.len();
                let scale = T::one() / T::lit(inner as f64);
                accumulate(grads, *x, g.iter().flat_map(|&gs| std::iter::repeat_n(gs * scale, inner)).collect());
            }
            Op::GlobalAvgPool(x) => {
                let inner = val(*x).len() / g.len();
                let scale = T::one() / T::lit(inner as f64);
                accumulate(grads, *x, g.iter().flat_map(|&gs| std::iter::repeat_n(gs * scale, inner)).collect());
            }
            Op::ScaleBySample { input, weights, column } => {
                let (x, w) = (val(*input), val(*weights));
                let k = self.nodes[weights.0].value.shape()[1];
                let n = w.len() / k;
                let inner = x.len() / n;
                if rg(*input) {
                    let mut dx = g.to_vec();
                    for (s, chunk) in dx.chunks_exact_mut(inner).enumerate() {
                        let ws = w[s * k + column];
                        chunk.iter_mut().for_each(|v| *v *= ws);
                    }
                    accumulate(grads, *input, dx);
                }
                if rg(*weights) {
                    let mut dw = vec![T::zero(); w.len()];
                    for s in 0..n {
                        let xs = &x[s * inner..(s + 1) * inner];
                        let gs = &g[s * inner..(s + 1) * inner];
                        dw[s * k + column] = xs.iter().zip(gs).map(|(&p, &q)| p * q).sum();
                    }
                    accumulate(grads, *weights, dw);
                }
            }
            Op::Concat { inputs, widths } => {
                let total: usize = widths.iter().sum();
                let (n, _, inner) = channel_split(node.value.shape());
                let mut offset = 0;
                for (&v, &c) in inputs.iter().zip(widths) {
                    if rg(v) {
                        let mut d = Vec::with_capacity(n * c * inner);
                        for s in 0..n {
                            let start = (s * total + offset) * inner;
                            d.extend_from_slice(&g[start..start + c * inner]);
                        }
                        accumulate(grads, v, d);
                    }
                    offset += c;
                }
            }
            Op::SoftmaxCrossEntropy { logits, labels } => {
                let x = val(*logits);
                let c = x.len() / labels.len();
                let scale = g[0] / T::lit(labels.len() as f64);
                let mut d = Vec::with_capacity(x.len());
                for (row, &y) in x.chunks_exact(c).zip(labels) {
                    let m = row.iter().copied().fold(T::neg_infinity(), T::max);
                    let z: T = row.iter().map(|&v| (v - m).exp()).sum();
                    for (j, &v) in row.iter().enumerate() {
                        let p = (v - m).exp() / z;
                        let target = if j == y { T::one() } else { T::zero() };
                        d.push((p - target) * scale);
                    }
                }
                accumulate(grads, *logits, d);
            }
        }
    }
}

/// `-row[y] + logsumexp(row)`, written as `(m - row[y]) + ln(sum exp(row - m))`
/// so it is never negative.
pub(crate) fn row_cross_entropy<T: Real>(row: &[T], y: usize) -> T {
    let (arg, m) = row.iter().copied().enumerate().fold((0, T::neg_infinity()), |b, (i, v)| if v > b.1 { (i, v) } else { b });
    // The max term contributes exactly 1; ln_1p keeps confident rows accurate.
    let rest: T = row.iter().enumerate().filter(|&(i, _)| i != arg).map(|(_, &v)| (v - m).exp()).sum();
    (m - row[y]) + rest.ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], v: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(shape, v).unwrap()
    }

    #[test]
    fn mish_reference_values() {
        assert_eq!(mish_scalar(0.0f64), 0.0);
        // x * tanh(ln(1 + e^x)) at x = 1
        let oracle = 1.0f64 * (1.0f64 + 1.0f64.exp()).ln().tanh();
        assert!((mish_scalar(1.0f64) - oracle).abs() < 1e-15);
        assert!((mish_scalar(1.0f64) - 0.8651).abs() < 1e-4);
        assert!(mish_scalar(-20.0f64).abs() < 1e-7);
        assert_eq!(mish_scalar(50.0f64), 50.0);
        assert!(mish_scalar(-1000.0f64).abs() == 0.0);
    }

    #[test]
    fn softplus_is_stable_at_extremes() {
        assert!((softplus_scalar(0.0f64) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(softplus_scalar(1000.0f64), 1000.0);
        assert!(softplus_scalar(-1000.0f64) >= 0.0);
    }

    #[test]
    fn sigmoid_stays_open_interval() {
        assert_eq!(sigmoid_scalar(0.0f64), 0.5);
        assert!((sigmoid_scalar(2.0f64) - 0.880797).abs() < 1e-6);
        for x in [-1e4, -800.0, -40.0, 40.0, 800.0, 1e4] {
            let s = sigmoid_scalar(x);
            assert!(s > 0.0 && s < 1.0, "sigmoid({x}) = {s}");
            let s32 = sigmoid_scalar(x as f32);
            assert!(s32 > 0.0 && s32 < 1.0);
        }
    }

    #[test]
    fn sum_backward_is_all_ones() {
        let mut g = Graph::<f64>::new();
        let x = g.param(t(&[2, 3], &[1., -2., 3., 0.5, 0., 9.]));
        let s = g.sum(x).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[1.0; 6]);
    }

    #[test]
    fn sigmoid_backward_at_zero_is_quarter() {
        let mut g = Graph::<f64>::new();
        let x = g.param(Tensor::zeros([5]));
        let y = g.sigmoid(x).unwrap();
        let s = g.sum(y).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[0.25; 5]);
    }

    #[test]
    fn fan_out_accumulates() {
        // loss = sum(x + x) -> grad 2
        let mut g = Graph::<f64>::new();
        let x = g.param(t(&[3], &[1., 2., 3.]));
        let y = g.add(x, x).unwrap();
        let s = g.sum(y).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[2.0; 3]);
    }

    #[test]
    fn backward_rejects_non_scalar_and_repeat() {
        let mut g = Graph::<f64>::new();
        let x = g.param(t(&[2], &[1., 2.]));
        let y = g.mish(x).unwrap();
        assert!(matches!(g.backward(y), Err(Error::Backward(_))));
        let s = g.sum(y).unwrap();
        g.backward(s).unwrap();
        assert!(matches!(g.backward(s), Err(Error::Backward(_))));
        g.zero_grad();
        g.backward(s).unwrap();
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(t(&[2], &[1., 2.]));
        let w = g.param(t(&[2], &[3., 4.]));
        let y = g.mul(x, w).unwrap();
        let s = g.sum(y).unwrap();
        g.backward(s).unwrap();
        assert!(g.grad(x).is_none());
        assert_eq!(g.grad(w).unwrap(), &[1., 2.]);
        assert!(g.grad(y).is_none());
    }

    #[test]
    fn linear_hand_example() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(t(&[1, 2], &[1., 2.]));
        let w = g.constant(t(&[2, 2], &[1., 1., 0., 1.]));
        let b = g.constant(t(&[2], &[0., 1.]));
        let y = g.linear(x, w, b).unwrap();
        assert_eq!(g.value(y).data(), &[3., 3.]);
        let bad = g.constant(t(&[2, 3], &[0.; 6]));
        assert!(g.linear(x, bad, b).is_err());
    }

    #[test]
    fn cross_entropy_values() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(Tensor::zeros([3, 4]));
        let l = g.softmax_cross_entropy(x, &[0, 1, 3]).unwrap();
        assert!((g.value(l).item().unwrap() - 4f64.ln()).abs() < 1e-15);
        let x = g.constant(t(&[1, 2], &[10., -10.]));
        let l = g.softmax_cross_entropy(x, &[0]).unwrap();
        let oracle = (-20f64).exp().ln_1p();
        assert!((g.value(l).item().unwrap() - oracle).abs() < 1e-12 * oracle);
        assert!((g.value(l).item().unwrap() - 2.06e-9).abs() < 1e-11);
        assert!(matches!(g.softmax_cross_entropy(x, &[2]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn concat_of_vectors_makes_columns() {
        let mut g = Graph::<f64>::new();
        let a = g.constant(t(&[2], &[1., 2.]));
        let b = g.constant(t(&[2], &[3., 4.]));
        let c = g.concat(&[a, b]).unwrap();
        assert_eq!(g.value(c).shape(), &[2, 2]);
        assert_eq!(g.value(c).data(), &[1., 3., 2., 4.]);
    }

    #[test]
    fn non_finite_output_is_rejected() {
        let mut g = Graph::<f64>::new();
        let a = g.constant(t(&[1], &[f64::MAX]));
        assert!(matches!(g.add(a, a), Err(Error::NonFinite { op: "add" })));
    }

    #[test]
    fn foreign_variable_is_rejected() {
        let mut g1 = Graph::<f64>::new();
        let mut g2 = Graph::<f64>::new();
        let _ = g1.constant(Tensor::zeros([1]));
        let v = g1.constant(Tensor::zeros([1]));
        assert!(g2.mish(v).is_err());
    }
}
