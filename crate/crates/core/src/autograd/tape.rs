use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{shape, Error, Result};
use crate::real::Real;

use super::kernels;
use super::tensor::Tensor4;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    Depthwise { x: Var, w: Var, b: Var },
    Pointwise { x: Var, w: Var, b: Var },
    Relu(Var),
    Add(Var, Var),
    Mse { pred: Var, target: Var },
    Sum(Var),
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor4<T>,
    op: Op,
    requires_grad: bool,
}

/// Record of executed operations; `backward` replays it in reverse.
///
/// A tape supports exactly one backward pass.
#[derive(Debug)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    consumed: bool,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor4<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor4<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor4<T>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

fn same_dims<T: Real>(a: &Tensor4<T>, b: &Tensor4<T>, what: &str) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(shape(format!("{what}: {:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new(), consumed: false }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor4<T>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn leaf(&mut self, value: Tensor4<T>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor4<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor4<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor4<T> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.rg(v)
    }

    /// Per-channel `k×k` correlation, zero padding `k/2`, plus per-channel bias.
    pub fn depthwise_conv(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        let [_, c, _, _] = xv.dims();
        let [wc, one, k, k2] = wv.dims();
        if wc != c || one != 1 || k != k2 {
            return Err(shape(format!("depthwise weight {:?} for input {:?}", wv.dims(), xv.dims())));
        }
        if k % 2 == 0 {
            return Err(shape(format!("depthwise kernel size must be odd, got {k}")));
        }
        if bv.dims() != [1, c, 1, 1] {
            return Err(shape(format!("depthwise bias {:?}, expected [1, {c}, 1, 1]", bv.dims())));
        }
        let out = kernels::depthwise_forward(xv, wv, bv);
        let rg = self.rg(x) || self.rg(w) || self.rg(b);
        Ok(self.push(out, Op::Depthwise { x, w, b }, rg))
    }

    /// Per-pixel `Cin → Cout` linear map.
    pub fn pointwise_conv(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        let [_, cin, _, _] = xv.dims();
        let [cout, wcin, kh, kw] = wv.dims();
        if wcin != cin || kh != 1 || kw != 1 {
            return Err(shape(format!("pointwise weight {:?} for input {:?}", wv.dims(), xv.dims())));
        }
        if bv.dims() != [1, cout, 1, 1] {
            return Err(shape(format!("pointwise bias {:?}, expected [1, {cout}, 1, 1]", bv.dims())));
        }
        let out = kernels::pointwise_forward(xv, wv, bv);
        let rg = self.rg(x) || self.rg(w) || self.rg(b);
        Ok(self.push(out, Op::Pointwise { x, w, b }, rg))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let out = Tensor4::from_vec(xv.dims(), xv.data().iter().map(|&v| v.max(T::zero())).collect())
            .expect("same length");
        let rg = self.rg(x);
        self.push(out, Op::Relu(x), rg)
    }

    pub fn add(&mut self, x: Var, y: Var) -> Result<Var> {
        let (xv, yv) = (self.value(x), self.value(y));
        same_dims(xv, yv, "add")?;
        let mut out = xv.clone();
        out.add_assign(yv);
        let rg = self.rg(x) || self.rg(y);
        Ok(self.push(out, Op::Add(x, y), rg))
    }

    /// Mean squared error over every element.
    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (pv, tv) = (self.value(pred), self.value(target));
        same_dims(pv, tv, "mse_loss")?;
        let n = T::from_f64(pv.len() as f64);
        let total: T = pv.data().iter().zip(tv.data()).map(|(&p, &t)| (p - t) * (p - t)).sum();
        let rg = self.rg(pred) || self.rg(target);
        Ok(self.push(Tensor4::scalar(total / n), Op::Mse { pred, target }, rg))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let total: T = self.value(x).data().iter().copied().sum();
        let rg = self.rg(x);
        self.push(Tensor4::scalar(total), Op::Sum(x), rg)
    }

    /// Hash of the sign pattern of every ReLU input on the tape. Two evaluations
    /// with equal signatures lie on the same linear piece of every ReLU.
    pub fn relu_signature(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for node in &self.nodes {
            if let Op::Relu(x) = node.op {
                for &v in self.value(x).data() {
                    (v > T::zero()).hash(&mut h);
                }
            }
        }
        h.finish()
    }

    /// Reverse-mode sweep from a scalar `loss`. Gradients accumulate additively
    /// where a value fans out; leaves without `requires_grad` receive none.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        let loss_value = self.value(loss);
        if !loss_value.is_scalar() {
            return Err(Error::NonScalarLoss(loss_value.dims()));
        }
        self.consumed = true;

        let mut grads: Vec<Option<Tensor4<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        if !self.rg(loss) {
            return Ok(Gradients { grads });
        }
        grads[loss.0] = Some(Tensor4::scalar(T::one()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let g = match &node.op {
                Op::Leaf => continue,
                _ => match grads[idx].take() {
                    Some(g) => g,
                    None => continue,
                },
            };
            match node.op {
                Op::Leaf => unreachable!(),
                Op::Depthwise { x, w, b } => {
                    let (dx, dw, db) = kernels::depthwise_backward(self.value(x), self.value(w), &g);
                    self.accumulate(&mut grads, x, dx);
                    self.accumulate(&mut grads, w, dw);
                    self.accumulate(&mut grads, b, db);
                }
                Op::Pointwise { x, w, b } => {
                    let (dx, dw, db) = kernels::pointwise_backward(self.value(x), self.value(w), &g);
                    self.accumulate(&mut grads, x, dx);
                    self.accumulate(&mut grads, w, dw);
                    self.accumulate(&mut grads, b, db);
                }
                Op::Relu(x) => {
                    let xv = self.value(x);
                    let data = xv
                        .data()
                        .iter()
                        .zip(g.data())
                        .map(|(&v, &gv)| if v > T::zero() { gv } else { T::zero() })
                        .collect();
                    self.accumulate(&mut grads, x, Tensor4::from_vec(xv.dims(), data)?);
                }
                Op::Add(x, y) => {
                    self.accumulate(&mut grads, x, g.clone());
                    self.accumulate(&mut grads, y, g);
                }
                Op::Mse { pred, target } => {
                    let (pv, tv) = (self.value(pred), self.value(target));
                    let scale = g.item() * T::from_f64(2.0 / pv.len() as f64);
                    let diff: Vec<T> = pv.data().iter().zip(tv.data()).map(|(&p, &t)| (p - t) * scale).collect();
                    if self.rg(target) {
                        let neg = diff.iter().map(|&d| -d).collect();
                        self.accumulate(&mut grads, target, Tensor4::from_vec(tv.dims(), neg)?);
                    }
                    self.accumulate(&mut grads, pred, Tensor4::from_vec(pv.dims(), diff)?);
                }
                Op::Sum(x) => {
                    let dims = self.value(x).dims();
                    self.accumulate(&mut grads, x, Tensor4::filled(dims, g.item()));
                }
            }
        }

        // keep gradients only for trainable leaves
        for (idx, node) in self.nodes.iter().enumerate() {
            if !matches!(node.op, Op::Leaf) || !node.requires_grad {
                grads[idx] = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor4<T>>], v: Var, g: Tensor4<T>) {
        if !self.rg(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(acc) => acc.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_value() {
        let mut t = Tape::<f64>::new();
        let p = t.constant(Tensor4::from_vec([1, 1, 1, 2], vec![1.0, 2.0]).unwrap());
        let z = t.constant(Tensor4::zeros([1, 1, 1, 2]));
        let l = t.mse_loss(p, z).unwrap();
        assert_eq!(t.value(l).item(), 2.5);
    }

    #[test]
    fn relu_values() {
        let mut t = Tape::<f64>::new();
        let x = t.constant(Tensor4::from_vec([1, 1, 1, 3], vec![-3.0, 0.0, 3.0]).unwrap());
        let y = t.relu(x);
        assert_eq!(t.value(y).data(), &[0.0, 0.0, 3.0]);
    }

    #[test]
    fn square_gradient() {
        let mut t = Tape::<f64>::new();
        let x = t.param(Tensor4::scalar(3.0));
        let z = t.constant(Tensor4::scalar(0.0));
        let l = t.mse_loss(x, z).unwrap();
        let g = t.backward(l).unwrap();
        assert_eq!(g.get(x).unwrap().item(), 6.0);
        assert!(g.get(z).is_none());
    }

    #[test]
    fn fan_out_accumulates() {
        let mut t = Tape::<f64>::new();
        let x = t.param(Tensor4::from_fn([1, 2, 2, 2], |i| i as f64));
        let y = t.add(x, x).unwrap();
        let l = t.sum(y);
        let g = t.backward(l).unwrap();
        assert!(g.get(x).unwrap().data().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn relu_subgradient_zero_at_zero() {
        let mut t = Tape::<f64>::new();
        let x = t.param(Tensor4::from_vec([1, 1, 1, 3], vec![-1.0, 0.0, 1.0]).unwrap());
        let y = t.relu(x);
        let l = t.sum(y);
        let g = t.backward(l).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn backward_twice_fails() {
        let mut t = Tape::<f64>::new();
        let x = t.param(Tensor4::scalar(1.0));
        let l = t.sum(x);
        t.backward(l).unwrap();
        assert!(matches!(t.backward(l), Err(Error::TapeConsumed)));
    }

    #[test]
    fn non_scalar_loss() {
        let mut t = Tape::<f64>::new();
        let x = t.param(Tensor4::zeros([1, 1, 2, 2]));
        assert!(matches!(t.backward(x), Err(Error::NonScalarLoss(_))));
    }

    #[test]
    fn shape_errors() {
        let mut t = Tape::<f32>::new();
        let x = t.constant(Tensor4::zeros([1, 2, 4, 4]));
        let w = t.param(Tensor4::zeros([3, 1, 3, 3]));
        let b = t.param(Tensor4::zeros([1, 3, 1, 1]));
        assert!(t.depthwise_conv(x, w, b).is_err());
        let w_even = t.param(Tensor4::zeros([2, 1, 4, 4]));
        let b2 = t.param(Tensor4::zeros([1, 2, 1, 1]));
        assert!(t.depthwise_conv(x, w_even, b2).is_err());
        let y = t.constant(Tensor4::zeros([1, 2, 4, 5]));
        assert!(t.add(x, y).is_err());
        assert!(t.mse_loss(x, y).is_err());
        let pw = t.param(Tensor4::zeros([2, 3, 1, 1]));
        assert!(t.pointwise_conv(x, pw, b2).is_err());
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut t = Tape::<f32>::new();
        let xt = Tensor4::from_fn([2, 3, 5, 6], |i| (i as f32 * 0.37).sin());
        let x = t.constant(xt.clone());
        let mut w = Tensor4::zeros([3, 1, 5, 5]);
        for c in 0..3 {
            w.data_mut()[c * 25 + 12] = 1.0;
        }
        let w = t.param(w);
        let b = t.param(Tensor4::zeros([1, 3, 1, 1]));
        let y = t.depthwise_conv(x, w, b).unwrap();
        assert_eq!(t.value(y), &xt);
    }

    #[test]
    fn ones_overlap_count() {
        let mut t = Tape::<f64>::new();
        let x = t.constant(Tensor4::filled([1, 1, 3, 3], 1.0));
        let w = t.param(Tensor4::filled([1, 1, 5, 5], 1.0));
        let b = t.param(Tensor4::zeros([1, 1, 1, 1]));
        let y = t.depthwise_conv(x, w, b).unwrap();
        assert_eq!(t.value(y).at(0, 0, 1, 1), 9.0);
        assert_eq!(t.value(y).at(0, 0, 0, 0), 9.0);
    }

    #[test]
    fn pointwise_small_matrix() {
        let mut t = Tape::<f64>::new();
        let x = t.constant(Tensor4::from_vec([1, 2, 1, 1], vec![1.0, 2.0]).unwrap());
        let w = t.param(Tensor4::from_vec([2, 2, 1, 1], vec![1.0, 1.0, 0.0, 1.0]).unwrap());
        let b = t.param(Tensor4::zeros([1, 2, 1, 1]));
        let y = t.pointwise_conv(x, w, b).unwrap();
        assert_eq!(t.value(y).data(), &[3.0, 2.0]);
    }

    #[test]
    fn pointwise_identity() {
        let mut t = Tape::<f32>::new();
        let xt = Tensor4::from_fn([2, 3, 4, 4], |i| i as f32 - 7.0);
        let x = t.constant(xt.clone());
        let w = t.param(Tensor4::from_fn([3, 3, 1, 1], |i| if i % 4 == 0 { 1.0 } else { 0.0 }));
        let b = t.param(Tensor4::zeros([1, 3, 1, 1]));
        let y = t.pointwise_conv(x, w, b).unwrap();
        assert_eq!(t.value(y), &xt);
    }
}
