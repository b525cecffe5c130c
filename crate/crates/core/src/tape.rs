//! Scalar reverse-mode automatic differentiation.
//!
//! A [`Tape`] records every operation as a node holding its forward value,
//! the indices of its parents and the local partial derivative with respect
//! to each parent. Nodes are appended in evaluation order, so parents always
//! precede their children and a single reverse sweep accumulates adjoints.
//!
//! Besides the elementary operations, nodes may have any number of parents
//! ([`Tape::linear`], [`Tape::inner`], [`Tape::fused`]). Fused nodes let a
//! caller compute the value and local partials of a whole sub-expression
//! (for example a spectral norm of a windowed frame) outside the tape and
//! record it as one node.
//!
//! ```
//! use gradstft::tape::Tape;
//!
//! let tape = Tape::new();
//! let x = tape.lift(3.0).unwrap();
//! let y = x * x + x.sin();
//! let grads = tape.backward(y).unwrap();
//! assert!((grads.wrt(x) - (6.0 + 3f64.cos())).abs() < 1e-12);
//! ```

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

/// Operation that produced a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Ln,
    Powf,
    Pow,
    Sqrt,
    Sin,
    Cos,
    Tanh,
    Sigmoid,
    Softplus,
    AbsSq,
    Linear,
    Inner,
    Sum,
    Fused,
}

#[derive(Default)]
struct Nodes {
    kinds: Vec<OpKind>,
    values: Vec<f64>,
    // offsets[i]..offsets[i + 1] indexes node i's edges
    offsets: Vec<usize>,
    parents: Vec<u32>,
    partials: Vec<f64>,
}

impl Nodes {
    fn clear(&mut self) {
        self.kinds.clear();
        self.values.clear();
        self.offsets.clear();
        self.offsets.push(0);
        self.parents.clear();
        self.partials.clear();
    }
}

/// Append-only record of a computation.
///
/// A tape is single-threaded. Independent optimisation runs each own their
/// own tape.
pub struct Tape {
    id: u64,
    nodes: RefCell<Nodes>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape")
            .field("id", &self.id)
            .field("nodes", &self.len())
            .finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::with_capacity(0, 0)
    }

    pub fn with_capacity(nodes: usize, edges: usize) -> Self {
        let mut inner = Nodes {
            kinds: Vec::with_capacity(nodes),
            values: Vec::with_capacity(nodes),
            offsets: Vec::with_capacity(nodes + 1),
            parents: Vec::with_capacity(edges),
            partials: Vec::with_capacity(edges),
        };
        inner.offsets.push(0);
        Tape {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: RefCell::new(inner),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total number of recorded parent edges.
    pub fn edge_count(&self) -> usize {
        self.nodes.borrow().parents.len()
    }

    /// Drops every node so the tape can record a fresh forward pass.
    /// Requires that no [`Var`] of the previous pass is still alive.
    pub fn reset(&mut self) {
        self.nodes.get_mut().clear();
    }

    /// Records an input value as a leaf node.
    pub fn lift(&self, x: f64) -> Result<Var<'_>> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        Ok(self.push(OpKind::Leaf, x, std::iter::empty()))
    }

    /// Lifts every value in `xs`.
    pub fn lift_all(&self, xs: &[f64]) -> Result<Vec<Var<'_>>> {
        xs.iter().map(|&x| self.lift(x)).collect()
    }

    pub fn kind(&self, var: Var<'_>) -> OpKind {
        self.nodes.borrow().kinds[var.index as usize]
    }

    fn push(
        &self,
        kind: OpKind,
        value: f64,
        edges: impl IntoIterator<Item = (u32, f64)>,
    ) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let index = nodes.values.len() as u32;
        for (parent, partial) in edges {
            debug_assert!(parent < index);
            nodes.parents.push(parent);
            nodes.partials.push(partial);
        }
        let end = nodes.parents.len();
        nodes.offsets.push(end);
        nodes.kinds.push(kind);
        nodes.values.push(value);
        Var {
            tape: self,
            index,
            value,
        }
    }

    fn check<'t>(&'t self, var: Var<'t>) -> u32 {
        assert!(
            std::ptr::eq(self, var.tape),
            "operands must live on the same tape"
        );
        var.index
    }

    /// Records a node whose value and local partials were computed by the
    /// caller. `terms` pairs each parent with `d value / d parent`.
    pub fn fused<'t>(&'t self, value: f64, terms: &[(Var<'t>, f64)]) -> Var<'t> {
        let edges: Vec<(u32, f64)> = terms.iter().map(|&(v, d)| (self.check(v), d)).collect();
        self.push(OpKind::Fused, value, edges)
    }

    /// Like [`Tape::fused`], with parents and partials in separate slices.
    pub fn fused_split<'t>(&'t self, value: f64, parents: &[Var<'t>], partials: &[f64]) -> Var<'t> {
        assert_eq!(parents.len(), partials.len());
        let edges: Vec<(u32, f64)> = parents
            .iter()
            .zip(partials)
            .map(|(&v, &d)| (self.check(v), d))
            .collect();
        self.push(OpKind::Fused, value, edges)
    }

    /// `constant + Σ coeffs[i] · vars[i]`.
    pub fn linear<'t>(&'t self, vars: &[Var<'t>], coeffs: &[f64], constant: f64) -> Var<'t> {
        assert_eq!(vars.len(), coeffs.len());
        let value = vars
            .iter()
            .zip(coeffs)
            .fold(constant, |acc, (v, c)| acc + v.value * c);
        let edges: Vec<(u32, f64)> = vars
            .iter()
            .zip(coeffs)
            .map(|(&v, &c)| (self.check(v), c))
            .collect();
        self.push(OpKind::Linear, value, edges)
    }

    /// `Σ a[i] · b[i]` with both operands on the tape.
    pub fn inner<'t>(&'t self, a: &[Var<'t>], b: &[Var<'t>]) -> Var<'t> {
        assert_eq!(a.len(), b.len());
        let value = a.iter().zip(b).map(|(x, y)| x.value * y.value).sum();
        let mut edges = Vec::with_capacity(2 * a.len());
        for (&x, &y) in a.iter().zip(b) {
            edges.push((self.check(x), y.value));
            edges.push((self.check(y), x.value));
        }
        self.push(OpKind::Inner, value, edges)
    }

    pub fn sum<'t>(&'t self, vars: &[Var<'t>]) -> Var<'t> {
        let value = vars.iter().map(|v| v.value).sum();
        let edges: Vec<(u32, f64)> = vars.iter().map(|&v| (self.check(v), 1.0)).collect();
        self.push(OpKind::Sum, value, edges)
    }

    /// `re² + im²`, the squared magnitude of a complex number held as a pair.
    pub fn abs_sq<'t>(&'t self, re: Var<'t>, im: Var<'t>) -> Var<'t> {
        let (a, b) = (self.check(re), self.check(im));
        self.push(
            OpKind::AbsSq,
            re.value * re.value + im.value * im.value,
            [(a, 2.0 * re.value), (b, 2.0 * im.value)],
        )
    }

    /// Reverse sweep from `root`. The returned adjoints are valid for every
    /// node recorded up to and including `root`.
    pub fn backward<'t>(&'t self, root: Var<'t>) -> Result<Gradients> {
        if !std::ptr::eq(self, root.tape) {
            return Err(Error::ForeignVar);
        }
        let nodes = self.nodes.borrow();
        let n = root.index as usize + 1;
        let mut adjoints = vec![0.0; n];
        adjoints[n - 1] = 1.0;
        for i in (0..n).rev() {
            let adj = adjoints[i];
            if adj == 0.0 {
                continue;
            }
            let (lo, hi) = (nodes.offsets[i], nodes.offsets[i + 1]);
            for (p, d) in nodes.parents[lo..hi].iter().zip(&nodes.partials[lo..hi]) {
                adjoints[*p as usize] += adj * d;
            }
        }
        let leaves = nodes.kinds[..n]
            .iter()
            .map(|k| *k == OpKind::Leaf)
            .collect();
        Ok(Gradients {
            tape_id: self.id,
            adjoints,
            leaves,
        })
    }
}

/// Adjoints produced by [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    tape_id: u64,
    adjoints: Vec<f64>,
    leaves: Vec<bool>,
}

impl Gradients {
    /// `d root / d var`. Nodes recorded after the root have zero gradient.
    pub fn wrt(&self, var: Var<'_>) -> f64 {
        assert_eq!(var.tape.id, self.tape_id, "variable from another tape");
        self.adjoints.get(var.index as usize).copied().unwrap_or(0.0)
    }

    pub fn wrt_all(&self, vars: &[Var<'_>]) -> Vec<f64> {
        vars.iter().map(|&v| self.wrt(v)).collect()
    }

    /// Gradient for every leaf node, keyed by node index.
    pub fn leaf_gradients(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adjoints
            .iter()
            .zip(&self.leaves)
            .enumerate()
            .filter(|(_, (_, leaf))| **leaf)
            .map(|(i, (a, _))| (i, *a))
    }

    pub fn adjoints(&self) -> &[f64] {
        &self.adjoints
    }
}

/// A scalar on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: u32,
    value: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Var")
            .field("index", &self.index)
            .field("value", &self.value)
            .finish()
    }
}

impl<'t> Var<'t> {
    #[inline]
    pub fn value(self) -> f64 {
        self.value
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn tape(self) -> &'t Tape {
        self.tape
    }

    fn unary(self, kind: OpKind, value: f64, partial: f64) -> Var<'t> {
        self.tape.push(kind, value, [(self.index, partial)])
    }

    fn binary(self, other: Var<'t>, kind: OpKind, value: f64, da: f64, db: f64) -> Var<'t> {
        let b = self.tape.check(other);
        self.tape.push(kind, value, [(self.index, da), (b, db)])
    }

    pub fn exp(self) -> Var<'t> {
        let e = self.value.exp();
        self.unary(OpKind::Exp, e, e)
    }

    pub fn ln(self) -> Result<Var<'t>> {
        if self.value <= 0.0 {
            return Err(Error::LogDomain(self.value));
        }
        Ok(self.unary(OpKind::Ln, self.value.ln(), 1.0 / self.value))
    }

    pub fn sqrt(self) -> Result<Var<'t>> {
        if self.value < 0.0 {
            return Err(Error::SqrtDomain(self.value));
        }
        let s = self.value.sqrt();
        // d/dx sqrt at 0 is unbounded; report 0 so a zero magnitude stays inert
        let d = if s > 0.0 { 0.5 / s } else { 0.0 };
        Ok(self.unary(OpKind::Sqrt, s, d))
    }

    /// `self^p` for a constant exponent.
    pub fn powf(self, p: f64) -> Var<'t> {
        let v = self.value.powf(p);
        let d = if p == 0.0 { 0.0 } else { p * self.value.powf(p - 1.0) };
        self.unary(OpKind::Powf, v, d)
    }

    /// `self^exponent` with both on the tape; requires a positive base.
    pub fn pow(self, exponent: Var<'t>) -> Result<Var<'t>> {
        if self.value <= 0.0 {
            return Err(Error::LogDomain(self.value));
        }
        let v = self.value.powf(exponent.value);
        let da = exponent.value * self.value.powf(exponent.value - 1.0);
        let db = v * self.value.ln();
        Ok(self.binary(exponent, OpKind::Pow, v, da, db))
    }

    pub fn square(self) -> Var<'t> {
        self.unary(OpKind::Powf, self.value * self.value, 2.0 * self.value)
    }

    pub fn sin(self) -> Var<'t> {
        self.unary(OpKind::Sin, self.value.sin(), self.value.cos())
    }

    pub fn cos(self) -> Var<'t> {
        self.unary(OpKind::Cos, self.value.cos(), -self.value.sin())
    }

    pub fn tanh(self) -> Var<'t> {
        let t = self.value.tanh();
        self.unary(OpKind::Tanh, t, 1.0 - t * t)
    }

    pub fn sigmoid(self) -> Var<'t> {
        let s = sigmoid(self.value);
        self.unary(OpKind::Sigmoid, s, s * (1.0 - s))
    }

    /// `ln(1 + eˣ)`.
    pub fn softplus(self) -> Var<'t> {
        self.unary(OpKind::Softplus, softplus(self.value), sigmoid(self.value))
    }

    /// Division that rejects a zero divisor.
    pub fn try_div(self, rhs: Var<'t>) -> Result<Var<'t>> {
        if rhs.value == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self / rhs)
    }

    pub fn recip(self) -> Result<Var<'t>> {
        if self.value == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let r = 1.0 / self.value;
        Ok(self.unary(OpKind::Div, r, -r * r))
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

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, OpKind::Add, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, OpKind::Sub, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, OpKind::Mul, self.value * rhs.value, rhs.value, self.value)
    }
}

/// Unchecked IEEE division; see [`Var::try_div`] for the checked form.
impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        let q = self.value / rhs.value;
        self.binary(rhs, OpKind::Div, q, 1.0 / rhs.value, -q / rhs.value)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(OpKind::Neg, -self.value, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Var<'t> {
        self.unary(OpKind::Add, self.value + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Var<'t> {
        self.unary(OpKind::Sub, self.value - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Var<'t> {
        self.unary(OpKind::Mul, self.value * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: f64) -> Var<'t> {
        self.unary(OpKind::Div, self.value / rhs, 1.0 / rhs)
    }
}

impl<'t> Add<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        rhs + self
    }
}

impl<'t> Sub<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        rhs.unary(OpKind::Sub, self - rhs.value, -1.0)
    }
}

impl<'t> Mul<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        rhs * self
    }
}

impl<'t> Div<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        let q = self / rhs.value;
        rhs.unary(OpKind::Div, q, -q / rhs.value)
    }
}
