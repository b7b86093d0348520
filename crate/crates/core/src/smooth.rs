//! Smooth maps between products of tensor spaces.
//!
//! A [`SmoothMap`] is an immutable expression tree over a fixed set of
//! primitives, glued by sequential ([`compose`]) and parallel ([`parallel`])
//! composition. Every map can be evaluated and every map has a reverse
//! derivative, built by [`SmoothMap::reverse`] as another `SmoothMap`:
//!
//! ```text
//! f         : X -> Y
//! reverse f : X x Y -> X      (point, output cotangent) |-> input cotangent
//! ```
//!
//! Because reverse derivatives are ordinary maps they can themselves be
//! composed, evaluated, and reversed again.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor::{Object, Shape, Tensor};

/// Pointwise scalar functions. Each one knows its own derivative as another
/// `ScalarFn`, which is what makes higher reverse derivatives possible.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFn {
    /// `max(x, 0)`
    Relu,
    /// `1` where `x > 0`, else `0`. The derivative of `Relu`, with the
    /// subgradient at the kink taken to be zero.
    Step,
    /// `p(s(x))` where `s` is the logistic sigmoid and `p` is the polynomial
    /// with the given coefficients, lowest degree first. `[0, 1]` is the
    /// sigmoid itself.
    SigmoidPoly(Vec<f64>),
    /// Natural logarithm.
    Ln,
    /// `coef * x^exp`
    Power { coef: f64, exp: i32 },
    /// `scale * x + shift`
    Affine { scale: f64, shift: f64 },
}

impl ScalarFn {
    pub fn sigmoid() -> Self {
        ScalarFn::SigmoidPoly(vec![0.0, 1.0])
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            ScalarFn::Step => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarFn::SigmoidPoly(coeffs) => {
                let s = logistic(x);
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
            }
            ScalarFn::Ln => x.ln(),
            ScalarFn::Power { coef, exp } => coef * x.powi(*exp),
            ScalarFn::Affine { scale, shift } => scale * x + shift,
        }
    }

    pub fn derivative(&self) -> ScalarFn {
        match self {
            ScalarFn::Relu => ScalarFn::Step,
            ScalarFn::Step => ScalarFn::Affine {
                scale: 0.0,
                shift: 0.0,
            },
            // d/dx p(s) = p'(s) * s * (1 - s)
            ScalarFn::SigmoidPoly(coeffs) => {
                let dp: Vec<f64> = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, &c)| c * i as f64)
                    .collect();
                let mut out = vec![0.0; dp.len() + 2];
                for (i, &c) in dp.iter().enumerate() {
                    out[i + 1] += c;
                    out[i + 2] -= c;
                }
                ScalarFn::SigmoidPoly(out)
            }
            ScalarFn::Ln => ScalarFn::Power { coef: 1.0, exp: -1 },
            ScalarFn::Power { coef, exp } => {
                if *exp == 0 {
                    ScalarFn::Affine {
                        scale: 0.0,
                        shift: 0.0,
                    }
                } else {
                    ScalarFn::Power {
                        coef: coef * f64::from(*exp),
                        exp: exp - 1,
                    }
                }
            }
            ScalarFn::Affine { scale, .. } => ScalarFn::Affine {
                scale: 0.0,
                shift: *scale,
            },
        }
    }

    /// `Some(c)` when the function is the constant `c`.
    fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarFn::Affine { scale, shift } if *scale == 0.0 => Some(*shift),
            ScalarFn::SigmoidPoly(c) if c.iter().skip(1).all(|&v| v == 0.0) => {
                Some(c.first().copied().unwrap_or(0.0))
            }
            _ => None,
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// The generators every other map is built from.
#[derive(Debug, Clone, PartialEq)]
pub enum Prim {
    Identity(Object),
    /// `op(lhs) · op(rhs)`, where `op` transposes when the flag is set.
    MatMul {
        lhs: Shape,
        rhs: Shape,
        transpose_lhs: bool,
        transpose_rhs: bool,
    },
    /// `X x X -> X`, portwise sum.
    Add(Object),
    Hadamard(Shape),
    Scale {
        shape: Shape,
        factor: f64,
    },
    Transpose(Shape),
    Pointwise {
        shape: Shape,
        f: ScalarFn,
    },
    /// The diagonal `X -> X x X`.
    Copy(Object),
    Project {
        left: Object,
        right: Object,
        keep: Side,
    },
    Swap {
        left: Object,
        right: Object,
    },
    /// The terminal map `X -> 1`.
    Discard(Object),
    /// Any cartesian rewiring: output port `j` is input port `select[j]`.
    Wire {
        source: Object,
        select: Vec<usize>,
    },
    /// The linear adjoint of `Wire`: output port `i` is the sum of every
    /// input port `j` with `into[j] == i` (zero when there is none).
    Merge {
        target: Object,
        into: Vec<usize>,
    },
    /// `1 -> X`
    Constant(Vec<Tensor>),
    /// `S -> [1]`
    SumAll(Shape),
    /// `[1] -> S`, the adjoint of `SumAll`.
    Broadcast(Shape),
}

impl Prim {
    pub fn name(&self) -> &'static str {
        match self {
            Prim::Identity(_) => "Identity",
            Prim::MatMul { .. } => "MatMul",
            Prim::Add(_) => "Add",
            Prim::Hadamard(_) => "Hadamard",
            Prim::Scale { .. } => "Scale",
            Prim::Transpose(_) => "Transpose",
            Prim::Pointwise { f, .. } => match f {
                ScalarFn::Relu => "PointwiseRelu",
                ScalarFn::SigmoidPoly(c) if c.as_slice() == [0.0, 1.0] => "PointwiseSigmoid",
                _ => "Pointwise",
            },
            Prim::Copy(_) => "Copy",
            Prim::Project { .. } => "Project",
            Prim::Swap { .. } => "Swap",
            Prim::Discard(_) => "Discard",
            Prim::Wire { .. } => "Wire",
            Prim::Merge { .. } => "Merge",
            Prim::Constant(_) => "Constant",
            Prim::SumAll(_) => "SumAll",
            Prim::Broadcast(_) => "Broadcast",
        }
    }

    /// Domain and codomain, or a shape error naming the primitive.
    pub fn signature(&self) -> Result<(Object, Object)> {
        let single = |s: &Shape| Object::single(s.clone());
        Ok(match self {
            Prim::Identity(x) => (x.clone(), x.clone()),
            Prim::MatMul {
                lhs,
                rhs,
                transpose_lhs,
                transpose_rhs,
            } => {
                if lhs.rank() != 2 || rhs.rank() != 2 {
                    return Err(Error::shape(
                        "MatMul",
                        format!("operands must be matrices, got {lhs} and {rhs}"),
                    ));
                }
                let (a, b) = oriented(lhs, *transpose_lhs);
                let (b2, c) = oriented(rhs, *transpose_rhs);
                if b != b2 {
                    return Err(Error::shape(
                        "MatMul",
                        format!("inner dims differ: {lhs} · {rhs} ({b} vs {b2})"),
                    ));
                }
                (
                    Object::new(vec![lhs.clone(), rhs.clone()]),
                    Object::single(Shape::matrix(a, c)),
                )
            }
            Prim::Add(x) => (x.product(x), x.clone()),
            Prim::Hadamard(s) => (Object::new(vec![s.clone(), s.clone()]), single(s)),
            Prim::Scale { shape, .. } => (single(shape), single(shape)),
            Prim::Transpose(s) => {
                if s.rank() != 2 {
                    return Err(Error::shape("Transpose", format!("{s} is not a matrix")));
                }
                (single(s), Object::single(s.transposed()))
            }
            Prim::Pointwise { shape, .. } => (single(shape), single(shape)),
            Prim::Copy(x) => (x.clone(), x.product(x)),
            Prim::Project { left, right, keep } => (
                left.product(right),
                match keep {
                    Side::Left => left.clone(),
                    Side::Right => right.clone(),
                },
            ),
            Prim::Swap { left, right } => (left.product(right), right.product(left)),
            Prim::Discard(x) => (x.clone(), Object::unit()),
            Prim::Wire { source, select } => {
                let ports = select
                    .iter()
                    .map(|&i| {
                        source.ports().get(i).cloned().ok_or_else(|| {
                            Error::shape(
                                "Wire",
                                format!("port {i} out of range for source {source}"),
                            )
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                (source.clone(), Object::new(ports))
            }
            Prim::Merge { target, into } => {
                let ports = into
                    .iter()
                    .map(|&i| {
                        target.ports().get(i).cloned().ok_or_else(|| {
                            Error::shape(
                                "Merge",
                                format!("port {i} out of range for target {target}"),
                            )
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                (Object::new(ports), target.clone())
            }
            Prim::Constant(values) => (Object::unit(), Object::of_values(values)),
            Prim::SumAll(s) => (single(s), Object::single(Shape::scalar())),
            Prim::Broadcast(s) => (Object::single(Shape::scalar()), single(s)),
        })
    }

    /// For the purely structural primitives, the input port feeding each
    /// output port.
    fn selection(&self) -> Option<Vec<usize>> {
        match self {
            Prim::Identity(x) => Some((0..x.len()).collect()),
            Prim::Copy(x) => Some((0..x.len()).chain(0..x.len()).collect()),
            Prim::Project { left, right, keep } => Some(match keep {
                Side::Left => (0..left.len()).collect(),
                Side::Right => (left.len()..left.len() + right.len()).collect(),
            }),
            Prim::Swap { left, right } => {
                let l = left.len();
                Some((l..l + right.len()).chain(0..l).collect())
            }
            Prim::Discard(_) => Some(Vec::new()),
            Prim::Wire { select, .. } => Some(select.clone()),
            _ => None,
        }
    }

    fn merge_targets(&self) -> Option<(Object, Vec<usize>)> {
        match self {
            Prim::Add(x) => Some((x.clone(), (0..x.len()).chain(0..x.len()).collect())),
            Prim::Merge { target, into } => Some((target.clone(), into.clone())),
            _ => None,
        }
    }

    fn apply(&self, inputs: Vec<Tensor>) -> Result<Vec<Tensor>> {
        if let Some(sel) = self.selection() {
            return Ok(sel.iter().map(|&i| inputs[i].clone()).collect());
        }
        if let Some((target, into)) = self.merge_targets() {
            let mut out: Vec<Tensor> = target.ports().iter().cloned().map(Tensor::zeros).collect();
            let mut touched = vec![false; out.len()];
            for (value, &i) in inputs.into_iter().zip(&into) {
                out[i] = if touched[i] {
                    out[i].add(&value)?
                } else {
                    value
                };
                touched[i] = true;
            }
            return Ok(out);
        }
        Ok(match self {
            Prim::MatMul {
                transpose_lhs,
                transpose_rhs,
                ..
            } => vec![inputs[0].matmul_t(&inputs[1], *transpose_lhs, *transpose_rhs)?],
            Prim::Hadamard(_) => vec![inputs[0].hadamard(&inputs[1])?],
            Prim::Scale { factor, .. } => vec![inputs[0].scale(*factor)],
            Prim::Transpose(_) => vec![inputs[0].transpose()],
            Prim::Pointwise { f, .. } => vec![inputs[0].map(|v| f.apply(v))],
            Prim::Constant(values) => values.clone(),
            Prim::SumAll(_) => vec![Tensor::raw(Shape::scalar(), vec![inputs[0].sum()])],
            Prim::Broadcast(s) => vec![Tensor::filled(s.clone(), inputs[0].data()[0])],
            _ => unreachable!("structural primitives handled above"),
        })
    }
}

fn oriented(s: &Shape, transpose: bool) -> (usize, usize) {
    let (r, c) = s.as_matrix();
    if transpose {
        (c, r)
    } else {
        (r, c)
    }
}

#[derive(Clone)]
enum Node {
    Prim(Prim),
    Compose(SmoothMap, SmoothMap),
    Parallel(SmoothMap, SmoothMap),
}

/// A well-typed smooth map `domain -> codomain`. Cloning is cheap: the tree
/// is shared.
#[derive(Clone)]
pub struct SmoothMap {
    domain: Object,
    codomain: Object,
    node: Arc<Node>,
}

impl SmoothMap {
    /// Validates a primitive and wraps it as a leaf map.
    pub fn primitive(prim: Prim) -> Result<SmoothMap> {
        let (domain, codomain) = prim.signature()?;
        Ok(SmoothMap {
            domain,
            codomain,
            node: Arc::new(Node::Prim(prim)),
        })
    }

    pub fn domain(&self) -> &Object {
        &self.domain
    }

    pub fn codomain(&self) -> &Object {
        &self.codomain
    }

    /// Number of nodes in the expression tree.
    pub fn size(&self) -> usize {
        match &*self.node {
            Node::Prim(_) => 1,
            Node::Compose(f, g) | Node::Parallel(f, g) => 1 + f.size() + g.size(),
        }
    }

    /// `self ; next`
    pub fn then(&self, next: &SmoothMap) -> Result<SmoothMap> {
        compose(self, next)
    }

    pub fn evaluate(&self, inputs: &[Tensor]) -> Result<Vec<Tensor>> {
        let actual = Object::of_values(inputs);
        if actual != self.domain {
            return Err(Error::Inputs {
                expected: self.domain.clone(),
                actual,
            });
        }
        if let Some(index) = inputs
            .iter()
            .flat_map(|t| t.data())
            .position(|v| !v.is_finite())
        {
            return Err(Error::NonFinite { index });
        }
        self.eval_owned(inputs.to_vec())
    }

    fn eval_owned(&self, mut inputs: Vec<Tensor>) -> Result<Vec<Tensor>> {
        match &*self.node {
            Node::Prim(p) => {
                let out = p.apply(inputs)?;
                if out.iter().all(Tensor::is_finite) {
                    Ok(out)
                } else {
                    Err(Error::NonFiniteIntermediate {
                        op: p.name().to_string(),
                        path: p.name().to_string(),
                    })
                }
            }
            Node::Compose(f, g) => {
                let mid = f.eval_owned(inputs).map_err(|e| nest(e, "compose.0"))?;
                g.eval_owned(mid).map_err(|e| nest(e, "compose.1"))
            }
            Node::Parallel(f, g) => {
                let rest = inputs.split_off(f.domain.len());
                let mut out = f.eval_owned(inputs).map_err(|e| nest(e, "parallel.0"))?;
                out.extend(g.eval_owned(rest).map_err(|e| nest(e, "parallel.1"))?);
                Ok(out)
            }
        }
    }

    /// The reverse derivative `domain x codomain -> domain`.
    pub fn reverse(&self) -> Result<SmoothMap> {
        match &*self.node {
            Node::Prim(p) => reverse_prim(p, &self.domain, &self.codomain),
            Node::Compose(f, g) => {
                // (x, dz) -> (x, x, dz) -> (x, f x, dz) -> (x, R[g](f x, dz)) -> R[f]
                let x = &f.domain;
                let dz = &g.codomain;
                copy(x)
                    .parallel(&identity(dz))?
                    .then(&identity(x).parallel(&f.parallel(&identity(dz))?)?)?
                    .then(&identity(x).parallel(&g.reverse()?)?)?
                    .then(&f.reverse()?)
            }
            Node::Parallel(f, g) => {
                // (x1, x2, dy1, dy2) -> (x1, dy1, x2, dy2) -> R[f] x R[g]
                let shuffle = identity(&f.domain)
                    .parallel(&swap(&g.domain, &f.codomain))?
                    .parallel(&identity(&g.codomain))?;
                shuffle.then(&f.reverse()?.parallel(&g.reverse()?)?)
            }
        }
    }

    pub fn parallel(&self, other: &SmoothMap) -> Result<SmoothMap> {
        parallel(self, other)
    }
}

fn nest(err: Error, step: &str) -> Error {
    match err {
        Error::NonFiniteIntermediate { op, path } => Error::NonFiniteIntermediate {
            op,
            path: format!("{step}/{path}"),
        },
        other => other,
    }
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.node {
            Node::Prim(p) => write!(f, "{}", p.name()),
            Node::Compose(a, b) => write!(f, "({a:?} ; {b:?})"),
            Node::Parallel(a, b) => write!(f, "({a:?} x {b:?})"),
        }
    }
}

impl fmt::Display for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.domain, self.codomain)
    }
}

/// Sequential composition, diagrammatic order: `x |-> g(f(x))`.
pub fn compose(f: &SmoothMap, g: &SmoothMap) -> Result<SmoothMap> {
    if f.codomain != g.domain {
        return Err(Error::Boundary {
            left: f.codomain.clone(),
            right: g.domain.clone(),
        });
    }
    Ok(SmoothMap {
        domain: f.domain.clone(),
        codomain: g.codomain.clone(),
        node: Arc::new(Node::Compose(f.clone(), g.clone())),
    })
}

/// Monoidal product: `(x, y) |-> (f x, g y)`.
pub fn parallel(f: &SmoothMap, g: &SmoothMap) -> Result<SmoothMap> {
    Ok(SmoothMap {
        domain: f.domain.product(&g.domain),
        codomain: f.codomain.product(&g.codomain),
        node: Arc::new(Node::Parallel(f.clone(), g.clone())),
    })
}

fn leaf(prim: Prim) -> SmoothMap {
    SmoothMap::primitive(prim).expect("primitive signature is valid by construction")
}

pub fn identity(x: &Object) -> SmoothMap {
    leaf(Prim::Identity(x.clone()))
}

pub fn matmul(lhs: &Shape, rhs: &Shape) -> Result<SmoothMap> {
    matmul_t(lhs, rhs, false, false)
}

pub fn matmul_t(
    lhs: &Shape,
    rhs: &Shape,
    transpose_lhs: bool,
    transpose_rhs: bool,
) -> Result<SmoothMap> {
    SmoothMap::primitive(Prim::MatMul {
        lhs: lhs.clone(),
        rhs: rhs.clone(),
        transpose_lhs,
        transpose_rhs,
    })
}

pub fn add(x: &Object) -> SmoothMap {
    leaf(Prim::Add(x.clone()))
}

pub fn hadamard(s: &Shape) -> SmoothMap {
    leaf(Prim::Hadamard(s.clone()))
}

pub fn scale(s: &Shape, factor: f64) -> SmoothMap {
    leaf(Prim::Scale {
        shape: s.clone(),
        factor,
    })
}

pub fn transpose(s: &Shape) -> Result<SmoothMap> {
    SmoothMap::primitive(Prim::Transpose(s.clone()))
}

pub fn pointwise(s: &Shape, f: ScalarFn) -> SmoothMap {
    leaf(Prim::Pointwise {
        shape: s.clone(),
        f,
    })
}

pub fn relu(s: &Shape) -> SmoothMap {
    pointwise(s, ScalarFn::Relu)
}

pub fn sigmoid(s: &Shape) -> SmoothMap {
    pointwise(s, ScalarFn::sigmoid())
}

pub fn copy(x: &Object) -> SmoothMap {
    leaf(Prim::Copy(x.clone()))
}

pub fn project(left: &Object, right: &Object, keep: Side) -> SmoothMap {
    leaf(Prim::Project {
        left: left.clone(),
        right: right.clone(),
        keep,
    })
}

pub fn swap(left: &Object, right: &Object) -> SmoothMap {
    leaf(Prim::Swap {
        left: left.clone(),
        right: right.clone(),
    })
}

pub fn discard(x: &Object) -> SmoothMap {
    leaf(Prim::Discard(x.clone()))
}

pub fn wire(source: &Object, select: Vec<usize>) -> Result<SmoothMap> {
    SmoothMap::primitive(Prim::Wire {
        source: source.clone(),
        select,
    })
}

pub fn merge(target: &Object, into: Vec<usize>) -> Result<SmoothMap> {
    SmoothMap::primitive(Prim::Merge {
        target: target.clone(),
        into,
    })
}

pub fn constant(values: Vec<Tensor>) -> SmoothMap {
    leaf(Prim::Constant(values))
}

pub fn sum_all(s: &Shape) -> SmoothMap {
    leaf(Prim::SumAll(s.clone()))
}

pub fn broadcast(s: &Shape) -> SmoothMap {
    leaf(Prim::Broadcast(s.clone()))
}

/// Reverse derivative of a single primitive, `dom x cod -> dom`.
fn reverse_prim(p: &Prim, dom: &Object, cod: &Object) -> Result<SmoothMap> {
    let point_then_cot =
        |rest: SmoothMap| -> Result<SmoothMap> { project(dom, cod, Side::Right).then(&rest) };
    if let Some(sel) = p.selection() {
        return point_then_cot(merge(dom, sel)?);
    }
    if let Some((target, into)) = p.merge_targets() {
        return point_then_cot(wire(&target, into)?);
    }
    match p {
        Prim::MatMul {
            lhs,
            rhs,
            transpose_lhs: ta,
            transpose_rhs: tb,
        } => {
            let (ta, tb) = (*ta, *tb);
            let g = &cod[0];
            // ports: 0 = lhs, 1 = rhs, 2 = output cotangent
            let (d_lhs_sel, d_lhs) = if ta {
                (vec![1, 2], matmul_t(rhs, g, tb, true)?)
            } else {
                (vec![2, 1], matmul_t(g, rhs, false, !tb)?)
            };
            let (d_rhs_sel, d_rhs) = if tb {
                (vec![2, 0], matmul_t(g, lhs, true, ta)?)
            } else {
                (vec![0, 2], matmul_t(lhs, g, !ta, false)?)
            };
            let select = d_lhs_sel.into_iter().chain(d_rhs_sel).collect();
            wire(&dom.product(cod), select)?.then(&d_lhs.parallel(&d_rhs)?)
        }
        Prim::Hadamard(s) => {
            // (x, y, g) -> (g, y, g, x) -> (g*y, g*x)
            wire(&dom.product(cod), vec![2, 1, 2, 0])?.then(&hadamard(s).parallel(&hadamard(s))?)
        }
        Prim::Scale { shape, factor } => point_then_cot(scale(shape, *factor)),
        Prim::Transpose(s) => point_then_cot(transpose(&s.transposed())?),
        Prim::Pointwise { shape, f } => {
            let df = f.derivative();
            match df.as_constant() {
                Some(c) => point_then_cot(scale(shape, c)),
                None => pointwise(shape, df)
                    .parallel(&identity(cod))?
                    .then(&hadamard(shape)),
            }
        }
        Prim::Constant(_) => Ok(discard(cod)),
        Prim::SumAll(s) => point_then_cot(broadcast(s)),
        Prim::Broadcast(s) => point_then_cot(sum_all(s)),
        _ => unreachable!("structural primitives handled above"),
    }
}

/// Central-difference estimate of the vector-Jacobian product of `f` at
/// `point` against `cotangent`. Independent of [`SmoothMap::reverse`]: only
/// forward evaluation is used.
pub fn fd_vjp_oracle(
    f: &SmoothMap,
    point: &[Tensor],
    cotangent: &[Tensor],
    eps: f64,
) -> Result<Vec<Tensor>> {
    if Object::of_values(cotangent) != *f.codomain() {
        return Err(Error::Inputs {
            expected: f.codomain().clone(),
            actual: Object::of_values(cotangent),
        });
    }
    let dot = |outs: &[Tensor]| -> f64 {
        outs.iter()
            .zip(cotangent)
            .map(|(o, c)| {
                o.data()
                    .iter()
                    .zip(c.data())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum()
    };
    let mut grads = Vec::with_capacity(point.len());
    for port in 0..point.len() {
        let mut grad = Vec::with_capacity(point[port].data().len());
        for entry in 0..point[port].data().len() {
            let mut bumped = point.to_vec();
            let base = point[port].data()[entry];
            let mut shifted = |delta: f64| -> Result<f64> {
                let mut data = point[port].data().to_vec();
                data[entry] = base + delta;
                bumped[port] = Tensor::new(point[port].shape().clone(), data)?;
                Ok(dot(&f.evaluate(&bumped)?))
            };
            let plus = shifted(eps)?;
            let minus = shifted(-eps)?;
            grad.push((plus - minus) / (2.0 * eps));
        }
        grads.push(Tensor::new(point[port].shape().clone(), grad)?);
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Tensor {
        Tensor::from_rows(rows).unwrap()
    }

    fn obj(shapes: &[&[usize]]) -> Object {
        Object::new(
            shapes
                .iter()
                .map(|d| Shape::new(d.to_vec()).unwrap())
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn matmul_with_identity() {
        let s = Shape::matrix(2, 2);
        let f = matmul(&s, &s).unwrap();
        let mm = m(&[&[1.5, -2.0], &[0.25, 4.0]]);
        let out = f.evaluate(&[Tensor::identity(2), mm.clone()]).unwrap();
        assert_eq!(out, vec![mm]);
    }

    #[test]
    fn matmul_dot_product() {
        let f = matmul(&Shape::matrix(1, 2), &Shape::matrix(2, 1)).unwrap();
        let out = f
            .evaluate(&[m(&[&[1.0, 2.0]]), m(&[&[3.0], &[4.0]])])
            .unwrap();
        assert_eq!(out[0].data(), &[11.0]);
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let err = matmul(&Shape::matrix(2, 3), &Shape::matrix(2, 3)).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { kind: "MatMul", .. }));
        assert!(err.to_string().contains("[2,3]"));
    }

    #[test]
    fn copy_duplicates() {
        let x = obj(&[&[1, 2]]);
        let v = m(&[&[3.0, 4.0]]);
        assert_eq!(
            copy(&x).evaluate(std::slice::from_ref(&v)).unwrap(),
            vec![v.clone(), v]
        );
    }

    #[test]
    fn project_and_swap() {
        let l = obj(&[&[1]]);
        let r = obj(&[&[2]]);
        let a = Tensor::vector(vec![1.0]).unwrap();
        let b = Tensor::vector(vec![2.0, 3.0]).unwrap();
        let both = [a.clone(), b.clone()];
        assert_eq!(
            project(&l, &r, Side::Left).evaluate(&both).unwrap(),
            vec![a.clone()]
        );
        assert_eq!(
            project(&l, &r, Side::Right).evaluate(&both).unwrap(),
            vec![b.clone()]
        );
        assert_eq!(swap(&l, &r).evaluate(&both).unwrap(), vec![b, a]);
    }

    #[test]
    fn compose_checks_boundary() {
        let f = relu(&Shape::vector(2));
        let g = relu(&Shape::vector(3));
        assert!(matches!(compose(&f, &g), Err(Error::Boundary { .. })));
    }

    #[test]
    fn compose_copy_project_is_identity() {
        let x = obj(&[&[3]]);
        let h = copy(&x).then(&project(&x, &x, Side::Left)).unwrap();
        let v = Tensor::vector(vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(h.evaluate(std::slice::from_ref(&v)).unwrap(), vec![v]);
    }

    #[test]
    fn parallel_relu() {
        let s = Shape::vector(1);
        let f = relu(&s).parallel(&relu(&s)).unwrap();
        let out = f
            .evaluate(&[
                Tensor::vector(vec![-1.0]).unwrap(),
                Tensor::vector(vec![2.0]).unwrap(),
            ])
            .unwrap();
        assert_eq!(out[0].data(), &[0.0]);
        assert_eq!(out[1].data(), &[2.0]);
    }

    #[test]
    fn relu_values() {
        let out = relu(&Shape::vector(3))
            .evaluate(&[Tensor::vector(vec![-1.5, 0.0, 2.0]).unwrap()])
            .unwrap();
        assert_eq!(out[0].data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn row_swap_by_adjacency() {
        // sigma(A X W) with sigma = id, A the 2-cycle: rows swap
        let a = Shape::matrix(2, 2);
        let x = Shape::matrix(2, 1);
        let w = Shape::matrix(1, 1);
        let f = matmul(&a, &x)
            .unwrap()
            .parallel(&identity(&w.clone().into()))
            .unwrap()
            .then(&matmul(&x, &w).unwrap())
            .unwrap();
        let out = f
            .evaluate(&[
                m(&[&[0.0, 1.0], &[1.0, 0.0]]),
                m(&[&[1.0], &[2.0]]),
                m(&[&[1.0]]),
            ])
            .unwrap();
        assert_eq!(out[0], m(&[&[2.0], &[1.0]]));
    }

    #[test]
    fn evaluate_rejects_wrong_inputs() {
        let f = relu(&Shape::vector(2));
        assert!(matches!(
            f.evaluate(&[Tensor::vector(vec![1.0]).unwrap()]),
            Err(Error::Inputs { .. })
        ));
    }

    #[test]
    fn non_finite_intermediate_reports_path() {
        let s = Shape::vector(1);
        let f = relu(&s).then(&pointwise(&s, ScalarFn::Ln)).unwrap();
        let err = f
            .evaluate(&[Tensor::vector(vec![-1.0]).unwrap()])
            .unwrap_err();
        assert_eq!(
            err,
            Error::NonFiniteIntermediate {
                op: "Pointwise".into(),
                path: "compose.1/Pointwise".into()
            }
        );
    }

    #[test]
    fn reverse_identity_returns_cotangent() {
        let x = obj(&[&[2]]);
        let r = identity(&x).reverse().unwrap();
        let g = Tensor::vector(vec![5.0, 7.0]).unwrap();
        let out = r
            .evaluate(&[Tensor::vector(vec![1.0, 2.0]).unwrap(), g.clone()])
            .unwrap();
        assert_eq!(out, vec![g]);
    }

    #[test]
    fn reverse_relu_masks() {
        let r = relu(&Shape::vector(2)).reverse().unwrap();
        let out = r
            .evaluate(&[
                Tensor::vector(vec![-1.0, 2.0]).unwrap(),
                Tensor::vector(vec![5.0, 7.0]).unwrap(),
            ])
            .unwrap();
        assert_eq!(out[0].data(), &[0.0, 7.0]);
        // subgradient 0 at the kink
        let out = r
            .evaluate(&[
                Tensor::vector(vec![0.0, 0.0]).unwrap(),
                Tensor::vector(vec![5.0, 7.0]).unwrap(),
            ])
            .unwrap();
        assert_eq!(out[0].data(), &[0.0, 0.0]);
    }

    #[test]
    fn reverse_matmul_closed_form() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[0.5, -1.0], &[2.0, 0.0]]);
        let g = m(&[&[1.0, 0.0], &[-1.0, 2.0]]);
        let f = matmul(a.shape(), b.shape()).unwrap();
        let out = f
            .reverse()
            .unwrap()
            .evaluate(&[a.clone(), b.clone(), g.clone()])
            .unwrap();
        assert_eq!(out[0], g.matmul(&b.transpose()).unwrap());
        assert_eq!(out[1], a.transpose().matmul(&g).unwrap());
    }

    #[test]
    fn reverse_has_expected_signature() {
        let f = matmul(&Shape::matrix(2, 3), &Shape::matrix(3, 4)).unwrap();
        let r = f.reverse().unwrap();
        assert_eq!(r.domain(), &f.domain().product(f.codomain()));
        assert_eq!(r.codomain(), f.domain());
    }

    #[test]
    fn sigmoid_derivative_polynomials() {
        let d1 = ScalarFn::sigmoid().derivative();
        let d2 = d1.derivative();
        for &x in &[-2.0, -0.3, 0.0, 0.7, 3.0] {
            let s = logistic(x);
            assert!((d1.apply(x) - s * (1.0 - s)).abs() < 1e-15);
            let expect = s * (1.0 - s) * (1.0 - 2.0 * s);
            assert!((d2.apply(x) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn scalar_fn_derivatives_match_differences() {
        let fns = [
            ScalarFn::Ln,
            ScalarFn::Power {
                coef: -2.0,
                exp: -1,
            },
            ScalarFn::Power { coef: 3.0, exp: 2 },
            ScalarFn::Affine {
                scale: -1.0,
                shift: 1.0,
            },
            ScalarFn::sigmoid(),
        ];
        let h = 1e-6;
        for f in &fns {
            for &x in &[0.3, 0.9, 1.7] {
                let fd = (f.apply(x + h) - f.apply(x - h)) / (2.0 * h);
                assert!((f.derivative().apply(x) - fd).abs() < 1e-7, "{f:?} at {x}");
            }
        }
    }

    #[test]
    fn oracle_linear_map_is_transpose() {
        let mm = m(&[&[1.0, 2.0], &[-3.0, 0.5]]);
        let x = Shape::matrix(2, 1);
        let f = constant(vec![mm.clone()])
            .parallel(&identity(&x.clone().into()))
            .unwrap()
            .then(&matmul(mm.shape(), &x).unwrap())
            .unwrap();
        let g = m(&[&[0.7], &[-1.1]]);
        let est =
            fd_vjp_oracle(&f, &[m(&[&[0.2], &[0.4]])], std::slice::from_ref(&g), 1e-6).unwrap();
        let exact = mm.transpose().matmul(&g).unwrap();
        assert!(est[0].residual(&exact) < 1e-8);
    }

    #[test]
    fn oracle_constant_is_zero() {
        let x = obj(&[&[3]]);
        let c = constant(vec![Tensor::vector(vec![1.0, 2.0]).unwrap()]);
        let f = discard(&x).then(&c).unwrap();
        let est = fd_vjp_oracle(
            &f,
            &[Tensor::vector(vec![0.1, 0.2, 0.3]).unwrap()],
            &[Tensor::vector(vec![1.0, 1.0]).unwrap()],
            1e-6,
        )
        .unwrap();
        assert_eq!(est[0].data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn oracle_relu_away_from_kink() {
        let f = relu(&Shape::vector(3));
        let x = Tensor::vector(vec![-0.5, 0.25, 1.5]).unwrap();
        let g = Tensor::vector(vec![2.0, -3.0, 4.0]).unwrap();
        let est = fd_vjp_oracle(&f, &[x], &[g], 1e-6).unwrap();
        let masked = Tensor::vector(vec![0.0, -3.0, 4.0]).unwrap();
        assert!(est[0].residual(&masked) < 1e-9);
    }
}
