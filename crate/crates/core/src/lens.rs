//! Backpropagation as parametric lenses.
//!
//! [`para_reverse`] sends a parametric morphism `(P, f)` to a [`ParaLens`]
//! whose forward pass is `f` itself and whose backward pass is
//! `R[f] ; pi_(P x X)`. Backward maps return cotangents for the parameter and
//! the input but never for the context, so the adjacency matrix of a graph
//! network is read by every layer yet never receives a gradient.

use crate::cokleisli::{self, CoKlMorphism};
use crate::error::{Error, Result};
use crate::para::{self, ParaMorphism};
use crate::smooth::{self, ScalarFn, SmoothMap};
use crate::tensor::{Object, Shape, Tensor};

#[derive(Debug, Clone)]
pub struct ParaLens {
    param: Object,
    source: Object,
    forward: CoKlMorphism,
    backward: CoKlMorphism,
}

/// Cotangents produced by one backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Cotangents {
    pub params: Vec<Tensor>,
    pub input: Vec<Tensor>,
}

impl ParaLens {
    pub fn param(&self) -> &Object {
        &self.param
    }

    pub fn source(&self) -> &Object {
        &self.source
    }

    pub fn target(&self) -> &Object {
        self.forward.target()
    }

    pub fn context(&self) -> &Object {
        self.forward.context()
    }

    /// `A x (P x X) -> Y`
    pub fn forward(&self) -> &CoKlMorphism {
        &self.forward
    }

    /// `A x (P x X x Y) -> P x X`
    pub fn backward(&self) -> &CoKlMorphism {
        &self.backward
    }

    pub fn run_forward(
        &self,
        context: &[Tensor],
        params: &[Tensor],
        input: &[Tensor],
    ) -> Result<Vec<Tensor>> {
        let args: Vec<Tensor> = params.iter().chain(input).cloned().collect();
        self.forward.evaluate(context, &args)
    }

    pub fn run_backward(
        &self,
        context: &[Tensor],
        params: &[Tensor],
        input: &[Tensor],
        cotangent: &[Tensor],
    ) -> Result<Cotangents> {
        let args: Vec<Tensor> = params
            .iter()
            .chain(input)
            .chain(cotangent)
            .cloned()
            .collect();
        let mut out = self.backward.evaluate(context, &args)?;
        let input = out.split_off(self.param.len());
        Ok(Cotangents { params: out, input })
    }
}

/// Augments a parametric morphism with its reverse derivative.
pub fn para_reverse(m: &ParaMorphism) -> Result<ParaLens> {
    Ok(ParaLens {
        param: m.param().clone(),
        source: m.source().clone(),
        forward: m.inner().clone(),
        backward: cokleisli::cokl_reverse(m.inner())?,
    })
}

/// Lens composite of `l1 : X -> Y` (parameter `P`) and `l2 : Y -> Z`
/// (parameter `Q`), with parameter `Q x P`.
///
/// The backward pass reruns `l1` forward for the intermediate `y`, pulls the
/// output cotangent back through `l2` to get `(dq, dy)`, then through `l1`
/// to get `(dp, dx)`.
pub fn paralens_compose(l1: &ParaLens, l2: &ParaLens) -> Result<ParaLens> {
    if l1.target() != l2.source() {
        return Err(Error::Boundary {
            left: l1.target().clone(),
            right: l2.source().clone(),
        });
    }
    if l1.context() != l2.context() {
        return Err(Error::Context {
            left: l1.context().clone(),
            right: l2.context().clone(),
        });
    }
    let forward = para::para_compose(
        &ParaMorphism::new(l1.param.clone(), l1.source.clone(), l1.forward.clone())?,
        &ParaMorphism::new(l2.param.clone(), l2.source.clone(), l2.forward.clone())?,
    )?;

    let a = l1.context();
    let (p, q, x) = (&l1.param, &l2.param, &l1.source);
    let (y, z) = (l1.target(), l2.target());
    let idx = |start: usize, obj: &Object| (start..start + obj.len()).collect::<Vec<_>>();

    // ports of the backward body: A, Q, P, X, dZ
    let a_i = idx(0, a);
    let q_i = idx(a.len(), q);
    let p_i = idx(a.len() + q.len(), p);
    let x_i = idx(a.len() + q.len() + p.len(), x);
    let dz_i = idx(a.len() + q.len() + p.len() + x.len(), z);
    let input = a.product(q).product(p).product(x).product(z);
    let apx: Vec<usize> = [&a_i[..], &p_i, &x_i].concat();
    let fan_out = smooth::wire(&input, [&a_i[..], &q_i, &apx, &dz_i, &apx].concat())?;
    let apx_obj = a.product(p).product(x);

    let run_l1 = smooth::identity(&a.product(q))
        .parallel(l1.forward.body())?
        .parallel(&smooth::identity(z))?
        .parallel(&smooth::identity(&apx_obj))?;
    let pull_l2 = l2.backward.body().parallel(&smooth::identity(&apx_obj))?;

    // ports now: Q, dY, A, P, X
    let after = q.product(y).product(&apx_obj);
    let q_j = idx(0, q);
    let dy_j = idx(q.len(), y);
    let apx_j = idx(q.len() + y.len(), &apx_obj);
    let regroup = smooth::wire(&after, [&q_j[..], &apx_j, &dy_j].concat())?;
    let pull_l1 = smooth::identity(q).parallel(l1.backward.body())?;

    let body = fan_out
        .then(&run_l1)?
        .then(&pull_l2)?
        .then(&regroup)?
        .then(&pull_l1)?;
    let backward = CoKlMorphism::new(a.clone(), q.product(p).product(x).product(z), body)?;

    Ok(ParaLens {
        param: forward.param().clone(),
        source: x.clone(),
        forward: forward.inner().clone(),
        backward,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    MeanSquaredError,
    /// Binary cross-entropy, for outputs already in `(0, 1)` such as a
    /// sigmoid head.
    CrossEntropy,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(LossKind::MeanSquaredError),
            "bce" | "cross-entropy" => Ok(LossKind::CrossEntropy),
            other => Err(Error::Config(format!(
                "unknown loss {other:?} (expected mse or bce)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    pub target: Tensor,
}

impl LossSpec {
    pub fn new(kind: LossKind, target: Tensor) -> Self {
        LossSpec { kind, target }
    }

    /// The loss as a smooth map `Y -> [1]` with the target baked in.
    pub fn loss_map(&self) -> Result<SmoothMap> {
        let s = self.target.shape().clone();
        let y = Object::single(s.clone());
        let n = s.size() as f64;
        let mean = |sum_of: SmoothMap, sign: f64| -> Result<SmoothMap> {
            sum_of
                .then(&smooth::sum_all(&s))?
                .then(&smooth::scale(&Shape::scalar(), sign / n))
        };
        match self.kind {
            LossKind::MeanSquaredError => {
                let diff = smooth::identity(&y)
                    .parallel(&smooth::constant(vec![self.target.scale(-1.0)]))?
                    .then(&smooth::add(&y))?;
                let squared = diff.then(&smooth::copy(&y))?.then(&smooth::hadamard(&s))?;
                mean(squared, 1.0)
            }
            LossKind::CrossEntropy => {
                let one_minus = ScalarFn::Affine {
                    scale: -1.0,
                    shift: 1.0,
                };
                let logs = smooth::copy(&y).then(
                    &smooth::pointwise(&s, ScalarFn::Ln).parallel(
                        &smooth::pointwise(&s, one_minus.clone())
                            .then(&smooth::pointwise(&s, ScalarFn::Ln))?,
                    )?,
                )?;
                let weights = smooth::constant(vec![
                    self.target.clone(),
                    self.target.map(|t| one_minus.apply(t)),
                ]);
                let four = Object::new(vec![s.clone(); 4]);
                let weighted = logs
                    .parallel(&weights)?
                    .then(&smooth::wire(&four, vec![0, 2, 1, 3])?)?
                    .then(&smooth::hadamard(&s).parallel(&smooth::hadamard(&s))?)?
                    .then(&smooth::add(&y))?;
                mean(weighted, -1.0)
            }
        }
    }
}

/// Appends a loss to the lens: the forward pass emits the scalar loss and
/// the backward pass, seeded with `1`, returns the loss cotangents.
pub fn attach_loss(l: &ParaLens, loss: &LossSpec) -> Result<ParaLens> {
    let y = Object::single(loss.target.shape().clone());
    if l.target() != &y {
        return Err(Error::shape(
            "attach_loss",
            format!(
                "network output {} does not match loss target {}",
                l.target(),
                y
            ),
        ));
    }
    let head = ParaMorphism::unparameterized(cokleisli::iota_embed(l.context(), &loss.loss_map()?));
    paralens_compose(l, &para_reverse(&head)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub params: Vec<Tensor>,
    /// Number of steps taken so far.
    pub step: usize,
}

impl OptimizerState {
    /// A zero learning rate is accepted and freezes the parameters.
    pub fn new(learning_rate: f64, params: Vec<Tensor>) -> Result<Self> {
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {learning_rate}"
            )));
        }
        Ok(OptimizerState {
            learning_rate,
            params,
            step: 0,
        })
    }
}

fn diverged(step: usize, what: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFiniteIntermediate { .. } | Error::NonFinite { .. } => {
            Error::Diverged { step, what }
        }
        other => other,
    }
}

/// One plain gradient-descent step on a loss-terminated lens. Returns the
/// updated state and the loss at the parameters before the step.
pub fn train_step(
    l: &ParaLens,
    opt: &OptimizerState,
    context: &[Tensor],
    input: &[Tensor],
) -> Result<(OptimizerState, f64)> {
    if l.target() != &Object::single(Shape::scalar()) {
        return Err(Error::shape(
            "train_step",
            format!(
                "lens output {} is not a scalar loss; attach a loss first",
                l.target()
            ),
        ));
    }
    let step = opt.step;
    let loss = l
        .run_forward(context, &opt.params, input)
        .map_err(diverged(step, "loss"))?[0]
        .data()[0];
    let seed = Tensor::scalar(1.0)?;
    let grads = l
        .run_backward(context, &opt.params, input, &[seed])
        .map_err(diverged(step, "gradient"))?;
    let params = opt
        .params
        .iter()
        .zip(&grads.params)
        .map(|(p, g)| {
            let next = p.zip_with(g, |p, g| p - opt.learning_rate * g)?;
            if next.is_finite() {
                Ok(next)
            } else {
                Err(Error::Diverged {
                    step,
                    what: "parameter",
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        OptimizerState {
            learning_rate: opt.learning_rate,
            params,
            step: step + 1,
        },
        loss,
    ))
}
