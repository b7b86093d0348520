//! Parametric CoKleisli morphisms.
//!
//! A [`ParaMorphism`] `X -> Y` carries a parameter object `P` and a CoKleisli
//! morphism `P x X -> Y`, so its body reads `(a, p, x)`. Parameters are
//! context-free objects of the base category; they act on CoKleisli morphisms
//! through [`act_on_morphism`], which is `iota(id_P) x f`.
//!
//! Objects are flat lists of ports, so parameter tuples are strictly
//! associative: the parameter of `(f ; g) ; h` and of `f ; (g ; h)` is the
//! same list `R x Q x P`.

use crate::cokleisli::{self, CoKlMorphism};
use crate::error::{Error, Result};
use crate::smooth::{self, SmoothMap};
use crate::tensor::{Object, Tensor};

#[derive(Debug, Clone)]
pub struct ParaMorphism {
    param: Object,
    source: Object,
    inner: CoKlMorphism,
}

impl ParaMorphism {
    /// `inner` must have source `param x source`.
    pub fn new(param: Object, source: Object, inner: CoKlMorphism) -> Result<Self> {
        if inner.source() != &param.product(&source) {
            return Err(Error::shape(
                "ParaMorphism",
                format!(
                    "inner source {} is not param {} x source {}",
                    inner.source(),
                    param,
                    source
                ),
            ));
        }
        Ok(ParaMorphism {
            param,
            source,
            inner,
        })
    }

    /// A morphism with the unit parameter.
    pub fn unparameterized(f: CoKlMorphism) -> Self {
        ParaMorphism {
            param: Object::unit(),
            source: f.source().clone(),
            inner: f,
        }
    }

    pub fn param(&self) -> &Object {
        &self.param
    }

    pub fn source(&self) -> &Object {
        &self.source
    }

    pub fn target(&self) -> &Object {
        self.inner.target()
    }

    pub fn context(&self) -> &Object {
        self.inner.context()
    }

    pub fn inner(&self) -> &CoKlMorphism {
        &self.inner
    }

    pub fn evaluate(
        &self,
        context: &[Tensor],
        params: &[Tensor],
        input: &[Tensor],
    ) -> Result<Vec<Tensor>> {
        let mut args = params.to_vec();
        args.extend_from_slice(input);
        self.inner.evaluate(context, &args)
    }

    pub fn then(&self, next: &ParaMorphism) -> Result<ParaMorphism> {
        para_compose(self, next)
    }
}

/// A 2-cell: a context-free map `Q -> P` between parameter objects.
#[derive(Debug, Clone)]
pub struct Reparameterization(SmoothMap);

impl Reparameterization {
    pub fn new(map: SmoothMap) -> Self {
        Reparameterization(map)
    }

    pub fn identity(p: &Object) -> Self {
        Reparameterization(smooth::identity(p))
    }

    /// Weight tying: `P -> P x P`.
    pub fn copy(p: &Object) -> Self {
        Reparameterization(smooth::copy(p))
    }

    /// The terminal reparameterization `P -> 1`.
    pub fn terminal(p: &Object) -> Self {
        Reparameterization(smooth::discard(p))
    }

    /// Freezes the parameter at fixed values: `1 -> P`.
    pub fn constant(values: Vec<Tensor>) -> Self {
        Reparameterization(smooth::constant(values))
    }

    pub fn map(&self) -> &SmoothMap {
        &self.0
    }

    pub fn domain(&self) -> &Object {
        self.0.domain()
    }

    pub fn codomain(&self) -> &Object {
        self.0.codomain()
    }

    /// `self ; next` as maps `Q -> P -> P'`.
    pub fn then(&self, next: &Reparameterization) -> Result<Reparameterization> {
        Ok(Reparameterization(self.0.then(&next.0)?))
    }
}

/// `P (.) f : P x X -> P x Y`, passing the parameter through untouched.
pub fn act_on_morphism(p: &Object, f: &CoKlMorphism) -> Result<CoKlMorphism> {
    cokleisli::cokl_product(&cokleisli::iota_embed(f.context(), &smooth::identity(p)), f)
}

pub fn para_identity(context: &Object, x: &Object) -> ParaMorphism {
    ParaMorphism::unparameterized(cokleisli::cokl_identity(context, x))
}

/// Composite `(Q x P, h)` of `(P, f) : X -> Y` and `(Q, g) : Y -> Z`:
/// `h(a, (q, p, x)) = g(a, (q, f(a, (p, x))))`.
pub fn para_compose(f: &ParaMorphism, g: &ParaMorphism) -> Result<ParaMorphism> {
    if f.target() != g.source() {
        return Err(Error::Boundary {
            left: f.target().clone(),
            right: g.source().clone(),
        });
    }
    let lifted = act_on_morphism(&g.param, &f.inner)?;
    let inner = cokleisli::cokl_compose(&lifted, &g.inner)?;
    ParaMorphism::new(g.param.product(&f.param), f.source.clone(), inner)
}

/// Precomposes `r : Q -> P` on the parameter port. The reparameterization is
/// embedded through `iota`, so it cannot read the context.
pub fn reparameterize(m: &ParaMorphism, r: &Reparameterization) -> Result<ParaMorphism> {
    if r.codomain() != &m.param {
        return Err(Error::shape(
            "reparameterize",
            format!(
                "reparameterization lands in {}, parameter is {}",
                r.codomain(),
                m.param
            ),
        ));
    }
    let pre = cokleisli::iota_embed(m.context(), &r.0.parallel(&smooth::identity(&m.source))?);
    let inner = cokleisli::cokl_compose(&pre, &m.inner)?;
    ParaMorphism::new(r.domain().clone(), m.source.clone(), inner)
}

/// The oplax embedding `CoKl(A x -) -> Para(Smooth)`: `f` becomes the
/// `A`-parameterized morphism `(A, f)` over the trivial context.
pub fn tau_embed(f: &CoKlMorphism) -> ParaMorphism {
    let inner = CoKlMorphism::new(
        Object::unit(),
        f.context().product(f.source()),
        f.body().clone(),
    )
    .expect("body domain is context x source");
    ParaMorphism {
        param: f.context().clone(),
        source: f.source().clone(),
        inner,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    fn scalar_mult() -> ParaMorphism {
        // (a, w, x) |-> a · x · w over 1x1 matrices
        let s = Shape::matrix(1, 1);
        let one = Object::single(s.clone());
        let body = smooth::wire(&Object::new(vec![s.clone(); 3]), vec![0, 2, 1])
            .unwrap()
            .then(
                &smooth::matmul(&s, &s)
                    .unwrap()
                    .parallel(&smooth::identity(&one))
                    .unwrap(),
            )
            .unwrap()
            .then(&smooth::matmul(&s, &s).unwrap())
            .unwrap();
        let inner = CoKlMorphism::new(one.clone(), one.product(&one), body).unwrap();
        ParaMorphism::new(one.clone(), one, inner).unwrap()
    }

    fn t(v: f64) -> Tensor {
        Tensor::matrix(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn identity_evaluates_to_input() {
        let one = Object::single(Shape::matrix(1, 1));
        let id = para_identity(&one, &one);
        assert!(id.param().is_empty());
        assert_eq!(
            id.evaluate(&[t(3.0)], &[], &[t(5.0)]).unwrap(),
            vec![t(5.0)]
        );
    }

    #[test]
    fn compose_orders_parameters_later_first() {
        let f = scalar_mult();
        let h = para_compose(&f, &f).unwrap();
        assert_eq!(h.param().len(), 2);
        // a=2, q=3, p=5, x=7: g(a, q, f(a, p, x)) = 2*3*(2*5*7)
        let out = h.evaluate(&[t(2.0)], &[t(3.0), t(5.0)], &[t(7.0)]).unwrap();
        assert_eq!(out, vec![t(420.0)]);
    }

    #[test]
    fn act_passes_parameter_through() {
        let f = scalar_mult();
        let p = Object::single(Shape::vector(2));
        let acted = act_on_morphism(&p, f.inner()).unwrap();
        let pv = Tensor::vector(vec![1.0, -1.0]).unwrap();
        let out = acted
            .evaluate(&[t(2.0)], &[pv.clone(), t(3.0), t(4.0)])
            .unwrap();
        assert_eq!(out, vec![pv, t(24.0)]);
    }

    #[test]
    fn reparameterize_with_constant_freezes() {
        let f = scalar_mult();
        let frozen = reparameterize(&f, &Reparameterization::constant(vec![t(10.0)])).unwrap();
        assert!(frozen.param().is_empty());
        assert_eq!(
            frozen.evaluate(&[t(2.0)], &[], &[t(3.0)]).unwrap(),
            vec![t(60.0)]
        );
    }

    #[test]
    fn reparameterize_checks_codomain() {
        let f = scalar_mult();
        let bad = Reparameterization::identity(&Object::single(Shape::vector(2)));
        assert!(reparameterize(&f, &bad).is_err());
    }

    #[test]
    fn tying_weights_with_copy() {
        let f = scalar_mult();
        let h = para_compose(&f, &f).unwrap();
        let tied = reparameterize(&h, &Reparameterization::copy(f.param())).unwrap();
        let direct = h.evaluate(&[t(2.0)], &[t(3.0), t(3.0)], &[t(7.0)]).unwrap();
        assert_eq!(
            tied.evaluate(&[t(2.0)], &[t(3.0)], &[t(7.0)]).unwrap(),
            direct
        );
    }

    #[test]
    fn tau_moves_context_to_parameter() {
        let f = scalar_mult();
        let tf = tau_embed(f.inner());
        assert!(tf.context().is_empty());
        assert_eq!(tf.param(), f.context());
        let out = tf.evaluate(&[], &[t(2.0)], &[t(3.0), t(4.0)]).unwrap();
        assert_eq!(out, vec![t(24.0)]);
    }
}
