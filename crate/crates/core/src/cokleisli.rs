//! The CoKleisli category of the product comonad `A x -`.
//!
//! A morphism `X -> Y` is a smooth map `A x X -> Y` for a fixed context
//! object `A`. Composition copies the context so every stage reads the same
//! `A`; the identity projects it away. Bodies always take the context first.

use crate::error::{Error, Result};
use crate::smooth::{self, Side, SmoothMap};
use crate::tensor::{Object, Tensor};

#[derive(Debug, Clone)]
pub struct CoKlMorphism {
    context: Object,
    source: Object,
    target: Object,
    body: SmoothMap,
}

impl CoKlMorphism {
    /// Wraps `body : context x source -> target`.
    pub fn new(context: Object, source: Object, body: SmoothMap) -> Result<Self> {
        let expected = context.product(&source);
        if body.domain() != &expected {
            return Err(Error::shape(
                "CoKlMorphism",
                format!(
                    "body domain {} is not context {} x source {}",
                    body.domain(),
                    context,
                    source
                ),
            ));
        }
        Ok(CoKlMorphism {
            target: body.codomain().clone(),
            context,
            source,
            body,
        })
    }

    pub fn context(&self) -> &Object {
        &self.context
    }

    pub fn source(&self) -> &Object {
        &self.source
    }

    pub fn target(&self) -> &Object {
        &self.target
    }

    pub fn body(&self) -> &SmoothMap {
        &self.body
    }

    pub fn evaluate(&self, context: &[Tensor], input: &[Tensor]) -> Result<Vec<Tensor>> {
        let mut args = context.to_vec();
        args.extend_from_slice(input);
        self.body.evaluate(&args)
    }

    pub fn then(&self, next: &CoKlMorphism) -> Result<CoKlMorphism> {
        cokl_compose(self, next)
    }
}

fn same_context(f: &CoKlMorphism, g: &CoKlMorphism) -> Result<()> {
    if f.context != g.context {
        return Err(Error::Context {
            left: f.context.clone(),
            right: g.context.clone(),
        });
    }
    Ok(())
}

/// The counit: `(a, x) |-> x`.
pub fn cokl_identity(context: &Object, x: &Object) -> CoKlMorphism {
    CoKlMorphism {
        context: context.clone(),
        source: x.clone(),
        target: x.clone(),
        body: smooth::project(context, x, Side::Right),
    }
}

/// `(a, x) |-> g(a, f(a, x))`, wired as `A x X -> A x A x X -> A x Y -> Z`.
pub fn cokl_compose(f: &CoKlMorphism, g: &CoKlMorphism) -> Result<CoKlMorphism> {
    same_context(f, g)?;
    if f.target != g.source {
        return Err(Error::Boundary {
            left: f.target.clone(),
            right: g.source.clone(),
        });
    }
    let a = &f.context;
    let body = smooth::copy(a)
        .parallel(&smooth::identity(&f.source))?
        .then(&smooth::identity(a).parallel(&f.body)?)?
        .then(&g.body)?;
    CoKlMorphism::new(a.clone(), f.source.clone(), body)
}

/// `(a, (x, x')) |-> (f(a, x), g(a, x'))`, both factors reading the same `a`.
pub fn cokl_product(f: &CoKlMorphism, g: &CoKlMorphism) -> Result<CoKlMorphism> {
    same_context(f, g)?;
    let a = &f.context;
    let body = smooth::copy(a)
        .parallel(&smooth::identity(&f.source.product(&g.source)))?
        .then(
            &smooth::identity(a)
                .parallel(&smooth::swap(a, &f.source))?
                .parallel(&smooth::identity(&g.source))?,
        )?
        .then(&f.body.parallel(&g.body)?)?;
    CoKlMorphism::new(a.clone(), f.source.product(&g.source), body)
}

/// Embeds a context-free map: `(a, x) |-> f(x)`.
pub fn iota_embed(context: &Object, f: &SmoothMap) -> CoKlMorphism {
    let body = smooth::project(context, f.domain(), Side::Right)
        .then(f)
        .expect("projection lands in the domain of f");
    CoKlMorphism {
        context: context.clone(),
        source: f.domain().clone(),
        target: f.codomain().clone(),
        body,
    }
}

/// The lifted reverse derivative `R[f] ; pi_X`: a morphism `X x Y -> X` in
/// the same context, differentiating in `X` only. Its output never contains
/// a context-shaped cotangent.
pub fn cokl_reverse(f: &CoKlMorphism) -> Result<CoKlMorphism> {
    let a = &f.context;
    let body = f
        .body
        .reverse()?
        .then(&smooth::project(a, &f.source, Side::Right))?;
    CoKlMorphism::new(a.clone(), f.source.product(&f.target), body)
}
