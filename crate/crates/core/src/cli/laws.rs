//! The law suite: every structural identity of the construction, checked by
//! evaluation on seeded random instances.
//!
//! Sample `i` of law `name` draws from `seed::rng(seed, name, i)`, so any
//! failure replays in isolation. Dims are drawn from `1..=4` and node counts
//! from `2..=5`; tensor entries are uniform in `[-1, 1)`.

use rand::Rng as _;

use crate::cli::report::{LawRecord, LawReport};
use crate::cokleisli::{self, CoKlMorphism};
use crate::error::Result;
use crate::gcnn::{self, Activation, GcnnLayerSpec, GcnnNetworkSpec};
use crate::para::{self, Reparameterization};
use crate::seed::{self, Rng};
use crate::smooth::{self, Side, SmoothMap};
use crate::tensor::{self, Object, Shape, Tensor};

/// The CoKleisli composition under test. Defaults to
/// [`cokleisli::cokl_compose`]; swapping it in is how mutation tests check
/// that the suite constrains the wiring.
pub type Composer = dyn Fn(&CoKlMorphism, &CoKlMorphism) -> Result<CoKlMorphism> + Sync;

/// Default tolerance of the float laws that the acceptance run holds to
/// rounding level.
pub const STRICT: f64 = 1e-12;
/// Default tolerance of the remaining float laws.
pub const LOOSE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LawcheckConfig {
    pub seed: u64,
    pub samples: usize,
    /// Overrides the per-law tolerance of every law that holds up to
    /// rounding.
    pub float_tol: Option<f64>,
    /// Tolerance for laws that hold bit for bit.
    pub exact_tol: f64,
}

impl Default for LawcheckConfig {
    fn default() -> Self {
        LawcheckConfig {
            seed: 42,
            samples: 200,
            float_tol: None,
            exact_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Exactness {
    Exact,
    Float(f64),
}

type Sides = (Vec<Tensor>, Vec<Tensor>);
type Check = fn(&mut Rng, &Composer) -> Result<Sides>;

struct Law {
    name: &'static str,
    exactness: Exactness,
    check: Check,
}

const LAWS: &[Law] = &[
    Law {
        name: "cokl_left_unit",
        exactness: Exactness::Float(STRICT),
        check: cokl_left_unit,
    },
    Law {
        name: "cokl_right_unit",
        exactness: Exactness::Float(STRICT),
        check: cokl_right_unit,
    },
    Law {
        name: "cokl_associativity",
        exactness: Exactness::Float(STRICT),
        check: cokl_associativity,
    },
    Law {
        name: "cokl_context_sharing",
        exactness: Exactness::Float(LOOSE),
        check: cokl_context_sharing,
    },
    Law {
        name: "cokl_product_bifunctorial",
        exactness: Exactness::Float(STRICT),
        check: cokl_product_bifunctorial,
    },
    Law {
        name: "cokl_product_projection",
        exactness: Exactness::Float(LOOSE),
        check: cokl_product_projection,
    },
    Law {
        name: "iota_identity",
        exactness: Exactness::Exact,
        check: iota_identity,
    },
    Law {
        name: "iota_composition",
        exactness: Exactness::Exact,
        check: iota_composition,
    },
    Law {
        name: "iota_monoidal",
        exactness: Exactness::Exact,
        check: iota_monoidal,
    },
    Law {
        name: "para_composition_formula",
        exactness: Exactness::Float(STRICT),
        check: para_composition_formula,
    },
    Law {
        name: "para_associativity",
        exactness: Exactness::Float(LOOSE),
        check: para_associativity,
    },
    Law {
        name: "para_unit",
        exactness: Exactness::Float(LOOSE),
        check: para_unit,
    },
    Law {
        name: "reparam_functoriality",
        exactness: Exactness::Float(LOOSE),
        check: reparam_functoriality,
    },
    Law {
        name: "reparam_context_free",
        exactness: Exactness::Float(LOOSE),
        check: reparam_context_free,
    },
    Law {
        name: "tau_oplax_composition",
        exactness: Exactness::Float(STRICT),
        check: tau_oplax_composition,
    },
    Law {
        name: "tau_oplax_unit",
        exactness: Exactness::Float(STRICT),
        check: tau_oplax_unit,
    },
    Law {
        name: "kappa_semantics",
        exactness: Exactness::Float(STRICT),
        check: kappa_semantics,
    },
    Law {
        name: "kappa_composition",
        exactness: Exactness::Float(LOOSE),
        check: kappa_composition,
    },
    Law {
        name: "mask_lemma",
        exactness: Exactness::Exact,
        check: mask_lemma,
    },
];

pub fn law_names() -> impl Iterator<Item = &'static str> {
    LAWS.iter().map(|l| l.name)
}

pub fn run_lawcheck(config: &LawcheckConfig) -> LawReport {
    run_lawcheck_with(config, &cokleisli::cokl_compose)
}

/// Runs the suite with a substitute CoKleisli composition.
pub fn run_lawcheck_with(config: &LawcheckConfig, compose: &Composer) -> LawReport {
    let records = LAWS
        .iter()
        .map(|law| {
            let tolerance = match law.exactness {
                Exactness::Exact => config.exact_tol,
                Exactness::Float(tol) => config.float_tol.unwrap_or(tol),
            };
            let max_residual = (0..config.samples)
                .map(|i| {
                    let mut rng = seed::rng(config.seed, law.name, i as u64);
                    match (law.check)(&mut rng, compose) {
                        Ok((lhs, rhs)) => residual(law.exactness, &lhs, &rhs),
                        Err(_) => f64::INFINITY,
                    }
                })
                .fold(0.0, f64::max);
            LawRecord {
                name: law.name.to_string(),
                samples: config.samples,
                max_residual,
                tolerance,
            }
        })
        .collect();
    LawReport { records }
}

fn residual(exactness: Exactness, lhs: &[Tensor], rhs: &[Tensor]) -> f64 {
    match exactness {
        Exactness::Float(_) => tensor::max_residual(lhs, rhs),
        // anything short of bit equality counts as a positive residual
        Exactness::Exact if tensor::all_bit_eq(lhs, rhs) => 0.0,
        Exactness::Exact => tensor::max_residual(lhs, rhs).max(f64::MIN_POSITIVE),
    }
}

fn dim(rng: &mut Rng) -> usize {
    rng.gen_range(1..=4)
}

fn nodes(rng: &mut Rng) -> usize {
    rng.gen_range(2..=5)
}

fn activation(rng: &mut Rng) -> Activation {
    Activation::ALL[rng.gen_range(0..Activation::ALL.len())]
}

fn draw(rng: &mut Rng, shape: &Shape) -> Tensor {
    seed::uniform(rng, shape, -1.0, 1.0)
}

fn draw_all(rng: &mut Rng, obj: &Object) -> Vec<Tensor> {
    obj.ports().iter().map(|s| draw(rng, s)).collect()
}

fn features(n: usize, k: usize) -> Object {
    gcnn::kappa_object(n, k)
}

fn adjacency(n: usize) -> Object {
    Object::single(Shape::matrix(n, n))
}

/// Context-free `X |-> sigma(X · W)` with a fixed random `W`.
fn random_smooth(rng: &mut Rng, n: usize, k_in: usize, k_out: usize) -> Result<SmoothMap> {
    let x = Shape::matrix(n, k_in);
    let w = draw(rng, &Shape::matrix(k_in, k_out));
    let act = activation(rng);
    let sigma = act.map(&Shape::matrix(n, k_out));
    smooth::identity(&x.clone().into())
        .parallel(&smooth::constant(vec![w.clone()]))?
        .then(&smooth::matmul(&x, w.shape())?)?
        .then(&sigma)
}

/// A random morphism `[n,k_in] -> [n,k_out]` in `CoKl([n,n] x -)`, drawn
/// from three families: a frozen graph layer, a context-free map, and a
/// two-hop map that reads the context twice.
fn random_cokl(rng: &mut Rng, n: usize, k_in: usize, k_out: usize) -> Result<CoKlMorphism> {
    let ctx = adjacency(n);
    match rng.gen_range(0..3) {
        0 => {
            let layer = gcnn::build_layer(&GcnnLayerSpec::new(n, k_in, k_out, activation(rng))?);
            let w = draw(rng, &Shape::matrix(k_in, k_out));
            let frozen = para::reparameterize(&layer, &Reparameterization::constant(vec![w]))?;
            Ok(frozen.inner().clone())
        }
        1 => Ok(cokleisli::iota_embed(
            &ctx,
            &random_smooth(rng, n, k_in, k_out)?,
        )),
        _ => {
            let a = Shape::matrix(n, n);
            let x = Shape::matrix(n, k_in);
            let w = draw(rng, &Shape::matrix(k_in, k_out));
            let body = smooth::wire(&ctx.product(&x.clone().into()), vec![0, 0, 1])?
                .then(&smooth::identity(&ctx).parallel(&smooth::matmul(&a, &x)?)?)?
                .then(&smooth::matmul(&a, &x)?)?
                .then(
                    &smooth::identity(&x.clone().into())
                        .parallel(&smooth::constant(vec![w.clone()]))?,
                )?
                .then(&smooth::matmul(&x, w.shape())?)?;
            CoKlMorphism::new(ctx, x.into(), body)
        }
    }
}

fn cokl_left_unit(rng: &mut Rng, compose: &Composer) -> Result<Sides> {
    let (n, k, k2) = (nodes(rng), dim(rng), dim(rng));
    let f = random_cokl(rng, n, k, k2)?;
    let id = cokleisli::cokl_identity(f.context(), f.source());
    let a = draw_all(rng, f.context());
    let x = draw_all(rng, f.source());
    Ok((compose(&id, &f)?.evaluate(&a, &x)?, f.evaluate(&a, &x)?))
}

fn cokl_right_unit(rng: &mut Rng, compose: &Composer) -> Result<Sides> {
    let (n, k, k2) = (nodes(rng), dim(rng), dim(rng));
    let f = random_cokl(rng, n, k, k2)?;
    let id = cokleisli::cokl_identity(f.context(), f.target());
    let a = draw_all(rng, f.context());
    let x = draw_all(rng, f.source());
    Ok((compose(&f, &id)?.evaluate(&a, &x)?, f.evaluate(&a, &x)?))
}

fn cokl_associativity(rng: &mut Rng, compose: &Composer) -> Result<Sides> {
    let n = nodes(rng);
    let ks = [dim(rng), dim(rng), dim(rng), dim(rng)];
    let f = random_cokl(rng, n, ks[0], ks[1])?;
    let g = random_cokl(rng, n, ks[1], ks[2])?;
    let h = random_cokl(rng, n, ks[2], ks[3])?;
    let a = draw_all(rng, f.context());
    let x = draw_all(rng, f.source());
    let left = compose(&compose(&f, &g)?, &h)?;
    let right = compose(&f, &compose(&g, &h)?)?;
    Ok((left.evaluate(&a, &x)?, right.evaluate(&a, &x)?))
}

/// `(f ; g)(a, x) = g(a, f(a, x))`, with the right side evaluated stage by
/// stage outside the engine's composition.
fn cokl_context_sharing(rng: &mut Rng, compose: &Composer) -> Result<Sides> {
    let n = nodes(rng);
    let ks = [dim(rng), dim(rng), dim(rng)];
    let f = random_cokl(rng, n, ks[0], ks[1])?;
    let g = random_cokl(rng, n, ks[1], ks[2])?;
    let a = draw_all(rng, f.context());
    let x = draw_all(rng, f.source());
    let staged = g.evaluate(&a, &f.evaluate(&a, &x)?)?;
    Ok((compose(&f, &g)?.evaluate(&a, &x)?, staged))
}

fn cokl_product_bifunctorial(rng: &mut Rng, compose: &Composer) -> Result<Sides> {
    let n = nodes(rng);
    let ks = [dim(rng), dim(rng), dim(rng), dim(rng), dim(rng), dim(rng)];
    let f = random_cokl(rng, n, ks[0], ks[1])?;
    let g = random_cokl(rng, n, ks[2], ks[3])?;
    let f2 = random_cokl(rng, n, ks[1], ks[4])?;
    let g2 = random_cokl(rng, n, ks[3], ks[5])?;
    let a = draw_all(rng, f.context());
    let x = draw_all(rng, &f.source().product(g.source()));
    let left = compose(
        &cokleisli::cokl_product(&f, &g)?,
        &cokleisli::cokl_product(&f2, &g2)?,
    )?;
    let right = cokleisli::cokl_product(&compose(&f, &f2)?, &compose(&g, &g2)?)?;
    Ok((left.evaluate(&a, &x)?, right.evaluate(&a, &x)?))
}

fn cokl_product_projection(rng: &mut Rng, compose: &Composer) -> Result<Sides> {
    let n = nodes(rng);
    let ks = [dim(rng), dim(rng), dim(rng), dim(rng)];
    let f = random_cokl(rng, n, ks[0], ks[1])?;
    let g = random_cokl(rng, n, ks[2], ks[3])?;
    let a = draw_all(rng, f.context());
    let x = draw_all(rng, f.source());
    let x2 = draw_all(rng, g.source());
    let both: Vec<Tensor> = x.iter().chain(&x2).cloned().collect();
    let fst = cokleisli::iota_embed(
        f.context(),
        &smooth::project(f.target(), g.target(), Side::Left),
    );
    let left = compose(&cokleisli::cokl_product(&f, &g)?, &fst)?;
    Ok((left.evaluate(&a, &both)?, f.evaluate(&a, &x)?))
}

fn iota_identity(rng: &mut Rng, _: &Composer) -> Result<Sides> {
    let (n, k) = (nodes(rng), dim(rng));
    let (ctx, x) = (adjacency(n), features(n, k));
    let a = draw_all(rng, &ctx);
    let v = draw_all(rng, &x);
    let embedded = cokleisli::iota_embed(&ctx, &smooth::identity(&x));
    let id = cokleisli::cokl_identity(&ctx, &x);
    Ok((embedded.evaluate(&a, &v)?, id.evaluate(&a, &v)?))
}

fn iota_composition(rng: &mut Rng, compose: &Composer) -> Result<Sides> {
    let n = nodes(rng);
    let ks = [dim(rng), dim(rng), dim(rng)];
    let f = random_smooth(rng, n, ks[0], ks[1])?;
    let g = random_smooth(rng, n, ks[1], ks[2])?;
    let ctx = adjacency(n);
    let a = draw_all(rng, &ctx);
    let x = draw_all(rng, f.domain());
    let left = cokleisli::iota_embed(&ctx, &f.then(&g)?);
    let right = compose(
        &cokleisli::iota_embed(&ctx, &f),
        &cokleisli::iota_embed(&ctx, &g),
    )?;
    Ok((left.evaluate(&a, &x)?, right.evaluate(&a, &x)?))
}

fn iota_monoidal(rng: &mut Rng, _: &Composer) -> Result<Sides> {
    let n = nodes(rng);
    let ks = [dim(rng), dim(rng), dim(rng), dim(rng)];
    let f = random_smooth(rng, n, ks[0], ks[1])?;
    let g = random_smooth(rng, n, ks[2], ks[3])?;
    let ctx = adjacency(n);
    let a = draw_all(rng, &ctx);
    let x = draw_all(rng, &f.domain().product(g.domain()));
    let left = cokleisli::iota_embed(&ctx, &f.parallel(&g)?);
    let right = cokleisli::cokl_product(
        &cokleisli::iota_embed(&ctx, &f),
        &cokleisli::iota_embed(&ctx, &g),
    )?;
    Ok((left.evaluate(&a, &x)?, right.evaluate(&a, &x)?))
}

/// Two composed layers against `g(W', A, f(W, A, X))` written out with
/// plain matrix products.
fn para_composition_formula(rng: &mut Rng, _: &Composer) -> Result<Sides> {
    let n = nodes(rng);
    let ks = [dim(rng), dim(rng), dim(rng)];
    let l1 = GcnnLayerSpec::new(n, ks[0], ks[1], activation(rng))?;
    let l2 = GcnnLayerSpec::new(n, ks[1], ks[2], activation(rng))?;
    let h = para::para_compose(&gcnn::build_layer(&l1), &gcnn::build_layer(&l2))?;
    let a = draw(rng, &Shape::matrix(n, n));
    let w = draw(rng, &l1.weight_shape());
    let w2 = draw(rng, &l2.weight_shape());
    let x = draw(rng, &Shape::matrix(n, ks[0]));
    let f = |w: &Tensor, x: &Tensor| -> Result<Tensor> {
        Ok(l1.activation.apply(&a.matmul(x)?.matmul(w)?))
    };
    let g = |w: &Tensor, x: &Tensor| -> Result<Tensor> {
        Ok(l2.activation.apply(&a.matmul(x)?.matmul(w)?))
    };
    let direct = g(&w2, &f(&w, &x)?)?;
    Ok((
        h.evaluate(std::slice::from_ref(&a), &[w2, w], &[x])?,
        vec![direct],
    ))
}

fn random_layer(rng: &mut Rng, n: usize, k_in: usize, k_out: usize) -> Result<para::ParaMorphism> {
    Ok(gcnn::build_layer(&GcnnLayerSpec::new(
        n,
        k_in,
        k_out,
        activation(rng),
    )?))
}

fn para_associativity(rng: &mut Rng, _: &Composer) -> Result<Sides> {
    let n = nodes(rng);
    let ks = [dim(rng), dim(rng), dim(rng), dim(rng)];
    let f = random_layer(rng, n, ks[0], ks[1])?;
    let g = random_layer(rng, n, ks[1], ks[2])?;
    let h = random_layer(rng, n, ks[2], ks[3])?;
    let left = para::para_compose(&para::para_compose(&f, &g)?, &h)?;
    let right = para::para_compose(&f, &para::para_compose(&g, &h)?)?;
    // flat parameter lists make the reassociation 2-cell the identity
    debug_assert_eq!(left.param(), right.param());
    let a = draw_all(rng, left.context());
    let p = draw_all(rng, left.param());
    let x = draw_all(rng, left.source());
    Ok((left.evaluate(&a, &p, &x)?, right.evaluate(&a, &p, &x)?))
}

fn para_unit(rng: &mut Rng, _: &Composer) -> Result<Sides> {
    let (n, k, k2) = (nodes(rng), dim(rng), dim(rng));
    let m = random_layer(rng, n, k, k2)?;
    let left = para::para_compose(&para::para_identity(m.context(), m.source()), &m)?;
    let right = para::para_compose(&m, &para::para_identity(m.context(), m.target()))?;
    let a = draw_all(rng, m.context());
    let p = draw_all(rng, m.param());
    let x = draw_all(rng, m.source());
    let direct = m.evaluate(&a, &p, &x)?;
    let mut lhs = left.evaluate(&a, &p, &x)?;
    lhs.extend(right.evaluate(&a, &p, &x)?);
    Ok((lhs, [direct.clone(), direct].concat()))
}

fn reparam_functoriality(rng: &mut Rng, _: &Composer) -> Result<Sides> {
    let (n, k, k2) = (nodes(rng), dim(rng), dim(rng));
    let m = random_layer(rng, n, k, k2)?;
    let p = m.param()[0].clone();
    let s = Reparameterization::new(smooth::sigmoid(&p));
    let r = Reparameterization::new(smooth::scale(&p, rng.gen_range(-2.0..2.0)));
    let left = para::reparameterize(&m, &r.then(&s)?)?;
    let right = para::reparameterize(&para::reparameterize(&m, &s)?, &r)?;
    let a = draw_all(rng, m.context());
    let q = draw_all(rng, m.param());
    let x = draw_all(rng, m.source());
    Ok((left.evaluate(&a, &q, &x)?, right.evaluate(&a, &q, &x)?))
}

fn reparam_context_free(rng: &mut Rng, _: &Composer) -> Result<Sides> {
    let (n, k, k2) = (nodes(rng), dim(rng), dim(rng));
    let m = random_layer(rng, n, k, k2)?;
    let p = m.param()[0].clone();
    let r = Reparameterization::new(smooth::sigmoid(&p).then(&smooth::scale(&p, 2.0))?);
    let reparam = para::reparameterize(&m, &r)?;
    let q = draw_all(rng, m.param());
    let x = draw_all(rng, m.source());
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    let rq = r.map().evaluate(&q)?;
    for _ in 0..2 {
        let a = draw_all(rng, m.context());
        lhs.extend(reparam.evaluate(&a, &q, &x)?);
        rhs.extend(m.evaluate(&a, &rq, &x)?);
    }
    Ok((lhs, rhs))
}

fn tau_oplax_composition(rng: &mut Rng, compose: &Composer) -> Result<Sides> {
    let n = nodes(rng);
    let ks = [dim(rng), dim(rng), dim(rng)];
    let f = random_cokl(rng, n, ks[0], ks[1])?;
    let g = random_cokl(rng, n, ks[1], ks[2])?;
    let ctx = f.context().clone();
    let tied = para::reparameterize(
        &para::para_compose(&para::tau_embed(&f), &para::tau_embed(&g))?,
        &Reparameterization::copy(&ctx),
    )?;
    let direct = para::tau_embed(&compose(&f, &g)?);
    let a = draw_all(rng, &ctx);
    let x = draw_all(rng, f.source());
    Ok((tied.evaluate(&[], &a, &x)?, direct.evaluate(&[], &a, &x)?))
}

fn tau_oplax_unit(rng: &mut Rng, _: &Composer) -> Result<Sides> {
    let (n, k) = (nodes(rng), dim(rng));
    let (ctx, x) = (adjacency(n), features(n, k));
    let dropped = para::reparameterize(
        &para::para_identity(&Object::unit(), &x),
        &Reparameterization::terminal(&ctx),
    )?;
    let direct = para::tau_embed(&cokleisli::cokl_identity(&ctx, &x));
    let a = draw_all(rng, &ctx);
    let v = draw_all(rng, &x);
    Ok((
        dropped.evaluate(&[], &a, &v)?,
        direct.evaluate(&[], &a, &v)?,
    ))
}

fn random_network(rng: &mut Rng, n: usize, depth: usize, first: usize) -> Result<GcnnNetworkSpec> {
    let mut dims = vec![first];
    dims.extend((0..depth).map(|_| dim(rng)));
    let acts = (0..depth).map(|_| activation(rng)).collect();
    GcnnNetworkSpec::new(n, dims, acts)
}

fn kappa_semantics(rng: &mut Rng, _: &Composer) -> Result<Sides> {
    let n = nodes(rng);
    let depth = rng.gen_range(1..=3);
    let first = dim(rng);
    let spec = random_network(rng, n, depth, first)?;
    let net = gcnn::kappa_embed(&spec);
    let a = draw(rng, &Shape::matrix(n, n));
    let p = draw_all(rng, net.param());
    let x = draw(rng, &Shape::matrix(n, spec.dims()[0]));
    let (_, direct) = gcnn::reference_forward(&spec, &a, &p, &x)?;
    Ok((net.evaluate(&[a], &p, &[x])?, vec![direct]))
}

fn kappa_composition(rng: &mut Rng, _: &Composer) -> Result<Sides> {
    let n = nodes(rng);
    let d1 = rng.gen_range(1..=2);
    let d2 = rng.gen_range(1..=2);
    let first = dim(rng);
    let h1 = random_network(rng, n, d1, first)?;
    let h2 = random_network(rng, n, d2, *h1.dims().last().expect("nonempty"))?;
    let whole = gcnn::kappa_embed(&h1.then(&h2)?);
    let parts = para::para_compose(&gcnn::kappa_embed(&h1), &gcnn::kappa_embed(&h2))?;
    let a = draw_all(rng, whole.context());
    let p = draw_all(rng, whole.param());
    let x = draw_all(rng, whole.source());
    Ok((whole.evaluate(&a, &p, &x)?, parts.evaluate(&a, &p, &x)?))
}

/// `diag(p) · x = ReLU(x)` bit for bit, with exact zeros mixed in.
fn mask_lemma(rng: &mut Rng, _: &Composer) -> Result<Sides> {
    let shape = if rng.gen_bool(0.5) {
        Shape::vector(rng.gen_range(1..=8))
    } else {
        Shape::matrix(rng.gen_range(1..=5), rng.gen_range(1..=4))
    };
    let data = (0..shape.size())
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect();
    let x = Tensor::new(shape.clone(), data)?;
    let masked = gcnn::apply_mask(&gcnn::relu_mask(&x), &x)?;
    Ok((vec![masked], smooth::relu(&shape).evaluate(&[x])?))
}
