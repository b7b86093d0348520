//! Finite-difference check of the backward pass of random graph networks.
//!
//! For each sample a network of depth 1 to 3 is drawn along with `A`, the
//! weights, `X` and an output cotangent. The lens backward pass is compared
//! against central differences of the forward body. The oracle differentiates
//! with respect to every input port including `A`; that column is dropped,
//! since the backward pass has no slot for it.

use rand::Rng as _;

use crate::cli::report::{LawRecord, LawReport};
use crate::error::Result;
use crate::gcnn::{self, Activation, GcnnNetworkSpec};
use crate::lens;
use crate::seed::{self, Rng};
use crate::smooth;
use crate::tensor::{self, Object, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckConfig {
    pub seed: u64,
    pub samples: usize,
    pub eps: f64,
    pub tol: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            seed: 7,
            samples: 100,
            eps: 1e-6,
            tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Family {
    Only(Activation),
    Mixed,
}

const FAMILIES: [(&str, Family); 4] = [
    ("gradcheck_identity", Family::Only(Activation::Identity)),
    ("gradcheck_sigmoid", Family::Only(Activation::Sigmoid)),
    ("gradcheck_relu", Family::Only(Activation::Relu)),
    ("gradcheck_mixed", Family::Mixed),
];

/// Redraws allowed per sample when a ReLU preactivation sits too close to
/// the kink for central differences to be meaningful.
const MAX_REDRAWS: usize = 64;

struct Instance {
    spec: GcnnNetworkSpec,
    a: Tensor,
    params: Vec<Tensor>,
    x: Tensor,
    dy: Tensor,
}

fn draw_all(rng: &mut Rng, obj: &Object) -> Vec<Tensor> {
    obj.ports()
        .iter()
        .map(|s| seed::uniform(rng, s, -1.0, 1.0))
        .collect()
}

fn draw_spec(rng: &mut Rng, family: Family) -> Result<GcnnNetworkSpec> {
    let n = rng.gen_range(2..=5);
    let depth = rng.gen_range(1..=3);
    let dims = (0..=depth).map(|_| rng.gen_range(1..=4)).collect();
    let acts = (0..depth)
        .map(|_| match family {
            Family::Only(a) => a,
            Family::Mixed => Activation::ALL[rng.gen_range(0..Activation::ALL.len())],
        })
        .collect();
    GcnnNetworkSpec::new(n, dims, acts)
}

fn draw_instance(rng: &mut Rng, family: Family, margin: f64) -> Result<Instance> {
    let spec = draw_spec(rng, family)?;
    for _ in 0..MAX_REDRAWS {
        let a = draw_all(rng, &spec.context_object()).remove(0);
        let params = draw_all(rng, &spec.param_object());
        let x = draw_all(rng, &spec.input_object()).remove(0);
        let (pre, _) = gcnn::reference_forward(&spec, &a, &params, &x)?;
        let near_kink =
            spec.activations().iter().zip(&pre).any(|(act, z)| {
                *act == Activation::Relu && z.data().iter().any(|v| v.abs() < margin)
            });
        if !near_kink {
            let dy = draw_all(rng, &spec.output_object()).remove(0);
            return Ok(Instance {
                spec,
                a,
                params,
                x,
                dy,
            });
        }
    }
    Err(crate::Error::Config(format!(
        "no sample clear of the ReLU kink after {MAX_REDRAWS} draws"
    )))
}

/// Residual between the lens cotangents and the finite-difference oracle.
fn check(inst: &Instance, eps: f64) -> Result<f64> {
    let net = gcnn::build_network(&inst.spec);
    let lens = lens::para_reverse(&net)?;
    let context = [inst.a.clone()];
    let input = [inst.x.clone()];
    let dy = [inst.dy.clone()];
    let got = lens.run_backward(&context, &inst.params, &input, &dy)?;
    let got: Vec<Tensor> = got.params.into_iter().chain(got.input).collect();

    let point: Vec<Tensor> = context
        .iter()
        .chain(&inst.params)
        .chain(&input)
        .cloned()
        .collect();
    let mut want = smooth::fd_vjp_oracle(net.inner().body(), &point, &dy, eps)?;
    want.remove(0);
    Ok(tensor::max_residual(&got, &want))
}

/// Zero when the backward pass returns exactly `P x X`, with no cotangent
/// slot for the context.
fn context_excluded(rng: &mut Rng) -> Result<f64> {
    let spec = draw_spec(rng, Family::Mixed)?;
    let lens = lens::para_reverse(&gcnn::build_network(&spec))?;
    let expected = spec.param_object().product(&spec.input_object());
    Ok(if lens.backward().target() == &expected {
        0.0
    } else {
        f64::INFINITY
    })
}

pub fn run_gradcheck(config: &GradcheckConfig) -> LawReport {
    let margin = 10.0 * config.eps;
    let mut records: Vec<LawRecord> = FAMILIES
        .iter()
        .map(|&(name, family)| {
            let max_residual = (0..config.samples)
                .map(|i| {
                    let mut rng = seed::rng(config.seed, name, i as u64);
                    draw_instance(&mut rng, family, margin)
                        .and_then(|inst| check(&inst, config.eps))
                        .unwrap_or(f64::INFINITY)
                })
                .fold(0.0, f64::max);
            LawRecord {
                name: name.to_string(),
                samples: config.samples,
                max_residual,
                tolerance: config.tol,
            }
        })
        .collect();

    let name = "backward_excludes_context";
    let max_residual = (0..config.samples)
        .map(|i| {
            context_excluded(&mut seed::rng(config.seed, name, i as u64)).unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max);
    records.push(LawRecord {
        name: name.to_string(),
        samples: config.samples,
        max_residual,
        tolerance: 0.0,
    });
    LawReport { records }
}
