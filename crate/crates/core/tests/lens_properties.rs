mod common;

use cokl_gcnn::cokleisli;
use cokl_gcnn::gcnn::{
    self, Activation, AdjacencyMatrix, GcnnLayerSpec, GcnnNetworkSpec, NormalizeMode,
};
use cokl_gcnn::lens::{self, LossKind, LossSpec, OptimizerState};
use cokl_gcnn::para::{self, Reparameterization};
use cokl_gcnn::seed;
use cokl_gcnn::smooth;
use cokl_gcnn::tensor::max_residual;
use cokl_gcnn::{Shape, Tensor};
use common::{draw, port, random_stage};
use proptest::prelude::*;

fn activation(i: usize) -> Activation {
    Activation::ALL[i % Activation::ALL.len()]
}

fn network(n: usize, dims: &[usize], acts: usize) -> GcnnNetworkSpec {
    let acts = (0..dims.len() - 1)
        .map(|i| activation(acts >> (2 * i)))
        .collect();
    GcnnNetworkSpec::new(n, dims.to_vec(), acts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn backprop_is_functorial(s in any::<u64>(), n in 2usize..6, k in prop::array::uniform4(1usize..5), acts in any::<usize>()) {
        let f = gcnn::build_network(&network(n, &k[..2], acts));
        let g = gcnn::build_network(&network(n, &k[1..], acts >> 2));
        let whole = lens::para_reverse(&para::para_compose(&f, &g).unwrap()).unwrap();
        let parts = lens::paralens_compose(&lens::para_reverse(&f).unwrap(), &lens::para_reverse(&g).unwrap()).unwrap();
        let mut rng = seed::rng(s, "functorial", 0);
        let a = draw(&mut rng, whole.context());
        let p = draw(&mut rng, whole.param());
        let x = draw(&mut rng, whole.source());
        let dz = draw(&mut rng, whole.target());
        let l = parts.run_backward(&a, &p, &x, &dz).unwrap();
        let r = whole.run_backward(&a, &p, &x, &dz).unwrap();
        prop_assert!(max_residual(&l.params, &r.params) <= 1e-10);
        prop_assert!(max_residual(&l.input, &r.input) <= 1e-10);
        prop_assert!(max_residual(&parts.run_forward(&a, &p, &x).unwrap(), &whole.run_forward(&a, &p, &x).unwrap()) <= 1e-10);
    }

    #[test]
    fn backward_never_returns_a_context_cotangent(n in 2usize..6, dims in prop::collection::vec(1usize..5, 2..5), acts in any::<usize>()) {
        let spec = network(n, &dims, acts);
        let l = lens::para_reverse(&gcnn::build_network(&spec)).unwrap();
        prop_assert_eq!(l.backward().target(), &spec.param_object().product(&spec.input_object()));
        prop_assert_eq!(l.backward().context(), &spec.context_object());
    }

    #[test]
    fn lens_backward_is_additive(s in any::<u64>(), n in 2usize..6, dims in prop::collection::vec(1usize..5, 2..4), acts in any::<usize>()) {
        let spec = network(n, &dims, acts);
        let l = lens::para_reverse(&gcnn::build_network(&spec)).unwrap();
        let mut rng = seed::rng(s, "additive", 0);
        let a = draw(&mut rng, l.context());
        let p = draw(&mut rng, l.param());
        let x = draw(&mut rng, l.source());
        let d1 = draw(&mut rng, l.target());
        let d2 = draw(&mut rng, l.target());
        let d12 = vec![d1[0].add(&d2[0]).unwrap()];
        let g1 = l.run_backward(&a, &p, &x, &d1).unwrap();
        let g2 = l.run_backward(&a, &p, &x, &d2).unwrap();
        let g12 = l.run_backward(&a, &p, &x, &d12).unwrap();
        let sum: Vec<Tensor> = g1.params.iter().chain(&g1.input).zip(g2.params.iter().chain(&g2.input)).map(|(u, v)| u.add(v).unwrap()).collect();
        let both: Vec<Tensor> = g12.params.into_iter().chain(g12.input).collect();
        prop_assert!(max_residual(&both, &sum) <= 1e-12);
    }

    #[test]
    fn context_free_maps_ignore_the_context(s in any::<u64>(), n in 1usize..5, k in 1usize..5, k2 in 1usize..5) {
        let mut rng = seed::rng(s, "iota", 0);
        let f = random_stage(&mut rng, n, k, k2, false).unwrap();
        let ctx = port(3, 3);
        let m = cokleisli::iota_embed(&ctx, &f);
        let x = draw(&mut rng, f.domain());
        let a1 = draw(&mut rng, &ctx);
        let a2 = draw(&mut rng, &ctx);
        prop_assert_eq!(m.evaluate(&a1, &x).unwrap(), m.evaluate(&a2, &x).unwrap());
    }

    #[test]
    fn scaling_reparameterization_is_a_two_cell(s in any::<u64>(), n in 2usize..6, k in 1usize..5, k2 in 1usize..5, c in -2.0f64..2.0) {
        let spec = GcnnLayerSpec::new(n, k, k2, Activation::Sigmoid).unwrap();
        let h = gcnn::build_layer(&spec);
        let r = Reparameterization::new(smooth::scale(&spec.weight_shape(), c));
        let h2 = para::reparameterize(&h, &r).unwrap();
        let verdict = gcnn::two_cell_verify(&r, &h, &h2, 8, 1e-12, s).unwrap();
        prop_assert!(verdict.pass, "{:?}", verdict);
    }

    #[test]
    fn mask_reproduces_relu_exactly(data in prop::collection::vec(prop_oneof![Just(0.0), Just(-0.0), -5.0f64..5.0], 1..24)) {
        let x = Tensor::vector(data).unwrap();
        let masked = gcnn::apply_mask(&gcnn::relu_mask(&x), &x).unwrap();
        let relu = smooth::relu(x.shape()).evaluate(std::slice::from_ref(&x)).unwrap();
        prop_assert!(masked.bit_eq(&relu[0]));
    }

    #[test]
    fn symmetric_normalization_stays_symmetric(s in any::<u64>(), n in 1usize..7) {
        let mut rng = seed::rng(s, "adjacency", 0);
        let raw = seed::uniform(&mut rng, &Shape::matrix(n, n), 0.0, 1.0);
        let sym = raw.add(&raw.transpose()).unwrap();
        let norm = gcnn::normalize_adjacency(&AdjacencyMatrix::new(sym).unwrap(), NormalizeMode::SymmetricSelfLoops).unwrap();
        let m = norm.matrix();
        prop_assert!(m.residual(&m.transpose()) <= 1e-15);
        prop_assert!((0..n).all(|i| m.get(i, i) > 0.0));
    }
}

#[test]
fn one_step_matches_the_closed_form() {
    // single identity layer on one node: y = a x w, loss (y - t)^2
    let spec = GcnnNetworkSpec::new(1, vec![1, 1], vec![Activation::Identity]).unwrap();
    let target = Tensor::matrix(1, 1, vec![1.0]).unwrap();
    let l = lens::attach_loss(
        &lens::para_reverse(&gcnn::build_network(&spec)).unwrap(),
        &LossSpec::new(LossKind::MeanSquaredError, target),
    )
    .unwrap();
    let (a, x, w) = (2.0, 3.0, 0.5);
    let m = |v| Tensor::matrix(1, 1, vec![v]).unwrap();
    let opt = OptimizerState::new(0.1, vec![m(w)]).unwrap();
    let (next, loss) = lens::train_step(&l, &opt, &[m(a)], &[m(x)]).unwrap();
    let y: f64 = a * x * w;
    assert_eq!(loss, (y - 1.0).powi(2));
    let grad = 2.0 * (y - 1.0) * a * x;
    assert!((next.params[0].data()[0] - (w - 0.1 * grad)).abs() < 1e-15);
}
