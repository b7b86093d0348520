//! Graph convolution layers: normalization, the layer formula, and the
//! ReLU mask.

use cokl_gcnn::gcnn::{
    apply_mask, kappa_embed, normalize_adjacency, reference_forward, relu_mask, Activation,
    AdjacencyMatrix, GcnnNetworkSpec, NormalizeMode,
};
use cokl_gcnn::Tensor;

fn main() -> cokl_gcnn::Result<()> {
    // a path graph 0 - 1 - 2 - 3
    let raw = Tensor::from_rows(&[
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
    ])?;
    let a = normalize_adjacency(
        &AdjacencyMatrix::new(raw)?,
        NormalizeMode::SymmetricSelfLoops,
    )?
    .into_matrix();
    println!("normalized adjacency =\n{}", a.to_text());

    let spec = GcnnNetworkSpec::new(
        4,
        vec![2, 3, 1],
        vec![Activation::Relu, Activation::Sigmoid],
    )?;
    let net = kappa_embed(&spec);
    let params = spec.init_params(11);
    let x = Tensor::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])?;

    let out = net.evaluate(std::slice::from_ref(&a), &params, std::slice::from_ref(&x))?;
    let (pre, direct) = reference_forward(&spec, &a, &params, &x)?;
    println!("network output =\n{}", out[0].to_text());
    println!("matches the layer formula: {}", out[0].bit_eq(&direct));

    let mask = relu_mask(&pre[0]);
    println!("ReLU mask of the first layer =\n{}", mask.to_text());
    println!(
        "diag(p) · z == relu(z): {}",
        apply_mask(&mask, &pre[0])?.bit_eq(&Activation::Relu.apply(&pre[0]))
    );
    Ok(())
}
