//! Morphisms that all read one shared context.

use cokl_gcnn::cokleisli::{cokl_compose, cokl_identity, cokl_product, iota_embed, CoKlMorphism};
use cokl_gcnn::smooth;
use cokl_gcnn::{Object, Shape, Tensor};

fn main() -> cokl_gcnn::Result<()> {
    let a = Shape::matrix(3, 3);
    let x = Shape::matrix(3, 1);
    let ctx = Object::single(a.clone());

    // propagate: (A, X) |-> A · X
    let propagate = CoKlMorphism::new(ctx.clone(), x.clone().into(), smooth::matmul(&a, &x)?)?;
    // a context-free squaring, lifted into the category
    let square = iota_embed(
        &ctx,
        &smooth::copy(&x.clone().into()).then(&smooth::hadamard(&x))?,
    );

    let two_hops = cokl_compose(&propagate, &cokl_compose(&square, &propagate)?)?;

    let adjacency = [Tensor::from_rows(&[
        [0.0, 1.0, 0.0],
        [1.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
    ])?];
    let signal = [Tensor::from_rows(&[[1.0], [2.0], [3.0]])?];
    let out = two_hops.evaluate(&adjacency, &signal)?;
    println!("A · (A · x)^2 =\n{}", out[0].to_text());

    let id = cokl_identity(&ctx, &x.clone().into());
    let same = cokl_compose(&id, &propagate)?.evaluate(&adjacency, &signal)?;
    println!(
        "id ; propagate == propagate: {}",
        same == propagate.evaluate(&adjacency, &signal)?
    );

    // both factors of a product see the same A
    let both = cokl_product(&propagate, &square)?;
    let out = both.evaluate(&adjacency, &[signal[0].clone(), signal[0].clone()])?;
    println!("product outputs: {} and {}", out[0].shape(), out[1].shape());
    Ok(())
}
