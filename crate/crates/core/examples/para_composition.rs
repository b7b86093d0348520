//! Parametric morphisms: composing layers collects their parameters, and
//! reparameterizations act on the parameter object only.

use cokl_gcnn::gcnn::{build_layer, Activation, GcnnLayerSpec};
use cokl_gcnn::para::{para_compose, reparameterize, Reparameterization};
use cokl_gcnn::smooth;
use cokl_gcnn::{Shape, Tensor};

fn main() -> cokl_gcnn::Result<()> {
    let first = build_layer(&GcnnLayerSpec::new(2, 2, 3, Activation::Relu)?);
    let second = build_layer(&GcnnLayerSpec::new(2, 3, 1, Activation::Identity)?);
    let net = para_compose(&first, &second)?;
    println!("parameter object (later layer first): {}", net.param());

    let a = Tensor::from_rows(&[[0.5, 0.5], [0.5, 0.5]])?;
    let w1 = Tensor::from_rows(&[[1.0, -1.0, 0.5], [0.0, 2.0, 1.0]])?;
    let w2 = Tensor::from_rows(&[[1.0], [1.0], [-1.0]])?;
    let x = Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0]])?;
    let (a, x) = ([a], [x]);
    let out = net.evaluate(&a, &[w2.clone(), w1.clone()], &x)?;
    println!("output =\n{}", out[0].to_text());

    let halve = Reparameterization::new(
        smooth::scale(&Shape::matrix(3, 1), 0.5)
            .parallel(&smooth::identity(&Shape::matrix(2, 3).into()))?,
    );
    let damped = reparameterize(&net, &halve)?;
    let out = damped.evaluate(&a, &[w2, w1], &x)?;
    println!("with the second layer halved =\n{}", out[0].to_text());
    Ok(())
}
