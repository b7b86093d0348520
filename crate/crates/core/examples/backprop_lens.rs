//! Backpropagation as lens composition. Reversing a composite equals
//! composing the reversed parts, and the context never gets a gradient.

use cokl_gcnn::gcnn::{build_layer, Activation, GcnnLayerSpec};
use cokl_gcnn::lens::{para_reverse, paralens_compose};
use cokl_gcnn::para::para_compose;
use cokl_gcnn::seed;
use cokl_gcnn::tensor::max_residual;
use cokl_gcnn::Tensor;

fn main() -> cokl_gcnn::Result<()> {
    let f = build_layer(&GcnnLayerSpec::new(4, 3, 2, Activation::Sigmoid)?);
    let g = build_layer(&GcnnLayerSpec::new(4, 2, 1, Activation::Relu)?);

    let whole = para_reverse(&para_compose(&f, &g)?)?;
    let parts = paralens_compose(&para_reverse(&f)?, &para_reverse(&g)?)?;
    println!(
        "backward : {} -> {}",
        whole.backward().source(),
        whole.backward().target()
    );

    let mut rng = seed::rng(0, "example", 0);
    let mut draw = |obj: &cokl_gcnn::Object| -> Vec<Tensor> {
        obj.ports()
            .iter()
            .map(|s| seed::uniform(&mut rng, s, -1.0, 1.0))
            .collect()
    };
    let a = draw(whole.context());
    let p = draw(whole.param());
    let x = draw(whole.source());
    let dz = draw(whole.target());

    let lhs = whole.run_backward(&a, &p, &x, &dz)?;
    let rhs = parts.run_backward(&a, &p, &x, &dz)?;
    println!(
        "parameter cotangents agree to {:e}",
        max_residual(&lhs.params, &rhs.params)
    );
    println!(
        "input cotangents agree to {:e}",
        max_residual(&lhs.input, &rhs.input)
    );
    println!(
        "cotangent ports returned: {} (params) + {} (input)",
        lhs.params.len(),
        lhs.input.len()
    );
    Ok(())
}
