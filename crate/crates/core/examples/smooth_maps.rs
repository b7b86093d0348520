//! Building smooth maps, evaluating them and taking reverse derivatives.

use cokl_gcnn::smooth::{self, fd_vjp_oracle};
use cokl_gcnn::tensor::max_residual;
use cokl_gcnn::{Object, Shape, Tensor};

fn main() -> cokl_gcnn::Result<()> {
    let x = Shape::matrix(2, 3);
    let w = Shape::matrix(3, 2);
    let y = Shape::matrix(2, 2);

    // (X, W) |-> sigmoid(X · W) ⊙ sigmoid(X · W)
    let f = smooth::matmul(&x, &w)?
        .then(&smooth::sigmoid(&y))?
        .then(&smooth::copy(&Object::single(y.clone())))?
        .then(&smooth::hadamard(&y))?;
    println!(
        "f : {} -> {}  ({} nodes)",
        f.domain(),
        f.codomain(),
        f.size()
    );

    let xv = Tensor::from_rows(&[[0.5, -1.0, 2.0], [1.5, 0.0, -0.5]])?;
    let wv = Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.5, -0.5]])?;
    let out = f.evaluate(&[xv.clone(), wv.clone()])?;
    println!("f(x, w) =\n{}", out[0].to_text());

    // R[f] : (X, W, dY) -> (dX, dW)
    let r = f.reverse()?;
    let dy = Tensor::filled(y, 1.0);
    let grads = r.evaluate(&[xv.clone(), wv.clone(), dy.clone()])?;
    println!("dW =\n{}", grads[1].to_text());

    let fd = fd_vjp_oracle(&f, &[xv, wv], &[dy], 1e-6)?;
    println!(
        "max residual against central differences: {:e}",
        max_residual(&grads, &fd)
    );
    Ok(())
}
