#![allow(dead_code)]

use cokl_gcnn::seed::{self, Rng};
use cokl_gcnn::smooth::{self, SmoothMap};
use cokl_gcnn::{Object, Result, Shape, Tensor};
use rand::Rng as _;

pub fn draw(rng: &mut Rng, obj: &Object) -> Vec<Tensor> {
    obj.ports()
        .iter()
        .map(|s| seed::uniform(rng, s, -1.0, 1.0))
        .collect()
}

pub fn port(n: usize, k: usize) -> Object {
    Object::single(Shape::matrix(n, k))
}

/// One random stage `[n,k_in] -> [n,k_out]`. With `smooth_only` the stage
/// avoids ReLU, so finite differences are valid everywhere.
pub fn random_stage(
    rng: &mut Rng,
    n: usize,
    k_in: usize,
    k_out: usize,
    smooth_only: bool,
) -> Result<SmoothMap> {
    let x = Shape::matrix(n, k_in);
    let xo = Object::single(x.clone());
    let w = seed::uniform(rng, &Shape::matrix(k_in, k_out), -1.0, 1.0);
    let linear = smooth::identity(&xo)
        .parallel(&smooth::constant(vec![w.clone()]))?
        .then(&smooth::matmul(&x, w.shape())?)?;
    let y = Shape::matrix(n, k_out);
    let yo = Object::single(y.clone());
    let tail = match rng.gen_range(0..if smooth_only { 4 } else { 5 }) {
        0 => smooth::sigmoid(&y),
        1 => smooth::copy(&yo).then(&smooth::hadamard(&y))?,
        2 => smooth::transpose(&y)?
            .then(&smooth::scale(&y.transposed(), rng.gen_range(-2.0..2.0)))?
            .then(&smooth::transpose(&y.transposed())?)?,
        3 => smooth::copy(&yo)
            .then(&smooth::sigmoid(&y).parallel(&smooth::identity(&yo))?)?
            .then(&smooth::add(&yo))?,
        _ => smooth::relu(&y),
    };
    linear.then(&tail)
}

/// A chain of `len` random stages through random widths.
pub fn random_chain(
    rng: &mut Rng,
    n: usize,
    widths: &[usize],
    smooth_only: bool,
) -> Result<SmoothMap> {
    let mut map = smooth::identity(&port(n, widths[0]));
    for w in widths.windows(2) {
        map = map.then(&random_stage(rng, n, w[0], w[1], smooth_only)?)?;
    }
    Ok(map)
}
