//! Turning the context into a parameter. Composing after the move needs
//! the context twice, so the two sides only agree once the copies are tied
//! back together.

use cokl_gcnn::cokleisli::{cokl_compose, iota_embed, CoKlMorphism};
use cokl_gcnn::para::{para_compose, reparameterize, tau_embed, Reparameterization};
use cokl_gcnn::smooth;
use cokl_gcnn::{Object, Shape, Tensor};

fn main() -> cokl_gcnn::Result<()> {
    let a = Shape::matrix(2, 2);
    let x = Shape::matrix(2, 1);
    let ctx = Object::single(a.clone());
    let f = CoKlMorphism::new(ctx.clone(), x.clone().into(), smooth::matmul(&a, &x)?)?;
    let g = iota_embed(&ctx, &smooth::sigmoid(&x));

    let after = para_compose(&tau_embed(&f), &tau_embed(&g))?;
    println!("tau(f) ; tau(g) has parameter {}", after.param());
    let tied = reparameterize(&after, &Reparameterization::copy(&ctx))?;
    let before = tau_embed(&cokl_compose(&f, &g)?);
    println!("tau(f ; g) has parameter {}", before.param());

    let av = Tensor::from_rows(&[[0.0, 1.0], [1.0, 0.0]])?;
    let xv = Tensor::from_rows(&[[2.0], [-1.0]])?;
    let (av, xv) = ([av], [xv]);
    let lhs = tied.evaluate(&[], &av, &xv)?;
    let rhs = before.evaluate(&[], &av, &xv)?;
    println!("after tying the copies: {}", lhs == rhs);
    Ok(())
}
