//! Runs the law suite, then again against a composition that forgets to
//! copy the context.

use cokl_gcnn::cli::{run_lawcheck, run_lawcheck_with, LawcheckConfig};
use cokl_gcnn::cokleisli::CoKlMorphism;
use cokl_gcnn::smooth;
use cokl_gcnn::Tensor;

fn consume(f: &CoKlMorphism, g: &CoKlMorphism) -> cokl_gcnn::Result<CoKlMorphism> {
    let zeros = f
        .context()
        .ports()
        .iter()
        .map(|s| Tensor::zeros(s.clone()))
        .collect();
    let body = f
        .body()
        .then(&smooth::constant(zeros).parallel(&smooth::identity(f.target()))?)?
        .then(g.body())?;
    CoKlMorphism::new(f.context().clone(), f.source().clone(), body)
}

fn main() {
    let config = LawcheckConfig {
        samples: 50,
        ..LawcheckConfig::default()
    };
    print!("{}", run_lawcheck(&config));

    let broken = run_lawcheck_with(&config, &consume);
    println!("\nwithout the copy:");
    for r in broken.failures() {
        println!("{r}");
    }
}
