//! Trains the bundled two-community demo and prints the loss curve.

use std::path::Path;

use cokl_gcnn::cli::{run_train, RunConfig};

fn main() -> cokl_gcnn::Result<()> {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo/demo.cfg");
    let mut config = RunConfig::load(&cfg)?;
    config.out = None;
    let outcome = run_train(&config)?;
    for (step, loss) in outcome.trace.iter().enumerate().step_by(30) {
        println!("{step:>4}  {loss:.6}");
    }
    println!(
        "final {:.6}  accuracy {}/{}",
        outcome.final_loss, outcome.correct, outcome.total
    );
    println!("predictions =\n{}", outcome.predictions.to_text());
    Ok(())
}
