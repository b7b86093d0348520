//! Drivers behind the `cokl-gcnn` binary, usable directly as a library.

pub mod demo;
pub mod gradcheck;
pub mod laws;
pub mod report;
pub mod train;

pub use demo::run_demo_generate;
pub use gradcheck::{run_gradcheck, GradcheckConfig};
pub use laws::{run_lawcheck, run_lawcheck_with, LawcheckConfig};
pub use report::{LawRecord, LawReport};
pub use train::{parse_matrix_file, run_train, RunConfig, TrainOutcome};
