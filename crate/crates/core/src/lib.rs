pub mod cli;
pub mod cokleisli;
pub mod error;
pub mod gcnn;
pub mod lens;
pub mod para;
pub mod seed;
pub mod smooth;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Object, Shape, Tensor};
