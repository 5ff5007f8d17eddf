pub mod calibration;
pub mod circuit;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod mesh;
pub mod optim;
pub mod randomness;
pub mod simulator;
pub mod verify;

pub use error::{Error, Result};
