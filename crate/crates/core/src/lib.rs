pub mod cli;
pub mod config;
pub mod dpw;
pub mod dualize;
pub mod error;
pub mod frame;
pub mod grid;
pub mod io;
pub mod loopalg;
pub mod nil3;
pub mod spinor;
pub mod symmap;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
