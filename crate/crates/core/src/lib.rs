pub mod attack;
pub mod automata;
pub mod error;
pub mod io;
pub mod preserving;
pub mod synthesis;
pub mod verify;

pub use error::{ModelError, Result};
