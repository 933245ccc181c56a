pub mod error;
pub mod geom;
pub mod binsim;
pub mod heightmap;
pub mod primitives;

pub use error::{BinpickError, Result};
