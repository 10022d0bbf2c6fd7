pub mod data;
pub mod datagen;
pub mod dists;
pub mod dlm;
pub mod error;
pub mod gck;
pub mod io;
pub mod linalg;
pub mod prior;
pub mod regime;
pub mod run;
pub mod sampler;

pub use error::{Error, Result};
