pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod merge;
pub mod pipeline;
pub mod ppmi;
pub mod retrofit;
pub mod toy;

pub use error::{Error, Result};
