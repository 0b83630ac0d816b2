//! Period-doubling renormalization of dissipative Hénon-like maps in two and
//! three dimensions.

pub mod cantor;
pub mod error;
pub mod funcspace;
pub mod geometry;
pub mod maps;
pub mod renorm;
pub mod stats;
pub mod surfaces;
pub mod universality;

pub use error::{Error, Result};
pub use funcspace::{Field, Interval};
