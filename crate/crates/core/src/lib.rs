pub mod analysis;
pub mod bch;
pub mod bicm;
pub mod encoder;
pub mod error;
pub mod kyber_pke;
pub mod lattice;
pub mod ring;
pub mod simulate;

pub use error::{Error, Result};
