pub mod ccr;
pub mod certify;
pub mod dynamics;
pub mod fock;
pub mod generator;
pub mod linalg;
pub mod sobolev;

pub use num_complex::Complex64;
