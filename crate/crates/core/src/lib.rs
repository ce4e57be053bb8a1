pub mod approx;
pub mod error;
pub mod extension;
pub mod functionals;
pub mod grid;
pub mod harness;
pub mod io;
pub mod quasicube;
pub mod regular_set;
pub mod whitney;
