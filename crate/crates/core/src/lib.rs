//! Rényi mutual information of bipartite quantum states, the error exponents it
//! governs in correlation testing, and a finite-copy hypothesis-testing lab.

pub mod classical;
pub mod divergences;
pub mod exponents;
pub mod error;
pub mod hyptest;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod random;
pub mod rmi;
pub mod state;
pub mod symmetry;

pub use error::{Error, Result};
