//! Commuting quantum Hamiltonians of Gaudin models with an irregular
//! singularity at infinity, their classical shift-of-argument
//! counterparts, a numerical Bethe Ansatz solver, and the oper-side
//! description of the spectrum (canonical forms, residues, Miura
//! transformation, monodromy).

pub mod error;
pub mod rational;
pub mod linalg;
pub mod mpoly;
pub mod ratfun;
pub mod liealg;
pub mod repr;
pub mod classical;
pub mod hamiltonians;
pub mod bethe;
pub mod opers;
pub mod config;
pub mod pipeline;

pub use error::{GaudinError, Result};
