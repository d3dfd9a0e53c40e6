//! Quasi-Poisson and quasi-Hamiltonian structures on compact matrix Lie
//! groups, their deformation families, implosion strata, quiver moduli and a
//! 2D cobordism calculus with a dimension functor.

pub mod cli;
pub mod cob;
pub mod config;
pub mod deformation;
pub mod error;
pub mod implosion;
pub mod lie;
pub mod multivector;
pub mod numerics;
pub mod qp;
pub mod quiver;
pub mod rng;
pub mod suite;

pub use error::{QhamError, Result};
